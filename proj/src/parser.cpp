#include <lnared/parser.hpp>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <utility>

namespace lnared {

namespace {

struct Token {
  enum class Kind {
    Ident,
    Number,
    Equals,
    Colon,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Arrow,
    At,
    End,
  };
  Kind kind;
  std::string text;
  double value = 0.0;
  int line = 0, col = 0;
};

class Lexer {
 public:
  Lexer(std::string_view line, int line_no) : s_(line), line_no_(line_no) {
    advance();
  }

  const Token& peek() const { return tok_; }
  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    tok_.line = line_no_;
    tok_.col = static_cast<int>(pos_) + 1;
    if (pos_ >= s_.size() || s_[pos_] == '#') {
      tok_.kind = Token::Kind::End;
      tok_.text = "<end of line>";
      return;
    }
    const char c = s_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
              s_[pos_] == '_'))
        ++pos_;
      tok_.kind = Token::Kind::Ident;
      tok_.text = std::string(s_.substr(start, pos_ - start));
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos_ + 1 < s_.size() &&
         std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])))) {
      size_t start = pos_;
      while (pos_ < s_.size() &&
             std::isdigit(static_cast<unsigned char>(s_[pos_])))
        ++pos_;
      if (pos_ < s_.size() && s_[pos_] == '.') {
        ++pos_;
        while (pos_ < s_.size() &&
               std::isdigit(static_cast<unsigned char>(s_[pos_])))
          ++pos_;
      }
      if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
        size_t mark = pos_;
        ++pos_;
        if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
        if (pos_ < s_.size() &&
            std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
          while (pos_ < s_.size() &&
                 std::isdigit(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
        } else {
          pos_ = mark;  // bare 'e' belongs to the next token
        }
      }
      tok_.kind = Token::Kind::Number;
      tok_.text = std::string(s_.substr(start, pos_ - start));
      tok_.value = std::strtod(tok_.text.c_str(), nullptr);
      return;
    }
    if (c == '-' && pos_ + 1 < s_.size() && s_[pos_ + 1] == '>') {
      tok_.kind = Token::Kind::Arrow;
      tok_.text = "->";
      pos_ += 2;
      return;
    }
    ++pos_;
    tok_.text = std::string(1, c);
    switch (c) {
      case '=': tok_.kind = Token::Kind::Equals; return;
      case ':': tok_.kind = Token::Kind::Colon; return;
      case '+': tok_.kind = Token::Kind::Plus; return;
      case '-': tok_.kind = Token::Kind::Minus; return;
      case '*': tok_.kind = Token::Kind::Star; return;
      case '/': tok_.kind = Token::Kind::Slash; return;
      case '^': tok_.kind = Token::Kind::Caret; return;
      case '(': tok_.kind = Token::Kind::LParen; return;
      case ')': tok_.kind = Token::Kind::RParen; return;
      case '@': tok_.kind = Token::Kind::At; return;
      default:
        throw ParseError("unexpected character '" + tok_.text + "'", line_no_,
                         tok_.col);
    }
  }

  std::string_view s_;
  int line_no_;
  size_t pos_ = 0;
  Token tok_;
};

[[noreturn]] void fail(const Token& t, const std::string& msg) {
  throw ParseError(msg + " (got '" + t.text + "')", t.line, t.col);
}

Token expect(Lexer& lex, Token::Kind kind, const std::string& what) {
  if (lex.peek().kind != kind) fail(lex.peek(), "expected " + what);
  return lex.next();
}

// Raw expression tree carrying unresolved names; resolved against the symbol
// table after all declarations are read.
struct RawExpr {
  Expr::Kind kind;
  double value = 0.0;
  std::string name;
  int line = 0, col = 0;
  std::vector<RawExpr> children;
};

RawExpr parse_expr(Lexer& lex);

RawExpr parse_atom(Lexer& lex) {
  const Token& t = lex.peek();
  switch (t.kind) {
    case Token::Kind::Number: {
      Token num = lex.next();
      return RawExpr{Expr::Kind::Number, num.value, "", num.line, num.col, {}};
    }
    case Token::Kind::Ident: {
      Token id = lex.next();
      if (id.text == "sqrt" && lex.peek().kind == Token::Kind::LParen) {
        lex.next();
        RawExpr arg = parse_expr(lex);
        expect(lex, Token::Kind::RParen, "')'");
        return RawExpr{Expr::Kind::Sqrt, 0.0, "", id.line, id.col, {arg}};
      }
      // Species/Parameter distinction resolved later; Parameter is a
      // placeholder for "name reference".
      return RawExpr{Expr::Kind::Parameter, 0.0, id.text, id.line, id.col, {}};
    }
    case Token::Kind::LParen: {
      lex.next();
      RawExpr inner = parse_expr(lex);
      expect(lex, Token::Kind::RParen, "')'");
      return inner;
    }
    default:
      fail(t, "expected a number, name or '('");
  }
}

RawExpr parse_unary(Lexer& lex) {
  if (lex.peek().kind == Token::Kind::Minus) {
    Token m = lex.next();
    RawExpr operand = parse_unary(lex);
    return RawExpr{Expr::Kind::Negate, 0.0, "", m.line, m.col, {operand}};
  }
  RawExpr base = parse_atom(lex);
  if (lex.peek().kind == Token::Kind::Caret) {
    Token caret = lex.next();
    // Exponent: a constant, optionally signed or parenthesized.
    bool neg = false;
    while (lex.peek().kind == Token::Kind::Minus) {
      lex.next();
      neg = !neg;
    }
    double exp_value;
    if (lex.peek().kind == Token::Kind::Number) {
      exp_value = lex.next().value;
    } else if (lex.peek().kind == Token::Kind::LParen) {
      lex.next();
      RawExpr inner = parse_expr(lex);
      expect(lex, Token::Kind::RParen, "')'");
      // Must fold to a constant without any name references.
      std::vector<const RawExpr*> stack{&inner};
      while (!stack.empty()) {
        const RawExpr* e = stack.back();
        stack.pop_back();
        if (e->kind == Expr::Kind::Parameter)
          throw ParseError("power exponent must be constant", caret.line,
                           caret.col);
        for (const auto& c : e->children) stack.push_back(&c);
      }
      // Fold numerically.
      struct Folder {
        static double fold(const RawExpr& e) {
          switch (e.kind) {
            case Expr::Kind::Number: return e.value;
            case Expr::Kind::Negate: return -fold(e.children[0]);
            case Expr::Kind::Add:
              return fold(e.children[0]) + fold(e.children[1]);
            case Expr::Kind::Subtract:
              return fold(e.children[0]) - fold(e.children[1]);
            case Expr::Kind::Multiply:
              return fold(e.children[0]) * fold(e.children[1]);
            case Expr::Kind::Divide:
              return fold(e.children[0]) / fold(e.children[1]);
            case Expr::Kind::Power:
              return std::pow(fold(e.children[0]), e.value);
            case Expr::Kind::Sqrt: return std::sqrt(fold(e.children[0]));
            default: return std::nan("");
          }
        }
      };
      exp_value = Folder::fold(inner);
      if (!std::isfinite(exp_value))
        throw ParseError("power exponent does not fold to a finite constant",
                         caret.line, caret.col);
    } else {
      fail(lex.peek(), "expected a constant exponent after '^'");
    }
    if (neg) exp_value = -exp_value;
    return RawExpr{
        Expr::Kind::Power, exp_value, "", caret.line, caret.col, {base}};
  }
  return base;
}

RawExpr parse_term(Lexer& lex) {
  RawExpr lhs = parse_unary(lex);
  while (lex.peek().kind == Token::Kind::Star ||
         lex.peek().kind == Token::Kind::Slash) {
    Token op = lex.next();
    RawExpr rhs = parse_unary(lex);
    lhs = RawExpr{op.kind == Token::Kind::Star ? Expr::Kind::Multiply
                                               : Expr::Kind::Divide,
                  0.0,
                  "",
                  op.line,
                  op.col,
                  {lhs, rhs}};
  }
  return lhs;
}

RawExpr parse_expr(Lexer& lex) {
  RawExpr lhs = parse_term(lex);
  while (lex.peek().kind == Token::Kind::Plus ||
         lex.peek().kind == Token::Kind::Minus) {
    Token op = lex.next();
    RawExpr rhs = parse_term(lex);
    lhs = RawExpr{op.kind == Token::Kind::Plus ? Expr::Kind::Add
                                               : Expr::Kind::Subtract,
                  0.0,
                  "",
                  op.line,
                  op.col,
                  {lhs, rhs}};
  }
  return lhs;
}

struct RawTerm {
  long long coeff;
  std::string species;
  int line, col;
};

std::vector<RawTerm> parse_side(Lexer& lex) {
  std::vector<RawTerm> terms;
  if (lex.peek().kind == Token::Kind::Arrow ||
      lex.peek().kind == Token::Kind::At)
    return terms;  // empty side
  for (;;) {
    long long coeff = 1;
    Token t = lex.peek();
    if (t.kind == Token::Kind::Number) {
      Token num = lex.next();
      double c = num.value;
      if (c <= 0.0 || c != std::floor(c))
        throw ParseError("stoichiometric coefficient must be a positive "
                         "integer",
                         num.line, num.col);
      coeff = static_cast<long long>(c);
    }
    Token id = expect(lex, Token::Kind::Ident, "a species name");
    terms.push_back(RawTerm{coeff, id.text, id.line, id.col});
    if (lex.peek().kind == Token::Kind::Plus) {
      lex.next();
      continue;
    }
    break;
  }
  return terms;
}

struct RawReaction {
  std::string name;
  std::vector<RawTerm> reactants, products;
  RawExpr rate;
  int line;
};

struct SymbolTable {
  std::map<std::string, Index> species;
  std::map<std::string, Index> params;
};

Expr resolve(const RawExpr& raw, const SymbolTable& sym) {
  switch (raw.kind) {
    case Expr::Kind::Number:
      return Expr::number(raw.value);
    case Expr::Kind::Parameter: {
      auto sit = sym.species.find(raw.name);
      if (sit != sym.species.end())
        return Expr::species(raw.name, sit->second);
      auto pit = sym.params.find(raw.name);
      if (pit != sym.params.end())
        return Expr::parameter(raw.name, pit->second);
      throw ParseError("unknown symbol '" + raw.name + "'", raw.line, raw.col);
    }
    case Expr::Kind::Negate:
      return Expr::negate(resolve(raw.children[0], sym));
    case Expr::Kind::Add:
      return Expr::add(resolve(raw.children[0], sym),
                       resolve(raw.children[1], sym));
    case Expr::Kind::Subtract:
      return Expr::subtract(resolve(raw.children[0], sym),
                            resolve(raw.children[1], sym));
    case Expr::Kind::Multiply:
      return Expr::multiply(resolve(raw.children[0], sym),
                            resolve(raw.children[1], sym));
    case Expr::Kind::Divide:
      return Expr::divide(resolve(raw.children[0], sym),
                          resolve(raw.children[1], sym));
    case Expr::Kind::Power:
      return Expr::power(resolve(raw.children[0], sym), raw.value);
    case Expr::Kind::Sqrt:
      return Expr::sqrt(resolve(raw.children[0], sym));
    default:
      throw ParseError("malformed expression", raw.line, raw.col);
  }
}

}  // namespace

ReactionNetwork parse_network(std::string_view text) {
  std::vector<SpeciesInfo> species;
  std::vector<std::string> param_names;
  std::vector<double> param_values;
  std::vector<RawReaction> raw_reactions;
  std::vector<std::pair<std::string, std::pair<int, int>>> output_names;
  std::optional<double> volume;

  SymbolTable sym;

  int line_no = 0;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    std::string_view line = text.substr(
        start, end == std::string_view::npos ? std::string_view::npos
                                             : end - start);
    ++line_no;
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;

    Lexer lex(line, line_no);
    if (lex.peek().kind == Token::Kind::End) continue;
    Token head = expect(lex, Token::Kind::Ident, "a statement keyword");

    if (head.text == "species") {
      Token id = expect(lex, Token::Kind::Ident, "a species name");
      expect(lex, Token::Kind::Equals, "'='");
      bool neg = lex.peek().kind == Token::Kind::Minus;
      if (neg) lex.next();
      Token num = expect(lex, Token::Kind::Number, "an initial concentration");
      if (sym.species.count(id.text))
        throw ParseError("duplicate species '" + id.text + "'", id.line,
                         id.col);
      if (sym.params.count(id.text))
        throw ParseError("'" + id.text + "' is already a parameter", id.line,
                         id.col);
      sym.species[id.text] = static_cast<Index>(species.size());
      species.push_back({id.text, neg ? -num.value : num.value});
    } else if (head.text == "param") {
      Token id = expect(lex, Token::Kind::Ident, "a parameter name");
      expect(lex, Token::Kind::Equals, "'='");
      bool neg = lex.peek().kind == Token::Kind::Minus;
      if (neg) lex.next();
      Token num = expect(lex, Token::Kind::Number, "a value");
      if (sym.params.count(id.text))
        throw ParseError("duplicate parameter '" + id.text + "'", id.line,
                         id.col);
      if (sym.species.count(id.text))
        throw ParseError("'" + id.text + "' is already a species", id.line,
                         id.col);
      sym.params[id.text] = static_cast<Index>(param_names.size());
      param_names.push_back(id.text);
      param_values.push_back(neg ? -num.value : num.value);
    } else if (head.text == "volume") {
      expect(lex, Token::Kind::Equals, "'='");
      Token num = expect(lex, Token::Kind::Number, "a volume");
      if (volume.has_value())
        throw ParseError("volume declared twice", num.line, num.col);
      volume = num.value;
      if (*volume <= 0.0)
        throw ParseError("volume must be positive", num.line, num.col);
    } else if (head.text == "output") {
      while (lex.peek().kind == Token::Kind::Ident) {
        Token id = lex.next();
        output_names.push_back({id.text, {id.line, id.col}});
      }
      if (lex.peek().kind != Token::Kind::End)
        fail(lex.peek(), "expected species names");
    } else if (head.text == "reaction") {
      Token id = expect(lex, Token::Kind::Ident, "a reaction name");
      expect(lex, Token::Kind::Colon, "':'");
      RawReaction rx;
      rx.name = id.text;
      rx.line = id.line;
      rx.reactants = parse_side(lex);
      expect(lex, Token::Kind::Arrow, "'->'");
      rx.products = parse_side(lex);
      expect(lex, Token::Kind::At, "'@'");
      rx.rate = parse_expr(lex);
      if (lex.peek().kind != Token::Kind::End)
        fail(lex.peek(), "unexpected trailing input");
      raw_reactions.push_back(std::move(rx));
    } else {
      fail(head, "expected species/param/volume/output/reaction");
    }
    if (head.text != "reaction" && head.text != "output" &&
        lex.peek().kind != Token::Kind::End)
      fail(lex.peek(), "unexpected trailing input");
  }

  std::vector<Reaction> reactions;
  reactions.reserve(raw_reactions.size());
  for (auto& raw : raw_reactions) {
    Reaction rx;
    rx.name = raw.name;
    auto resolve_terms = [&](const std::vector<RawTerm>& in) {
      std::vector<ReactionTerm> out;
      for (const auto& t : in) {
        auto it = sym.species.find(t.species);
        if (it == sym.species.end())
          throw ParseError("unknown symbol '" + t.species + "'", t.line,
                           t.col);
        out.push_back(ReactionTerm{it->second, t.coeff});
      }
      return out;
    };
    rx.reactants = resolve_terms(raw.reactants);
    rx.products = resolve_terms(raw.products);
    rx.rate = resolve(raw.rate, sym);
    reactions.push_back(std::move(rx));
  }

  std::vector<Index> outputs;
  for (const auto& [name, pos] : output_names) {
    auto it = sym.species.find(name);
    if (it == sym.species.end())
      throw ParseError("unknown symbol '" + name + "'", pos.first, pos.second);
    outputs.push_back(it->second);
  }

  Vector params(param_values.size());
  for (size_t i = 0; i < param_values.size(); ++i) params[i] = param_values[i];

  try {
    return ReactionNetwork(std::move(species), std::move(param_names),
                           std::move(params), std::move(reactions),
                           volume.value_or(100.0), std::move(outputs));
  } catch (const NumericalError& e) {
    throw DomainError(e.what());
  }
}

ReactionNetwork parse_network_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open model file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_network(ss.str());
}

std::string serialize_network(const ReactionNetwork& net) {
  std::ostringstream out;
  for (const auto& sp : net.species())
    out << "species " << sp.name << " = " << format_double(sp.initial) << "\n";
  for (size_t i = 0; i < net.parameter_names().size(); ++i)
    out << "param " << net.parameter_names()[i] << " = "
        << format_double(net.parameter_values()[static_cast<Index>(i)])
        << "\n";
  out << "volume = " << format_double(net.volume()) << "\n";
  if (!net.outputs().empty()) {
    out << "output";
    for (Index o : net.outputs()) out << " " << net.species()[o].name;
    out << "\n";
  }
  for (const auto& rx : net.reactions()) {
    out << "reaction " << rx.name << ": ";
    auto side = [&](const std::vector<ReactionTerm>& terms) {
      std::string s;
      for (size_t i = 0; i < terms.size(); ++i) {
        if (i) s += " + ";
        if (terms[i].coeff != 1) s += std::to_string(terms[i].coeff) + " ";
        s += net.species()[terms[i].species].name;
      }
      return s;
    };
    out << side(rx.reactants) << (rx.reactants.empty() ? "" : " ") << "-> "
        << side(rx.products) << (rx.products.empty() ? "" : " ") << "@ "
        << rx.rate.str() << "\n";
  }
  return out.str();
}

}  // namespace lnared
