#include <lnared/expr.hpp>

#include <cmath>
#include <utility>

namespace lnared {

struct Expr::Node {
  Kind kind;
  double value = 0.0;  // Number payload, or Power exponent
  std::string name;
  Index index = -1;
  Expr children[2];
  int n_children = 0;
};

namespace {

double checked_pow(double base, double exponent) {
  const double v = std::pow(base, exponent);
  if (!std::isfinite(v)) {
    throw NumericalError("power " + format_double(base) + "^" +
                         format_double(exponent) + " is not finite");
  }
  return v;
}

}  // namespace

Expr Expr::number(double value) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Number;
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::parameter(std::string name, Index index) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Parameter;
  n->name = std::move(name);
  n->index = index;
  return Expr(std::move(n));
}

Expr Expr::species(std::string name, Index index) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Species;
  n->name = std::move(name);
  n->index = index;
  return Expr(std::move(n));
}

Expr Expr::negate(Expr operand) {
  if (operand.is_number()) return number(-operand.number_value());
  if (operand.kind() == Kind::Negate) return operand.child(0);
  auto n = std::make_shared<Node>();
  n->kind = Kind::Negate;
  n->children[0] = std::move(operand);
  n->n_children = 1;
  return Expr(std::move(n));
}

Expr Expr::add(Expr lhs, Expr rhs) {
  if (lhs.is_number() && rhs.is_number())
    return number(lhs.number_value() + rhs.number_value());
  if (lhs.is_number(0.0)) return rhs;
  if (rhs.is_number(0.0)) return lhs;
  auto n = std::make_shared<Node>();
  n->kind = Kind::Add;
  n->children[0] = std::move(lhs);
  n->children[1] = std::move(rhs);
  n->n_children = 2;
  return Expr(std::move(n));
}

Expr Expr::subtract(Expr lhs, Expr rhs) {
  if (lhs.is_number() && rhs.is_number())
    return number(lhs.number_value() - rhs.number_value());
  if (rhs.is_number(0.0)) return lhs;
  if (lhs.is_number(0.0)) return negate(std::move(rhs));
  auto n = std::make_shared<Node>();
  n->kind = Kind::Subtract;
  n->children[0] = std::move(lhs);
  n->children[1] = std::move(rhs);
  n->n_children = 2;
  return Expr(std::move(n));
}

Expr Expr::multiply(Expr lhs, Expr rhs) {
  if (lhs.is_number() && rhs.is_number())
    return number(lhs.number_value() * rhs.number_value());
  if (lhs.is_number(0.0) || rhs.is_number(0.0)) return number(0.0);
  if (lhs.is_number(1.0)) return rhs;
  if (rhs.is_number(1.0)) return lhs;
  auto n = std::make_shared<Node>();
  n->kind = Kind::Multiply;
  n->children[0] = std::move(lhs);
  n->children[1] = std::move(rhs);
  n->n_children = 2;
  return Expr(std::move(n));
}

Expr Expr::divide(Expr lhs, Expr rhs) {
  if (lhs.is_number() && rhs.is_number() && rhs.number_value() != 0.0)
    return number(lhs.number_value() / rhs.number_value());
  if (lhs.is_number(0.0)) return number(0.0);
  if (rhs.is_number(1.0)) return lhs;
  auto n = std::make_shared<Node>();
  n->kind = Kind::Divide;
  n->children[0] = std::move(lhs);
  n->children[1] = std::move(rhs);
  n->n_children = 2;
  return Expr(std::move(n));
}

Expr Expr::power(Expr base, double exponent) {
  if (exponent == 1.0) return base;
  if (exponent == 0.0) return number(1.0);
  if (base.is_number()) return number(checked_pow(base.number_value(), exponent));
  auto n = std::make_shared<Node>();
  n->kind = Kind::Power;
  n->value = exponent;
  n->children[0] = std::move(base);
  n->n_children = 1;
  return Expr(std::move(n));
}

Expr Expr::sqrt(Expr operand) {
  if (operand.is_number()) {
    const double v = operand.number_value();
    if (v < 0.0)
      throw NumericalError("sqrt of negative constant " + format_double(v));
    return number(std::sqrt(v));
  }
  auto n = std::make_shared<Node>();
  n->kind = Kind::Sqrt;
  n->children[0] = std::move(operand);
  n->n_children = 1;
  return Expr(std::move(n));
}

Expr::Kind Expr::kind() const {
  if (!node_) throw DomainError("use of an empty expression");
  return node_->kind;
}
double Expr::number_value() const { return node_->value; }
double Expr::exponent() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }
Index Expr::ref_index() const { return node_->index; }
const Expr& Expr::child(int i) const { return node_->children[i]; }
int Expr::child_count() const { return node_->n_children; }

bool Expr::is_number() const { return kind() == Kind::Number; }
bool Expr::is_number(double value) const {
  return is_number() && node_->value == value;
}

bool Expr::depends_on_species() const {
  if (kind() == Kind::Species) return true;
  for (int i = 0; i < child_count(); ++i)
    if (child(i).depends_on_species()) return true;
  return false;
}

double Expr::eval(const Vector& species_values,
                  const Vector& param_values) const {
  switch (kind()) {
    case Kind::Number:
      return node_->value;
    case Kind::Parameter:
      return param_values[node_->index];
    case Kind::Species:
      return species_values[node_->index];
    case Kind::Negate:
      return -child(0).eval(species_values, param_values);
    case Kind::Add:
      return child(0).eval(species_values, param_values) +
             child(1).eval(species_values, param_values);
    case Kind::Subtract:
      return child(0).eval(species_values, param_values) -
             child(1).eval(species_values, param_values);
    case Kind::Multiply:
      return child(0).eval(species_values, param_values) *
             child(1).eval(species_values, param_values);
    case Kind::Divide: {
      const double den = child(1).eval(species_values, param_values);
      if (den == 0.0) throw NumericalError("division by zero");
      return child(0).eval(species_values, param_values) / den;
    }
    case Kind::Power: {
      const double base = child(0).eval(species_values, param_values);
      return checked_pow(base, node_->value);
    }
    case Kind::Sqrt: {
      const double arg = child(0).eval(species_values, param_values);
      if (arg < 0.0)
        throw NumericalError("sqrt of negative value " + format_double(arg));
      return std::sqrt(arg);
    }
  }
  throw NumericalError("corrupt expression node");
}

Expr Expr::derivative(Index species_index) const {
  switch (kind()) {
    case Kind::Number:
    case Kind::Parameter:
      return number(0.0);
    case Kind::Species:
      return number(node_->index == species_index ? 1.0 : 0.0);
    case Kind::Negate:
      return negate(child(0).derivative(species_index));
    case Kind::Add:
      return add(child(0).derivative(species_index),
                 child(1).derivative(species_index));
    case Kind::Subtract:
      return subtract(child(0).derivative(species_index),
                      child(1).derivative(species_index));
    case Kind::Multiply:
      return add(multiply(child(0).derivative(species_index), child(1)),
                 multiply(child(0), child(1).derivative(species_index)));
    case Kind::Divide:
      // (u'v - uv') / v^2
      return divide(
          subtract(multiply(child(0).derivative(species_index), child(1)),
                   multiply(child(0), child(1).derivative(species_index))),
          power(child(1), 2.0));
    case Kind::Power: {
      // c * u^(c-1) * u'
      const double c = node_->value;
      return multiply(multiply(number(c), power(child(0), c - 1.0)),
                      child(0).derivative(species_index));
    }
    case Kind::Sqrt:
      // u' / (2 sqrt(u))
      return divide(child(0).derivative(species_index),
                    multiply(number(2.0), sqrt(child(0))));
  }
  throw NumericalError("corrupt expression node");
}

Expr Expr::remap_species(const std::vector<Index>& new_index_of_old) const {
  switch (kind()) {
    case Kind::Number:
    case Kind::Parameter:
      return *this;
    case Kind::Species:
      return species(node_->name, new_index_of_old.at(node_->index));
    case Kind::Negate:
      return negate(child(0).remap_species(new_index_of_old));
    case Kind::Add:
      return add(child(0).remap_species(new_index_of_old),
                 child(1).remap_species(new_index_of_old));
    case Kind::Subtract:
      return subtract(child(0).remap_species(new_index_of_old),
                      child(1).remap_species(new_index_of_old));
    case Kind::Multiply:
      return multiply(child(0).remap_species(new_index_of_old),
                      child(1).remap_species(new_index_of_old));
    case Kind::Divide:
      return divide(child(0).remap_species(new_index_of_old),
                    child(1).remap_species(new_index_of_old));
    case Kind::Power:
      return power(child(0).remap_species(new_index_of_old), node_->value);
    case Kind::Sqrt:
      return sqrt(child(0).remap_species(new_index_of_old));
  }
  throw NumericalError("corrupt expression node");
}

namespace {

// Precedence levels: additive 1, multiplicative 2, unary minus 3, power 4.
int precedence(Expr::Kind k) {
  switch (k) {
    case Expr::Kind::Add:
    case Expr::Kind::Subtract:
      return 1;
    case Expr::Kind::Multiply:
    case Expr::Kind::Divide:
      return 2;
    case Expr::Kind::Negate:
      return 3;
    case Expr::Kind::Power:
      return 4;
    default:
      return 5;
  }
}

void print(const Expr& e, std::string& out, int parent_prec, bool rhs_of_same) {
  const int prec = precedence(e.kind());
  const bool parens = prec < parent_prec || (prec == parent_prec && rhs_of_same);
  if (parens) out += '(';
  switch (e.kind()) {
    case Expr::Kind::Number: {
      const double v = e.number_value();
      if (v < 0.0) {
        out += '(';
        out += format_double(v);
        out += ')';
      } else {
        out += format_double(v);
      }
      break;
    }
    case Expr::Kind::Parameter:
    case Expr::Kind::Species:
      out += e.name();
      break;
    case Expr::Kind::Negate:
      out += '-';
      print(e.child(0), out, precedence(Expr::Kind::Negate), true);
      break;
    case Expr::Kind::Add:
      print(e.child(0), out, 1, false);
      out += " + ";
      print(e.child(1), out, 1, true);
      break;
    case Expr::Kind::Subtract:
      print(e.child(0), out, 1, false);
      out += " - ";
      print(e.child(1), out, 1, true);
      break;
    case Expr::Kind::Multiply:
      print(e.child(0), out, 2, false);
      out += " * ";
      print(e.child(1), out, 2, true);
      break;
    case Expr::Kind::Divide:
      print(e.child(0), out, 2, false);
      out += " / ";
      print(e.child(1), out, 2, true);
      break;
    case Expr::Kind::Power: {
      print(e.child(0), out, 5, false);  // base parenthesized unless atomic
      out += '^';
      const double c = e.exponent();
      if (c < 0.0) {
        out += '(';
        out += format_double(c);
        out += ')';
      } else {
        out += format_double(c);
      }
      break;
    }
    case Expr::Kind::Sqrt:
      out += "sqrt(";
      print(e.child(0), out, 0, false);
      out += ')';
      break;
  }
  if (parens) out += ')';
}

}  // namespace

std::string Expr::str() const {
  std::string out;
  print(*this, out, 0, false);
  return out;
}

}  // namespace lnared
