#pragma once

#include <lnared/common.hpp>

#include <memory>
#include <string>
#include <vector>

namespace lnared {

/// Immutable arithmetic expression over species and parameters of a reaction
/// network. Species and parameter references are resolved to indices when the
/// owning network is validated, so evaluation is a plain tree walk against a
/// state vector and a parameter-value vector.
///
/// Power exponents are constants; this keeps symbolic differentiation closed
/// over the node set.
class Expr {
 public:
  enum class Kind {
    Number,
    Parameter,
    Species,
    Negate,
    Add,
    Subtract,
    Multiply,
    Divide,
    Power,
    Sqrt,
  };

  /// Default-constructed expressions are empty placeholders; assign before
  /// use.
  Expr() = default;

  static Expr number(double value);
  static Expr parameter(std::string name, Index index);
  static Expr species(std::string name, Index index);
  // The binary/unary factories fold constants and strip arithmetic
  // identities (x+0, 1*x, x^1, ...), so derivative trees stay small.
  static Expr negate(Expr operand);
  static Expr add(Expr lhs, Expr rhs);
  static Expr subtract(Expr lhs, Expr rhs);
  static Expr multiply(Expr lhs, Expr rhs);
  static Expr divide(Expr lhs, Expr rhs);
  static Expr power(Expr base, double exponent);
  static Expr sqrt(Expr operand);

  Kind kind() const;
  double number_value() const;  // Kind::Number
  double exponent() const;      // Kind::Power
  const std::string& name() const;  // Parameter/Species
  Index ref_index() const;          // Parameter/Species
  const Expr& child(int i) const;
  int child_count() const;

  double eval(const Vector& species_values, const Vector& param_values) const;
  Expr derivative(Index species_index) const;
  Expr remap_species(const std::vector<Index>& new_index_of_old) const;

  bool is_number() const;
  bool is_number(double value) const;
  bool depends_on_species() const;

  /// Precedence-aware printing; parses back to the identical tree.
  std::string str() const;

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

}  // namespace lnared
