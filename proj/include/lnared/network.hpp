#pragma once

#include <lnared/expr.hpp>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lnared {

struct SpeciesInfo {
  std::string name;
  double initial = 0.0;  // concentration at t = 0
};

struct ReactionTerm {
  Index species = -1;
  long long coeff = 1;  // positive integer
};

struct Reaction {
  std::string name;
  std::vector<ReactionTerm> reactants;
  std::vector<ReactionTerm> products;
  Expr rate;  // macroscopic rate, concentration units per time
};

/// A validated reaction network. Immutable after construction; safe to share
/// across threads. The stoichiometry matrix S (species x reactions) and the
/// symbolic rate Jacobian df/dx are assembled once at construction.
class ReactionNetwork {
 public:
  ReactionNetwork(std::vector<SpeciesInfo> species,
                  std::vector<std::string> parameter_names,
                  Vector parameter_values, std::vector<Reaction> reactions,
                  double volume, std::vector<Index> outputs);

  Index species_count() const { return static_cast<Index>(species_.size()); }
  Index reaction_count() const { return static_cast<Index>(reactions_.size()); }
  const std::vector<SpeciesInfo>& species() const { return species_; }
  const std::vector<std::string>& parameter_names() const {
    return parameter_names_;
  }
  const Vector& parameter_values() const { return parameter_values_; }
  const std::vector<Reaction>& reactions() const { return reactions_; }
  double volume() const { return volume_; }
  const std::vector<Index>& outputs() const { return outputs_; }
  const Matrix& stoichiometry() const { return stoich_; }
  Vector initial_state() const;
  std::vector<std::string> species_names() const;

  Index species_index(std::string_view name) const;  // throws DomainError
  bool has_species(std::string_view name) const;

  /// f(x): one entry per reaction. Evaluation faults (division by zero,
  /// negative sqrt, non-finite results) are reported with the reaction name.
  Vector eval_rates(const Vector& x) const;

  /// df/dx evaluated at x, reaction_count x species_count.
  Matrix rate_jacobian_at(const Vector& x) const;

  /// Symbolic df/dx; entry [r][s] differentiates reaction r by species s.
  const std::vector<std::vector<Expr>>& rate_jacobian() const {
    return jacobian_;
  }

  ReactionNetwork with_volume(double volume) const;
  ReactionNetwork with_initial_state(const Vector& x0) const;

 private:
  std::vector<SpeciesInfo> species_;
  std::vector<std::string> parameter_names_;
  Vector parameter_values_;
  std::vector<Reaction> reactions_;
  double volume_;
  std::vector<Index> outputs_;
  Matrix stoich_;
  std::vector<std::vector<Expr>> jacobian_;

  void validate_and_assemble();
};

/// Reindexes species so that new position i holds old species perm[i].
/// Initial state, stoichiometry rows, outputs and rate expressions move
/// consistently; rate semantics are unchanged.
ReactionNetwork permute_species(const ReactionNetwork& net,
                                std::span<const Index> perm);

/// A network observed through an invertible linear change of state m = T x.
/// Carries exact transformed stoichiometry T*S and rates f(T^-1 m); not a
/// ReactionNetwork because T*S need not have integer entries.
class TransformedNetwork {
 public:
  TransformedNetwork(ReactionNetwork base, Matrix transform);

  const ReactionNetwork& base() const { return base_; }
  const Matrix& transform() const { return transform_; }
  const Matrix& inverse_transform() const { return inverse_; }
  const Matrix& stoichiometry() const { return stoich_; }
  double condition_number() const { return condition_; }

  Vector initial_state() const;                     // T x0
  Vector eval_rates(const Vector& m) const;         // f(T^-1 m)
  Vector macroscopic_rhs(const Vector& m) const;    // T S f(T^-1 m)
  Matrix jacobian(const Vector& m) const;           // T J(T^-1 m) T^-1

 private:
  ReactionNetwork base_;
  Matrix transform_, inverse_, stoich_;
  double condition_;
};

TransformedNetwork transform_network(const ReactionNetwork& net,
                                     const Matrix& transform);

/// Composition: observing m = T1 x through a further m2 = T2 m gives the
/// base network under T2 T1.
TransformedNetwork transform_network(const TransformedNetwork& net,
                                     const Matrix& transform);

}  // namespace lnared
