#include <lnared/network.hpp>

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <utility>

namespace lnared {

ReactionNetwork::ReactionNetwork(std::vector<SpeciesInfo> species,
                                 std::vector<std::string> parameter_names,
                                 Vector parameter_values,
                                 std::vector<Reaction> reactions, double volume,
                                 std::vector<Index> outputs)
    : species_(std::move(species)),
      parameter_names_(std::move(parameter_names)),
      parameter_values_(std::move(parameter_values)),
      reactions_(std::move(reactions)),
      volume_(volume),
      outputs_(std::move(outputs)) {
  validate_and_assemble();
}

void ReactionNetwork::validate_and_assemble() {
  if (species_.empty()) throw DomainError("network declares no species");
  if (volume_ <= 0.0)
    throw DomainError("volume must be positive, got " + format_double(volume_));

  std::set<std::string> seen;
  for (const auto& sp : species_) {
    if (!seen.insert(sp.name).second)
      throw DomainError("duplicate species '" + sp.name + "'");
  }

  const Index n = species_count();
  const Index m = reaction_count();
  stoich_ = Matrix::Zero(n, m);
  for (Index j = 0; j < m; ++j) {
    const Reaction& rx = reactions_[j];
    for (const auto& term : rx.reactants) {
      if (term.species < 0 || term.species >= n || term.coeff <= 0)
        throw DomainError("reaction '" + rx.name + "' has an invalid reactant");
      stoich_(term.species, j) -= static_cast<double>(term.coeff);
    }
    for (const auto& term : rx.products) {
      if (term.species < 0 || term.species >= n || term.coeff <= 0)
        throw DomainError("reaction '" + rx.name + "' has an invalid product");
      stoich_(term.species, j) += static_cast<double>(term.coeff);
    }
    if (stoich_.col(j).isZero(0.0))
      throw DomainError("reaction '" + rx.name +
                        "' has zero net stoichiometry");
  }

  for (Index o : outputs_) {
    if (o < 0 || o >= n) throw DomainError("output index out of range");
  }

  jacobian_.resize(m);
  for (Index j = 0; j < m; ++j) {
    jacobian_[j].resize(n);
    for (Index s = 0; s < n; ++s)
      jacobian_[j][s] = reactions_[j].rate.derivative(s);
  }

  // F = diag(sqrt f) downstream needs every channel nonnegative at x0.
  const Vector f0 = eval_rates(initial_state());
  for (Index j = 0; j < m; ++j) {
    if (!(f0[j] >= 0.0))
      throw DomainError("reaction '" + reactions_[j].name +
                        "' has negative rate " + format_double(f0[j]) +
                        " at the initial state");
  }
}

Vector ReactionNetwork::initial_state() const {
  Vector x0(species_count());
  for (Index i = 0; i < species_count(); ++i) x0[i] = species_[i].initial;
  return x0;
}

std::vector<std::string> ReactionNetwork::species_names() const {
  std::vector<std::string> names;
  names.reserve(species_.size());
  for (const auto& sp : species_) names.push_back(sp.name);
  return names;
}

Index ReactionNetwork::species_index(std::string_view name) const {
  for (Index i = 0; i < species_count(); ++i)
    if (species_[i].name == name) return i;
  throw DomainError("unknown species '" + std::string(name) + "'");
}

bool ReactionNetwork::has_species(std::string_view name) const {
  return std::any_of(species_.begin(), species_.end(),
                     [&](const SpeciesInfo& s) { return s.name == name; });
}

Vector ReactionNetwork::eval_rates(const Vector& x) const {
  if (x.size() != species_count())
    throw DomainError("state has " + std::to_string(x.size()) +
                      " entries, expected " + std::to_string(species_count()));
  Vector f(reaction_count());
  for (Index j = 0; j < reaction_count(); ++j) {
    try {
      f[j] = reactions_[j].rate.eval(x, parameter_values_);
    } catch (const NumericalError& e) {
      throw NumericalError("rate of reaction '" + reactions_[j].name +
                           "': " + e.what());
    }
    if (!std::isfinite(f[j]))
      throw NumericalError("rate of reaction '" + reactions_[j].name +
                           "' is not finite");
  }
  return f;
}

Matrix ReactionNetwork::rate_jacobian_at(const Vector& x) const {
  if (x.size() != species_count())
    throw DomainError("state dimension mismatch in rate_jacobian_at");
  Matrix dfdx(reaction_count(), species_count());
  for (Index j = 0; j < reaction_count(); ++j) {
    for (Index s = 0; s < species_count(); ++s) {
      try {
        dfdx(j, s) = jacobian_[j][s].eval(x, parameter_values_);
      } catch (const NumericalError& e) {
        throw NumericalError("d(rate '" + reactions_[j].name + "')/d(" +
                             species_[s].name + "): " + e.what());
      }
    }
  }
  return dfdx;
}

ReactionNetwork ReactionNetwork::with_volume(double volume) const {
  return ReactionNetwork(species_, parameter_names_, parameter_values_,
                         reactions_, volume, outputs_);
}

ReactionNetwork ReactionNetwork::with_initial_state(const Vector& x0) const {
  if (x0.size() != species_count())
    throw DomainError("initial state dimension mismatch");
  std::vector<SpeciesInfo> species = species_;
  for (Index i = 0; i < species_count(); ++i) species[i].initial = x0[i];
  return ReactionNetwork(std::move(species), parameter_names_,
                         parameter_values_, reactions_, volume_, outputs_);
}

ReactionNetwork permute_species(const ReactionNetwork& net,
                                std::span<const Index> perm) {
  const Index n = net.species_count();
  if (static_cast<Index>(perm.size()) != n)
    throw DomainError("permutation length mismatch");
  std::vector<bool> hit(n, false);
  for (Index p : perm) {
    if (p < 0 || p >= n || hit[p])
      throw DomainError("species permutation is not a bijection");
    hit[p] = true;
  }

  std::vector<Index> new_of_old(n);
  for (Index i = 0; i < n; ++i) new_of_old[perm[i]] = i;

  std::vector<SpeciesInfo> species(n);
  for (Index i = 0; i < n; ++i) species[i] = net.species()[perm[i]];

  std::vector<Reaction> reactions = net.reactions();
  for (auto& rx : reactions) {
    for (auto& t : rx.reactants) t.species = new_of_old[t.species];
    for (auto& t : rx.products) t.species = new_of_old[t.species];
    rx.rate = rx.rate.remap_species(new_of_old);
  }

  std::vector<Index> outputs;
  outputs.reserve(net.outputs().size());
  for (Index o : net.outputs()) outputs.push_back(new_of_old[o]);

  return ReactionNetwork(std::move(species), net.parameter_names(),
                         net.parameter_values(), std::move(reactions),
                         net.volume(), std::move(outputs));
}

TransformedNetwork::TransformedNetwork(ReactionNetwork base, Matrix transform)
    : base_(std::move(base)), transform_(std::move(transform)) {
  const Index n = base_.species_count();
  if (transform_.rows() != n || transform_.cols() != n)
    throw DomainError("transform must be " + std::to_string(n) + "x" +
                      std::to_string(n));
  Eigen::JacobiSVD<Matrix> svd(transform_,
                               Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  condition_ = smin > 0.0 ? smax / smin
                          : std::numeric_limits<double>::infinity();
  if (!(smin > 0.0) || condition_ > 1e12)
    throw DomainError("transform is numerically singular (condition number " +
                      format_double(condition_) + ")");
  inverse_ = transform_.inverse();
  stoich_ = transform_ * base_.stoichiometry();
}

Vector TransformedNetwork::initial_state() const {
  return transform_ * base_.initial_state();
}

Vector TransformedNetwork::eval_rates(const Vector& m) const {
  return base_.eval_rates(inverse_ * m);
}

Vector TransformedNetwork::macroscopic_rhs(const Vector& m) const {
  return stoich_ * eval_rates(m);
}

Matrix TransformedNetwork::jacobian(const Vector& m) const {
  const Vector x = inverse_ * m;
  return transform_ * base_.stoichiometry() * base_.rate_jacobian_at(x) *
         inverse_;
}

TransformedNetwork transform_network(const ReactionNetwork& net,
                                     const Matrix& transform) {
  return TransformedNetwork(net, transform);
}

TransformedNetwork transform_network(const TransformedNetwork& net,
                                     const Matrix& transform) {
  return TransformedNetwork(net.base(), transform * net.transform());
}

}  // namespace lnared
