#pragma once

#include <lnared/network.hpp>

#include <string>
#include <string_view>

namespace lnared {

/// Parses the line-oriented network description language:
///
///   # comment
///   species <name> = <x0>
///   param <name> = <value>
///   volume = <value>
///   output <name> [<name> ...]
///   reaction <name>: [<coef> <species> [+ ...]] -> [...] @ <expr>
///
/// An empty reaction side denotes no reactants (or products); coefficients
/// default to 1. Expressions use + - * / ^ sqrt() ( ), parameter and species
/// names. Power exponents must be constant. When no volume line is present
/// the volume defaults to 100.
ReactionNetwork parse_network(std::string_view text);

ReactionNetwork parse_network_file(const std::string& path);

/// Emits DSL text that parses back to a network with identical stoichiometry,
/// parameter values and rate expressions.
std::string serialize_network(const ReactionNetwork& net);

}  // namespace lnared
