#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ustat/instance.hpp"

namespace ustat {

/// Seeded instance families.  Same (family, m, n, atoms, seed) -> identical
/// instance, bit for bit; all draws go through a fixed engine/mapping.
///
///   nonneg                : kernel entries uniform [0,1), generic laws
///   canonical             : uniform (-1,1) kernels, degeneracy projected out
///   symmetric-undecoupled : one sequence of laws, symmetric zero-diagonal
///   gaussian-chaos-analog : ±1 variables, h_{ij} = c_{ij} x y (m = 2)
///   bernoulli-product     : centered Bernoulli(1/n) product kernel (m = 2)
UStatInstance generate_instance(const std::string& family, int m, int n, int atoms,
                                std::uint64_t seed);

/// A finite class of centered score functions over independent variables:
/// S = sup_{f in F} |Σ_i f_i(Z_i)| style suprema are computed from this.
struct ScoreClass {
    std::string id;
    std::vector<DiscreteDistribution> vars;            // laws of Z_1..Z_k
    std::vector<std::vector<std::vector<double>>> scores; // [f][i][atom]

    int k() const { return static_cast<int>(vars.size()); }
    int size() const { return static_cast<int>(scores.size()); }
};

/// Random class with k binary variables and class_size centered scores.
ScoreClass generate_score_class(int k, int class_size, std::uint64_t seed);

/// Random generic law (no near-degenerate masses): atom values uniform in
/// (lo, hi) separated by at least 0.05·(hi-lo), probabilities bounded away
/// from 0.
DiscreteDistribution random_law(int atoms, double lo, double hi, std::uint64_t seed);

} // namespace ustat
