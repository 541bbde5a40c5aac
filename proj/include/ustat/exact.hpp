#pragma once

#include <cstdint>
#include <optional>

#include "ustat/generate.hpp"
#include "ustat/instance.hpp"

namespace ustat {

struct EnumOptions {
    std::uint64_t cap = 10'000'000; // configuration budget
    int threads = 1;
};

enum class MomentKind { Raw, Absolute };

/// Number of joint atom configurations behind exact_distribution.
std::uint64_t config_count(const UStatInstance& inst);
std::uint64_t chaos_config_count(const UStatInstance& inst);

/// Exact law of U = Σ_i h_i(...) by full enumeration.  Deterministic for
/// any thread count (fixed chunking, fixed merge order).
FiniteDistribution exact_distribution(const UStatInstance& inst, const EnumOptions& opts = {});

/// E U^p (raw; p must be a nonneg-support or integer situation) or E|U|^p.
double moment(const FiniteDistribution& dist, double p, MomentKind kind);

/// Mixed conditional moments indexed by a coordinate subset J:
///   mixed_moment      Σ_{i_J} E_J ( Σ_{i_{J^c}} E_{J^c} h_i )^p
///   max_mixed_moment  E_J max_{i_J} ( Σ_{i_{J^c}} E_{J^c} h_i )^p
///   lr_mixed_moment   E_J max_{i_J} ( E_{J^c} ( Σ_{i_{J^c}} h_i )^r )^{p/r}
/// E_J integrates the |J| variables attached to the fixed i_J; the max and
/// lr forms integrate the joint law of all coordinate-J slot variables.
/// With `absolute`, inner conditional sums enter through |·|^p; without it a
/// negative inner sum combined with non-integer p raises an error.
double mixed_moment(const UStatInstance& inst, IndexSubset J, double p, bool absolute = false);
double max_mixed_moment(const UStatInstance& inst, IndexSubset J, double p, bool absolute = false);
double lr_mixed_moment(const UStatInstance& inst, IndexSubset J, double p, double r);

/// Law and absolute moments of the coordinate-randomized sum
/// Σ_i ε^{(1)}_{i_1}···ε^{(m)}_{i_m} h_i (one ε sequence when undecoupled).
FiniteDistribution chaos_distribution(const UStatInstance& inst, const EnumOptions& opts = {});
double chaos_moment(const UStatInstance& inst, double p, const EnumOptions& opts = {});

/// Exact law and moments of S = sup_{f} Σ_i f_i(Z_i) for a finite class of
/// centered score tables, plus the variance/envelope parameters used by the
/// bounded-empirical-process checks.
struct EmpiricalSummary {
    double moment_p = 0.0;        // E|S|^p
    double mean_abs = 0.0;        // E|S|
    double sigma_sq = 0.0;        // sup_f Σ_i E f_i(Z_i)²
    double envelope_moment = 0.0; // E max_i sup_f |f_i(Z_i)|^p
    FiniteDistribution law;       // law of the signed supremum S
    double a_sup = 0.0;           // max_i sup_f ‖f_i‖_∞
};
/// Errors when some class member is not centered (|E f_i(Z_i)| > 1e-10) or
/// p < 1.
EmpiricalSummary empirical_sup_moment(const ScoreClass& sc, double p,
                                      const EnumOptions& opts = {});
/// E max_i sup_f |f_i(Z_i)|^p
double empirical_envelope_moment(const ScoreClass& sc, double p);

} // namespace ustat
