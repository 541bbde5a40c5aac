#pragma once

#include <limits>
#include <vector>

#include "ustat/exact.hpp"
#include "ustat/instance.hpp"

namespace ustat {

/// Tail-bound parameters for second-order kernel arrays:
///   A  sup-norm of the kernels
///   B  max conditional second-moment sup (row/column sums)
///   C  total second moment, C² = Σ_{ij} E h²
///   D  L₂→L₂ operator norm of the kernel array
/// Invariant D <= C (operator norm below Frobenius norm of the same block
/// matrix).
struct BoundParams {
    double A = 0.0;
    double B = 0.0;
    double C = 0.0;
    double D = 0.0;
};

/// Parameters for a canonical m = 2 decoupled instance (degeneracy is part
/// of the parameters' meaning and is checked).  `centered` restricts the
/// operator norm to mean-zero test functions; for canonical kernels it
/// coincides with the plain norm.
BoundParams abcd_params(const UStatInstance& inst, bool centered = false);

/// Parameters via the single-kernel formulas: one completely degenerate
/// kernel table h over law×law, index range n.  A = ‖h‖_∞,
/// B² = n(‖E_Y h²‖_∞ + ‖E_X h²‖_∞), C² = n² E h², D = n ‖h‖_{L₂→L₂}.
BoundParams iid_params(const std::vector<double>& table, const DiscreteDistribution& law, int n);

/// Convenience: extract (table, law, n) from an iid instance.
BoundParams iid_params(const UStatInstance& inst);

/// All kernels equal and laws equal within and across slots?
bool is_iid_instance(const UStatInstance& inst);

/// m = 1 tail/moment parameters: A = max_i ‖ξ_i‖_∞, C² = Σ_i E ξ_i².
BoundParams m1_params(const std::vector<FiniteDistribution>& xi);

// ----------------------------------------------------- scalar functionals --

/// inf{ t > 0 : Σ_i P(ξ_i > t) <= 1 } for nonnegative ξ_i.
double delta0(const std::vector<FiniteDistribution>& xi);

/// Largest solution of v = Σ_i E(ξ_i ∧ v) for nonnegative ξ_i (0 when all
/// ξ_i vanish).  Exact via the piecewise-linear structure.  When `truncation`
/// is finite and positive the variables are first capped at that level, which
/// yields the truncated variant used alongside quantile thresholds.
double v0(const std::vector<FiniteDistribution>& xi,
          double truncation = std::numeric_limits<double>::infinity());

/// Σ_i E(ξ_i ∧ v); the map whose largest fixed point is v0.
double truncated_mean_sum(const std::vector<FiniteDistribution>& xi, double v);

/// Lower bound for P(A > λ‖A‖_r): [(1−λ^r)·norm_r/norm_p]^{p/(p−r)}.
/// Computed for any 0 < r < p; the verification suite only asserts the
/// bound for r <= 1 (see registry notes).
double paley_zygmund_bound(double lambda, double r, double p, double norm_r, double norm_p);

/// Threshold 2·mean_abs_s + sigma·sqrt(8x) + 34.5·a·x for the bounded
/// empirical process tail check.  All inputs must be >= 0.
double talagrand_threshold(double mean_abs_s, double sigma, double a, double x);

// ----------------------------------------------------- exponential forms --

enum class ExpBoundForm {
    Bernstein,   // e²·exp(−min(x/(KeA), (x/(KeC))²))            (m = 1)
    ThreeRegime, // K·exp(−(1/K)·min(x/C, (x/B)^{2/3}, (x/A)^{1/2}))
    FourRegime,  // L·exp(−(1/L)·min(x²/C², x/D, (x/B)^{2/3}, (x/A)^{1/2}))
    IidFourRegime // FourRegime evaluated with iid-style parameters
};

/// Evaluate the chosen tail bound at x with the given constant.  Regimes
/// whose parameter vanishes are dropped (their ratio is +inf); if every
/// regime drops the bound is 0.
double exp_bound_eval(ExpBoundForm form, const BoundParams& bp, double constant, double x);

/// Name of the regime attaining the min at x ("x^2", "x", "x^{2/3}",
/// "x^{1/2}"; ties resolved in that order).  Bernstein uses "x" / "x^2".
std::string exp_bound_regime(ExpBoundForm form, const BoundParams& bp, double constant, double x);

} // namespace ustat
