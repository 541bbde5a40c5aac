#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ustat/instance.hpp"
#include "ustat/params.hpp"

namespace ustat {

struct McOptions {
    int threads = 1; ///< 0 = hardware concurrency; results do not depend on it
};

/// Replicate summary: every sampled value, sorted ascending, plus provenance.
/// Replicates are generated in fixed 4096-rep chunks, each driven by its own
/// derived substream, so the summary is bit-identical for a given
/// (input, reps, seed) no matter how many workers ran.
struct SampleSummary {
    std::string family;   ///< "instance", "gaussian-chaos" or "bernoulli-product"
    std::string source_id;
    std::uint64_t reps = 0;
    std::uint64_t seed = 0;
    std::vector<double> samples; ///< sorted ascending

    /// Order statistic at level q in [0, 1] (inverse empirical cdf).
    double quantile(double q) const;
    /// Same, applied to |value|.
    double abs_quantile(double q) const;
};

SampleSummary sample_ustat(const UStatInstance& inst, std::uint64_t reps, std::uint64_t seed,
                           const McOptions& opts = {});

/// True-Gaussian second-order chaos: U = sum_{i,j} g_i g'_j coeffs[i*n+j] with
/// g, g' standard normal via the inverse cdf on the deterministic stream.
SampleSummary sample_gaussian_chaos(const std::vector<double>& coeffs, int n,
                                    std::uint64_t reps, std::uint64_t seed,
                                    const McOptions& opts = {});

/// Product of two independent centered Bernoulli(1/n) sums:
/// U = (sum_i eta_i)(sum_j eta'_j) with eta = xi - 1/n, xi ~ Bernoulli(1/n).
SampleSummary sample_bernoulli_product(int n, std::uint64_t reps, std::uint64_t seed,
                                       const McOptions& opts = {});

/// Empirical tail of |U| on an x-grid with two-sided Wilson-score intervals.
struct TailCurve {
    std::vector<double> x;              ///< strictly increasing, positive
    std::vector<std::uint64_t> counts;  ///< #{k : |U_k| >= x_i}
    std::vector<double> tail;           ///< counts / reps (nonincreasing)
    std::vector<double> lower;          ///< Wilson lower confidence limit
    std::vector<double> upper;          ///< Wilson upper confidence limit
    std::vector<double> radius;         ///< interval half-width
    std::vector<double> bound;          ///< filled by tail_vs_bound
    std::vector<std::string> regime;    ///< active regime label per point
    std::uint64_t reps = 0;
    std::uint64_t seed = 0;
    double confidence = 0.95;
};

/// Default comparison grid: `points` log-spaced values from the median of |U|
/// to its (1 - 10/reps) quantile.  Degenerate summaries (no positive |U|)
/// give an empty grid.
std::vector<double> default_grid(const SampleSummary& s, int points = 32);

/// Tail estimates on the grid; bounds and regimes are left unfilled.
/// Requires confidence in (0,1) and a strictly increasing positive grid.
TailCurve empirical_tail(const SampleSummary& s, const std::vector<double>& grid,
                         double confidence = 0.95);

struct TailComparison {
    TailCurve curve;        ///< completed: bound values + regime labels
    double constant = 1.0;  ///< supplied or fitted
    bool fitted = false;
    bool majorizes = false; ///< bound >= Wilson upper limit at every point
};

/// Fill the exponential bound along the curve.  With a supplied constant the
/// verdict is simply computed; without one, the minimal constant achieving
/// pointwise majorization of the Wilson upper limits is fitted (monotone in
/// the grid: adding points never decreases it).  Throws on an empty grid.
TailComparison tail_vs_bound(const TailCurve& curve, const BoundParams& params,
                             ExpBoundForm form,
                             std::optional<double> constant = std::nullopt);

/// Through-origin least-squares slope of -log tail against sqrt(x)·log x over
/// grid points with x > 1 and a nonzero tail count.  Report-only diagnostic;
/// nullopt when fewer than two usable points exist.
std::optional<double> log_tail_slope(const TailCurve& curve);

/// JSON text for re-deriving reports without resampling.
std::string sample_summary_json(const SampleSummary& s);
std::string tail_curve_json(const TailComparison& tc);

} // namespace ustat
