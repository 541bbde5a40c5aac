#pragma once

#include <optional>
#include <string>
#include <vector>

namespace ustat {

/// A finitely supported input law.  Construction through make_distribution
/// canonicalizes: atoms sorted ascending, zero-mass atoms dropped, duplicates
/// rejected, probabilities positive and summing to 1 within 1e-12 absolute.
struct DiscreteDistribution {
    std::vector<double> atoms;
    std::vector<double> probs;

    std::size_t size() const { return atoms.size(); }
    double min() const { return atoms.front(); }
    double max() const { return atoms.back(); }

    double mean() const;
    /// E atom^k with signed-integer semantics (k integer) or E|atom|^p.
    double moment_raw(double p) const;
    double moment_abs(double p) const;
    /// P(X > t) (strict).
    double tail_gt(double t) const;
    /// E X·1(X > t).  Used by the largest-fixed-point solver.
    double partial_mean_gt(double t) const;
    /// E X^p·1(X > t), atoms compared exactly against t.
    double moment_above(double p, double t) const;
    double sup_abs() const;

    bool nonneg_support() const { return atoms.front() >= 0.0; }
};

/// Validation that reports instead of throwing; used by instance validation
/// to collect every violation with a path.
std::vector<std::string> validate_distribution(const DiscreteDistribution& d);

DiscreteDistribution make_distribution(std::vector<double> atoms, std::vector<double> probs);

/// Exact finitely-supported output distribution (law of a statistic).
/// Values sorted ascending, merged within 1e-12 absolute (group anchored at
/// its first value), weights positive, total within 1e-9 relative of 1.
struct FiniteDistribution {
    std::vector<double> values;
    std::vector<double> probs;

    std::size_t size() const { return values.size(); }
    double min() const { return values.front(); }
    double max() const { return values.back(); }

    double total() const;
    double mean() const;
    double moment_raw(double p) const;
    double moment_abs(double p) const;
    /// (E|X|^p)^{1/p}
    double norm_abs(double p) const;
    double tail_gt(double t) const;   // P(X > t)
    double tail_ge(double t) const;   // P(X >= t)
    /// law of |X|
    FiniteDistribution abs() const;
    /// law of c·X
    FiniteDistribution scaled(double c) const;
};

/// Build from unsorted (value, weight) pairs; merges within 1e-12 absolute.
FiniteDistribution make_finite(std::vector<std::pair<double, double>> pairs);

/// Point mass.
FiniteDistribution dirac(double v);

/// inf{ t >= 0 : P(X > t) <= q }; strict tail.  q in (0,1) enforced by the
/// public entry points; this helper accepts q >= 1 (result 0).
double quantile_t0_unchecked(const FiniteDistribution& d, double q);
double quantile_t0(const FiniteDistribution& d, double q);

/// law of max(X_1..X_k) for independent X_i; exact via merged-support CDF
/// products.
FiniteDistribution max_of_independent(const std::vector<FiniteDistribution>& laws);

/// E max_i X_i^p for independent nonnegative X_i (max of the p-th powers;
/// equal to (max X)^p on nonnegative support).
double expected_max_power(const std::vector<FiniteDistribution>& laws, double p);

} // namespace ustat
