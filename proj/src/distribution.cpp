#include "ustat/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ustat/common.hpp"

namespace ustat {

namespace {
constexpr double kMergeTol = 1e-12;   // absolute, on values
constexpr double kProbTolAbs = 1e-12; // input law mass budget
constexpr double kProbTolRel = 1e-9;  // output law mass budget
} // namespace

// ------------------------------------------------------------ input laws --

double DiscreteDistribution::mean() const {
    KahanSum s;
    for (std::size_t k = 0; k < atoms.size(); ++k) s.add(probs[k] * atoms[k]);
    return s.value();
}

double DiscreteDistribution::moment_raw(double p) const {
    KahanSum s;
    for (std::size_t k = 0; k < atoms.size(); ++k) s.add(probs[k] * signed_pow(atoms[k], p));
    return s.value();
}

double DiscreteDistribution::moment_abs(double p) const {
    KahanSum s;
    for (std::size_t k = 0; k < atoms.size(); ++k)
        s.add(probs[k] * std::pow(std::abs(atoms[k]), p));
    return s.value();
}

double DiscreteDistribution::tail_gt(double t) const {
    KahanSum s;
    for (std::size_t k = 0; k < atoms.size(); ++k)
        if (atoms[k] > t) s.add(probs[k]);
    return s.value();
}

double DiscreteDistribution::partial_mean_gt(double t) const {
    KahanSum s;
    for (std::size_t k = 0; k < atoms.size(); ++k)
        if (atoms[k] > t) s.add(probs[k] * atoms[k]);
    return s.value();
}

double DiscreteDistribution::moment_above(double p, double t) const {
    KahanSum s;
    for (std::size_t k = 0; k < atoms.size(); ++k)
        if (atoms[k] > t) s.add(probs[k] * signed_pow(atoms[k], p));
    return s.value();
}

double DiscreteDistribution::sup_abs() const {
    return std::max(std::abs(atoms.front()), std::abs(atoms.back()));
}

std::vector<std::string> validate_distribution(const DiscreteDistribution& d) {
    std::vector<std::string> out;
    if (d.atoms.empty()) out.push_back("empty support");
    if (d.atoms.size() != d.probs.size())
        out.push_back("atoms/probs length mismatch");
    for (std::size_t k = 0; k + 1 < d.atoms.size(); ++k)
        if (!(d.atoms[k] < d.atoms[k + 1])) {
            out.push_back("atoms not strictly increasing at position " + std::to_string(k + 1));
            break;
        }
    double mass = 0.0;
    for (std::size_t k = 0; k < d.probs.size(); ++k) {
        if (!(d.probs[k] > 0.0))
            out.push_back("probs[" + std::to_string(k) + "] not positive");
        mass += d.probs[k];
    }
    if (!d.probs.empty() && std::abs(mass - 1.0) > kProbTolAbs)
        out.push_back("probs sum to " + std::to_string(mass) + ", not 1");
    return out;
}

DiscreteDistribution make_distribution(std::vector<double> atoms, std::vector<double> probs) {
    if (atoms.size() != probs.size())
        throw std::invalid_argument("make_distribution: atoms/probs length mismatch");
    // drop zero-mass atoms, then canonicalize order
    std::vector<std::pair<double, double>> kept;
    kept.reserve(atoms.size());
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        if (probs[k] == 0.0) continue;
        if (!(probs[k] > 0.0))
            throw std::invalid_argument("make_distribution: negative or non-finite probability");
        kept.emplace_back(atoms[k], probs[k]);
    }
    if (kept.empty()) throw std::invalid_argument("make_distribution: empty support");
    std::sort(kept.begin(), kept.end());
    DiscreteDistribution d;
    for (auto& [a, p] : kept) {
        if (!d.atoms.empty() && !(a > d.atoms.back()))
            throw std::invalid_argument("make_distribution: duplicate atom " + std::to_string(a));
        d.atoms.push_back(a);
        d.probs.push_back(p);
    }
    double mass = neumaier_total(d.probs);
    if (std::abs(mass - 1.0) > kProbTolAbs)
        throw std::invalid_argument("make_distribution: probabilities sum to " +
                                    std::to_string(mass));
    return d;
}

// --------------------------------------------------------- output laws ----

double FiniteDistribution::total() const { return neumaier_total(probs); }

double FiniteDistribution::mean() const {
    KahanSum s;
    for (std::size_t k = 0; k < values.size(); ++k) s.add(probs[k] * values[k]);
    return s.value();
}

double FiniteDistribution::moment_raw(double p) const {
    KahanSum s;
    for (std::size_t k = 0; k < values.size(); ++k) s.add(probs[k] * signed_pow(values[k], p));
    return s.value();
}

double FiniteDistribution::moment_abs(double p) const {
    KahanSum s;
    for (std::size_t k = 0; k < values.size(); ++k)
        s.add(probs[k] * std::pow(std::abs(values[k]), p));
    return s.value();
}

double FiniteDistribution::norm_abs(double p) const { return std::pow(moment_abs(p), 1.0 / p); }

double FiniteDistribution::tail_gt(double t) const {
    KahanSum s;
    for (std::size_t k = 0; k < values.size(); ++k)
        if (values[k] > t) s.add(probs[k]);
    return s.value();
}

double FiniteDistribution::tail_ge(double t) const {
    KahanSum s;
    for (std::size_t k = 0; k < values.size(); ++k)
        if (values[k] >= t) s.add(probs[k]);
    return s.value();
}

FiniteDistribution FiniteDistribution::abs() const {
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(values.size());
    for (std::size_t k = 0; k < values.size(); ++k)
        pairs.emplace_back(std::abs(values[k]), probs[k]);
    return make_finite(std::move(pairs));
}

FiniteDistribution FiniteDistribution::scaled(double c) const {
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) pairs.emplace_back(c * values[k], probs[k]);
    return make_finite(std::move(pairs));
}

FiniteDistribution make_finite(std::vector<std::pair<double, double>> pairs) {
    if (pairs.empty()) throw std::invalid_argument("make_finite: no mass");
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    FiniteDistribution d;
    double anchor = pairs.front().first;
    KahanSum w;
    for (const auto& [v, q] : pairs) {
        if (!(q >= 0.0)) throw std::invalid_argument("make_finite: negative weight");
        if (v - anchor > kMergeTol) {
            if (w.value() > 0.0) {
                d.values.push_back(anchor);
                d.probs.push_back(w.value());
            }
            anchor = v;
            w = KahanSum{};
        }
        w.add(q);
    }
    if (w.value() > 0.0) {
        d.values.push_back(anchor);
        d.probs.push_back(w.value());
    }
    if (d.values.empty()) throw std::invalid_argument("make_finite: all weights zero");
    double mass = d.total();
    if (std::abs(mass - 1.0) > kProbTolRel * std::max(1.0, std::abs(mass)))
        throw std::invalid_argument("make_finite: total mass " + std::to_string(mass));
    return d;
}

FiniteDistribution dirac(double v) {
    FiniteDistribution d;
    d.values = {v};
    d.probs = {1.0};
    return d;
}

double quantile_t0_unchecked(const FiniteDistribution& d, double q) {
    if (d.tail_gt(0.0) <= q) return 0.0;
    // tail(t) is right-continuous and drops only at support values; the
    // infimum is attained at the first support value whose strict tail is
    // small enough.  Walk from below with a suffix accumulator.
    std::vector<double> suffix(d.size() + 1, 0.0);
    for (std::size_t k = d.size(); k-- > 0;) suffix[k] = suffix[k + 1] + d.probs[k];
    for (std::size_t k = 0; k < d.size(); ++k) {
        if (d.values[k] < 0.0) continue;
        if (suffix[k + 1] <= q) return d.values[k];
    }
    return d.max();
}

double quantile_t0(const FiniteDistribution& d, double q) {
    if (!(q > 0.0 && q < 1.0))
        throw ApplicabilityError("quantile_t0: level must lie in (0,1)");
    return quantile_t0_unchecked(d, q);
}

FiniteDistribution max_of_independent(const std::vector<FiniteDistribution>& laws) {
    if (laws.empty()) throw std::invalid_argument("max_of_independent: no laws");
    std::vector<double> support;
    for (const auto& d : laws)
        support.insert(support.end(), d.values.begin(), d.values.end());
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());

    auto cdf_at = [](const FiniteDistribution& d, double t) {
        // P(X <= t), support values compared exactly
        auto it = std::upper_bound(d.values.begin(), d.values.end(), t);
        KahanSum s;
        for (std::size_t k = 0; k < static_cast<std::size_t>(it - d.values.begin()); ++k)
            s.add(d.probs[k]);
        return s.value();
    };

    std::vector<std::pair<double, double>> pairs;
    double prev_cdf = 0.0;
    for (double t : support) {
        double f = 1.0;
        for (const auto& d : laws) f *= cdf_at(d, t);
        double w = f - prev_cdf;
        if (w > 0.0) pairs.emplace_back(t, w);
        prev_cdf = f;
    }
    return make_finite(std::move(pairs));
}

double expected_max_power(const std::vector<FiniteDistribution>& laws, double p) {
    FiniteDistribution m = max_of_independent(laws);
    return m.moment_raw(p);
}

} // namespace ustat
