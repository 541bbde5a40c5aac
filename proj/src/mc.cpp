#include "ustat/mc.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "json.hpp"
#include "ustat/common.hpp"

namespace ustat {

namespace {

constexpr std::uint64_t kChunk = 4096;

/// Deterministic per-chunk stream: the engine's output sequence is pinned by
/// the standard, the [0,1) mapping by u01_from_bits.
struct Stream {
    std::mt19937_64 rng;
    explicit Stream(std::uint64_t s) : rng(s) {}
    double u01() { return u01_from_bits(rng()); }
    /// Open-interval variate for the inverse normal cdf.
    double normal() { return normal_icdf(u01() + 0x1.0p-54); }
};

template <typename PerRep>
SampleSummary run_chunks(std::string family, std::string source_id, std::uint64_t reps,
                         std::uint64_t seed, int threads, PerRep per_rep) {
    SampleSummary s;
    s.family = std::move(family);
    s.source_id = std::move(source_id);
    s.reps = reps;
    s.seed = seed;
    s.samples.assign(reps, 0.0);
    const std::uint64_t nchunks = (reps + kChunk - 1) / kChunk;
    parallel_chunks(nchunks, threads, [&](std::uint64_t c) {
        Stream st(chunk_seed(seed, c));
        const std::uint64_t lo = c * kChunk;
        const std::uint64_t hi = std::min(reps, lo + kChunk);
        for (std::uint64_t k = lo; k < hi; ++k) s.samples[k] = per_rep(st);
    });
    std::sort(s.samples.begin(), s.samples.end());
    return s;
}

std::size_t pick_atom(const std::vector<double>& probs, double u) {
    double acc = 0.0;
    for (std::size_t a = 0; a + 1 < probs.size(); ++a) {
        acc += probs[a];
        if (u < acc) return a;
    }
    return probs.size() - 1;
}

/// One kernel term of the sampled statistic: which variables feed it and how
/// their sampled atoms combine into a table offset.
struct Term {
    const std::vector<double>* table;
    std::vector<std::size_t> var;   // variable slot per coordinate
    std::vector<std::size_t> radix; // atom count per coordinate
};

struct InstancePlan {
    std::vector<const DiscreteDistribution*> vars;
    std::vector<Term> terms;
};

InstancePlan build_plan(const UStatInstance& inst) {
    InstancePlan plan;
    const int m = inst.m(), n = inst.n();
    if (inst.mode == Mode::Decoupled) {
        for (int j = 0; j < m; ++j)
            for (int i = 0; i < n; ++i) plan.vars.push_back(&inst.grid.laws[j][i]);
    } else {
        for (int i = 0; i < n; ++i) plan.vars.push_back(&inst.grid.laws[0][i]);
    }
    std::vector<int> idx(m, 0);
    while (true) {
        bool diag = false;
        if (inst.mode == Mode::Undecoupled)
            for (int a = 0; a < m && !diag; ++a)
                for (int b = a + 1; b < m; ++b)
                    if (idx[a] == idx[b]) { diag = true; break; }
        if (!diag) {
            Term t;
            t.table = &inst.kernel.table(flatten_index(idx, n));
            for (int j = 0; j < m; ++j) {
                std::size_t v = inst.mode == Mode::Decoupled
                                    ? static_cast<std::size_t>(j) * n + idx[j]
                                    : static_cast<std::size_t>(idx[j]);
                t.var.push_back(v);
                t.radix.push_back(plan.vars[v]->size());
            }
            plan.terms.push_back(std::move(t));
        }
        int j = m - 1;
        while (j >= 0 && ++idx[j] == n) idx[j--] = 0;
        if (j < 0) break;
    }
    return plan;
}

double wilson_center(double phat, double n, double z) {
    return (phat + z * z / (2.0 * n)) / (1.0 + z * z / n);
}

double wilson_halfwidth(double phat, double n, double z) {
    double w = z * std::sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n));
    return w / (1.0 + z * z / n);
}

bool majorizes_point(double bound, double upper) {
    return bound >= upper || upper - bound <= 1e-12 * std::max(1.0, upper);
}

nlohmann::ordered_json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

} // namespace

double SampleSummary::quantile(double q) const {
    if (samples.empty()) throw ApplicabilityError("quantile of an empty summary");
    double pos = q * static_cast<double>(samples.size());
    auto idx = static_cast<std::size_t>(std::min(
        static_cast<double>(samples.size() - 1), std::max(0.0, std::floor(pos))));
    return samples[idx];
}

double SampleSummary::abs_quantile(double q) const {
    std::vector<double> a(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) a[i] = std::abs(samples[i]);
    std::sort(a.begin(), a.end());
    SampleSummary tmp;
    tmp.samples = std::move(a);
    return tmp.quantile(q);
}

SampleSummary sample_ustat(const UStatInstance& inst, std::uint64_t reps, std::uint64_t seed,
                           const McOptions& opts) {
    if (reps < 1) throw ApplicabilityError("sample_ustat: reps >= 1 required");
    validate_instance(inst);
    InstancePlan plan = build_plan(inst);
    return run_chunks("instance", inst.id, reps, seed, opts.threads, [plan](Stream& st) {
        std::vector<std::size_t> atoms(plan.vars.size());
        for (std::size_t v = 0; v < plan.vars.size(); ++v)
            atoms[v] = pick_atom(plan.vars[v]->probs, st.u01());
        double sum = 0.0;
        for (const Term& t : plan.terms) {
            std::size_t off = 0;
            for (std::size_t j = 0; j < t.var.size(); ++j)
                off = off * t.radix[j] + atoms[t.var[j]];
            sum += (*t.table)[off];
        }
        return sum;
    });
}

SampleSummary sample_gaussian_chaos(const std::vector<double>& coeffs, int n,
                                    std::uint64_t reps, std::uint64_t seed,
                                    const McOptions& opts) {
    if (reps < 1) throw ApplicabilityError("sample_gaussian_chaos: reps >= 1 required");
    if (n < 1 || coeffs.size() != static_cast<std::size_t>(n) * n)
        throw ApplicabilityError("sample_gaussian_chaos: coeffs must be n x n");
    return run_chunks("gaussian-chaos", "gaussian-chaos-n" + std::to_string(n), reps, seed,
                      opts.threads, [&coeffs, n](Stream& st) {
                          std::vector<double> g(n), gp(n);
                          for (int i = 0; i < n; ++i) g[i] = st.normal();
                          for (int j = 0; j < n; ++j) gp[j] = st.normal();
                          double sum = 0.0;
                          for (int i = 0; i < n; ++i) {
                              double row = 0.0;
                              for (int j = 0; j < n; ++j)
                                  row += coeffs[static_cast<std::size_t>(i) * n + j] * gp[j];
                              sum += g[i] * row;
                          }
                          return sum;
                      });
}

SampleSummary sample_bernoulli_product(int n, std::uint64_t reps, std::uint64_t seed,
                                       const McOptions& opts) {
    if (reps < 1) throw ApplicabilityError("sample_bernoulli_product: reps >= 1 required");
    if (n < 1) throw ApplicabilityError("sample_bernoulli_product: n >= 1 required");
    const double q = 1.0 / n;
    return run_chunks("bernoulli-product", "bernoulli-product-n" + std::to_string(n), reps,
                      seed, opts.threads, [n, q](Stream& st) {
                          double s1 = 0.0, s2 = 0.0;
                          for (int i = 0; i < n; ++i) s1 += st.u01() < q ? 1.0 - q : -q;
                          for (int j = 0; j < n; ++j) s2 += st.u01() < q ? 1.0 - q : -q;
                          return s1 * s2;
                      });
}

std::vector<double> default_grid(const SampleSummary& s, int points) {
    if (points < 1) throw ApplicabilityError("default_grid: points >= 1 required");
    double hi = s.abs_quantile(1.0 - 10.0 / static_cast<double>(s.reps));
    if (!(hi > 0.0)) return {};
    double lo = s.abs_quantile(0.5);
    if (!(lo > 0.0)) {
        // median sits at zero: start at the smallest positive magnitude
        lo = hi;
        for (double v : s.samples) {
            double a = std::abs(v);
            if (a > 0.0) lo = std::min(lo, a);
        }
    }
    if (lo >= hi) return {hi};
    std::vector<double> grid;
    for (int i = 0; i < points; ++i) {
        double t = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
        double x = lo * std::pow(hi / lo, t);
        if (grid.empty() || x > grid.back() * (1.0 + 1e-12)) grid.push_back(x);
    }
    return grid;
}

TailCurve empirical_tail(const SampleSummary& s, const std::vector<double>& grid,
                         double confidence) {
    if (!(confidence > 0.0 && confidence < 1.0))
        throw ApplicabilityError("empirical_tail: confidence in (0,1) required");
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        if (!(grid[i] < grid[i + 1]))
            throw ApplicabilityError("empirical_tail: grid must be strictly increasing");
    TailCurve c;
    c.x = grid;
    c.reps = s.reps;
    c.seed = s.seed;
    c.confidence = confidence;
    std::vector<double> a(s.samples.size());
    for (std::size_t i = 0; i < s.samples.size(); ++i) a[i] = std::abs(s.samples[i]);
    std::sort(a.begin(), a.end());
    const double n = static_cast<double>(s.reps);
    const double z = normal_icdf(0.5 + confidence / 2.0);
    for (double x : grid) {
        auto it = std::lower_bound(a.begin(), a.end(), x);
        auto cnt = static_cast<std::uint64_t>(a.end() - it); // #{|U| >= x}
        double phat = static_cast<double>(cnt) / n;
        double center = wilson_center(phat, n, z);
        double hw = wilson_halfwidth(phat, n, z);
        c.counts.push_back(cnt);
        c.tail.push_back(phat);
        c.lower.push_back(std::max(0.0, center - hw));
        c.upper.push_back(std::min(1.0, center + hw));
        c.radius.push_back(hw);
    }
    return c;
}

TailComparison tail_vs_bound(const TailCurve& curve, const BoundParams& params,
                             ExpBoundForm form, std::optional<double> constant) {
    if (curve.x.empty()) throw ApplicabilityError("tail_vs_bound: empty grid");
    TailComparison tc;
    tc.curve = curve;
    auto fill = [&](double k) {
        tc.curve.bound.clear();
        tc.curve.regime.clear();
        bool ok = true;
        for (std::size_t i = 0; i < curve.x.size(); ++i) {
            double b = exp_bound_eval(form, params, k, curve.x[i]);
            tc.curve.bound.push_back(b);
            tc.curve.regime.push_back(exp_bound_regime(form, params, k, curve.x[i]));
            if (!majorizes_point(b, curve.upper[i])) ok = false;
        }
        return ok;
    };
    if (constant) {
        tc.constant = *constant;
        tc.majorizes = fill(*constant);
        return tc;
    }
    tc.fitted = true;
    double hi = 1.0;
    while (!fill(hi)) {
        hi *= 4.0;
        if (hi > 1e30) { // no finite constant can cover the grid
            tc.constant = std::numeric_limits<double>::infinity();
            tc.majorizes = false;
            fill(1.0);
            return tc;
        }
    }
    double lo = hi * 0.25;
    while (lo > 1e-30 && fill(lo)) {
        hi = lo;
        lo *= 0.25;
    }
    for (int it = 0; it < 200 && hi / lo > 1.0 + 1e-10; ++it) {
        double mid = std::sqrt(lo * hi);
        if (fill(mid))
            hi = mid;
        else
            lo = mid;
    }
    tc.constant = hi;
    tc.majorizes = fill(hi);
    return tc;
}

std::optional<double> log_tail_slope(const TailCurve& curve) {
    double stt = 0.0, sty = 0.0;
    int used = 0;
    for (std::size_t i = 0; i < curve.x.size(); ++i) {
        if (curve.x[i] <= 1.0 || curve.counts[i] == 0) continue;
        double t = std::sqrt(curve.x[i]) * std::log(curve.x[i]);
        double y = -std::log(curve.tail[i]);
        stt += t * t;
        sty += t * y;
        ++used;
    }
    if (used < 2 || stt == 0.0) return std::nullopt;
    return sty / stt;
}

std::string sample_summary_json(const SampleSummary& s) {
    nlohmann::ordered_json j;
    j["family"] = s.family;
    j["source"] = s.source_id;
    j["reps"] = s.reps;
    j["seed"] = s.seed;
    nlohmann::ordered_json qs;
    for (double q : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 1.0}) {
        char key[16];
        std::snprintf(key, sizeof key, "q%.2f", q);
        qs[key] = num(s.quantile(q));
    }
    j["quantiles"] = qs;
    return j.dump();
}

std::string tail_curve_json(const TailComparison& tc) {
    const TailCurve& c = tc.curve;
    nlohmann::ordered_json j;
    j["reps"] = c.reps;
    j["seed"] = c.seed;
    j["confidence"] = c.confidence;
    j["constant"] = num(tc.constant);
    j["fitted"] = tc.fitted;
    j["majorizes"] = tc.majorizes;
    j["x"] = c.x;
    j["counts"] = c.counts;
    nlohmann::ordered_json tail, lo, up, bound;
    for (double v : c.tail) tail.push_back(num(v));
    for (double v : c.lower) lo.push_back(num(v));
    for (double v : c.upper) up.push_back(num(v));
    for (double v : c.bound) bound.push_back(num(v));
    j["tail"] = tail;
    j["lower"] = lo;
    j["upper"] = up;
    if (!c.bound.empty()) j["bound"] = bound;
    if (!c.regime.empty()) j["regime"] = c.regime;
    return j.dump();
}

} // namespace ustat
