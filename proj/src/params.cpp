#include "ustat/params.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ustat/common.hpp"
#include "ustat/operator_norm.hpp"

namespace ustat {

namespace {

void require_m2(const UStatInstance& inst, const char* what) {
    if (inst.m() != 2 || inst.mode != Mode::Decoupled)
        throw ApplicabilityError(std::string(what) + ": requires a decoupled m = 2 instance");
}

/// B² = max of the two one-sided conditional second-moment sups.
double b_param_sq(const UStatInstance& inst) {
    const int n = inst.n();
    double best = 0.0;
    // sup over second-slot point (j, y) of Σ_i E_1 h_{ij}^2(X, y)
    for (int j = 0; j < n; ++j) {
        const auto& dy = inst.law(1, j);
        for (std::size_t b = 0; b < dy.size(); ++b) {
            KahanSum s;
            for (int i = 0; i < n; ++i) {
                const auto& dx = inst.law(0, i);
                const auto& tab = inst.kernel.table(flatten_index({i, j}, n));
                KahanSum e;
                for (std::size_t a = 0; a < dx.size(); ++a) {
                    double v = tab[a * dy.size() + b];
                    e.add(dx.probs[a] * v * v);
                }
                s.add(e.value());
            }
            best = std::max(best, s.value());
        }
    }
    // sup over first-slot point (i, x) of Σ_j E_2 h_{ij}^2(x, Y)
    for (int i = 0; i < n; ++i) {
        const auto& dx = inst.law(0, i);
        for (std::size_t a = 0; a < dx.size(); ++a) {
            KahanSum s;
            for (int j = 0; j < n; ++j) {
                const auto& dy = inst.law(1, j);
                const auto& tab = inst.kernel.table(flatten_index({i, j}, n));
                KahanSum e;
                for (std::size_t b = 0; b < dy.size(); ++b) {
                    double v = tab[a * dy.size() + b];
                    e.add(dy.probs[b] * v * v);
                }
                s.add(e.value());
            }
            best = std::max(best, s.value());
        }
    }
    return best;
}

double c_param_sq(const UStatInstance& inst) {
    KahanSum s;
    const int n = inst.n();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const auto& dx = inst.law(0, i);
            const auto& dy = inst.law(1, j);
            const auto& tab = inst.kernel.table(flatten_index({i, j}, n));
            KahanSum e;
            for (std::size_t a = 0; a < dx.size(); ++a)
                for (std::size_t b = 0; b < dy.size(); ++b) {
                    double v = tab[a * dy.size() + b];
                    e.add(dx.probs[a] * dy.probs[b] * v * v);
                }
            s.add(e.value());
        }
    return s.value();
}

double sup_abs_kernel(const UStatInstance& inst) {
    double best = 0.0;
    for (const auto& tab : inst.kernel.tables)
        for (double v : tab) best = std::max(best, std::abs(v));
    return best;
}

} // namespace

BoundParams abcd_params(const UStatInstance& inst, bool centered) {
    require_m2(inst, "abcd_params");
    if (!is_canonical(inst))
        throw ApplicabilityError("abcd_params: kernels are not canonical (conditional means must vanish)");
    BoundParams bp;
    bp.A = sup_abs_kernel(inst);
    bp.B = std::sqrt(b_param_sq(inst));
    bp.C = std::sqrt(c_param_sq(inst));
    bp.D = op_norm(inst, centered);
    return bp;
}

bool is_iid_instance(const UStatInstance& inst) {
    if (inst.mode != Mode::Decoupled) return false;
    const int m = inst.m(), n = inst.n();
    const auto& ref = inst.grid.laws[0][0];
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < n; ++i) {
            const auto& a = inst.grid.laws[j][i];
            if (a.size() != ref.size()) return false;
            for (std::size_t k = 0; k < a.size(); ++k)
                if (a.atoms[k] != ref.atoms[k] || a.probs[k] != ref.probs[k]) return false;
        }
    const auto& t0 = inst.kernel.table(0);
    for (const auto& tab : inst.kernel.tables)
        if (tab != t0) return false;
    return true;
}

BoundParams iid_params(const std::vector<double>& table, const DiscreteDistribution& law,
                       int n) {
    const std::size_t k = law.size();
    if (table.size() != k * k)
        throw ApplicabilityError("iid_params: table must be square over the law's support");
    if (n < 1) throw ApplicabilityError("iid_params: n must be >= 1");
    // complete degeneracy: both conditional means vanish identically
    for (std::size_t b = 0; b < k; ++b) {
        KahanSum s;
        for (std::size_t a = 0; a < k; ++a) s.add(law.probs[a] * table[a * k + b]);
        if (std::abs(s.value()) > 1e-10)
            throw ApplicabilityError("iid_params: kernel is not completely degenerate");
    }
    for (std::size_t a = 0; a < k; ++a) {
        KahanSum s;
        for (std::size_t b = 0; b < k; ++b) s.add(law.probs[b] * table[a * k + b]);
        if (std::abs(s.value()) > 1e-10)
            throw ApplicabilityError("iid_params: kernel is not completely degenerate");
    }
    BoundParams bp;
    for (double v : table) bp.A = std::max(bp.A, std::abs(v));
    KahanSum eh2;
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) {
            double v = table[a * k + b];
            eh2.add(law.probs[a] * law.probs[b] * v * v);
        }
    bp.C = static_cast<double>(n) * std::sqrt(eh2.value());
    double sup_ey = 0.0, sup_ex = 0.0;
    for (std::size_t a = 0; a < k; ++a) { // E_Y h²(x,·), sup over x
        KahanSum s;
        for (std::size_t b = 0; b < k; ++b) {
            double v = table[a * k + b];
            s.add(law.probs[b] * v * v);
        }
        sup_ey = std::max(sup_ey, s.value());
    }
    for (std::size_t b = 0; b < k; ++b) { // E_X h²(·,y), sup over y
        KahanSum s;
        for (std::size_t a = 0; a < k; ++a) {
            double v = table[a * k + b];
            s.add(law.probs[a] * v * v);
        }
        sup_ex = std::max(sup_ex, s.value());
    }
    bp.B = std::sqrt(static_cast<double>(n) * (sup_ey + sup_ex));
    bp.D = static_cast<double>(n) * single_kernel_op_norm(table, law, law);
    return bp;
}

BoundParams iid_params(const UStatInstance& inst) {
    require_m2(inst, "iid_params");
    if (!is_iid_instance(inst))
        throw ApplicabilityError("iid_params: laws or kernels differ across indices");
    return iid_params(inst.kernel.table(0), inst.law(0, 0), inst.n());
}

BoundParams m1_params(const std::vector<FiniteDistribution>& xi) {
    BoundParams bp;
    KahanSum c2;
    for (const auto& d : xi) {
        bp.A = std::max(bp.A, std::max(std::abs(d.min()), std::abs(d.max())));
        c2.add(d.moment_abs(2.0));
    }
    bp.C = std::sqrt(c2.value());
    return bp;
}

// ------------------------------------------------------------ functionals --

namespace {
void require_nonneg(const std::vector<FiniteDistribution>& xi, const char* what) {
    if (xi.empty()) throw ApplicabilityError(std::string(what) + ": empty family");
    for (const auto& d : xi)
        if (d.min() < 0.0)
            throw ApplicabilityError(std::string(what) + ": negative support");
}
} // namespace

double delta0(const std::vector<FiniteDistribution>& xi) {
    require_nonneg(xi, "delta0");
    auto g = [&](double t) {
        KahanSum s;
        for (const auto& d : xi) s.add(d.tail_gt(t));
        return s.value();
    };
    if (g(0.0) <= 1.0) return 0.0;
    std::vector<double> vals;
    for (const auto& d : xi)
        for (double v : d.values)
            if (v > 0.0) vals.push_back(v);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (double v : vals)
        if (g(v) <= 1.0) return v;
    return vals.back(); // unreachable: g(max support) = 0
}

double truncated_mean_sum(const std::vector<FiniteDistribution>& xi, double v) {
    KahanSum s;
    for (const auto& d : xi)
        for (std::size_t k = 0; k < d.size(); ++k) s.add(d.probs[k] * std::min(d.values[k], v));
    return s.value();
}

double v0(const std::vector<FiniteDistribution>& xi_in, double truncation) {
    require_nonneg(xi_in, "v0");
    std::vector<FiniteDistribution> capped;
    const bool cap = std::isfinite(truncation);
    if (cap) {
        if (truncation < 0.0) throw ApplicabilityError("v0: truncation must be >= 0");
        for (const auto& d : xi_in) {
            std::vector<std::pair<double, double>> pairs;
            for (std::size_t k = 0; k < d.size(); ++k)
                pairs.emplace_back(std::min(d.values[k], truncation), d.probs[k]);
            capped.push_back(make_finite(pairs));
        }
    }
    const std::vector<FiniteDistribution>& xi = cap ? capped : xi_in;
    // φ(v) = Σ E(ξ ∧ v) is piecewise linear with slope Σ P(ξ > b) on
    // [b, next); collect every segment's fixed point (and, on slope-one
    // segments, the right endpoint) and take the largest.
    std::vector<double> brk = {0.0};
    for (const auto& d : xi)
        for (double v : d.values)
            if (v > 0.0) brk.push_back(v);
    std::sort(brk.begin(), brk.end());
    brk.erase(std::unique(brk.begin(), brk.end()), brk.end());

    double best = 0.0; // v = 0 is always a fixed point
    for (std::size_t k = 0; k < brk.size(); ++k) {
        const double b = brk[k];
        const double hi = k + 1 < brk.size() ? brk[k + 1] : std::numeric_limits<double>::infinity();
        KahanSum slope_s, icpt_s;
        for (const auto& d : xi) {
            slope_s.add(d.tail_gt(b));
            for (std::size_t t = 0; t < d.size(); ++t)
                if (d.values[t] <= b) icpt_s.add(d.probs[t] * d.values[t]);
        }
        const double s = slope_s.value(), c = icpt_s.value();
        if (std::abs(1.0 - s) <= 1e-12) {
            // φ parallel to the diagonal; entire segment fixed iff c ≈ 0
            if (std::abs(c) <= 1e-12 * std::max(1.0, b) && k + 1 < brk.size())
                best = std::max(best, brk[k + 1]);
            continue;
        }
        double v = c / (1.0 - s);
        const double tol = 1e-12 * std::max(1.0, std::abs(v));
        if (v >= b - tol && v <= hi + tol) best = std::max(best, std::clamp(v, b, hi));
    }
    return best;
}

double paley_zygmund_bound(double lambda, double r, double p, double norm_r, double norm_p) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw ApplicabilityError("paley_zygmund_bound: lambda must lie in (0,1)");
    if (!(r > 0.0 && r < p)) throw ApplicabilityError("paley_zygmund_bound: need 0 < r < p");
    if (!(norm_r > 0.0 && norm_p > 0.0))
        throw ApplicabilityError("paley_zygmund_bound: norms must be positive");
    if (norm_r > norm_p * (1.0 + 1e-12))
        throw ApplicabilityError("paley_zygmund_bound: norm_r must not exceed norm_p");
    double base = (1.0 - std::pow(lambda, r)) * norm_r / norm_p;
    return std::pow(base, p / (p - r));
}

double talagrand_threshold(double mean_abs_s, double sigma, double a, double x) {
    if (mean_abs_s < 0.0 || sigma < 0.0 || a < 0.0 || x < 0.0)
        throw ApplicabilityError("talagrand_threshold: all inputs must be >= 0");
    return 2.0 * mean_abs_s + sigma * std::sqrt(8.0 * x) + 34.5 * a * x;
}

// ------------------------------------------------------ exponential forms --

namespace {
struct Regime {
    const char* name;
    double ratio; // contribution to the min
};

std::vector<Regime> regimes(ExpBoundForm form, const BoundParams& bp, double constant, double x) {
    std::vector<Regime> out;
    switch (form) {
    case ExpBoundForm::Bernstein: {
        const double Ke = constant * M_E;
        if (bp.A > 0.0) out.push_back({"x", x / (Ke * bp.A)});
        if (bp.C > 0.0) out.push_back({"x^2", (x / (Ke * bp.C)) * (x / (Ke * bp.C))});
        break;
    }
    case ExpBoundForm::ThreeRegime:
        if (bp.C > 0.0) out.push_back({"x", x / bp.C});
        if (bp.B > 0.0) out.push_back({"x^{2/3}", std::pow(x / bp.B, 2.0 / 3.0)});
        if (bp.A > 0.0) out.push_back({"x^{1/2}", std::sqrt(x / bp.A)});
        break;
    case ExpBoundForm::FourRegime:
    case ExpBoundForm::IidFourRegime:
        if (bp.C > 0.0) out.push_back({"x^2", (x * x) / (bp.C * bp.C)});
        if (bp.D > 0.0) out.push_back({"x", x / bp.D});
        if (bp.B > 0.0) out.push_back({"x^{2/3}", std::pow(x, 2.0 / 3.0) / std::pow(bp.B, 2.0 / 3.0)});
        if (bp.A > 0.0) out.push_back({"x^{1/2}", std::sqrt(x) / std::sqrt(bp.A)});
        break;
    }
    return out;
}
} // namespace

double exp_bound_eval(ExpBoundForm form, const BoundParams& bp, double constant, double x) {
    if (!(x > 0.0)) throw ApplicabilityError("exp_bound_eval: x must be positive");
    if (!(constant > 0.0)) throw ApplicabilityError("exp_bound_eval: constant must be positive");
    auto rs = regimes(form, bp, constant, x);
    if (rs.empty()) return 0.0; // degenerate: every parameter vanishes
    double e = rs.front().ratio;
    for (const auto& r : rs) e = std::min(e, r.ratio);
    if (form == ExpBoundForm::Bernstein) return M_E * M_E * std::exp(-e);
    return constant * std::exp(-e / constant);
}

std::string exp_bound_regime(ExpBoundForm form, const BoundParams& bp, double constant,
                             double x) {
    auto rs = regimes(form, bp, constant, x);
    if (rs.empty()) return "none";
    // fixed resolution order: x^2, x, x^{2/3}, x^{1/2}
    const char* order[] = {"x^2", "x", "x^{2/3}", "x^{1/2}"};
    double best = rs.front().ratio;
    for (const auto& r : rs) best = std::min(best, r.ratio);
    for (const char* name : order)
        for (const auto& r : rs)
            if (std::string(r.name) == name && r.ratio <= best * (1.0 + 1e-12)) return name;
    return rs.front().name;
}

} // namespace ustat
