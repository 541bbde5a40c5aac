#include "ustat/instance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ustat/common.hpp"

namespace ustat {

std::string IndexSubset::to_string(int m) const {
    std::string s = "{";
    bool first = true;
    for (int j = 0; j < m; ++j)
        if (contains(j)) {
            if (!first) s += ",";
            s += std::to_string(j + 1);
            first = false;
        }
    return s + "}";
}

std::vector<IndexSubset> all_subsets(int m) {
    std::vector<IndexSubset> out;
    out.reserve(1u << m);
    for (std::uint32_t b = 0; b < (1u << m); ++b) out.push_back({b});
    return out;
}

std::size_t flatten_index(const std::vector<int>& idx, int n) {
    std::size_t f = 0;
    for (int v : idx) f = f * static_cast<std::size_t>(n) + static_cast<std::size_t>(v);
    return f;
}

std::vector<int> unflatten_index(std::size_t flat, int m, int n) {
    std::vector<int> idx(m);
    for (int j = m - 1; j >= 0; --j) {
        idx[j] = static_cast<int>(flat % n);
        flat /= n;
    }
    return idx;
}

std::vector<std::size_t> table_shape(const UStatInstance& inst, const std::vector<int>& idx) {
    std::vector<std::size_t> shape(inst.m());
    for (int j = 0; j < inst.m(); ++j) shape[j] = inst.law(j, idx[j]).size();
    return shape;
}

std::size_t table_size(const std::vector<std::size_t>& shape) {
    std::size_t s = 1;
    for (std::size_t d : shape) s *= d;
    return s;
}

namespace {

std::vector<std::size_t> strides_of(const std::vector<std::size_t>& shape) {
    std::vector<std::size_t> st(shape.size(), 1);
    for (int j = static_cast<int>(shape.size()) - 2; j >= 0; --j) st[j] = st[j + 1] * shape[j + 1];
    return st;
}

bool laws_equal(const DiscreteDistribution& a, const DiscreteDistribution& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k)
        if (std::abs(a.atoms[k] - b.atoms[k]) > 1e-12 || std::abs(a.probs[k] - b.probs[k]) > 1e-12)
            return false;
    return true;
}

bool has_repeated_coordinate(const std::vector<int>& idx) {
    for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = a + 1; b < idx.size(); ++b)
            if (idx[a] == idx[b]) return true;
    return false;
}

std::vector<std::vector<int>> permutations_of(int m) {
    std::vector<int> p(m);
    std::iota(p.begin(), p.end(), 0);
    std::vector<std::vector<int>> out;
    do out.push_back(p);
    while (std::next_permutation(p.begin(), p.end()));
    return out;
}

/// Symmetry defect sup over kernels, permutations and grid points of
/// |h_{i∘σ}(x∘σ) − h_i(x)|, for instances with one law per index.
double symmetry_defect(const UStatInstance& inst) {
    const int m = inst.m(), n = inst.n();
    auto perms = permutations_of(m);
    double worst = 0.0;
    for (std::size_t flat = 0; flat < inst.kernel.index_count(); ++flat) {
        auto idx = unflatten_index(flat, m, n);
        auto shape = table_shape(inst, idx);
        auto st = strides_of(shape);
        const auto& tab = inst.kernel.table(flat);
        for (const auto& perm : perms) {
            std::vector<int> pidx(m);
            for (int k = 0; k < m; ++k) pidx[k] = idx[perm[k]];
            const auto& ptab = inst.kernel.table(flatten_index(pidx, n));
            auto pshape = table_shape(inst, pidx);
            auto pst = strides_of(pshape);
            std::vector<std::size_t> a(m, 0);
            for (std::size_t e = 0; e < tab.size(); ++e) {
                std::size_t pe = 0;
                for (int k = 0; k < m; ++k) pe += a[perm[k]] * pst[k];
                worst = std::max(worst, std::abs(ptab[pe] - tab[e]));
                for (int k = m - 1; k >= 0; --k) {
                    if (++a[k] < shape[k]) break;
                    a[k] = 0;
                }
            }
        }
    }
    return worst;
}

} // namespace

std::vector<std::string> validate_instance(const UStatInstance& inst) {
    std::vector<std::string> out;
    const int m = inst.m(), n = inst.n();
    if (m < 1) out.push_back("m: must be >= 1");
    if (n < 1) out.push_back("n: must be >= 1");
    if (m < 1 || n < 1) return out;

    const std::size_t want_rows = inst.mode == Mode::Decoupled ? static_cast<std::size_t>(m) : 1u;
    if (inst.grid.laws.size() != want_rows) {
        out.push_back("variables: expected " + std::to_string(want_rows) + " row(s), got " +
                      std::to_string(inst.grid.laws.size()));
        return out;
    }
    for (std::size_t j = 0; j < inst.grid.laws.size(); ++j) {
        if (inst.grid.laws[j].size() != static_cast<std::size_t>(n)) {
            out.push_back("variables[" + std::to_string(j) + "]: expected " + std::to_string(n) +
                          " laws");
            return out;
        }
        for (int i = 0; i < n; ++i)
            for (const auto& msg : validate_distribution(inst.grid.laws[j][i]))
                out.push_back("variables[" + std::to_string(j) + "][" + std::to_string(i) +
                              "]: " + msg);
    }
    if (!out.empty()) return out;

    std::size_t want_kernels = 1;
    for (int j = 0; j < m; ++j) want_kernels *= static_cast<std::size_t>(n);
    if (inst.kernel.index_count() != want_kernels) {
        out.push_back("kernels: expected " + std::to_string(want_kernels) + " tables, got " +
                      std::to_string(inst.kernel.index_count()));
        return out;
    }
    for (std::size_t flat = 0; flat < want_kernels; ++flat) {
        auto idx = unflatten_index(flat, m, n);
        std::size_t want = table_size(table_shape(inst, idx));
        const auto& tab = inst.kernel.table(flat);
        std::string where = "kernels[" + std::to_string(flat) + "]";
        if (tab.size() != want) {
            out.push_back(where + ".table: expected " + std::to_string(want) + " entries, got " +
                          std::to_string(tab.size()));
            continue;
        }
        for (std::size_t e = 0; e < tab.size(); ++e)
            if (!std::isfinite(tab[e])) {
                out.push_back(where + ".table[" + std::to_string(e) + "]: not finite");
                break;
            }
    }
    if (!out.empty()) return out;

    if (inst.mode == Mode::Undecoupled) {
        for (std::size_t flat = 0; flat < want_kernels; ++flat) {
            auto idx = unflatten_index(flat, m, n);
            if (!has_repeated_coordinate(idx)) continue;
            const auto& tab = inst.kernel.table(flat);
            if (std::any_of(tab.begin(), tab.end(), [](double v) { return v != 0.0; }))
                out.push_back("kernels[" + std::to_string(flat) +
                              "]: diagonal kernel must vanish in undecoupled mode");
        }
        if (symmetry_defect(inst) > 1e-12)
            out.push_back("kernels: not symmetric under coordinate permutation");
    }

    if (inst.flags.nonnegative && !kernels_nonnegative(inst))
        out.push_back("flags.nonnegative: kernel has a negative entry");
    if (inst.flags.canonical && !is_canonical(inst))
        out.push_back("flags.canonical: degeneracy defect " +
                      std::to_string(max_degeneracy_defect(inst)) + " exceeds 1e-10");
    if (inst.flags.separately_symmetric && !separately_symmetric(inst))
        out.push_back("flags.separately_symmetric: law or kernel breaks the sign symmetry");
    return out;
}

double max_degeneracy_defect(const UStatInstance& inst) {
    const int m = inst.m(), n = inst.n();
    double worst = 0.0;
    for (std::size_t flat = 0; flat < inst.kernel.index_count(); ++flat) {
        auto idx = unflatten_index(flat, m, n);
        auto shape = table_shape(inst, idx);
        auto st = strides_of(shape);
        const auto& tab = inst.kernel.table(flat);
        for (int j = 0; j < m; ++j) {
            const auto& probs = inst.law(j, idx[j]).probs;
            // enumerate positions with coordinate j frozen at 0
            for (std::size_t e = 0; e < tab.size(); ++e) {
                if ((e / st[j]) % shape[j] != 0) continue;
                KahanSum s;
                for (std::size_t b = 0; b < shape[j]; ++b) s.add(probs[b] * tab[e + b * st[j]]);
                worst = std::max(worst, std::abs(s.value()));
            }
        }
    }
    return worst;
}

bool is_canonical(const UStatInstance& inst, double tol) {
    return max_degeneracy_defect(inst) <= tol;
}

UStatInstance hoeffding_projection(const UStatInstance& inst) {
    UStatInstance out = inst;
    const int m = inst.m(), n = inst.n();
    for (std::size_t flat = 0; flat < out.kernel.index_count(); ++flat) {
        auto idx = unflatten_index(flat, m, n);
        auto shape = table_shape(out, idx);
        auto st = strides_of(shape);
        auto& tab = out.kernel.table(flat);
        for (int j = 0; j < m; ++j) { // the (I - E_j) commute; apply in order
            const auto& probs = out.law(j, idx[j]).probs;
            for (std::size_t e = 0; e < tab.size(); ++e) {
                if ((e / st[j]) % shape[j] != 0) continue;
                KahanSum s;
                for (std::size_t b = 0; b < shape[j]; ++b) s.add(probs[b] * tab[e + b * st[j]]);
                const double mean = s.value();
                for (std::size_t b = 0; b < shape[j]; ++b) tab[e + b * st[j]] -= mean;
            }
        }
    }
    out.flags.canonical = true;
    out.flags.nonnegative = kernels_nonnegative(out);
    if (!out.id.empty()) out.id += "-proj";
    return out;
}

UStatInstance undecouple(const UStatInstance& inst) {
    if (inst.mode != Mode::Decoupled)
        throw ApplicabilityError("undecouple: instance already undecoupled");
    const int m = inst.m(), n = inst.n();
    for (int j = 1; j < m; ++j)
        for (int i = 0; i < n; ++i)
            if (!laws_equal(inst.grid.laws[0][i], inst.grid.laws[j][i]))
                throw ApplicabilityError("undecouple: laws differ across slots at i=" +
                                         std::to_string(i + 1));
    UStatInstance out = inst;
    out.grid.laws.resize(1);
    out.mode = Mode::Undecoupled;
    if (symmetry_defect(out) > 1e-12)
        throw ApplicabilityError("undecouple: kernels not symmetric");
    for (std::size_t flat = 0; flat < out.kernel.index_count(); ++flat) {
        auto idx = unflatten_index(flat, m, n);
        if (!has_repeated_coordinate(idx)) continue;
        const auto& tab = out.kernel.table(flat);
        if (std::any_of(tab.begin(), tab.end(), [](double v) { return v != 0.0; }))
            throw ApplicabilityError("undecouple: diagonal kernel not identically zero");
    }
    if (!out.id.empty()) out.id += "-undec";
    return out;
}

UStatInstance decoupled_twin(const UStatInstance& inst) {
    if (inst.mode != Mode::Undecoupled)
        throw ApplicabilityError("decoupled_twin: instance already decoupled");
    UStatInstance out = inst;
    out.grid.laws.assign(static_cast<std::size_t>(inst.m()), inst.grid.laws[0]);
    out.mode = Mode::Decoupled;
    if (!out.id.empty()) out.id += "-dec";
    return out;
}

UStatInstance scale_kernels(const UStatInstance& inst, double c) {
    UStatInstance out = inst;
    for (auto& tab : out.kernel.tables)
        for (auto& v : tab) v *= c;
    if (c < 0.0) out.flags.nonnegative = kernels_nonnegative(out);
    return out;
}

UStatInstance square_kernels(const UStatInstance& inst) {
    UStatInstance out = inst;
    for (auto& tab : out.kernel.tables)
        for (auto& v : tab) v *= v;
    out.flags.nonnegative = true;
    out.flags.canonical = false;
    out.flags.separately_symmetric = false;
    return out;
}

UStatInstance abs_kernels(const UStatInstance& inst) {
    UStatInstance out = inst;
    for (auto& tab : out.kernel.tables)
        for (auto& v : tab) v = std::abs(v);
    out.flags.nonnegative = true;
    out.flags.canonical = false;
    out.flags.separately_symmetric = false;
    return out;
}

bool kernels_nonnegative(const UStatInstance& inst) {
    for (const auto& tab : inst.kernel.tables)
        for (double v : tab)
            if (v < 0.0) return false;
    return true;
}

bool separately_symmetric(const UStatInstance& inst, double tol) {
    const int m = inst.m(), n = inst.n();
    // Each variable's law must be symmetric under negation; record the pairing
    // (index of the negated atom) for every law.
    std::vector<std::vector<std::vector<std::size_t>>> pairing(inst.grid.laws.size());
    for (std::size_t j = 0; j < inst.grid.laws.size(); ++j) {
        pairing[j].resize(n);
        for (int i = 0; i < n; ++i) {
            const auto& d = inst.grid.laws[j][i];
            const std::size_t k = d.size();
            pairing[j][i].resize(k);
            for (std::size_t a = 0; a < k; ++a) {
                std::size_t b = k - 1 - a; // sorted atoms pair from both ends
                if (std::abs(d.atoms[a] + d.atoms[b]) > tol * (1.0 + std::abs(d.atoms[a])) ||
                    std::abs(d.probs[a] - d.probs[b]) > 1e-12)
                    return false;
                pairing[j][i][a] = b;
            }
        }
    }
    // Kernels odd in every coordinate under the pairing involution.
    for (std::size_t flat = 0; flat < inst.kernel.index_count(); ++flat) {
        auto idx = unflatten_index(flat, m, n);
        auto shape = table_shape(inst, idx);
        auto st = strides_of(shape);
        const auto& tab = inst.kernel.table(flat);
        double scale = 1.0;
        for (double v : tab) scale = std::max(scale, std::abs(v));
        for (int j = 0; j < m; ++j) {
            const auto& pr = pairing[inst.mode == Mode::Decoupled ? j : 0][idx[j]];
            for (std::size_t e = 0; e < tab.size(); ++e) {
                std::size_t a = (e / st[j]) % shape[j];
                std::size_t eflip = e + (pr[a] - a) * st[j];
                if (std::abs(tab[eflip] + tab[e]) > tol * scale) return false;
            }
        }
    }
    return true;
}

std::vector<FiniteDistribution> xi_laws(const UStatInstance& inst) {
    if (inst.m() != 1) throw ApplicabilityError("xi_laws: requires m = 1");
    std::vector<FiniteDistribution> out;
    out.reserve(inst.n());
    for (int i = 0; i < inst.n(); ++i) {
        const auto& d = inst.law(0, i);
        const auto& tab = inst.kernel.table(static_cast<std::size_t>(i));
        std::vector<std::pair<double, double>> pairs;
        pairs.reserve(d.size());
        for (std::size_t a = 0; a < d.size(); ++a) pairs.emplace_back(tab[a], d.probs[a]);
        out.push_back(make_finite(std::move(pairs)));
    }
    return out;
}

} // namespace ustat
