#include "ustat/exact.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <unordered_map>

#include "ustat/common.hpp"

namespace ustat {

namespace {

// ------------------------------------------------- joint variable sets ----

/// An ordered list of independent discrete variables to enumerate jointly.
struct VarSet {
    std::vector<const DiscreteDistribution*> laws;
    std::vector<std::size_t> sizes;

    std::uint64_t count() const {
        std::uint64_t c = 1;
        for (std::size_t s : sizes) {
            if (s != 0 && c > UINT64_MAX / s) return UINT64_MAX;
            c *= s;
        }
        return c;
    }
    void push(const DiscreteDistribution* d) {
        laws.push_back(d);
        sizes.push_back(d->size());
    }
};

/// Enumerate all configurations of `vs` in lexicographic order (first
/// variable most significant), calling body(digits, weight).
template <class F>
void enumerate(const VarSet& vs, F&& body) {
    const std::size_t nv = vs.laws.size();
    std::vector<std::size_t> digits(nv, 0);
    for (;;) {
        double w = 1.0;
        for (std::size_t v = 0; v < nv; ++v) w *= vs.laws[v]->probs[digits[v]];
        body(digits, w);
        std::size_t v = nv;
        for (;;) {
            if (v == 0) return;
            --v;
            if (++digits[v] < vs.sizes[v]) break;
            digits[v] = 0;
        }
    }
}

VarSet active_vars(const UStatInstance& inst) {
    VarSet vs;
    if (inst.mode == Mode::Decoupled) {
        for (int j = 0; j < inst.m(); ++j)
            for (int i = 0; i < inst.n(); ++i) vs.push(&inst.grid.laws[j][i]);
    } else {
        for (int i = 0; i < inst.n(); ++i) vs.push(&inst.grid.laws[0][i]);
    }
    return vs;
}

/// Precomputed access plan: coordinate j of this kernel reads config digit
/// var[j] and advances the table offset by digit·stride[j].
struct KernelPlan {
    const std::vector<double>* table;
    std::vector<std::size_t> var;
    std::vector<std::size_t> stride;
};

std::vector<KernelPlan> build_plans(const UStatInstance& inst, bool skip_zero_tables,
                                    std::vector<std::size_t>* kept_flat = nullptr) {
    const int m = inst.m(), n = inst.n();
    std::vector<KernelPlan> plans;
    plans.reserve(inst.kernel.index_count());
    for (std::size_t flat = 0; flat < inst.kernel.index_count(); ++flat) {
        const auto& tab = inst.kernel.table(flat);
        if (skip_zero_tables &&
            std::all_of(tab.begin(), tab.end(), [](double v) { return v == 0.0; }))
            continue;
        auto idx = unflatten_index(flat, m, n);
        auto shape = table_shape(inst, idx);
        KernelPlan p;
        p.table = &tab;
        p.var.resize(m);
        p.stride.resize(m);
        std::size_t st = 1;
        for (int j = m - 1; j >= 0; --j) {
            p.stride[j] = st;
            st *= shape[j];
            p.var[j] = inst.mode == Mode::Decoupled
                           ? static_cast<std::size_t>(j) * n + idx[j]
                           : static_cast<std::size_t>(idx[j]);
        }
        if (kept_flat) kept_flat->push_back(flat);
        plans.push_back(std::move(p));
    }
    return plans;
}

double eval_config(const std::vector<KernelPlan>& plans, const std::vector<std::size_t>& digits) {
    KahanSum u;
    for (const auto& p : plans) {
        std::size_t off = 0;
        for (std::size_t j = 0; j < p.var.size(); ++j) off += digits[p.var[j]] * p.stride[j];
        u.add((*p.table)[off]);
    }
    return u.value();
}

void decode_digits(std::uint64_t cfg, const VarSet& vs, std::vector<std::size_t>& digits) {
    for (std::size_t v = vs.sizes.size(); v-- > 0;) {
        digits[v] = cfg % vs.sizes[v];
        cfg /= vs.sizes[v];
    }
}

void advance(const VarSet& vs, std::vector<std::size_t>& digits) {
    for (std::size_t v = vs.sizes.size(); v-- > 0;) {
        if (++digits[v] < vs.sizes[v]) return;
        digits[v] = 0;
    }
}

using Emit = std::function<void(double, double)>;

/// Parallel mass collection over a VarSet.  body(digits, weight, emit) may
/// emit any number of (value, mass) pairs per configuration.  Chunk
/// boundaries and the merge order are fixed, so any thread count yields the
/// identical distribution.
FiniteDistribution collect_distribution(
    const VarSet& vs, int threads,
    const std::function<void(const std::vector<std::size_t>&, double, const Emit&)>& body) {
    const std::uint64_t total = vs.count();
    constexpr std::uint64_t kChunk = 1u << 14;
    const std::uint64_t nchunks = (total + kChunk - 1) / kChunk;
    std::vector<std::vector<std::pair<double, double>>> chunk_out(nchunks);

    parallel_chunks(nchunks, threads, [&](std::uint64_t c) {
        const std::uint64_t lo = c * kChunk, hi = std::min(total, lo + kChunk);
        std::unordered_map<double, double> acc;
        acc.reserve(512);
        Emit emit = [&](double v, double w) { acc[v] += w; };
        std::vector<std::size_t> digits(vs.sizes.size(), 0);
        decode_digits(lo, vs, digits);
        for (std::uint64_t cfg = lo; cfg < hi; ++cfg) {
            double w = 1.0;
            for (std::size_t v = 0; v < vs.sizes.size(); ++v)
                w *= vs.laws[v]->probs[digits[v]];
            body(digits, w, emit);
            if (cfg + 1 < hi) advance(vs, digits);
        }
        auto& out = chunk_out[c];
        out.assign(acc.begin(), acc.end());
        std::sort(out.begin(), out.end()); // exact keys: unique per chunk
    });

    std::vector<std::pair<double, double>> pairs;
    for (auto& co : chunk_out) {
        pairs.insert(pairs.end(), co.begin(), co.end());
        co.clear();
        co.shrink_to_fit();
    }
    return make_finite(std::move(pairs));
}

void check_cap(std::uint64_t count, const EnumOptions& opts, const char* what) {
    if (count > opts.cap)
        throw EnumerationCapError(std::string(what) + ": " + std::to_string(count) +
                                  " configurations exceed the budget of " +
                                  std::to_string(opts.cap));
}

/// Contract a kernel table over the coordinates in `out_mask` with their
/// laws; result is a table over the remaining coordinates, ascending-j
/// row-major.  Coordinates are peeled highest-j first, so coordinate j sits
/// at axis j when its turn comes.
std::vector<double> contract_table(const UStatInstance& inst, std::size_t flat,
                                   IndexSubset out_mask) {
    const int m = inst.m(), n = inst.n();
    auto idx = unflatten_index(flat, m, n);
    std::vector<std::size_t> cur_shape = table_shape(inst, idx);
    std::vector<double> cur = inst.kernel.table(flat);
    for (int j = m - 1; j >= 0; --j) {
        if (!out_mask.contains(j)) continue;
        const auto& probs = inst.law(j, idx[j]).probs;
        const std::size_t axis_size = cur_shape[j];
        std::size_t inner = 1;
        for (std::size_t k = j + 1; k < cur_shape.size(); ++k) inner *= cur_shape[k];
        std::size_t outer = 1;
        for (int k = 0; k < j; ++k) outer *= cur_shape[k];
        std::vector<double> next(outer * inner);
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t in = 0; in < inner; ++in) {
                KahanSum s;
                for (std::size_t a = 0; a < axis_size; ++a)
                    s.add(probs[a] * cur[(o * axis_size + a) * inner + in]);
                next[o * inner + in] = s.value();
            }
        cur = std::move(next);
        cur_shape.erase(cur_shape.begin() + j);
    }
    return cur;
}

/// Multi-indices of [n]^k in lexicographic order.
std::vector<std::vector<int>> tuples(int k, int n) {
    std::vector<std::vector<int>> out;
    std::vector<int> t(k, 0);
    for (;;) {
        out.push_back(t);
        int pos = k;
        for (;;) {
            if (pos == 0) return out;
            --pos;
            if (++t[pos] < n) break;
            t[pos] = 0;
        }
    }
}

std::vector<int> coords_of(IndexSubset J, int m) {
    std::vector<int> out;
    for (int j = 0; j < m; ++j)
        if (J.contains(j)) out.push_back(j);
    return out;
}

std::vector<int> compose_index(const std::vector<int>& jc_coords, const std::vector<int>& i_jc,
                               const std::vector<int>& j_coords, const std::vector<int>& i_j,
                               int m) {
    std::vector<int> idx(m);
    for (std::size_t k = 0; k < j_coords.size(); ++k) idx[j_coords[k]] = i_j[k];
    for (std::size_t k = 0; k < jc_coords.size(); ++k) idx[jc_coords[k]] = i_jc[k];
    return idx;
}

void require_mixed_ok(const UStatInstance& inst, double p, const char* what) {
    if (inst.mode != Mode::Decoupled && inst.m() != 1)
        throw ApplicabilityError(std::string(what) +
                                 ": mixed moments require a decoupled instance");
    if (!(p > 0.0)) throw ApplicabilityError(std::string(what) + ": p must be positive");
}

double inner_pow(double t, double p, bool absolute) {
    return absolute ? std::pow(std::abs(t), p) : signed_pow(t, p);
}

/// S_{i_J}(x_J) = Σ_{i_{J^c}} (E_{J^c} h_{(i_J, i_{J^c})})(x_J), one dense
/// table per i_J over the atoms of its own J-variables.
std::vector<std::vector<double>> sum_tables(const UStatInstance& inst, IndexSubset J) {
    const int m = inst.m(), n = inst.n();
    auto j_coords = coords_of(J, m);
    auto jc_coords = coords_of(J.complement(m), m);
    auto i_js = tuples(static_cast<int>(j_coords.size()), n);
    auto i_jcs = tuples(static_cast<int>(jc_coords.size()), n);
    std::vector<std::vector<double>> out(i_js.size());
    for (std::size_t a = 0; a < i_js.size(); ++a) {
        std::vector<KahanSum> comp;
        for (const auto& b : i_jcs) {
            auto idx = compose_index(jc_coords, b, j_coords, i_js[a], m);
            auto part = contract_table(inst, flatten_index(idx, n), J.complement(m));
            if (comp.empty()) comp.assign(part.size(), KahanSum{});
            for (std::size_t e = 0; e < part.size(); ++e) comp[e].add(part[e]);
        }
        out[a].resize(comp.size());
        for (std::size_t e = 0; e < comp.size(); ++e) out[a][e] = comp[e].value();
    }
    return out;
}

/// Joint VarSet of all slot variables for coordinates in `coords`, plus a
/// map (j,i) -> position in that VarSet.
VarSet slot_vars(const UStatInstance& inst, const std::vector<int>& coords, int n,
                 std::vector<std::size_t>& var_of) {
    VarSet vs;
    var_of.assign(static_cast<std::size_t>(inst.m()) * n, SIZE_MAX);
    for (int j : coords)
        for (int i = 0; i < n; ++i) {
            var_of[static_cast<std::size_t>(j) * n + i] = vs.laws.size();
            vs.push(&inst.law(j, i));
        }
    return vs;
}

} // namespace

// ----------------------------------------------------------- top level ----

std::uint64_t config_count(const UStatInstance& inst) { return active_vars(inst).count(); }

std::uint64_t chaos_config_count(const UStatInstance& inst) {
    const std::uint64_t base = config_count(inst);
    const int eps = inst.mode == Mode::Decoupled ? inst.m() * inst.n() : inst.n();
    if (eps >= 63) return UINT64_MAX;
    const std::uint64_t signs = 1ULL << eps;
    if (base > UINT64_MAX / signs) return UINT64_MAX;
    return base * signs;
}

FiniteDistribution exact_distribution(const UStatInstance& inst, const EnumOptions& opts) {
    VarSet vs = active_vars(inst);
    check_cap(vs.count(), opts, "exact_distribution");
    auto plans = build_plans(inst, inst.mode == Mode::Undecoupled);
    return collect_distribution(
        vs, opts.threads,
        [&](const std::vector<std::size_t>& digits, double w, const Emit& emit) {
            emit(eval_config(plans, digits), w);
        });
}

double moment(const FiniteDistribution& dist, double p, MomentKind kind) {
    if (!(p > 0.0)) throw ApplicabilityError("moment: p must be positive");
    return kind == MomentKind::Raw ? dist.moment_raw(p) : dist.moment_abs(p);
}

double mixed_moment(const UStatInstance& inst, IndexSubset J, double p, bool absolute) {
    require_mixed_ok(inst, p, "mixed_moment");
    const int m = inst.m(), n = inst.n();
    auto j_coords = coords_of(J, m);
    auto tabs = sum_tables(inst, J);
    auto i_js = tuples(static_cast<int>(j_coords.size()), n);
    KahanSum total;
    for (std::size_t a = 0; a < i_js.size(); ++a) {
        VarSet vs;
        for (std::size_t k = 0; k < j_coords.size(); ++k)
            vs.push(&inst.law(j_coords[k], i_js[a][k]));
        KahanSum term;
        std::size_t e = 0;
        enumerate(vs, [&](const std::vector<std::size_t>&, double w) {
            term.add(w * inner_pow(tabs[a][e], p, absolute));
            ++e;
        });
        total.add(term.value());
    }
    return total.value();
}

double max_mixed_moment(const UStatInstance& inst, IndexSubset J, double p, bool absolute) {
    require_mixed_ok(inst, p, "max_mixed_moment");
    const int m = inst.m(), n = inst.n();
    if (J.bits == 0) return mixed_moment(inst, J, p, absolute);
    auto j_coords = coords_of(J, m);
    auto tabs = sum_tables(inst, J);
    auto i_js = tuples(static_cast<int>(j_coords.size()), n);

    std::vector<std::size_t> var_of;
    VarSet vs = slot_vars(inst, j_coords, n, var_of);
    // per i_J: joint-config digit positions and table strides
    std::vector<std::vector<std::size_t>> strides(i_js.size()), vars(i_js.size());
    for (std::size_t a = 0; a < i_js.size(); ++a) {
        std::size_t st = 1;
        strides[a].resize(j_coords.size());
        vars[a].resize(j_coords.size());
        for (int k = static_cast<int>(j_coords.size()) - 1; k >= 0; --k) {
            strides[a][k] = st;
            st *= inst.law(j_coords[k], i_js[a][k]).size();
            vars[a][k] = var_of[static_cast<std::size_t>(j_coords[k]) * n + i_js[a][k]];
        }
    }
    KahanSum total;
    enumerate(vs, [&](const std::vector<std::size_t>& digits, double w) {
        double best = -HUGE_VAL;
        for (std::size_t a = 0; a < i_js.size(); ++a) {
            std::size_t off = 0;
            for (std::size_t k = 0; k < j_coords.size(); ++k)
                off += digits[vars[a][k]] * strides[a][k];
            best = std::max(best, inner_pow(tabs[a][off], p, absolute));
        }
        total.add(w * best);
    });
    return total.value();
}

double lr_mixed_moment(const UStatInstance& inst, IndexSubset J, double p, double r) {
    require_mixed_ok(inst, p, "lr_mixed_moment");
    if (!(r > 0.0 && r < p)) throw ApplicabilityError("lr_mixed_moment: need 0 < r < p");
    if (!kernels_nonnegative(inst))
        throw ApplicabilityError("lr_mixed_moment: defined for nonnegative kernels");
    const int m = inst.m(), n = inst.n();
    auto j_coords = coords_of(J, m);
    auto jc_coords = coords_of(J.complement(m), m);
    auto i_js = tuples(static_cast<int>(j_coords.size()), n);
    auto i_jcs = tuples(static_cast<int>(jc_coords.size()), n);

    std::vector<std::size_t> ivar_of;
    VarSet inner_vs = slot_vars(inst, jc_coords, n, ivar_of);

    // G_{i_J}[x_J] = E_{J^c} (Σ_{i_{J^c}} h)^r
    std::vector<std::vector<double>> G(i_js.size());
    for (std::size_t a = 0; a < i_js.size(); ++a) {
        std::vector<std::size_t> shape;
        for (std::size_t k = 0; k < j_coords.size(); ++k)
            shape.push_back(inst.law(j_coords[k], i_js[a][k]).size());
        G[a].assign(table_size(shape), 0.0);
        struct Plan {
            const std::vector<double>* tab;
            std::vector<std::size_t> jstride, cvar, cstride;
        };
        std::vector<Plan> plans;
        plans.reserve(i_jcs.size());
        for (const auto& b : i_jcs) {
            auto idx = compose_index(jc_coords, b, j_coords, i_js[a], m);
            auto full_shape = table_shape(inst, idx);
            std::vector<std::size_t> st(m, 1);
            for (int j = m - 2; j >= 0; --j) st[j] = st[j + 1] * full_shape[j + 1];
            Plan pl;
            pl.tab = &inst.kernel.table(flatten_index(idx, n));
            for (std::size_t k = 0; k < j_coords.size(); ++k)
                pl.jstride.push_back(st[j_coords[k]]);
            for (std::size_t k = 0; k < jc_coords.size(); ++k) {
                pl.cvar.push_back(ivar_of[static_cast<std::size_t>(jc_coords[k]) * n + b[k]]);
                pl.cstride.push_back(st[jc_coords[k]]);
            }
            plans.push_back(std::move(pl));
        }
        std::vector<std::size_t> xa(shape.size(), 0);
        for (std::size_t e = 0; e < G[a].size(); ++e) {
            KahanSum inner;
            enumerate(inner_vs, [&](const std::vector<std::size_t>& digits, double w) {
                KahanSum sum;
                for (const auto& pl : plans) {
                    std::size_t off = 0;
                    for (std::size_t k = 0; k < pl.jstride.size(); ++k)
                        off += xa[k] * pl.jstride[k];
                    for (std::size_t k = 0; k < pl.cvar.size(); ++k)
                        off += digits[pl.cvar[k]] * pl.cstride[k];
                    sum.add((*pl.tab)[off]);
                }
                inner.add(w * std::pow(sum.value(), r));
            });
            G[a][e] = inner.value();
            for (std::size_t k = shape.size(); k-- > 0;) {
                if (++xa[k] < shape[k]) break;
                xa[k] = 0;
            }
        }
    }

    std::vector<std::size_t> ovar_of;
    VarSet outer_vs = slot_vars(inst, j_coords, n, ovar_of);
    std::vector<std::vector<std::size_t>> strides(i_js.size()), vars(i_js.size());
    for (std::size_t a = 0; a < i_js.size(); ++a) {
        std::size_t st = 1;
        strides[a].resize(j_coords.size());
        vars[a].resize(j_coords.size());
        for (int k = static_cast<int>(j_coords.size()) - 1; k >= 0; --k) {
            strides[a][k] = st;
            st *= inst.law(j_coords[k], i_js[a][k]).size();
            vars[a][k] = ovar_of[static_cast<std::size_t>(j_coords[k]) * n + i_js[a][k]];
        }
    }
    const double pr = p / r;
    KahanSum total;
    enumerate(outer_vs, [&](const std::vector<std::size_t>& digits, double w) {
        double best = 0.0; // inner expectations are >= 0 here
        for (std::size_t a = 0; a < i_js.size(); ++a) {
            std::size_t off = 0;
            for (std::size_t k = 0; k < j_coords.size(); ++k)
                off += digits[vars[a][k]] * strides[a][k];
            best = std::max(best, std::pow(G[a][off], pr));
        }
        total.add(w * best);
    });
    return total.value();
}

FiniteDistribution chaos_distribution(const UStatInstance& inst, const EnumOptions& opts) {
    check_cap(chaos_config_count(inst), opts, "chaos_distribution");
    VarSet vs = active_vars(inst);
    const int m = inst.m(), n = inst.n();
    std::vector<std::size_t> kept;
    auto plans = build_plans(inst, inst.mode == Mode::Undecoupled, &kept);
    const int neps = inst.mode == Mode::Decoupled ? m * n : n;
    const std::uint64_t signs = 1ULL << neps;
    const double sign_w = 1.0 / static_cast<double>(signs);

    // which ε bits multiply each kept kernel
    std::vector<std::vector<int>> eps_bits(plans.size());
    for (std::size_t pi = 0; pi < kept.size(); ++pi) {
        auto idx = unflatten_index(kept[pi], m, n);
        for (int j = 0; j < m; ++j)
            eps_bits[pi].push_back(inst.mode == Mode::Decoupled ? j * n + idx[j] : idx[j]);
    }
    return collect_distribution(
        vs, opts.threads,
        [&](const std::vector<std::size_t>& digits, double w, const Emit& emit) {
            std::vector<double> a(plans.size());
            for (std::size_t pi = 0; pi < plans.size(); ++pi) {
                const auto& p = plans[pi];
                std::size_t off = 0;
                for (std::size_t j = 0; j < p.var.size(); ++j)
                    off += digits[p.var[j]] * p.stride[j];
                a[pi] = (*p.table)[off];
            }
            for (std::uint64_t sgn = 0; sgn < signs; ++sgn) {
                KahanSum u;
                for (std::size_t pi = 0; pi < plans.size(); ++pi) {
                    int par = 0;
                    for (int b : eps_bits[pi]) par ^= static_cast<int>((sgn >> b) & 1u);
                    u.add(par ? -a[pi] : a[pi]);
                }
                emit(u.value(), w * sign_w);
            }
        });
}

double chaos_moment(const UStatInstance& inst, double p, const EnumOptions& opts) {
    return moment(chaos_distribution(inst, opts), p, MomentKind::Absolute);
}

EmpiricalSummary empirical_sup_moment(const ScoreClass& sc, double p, const EnumOptions& opts) {
    if (!(p >= 1.0)) throw ApplicabilityError("empirical_sup_moment: p must be >= 1");
    if (sc.scores.empty()) throw ApplicabilityError("empirical_sup_moment: empty class");
    VarSet vs;
    for (const auto& d : sc.vars) vs.push(&d);
    check_cap(vs.count(), opts, "empirical_sup_moment");
    for (const auto& f : sc.scores)
        for (int i = 0; i < sc.k(); ++i) {
            KahanSum mu;
            for (std::size_t a = 0; a < sc.vars[i].size(); ++a)
                mu.add(sc.vars[i].probs[a] * f[i][a]);
            if (std::abs(mu.value()) > 1e-10)
                throw ApplicabilityError("empirical_sup_moment: class member is not centered");
        }
    EmpiricalSummary out;
    for (const auto& f : sc.scores) {
        KahanSum v;
        for (int i = 0; i < sc.k(); ++i) {
            KahanSum s;
            for (std::size_t a = 0; a < sc.vars[i].size(); ++a)
                s.add(sc.vars[i].probs[a] * f[i][a] * f[i][a]);
            v.add(s.value());
        }
        out.sigma_sq = std::max(out.sigma_sq, v.value());
        for (int i = 0; i < sc.k(); ++i)
            for (double val : f[i]) out.a_sup = std::max(out.a_sup, std::abs(val));
    }
    out.law = collect_distribution(
        vs, opts.threads,
        [&](const std::vector<std::size_t>& digits, double w, const Emit& emit) {
            double best = -HUGE_VAL;
            for (const auto& f : sc.scores) {
                KahanSum s;
                for (int i = 0; i < sc.k(); ++i) s.add(f[i][digits[i]]);
                best = std::max(best, s.value());
            }
            emit(best, w);
        });
    out.moment_p = out.law.moment_abs(p);
    out.mean_abs = out.law.moment_abs(1.0);
    out.envelope_moment = empirical_envelope_moment(sc, p);
    return out;
}

double empirical_envelope_moment(const ScoreClass& sc, double p) {
    std::vector<FiniteDistribution> env;
    env.reserve(sc.vars.size());
    for (int i = 0; i < sc.k(); ++i) {
        std::vector<std::pair<double, double>> pairs;
        for (std::size_t a = 0; a < sc.vars[i].size(); ++a) {
            double best = 0.0;
            for (const auto& f : sc.scores) best = std::max(best, std::abs(f[i][a]));
            pairs.emplace_back(best, sc.vars[i].probs[a]);
        }
        env.push_back(make_finite(std::move(pairs)));
    }
    return expected_max_power(env, p);
}

} // namespace ustat
