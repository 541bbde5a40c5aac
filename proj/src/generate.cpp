#include "ustat/generate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ustat/common.hpp"

namespace ustat {

namespace {

double next_u01(std::mt19937_64& rng) { return u01_from_bits(rng()); }

DiscreteDistribution law_from_rng(int atoms, double lo, double hi, std::mt19937_64& rng) {
    // rejection until atoms are separated; probabilities clamped away from 0
    std::vector<double> a(atoms);
    const double minsep = 0.05 * (hi - lo);
    for (;;) {
        for (auto& v : a) v = lo + (hi - lo) * next_u01(rng);
        std::sort(a.begin(), a.end());
        bool ok = true;
        for (int k = 0; k + 1 < atoms; ++k)
            if (a[k + 1] - a[k] < minsep) ok = false;
        if (ok) break;
    }
    std::vector<double> p(atoms);
    double s = 0.0;
    for (auto& v : p) {
        v = 0.05 + next_u01(rng);
        s += v;
    }
    for (auto& v : p) v /= s;
    // exact unit mass: fold the rounding residue into the largest weight
    double resid = 1.0 - neumaier_total(p);
    *std::max_element(p.begin(), p.end()) += resid;
    return make_distribution(std::move(a), std::move(p));
}

DiscreteDistribution rademacher_law() { return make_distribution({-1.0, 1.0}, {0.5, 0.5}); }

std::vector<std::vector<DiscreteDistribution>> generic_grid(int m, int n, int atoms, double lo,
                                                            double hi, std::mt19937_64& rng) {
    std::vector<std::vector<DiscreteDistribution>> laws(m);
    for (int j = 0; j < m; ++j) {
        laws[j].reserve(n);
        for (int i = 0; i < n; ++i) laws[j].push_back(law_from_rng(atoms, lo, hi, rng));
    }
    return laws;
}

void fill_tables(UStatInstance& inst, std::mt19937_64& rng, double lo, double hi) {
    const int m = inst.m(), n = inst.n();
    std::size_t count = 1;
    for (int j = 0; j < m; ++j) count *= static_cast<std::size_t>(n);
    inst.kernel.m = m;
    inst.kernel.n = n;
    inst.kernel.tables.resize(count);
    for (std::size_t flat = 0; flat < count; ++flat) {
        auto idx = unflatten_index(flat, m, n);
        auto& tab = inst.kernel.tables[flat];
        tab.resize(table_size(table_shape(inst, idx)));
        for (auto& v : tab) v = lo + (hi - lo) * next_u01(rng);
    }
}

UStatInstance gen_nonneg(int m, int n, int atoms, std::mt19937_64& rng) {
    UStatInstance inst;
    inst.mode = Mode::Decoupled;
    inst.grid.m = m;
    inst.grid.n = n;
    inst.grid.laws = generic_grid(m, n, atoms, -1.0, 1.0, rng);
    fill_tables(inst, rng, 0.0, 1.0);
    inst.flags.nonnegative = true;
    return inst;
}

UStatInstance gen_canonical(int m, int n, int atoms, std::mt19937_64& rng) {
    UStatInstance inst;
    inst.mode = Mode::Decoupled;
    inst.grid.m = m;
    inst.grid.n = n;
    inst.grid.laws = generic_grid(m, n, atoms, -1.0, 1.0, rng);
    fill_tables(inst, rng, -1.0, 1.0);
    inst = hoeffding_projection(inst);
    return inst;
}

UStatInstance gen_symmetric_undecoupled(int m, int n, int atoms, std::mt19937_64& rng) {
    // one sequence of laws; symmetric zero-diagonal kernels built by filling
    // strictly increasing multi-indices and copying along permutation orbits
    UStatInstance inst;
    inst.mode = Mode::Undecoupled;
    inst.grid.m = m;
    inst.grid.n = n;
    inst.grid.laws.resize(1);
    for (int i = 0; i < n; ++i) inst.grid.laws[0].push_back(law_from_rng(atoms, -1.0, 1.0, rng));

    std::size_t count = 1;
    for (int j = 0; j < m; ++j) count *= static_cast<std::size_t>(n);
    inst.kernel.m = m;
    inst.kernel.n = n;
    inst.kernel.tables.assign(count, {});
    for (std::size_t flat = 0; flat < count; ++flat) {
        auto idx = unflatten_index(flat, m, n);
        auto& tab = inst.kernel.tables[flat];
        tab.assign(table_size(table_shape(inst, idx)), 0.0);
    }
    // strides helper for this instance's tables
    auto strides = [&](const std::vector<int>& idx) {
        auto shape = table_shape(inst, idx);
        std::vector<std::size_t> st(shape.size(), 1);
        for (int j = static_cast<int>(shape.size()) - 2; j >= 0; --j)
            st[j] = st[j + 1] * shape[j + 1];
        return std::pair{shape, st};
    };
    std::vector<int> perm(m);
    std::vector<int> idx(m);
    // iterate strictly increasing multi-indices
    std::function<void(int, int)> rec = [&](int pos, int start) {
        if (pos == m) {
            auto [shape, st] = strides(idx);
            std::size_t flat = flatten_index(idx, n);
            auto& tab = inst.kernel.tables[flat];
            for (auto& v : tab) v = 2.0 * next_u01(rng) - 1.0;
            // copy to every permutation of (idx, axes)
            std::iota(perm.begin(), perm.end(), 0);
            while (std::next_permutation(perm.begin(), perm.end())) {
                std::vector<int> pidx(m);
                for (int k = 0; k < m; ++k) pidx[k] = idx[perm[k]];
                auto [pshape, pst] = strides(pidx);
                auto& ptab = inst.kernel.tables[flatten_index(pidx, n)];
                std::vector<std::size_t> a(m, 0);
                for (std::size_t e = 0; e < tab.size(); ++e) {
                    std::size_t pe = 0;
                    for (int k = 0; k < m; ++k) pe += a[perm[k]] * pst[k];
                    ptab[pe] = tab[e];
                    for (int k = m - 1; k >= 0; --k) {
                        if (++a[k] < shape[k]) break;
                        a[k] = 0;
                    }
                }
            }
            return;
        }
        for (int i = start; i < n; ++i) {
            idx[pos] = i;
            rec(pos + 1, i + 1);
        }
    };
    if (n >= m) rec(0, 0);
    return inst;
}

UStatInstance gen_chaos_analog(int n, std::mt19937_64& rng) {
    UStatInstance inst;
    inst.mode = Mode::Decoupled;
    inst.grid.m = 2;
    inst.grid.n = n;
    inst.grid.laws.assign(2, std::vector<DiscreteDistribution>(n, rademacher_law()));
    inst.kernel.m = 2;
    inst.kernel.n = n;
    inst.kernel.tables.resize(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double c = 2.0 * next_u01(rng) - 1.0;
            // table over (x,y) in {-1,+1}^2, row-major in x then y
            inst.kernel.tables[static_cast<std::size_t>(i) * n + j] = {c, -c, -c, c};
        }
    inst.flags.canonical = true;
    inst.flags.separately_symmetric = true;
    return inst;
}

UStatInstance gen_bernoulli_product(int n) {
    // coordinates distributed as ξ - 1/n with ξ ~ Bernoulli(1/n)
    UStatInstance inst;
    inst.mode = Mode::Decoupled;
    inst.grid.m = 2;
    inst.grid.n = n;
    const double q = 1.0 / n;
    auto law = make_distribution({-q, 1.0 - q}, {1.0 - q, q});
    inst.grid.laws.assign(2, std::vector<DiscreteDistribution>(n, law));
    inst.kernel.m = 2;
    inst.kernel.n = n;
    const double a = -q, b = 1.0 - q;
    inst.kernel.tables.assign(static_cast<std::size_t>(n) * n,
                              {a * a, a * b, b * a, b * b});
    inst.flags.canonical = true;
    return inst;
}

} // namespace

UStatInstance generate_instance(const std::string& family, int m, int n, int atoms,
                                std::uint64_t seed) {
    if (n < 1) throw ApplicabilityError("generate_instance: n must be >= 1");
    std::mt19937_64 rng(splitmix64(seed));
    UStatInstance inst;
    if (family == "nonneg" || family == "canonical" || family == "symmetric-undecoupled") {
        if (m < 1 || m > 4) throw ApplicabilityError("generate_instance: m out of range");
        if (atoms < 2) throw ApplicabilityError("generate_instance: need at least 2 atoms");
        if (family == "nonneg")
            inst = gen_nonneg(m, n, atoms, rng);
        else if (family == "canonical")
            inst = gen_canonical(m, n, atoms, rng);
        else {
            if (n < m)
                throw ApplicabilityError("generate_instance: symmetric family needs n >= m");
            inst = gen_symmetric_undecoupled(m, n, atoms, rng);
        }
    } else if (family == "gaussian-chaos-analog") {
        if (m != 2) throw ApplicabilityError("generate_instance: chaos family has m = 2");
        inst = gen_chaos_analog(n, rng);
    } else if (family == "bernoulli-product") {
        if (m != 2) throw ApplicabilityError("generate_instance: product family has m = 2");
        inst = gen_bernoulli_product(n);
    } else {
        throw ApplicabilityError("generate_instance: unknown family '" + family + "'");
    }
    inst.id = family + "-m" + std::to_string(inst.m()) + "-n" + std::to_string(n) + "-a" +
              std::to_string(atoms) + "-s" + std::to_string(seed);
    return inst;
}

DiscreteDistribution random_law(int atoms, double lo, double hi, std::uint64_t seed) {
    std::mt19937_64 rng(splitmix64(seed));
    return law_from_rng(atoms, lo, hi, rng);
}

ScoreClass generate_score_class(int k, int class_size, std::uint64_t seed) {
    if (k < 1 || class_size < 1)
        throw ApplicabilityError("generate_score_class: need k >= 1 and class_size >= 1");
    std::mt19937_64 rng(splitmix64(seed ^ 0x5c0755c075ULL));
    ScoreClass sc;
    sc.id = "emp-k" + std::to_string(k) + "-f" + std::to_string(class_size) + "-s" +
            std::to_string(seed);
    for (int i = 0; i < k; ++i) sc.vars.push_back(law_from_rng(2, -1.0, 1.0, rng));
    sc.scores.resize(class_size);
    for (auto& f : sc.scores) {
        f.resize(k);
        for (int i = 0; i < k; ++i) {
            auto& row = f[i];
            row.resize(sc.vars[i].size());
            for (auto& v : row) v = 2.0 * next_u01(rng) - 1.0;
            KahanSum mean;
            for (std::size_t a = 0; a < row.size(); ++a) mean.add(sc.vars[i].probs[a] * row[a]);
            for (auto& v : row) v -= mean.value();
        }
    }
    return sc;
}

} // namespace ustat
