#include "doctest.h"

#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "ustat/common.hpp"
#include "ustat/exact.hpp"
#include "ustat/generate.hpp"

using namespace ustat;

namespace {

DiscreteDistribution rademacher() { return make_distribution({-1.0, 1.0}, {0.5, 0.5}); }
DiscreteDistribution bern_half() { return make_distribution({0.0, 1.0}, {0.5, 0.5}); }

UStatInstance pair_instance(const DiscreteDistribution& dx, const DiscreteDistribution& dy,
                            std::vector<double> table) {
    UStatInstance inst;
    inst.grid.m = 2;
    inst.grid.n = 1;
    inst.grid.laws = {{dx}, {dy}};
    inst.kernel.m = 2;
    inst.kernel.n = 1;
    inst.kernel.tables = {std::move(table)};
    return inst;
}

/// Straight-line reference enumeration: recursive over variables, long
/// double accumulation, plain map keyed by the summed value.  Shares no
/// code with exact_distribution.
std::map<double, double> reference_law(const UStatInstance& inst) {
    std::vector<const DiscreteDistribution*> vars;
    const int m = inst.m(), n = inst.n();
    if (inst.mode == Mode::Decoupled) {
        for (int j = 0; j < m; ++j)
            for (int i = 0; i < n; ++i) vars.push_back(&inst.grid.laws[j][i]);
    } else {
        for (int i = 0; i < n; ++i) vars.push_back(&inst.grid.laws[0][i]);
    }
    std::map<double, double> law;
    std::vector<std::size_t> cfg(vars.size(), 0);
    std::function<void(std::size_t, double)> rec = [&](std::size_t v, double w) {
        if (v == vars.size()) {
            long double s = 0.0L;
            std::vector<int> idx(m, 0);
            while (true) {
                bool diag = false;
                if (inst.mode == Mode::Undecoupled)
                    for (int a = 0; a < m && !diag; ++a)
                        for (int b = a + 1; b < m; ++b)
                            if (idx[a] == idx[b]) { diag = true; break; }
                if (!diag) {
                    const auto& tab = inst.kernel.table(flatten_index(idx, n));
                    std::size_t off = 0;
                    for (int j = 0; j < m; ++j) {
                        int var = inst.mode == Mode::Decoupled ? j * n + idx[j] : idx[j];
                        off = off * vars[var]->size() + cfg[var];
                    }
                    s += tab[off];
                }
                int j = m - 1;
                while (j >= 0 && ++idx[j] == n) idx[j--] = 0;
                if (j < 0) break;
            }
            law[static_cast<double>(s)] += w;
            return;
        }
        for (std::size_t a = 0; a < vars[v]->size(); ++a) {
            cfg[v] = a;
            rec(v + 1, w * vars[v]->probs[a]);
        }
    };
    rec(0, 1.0);
    return law;
}

void compare_to_reference(const UStatInstance& inst) {
    auto lib = exact_distribution(inst);
    auto ref = reference_law(inst);
    // merge reference keys that sit within the library's merge tolerance
    std::vector<std::pair<double, double>> merged;
    for (auto [v, p] : ref) {
        if (!merged.empty() && std::abs(v - merged.back().first) <= 1e-12)
            merged.back().second += p;
        else
            merged.emplace_back(v, p);
    }
    REQUIRE(lib.size() == merged.size());
    for (std::size_t k = 0; k < merged.size(); ++k) {
        CHECK(lib.values[k] == doctest::Approx(merged[k].first).epsilon(1e-12));
        CHECK(lib.probs[k] == doctest::Approx(merged[k].second).epsilon(1e-12));
    }
}

} // namespace

TEST_CASE("two-term rademacher product sum has the closed-form law") {
    // U = X1 Y1 + X2 Y2, everything Rademacher
    UStatInstance inst;
    inst.grid.m = 2;
    inst.grid.n = 2;
    inst.grid.laws = {{rademacher(), rademacher()}, {rademacher(), rademacher()}};
    inst.kernel.m = 2;
    inst.kernel.n = 2;
    inst.kernel.tables.resize(4, {0, 0, 0, 0});
    inst.kernel.tables[flatten_index({0, 0}, 2)] = {1.0, -1.0, -1.0, 1.0};
    inst.kernel.tables[flatten_index({1, 1}, 2)] = {1.0, -1.0, -1.0, 1.0};

    auto law = exact_distribution(inst);
    REQUIRE(law.size() == 3);
    CHECK(law.values[0] == -2.0);
    CHECK(law.values[1] == 0.0);
    CHECK(law.values[2] == 2.0);
    CHECK(law.probs[0] == doctest::Approx(0.25));
    CHECK(law.probs[1] == doctest::Approx(0.5));
    CHECK(law.probs[2] == doctest::Approx(0.25));
    CHECK(moment(law, 1.0, MomentKind::Absolute) == doctest::Approx(1.0));
    CHECK(moment(law, 2.0, MomentKind::Raw) == doctest::Approx(2.0));
}

TEST_CASE("exact distribution agrees with a straight-line reference") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        compare_to_reference(generate_instance("nonneg", 1, 3, 3, seed));
        compare_to_reference(generate_instance("nonneg", 2, 2, 2, seed));
        compare_to_reference(generate_instance("nonneg", 2, 2, 3, seed));
        compare_to_reference(generate_instance("canonical", 3, 2, 2, seed));
        compare_to_reference(generate_instance("symmetric-undecoupled", 2, 3, 2, seed));
    }
}

TEST_CASE("mixed conditional moments: frozen pair values") {
    // h = xy over two Bernoulli(1/2), single index pair
    auto inst = pair_instance(bern_half(), bern_half(), {0.0, 0.0, 0.0, 1.0});
    // E h = 1/4
    CHECK(mixed_moment(inst, IndexSubset{0}, 2.0) == doctest::Approx(1.0 / 16.0));
    // Sum_i E_1 (E_2 h)^2 = E_x (x/2)^2 = 1/8
    CHECK(mixed_moment(inst, IndexSubset{0b01}, 2.0) == doctest::Approx(1.0 / 8.0));
    CHECK(mixed_moment(inst, IndexSubset{0b10}, 2.0) == doctest::Approx(1.0 / 8.0));
    // Full J: E h^2 = 1/4
    CHECK(mixed_moment(inst, IndexSubset{0b11}, 2.0) == doctest::Approx(1.0 / 4.0));
    // max over a single index coincides with the plain conditional moment
    CHECK(max_mixed_moment(inst, IndexSubset{0b01}, 2.0) == doctest::Approx(1.0 / 8.0));
    CHECK(max_mixed_moment(inst, IndexSubset{0}, 2.0) == doctest::Approx(1.0 / 16.0));
}

TEST_CASE("max form reduces to the law of the pointwise maximum") {
    // m=1, h_i(x) = x over two Bernoulli(1/2): E max(xi_1, xi_2)^p = 3/4
    UStatInstance inst;
    inst.grid.m = 1;
    inst.grid.n = 2;
    inst.grid.laws = {{bern_half(), bern_half()}};
    inst.kernel.m = 1;
    inst.kernel.n = 2;
    inst.kernel.tables = {{0.0, 1.0}, {0.0, 1.0}};
    CHECK(max_mixed_moment(inst, IndexSubset{0b1}, 1.0) == doctest::Approx(0.75));
    CHECK(max_mixed_moment(inst, IndexSubset{0b1}, 3.0) == doctest::Approx(0.75));
    CHECK(mixed_moment(inst, IndexSubset{0b1}, 3.0) == doctest::Approx(1.0));
    // lr with J = {1}: E max_i h_i^{p} as well (inner r-mean collapses)
    CHECK(lr_mixed_moment(inst, IndexSubset{0b1}, 2.0, 1.0) == doctest::Approx(0.75));
}

TEST_CASE("negative inner sums need the absolute variant for fractional p") {
    auto inst = pair_instance(rademacher(), rademacher(), {1.0, -1.0, -1.0, 1.0});
    CHECK_THROWS_AS(mixed_moment(inst, IndexSubset{0b11}, 2.5), std::domain_error);
    CHECK(mixed_moment(inst, IndexSubset{0b11}, 2.5, true) == doctest::Approx(1.0));
    CHECK(mixed_moment(inst, IndexSubset{0b11}, 2.0) == doctest::Approx(1.0));
}

TEST_CASE("kernel scaling moves every moment by c^p") {
    auto inst = generate_instance("nonneg", 2, 2, 2, 5);
    const double c = 2.5, p = 3.0;
    auto scaled = scale_kernels(inst, c);
    CHECK(moment(exact_distribution(scaled), p, MomentKind::Absolute) ==
          doctest::Approx(std::pow(c, p) * moment(exact_distribution(inst), p, MomentKind::Absolute))
              .epsilon(1e-9));
    for (auto J : all_subsets(2)) {
        CHECK(mixed_moment(scaled, J, p) ==
              doctest::Approx(std::pow(c, p) * mixed_moment(inst, J, p)).epsilon(1e-9));
        CHECK(max_mixed_moment(scaled, J, p) ==
              doctest::Approx(std::pow(c, p) * max_mixed_moment(inst, J, p)).epsilon(1e-9));
    }
    CHECK(lr_mixed_moment(scaled, IndexSubset{0b01}, p, 1.5) ==
          doctest::Approx(std::pow(c, p) * lr_mixed_moment(inst, IndexSubset{0b01}, p, 1.5))
              .epsilon(1e-9));
}

TEST_CASE("norm monotonicity along p") {
    auto law = exact_distribution(generate_instance("canonical", 2, 2, 3, 8));
    double n1 = std::pow(moment(law, 1.5, MomentKind::Absolute), 1.0 / 1.5);
    double n2 = std::pow(moment(law, 2.0, MomentKind::Absolute), 1.0 / 2.0);
    double n3 = std::pow(moment(law, 4.0, MomentKind::Absolute), 1.0 / 4.0);
    CHECK(n1 <= n2 * (1 + 1e-12));
    CHECK(n2 <= n3 * (1 + 1e-12));
}

TEST_CASE("relabeling indices inside one slot leaves the law unchanged") {
    auto inst = generate_instance("nonneg", 2, 2, 3, 13);
    auto perm = inst;
    std::swap(perm.grid.laws[0][0], perm.grid.laws[0][1]);
    for (int j = 0; j < 2; ++j)
        std::swap(perm.kernel.tables[flatten_index({0, j}, 2)],
                  perm.kernel.tables[flatten_index({1, j}, 2)]);
    auto a = exact_distribution(inst);
    auto b = exact_distribution(perm);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a.values[k] == doctest::Approx(b.values[k]).epsilon(1e-12));
        CHECK(a.probs[k] == doctest::Approx(b.probs[k]).epsilon(1e-12));
    }
}

TEST_CASE("thread count does not change the result bits") {
    auto inst = generate_instance("nonneg", 2, 4, 4, 21); // 4^8 = 65536 configs
    EnumOptions one, four;
    four.threads = 4;
    auto a = exact_distribution(inst, one);
    auto b = exact_distribution(inst, four);
    REQUIRE(a.size() == b.size());
    CHECK(a.values == b.values);
    CHECK(a.probs == b.probs);
}

TEST_CASE("enumeration cap guards runaway requests") {
    auto inst = generate_instance("nonneg", 2, 4, 4, 2);
    EnumOptions tiny;
    tiny.cap = 1000;
    CHECK(config_count(inst) == 65536);
    CHECK_THROWS_AS(exact_distribution(inst, tiny), EnumerationCapError);
}

TEST_CASE("sign-randomized law matches the plain law for odd symmetric kernels") {
    auto inst = pair_instance(rademacher(), rademacher(), {1.0, -1.0, -1.0, 1.0});
    auto plain = exact_distribution(inst);
    auto rand = chaos_distribution(inst);
    REQUIRE(plain.size() == rand.size());
    for (std::size_t k = 0; k < plain.size(); ++k) {
        CHECK(plain.values[k] == doctest::Approx(rand.values[k]).epsilon(1e-12));
        CHECK(plain.probs[k] == doctest::Approx(rand.probs[k]).epsilon(1e-12));
    }
    CHECK(chaos_moment(inst, 2.0) == doctest::Approx(1.0));

    auto big = generate_instance("gaussian-chaos-analog", 2, 2, 2, 31);
    CHECK(chaos_moment(big, 3.0) ==
          doctest::Approx(moment(exact_distribution(big), 3.0, MomentKind::Absolute))
              .epsilon(1e-9));
}

TEST_CASE("supremum over a finite score class") {
    // F = {z, -z} over one Rademacher: S = |Z| = 1 a.s.
    ScoreClass sc;
    sc.vars = {rademacher()};
    sc.scores = {{{-1.0, 1.0}}, {{1.0, -1.0}}};
    auto s = empirical_sup_moment(sc, 2.0);
    CHECK(s.moment_p == doctest::Approx(1.0));
    CHECK(s.mean_abs == doctest::Approx(1.0));
    CHECK(s.sigma_sq == doctest::Approx(1.0));
    CHECK(s.a_sup == 1.0);
    CHECK(s.envelope_moment == doctest::Approx(1.0));

    // F = {0}: everything vanishes
    ScoreClass zero;
    zero.vars = {rademacher()};
    zero.scores = {{{0.0, 0.0}}};
    auto z = empirical_sup_moment(zero, 2.0);
    CHECK(z.moment_p == 0.0);
    CHECK(z.sigma_sq == 0.0);

    // F = {z} over two Rademachers: S = Z1 + Z2, E S^2 = 2
    ScoreClass two;
    two.vars = {rademacher(), rademacher()};
    two.scores = {{{-1.0, 1.0}, {-1.0, 1.0}}};
    auto t = empirical_sup_moment(two, 2.0);
    CHECK(t.moment_p == doctest::Approx(2.0));
    CHECK(t.sigma_sq == doctest::Approx(2.0));

    // non-centered member rejected
    ScoreClass off;
    off.vars = {bern_half()};
    off.scores = {{{0.0, 1.0}}};
    CHECK_THROWS_AS(empirical_sup_moment(off, 2.0), ApplicabilityError);
}
