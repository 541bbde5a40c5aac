#include "doctest.h"

#include <cmath>

#include "ustat/common.hpp"
#include "ustat/generate.hpp"
#include "ustat/instance.hpp"

using namespace ustat;

namespace {

DiscreteDistribution rademacher() { return make_distribution({-1.0, 1.0}, {0.5, 0.5}); }
DiscreteDistribution bern_half() { return make_distribution({0.0, 1.0}, {0.5, 0.5}); }

/// m=2, n=1 decoupled instance with one 2x2 kernel table (row = first slot).
UStatInstance pair_instance(const DiscreteDistribution& dx, const DiscreteDistribution& dy,
                            std::vector<double> table) {
    UStatInstance inst;
    inst.id = "pair";
    inst.grid.m = 2;
    inst.grid.n = 1;
    inst.grid.laws = {{dx}, {dy}};
    inst.kernel.m = 2;
    inst.kernel.n = 1;
    inst.kernel.tables = {std::move(table)};
    return inst;
}

} // namespace

TEST_CASE("index subsets enumerate and print") {
    auto subs = all_subsets(3);
    REQUIRE(subs.size() == 8);
    CHECK(subs[0].count() == 0);
    CHECK(subs[7].count() == 3);
    IndexSubset s{0b101};
    CHECK(s.contains(0));
    CHECK_FALSE(s.contains(1));
    CHECK(s.contains(2));
    CHECK(s.to_string(3) == "{1,3}");
    CHECK(s.complement(3).bits == 0b010);
    CHECK(IndexSubset{0}.to_string(3) == "{}");
}

TEST_CASE("multi-index flattening puts coordinate 1 most significant") {
    CHECK(flatten_index({1, 2}, 3) == 5);
    CHECK(flatten_index({0, 0}, 3) == 0);
    auto idx = unflatten_index(5, 2, 3);
    CHECK(idx == std::vector<int>{1, 2});
    for (std::size_t f = 0; f < 9; ++f)
        CHECK(flatten_index(unflatten_index(f, 2, 3), 3) == f);
}

TEST_CASE("validation reports paths for malformed pieces") {
    auto inst = pair_instance(rademacher(), rademacher(), {1.0, -1.0, -1.0, 1.0});
    CHECK(validate_instance(inst).empty());

    SUBCASE("bad table size") {
        inst.kernel.tables[0].pop_back();
        auto errs = validate_instance(inst);
        REQUIRE(!errs.empty());
        CHECK(errs[0].find("kernels[0]") != std::string::npos);
    }
    SUBCASE("missing kernel table") {
        inst.kernel.tables.clear();
        CHECK(!validate_instance(inst).empty());
    }
    SUBCASE("wrong flag") {
        inst.flags.nonnegative = true; // table has negative entries
        CHECK(!validate_instance(inst).empty());
    }
    SUBCASE("law grid shape mismatch") {
        inst.grid.laws.pop_back();
        CHECK(!validate_instance(inst).empty());
    }
}

TEST_CASE("canonicality and the degeneracy projection") {
    auto xy = pair_instance(rademacher(), rademacher(), {1.0, -1.0, -1.0, 1.0});
    CHECK(is_canonical(xy));
    CHECK(max_degeneracy_defect(xy) == 0.0);

    // h = xy + x has a nonvanishing second-coordinate mean
    auto skew = pair_instance(rademacher(), rademacher(), {0.0, -2.0, 0.0, 2.0});
    CHECK_FALSE(is_canonical(skew));
    auto proj = hoeffding_projection(skew);
    CHECK(is_canonical(proj));
    CHECK(proj.flags.canonical);
    // projection of xy + x is exactly xy
    CHECK(proj.kernel.table(0) == std::vector<double>{1.0, -1.0, -1.0, 1.0});
    // idempotent
    auto proj2 = hoeffding_projection(proj);
    CHECK(proj2.kernel.table(0) == proj.kernel.table(0));
}

TEST_CASE("kernel transforms track flags") {
    auto xy = pair_instance(rademacher(), rademacher(), {1.0, -1.0, -1.0, 1.0});
    xy.flags.canonical = true;

    auto sq = square_kernels(xy);
    CHECK(sq.flags.nonnegative);
    CHECK_FALSE(sq.flags.canonical);
    CHECK(sq.kernel.table(0) == std::vector<double>{1.0, 1.0, 1.0, 1.0});

    auto sc = scale_kernels(xy, -2.0);
    CHECK(sc.kernel.table(0)[0] == -2.0);
    auto ab = abs_kernels(sc);
    CHECK(kernels_nonnegative(ab));
    CHECK_FALSE(kernels_nonnegative(sc));
}

TEST_CASE("separate symmetry requires symmetric laws and odd kernels") {
    CHECK(separately_symmetric(pair_instance(rademacher(), rademacher(),
                                             {1.0, -1.0, -1.0, 1.0})));
    // x^2 y is even in the first coordinate
    CHECK_FALSE(separately_symmetric(pair_instance(rademacher(), rademacher(),
                                                   {-1.0, 1.0, -1.0, 1.0})));
    // asymmetric law
    CHECK_FALSE(separately_symmetric(pair_instance(bern_half(), rademacher(),
                                                   {1.0, -1.0, -1.0, 1.0})));
}

TEST_CASE("undecouple and decoupled_twin round-trip") {
    // symmetric zero-diagonal pair kernel over one Rademacher sequence
    UStatInstance dec;
    dec.grid.m = 2;
    dec.grid.n = 2;
    dec.grid.laws = {{rademacher(), rademacher()}, {rademacher(), rademacher()}};
    dec.kernel.m = 2;
    dec.kernel.n = 2;
    dec.kernel.tables.resize(4);
    dec.kernel.tables[flatten_index({0, 0}, 2)] = {0, 0, 0, 0};
    dec.kernel.tables[flatten_index({1, 1}, 2)] = {0, 0, 0, 0};
    dec.kernel.tables[flatten_index({0, 1}, 2)] = {1.0, -1.0, -1.0, 1.0};
    dec.kernel.tables[flatten_index({1, 0}, 2)] = {1.0, -1.0, -1.0, 1.0};
    REQUIRE(validate_instance(dec).empty());

    auto und = undecouple(dec);
    CHECK(und.mode == Mode::Undecoupled);
    REQUIRE(validate_instance(und).empty());
    auto back = decoupled_twin(und);
    CHECK(back.mode == Mode::Decoupled);
    CHECK(back.kernel.tables == dec.kernel.tables);

    // nonzero diagonal is rejected
    dec.kernel.tables[0] = {1.0, 0, 0, 0};
    CHECK_THROWS_AS(undecouple(dec), ApplicabilityError);
}

TEST_CASE("first-order instances expose their summand laws") {
    UStatInstance inst;
    inst.grid.m = 1;
    inst.grid.n = 2;
    inst.grid.laws = {{bern_half(), bern_half()}};
    inst.kernel.m = 1;
    inst.kernel.n = 2;
    inst.kernel.tables = {{0.0, 1.0}, {0.0, 2.0}};
    auto xs = xi_laws(inst);
    REQUIRE(xs.size() == 2);
    CHECK(xs[0].values == std::vector<double>{0.0, 1.0});
    CHECK(xs[1].values == std::vector<double>{0.0, 2.0});
    CHECK(xs[1].probs[1] == 0.5);
}

TEST_CASE("generators are deterministic per seed and produce valid instances") {
    for (const char* fam : {"nonneg", "canonical"}) {
        auto a = generate_instance(fam, 2, 2, 3, 42);
        auto b = generate_instance(fam, 2, 2, 3, 42);
        auto c = generate_instance(fam, 2, 2, 3, 43);
        CHECK(a.kernel.tables == b.kernel.tables);
        CHECK(a.kernel.tables != c.kernel.tables);
        CHECK(validate_instance(a).empty());
    }
    CHECK(kernels_nonnegative(generate_instance("nonneg", 3, 2, 2, 1)));
    CHECK(is_canonical(generate_instance("canonical", 2, 3, 3, 9)));

    auto und = generate_instance("symmetric-undecoupled", 2, 3, 2, 5);
    CHECK(und.mode == Mode::Undecoupled);
    CHECK(validate_instance(und).empty());

    auto chaos = generate_instance("gaussian-chaos-analog", 2, 3, 2, 11);
    CHECK(chaos.flags.canonical);
    CHECK(chaos.flags.separately_symmetric);
    CHECK(validate_instance(chaos).empty());
    CHECK(separately_symmetric(chaos));

    auto bp = generate_instance("bernoulli-product", 2, 4, 2, 3);
    CHECK(validate_instance(bp).empty());
    CHECK(is_canonical(bp));
    CHECK(bp.law(0, 0).atoms[0] == doctest::Approx(-0.25));

    CHECK_THROWS_AS(generate_instance("no-such-family", 2, 2, 2, 1), ApplicabilityError);
}

TEST_CASE("score class generator centers every member") {
    auto sc = generate_score_class(3, 4, 17);
    CHECK(sc.k() == 3);
    CHECK(sc.size() == 4);
    for (const auto& f : sc.scores)
        for (int i = 0; i < sc.k(); ++i) {
            double mu = 0.0;
            for (std::size_t a = 0; a < sc.vars[i].size(); ++a)
                mu += sc.vars[i].probs[a] * f[i][a];
            CHECK(std::abs(mu) < 1e-12);
        }
}
