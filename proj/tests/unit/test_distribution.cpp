#include "doctest.h"

#include <cmath>
#include <random>

#include "ustat/common.hpp"
#include "ustat/distribution.hpp"

using namespace ustat;

TEST_CASE("neumaier summation recovers small addends next to huge ones") {
    KahanSum s;
    s.add(1e16);
    s.add(1.0);
    s.add(-1e16);
    CHECK(s.value() == 1.0);
    CHECK(neumaier_total({1e16, 1.0, -1e16, 1.0}) == 2.0);
}

TEST_CASE("signed_pow handles integer and fractional exponents") {
    CHECK(signed_pow(-2.0, 3.0) == -8.0);
    CHECK(signed_pow(-2.0, 2.0) == 4.0);
    CHECK(signed_pow(2.0, 0.5) == doctest::Approx(std::sqrt(2.0)));
    CHECK_THROWS_AS(signed_pow(-2.0, 0.5), std::domain_error);
}

TEST_CASE("make_distribution canonicalizes support") {
    auto d = make_distribution({1.0, -1.0, 0.5}, {0.25, 0.25, 0.5});
    REQUIRE(d.size() == 3);
    CHECK(d.atoms[0] == -1.0);
    CHECK(d.atoms[1] == 0.5);
    CHECK(d.atoms[2] == 1.0);
    CHECK(d.probs[0] == 0.25);

    auto dropped = make_distribution({0.0, 1.0}, {0.0, 1.0});
    CHECK(dropped.size() == 1);
    CHECK(dropped.atoms[0] == 1.0);

    CHECK_THROWS_AS(make_distribution({0.0, 1.0}, {0.6, 0.6}), std::invalid_argument);
    CHECK_THROWS_AS(make_distribution({0.0, 0.0}, {0.5, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(make_distribution({0.0, 1.0}, {-0.1, 1.1}), std::invalid_argument);
}

TEST_CASE("discrete moments on a rademacher law") {
    auto d = make_distribution({-1.0, 1.0}, {0.5, 0.5});
    CHECK(d.mean() == 0.0);
    CHECK(d.moment_raw(2.0) == 1.0);
    CHECK(d.moment_raw(3.0) == 0.0);
    CHECK(d.moment_abs(3.0) == 1.0);
    CHECK(d.sup_abs() == 1.0);
    CHECK_FALSE(d.nonneg_support());
}

TEST_CASE("tail and truncated moments use strict comparison") {
    auto d = make_distribution({0.0, 1.0, 2.0}, {0.25, 0.5, 0.25});
    CHECK(d.tail_gt(1.0) == 0.25);
    CHECK(d.tail_gt(0.999) == 0.75);
    CHECK(d.tail_gt(2.0) == 0.0);
    // E X^2 1(X > 1) = 4 * 0.25
    CHECK(d.moment_above(2.0, 1.0) == 1.0);
    CHECK(d.moment_above(2.0, 0.0) == doctest::Approx(0.5 + 1.0));
}

TEST_CASE("make_finite merges near-duplicate values against an anchor") {
    auto f = make_finite({{1.0, 0.25}, {1.0 + 1e-13, 0.25}, {2.0, 0.5}});
    REQUIRE(f.size() == 2);
    CHECK(f.values[0] == 1.0);
    CHECK(f.probs[0] == 0.5);
    CHECK(f.total() == doctest::Approx(1.0));

    CHECK_THROWS_AS(make_finite({{0.0, 0.4}, {1.0, 0.4}}), std::invalid_argument);
}

TEST_CASE("finite distribution norms and transforms") {
    auto f = make_finite({{-2.0, 0.5}, {2.0, 0.5}});
    CHECK(f.moment_raw(1.0) == 0.0);
    CHECK(f.moment_abs(1.0) == 2.0);
    CHECK(f.norm_abs(2.0) == doctest::Approx(2.0));
    auto a = f.abs();
    REQUIRE(a.size() == 1);
    CHECK(a.values[0] == 2.0);
    auto sc = f.scaled(0.5);
    CHECK(sc.values[0] == -1.0);
    CHECK(sc.values[1] == 1.0);
    CHECK(f.tail_ge(2.0) == 0.5);
    CHECK(f.tail_gt(2.0) == 0.0);
}

TEST_CASE("quantile_t0 matches the scan definition") {
    auto f = make_finite({{0.0, 0.75}, {1.0, 0.25}});
    CHECK(quantile_t0(f, 0.5) == 0.0);
    CHECK(quantile_t0(f, 0.2) == 1.0);
    CHECK(quantile_t0(dirac(5.0), 0.5) == 5.0);
    CHECK_THROWS_AS(quantile_t0(f, 0.0), ApplicabilityError);
    CHECK_THROWS_AS(quantile_t0(f, 1.0), ApplicabilityError);

    // definitional pair on a random-ish law
    auto g = make_finite({{0.5, 0.3}, {1.5, 0.3}, {4.0, 0.4}});
    for (double q : {0.05, 0.3, 0.39, 0.41, 0.7, 0.95}) {
        double t0 = quantile_t0(g, q);
        CHECK(g.tail_gt(t0) <= q);
        if (t0 > 0.0) CHECK(g.tail_gt(t0 - 1e-9) > q);
    }
}

TEST_CASE("max of independent laws is exact") {
    auto b = make_finite({{0.0, 0.5}, {1.0, 0.5}});
    auto m2 = max_of_independent({b, b});
    REQUIRE(m2.size() == 2);
    CHECK(m2.values[0] == 0.0);
    CHECK(m2.probs[0] == doctest::Approx(0.25));
    CHECK(m2.probs[1] == doctest::Approx(0.75));
    CHECK(expected_max_power({b, b}, 1.0) == doctest::Approx(0.75));
    CHECK(expected_max_power({b, b}, 2.0) == doctest::Approx(0.75));
    CHECK(expected_max_power({b, b, b}, 1.0) == doctest::Approx(7.0 / 8.0));

    auto r = make_finite({{-1.0, 0.5}, {1.0, 0.5}});
    auto mr = max_of_independent({r, r});
    CHECK(mr.values[0] == -1.0);
    CHECK(mr.probs[0] == doctest::Approx(0.25));
}

TEST_CASE("normal quantile function inverts the cdf") {
    CHECK(normal_icdf(0.5) == 0.0);
    for (double p : {1e-9, 1e-4, 0.2, 0.5, 0.8, 1.0 - 1e-4, 1.0 - 1e-9})
        CHECK(normal_cdf(normal_icdf(p)) == doctest::Approx(p).epsilon(1e-12));
    CHECK(normal_icdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
    CHECK_THROWS_AS(normal_icdf(0.0), std::domain_error);
    CHECK_THROWS_AS(normal_icdf(1.0), std::domain_error);
}

TEST_CASE("seed derivation is deterministic and spreads") {
    CHECK(chunk_seed(7, 0) == chunk_seed(7, 0));
    CHECK(chunk_seed(7, 0) != chunk_seed(7, 1));
    CHECK(chunk_seed(7, 0) != chunk_seed(8, 0));
    double u = u01_from_bits(~0ull);
    CHECK(u < 1.0);
    CHECK(u01_from_bits(0) == 0.0);
}
