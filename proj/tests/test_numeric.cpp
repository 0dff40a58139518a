#include "doctest.h"

#include "divergia/errors.hpp"
#include "divergia/power_value.hpp"
#include "divergia/rational.hpp"
#include "divergia/real.hpp"

using namespace divergia;

TEST_CASE("rational parsing and rendering") {
    CHECK(parse_rational("3/6") == make_rational(1, 2));
    CHECK(parse_rational("-0.25") == make_rational(-1, 4));
    CHECK(parse_rational("7") == 7);
    CHECK(to_string(make_rational(6, 4)) == "3/2");
    CHECK_THROWS_AS(parse_rational("x"), DomainError);
    CHECK_THROWS_AS(parse_rational("1/0"), DomainError);
}

TEST_CASE("floor, frac and mod follow the mathematical convention") {
    CHECK(floor(make_rational(-1, 2)) == -1);
    CHECK(ceil(make_rational(-1, 2)) == 0);
    CHECK(frac(make_rational(-1, 3)) == make_rational(2, 3));
    CHECK(mod(make_rational(7, 2), 3) == make_rational(1, 2));
    CHECK(pow(make_rational(2, 3), -2) == make_rational(9, 4));
    CHECK(pow2(-3) == make_rational(1, 8));
}

TEST_CASE("pairwise sum equals the naive sum") {
    std::vector<Rational> v;
    Rational naive = 0;
    for (long i = 1; i <= 37; ++i) {
        v.push_back(make_rational(1, i));
        naive += make_rational(1, i);
    }
    CHECK(pairwise_sum(v) == naive);
}

TEST_CASE("intervals enclose the true value") {
    Interval l2 = ln2_interval(200);
    CHECK(l2.certainly_greater(make_rational(6931, 10000)));
    CHECK(l2.certainly_less(make_rational(6932, 10000)));
    Interval r = rational_power(2, Exponent{1, 2}, 128);  // sqrt 2
    Interval sq = r * r;
    CHECK(sq.contains(2));
    CHECK_THROWS_AS(Interval::point(1, 64) / Interval::hull(-1, 1, 64), DomainError);
}

TEST_CASE("power values compare exactly") {
    const Exponent half{1, 2};
    // 2*9^(1/2) = 6 against 5*1^(1/2)
    auto a = PowerValue::monomial(2, 9, half);
    auto b = PowerValue::scalar(5, half);
    CHECK(b < a);
    // 1*2^(1/2) + 1*3^(1/2) ~ 3.146 vs pi-ish 3.1415
    auto c = PowerValue::monomial(1, 2, half) + PowerValue::monomial(1, 3, half);
    CHECK(PowerValue::scalar(make_rational(31415, 10000), half) < c);
    CHECK(c < PowerValue::scalar(make_rational(3147, 1000), half));
    // integer exponents collapse
    auto d = PowerValue::monomial(3, make_rational(1, 2), Exponent{2, 1});
    REQUIRE(d.exact());
    CHECK(*d.exact() == make_rational(3, 4));
    CHECK(compare(a, a) == std::strong_ordering::equal);
}
