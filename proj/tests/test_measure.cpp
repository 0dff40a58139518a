#include "doctest.h"

#include <random>

#include "divergia/errors.hpp"
#include "divergia/measure.hpp"
#include "divergia/real.hpp"

using namespace divergia;
using namespace divergia::measure;

namespace {

const Domain unit = Domain::circle(1);

StepFunction random_step(std::mt19937_64& rng, const Domain& d, int pieces) {
    std::vector<Piece> ps;
    std::uniform_int_distribution<long> pos(0, 96), val(0, 5);
    for (int i = 0; i < pieces; ++i) {
        Rational a = d.left + d.length() * make_rational(pos(rng), 97);
        Rational len = d.length() * make_rational(1 + pos(rng) % 30, 97);
        ps.push_back(Piece{a, a + len, make_rational(val(rng), 1 + val(rng))});
    }
    return StepFunction::from_pieces(d, ps);
}

std::vector<Rational> probes(const Domain& d, long n) {
    std::vector<Rational> out;
    for (long i = 0; i < n; ++i) out.push_back(d.left + d.length() * make_rational(2 * i + 1, 2 * n));
    return out;
}

}  // namespace

TEST_CASE("layout and evaluation") {
    auto f = StepFunction::indicator(unit, make_rational(3, 4), make_rational(5, 4), 2);  // wraps
    CHECK(f(0) == 2);
    CHECK(f(make_rational(1, 4)) == 0);  // right-open
    CHECK(f(make_rational(3, 4)) == 2);  // left-closed
    CHECK(f(make_rational(-1, 8)) == 2);
    CHECK(f.integral() == 1);
    CHECK(f.breakpoints() == std::vector<Rational>{make_rational(1, 4), make_rational(3, 4)});
    auto g = StepFunction::from_layout(unit, {0, make_rational(1, 2)}, {1, 1});
    CHECK(g == StepFunction::constant(unit, 1));
    auto w = StepFunction::indicator(Domain::window(0, 4), -1, 1, 3);
    CHECK(w(make_rational(1, 2)) == 3);
    CHECK(w(5) == 0);
    CHECK(w.cells() == 2);
    CHECK_THROWS_AS(StepFunction::from_layout(unit, {make_rational(1, 2), make_rational(1, 4)}, {1, 2}), DomainError);
    CHECK_THROWS_AS(StepFunction::from_layout(unit, {2}, {1}), DomainError);
}

TEST_CASE("canonicalization is idempotent") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 30; ++i) {
        auto f = random_step(rng, unit, 6);
        auto g = StepFunction::from_layout(f.domain(), f.breakpoints(), f.values());
        CHECK(f == g);
        for (std::size_t k = 1; k < f.cells(); ++k) CHECK(f.values()[k] != f.values()[k - 1]);
        if (f.cells() > 1) CHECK(f.values().front() != f.values().back());
    }
}

TEST_CASE("translation") {
    auto f = StepFunction::indicator(unit, 0, make_rational(1, 4));
    CHECK(translate(f, 0) == f);
    CHECK(translate(f, make_rational(1, 2)) == StepFunction::indicator(unit, make_rational(1, 2), make_rational(3, 4)));
    std::mt19937_64 rng(2);
    auto g = random_step(rng, unit, 5);
    auto a = translate(g, make_rational(7, 3));
    auto b = translate(g, make_rational(1, 3));
    for (const auto& x : probes(unit, 500)) {
        CHECK(a(x) == b(x));
        CHECK(a(x) == g(x - make_rational(1, 3)));
    }
    for (auto p : {Rational(1), make_rational(3, 2), Rational(2), Rational(3)}) {
        auto n1 = norms(g, p);
        auto n2 = norms(a, p);
        CHECK(n1.strong_p == n2.strong_p);
        CHECK(n1.weak_p == n2.weak_p);
    }
    CHECK(a.integral() == g.integral());
}

TEST_CASE("sum of shifts matches pointwise evaluation") {
    std::mt19937_64 rng(9);
    auto f = random_step(rng, unit, 4);
    std::vector<Rational> shifts{make_rational(1, 5), make_rational(2, 7), make_rational(-3, 4), 5};
    auto s = sum_of_shifts(f, shifts, make_rational(1, 4));
    for (const auto& x : probes(unit, 300)) {
        Rational direct = 0;
        for (const auto& sh : shifts) direct += f(x + sh) / 4;
        CHECK(s(x) == direct);
    }
}

TEST_CASE("pointwise max") {
    auto a = StepFunction::indicator(unit, 0, make_rational(1, 2));
    auto b = StepFunction::indicator(unit, make_rational(1, 4), make_rational(3, 4));
    CHECK(pointwise_max({a}) == a);
    CHECK(pointwise_max({a, b}) == StepFunction::indicator(unit, 0, make_rational(3, 4)));
    std::mt19937_64 rng(4);
    std::vector<StepFunction> fs;
    std::size_t total_bp = 0;
    for (int i = 0; i < 50; ++i) {
        fs.push_back(random_step(rng, unit, 3));
        total_bp += fs.back().breakpoints().size();
    }
    auto m = pointwise_max(fs);
    CHECK(m.breakpoints().size() <= total_bp);
    for (const auto& x : probes(unit, 10000)) {
        Rational best = 0;
        for (const auto& f : fs) best = std::max(best, f(x));
        REQUIRE(m(x) == best);
    }
    for (const auto& f : fs) CHECK(norms(f, 2).weak_p <= norms(m, 2).weak_p);
    CHECK_THROWS_AS(pointwise_max({a, StepFunction::constant(Domain::circle(2), 1)}), DomainError);
}

TEST_CASE("scale_add and threshold_split") {
    auto one = StepFunction::indicator(unit, 0, 1);
    CHECK(scale_add(make_rational(1, 2), one, make_rational(1, 2), one) == one);
    auto f = StepFunction::indicator(unit, 0, make_rational(1, 3), 3);
    CHECK(scale_add(1, f, 0, one) == f);
    CHECK_THROWS_AS(scale_add(1, f, -1, one), DomainError);
    auto s = threshold_split(f, 1, 2);
    CHECK(s.up == f);
    CHECK(s.middle == StepFunction::constant(unit, 0));
    std::mt19937_64 rng(6);
    for (int i = 0; i < 20; ++i) {
        auto g = random_step(rng, unit, 6);
        auto parts = threshold_split(g, make_rational(1, 2), 2);
        CHECK(scale_add(1, scale_add(1, parts.up, 1, parts.middle), 1, parts.down) == g);
        for (const auto& x : probes(unit, 200)) {
            int nonzero = (sgn(parts.up(x)) > 0) + (sgn(parts.middle(x)) > 0) + (sgn(parts.down(x)) > 0);
            CHECK(nonzero <= 1);
        }
    }
    CHECK_THROWS_AS(threshold_split(f, 2, 1), DomainError);
}

TEST_CASE("norms") {
    auto f = StepFunction::indicator(unit, 0, make_rational(1, 5), 3);
    auto r = norms(f, 2);
    CHECK(*r.strong_p.exact() == make_rational(9, 5));
    CHECK(*r.weak_p.exact() == make_rational(9, 5));
    CHECK(r.attaining_level == 3);

    // g = 2 on [0, 2 ln 2): ||g||_p^p = 2^(p+1) ln 2, with 2 ln 2 rationalized
    Interval l2 = ln2_interval(200);
    Rational len = Real(l2.lo()).to_rational() * 2;
    auto g = StepFunction::indicator(Domain::window(0, 2), 0, len, 2);
    auto n3 = norms(g, 3);
    CHECK(n3.strong_p.enclose(200).mid_double() == doctest::Approx(16 * std::log(2.0)).epsilon(1e-14));

    // staircase vs Riemann oracle
    auto st = StepFunction::from_pieces(unit, {{0, make_rational(1, 3), 1}, {make_rational(1, 3), make_rational(2, 3), 2},
                                              {make_rational(2, 3), 1, 3}});
    double riemann = 0;
    for (const auto& x : probes(unit, 10002)) riemann += std::pow(to_double(st(x)), 1.5) / 10002;
    CHECK(norms(st, make_rational(3, 2)).strong_p.enclose(128).mid_double() == doctest::Approx(riemann).epsilon(1e-6));

    std::mt19937_64 rng(8);
    for (int i = 0; i < 30; ++i) {
        auto h = random_step(rng, unit, 5);
        for (auto p : {Rational(1), make_rational(3, 2), Rational(2), Rational(3)}) {
            auto n = norms(h, p);
            CHECK(n.weak_p <= n.strong_p);
        }
    }
}
