#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>
#include <set>

#include "divergia/errors.hpp"
#include "divergia/khintchine.hpp"

using namespace divergia;
using namespace divergia::khintchine;
using measure::Domain;

namespace {

Rational q(long a, long b = 1) { return make_rational(a, b); }

std::vector<BigInt> range1(long n) {
    std::vector<BigInt> v;
    for (long i = 1; i <= n; ++i) v.emplace_back(i);
    return v;
}

// brute-force 2^a 3^b <= N, (a, b) != (0, 0)
std::size_t smooth23(std::uint64_t N) {
    std::size_t c = 0;
    for (std::uint64_t a = 1; a <= N; a *= 2)
        for (std::uint64_t b = a; b <= N; b *= 3) ++c;
    return c - 1;
}

}  // namespace

TEST_CASE("khintchine sums and averages along orbits") {
    const auto circle = Domain::circle(1);
    const auto f = StepFunction::indicator(circle, 0, q(1, 2));
    CHECK(khintchine_sum(f, q(1, 3), 3) == 2);
    CHECK(khintchine_sum(StepFunction::constant(circle, 1), q(2, 7), 11) == 11);
    CHECK(khintchine_average(StepFunction::constant(circle, 1), q(2, 7), range1(5)) == 1);
    CHECK(khintchine_average(f, 0, range1(9)) == f(0));

    // q-periodic orbit: full periods give the uniform average over {i/q}
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const long den = 2 + static_cast<long>(rng() % 15);
        long num = 1 + static_cast<long>(rng() % (den - 1));
        while (std::gcd(num, den) != 1) ++num;
        const auto g = StepFunction::from_layout(circle, {q(1, 5), q(1, 2), q(4, 5)}, {q(3), q(1, 2), q(7, 3)});
        Rational uniform = 0;
        for (long i = 0; i < den; ++i) uniform += g(q(i, den));
        uniform /= den;
        const long periods = 1 + static_cast<long>(rng() % 4);
        CHECK(khintchine_average(g, q(num, den), range1(den * periods)) == uniform);
    }
    CHECK_THROWS_AS(khintchine_average(f, q(1, 3), {}), DomainError);
}

TEST_CASE("additive averages agree with a high-precision oracle") {
    const auto win = Domain::window(-2, 10);
    CHECK(additive_average(StepFunction::constant(win, q(3, 2)), 4, {1, 2}, {BigInt(2), BigInt(3)}).lo == q(3, 2));

    std::mt19937_64 rng(5);
    for (int probe = 0; probe < 10; ++probe) {
        std::set<Rational> cuts;
        while (cuts.size() < 6) cuts.insert(q(-200 + static_cast<long>(rng() % 1200), 100));
        std::vector<measure::Piece> pieces;
        Rational prev = -2;
        for (const auto& c : cuts) {
            pieces.push_back({prev, c, q(static_cast<long>(rng() % 9), 3)});
            prev = c;
        }
        const auto g = StepFunction::from_pieces(win, pieces);
        std::vector<BigInt> a;
        std::vector<std::size_t> I;
        for (std::size_t n = 1; n <= 25; ++n) {
            a.emplace_back(static_cast<unsigned long>(1 + rng() % 5000));
            I.push_back(n);
        }
        const Rational y = q(static_cast<long>(rng() % 1000), 100);
        const auto got = additive_average(g, y, I, a, digits_to_bits(30));

        // 60-digit oracle: midpoint classification is safe when its enclosure is exact
        std::vector<Rational> vals;
        bool oracle_exact = true;
        for (std::size_t n = 1; n <= I.size(); ++n) {
            const Interval z = Interval::point(y, digits_to_bits(60)) -
                               Interval::point(Rational(a[n - 1]), digits_to_bits(60)).log();
            const Rational lo = z.lo().to_rational();
            const Rational hi = z.hi().to_rational();
            if (g(lo) != g(hi)) oracle_exact = false;
            vals.push_back(g(lo));
        }
        const Rational truth = pairwise_sum(vals) / static_cast<unsigned long>(vals.size());
        REQUIRE(oracle_exact);
        CHECK(got.lo <= truth);
        CHECK(truth <= got.hi);
        if (!got.widened) CHECK(got.lo == got.hi);
    }
}

TEST_CASE("additive average of 2*1_[0, r) with r just below 2 ln 2 is at least 1") {
    const Rational r = q(13862, 10000);
    const auto g = StepFunction::indicator(Domain::window(-1, 3), 0, r, 2);
    for (long j = 2; j <= 10; ++j) {
        std::vector<BigInt> a = range1(1L << j);
        std::vector<std::size_t> I(a.size());
        for (std::size_t i = 0; i < I.size(); ++i) I[i] = i + 1;
        for (long k : {1, 5, 9}) {
            // y = (j + k/10) ln 2 rounded to a rational inside the window
            const Rational y(Interval::point(q(10 * j + k, 10)).mid_double() * std::log(2.0));
            const auto v = additive_average(g, y, I, a);
            CHECK(v.lo >= 1);
        }
    }
}

TEST_CASE("khintchine lower bound is certified") {
    for (const Rational& p : {q(1), q(2), q(3, 2)}) {
        const auto r = khintchine_lower({3}, p);
        CHECK(r.certificate_ok);
        CHECK(r.holds);
        // ||g||_p^p = 2^(p+1) ln 2, against an independent double evaluation
        CHECK(r.g_strong_p.mid_double() == doctest::Approx(std::pow(2.0, to_double(p) + 1) * std::log(2.0)));
    }

    const auto t0 = std::chrono::steady_clock::now();
    const auto r = khintchine_lower({1, 2, 3, 4, 5, 6, 7, 8}, 2);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 10);
    CHECK(r.holds);
    CHECK(r.certificate_ok);
    const Interval target = Interval::point(8) * ln2_interval();
    CHECK((r.certified_measure - target).hi().compare(pow(q(1, 10), 25)) < 0);
    CHECK((target - r.certified_measure).hi().compare(pow(q(1, 10), 25)) < 0);
    // {max >= 1} covers the certified set
    CHECK(r.measure_at_least_1.lo().compare(r.certified_measure.hi()) >= 0);
    const double claimed = std::pow(2.0, -1.5) * std::sqrt(std::log(2.0)) * std::sqrt(8.0);
    CHECK(r.claimed.mid_double() == doctest::Approx(claimed));
    CHECK(r.ratio.mid_double() >= claimed);

    // profile_u against a direct count at integer-plus-half probes
    for (long u2 = 3; u2 < (1L << 11); u2 += 7) {
        const Rational u = q(u2, 2);
        Rational best = 0;
        for (long j = 1; j <= 8; ++j) {
            long c = 0;
            for (long n = 1; n <= (1L << j); ++n)
                if (4 * n > u && n <= u) ++c;
            best = std::max(best, Rational(q(2 * c) / pow2(j)));
        }
        CHECK(r.profile_u(u) == best);
    }
    CHECK_THROWS_AS(khintchine_lower({}, 2), DomainError);
}

TEST_CASE("tower transfer keeps evaluations on the core") {
    TowerModel t;
    t.d = 1;
    t.N = 4;
    t.values = {q(1), q(5), q(-2), q(7, 3)};
    const auto r = tower_transfer(t, 1);
    CHECK(r.core == std::vector<bool>{false, true, true, true});
    CHECK(r.equal_on_core);
    CHECK(r.max_equal);
    CHECK(r.core_mass == q(3, 4));

    std::mt19937_64 rng(3);
    TowerModel t2;
    t2.d = 2;
    t2.N = 8;
    t2.epsilon = q(1, 10);
    for (int i = 0; i < 64; ++i) t2.values.push_back(q(static_cast<long>(rng() % 100), 7));
    const auto r2 = tower_transfer(t2, 2);
    CHECK(r2.equal_on_core);
    CHECK(r2.max_equal);
    CHECK(r2.probes == 36u * 9u);
    CHECK(r2.core_mass == q(36, 64) * q(9, 10));
    std::size_t in_core = 0;
    for (bool b : r2.core) in_core += b;
    CHECK(in_core == 36u);
    CHECK_THROWS_AS(tower_transfer(t, 4), DomainError);
}

TEST_CASE("weak-one norm and the growth bound") {
    std::vector<Rational> h;
    for (long n = 1; n <= 50; ++n) h.push_back(n);
    auto r = weakbound_check(h);
    CHECK(r.d == 1);
    CHECK(r.c[0] == 1);
    CHECK(r.c[9] == q(1, 10));
    CHECK(r.holds);

    r = weakbound_check(std::vector<Rational>(30, q(7)));
    CHECK(r.d == 1);  // only c_1 = 1 survives
    CHECK(r.holds);

    for (long T : {4, 6, 8, 10}) {
        std::vector<Rational> g;
        for (long n = 1; n <= T; ++n) g.push_back(pow2(n));
        const auto w = weakbound_check(g);
        CHECK(w.d == q(T, 2));
        CHECK(w.holds);
    }

    // random nondecreasing sequences, horizon up to 2^12
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t T = 1 + rng() % (trial < 4 ? 4096 : 200);
        std::vector<Rational> s;
        Rational cur = 1 + static_cast<long>(rng() % 5);
        for (std::size_t n = 0; n < T; ++n) {
            if (rng() % 3 == 0) cur += static_cast<long>(rng() % 4);
            s.push_back(cur);
        }
        const auto w = weakbound_check(s);
        CHECK(w.K.has_value());
        CHECK(w.holds);
        // oracle: brute-force max_k k t_k
        auto c = w.c;
        std::sort(c.begin(), c.end());
        Rational best = 0;
        for (std::size_t i = 0; i < c.size(); ++i)
            best = std::max(best, Rational(c[i] * static_cast<unsigned long>(c.size() - i)));
        CHECK(w.d == best);
    }
    CHECK_THROWS_AS(weakbound_check({q(0), q(1)}), DomainError);
    CHECK_THROWS_AS(weakbound_check({q(2), q(1)}), DomainError);
}

TEST_CASE("growth profiles") {
    for (std::size_t H : {5, 20, 60}) {
        const auto g = growth_divergence("identity", H);
        CHECK(g.weak_c == 1);
        CHECK(g.probes_ok);
    }
    const auto s = growth_divergence("sqrt", 200);
    CHECK(s.c[4] == q(9, 25));
    CHECK(s.weak_c <= 2);
    CHECK(s.weak_c > q(19, 10));
    CHECK(s.probes_ok);

    Rational prev = 0;
    for (std::size_t H : {5, 10, 20, 30}) {
        const auto g = growth_divergence("log", H);
        CHECK(g.h[0] == 2);   // floor(e)
        CHECK(g.h[2] == 20);  // floor(e^3)
        CHECK(g.weak_c > prev);
        prev = g.weak_c;
        CHECK(g.probes_ok);
    }
    const auto e = growth_divergence("explicit:1/2,1,3/2,5,6", 6);
    CHECK(e.h[0] == 2);
    CHECK(e.h[4] == 4);
    CHECK_THROWS_AS(growth_divergence("explicit:1,1", 3), DomainError);
    CHECK_THROWS_AS(growth_divergence("cubic", 3), DomainError);
}

TEST_CASE("semigroup enumeration and counts") {
    const auto s = semigroup_enumerate({2, 3}, 100);
    CHECK(s.elements.size() == 19u);
    CHECK(s.elements.size() == smooth23(100));
    CHECK(s.prime_support == std::vector<std::uint64_t>{2, 3});
    CHECK(s.lattice_dim == 2);
    CHECK(!s.contains(1));
    CHECK(semigroup_enumerate({2, 3}, 100, true).contains(1));

    const auto p2 = semigroup_enumerate({2}, 1u << 20);
    for (std::uint64_t N : {2u, 3u, 100u, 1000u, 1u << 20})
        CHECK(p2.count_upto(N) == static_cast<std::size_t>(std::floor(std::log2(static_cast<double>(N)))));

    const auto s5 = semigroup_enumerate({2, 3, 5, 7, 11}, 1000000);
    CHECK(s5.lattice_dim == 5);
    const auto& k3 = s5.curve.normalized[2];
    for (std::size_t i = 1; i < k3.size(); ++i)
        if (s5.curve.N[i - 1] >= 128) CHECK(k3[i] > k3[i - 1]);

    // 4 and 8 generate a rank-1 lattice inside one prime
    const auto s48 = semigroup_enumerate({4, 8}, 4096);
    CHECK(s48.prime_support == std::vector<std::uint64_t>{2});
    CHECK(s48.lattice_dim == 1);
    CHECK(s48.count_upto(4096) == 11u);  // 2^2, ..., 2^12

    CHECK_THROWS_AS(semigroup_enumerate({1, 2}, 10), DomainError);
}

TEST_CASE("folner ratios") {
    const auto p2 = semigroup_enumerate({2}, 1u << 20);
    for (const auto& row : folner_check(p2, 2, {16, 1024, 1u << 20})) {
        CHECK(row.shift_ratio == Rational(2) / static_cast<unsigned long>(row.size));
        CHECK(row.difference_ratio == Rational(2 * row.size - 1) / static_cast<unsigned long>(row.size));
    }

    const auto s = semigroup_enumerate({2, 3}, 100000, true);
    const auto rows = folner_check(s, 2, {100, 1000, 10000, 100000});
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].shift_ratio <= rows[i - 1].shift_ratio);
    CHECK(folner_check(s, 1, {1000})[0].shift_ratio == 0);
    // truncation can only shrink the symmetric difference count of shifted points above N
    const auto tr = folner_check(s, 2, {1000}, true)[0];
    CHECK(tr.shift_ratio != rows[1].shift_ratio);
    CHECK_THROWS_AS(folner_check(s, 5, {100}), DomainError);
}

TEST_CASE("lattice counts") {
    for (long y10 : {5, 17, 70, 123, 400}) {
        const Rational y = q(y10, 10);
        const auto L = lattice_count({2}, y);
        CHECK(L.L == static_cast<std::uint64_t>(std::floor(to_double(y) / std::log(2.0))) + 1);
        CHECK(L.residual <= 1);
    }

    // double loop over 2^a 3^b <= e^10
    const double bound = std::exp(10.0);
    std::uint64_t brute = 0;
    for (double a = 1; a <= bound; a *= 2)
        for (double b = a; b <= bound; b *= 3) ++brute;
    const auto L10 = lattice_count({2, 3}, 10);
    CHECK(L10.L == brute);
    CHECK(L10.asymptote == doctest::Approx(65.66).epsilon(1e-3));

    for (const std::vector<std::uint64_t>& P : {std::vector<std::uint64_t>{2, 3}, std::vector<std::uint64_t>{2, 3, 5}}) {
        double worst = 0;
        for (long y : {5, 10, 20, 40}) worst = std::max(worst, lattice_count(P, y).normalized_residual);
        CHECK(worst < 3);
    }
    CHECK_THROWS_AS(lattice_count({4}, 3), DomainError);
}

TEST_CASE("dichotomy verdicts") {
    std::vector<SemigroupSample> fg;
    for (std::uint64_t N : {1000u, 100000u}) fg.push_back(semigroup_enumerate({2, 3}, N));
    const auto c = dichotomy_report(fg);
    CHECK(c.verdict == "convergence side");
    CHECK(!c.folner.empty());
    CHECK(!c.growth);

    const auto single = dichotomy_report({semigroup_enumerate({5}, 1000000)});
    CHECK(single.verdict == "convergence side");

    const std::vector<std::uint64_t> primes{2, 3, 5, 7, 11, 13};
    std::vector<SemigroupSample> grow;
    for (std::size_t m = 2; m <= primes.size(); ++m) {
        std::vector<std::uint64_t> gens;
        for (std::size_t i = 0; i < m; ++i) gens.push_back(primes[i] * primes[i]);
        grow.push_back(semigroup_enumerate(gens, std::uint64_t{1} << (4 * m + 4)));
    }
    const auto d = dichotomy_report(grow);
    CHECK(d.verdict == "divergence side");
    CHECK(d.curves.size() == grow.size());
    REQUIRE(d.growth);
    CHECK(d.growth->weak_c >= 1);
}
