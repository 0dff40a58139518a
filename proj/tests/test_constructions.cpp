#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "divergia/constructions.hpp"
#include "divergia/errors.hpp"

using namespace divergia;
using namespace divergia::constructions;
using weights::WeightSequence;

namespace {

Rational q(long a, long b = 1) { return make_rational(a, b); }

// 1_[lo, hi) evaluated mod 1
bool in_arc(const Rational& x, const Rational& lo, const Rational& hi) {
    const Rational y = frac(x - lo);
    return y < hi - lo;
}

long mobius(long n) {
    long m = 1;
    for (long p = 2; p * p <= n; ++p)
        if (n % p == 0) {
            n /= p;
            if (n % p == 0) return 0;
            m = -m;
        }
    return n > 1 ? -m : m;
}

}  // namespace

TEST_CASE("materialize known sequences and exact sqrt ordering") {
    auto pw = materialize(TimeSequence::power(2), 4);
    CHECK(pw[0].value == 2);
    CHECK(pw[3].value == 16);
    auto fa = materialize(TimeSequence::of(TimeSequence::Kind::Factorial), 5);
    std::vector<long> want{1, 2, 6, 24, 120};
    for (int i = 0; i < 5; ++i) CHECK(fa[i].value == want[i]);

    // squarefree sieve oracle
    std::vector<bool> sf(200, true);
    for (long p = 2; p * p < 200; ++p)
        for (long m = p * p; m < 200; m += p * p) sf[m] = false;
    std::vector<long> expect;
    for (long s = 2; s < 200 && expect.size() < 40; ++s)
        if (sf[s]) expect.push_back(s);
    auto sq = materialize(TimeSequence::of(TimeSequence::Kind::SqrtSquarefree), 40);
    for (int i = 0; i < 40; ++i) {
        CHECK(sq[i].is_sqrt);
        CHECK(sq[i].value == expect[i]);
    }
    CHECK(sq[0].value == 2);
    CHECK(sq[4].value == 7);

    CHECK(Term{5, true} < Term{3, false});
    CHECK(Term{3, false} < Term{10, true});
    CHECK(!(Term{9, true} < Term{3, false}));
    CHECK(!(Term{3, false} < Term{9, true}));

    auto fl = materialize(TimeSequence::of(TimeSequence::Kind::FloorLog), 3000);
    for (std::size_t n = 1; n <= 3000; ++n) CHECK(fl[n - 1].value == static_cast<long>(std::floor(std::log(double(n)))));

    CHECK(TimeSequence::parse("explicit:3,5,9").describe() == "explicit:3,5,9");
    CHECK_THROWS_AS(TimeSequence::parse("bogus"), DomainError);
}

TEST_CASE("lacunarity profiles") {
    auto p2 = lacunarity_profile(TimeSequence::power(2), 1, 50);
    CHECK(p2.poly_trend == "fails");
    CHECK(p2.log_trend == "fails");
    CHECK(p2.poly[9] == doctest::Approx(2.0 / 10));

    const auto fact = TimeSequence::of(TimeSequence::Kind::Factorial);
    auto f1 = lacunarity_profile(fact, 1, 100);
    CHECK(f1.poly_trend == "fails");
    CHECK(f1.poly[49] == doctest::Approx(51.0 / 50));
    auto fh = lacunarity_profile(fact, q(1, 2), 100);
    CHECK(fh.poly_trend == "grows");
    CHECK(f1.log_trend == "grows");
    CHECK(std::isnan(f1.log[0]));
    CHECK_THROWS_AS(lacunarity_profile(fact, 1, 2), DomainError);
}

TEST_CASE("refine_bounded_gaps") {
    auto two = [](std::size_t) { return q(2); };
    auto id = refine_bounded_gaps(TimeSequence::power(3), two, 30, 3);
    CHECK(id.ok);
    CHECK(id.indices.size() == 30);
    CHECK(id.max_gap == 1);

    // (n+3)! interleaved with twice itself
    std::vector<BigInt> v;
    BigInt f = 6;
    for (unsigned long n = 1; n <= 12; ++n) {
        f *= n + 3;
        v.push_back(f);
        v.push_back(2 * f);
    }
    auto alt = refine_bounded_gaps(TimeSequence::explicit_list(v), two, v.size(), 4);
    CHECK(alt.ok);
    CHECK(alt.max_gap == 2);
    for (std::size_t i = 0; i < alt.indices.size(); ++i) CHECK(alt.indices[i] == 2 * i + 1);
    for (std::size_t i = 1; i < alt.indices.size(); ++i)
        CHECK(Rational(v[alt.indices[i] - 1]) / Rational(v[alt.indices[i - 1] - 1]) > 2);

    std::vector<BigInt> lin;
    for (long n = 1; n <= 100; ++n) lin.emplace_back(n);
    auto bad = refine_bounded_gaps(TimeSequence::explicit_list(lin), two, 100, 5);
    CHECK(!bad.ok);
    CHECK(!bad.failure.empty());
}

TEST_CASE("solve_residues") {
    ResidueProblem one{3, {q(7)}, {2}};
    auto s1 = solve_residues(one);
    CHECK(s1.lo == q(2, 21));
    CHECK(s1.hi == q(3, 21));

    ResidueProblem ex{2, {q(1), q(8), q(64)}, {0, 1, 0}};
    auto s = solve_residues(ex);
    const std::vector<std::pair<Rational, Rational>> win{{q(0), q(1, 2)}, {q(1, 2), q(1)}, {q(0), q(1, 2)}};
    for (int i = 0; i < 3; ++i) {
        const Rational c = frac(s.midpoint * ex.terms[i]);
        CHECK(c == s.certificate[i]);
        CHECK(win[i].first <= c);
        CHECK(c < win[i].second);
    }
    // every point of the final interval works, not just the midpoint
    for (int j = 0; j < 50; ++j) {
        const Rational a = s.lo + (s.hi - s.lo) * q(j, 50);
        for (int i = 0; i < 3; ++i) {
            const Rational c = frac(a * ex.terms[i]);
            CHECK(win[i].first <= c);
            CHECK(c < win[i].second);
        }
    }

    CHECK_THROWS_AS(solve_residues(ResidueProblem{2, {q(1), q(3)}, {0, 1}}), DomainError);

    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const unsigned long K = 1 + rng() % 6;
        ResidueProblem pr;
        pr.K = K;
        Rational b = q(1 + static_cast<long>(rng() % 5), 1 + static_cast<long>(rng() % 3));
        for (int i = 0; i < 12; ++i) {
            pr.terms.push_back(b);
            pr.targets.push_back(rng() % K);
            b = b * (2 * K) + q(1 + static_cast<long>(rng() % 7), 1 + static_cast<long>(rng() % 4));
        }
        auto sol = solve_residues(pr);
        for (std::size_t i = 0; i < pr.terms.size(); ++i) {
            const Rational c = frac(sol.midpoint * pr.terms[i]);
            CHECK(floor(c * K) == pr.targets[i]);
        }
    }
}

TEST_CASE("certified residue search on square roots") {
    auto terms = materialize(TimeSequence::of(TimeSequence::Kind::SqrtSquarefree), 5);
    const std::vector<unsigned long> targets{1, 0, 1, 1, 0};
    auto sol = search_residues(terms, 2, targets);
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const long double x = static_cast<long double>(to_double(sol.beta)) * std::sqrt((long double)terms[i].value.get_d());
        const long double fr = x - std::floor(x);
        CHECK(static_cast<unsigned long>(fr * 2) == targets[i]);
    }
    CHECK_THROWS_AS(search_residues(terms, 8, {7, 7, 7, 7, 7}, 50), PrecisionError);
}

TEST_CASE("ubL1 builder: indicator weight with window sum 3M+1") {
    std::vector<Rational> wv(8, q(0));
    wv[7] = 7;
    const auto w = WeightSequence::from_values(wv);
    auto plan = build_ubL1(w, 2, TimeSequence::power(5));
    CHECK(plan.bookkeeping["N"] == 1);
    CHECK(plan.bookkeeping["K"] == 2);
    CHECK(plan.bookkeeping["U"] == std::vector<std::size_t>{8});
    CHECK(plan.f.integral() == q(4, 2));  // ||f||_1 = 4/M
    CHECK(plan.holds());
    CHECK(plan.claimed_bound == PowerValue::scalar(q(1, 2), Exponent{}));

    // K = 2 makes f = 2 on the whole circle; the replay oracle runs on K = 3 below
    CHECK(plan.f == StepFunction::constant(measure::Domain::circle(1), 2));

    CHECK_THROWS_WITH_AS(build_ubL1(WeightSequence::from_values({q(1, 2), q(1, 2), q(1, 2)}), 1,
                                    TimeSequence::power(5)),
                         doctest::Contains("horizon too small"), DomainError);
}

TEST_CASE("ubL1 builder with several residue classes") {
    // M = 3, N = 1: K = 3 classes spread over two blocks
    std::vector<Rational> wv(9, q(0));
    wv[7] = 5;
    wv[8] = 6;
    auto plan = build_ubL1(WeightSequence::from_values(wv), 3, TimeSequence::power(7));
    CHECK(plan.bookkeeping["K"] == 3);
    CHECK(plan.f.integral() == q(4, 3));
    CHECK(plan.bookkeeping["exceedance_measure"] == "1");
    CHECK(plan.holds());

    const Rational beta = parse_rational(plan.bookkeeping["beta"].get<std::string>());
    std::map<std::size_t, std::vector<Rational>> block;
    BigInt a = 1;
    for (std::size_t n = 1; n <= 512; ++n) {
        a *= 7;
        const std::size_t t = n > 256 ? 9 : n > 128 ? 8 : 0;
        if (t) block[t].push_back(frac(beta * a));
    }
    for (int i = 0; i < 301; ++i) {
        const Rational x = q(i, 301) + q(1, 7919);
        Rational best = 0;
        for (auto& [t, sh] : block) {
            int cnt = 0;
            for (const auto& s : sh) cnt += frac(x + s) < q(2, 3);
            best = std::max(best, Rational(wv[t - 1] * 2 * cnt / Rational(1L << t)));
        }
        CHECK(best >= 1);
    }
}

TEST_CASE("ubLp builder") {
    auto c = build_ubLp({5}, 2, 1, TimeSequence::power(3));
    CHECK(c.bookkeeping["branch"] == "constant");
    CHECK(c.claimed_bound == PowerValue::scalar(q(1, 2), Exponent{2, 1}));  // (2 n0)^-1 |J|
    CHECK(c.holds());

    auto plan = build_ubLp({1, 2, 3, 4, 5, 6, 7, 8}, 2, 1, TimeSequence::power(9));
    CHECK(plan.bookkeeping["K"] == 4);
    // ||f||_p^p = 2^(p+1) / K
    CHECK(norms(plan.f, 2).strong_p == PowerValue::scalar(q(8, 4), Exponent{2, 1}));
    CHECK(plan.claimed_bound == PowerValue::scalar(q(8, 16), Exponent{2, 1}));
    CHECK(plan.holds());
    CHECK(plan.bookkeeping["measure_max_at_least_1"] == "1");
}

TEST_CASE("ubLp weak-norm bound for |J| up to 10") {
    for (std::size_t n = 2; n <= 10; ++n) {
        std::vector<unsigned long> J;
        for (unsigned long j = 1; j <= n; ++j) J.push_back(j);
        const unsigned long K = n / 2;
        for (const Rational& p : {q(1), q(2), q(3, 2)}) {
            auto plan = build_ubLp(J, p, 0, TimeSequence::power(2 * K + 1));
            INFO("|J| = " << n << " p = " << to_string(p) << " achieved " << plan.achieved.expression());
            CHECK(plan.holds());
        }
    }
}

TEST_CASE("ubLp digit evaluation matches the direct averages") {
    for (unsigned long n : {6UL, 8UL, 10UL}) {
        std::vector<unsigned long> J;
        for (unsigned long j = 1; j <= n; ++j) J.push_back(j);
        const unsigned long K = n / 2;
        const auto seq = TimeSequence::power(3 * K);
        auto plan = build_ubLp(J, 2, 0, seq);
        REQUIRE(plan.bookkeeping["branch"] == "digits");
        const Rational beta = -std::get<dynsys::Translation>(plan.system.model).step;
        const auto times = integer_times(seq, std::size_t{1} << n);
        // block j_l lands in class l
        for (unsigned long l = 0; l < K; ++l) {
            const unsigned long j = J[n - K + l];
            for (std::size_t m = (std::size_t{1} << (j - 1)) + 1; m <= (std::size_t{1} << j); ++m) {
                const Rational x = frac(times[m - 1] * beta);
                CHECK(x >= q(static_cast<long>(l), static_cast<long>(K)));
                CHECK(x < q(static_cast<long>(l) + 1, static_cast<long>(K)));
            }
        }
        std::vector<StepFunction> avgs;
        for (auto j : J) avgs.push_back(dynsys::average(plan.system, plan.f, times, j));
        const auto mx = measure::pointwise_max(avgs);
        const auto fp = norms(plan.f, 2).strong_p;
        CHECK(norms(mx, 2).weak_p == plan.achieved.scaled(fp.exact().value()));
        CHECK(plan.bookkeeping["measure_max_at_least_1"] == to_string(mx.measure_at_least(1)));
        CHECK(plan.holds());
    }
}

TEST_CASE("ubLp with sixteen levels") {
    std::vector<unsigned long> J;
    for (unsigned long j = 1; j <= 16; ++j) J.push_back(j);
    for (const Rational& p : {q(3, 2), q(2)}) {
        auto plan = build_ubLp(J, p, 0, TimeSequence::power(24));
        CHECK(plan.bookkeeping["K"] == 8);
        CHECK(norms(plan.f, p).strong_p == PowerValue::monomial(q(2, 8), 2, Exponent::from(p)));
        CHECK(plan.claimed_bound == PowerValue::monomial(4, q(1, 2), Exponent::from(p)));
        CHECK(plan.holds());
    }
}

TEST_CASE("infection totals and Lyndon classes") {
    for (unsigned long y = 1; y <= 6; ++y) CHECK(infection_totals(2, WeightSequence::from_values({q(1)}), y).n0 == 2 * y);
    CHECK(infection_totals(3, WeightSequence::from_values({q(1)}), 4).n0 == 5);  // 3^5 = 243 <= 256 < 729

    for (unsigned k = 2; k <= 4; ++k)
        for (unsigned n = 1; n <= 8; ++n) {
            long count = 0;
            for (long d = 1; d <= static_cast<long>(n); ++d)
                if (n % d == 0) count += mobius(d) * static_cast<long>(std::pow(k, n / d));
            auto words = lyndon_words(k, n);
            CHECK(static_cast<long>(words.size()) == count / static_cast<long>(n));
            std::set<std::vector<unsigned>> seen(words.begin(), words.end());
            CHECK(seen.size() == words.size());
            for (auto& w : words)
                for (unsigned r = 1; r < n; ++r) {
                    std::vector<unsigned> rot(w.begin() + r, w.end());
                    rot.insert(rot.end(), w.begin(), w.begin() + r);
                    CHECK(w < rot);  // strictly smallest rotation: aperiodic representative
                }
        }

    for (unsigned long y : {4UL, 8UL}) {
        std::vector<Rational> wv;
        for (long t = 1; t <= 64; ++t) wv.push_back(q(1, t));
        const auto w = WeightSequence::from_values(wv);
        auto tot = infection_totals(2, w, y);
        Rational m = 0, l = 0, l2 = 0;
        const unsigned long n1 = 2 * y, n2 = 4 * y;
        for (long t = 1; t <= 64; ++t) {
            const Rational wt = q(1, t);
            if (pow2(-long(y)) < wt && wt < pow2(t - long(y))) m += wt;
            if (Rational(8 * n1) * pow2(-long(y)) < wt && wt < pow2(t - long(y))) l += wt;
            if (Rational(8 * n2) * pow2(-2 * long(y)) < wt && wt < pow2(t - 2 * long(y))) l2 += wt;
        }
        CHECK(tot.m_y == m);
        CHECK(tot.l_y == l);
        CHECK(tot.l_2y == l2);
        CHECK(tot.identity_holds);
        CHECK(l + l2 > m - 9);
    }
}

TEST_CASE("infection construction: marks agree with direct block sums") {
    const auto w = WeightSequence::from_values(std::vector<Rational>(12, q(5)));
    auto plan = build_infection(2, w, 4);
    const auto& bk = plan.bookkeeping;
    CHECK(bk["n0"] == 8);
    CHECK(bk["classes_total"] == 30);
    CHECK(bk["identity_holds"] == true);
    CHECK(plan.f.integral() == q(3 * 16, 255));
    CHECK(plan.holds());

    // independent alpha and orbit
    const std::string digits = bk["alpha_digits"];
    const Rational alpha(BigInt(digits, 2), pow(BigInt(2), digits.size()));
    const Rational D = 255;
    auto f = [&](const Rational& z) { return in_arc(z, -1 / D, 2 / D) ? 16 : 0; };
    const auto words = lyndon_words(2, 8);
    std::size_t marked = 0, assigned = 0;
    for (const auto& blk : bk["blocks"]) {
        const std::size_t t = blk["t"];
        std::vector<Rational> s;
        BigInt kn = pow(BigInt(2), (1UL << (t - 1)));
        for (std::size_t n = (1UL << (t - 1)) + 1; n <= (1UL << t); ++n) {
            kn *= 2;
            s.push_back(frac(alpha * Rational(kn)));
        }
        assigned += blk["classes"].size();
        marked += blk["infected"].get<std::size_t>();
        for (std::size_t cls : blk["classes"]) {
            const auto& word = words[cls];
            for (std::size_t r = 0; r < 8; ++r) {
                long v = 0;
                for (std::size_t i = 0; i < 8; ++i) v = 2 * v + word[(r + i) % 8];
                const Rational left = Rational(v) / D;
                for (const Rational& x : std::vector<Rational>{left, left + 1 / (2 * D), left + 1 / D - 1 / (1000 * D)}) {
                    long sum = 0;
                    for (const auto& sn : s) sum += f(x - sn);
                    CHECK(q(5) * sum / Rational(1L << t) > 1);
                }
            }
        }
    }
    CHECK(marked == assigned);
    CHECK(assigned == 19);
    CHECK(plan.claimed_bound == PowerValue::scalar(Rational(19 * 8, 255) / plan.f.integral(), Exponent{}));
}

TEST_CASE("infection guard and empty plan") {
    CHECK_THROWS_AS(build_infection(2, WeightSequence::from_values(std::vector<Rational>(30, q(1))), 4),
                    ResourceGuardError);
    auto empty = build_infection(2, WeightSequence::from_values(std::vector<Rational>(6, q(1, 1000))), 3);
    CHECK(empty.bookkeeping["empty"] == true);
}

TEST_CASE("sumset construction") {
    auto one = build_sumset(3, {0}, 1);
    std::vector<std::int64_t> want;
    for (int i = 1; i <= 9; ++i) want.push_back(6 * i);
    CHECK(one.instance.B == want);

    auto two = build_sumset(3, {0, 2}, 2);
    CHECK(two.instance.B.size() == 9 * 6561);
    const auto& ch = two.checks;
    CHECK(ch.unique_decomposition);
    CHECK(ch.c_large);
    CHECK(ch.half_lower);
    CHECK(ch.disjoint);
    CHECK(ch.differences_outside);
    CHECK(ch.weak_bound);

    // brute-force oracle: explicit set intersection and the weak norm
    std::set<std::int64_t> B(two.instance.B.begin(), two.instance.B.end());
    std::set<std::int64_t> t0, t2;
    for (auto c : two.instance.C) {
        t0.insert(c - 3);
        t2.insert(c - 6561);
    }
    std::vector<std::int64_t> inter;
    std::set_intersection(t0.begin(), t0.end(), t2.begin(), t2.end(), std::back_inserter(inter));
    CHECK(inter.empty());

    std::map<std::int64_t, Rational> sup;
    for (unsigned L : {1u, 3u}) {
        std::int64_t kn = 1;
        std::map<std::int64_t, long> cnt;
        for (unsigned n = 1; n <= (1u << L); ++n) {
            kn *= 3;
            for (auto b : B)
                if (b - kn >= 0) ++cnt[b - kn];
        }
        for (auto& [x, c] : cnt) sup[x] = std::max(sup[x], Rational(c, 1L << L));
    }
    std::map<Rational, long> hist;
    for (auto& [x, v] : sup) hist[v] += 1;
    Rational weak = 0;
    long above = 0;
    for (auto it = hist.rbegin(); it != hist.rend(); ++it) {
        above += it->second;
        weak = std::max(weak, Rational(it->first * it->first * above));
    }
    CHECK(*two.report.weak_p.front().exact() == weak);
    CHECK(weak >= Rational(2 * B.size(), 16));

    CHECK_THROWS_AS(build_sumset(3, {0, 1}, 1), DomainError);
    CHECK_THROWS_AS(build_sumset(3, {3}, 1), ResourceGuardError);
    CHECK_THROWS_AS(build_sumset(2, {0}, 1), DomainError);
}
