#include "divergia/constructions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "divergia/errors.hpp"
#include "divergia/kernels.hpp"

namespace divergia::constructions {

using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

bool squarefree(unsigned long n) {
    for (unsigned long p = 2; p * p <= n; ++p)
        if (n % (p * p) == 0) return false;
    return true;
}

json rationals(const std::vector<Rational>& v) {
    json a = json::array();
    for (const auto& q : v) a.push_back(to_string(q));
    return a;
}

// v / m for a single-term m = c b^p
PowerValue divide_by_monomial(const PowerValue& v, const PowerValue& m) {
    if (m.terms().size() != 1) throw InvariantError("expected a monomial norm");
    const auto& [b, c] = *m.terms().begin();
    return v.scaled(1 / c, 1 / b);
}

// min of g over [a, a + len) on the unit circle
Rational min_on(const StepFunction& g, const Rational& a0, const Rational& len) {
    const Rational a = mod(a0, 1);
    std::vector<std::pair<Rational, Rational>> spans;
    if (a + len <= 1) {
        spans.emplace_back(a, a + len);
    } else {
        spans.emplace_back(a, Rational(1));
        spans.emplace_back(Rational(0), Rational(a + len - 1));
    }
    std::optional<Rational> best;
    for (const auto& pc : g.pieces())
        for (const auto& [lo, hi] : spans)
            if (std::max(pc.start, lo) < std::min(pc.end, hi) && (!best || pc.value < *best)) best = pc.value;
    return best.value_or(Rational(0));
}

Rational ratio(unsigned long a, unsigned long b) {
    Rational q(a, b);
    q.canonicalize();
    return q;
}

WeightSequence halved(const WeightSequence& w) {
    std::vector<Rational> v;
    for (const auto& x : w.values) v.push_back(x / 2);
    return WeightSequence::from_values(std::move(v));
}

}  // namespace

// ---------------------------------------------------------------- sequences

Interval Term::enclose(mpfr_prec_t bits) const {
    const Interval x = Interval::point(Rational(value), bits);
    return is_sqrt ? x.root(2) : x;
}

Rational Term::rational() const {
    if (is_sqrt) throw DomainError("sqrt(" + value.get_str() + ") is not rational here");
    return Rational(value);
}

std::string Term::describe() const { return is_sqrt ? "sqrt(" + value.get_str() + ")" : value.get_str(); }

bool operator<(const Term& a, const Term& b) {
    if (a.is_sqrt == b.is_sqrt) return a.value < b.value;
    if (a.is_sqrt) return a.value < b.value * b.value;
    return a.value * a.value < b.value;
}

TimeSequence TimeSequence::power(unsigned long k) {
    if (k < 2) throw DomainError("power(k) needs k >= 2");
    TimeSequence s;
    s.kind = Kind::Power;
    s.base = k;
    return s;
}

TimeSequence TimeSequence::of(Kind kind) {
    TimeSequence s;
    s.kind = kind;
    return s;
}

TimeSequence TimeSequence::explicit_list(std::vector<BigInt> terms) {
    for (const auto& t : terms)
        if (sgn(t) < 0) throw DomainError("explicit times must be nonnegative");
    TimeSequence s;
    s.kind = Kind::Explicit;
    s.list = std::move(terms);
    return s;
}

TimeSequence TimeSequence::parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (head == "power") {
        if (arg.empty()) throw DomainError("power needs a base, e.g. power:2");
        return power(std::stoul(arg));
    }
    if (head == "factorial") return of(Kind::Factorial);
    if (head == "sqrt_all") return of(Kind::SqrtAll);
    if (head == "sqrt_squarefree") return of(Kind::SqrtSquarefree);
    if (head == "floor_log") return of(Kind::FloorLog);
    if (head == "explicit") {
        std::vector<BigInt> v;
        for (const auto& s : split(arg, ',')) v.emplace_back(s);
        return explicit_list(std::move(v));
    }
    throw DomainError("unknown time sequence '" + text + "'");
}

std::string TimeSequence::describe() const {
    switch (kind) {
        case Kind::Power: return "power:" + std::to_string(base);
        case Kind::Factorial: return "factorial";
        case Kind::SqrtAll: return "sqrt_all";
        case Kind::SqrtSquarefree: return "sqrt_squarefree";
        case Kind::FloorLog: return "floor_log";
        case Kind::Explicit: {
            std::string s = "explicit:";
            for (std::size_t i = 0; i < list.size(); ++i) s += (i ? "," : "") + list[i].get_str();
            return s;
        }
    }
    return "?";
}

std::vector<Term> materialize(const TimeSequence& seq, std::size_t N) {
    if (N == 0) throw DomainError("materialize needs N >= 1");
    std::vector<Term> out;
    out.reserve(N);
    using K = TimeSequence::Kind;
    switch (seq.kind) {
        case K::Power: {
            BigInt v = 1;
            for (std::size_t n = 1; n <= N; ++n) out.push_back({v *= seq.base, false});
            break;
        }
        case K::Factorial: {
            BigInt v = 1;
            for (std::size_t n = 1; n <= N; ++n) out.push_back({v *= static_cast<unsigned long>(n), false});
            break;
        }
        case K::SqrtAll:
            for (std::size_t n = 1; n <= N; ++n) out.push_back({BigInt(static_cast<unsigned long>(n)), true});
            break;
        case K::SqrtSquarefree:
            for (unsigned long s = 2; out.size() < N; ++s)
                if (squarefree(s)) out.push_back({BigInt(s), true});
            break;
        case K::FloorLog: {
            // floor(ln n): the largest m with e^m <= n; e^m is never an integer for m >= 1
            unsigned long m = 0;
            for (std::size_t n = 1; n <= N; ++n) {
                const Rational q(static_cast<unsigned long>(n));
                for (;;) {
                    mpfr_prec_t bits = 128;
                    Interval e = Interval::point(Rational(m + 1), bits).exp();
                    while (!e.certainly_less(q) && !e.certainly_greater(q)) {
                        bits *= 2;
                        e = Interval::point(Rational(m + 1), bits).exp();
                    }
                    if (!e.certainly_less(q)) break;
                    ++m;
                }
                out.push_back({BigInt(m), false});
            }
            break;
        }
        case K::Explicit:
            if (N > seq.list.size()) throw DomainError("explicit sequence has only " + std::to_string(seq.list.size()) + " terms");
            for (std::size_t n = 0; n < N; ++n) out.push_back({seq.list[n], false});
            break;
    }
    return out;
}

std::vector<Rational> integer_times(const TimeSequence& seq, std::size_t N) {
    if (!seq.integer_valued()) throw DomainError(seq.describe() + " is not integer valued");
    std::vector<Rational> out;
    for (const auto& t : materialize(seq, N)) out.push_back(t.rational());
    return out;
}

namespace {

std::string trend(const std::vector<double>& v) {
    std::vector<double> x;
    for (double d : v)
        if (std::isfinite(d)) x.push_back(d);
    if (x.size() < 2) return "fails";
    const std::size_t mid = x.size() / 2;
    for (std::size_t i = mid + 1; i < x.size(); ++i)
        if (x[i] < x[i - 1] * (1 - 1e-12)) return "fails";
    return x.back() > 1.2 * x[mid] ? "grows" : "fails";
}

}  // namespace

LacunarityProfile lacunarity_profile(const TimeSequence& seq, const Rational& epsilon, std::size_t N) {
    if (N < 3) throw DomainError("lacunarity_profile needs N >= 3");
    const auto terms = materialize(seq, N);
    LacunarityProfile out;
    out.epsilon = epsilon;
    const double eps = to_double(epsilon);
    for (std::size_t n = 1; n < N; ++n) {
        const Term& a = terms[n - 1];
        const Term& b = terms[n];
        double r;
        if (sgn(a.value) == 0) {
            r = std::numeric_limits<double>::infinity();
        } else {
            const double q = to_double(Rational(b.value) / Rational(a.value));
            r = a.is_sqrt ? std::sqrt(q) : q;
        }
        const double nd = static_cast<double>(n);
        out.ratio.push_back(r);
        out.poly.push_back(r / std::pow(nd, eps));
        out.log.push_back(n == 1 ? std::nan("") : r / std::pow(std::log(nd), eps));
    }
    out.poly_trend = trend(out.poly);
    out.log_trend = trend(out.log);
    return out;
}

GapRefinement refine_bounded_gaps(const TimeSequence& seq, const std::function<Rational(std::size_t)>& target,
                                  std::size_t N, std::size_t window) {
    if (window == 0) throw DomainError("gap window must be >= 1");
    const auto a = integer_times(seq, N);
    for (std::size_t i = 1; i < N; ++i)
        if (a[i] <= a[i - 1]) throw DomainError("refine_bounded_gaps needs a strictly increasing sequence");
    GapRefinement out;
    out.indices.push_back(1);
    std::size_t last = 1;
    for (std::size_t i = 2; i <= N; ++i) {
        if (i - last > window) {
            out.failure = "no admissible term within " + std::to_string(window) + " of n = " + std::to_string(last);
            return out;
        }
        if (a[i - 1] / a[last - 1] > target(out.indices.size())) {
            out.max_gap = std::max(out.max_gap, i - last);
            out.indices.push_back(i);
            last = i;
        }
    }
    out.ok = true;
    return out;
}

// ---------------------------------------------------------------- residues

ResidueSolution solve_residues(const ResidueProblem& prob) {
    const auto& b = prob.terms;
    if (prob.K == 0) throw DomainError("K must be positive");
    if (b.empty() || b.size() != prob.targets.size()) throw DomainError("terms and targets must be nonempty and aligned");
    for (auto r : prob.targets)
        if (r >= prob.K) throw DomainError("target residue out of range");
    if (sgn(b[0]) <= 0) throw DomainError("terms must be positive");
    const Rational K(prob.K);
    for (std::size_t i = 0; i + 1 < b.size(); ++i)
        if (!(b[i + 1] > 2 * K * b[i]))
            throw DomainError("lacunarity fails: b_" + std::to_string(i + 2) + "/b_" + std::to_string(i + 1) + " = " +
                              to_string(Rational(b[i + 1] / b[i])) + " <= 2K");

    ResidueSolution out;
    out.lo = Rational(prob.targets[0]) / (K * b[0]);
    out.hi = out.lo + 1 / (K * b[0]);
    for (std::size_t i = 1; i < b.size(); ++i) {
        // smallest m with (m + r/K)/b >= lo
        const Rational rK = Rational(prob.targets[i]) / K;
        const BigInt m = ceil(out.lo * b[i] - rK);
        const Rational start = (Rational(m) + rK) / b[i];
        const Rational end = start + 1 / (K * b[i]);
        out.slack.push_back(out.hi - end);
        if (end > out.hi) throw InvariantError("nested interval containment failed at step " + std::to_string(i + 1));
        out.lo = start;
        out.hi = end;
    }
    out.midpoint = (out.lo + out.hi) / 2;
    for (std::size_t i = 0; i < b.size(); ++i) {
        const Rational c = frac(out.midpoint * b[i]);
        const Rational lo = Rational(prob.targets[i]) / K;
        if (c < lo || c >= lo + 1 / K) throw InvariantError("residue certificate failed at term " + std::to_string(i + 1));
        out.certificate.push_back(c);
    }
    return out;
}

SearchSolution search_residues(const std::vector<Term>& terms, unsigned long K,
                               const std::vector<unsigned long>& targets, std::size_t budget) {
    if (K == 0 || terms.empty() || terms.size() != targets.size()) throw DomainError("malformed residue search");
    for (auto r : targets)
        if (r >= K) throw DomainError("target residue out of range");
    constexpr mpfr_prec_t bits = 192;
    std::vector<Interval> enc;
    for (const auto& t : terms) enc.push_back(t.enclose(bits));
    SearchSolution out;
    for (unsigned long Q = 16;; Q *= 2) {
        // beta in (0, 64], odd numerators after the first grid
        for (unsigned long i = 1; i <= 64 * Q; i += (Q == 16 ? 1 : 2)) {
            if (++out.evaluations > budget)
                throw PrecisionError("residue search exhausted its budget of " + std::to_string(budget));
            const Rational beta = make_rational(static_cast<long>(i), static_cast<long>(Q));
            const Interval B = Interval::point(beta, bits);
            std::vector<Interval> cert;
            bool ok = true;
            for (std::size_t j = 0; j < terms.size() && ok; ++j) {
                Interval x = B * enc[j];
                const BigInt fl = floor(x.lo().to_rational());
                if (floor(x.hi().to_rational()) != fl) {
                    ok = false;
                    break;
                }
                x = x - Interval::point(Rational(fl), bits);
                const Rational lo = make_rational(static_cast<long>(targets[j]), static_cast<long>(K));
                const Rational hi = make_rational(static_cast<long>(targets[j] + 1), static_cast<long>(K));
                ok = x.lo().compare(lo) >= 0 && x.hi().compare(hi) < 0;
                cert.push_back(x);
            }
            if (ok) {
                out.beta = beta;
                out.certificate = std::move(cert);
                return out;
            }
        }
    }
}

// ---------------------------------------------------------------- ubL1

ConstructionPlan build_ubL1(const WeightSequence& w, unsigned long M, const TimeSequence& seq, unsigned long n0) {
    if (M == 0) throw DomainError("M must be >= 1");
    const std::size_t T = w.horizon();
    if (T == 0) throw DomainError("empty weight sequence");
    if (T > 12) throw ResourceGuardError("build_ubL1 materializes 2^T times; horizon capped at 12");
    const Rational Mq(M);

    // scan N upward; first N with the window sum > 3M and full residue coverage
    Rational best = 0;
    for (unsigned long N = std::max(1UL, n0 + 1); 2 * N < (1UL << T); ++N) {
        const Rational invN = ratio(1, N);
        Rational ysum = 0;
        std::vector<std::size_t> U;
        Rational usum = 0;
        for (std::size_t t = 1; t <= T; ++t) {
            const Rational& wt = w.at(t);
            const Rational cap = Rational(pow2(static_cast<long>(t))) / (4 * N);
            if (invN < wt && wt < cap) {
                ysum += wt;
                if ((1UL << t) > 2 * N) {
                    U.push_back(t);
                    usum += wt;
                }
            }
        }
        best = std::max(best, ysum);
        if (!(ysum > 3 * Mq) || !(usum > 2 * Mq)) continue;
        const unsigned long K = N * M;
        std::vector<unsigned long> c(T + 1), q(T + 1);
        unsigned long cover = 0;
        for (auto t : U) {
            const Rational half = pow2(static_cast<long>(t) - 1);
            c[t] = ceil(Rational(half / (N * w.at(t)))).get_ui();
            q[t] = std::min({floor(Rational(N * w.at(t))).get_ui(), floor(Rational(half / c[t])).get_ui(), K});
            cover += q[t];
        }
        if (cover < K) continue;

        // round-robin residue classes, then the constrained terms block by block
        ConstructionPlan plan;
        plan.name = "ubl1";
        plan.p = 1;
        const auto times = integer_times(seq, std::size_t{1} << T);
        ResidueProblem prob;
        prob.K = K;
        json per_t = json::array();
        unsigned long next = 0;
        for (auto t : U) {
            std::vector<unsigned long> R;
            for (unsigned long i = 0; i < q[t]; ++i) {
                R.push_back(next);
                next = (next + 1) % K;
            }
            const std::size_t start = (std::size_t{1} << (t - 1)) + 1;
            for (std::size_t i = 0; i < R.size(); ++i)
                for (std::size_t j = 0; j < c[t]; ++j) {
                    prob.terms.push_back(times[start + i * c[t] + j - 1]);
                    prob.targets.push_back(R[i]);
                }
            per_t.push_back({{"t", t}, {"w_t", to_string(w.at(t))}, {"c_t", c[t]}, {"q_t", q[t]}, {"R_t", R}});
        }
        const ResidueSolution sol = solve_residues(prob);
        const Rational beta = sol.midpoint;

        plan.system = SystemModel{dynsys::Translation{beta, 1, false}};
        // for K = 1 the support [0, 2/K) covers the circle and f is constant
        plan.f = K == 1 ? StepFunction::constant(measure::Domain::circle(1), Rational(2 * N))
                        : StepFunction::indicator(measure::Domain::circle(1), 0, ratio(2, K), Rational(2 * N));
        plan.w = w;
        plan.times = times;
        if (K > 1 && plan.f.integral() != 4 / Mq) throw InvariantError("||f||_1 != 4/M");

        // block normalization: w_t 2^-t sum over the block = (w_t/2) A_t^block
        const auto res = dynsys::maximal_profile(plan.system, plan.f, times, halved(w), T, {1},
                                                 dynsys::AverageMode::Block);
        const Rational covered = res.profile.measure_at_least(1);
        if (covered != 1) throw InvariantError("exceedance set has measure " + to_string(covered) + ", not 1");
        if (!(covered >= Mq / 4 * plan.f.integral())) throw InvariantError("1 >= (M/4)||f||_1 fails");

        plan.claimed_bound = PowerValue::scalar(Mq / 4, Exponent{});
        plan.achieved = divide_by_monomial(res.report.weak_p.front(), norms(plan.f, 1).strong_p);
        plan.bookkeeping = {{"N", N},
                            {"K", K},
                            {"M", M},
                            {"n0", n0},
                            {"U", U},
                            {"ycond_sum", to_string(ysum)},
                            {"U_sum", to_string(usum)},
                            {"blocks", per_t},
                            {"constrained_terms", prob.terms.size()},
                            {"beta", to_string(beta)},
                            {"alpha", to_string(Rational(beta * K))},
                            {"interval", {to_string(sol.lo), to_string(sol.hi)}},
                            {"f_L1", to_string(plan.f.integral())},
                            {"exceedance_measure", to_string(covered)},
                            {"weak_1", res.report.weak_p.front().expression()}};
        plan.inputs = {{"experiment", "ubl1"},
                       {"weights", rationals(w.values)},
                       {"M", M},
                       {"sequence", seq.describe()},
                       {"n0", n0}};
        return plan;
    }
    throw DomainError("horizon too small: no qualifying N; largest window sum " + to_string(best) + " vs 3M = " +
                      std::to_string(3 * M));
}

// ---------------------------------------------------------------- ubLp

namespace {

// Exact ubLp evaluation for a_n = B^n with K | B. alpha gets a finite base-B
// expansion whose digit d_(n+1) = l B / K puts frac(B^n beta) in class l, so
// every breakpoint is (leading digit, tail) and tails order like suffixes.
struct DigitUbLp {
    Rational beta;
    std::vector<unsigned> digits;  // d_1..d_L
    PowerValue weak_p;
    Rational attaining_level;
    Rational measure_at_least_1;
    std::size_t cells = 0;
};

std::vector<std::uint32_t> suffix_ranks(const std::vector<unsigned>& c) {
    // c includes a unique smallest sentinel at the end
    const std::size_t n = c.size();
    std::vector<std::uint32_t> sa(n), rank(n), tmp(n);
    for (std::size_t i = 0; i < n; ++i) {
        sa[i] = static_cast<std::uint32_t>(i);
        rank[i] = c[i];
    }
    for (std::size_t k = 1;; k *= 2) {
        auto key = [&](std::uint32_t i) {
            return std::pair<std::int64_t, std::int64_t>(rank[i], i + k < n ? rank[i + k] : -1);
        };
        std::sort(sa.begin(), sa.end(), [&](std::uint32_t a, std::uint32_t b) { return key(a) < key(b); });
        tmp[sa[0]] = 0;
        for (std::size_t i = 1; i < n; ++i) tmp[sa[i]] = tmp[sa[i - 1]] + (key(sa[i - 1]) < key(sa[i]) ? 1 : 0);
        rank = tmp;
        if (rank[sa[n - 1]] == n - 1) break;
    }
    return rank;
}

DigitUbLp ubLp_digits(const std::vector<unsigned long>& J, const std::vector<unsigned long>& Jp, unsigned long K,
                      unsigned long B, const Exponent& e) {
    const unsigned long top = J.back();
    const std::size_t Nt = std::size_t{1} << top;
    const std::size_t L = Nt + 1;
    DigitUbLp out;
    std::vector<unsigned> d(L + 2, 0);  // 1-indexed
    for (unsigned long l = 0; l < K; ++l)
        for (std::size_t n = (std::size_t{1} << (Jp[l] - 1)) + 1; n <= (std::size_t{1} << Jp[l]); ++n)
            d[n + 1] = static_cast<unsigned>(l * B / K);
    if (d[L] == 0) throw InvariantError("last digit must be nonzero");
    out.digits.assign(d.begin() + 1, d.begin() + static_cast<long>(L) + 1);

    // rank of the tail starting at digit s, s = 1..L+1 (L+1 is the empty tail)
    std::vector<unsigned> c(L + 1);
    for (std::size_t s = 1; s <= L; ++s) c[s - 1] = d[s] + 1;
    c[L] = 0;
    const auto rk = suffix_ranks(c);
    auto tail_rank = [&](std::size_t s) { return static_cast<std::uint64_t>(rk[s - 1]); };

    const unsigned long shift = 2 * B / K;
    struct Event {
        std::uint64_t key;
        std::uint32_t n;
        bool start;
    };
    std::vector<Event> ev;
    ev.reserve(2 * Nt);
    std::vector<unsigned> jmin(Nt + 1);
    std::vector<long> count(J.size(), 0);
    for (std::size_t n = 1; n <= Nt; ++n) {
        const unsigned long lead = d[n + 1];
        const unsigned long lead2 = (lead + shift) % B;
        const std::uint64_t r = tail_rank(n + 2);
        ev.push_back({lead * (L + 2) + r, static_cast<std::uint32_t>(n), true});
        ev.push_back({lead2 * (L + 2) + r, static_cast<std::uint32_t>(n), false});
        unsigned ji = 0;
        while ((std::size_t{1} << J[ji]) < n) ++ji;
        jmin[n] = ji;
        if (lead + shift >= B)  // arc wraps through 0
            for (std::size_t i = ji; i < J.size(); ++i) ++count[i];
    }
    std::sort(ev.begin(), ev.end(), [](const Event& a, const Event& b) { return a.key < b.key; });

    // cell i runs from endpoint i-1 to endpoint i; -1 is 0 and ev.size() is 1
    const std::size_t ncells = ev.size() + 1;
    std::vector<std::uint64_t> value(ncells);
    auto current = [&] {
        std::uint64_t best = 0;
        for (std::size_t i = 0; i < J.size(); ++i)
            best = std::max(best, static_cast<std::uint64_t>(count[i]) << (top - J[i] + 1));
        return best;
    };
    value[0] = current();
    for (std::size_t i = 0; i < ev.size(); ++i) {
        const long delta = ev[i].start ? 1 : -1;
        for (std::size_t k = jmin[ev[i].n]; k < J.size(); ++k) count[k] += delta;
        value[i + 1] = current();
    }
    for (auto x : count)
        if (x < 0) throw InvariantError("negative coverage in the digit sweep");
    out.cells = ncells;

    auto lead_of = [&](const Event& x) {
        const unsigned long lead = d[x.n + 1];
        return x.start ? lead : (lead + shift) % B;
    };
    // approximate positions pick the candidate levels; exact sums decide
    std::vector<long double> pos(ev.size());
    for (std::size_t i = 0; i < ev.size(); ++i) {
        long double t = 0, scale = 1.0L / B;
        for (std::size_t s = ev[i].n + 2; s <= L && s < ev[i].n + 30; ++s) {
            t += d[s] * scale;
            scale /= B;
        }
        pos[i] = (lead_of(ev[i]) + t) / B;
    }
    std::map<std::uint64_t, long double, std::greater<>> approx;
    for (std::size_t cidx = 0; cidx < ncells; ++cidx) {
        const long double a = cidx == 0 ? 0.0L : pos[cidx - 1];
        const long double b = cidx == ev.size() ? 1.0L : pos[cidx];
        approx[value[cidx]] += b - a;
    }
    const long double pd = static_cast<long double>(to_double(e.value()));
    const long double unit = std::ldexp(1.0L, -static_cast<int>(top));
    long double best = 0, tail = 0;
    std::vector<std::pair<std::uint64_t, long double>> scored;
    for (const auto& [v, len] : approx) {
        tail += len;
        if (v == 0) continue;
        const long double s = std::pow(v * unit, pd) * tail;
        scored.emplace_back(v, s);
        best = std::max(best, s);
    }

    BigInt PL = 0, BL = 1;
    for (std::size_t s = 1; s <= L; ++s) {
        PL = PL * B + d[s];
        BL *= B;
    }
    out.beta = Rational(PL, BL);
    out.beta.canonicalize();

    // mu{value >= v} exactly
    auto exact_measure = [&](std::uint64_t v) {
        std::vector<long> a(L + 1, 0);  // coefficient of theta_m
        long lead_sum = 0;
        long ones = 0;
        auto endpoint = [&](std::size_t idx, long sign) {
            if (idx == ev.size()) {
                ones += sign;
                return;
            }
            lead_sum += sign * static_cast<long>(lead_of(ev[idx]));
            a[ev[idx].n + 1] += sign;
        };
        for (std::size_t cidx = 0; cidx < ncells; ++cidx) {
            if (value[cidx] < v) continue;
            endpoint(cidx, 1);
            if (cidx > 0) endpoint(cidx - 1, -1);
        }
        // sum_m a_m theta_m = (P_L S - B^L Q) / B^L
        BigInt R = 0, Q = 0;
        for (std::size_t i = L; i >= 1; --i) {
            R *= B;
            R += a[i];
            Q += R * d[i];
        }
        const BigInt S = R * B;
        Rational tails(BigInt(PL * S - BL * Q), BL);
        tails.canonicalize();
        return Rational(Rational(lead_sum, 1) / B + ones + tails / B);
    };
    if (exact_measure(0) != 1) throw InvariantError("digit sweep does not tile the circle");

    out.weak_p = PowerValue::zero(e);
    for (const auto& [v, s] : scored) {
        if (s < best * (1 - 1e-9L)) continue;
        const Rational level = Rational(BigInt(v)) * pow2(-static_cast<long>(top));
        auto cand = PowerValue::monomial(exact_measure(v), level, e);
        if (out.weak_p.is_zero() || out.weak_p < cand) {
            out.weak_p = cand;
            out.attaining_level = level;
        }
    }
    out.measure_at_least_1 = exact_measure(std::uint64_t{1} << top);
    return out;
}

}  // namespace

ConstructionPlan build_ubLp(const std::vector<unsigned long>& Jin, const Rational& p, unsigned long n0,
                            const TimeSequence& seq) {
    std::vector<unsigned long> J = Jin;
    std::sort(J.begin(), J.end());
    J.erase(std::unique(J.begin(), J.end()), J.end());
    if (J.empty()) throw DomainError("J must be nonempty");
    if (J.front() == 0) throw DomainError("levels in J start at 1");
    if (p < 1) throw DomainError("p must be >= 1");
    const Exponent e = Exponent::from(p);
    const Rational size(static_cast<unsigned long>(J.size()));

    ConstructionPlan plan;
    plan.name = "ublp";
    plan.p = p;
    plan.inputs = {{"experiment", "ublp"}, {"J", J}, {"p", to_string(p)}, {"n0", n0}, {"sequence", seq.describe()}};
    const measure::Domain d = measure::Domain::circle(1);

    if (J.size() <= 2 * n0) {
        // constant f: every average equals f
        plan.system = SystemModel{dynsys::Translation{0, 1, false}};
        plan.f = StepFunction::constant(d, 1);
        plan.claimed_bound = PowerValue::scalar(size / (2 * n0), e);
        plan.achieved = PowerValue::scalar(1, e);
        plan.bookkeeping = {{"branch", "constant"}, {"J", J}, {"n0", n0}};
        return plan;
    }
    const unsigned long K = J.size() / 2;
    const std::vector<unsigned long> Jp(J.end() - static_cast<long>(K), J.end());
    const bool digit_path = seq.kind == TimeSequence::Kind::Power && K >= 3 && seq.base % K == 0 && seq.base > 2 * K;
    if (digit_path) {
        if (J.back() > 18) throw ResourceGuardError("digit evaluation of build_ubLp: max(J) capped at 18");
        const DigitUbLp r = ubLp_digits(J, Jp, K, seq.base, e);
        plan.system = SystemModel{dynsys::Translation{Rational(-r.beta), 1, false}};
        plan.f = StepFunction::indicator(d, 0, ratio(2, K), 2);
        const PowerValue fp = norms(plan.f, p).strong_p;
        if (!(fp == PowerValue::monomial(ratio(2, K), 2, e))) throw InvariantError("||f||_p^p != 2^(p+1)/K");
        plan.claimed_bound = PowerValue::monomial(size / 4, Rational(1, 2), e);
        plan.achieved = divide_by_monomial(r.weak_p, fp);
        std::string digits;
        for (auto x : r.digits) digits += std::to_string(x) + (&x == &r.digits.back() ? "" : ",");
        plan.bookkeeping = {{"branch", "digits"},
                            {"J", J},
                            {"J_prime", Jp},
                            {"K", K},
                            {"N", K},
                            {"n0", n0},
                            {"base", seq.base},
                            {"beta_digits", digits},
                            {"cells", r.cells},
                            {"measure_max_at_least_1", to_string(r.measure_at_least_1)},
                            {"weak_p", r.weak_p.expression()},
                            {"f_strong_p", fp.expression()},
                            {"attaining_level", to_string(r.attaining_level)}};
        return plan;
    }
    if (J.back() > 12) throw ResourceGuardError("build_ubLp materializes 2^max(J) times; max(J) capped at 12");

    const auto times = integer_times(seq, std::size_t{1} << J.back());
    ResidueProblem prob;
    prob.K = K;
    for (unsigned long l = 0; l < K; ++l) {
        const std::size_t j = Jp[l];
        for (std::size_t n = (std::size_t{1} << (j - 1)) + 1; n <= (std::size_t{1} << j); ++n) {
            prob.terms.push_back(times[n - 1]);
            prob.targets.push_back(l);
        }
    }
    const ResidueSolution sol = solve_residues(prob);
    const Rational beta = sol.midpoint;

    // T^t x = x - alpha t on [0, K), divided by K
    plan.system = SystemModel{dynsys::Translation{Rational(-beta), 1, false}};
    plan.f = K == 1 ? StepFunction::constant(d, 2) : StepFunction::indicator(d, 0, ratio(2, K), 2);
    plan.times = times;
    const PowerValue fp = norms(plan.f, p).strong_p;
    if (K > 1 && !(fp == PowerValue::monomial(ratio(2, K), 2, e))) throw InvariantError("||f||_p^p != 2^(p+1)/K");

    std::vector<StepFunction> avgs;
    for (auto j : J) avgs.push_back(dynsys::average(plan.system, plan.f, times, j));
    const StepFunction mx = measure::pointwise_max(avgs);
    const auto nm = norms(mx, p);

    plan.claimed_bound = PowerValue::monomial(size / 4, Rational(1, 2), e);
    plan.achieved = divide_by_monomial(nm.weak_p, fp);
    plan.bookkeeping = {{"branch", "blocks"},
                        {"J", J},
                        {"J_prime", Jp},
                        {"K", K},
                        {"N", K},
                        {"n0", n0},
                        {"constrained_terms", prob.terms.size()},
                        {"beta", to_string(beta)},
                        {"alpha", to_string(Rational(beta * K))},
                        {"measure_max_at_least_1", to_string(mx.measure_at_least(1))},
                        {"weak_p", nm.weak_p.expression()},
                        {"f_strong_p", fp.expression()},
                        {"attaining_level", to_string(nm.attaining_level)}};
    return plan;
}

// ---------------------------------------------------------------- infection

namespace {

unsigned long infection_n0(unsigned long k, unsigned long y) {
    // largest n with k^n <= 2^(2y)
    const BigInt cap = pow(BigInt(2), 2 * y);
    unsigned long n = 0;
    while (pow(BigInt(k), n + 1) <= cap) ++n;
    return n;
}

bool qualifies(const Rational& wt, std::size_t t, unsigned long n0, unsigned long y) {
    const long ly = static_cast<long>(y);
    return 8 * Rational(n0) * pow2(-ly) < wt && wt < pow2(static_cast<long>(t) - ly);
}

}  // namespace

InfectionTotals infection_totals(unsigned long k, const WeightSequence& w, unsigned long y) {
    if (k < 2 || y == 0) throw DomainError("infection needs k >= 2 and y >= 1");
    InfectionTotals out;
    out.n0 = infection_n0(k, y);
    const unsigned long n2 = infection_n0(k, 2 * y);
    const long ly = static_cast<long>(y);
    out.m_y = 0;
    out.l_y = 0;
    out.l_2y = 0;
    for (std::size_t t = 1; t <= w.horizon(); ++t) {
        const Rational& wt = w.at(t);
        if (pow2(-ly) < wt && wt < pow2(static_cast<long>(t) - ly)) out.m_y += wt;
        if (qualifies(wt, t, out.n0, y)) out.l_y += wt;
        if (qualifies(wt, t, n2, 2 * y)) out.l_2y += wt;
    }
    out.identity_holds = out.l_y + out.l_2y > out.m_y - 9;
    return out;
}

std::vector<std::vector<unsigned>> lyndon_words(unsigned k, unsigned n) {
    std::vector<std::vector<unsigned>> out;
    if (k == 0 || n == 0) return out;
    std::vector<int> w{-1};
    while (!w.empty()) {
        ++w.back();
        const std::size_t m = w.size();
        if (m == n) out.emplace_back(w.begin(), w.end());
        while (w.size() < n) w.push_back(w[w.size() - m]);
        while (!w.empty() && w.back() == static_cast<int>(k) - 1) w.pop_back();
    }
    return out;
}

ConstructionPlan build_infection(unsigned long k, const WeightSequence& w, unsigned long y) {
    const InfectionTotals tot = infection_totals(k, w, y);
    const unsigned long n0 = tot.n0;
    const std::size_t T = w.horizon();
    if (T == 0) throw DomainError("empty weight sequence");
    if (T >= 40 || static_cast<double>(n0) * std::ldexp(1.0, static_cast<int>(T)) > 1e8)
        throw ResourceGuardError("infection guard: n0 * 2^T exceeds 1e8");
    if (pow(BigInt(k), n0) > BigInt(1) << 24) throw ResourceGuardError("infection guard: k^n0 exceeds 2^24");

    const BigInt Dz = pow(BigInt(k), n0) - 1;
    const Rational D(Dz);
    const long ly = static_cast<long>(y);
    ConstructionPlan plan;
    plan.name = "infection";
    plan.p = 1;
    plan.w = w;
    plan.inputs = {{"experiment", "infection"}, {"k", k}, {"weights", rationals(w.values)}, {"y", y}};
    plan.f = StepFunction::indicator(measure::Domain::circle(1), -1 / D, 2 / D, pow2(ly));

    const auto words = lyndon_words(static_cast<unsigned>(k), static_cast<unsigned>(n0));
    const std::size_t horizon = std::size_t{1} << T;
    std::vector<unsigned> digits(horizon + 2 * n0, 0);
    std::size_t next = 0;
    bool saturated = false;
    struct Assignment {
        std::size_t t;
        unsigned long repetitions;
        std::vector<std::size_t> classes;
    };
    std::vector<Assignment> plan_t;
    for (std::size_t t = 1; t <= T; ++t) {
        if (!qualifies(w.at(t), t, n0, y)) continue;
        Assignment a{t, 0, {}};
        // floor(2^(t-y)/w_t) + 3 copies: at least floor(.) + 1 complete hits per point
        a.repetitions = floor(Rational(pow2(static_cast<long>(t) - ly) / w.at(t))).get_ui() + 3;
        const std::size_t run = a.repetitions * n0;
        const std::size_t start = std::size_t{1} << (t - 1);
        for (std::size_t c = 0; c < start / run; ++c) {
            if (next == words.size()) {
                saturated = true;
                break;
            }
            for (std::size_t r = 0; r < a.repetitions; ++r)
                for (std::size_t i = 0; i < n0; ++i) digits[start + c * run + r * n0 + i] = words[next][i];
            a.classes.push_back(next++);
        }
        plan_t.push_back(std::move(a));
    }

    dynsys::DigitReal alpha{static_cast<unsigned>(k), digits, 2 * n0};
    plan.system = SystemModel{dynsys::DigitRotation{alpha, true}};
    plan.times.reserve(horizon);
    {
        BigInt v = 1;
        for (std::size_t n = 1; n <= horizon; ++n) plan.times.emplace_back(v *= k);
    }

    json per_t = json::array();
    std::vector<StepFunction> exceed;
    std::size_t infected = 0;
    std::vector<std::size_t> infected_classes;
    for (const auto& a : plan_t) {
        // (w_t/2) A^block = w_t 2^-t sum over the block
        const Rational half_w = w.at(a.t) / 2;
        StepFunction E = dynsys::average(plan.system, plan.f, plan.times, a.t, dynsys::AverageMode::Block)
                             .map_values([&](const Rational& v) { return Rational(v * half_w); });
        std::size_t hit = 0;
        for (auto cls : a.classes) {
            bool all = true;
            const auto& word = words[cls];
            for (std::size_t r = 0; r < n0 && all; ++r) {
                BigInt v = 0;
                for (std::size_t i = 0; i < n0; ++i) v = v * k + word[(r + i) % n0];
                all = min_on(E, Rational(v) / D, 1 / D) > 1;
            }
            if (all) {
                ++hit;
                infected_classes.push_back(cls);
            }
        }
        infected += hit;
        per_t.push_back({{"t", a.t},
                         {"w_t", to_string(w.at(a.t))},
                         {"repetitions", a.repetitions},
                         {"classes", a.classes},
                         {"infected", hit}});
        exceed.push_back(std::move(E));
    }

    const Rational infected_measure = Rational(static_cast<unsigned long>(infected * n0)) / D;
    const Rational fL1 = plan.f.integral();
    plan.claimed_bound = PowerValue::scalar(infected_measure / fL1, Exponent{});
    if (exceed.empty()) {
        plan.achieved = PowerValue::scalar(0, Exponent{});
    } else {
        const StepFunction prof = measure::pointwise_max(exceed);
        plan.achieved = PowerValue::scalar(*norms(prof, 1).weak_p.exact() / fL1, Exponent{});
    }
    std::string digit_text;
    for (std::size_t i = 0; i < horizon; ++i) digit_text.push_back("0123456789abcdefghijklmnopqrstuvwxyz"[digits[i]]);
    plan.bookkeeping = {{"k", k},
                        {"y", y},
                        {"n0", n0},
                        {"D", Dz.get_str()},
                        {"classes_total", words.size()},
                        {"classes_used", next},
                        {"saturated", saturated},
                        {"empty", plan_t.empty()},
                        {"blocks", per_t},
                        {"infected_classes", infected_classes},
                        {"infected_measure", to_string(infected_measure)},
                        {"f_L1", to_string(fL1)},
                        {"m_y", to_string(tot.m_y)},
                        {"l_y", to_string(tot.l_y)},
                        {"l_2y", to_string(tot.l_2y)},
                        {"identity_holds", tot.identity_holds},
                        {"alpha_digits", digit_text}};
    return plan;
}

// ---------------------------------------------------------------- sumset

namespace {

std::int64_t ipow(std::int64_t b, std::uint64_t e) {
    std::int64_t r = 1;
    for (std::uint64_t i = 0; i < e; ++i) {
        if (r > std::numeric_limits<std::int64_t>::max() / b) throw ResourceGuardError("sumset: integer overflow");
        r *= b;
    }
    return r;
}

std::vector<std::int64_t> sumset(const std::vector<std::vector<std::int64_t>>& parts) {
    std::vector<std::int64_t> acc{0};
    for (const auto& part : parts) {
        std::vector<std::int64_t> nxt;
        nxt.reserve(acc.size() * part.size());
        for (auto a : acc)
            for (auto b : part) nxt.push_back(a + b);
        acc = std::move(nxt);
    }
    std::sort(acc.begin(), acc.end());
    return acc;
}

// is d a sum of s_j c_j with |s_j| < top_j ?
bool in_difference_set(__int128 d, const std::vector<std::int64_t>& c, const std::vector<std::int64_t>& top,
                       std::size_t i, const std::vector<__int128>& reach) {
    if (i == c.size()) return d == 0;
    const __int128 ci = c[i];
    const __int128 r = reach[i + 1];
    auto fdiv = [](__int128 a, __int128 b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
    __int128 lo = -fdiv(-(d - r), ci);  // ceil((d - r)/c)
    __int128 hi = fdiv(d + r, ci);
    lo = std::max<__int128>(lo, -(top[i] - 1));
    hi = std::min<__int128>(hi, top[i] - 1);
    for (__int128 s = lo; s <= hi; ++s)
        if (in_difference_set(d - s * ci, c, top, i + 1, reach)) return true;
    return false;
}

}  // namespace

SumsetResult build_sumset(unsigned long k, const std::vector<unsigned long>& Jin, const Rational& p) {
    if (k < 3) throw DomainError("build_sumset needs k >= 3 (k = 2 reduces to k = 4)");
    std::vector<unsigned long> J = Jin;
    std::sort(J.begin(), J.end());
    J.erase(std::unique(J.begin(), J.end()), J.end());
    if (J.empty()) throw DomainError("J must be nonempty");
    for (std::size_t i = 0; i + 1 < J.size(); ++i)
        if (J[i + 1] == J[i] + 1) throw DomainError("J contains consecutive integers");
    if (J.back() > 5) throw ResourceGuardError("sumset guard: max(J) too large");
    const Exponent e = Exponent::from(p);

    SumsetResult res;
    auto& in = res.instance;
    in.k = k;
    in.J = J;
    const auto kk = static_cast<std::int64_t>(k);
    double product = 1;
    for (auto j : J) product *= std::pow(static_cast<double>(k), std::ldexp(1.0, static_cast<int>(j) + 1));
    if (product > 1e7) throw ResourceGuardError("sumset guard: prod_j k^(2^(j+1)) exceeds 1e7");

    std::vector<std::int64_t> cs, tops, lows;
    for (auto j : J) {
        const std::int64_t m = ipow(kk, std::uint64_t{1} << j);
        const std::int64_t top = ipow(kk, std::uint64_t{1} << (j + 1));
        const std::int64_t c = (kk - 1) * m;
        std::vector<std::int64_t> Bj, Cj;
        for (std::int64_t i = 1; i <= top; ++i) Bj.push_back(c * i);
        for (std::int64_t i = 1; i <= top - m; ++i) Cj.push_back(c * i);
        in.B_parts.push_back(std::move(Bj));
        in.C_parts.push_back(std::move(Cj));
        cs.push_back(c);
        tops.push_back(top);
        lows.push_back(m);
    }
    in.B = sumset(in.B_parts);
    in.C = sumset(in.C_parts);
    res.checks.unique_decomposition = std::adjacent_find(in.B.begin(), in.B.end()) == in.B.end();
    in.B.erase(std::unique(in.B.begin(), in.B.end()), in.B.end());
    in.C.erase(std::unique(in.C.begin(), in.C.end()), in.C.end());
    res.checks.c_large = 2 * in.C.size() >= in.B.size();

    const std::int64_t maxJ = static_cast<std::int64_t>(J.back());
    in.window_right = in.B.back() + ipow(kk, (std::uint64_t{1} << maxJ) + 1);
    if (in.window_right >= (std::int64_t{1} << 24)) throw ResourceGuardError("sumset guard: window exceeds 2^24 points");
    const std::size_t W = static_cast<std::size_t>(in.window_right) + 1;

    std::vector<std::uint8_t> f(W, 0);
    for (auto b : in.B) f[static_cast<std::size_t>(b)] = 1;

    // counts_L[x] = #{n <= 2^L : x + k^n in B}, L = j0 + 1
    const unsigned Lmax = static_cast<unsigned>(maxJ) + 1;
    std::vector<std::vector<std::uint16_t>> counts;
    std::vector<std::uint32_t> sup(W, 0);
    for (auto j0 : J) {
        const unsigned L = static_cast<unsigned>(j0) + 1;
        std::vector<std::uint16_t> cnt(W, 0);
        std::int64_t shift = 1;
        for (std::uint64_t n = 1; n <= (std::uint64_t{1} << L); ++n) {
            if (shift > in.window_right / kk) break;  // k^n past the window adds nothing
            shift *= kk;
            if (shift < static_cast<std::int64_t>(W))
                kernels::accumulate_shifted(cnt.data(), f.data() + shift, W - static_cast<std::size_t>(shift));
        }
        kernels::scale_max_into(sup.data(), cnt.data(), Lmax - L, W);
        counts.push_back(std::move(cnt));
    }

    // A_(j0+1) f >= 1/2 on C - k^(2^j0), and the translates' disjointness
    const std::size_t words = (W + 63) / 64;
    std::vector<std::vector<std::uint64_t>> bitmaps;
    res.checks.half_lower = true;
    for (std::size_t i = 0; i < J.size(); ++i) {
        std::vector<std::uint64_t> bm(words, 0);
        const std::uint16_t need = static_cast<std::uint16_t>(1u << J[i]);
        for (auto c : in.C) {
            const std::int64_t x = c - lows[i];
            if (x < 0 || counts[i][static_cast<std::size_t>(x)] < need) res.checks.half_lower = false;
            if (x >= 0) bm[static_cast<std::size_t>(x) / 64] |= std::uint64_t{1} << (x % 64);
        }
        bitmaps.push_back(std::move(bm));
    }
    res.checks.disjoint = true;
    for (std::size_t a = 0; a < J.size(); ++a)
        for (std::size_t b = a + 1; b < J.size(); ++b)
            if (kernels::and_popcount(bitmaps[a].data(), bitmaps[b].data(), words) != 0) res.checks.disjoint = false;

    // reach[i] = largest |sum_{j >= i} s_j c_j|, parts ordered largest first
    std::vector<std::int64_t> rc(cs.rbegin(), cs.rend()), rt(tops.rbegin(), tops.rend());
    std::vector<__int128> reach(rc.size() + 1, 0);
    for (std::size_t i = rc.size(); i-- > 0;) reach[i] = reach[i + 1] + static_cast<__int128>(rc[i]) * (rt[i] - 1);
    res.checks.differences_outside = true;
    for (std::size_t a = 0; a < J.size(); ++a)
        for (std::size_t b = 0; b < J.size(); ++b)
            if (a != b && in_difference_set(static_cast<__int128>(lows[a]) - lows[b], rc, rt, 0, reach))
                res.checks.differences_outside = false;

    // weak norm of sup_L A_L f under counting measure; sup = value / 2^Lmax
    auto& rep = res.report;
    rep.ps = {p};
    PowerValue weak = PowerValue::zero(e);
    const std::uint32_t scale = 1u << Lmax;
    for (std::uint32_t v = 1; v <= scale; ++v) {
        const std::size_t n = kernels::count_at_least(sup.data(), W, v);
        if (n == 0) break;
        const PowerValue cand = PowerValue::monomial(Rational(static_cast<unsigned long>(n)), ratio(v, scale), e);
        if (weak < cand) weak = cand;
    }
    const PowerValue fp = PowerValue::scalar(Rational(static_cast<unsigned long>(in.B.size())), e);
    rep.weak_p.push_back(weak);
    rep.f_strong_p.push_back(fp);
    rep.ratio.push_back(weak.root_enclose(128).mid_double() / fp.root_enclose(128).mid_double());
    for (std::size_t i = 0; i < J.size(); ++i) {
        dynsys::LevelContribution lc;
        lc.t = J[i] + 1;
        lc.weight = 1;
        const unsigned sh = Lmax - static_cast<unsigned>(lc.t);
        std::uint16_t peak = 0;
        std::size_t attain = 0;
        for (std::size_t x = 0; x < W; ++x) {
            peak = std::max(peak, counts[i][x]);
            if (counts[i][x] > 0 && (static_cast<std::uint32_t>(counts[i][x]) << sh) == sup[x]) ++attain;
        }
        lc.peak = ratio(peak, 1UL << lc.t);
        lc.measure_attaining = Rational(static_cast<unsigned long>(attain));
        rep.per_t.push_back(std::move(lc));
    }
    res.checks.weak_bound =
        PowerValue::monomial(Rational(static_cast<unsigned long>(J.size() * in.B.size())), Rational(1, 4), e) <= weak;
    res.isa = kernels::to_string(kernels::active_isa());
    return res;
}

}  // namespace divergia::constructions
