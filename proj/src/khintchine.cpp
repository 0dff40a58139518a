#include "divergia/khintchine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <unordered_set>

#include "divergia/errors.hpp"

namespace divergia::khintchine {

namespace {

Interval pt(const Rational& q, mpfr_prec_t bits) { return Interval::point(q, bits); }

// x^p for x > 0, p rational
Interval pow_interval(const Interval& x, const Rational& p, mpfr_prec_t bits) {
    return (x.log() * pt(p, bits)).exp();
}

Interval hull_max(const Interval& a, const Interval& b) {
    Interval out = a;
    if (b.lo().compare(out.lo()) > 0) mpfr_set(out.lo().get(), b.lo().get(), MPFR_RNDD);
    if (b.hi().compare(out.hi()) > 0) mpfr_set(out.hi().get(), b.hi().get(), MPFR_RNDU);
    return out;
}

// floor(e^y), certified by escalating precision (e^y is irrational for y != 0)
BigInt floor_exp(const Rational& y) {
    if (sgn(y) == 0) return 1;
    for (mpfr_prec_t bits = 128; bits <= 65536; bits *= 2) {
        const Interval e = pt(y, bits).exp();
        const BigInt a = floor(e.lo().to_rational());
        if (a == floor(e.hi().to_rational())) return a;
    }
    throw PrecisionError("could not certify floor(e^" + to_string(y) + ")");
}

std::vector<std::uint64_t> factor_primes(std::uint64_t n) {
    std::vector<std::uint64_t> out;
    for (std::uint64_t p = 2; p * p <= n; ++p)
        if (n % p == 0) {
            out.push_back(p);
            while (n % p == 0) n /= p;
        }
    if (n > 1) out.push_back(n);
    return out;
}

std::vector<long> exponents(std::uint64_t n, const std::vector<std::uint64_t>& primes) {
    std::vector<long> e(primes.size(), 0);
    for (std::size_t i = 0; i < primes.size(); ++i)
        while (n % primes[i] == 0) {
            n /= primes[i];
            ++e[i];
        }
    if (n != 1) throw InvariantError("element not supported on the recorded primes");
    return e;
}

unsigned rank_of(const std::vector<std::vector<long>>& rows, std::size_t cols) {
    std::vector<std::vector<Rational>> basis;  // reduced rows with pivot columns
    std::vector<std::size_t> pivots;
    for (const auto& r : rows) {
        std::vector<Rational> v(r.begin(), r.end());
        for (std::size_t b = 0; b < basis.size(); ++b) {
            const Rational f = v[pivots[b]];
            if (sgn(f) == 0) continue;
            for (std::size_t c = 0; c < cols; ++c) v[c] -= f * basis[b][c];
        }
        std::size_t piv = cols;
        for (std::size_t c = 0; c < cols; ++c)
            if (sgn(v[c]) != 0) {
                piv = c;
                break;
            }
        if (piv == cols) continue;
        const Rational lead = v[piv];
        for (auto& x : v) x /= lead;
        for (std::size_t b = 0; b < basis.size(); ++b) {
            const Rational f = basis[b][piv];
            if (sgn(f) == 0) continue;
            for (std::size_t c = 0; c < cols; ++c) basis[b][c] -= f * v[c];
        }
        basis.push_back(std::move(v));
        pivots.push_back(piv);
        if (basis.size() == cols) break;
    }
    return static_cast<unsigned>(basis.size());
}

void fill_support(SemigroupSample& s, const std::vector<std::uint64_t>& source) {
    std::set<std::uint64_t> primes;
    for (auto g : source)
        for (auto p : factor_primes(g)) primes.insert(p);
    s.prime_support.assign(primes.begin(), primes.end());
    std::vector<std::vector<long>> rows;
    for (auto g : source)
        if (g > 1) rows.push_back(exponents(g, s.prime_support));
    s.lattice_dim = rank_of(rows, s.prime_support.size());
}

void fill_curve(SemigroupSample& s) {
    s.curve = {};
    std::vector<std::uint64_t> grid;
    for (std::uint64_t N = 2; N <= s.N_max && N != 0; N *= 2) grid.push_back(N);
    if (grid.empty() || grid.back() != s.N_max) grid.push_back(s.N_max);
    s.curve.normalized.assign(s.lattice_dim + 1, {});
    for (auto N : grid) {
        if (N < 2) continue;
        const std::size_t c = s.count_upto(N);
        s.curve.N.push_back(N);
        s.curve.count.push_back(c);
        const double l = std::log(static_cast<double>(N));
        for (unsigned k = 1; k <= s.lattice_dim + 1; ++k)
            s.curve.normalized[k - 1].push_back(static_cast<double>(c) / std::pow(l, k));
    }
}

}  // namespace

// ---------------------------------------------------------------- averages

Rational khintchine_average(const StepFunction& f, const Rational& x, const std::vector<BigInt>& S) {
    if (!f.domain().is_circle() || f.domain().right != 1) throw DomainError("f must live on the unit circle");
    if (S.empty()) throw DomainError("empty index set");
    std::vector<Rational> vals;
    vals.reserve(S.size());
    for (const auto& n : S) vals.push_back(f(frac(Rational(n) * x)));
    return pairwise_sum(vals) / static_cast<unsigned long>(S.size());
}

Rational khintchine_sum(const StepFunction& f, const Rational& x, std::size_t N) {
    if (!f.domain().is_circle() || f.domain().right != 1) throw DomainError("f must live on the unit circle");
    std::vector<Rational> vals;
    for (std::size_t n = 1; n <= N; ++n) vals.push_back(f(frac(static_cast<unsigned long>(n) * x)));
    return pairwise_sum(vals);
}

CertifiedValue additive_average(const StepFunction& g, const Rational& y, const std::vector<std::size_t>& I,
                                const std::vector<BigInt>& a, mpfr_prec_t bits) {
    if (g.domain().is_circle()) throw DomainError("additive averages take g on a window");
    if (I.empty()) throw DomainError("empty index set");
    const auto pieces = g.pieces();
    const Rational L = g.domain().left;
    const Rational R = g.domain().right;
    CertifiedValue out;
    std::vector<Rational> lo, hi;
    for (auto n : I) {
        if (n == 0 || n > a.size()) throw DomainError("index outside the sequence");
        if (sgn(a[n - 1]) <= 0) throw DomainError("a_n must be positive");
        const Interval z = pt(y, bits) - pt(Rational(a[n - 1]), bits).log();
        const Rational zl = z.lo().to_rational();
        const Rational zh = z.hi().to_rational();
        std::optional<Rational> mn, mx;
        auto see = [&](const Rational& v) {
            if (!mn || v < *mn) mn = v;
            if (!mx || v > *mx) mx = v;
        };
        if (zl < L || zh >= R) see(0);
        for (const auto& pc : pieces)
            if (pc.start <= zh && zl < pc.end) see(pc.value);
        if (*mn != *mx) out.widened = true;
        lo.push_back(*mn);
        hi.push_back(*mx);
    }
    const auto count = static_cast<unsigned long>(I.size());
    out.lo = pairwise_sum(lo) / count;
    out.hi = pairwise_sum(hi) / count;
    return out;
}

KhintchineLower khintchine_lower(const std::vector<unsigned long>& Jin, const Rational& p, mpfr_prec_t bits) {
    std::vector<unsigned long> J = Jin;
    std::sort(J.begin(), J.end());
    J.erase(std::unique(J.begin(), J.end()), J.end());
    if (J.empty()) throw DomainError("J must be nonempty");
    if (J.back() > 16) throw ResourceGuardError("khintchine_lower: max(J) capped at 16");
    if (p < 1) throw DomainError("p must be >= 1");
    KhintchineLower out;
    out.J = J;
    out.p = p;

    // u = e^y: B_j g = 2^(1-j) #{n <= 2^j : u/4 < n <= u}, integer breakpoints
    const Rational top = pow2(static_cast<long>(J.back()) + 2);
    const auto d = measure::Domain::window(1, top);
    std::vector<StepFunction> Bs;
    out.certificate_ok = true;
    for (auto j : J) {
        const unsigned long n_max = 1UL << j;
        std::vector<measure::Piece> pieces;
        pieces.reserve(n_max);
        const Rational v = pow2(1 - static_cast<long>(j));
        for (unsigned long n = 1; n <= n_max; ++n) pieces.push_back({Rational(n), Rational(4 * n), v});
        StepFunction B = StepFunction::from_pieces(d, pieces);
        for (const auto& pc : B.pieces())
            if (pc.start < pow2(static_cast<long>(j) + 1) && pc.end > pow2(static_cast<long>(j)) && pc.value < 1)
                out.certificate_ok = false;
        Bs.push_back(std::move(B));
    }
    out.profile_u = measure::pointwise_max(Bs);

    const Interval ln2 = ln2_interval(bits);
    // the certified set, measured window by window in y
    out.certified_measure = pt(0, bits);
    for (auto j : J)
        out.certified_measure = out.certified_measure + pt(pow2(static_cast<long>(j) + 1), bits).log() -
                                pt(pow2(static_cast<long>(j)), bits).log();

    // y-measure of each cell is ln(end/start)
    std::map<Rational, Interval, std::greater<>> by_level;
    for (const auto& pc : out.profile_u.pieces()) {
        if (sgn(pc.value) == 0) continue;
        const Interval len = (pt(pc.end, bits) / pt(pc.start, bits)).log();
        auto it = by_level.find(pc.value);
        if (it == by_level.end())
            by_level.emplace(pc.value, len);
        else
            it->second = it->second + len;
    }
    Interval above = pt(0, bits);
    out.weak_p = pt(0, bits);
    out.measure_at_least_1 = pt(0, bits);
    const Exponent e = Exponent::from(p);
    for (const auto& [level, len] : by_level) {
        above = above + len;
        if (level >= 1) out.measure_at_least_1 = above;
        out.weak_p = hull_max(out.weak_p, rational_power(level, e, bits) * above);
    }
    out.g_strong_p = rational_power(2, e, bits) * pt(2, bits) * ln2;
    const Rational inv_p = 1 / p;
    out.ratio = pow_interval(out.weak_p / out.g_strong_p, inv_p, bits);
    out.claimed = pow_interval(pt(Rational(static_cast<unsigned long>(J.size())), bits) * ln2, inv_p, bits) /
                  pow_interval(pt(2, bits), 1 + inv_p, bits);
    out.holds = out.certificate_ok && out.claimed.certainly_le(out.ratio);
    return out;
}

// ---------------------------------------------------------------- towers

std::size_t TowerModel::index(const std::vector<unsigned>& cell) const {
    if (cell.size() != d) throw DomainError("cell has the wrong dimension");
    std::size_t idx = 0;
    for (auto c : cell) {
        if (c >= N) throw DomainError("cell outside the tower");
        idx = idx * N + c;
    }
    return idx;
}

TowerTransfer tower_transfer(const TowerModel& src, unsigned r) {
    if (src.d == 0 || src.N == 0) throw DomainError("empty tower");
    if (r >= src.N) throw DomainError("degenerate core: r >= N");
    std::size_t cells = 1;
    for (unsigned i = 0; i < src.d; ++i) cells *= src.N;
    if (src.values.size() != cells) throw DomainError("tower needs N^d values");
    if (cells > 1u << 22) throw ResourceGuardError("tower too large");

    TowerTransfer out;
    out.dst = src;  // theta and psi match cells of equal index
    out.core.assign(cells, false);
    const Rational frac_core = Rational(src.N - r) / Rational(src.N);
    out.core_mass = pow(frac_core, static_cast<long>(src.d)) * (1 - src.epsilon);

    std::vector<unsigned> cell(src.d, 0);
    std::vector<unsigned> e(src.d, 0);
    std::vector<unsigned> m(src.d, 0);
    out.equal_on_core = true;
    out.max_equal = true;
    for (std::size_t idx = 0; idx < cells; ++idx) {
        std::size_t rest = idx;
        bool in_core = true;
        for (unsigned i = src.d; i-- > 0;) {
            cell[i] = static_cast<unsigned>(rest % src.N);
            rest /= src.N;
            in_core = in_core && cell[i] >= r;
        }
        out.core[idx] = in_core;
        if (!in_core) continue;
        // every exponent vector with entries <= r keeps the orbit inside the tower
        std::fill(e.begin(), e.end(), 0u);
        std::optional<Rational> max_src, max_dst;
        for (;;) {
            for (unsigned i = 0; i < src.d; ++i) m[i] = cell[i] - e[i];
            const Rational& a = src.at(m);
            const Rational& b = out.dst.at(m);
            ++out.probes;
            if (a != b) out.equal_on_core = false;
            if (!max_src || a > *max_src) max_src = a;
            if (!max_dst || b > *max_dst) max_dst = b;
            unsigned i = 0;
            while (i < src.d && ++e[i] > r) e[i++] = 0;
            if (i == src.d) break;
        }
        if (*max_src != *max_dst) out.max_equal = false;
    }
    return out;
}

// ---------------------------------------------------------------- growth

Rational weak_one_norm(std::vector<Rational> c) {
    std::sort(c.begin(), c.end(), std::greater<>());
    Rational best = 0;
    for (std::size_t k = 0; k < c.size(); ++k) best = std::max(best, Rational(c[k] * static_cast<unsigned long>(k + 1)));
    return best;
}

WeakboundReport weakbound_check(const std::vector<Rational>& h) {
    if (h.empty()) throw DomainError("empty growth profile");
    if (sgn(h[0]) <= 0) throw DomainError("weakbound_check needs h_1 > 0");
    for (std::size_t i = 1; i < h.size(); ++i)
        if (h[i] < h[i - 1]) throw DomainError("h must be nondecreasing");
    WeakboundReport out;
    Rational prev = 0;  // h_0 = 0
    for (const auto& x : h) {
        out.c.push_back((x - prev) / x);
        prev = x;
    }
    out.d = weak_one_norm(out.c);
    std::vector<Rational> t = out.c;
    std::sort(t.begin(), t.end(), std::greater<>());
    const long upper = 2 * static_cast<long>(ceil(out.d).get_si()) - 1;
    Rational K = h[0];
    bool ok = true;
    for (long j = 2; j <= upper; ++j) {
        Rational tj = static_cast<std::size_t>(j) <= t.size() ? t[j - 1] : Rational(0);
        if (tj >= 1) {
            out.degenerate = true;
            tj = std::min(tj, Rational(out.d / j));  // t_j <= d/j
        }
        if (tj >= 1) {
            ok = false;
            break;
        }
        K /= (1 - tj);
    }
    if (!ok) return out;
    out.K = K;
    out.holds = true;
    // 1 + ln K and d, per precision, built once
    struct Consts {
        mpfr_prec_t bits;
        Interval base, d;
    };
    std::vector<Consts> consts;
    for (mpfr_prec_t bits : {mpfr_prec_t(128), mpfr_prec_t(1024)})
        consts.push_back({bits, pt(1, bits) + pt(K, bits).log(), pt(out.d, bits)});
    // double filter: decides everything not within 1e-9 of a tie
    const double base_d = consts[0].base.mid_double(), d_d = consts[0].d.mid_double();
    for (std::size_t n = 1; n <= h.size(); ++n) {
        const double l = std::log(h[n - 1].get_d());
        const double r = base_d + d_d * std::log(static_cast<double>(n));
        if (std::isfinite(l) && std::isfinite(r) && l < r - 1e-9 * (1 + std::abs(r))) continue;
        for (const auto& c : consts) {
            const Interval lhs = pt(h[n - 1], c.bits).log();
            const Interval rhs = c.base + c.d * pt(Rational(static_cast<unsigned long>(n)), c.bits).log();
            if (lhs.certainly_le(rhs)) break;
            if (rhs.certainly_less(lhs)) {
                out.holds = false;
                out.first_failure = n;
                return out;
            }
        }
    }
    return out;
}

GrowthProfile growth_divergence(const std::string& kind, std::size_t horizon) {
    if (horizon == 0) throw DomainError("horizon must be >= 1");
    GrowthProfile out;
    out.kind = kind;
    constexpr mpfr_prec_t bits = 128;
    std::vector<Rational> explicit_t;
    std::function<BigInt(long)> h_of;
    std::function<Interval(std::size_t)> t_of;
    if (kind == "identity") {
        h_of = [](long N) { return BigInt(std::max(0L, N)); };
        t_of = [](std::size_t m) { return pt(Rational(static_cast<unsigned long>(m)), bits); };
    } else if (kind == "sqrt") {
        h_of = [](long N) { return N <= 0 ? BigInt(0) : BigInt(N) * N; };
        t_of = [](std::size_t m) { return pt(Rational(static_cast<unsigned long>(m)), bits).root(2); };
    } else if (kind == "log") {
        if (horizon > 40) throw ResourceGuardError("log growth horizon capped at 40");
        h_of = [](long N) { return N < 0 ? BigInt(0) : floor_exp(Rational(N)); };
        t_of = [](std::size_t m) { return pt(Rational(static_cast<unsigned long>(m)), bits).log(); };
    } else if (kind.rfind("explicit:", 0) == 0) {
        std::string rest = kind.substr(9);
        std::size_t pos = 0;
        while (pos <= rest.size()) {
            const auto comma = rest.find(',', pos);
            const std::string item = rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            if (!item.empty()) explicit_t.push_back(parse_rational(item));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        for (std::size_t i = 1; i < explicit_t.size(); ++i)
            if (explicit_t[i] <= explicit_t[i - 1]) throw DomainError("t_n must be increasing");
        h_of = [&explicit_t](long N) {
            return BigInt(static_cast<unsigned long>(
                std::upper_bound(explicit_t.begin(), explicit_t.end(), Rational(N)) - explicit_t.begin()));
        };
        t_of = [&explicit_t](std::size_t m) { return pt(explicit_t.at(m - 1), bits); };
    } else {
        throw DomainError("unknown t-sequence kind '" + kind + "'");
    }

    BigInt prev = h_of(0);
    for (std::size_t N = 1; N <= horizon; ++N) {
        const BigInt hN = h_of(static_cast<long>(N));
        out.h.push_back(hN);
        out.c.push_back(sgn(hN) == 0 ? Rational(0) : Rational(hN - prev) / Rational(hN));
        prev = hN;
    }
    out.weak_c = weak_one_norm(out.c);

    // sup_N B_N g(y) >= B_n g(y) >= c_n at y = n + 1/2, g = 1_[0,2)
    for (std::size_t n = 1; n <= horizon; ++n) {
        const BigInt hi = h_of(static_cast<long>(n) + 1);
        if (hi > 200000) break;
        const BigInt lo = h_of(static_cast<long>(n) - 2);
        const Rational y = Rational(static_cast<unsigned long>(n)) + Rational(1, 2);
        unsigned long count = 0;
        for (std::size_t m = lo.get_ui() + 1; m <= hi.get_ui(); ++m) {
            const Interval t = t_of(m);
            // certainly y - 2 < t <= y
            if (t.certainly_greater(y - 2) && t.certainly_le(pt(y, bits))) ++count;
        }
        const BigInt& hn = out.h[n - 1];
        out.probed.push_back(n);
        if (sgn(hn) > 0 && Rational(count) / Rational(hn) < out.c[n - 1]) out.probes_ok = false;
    }
    return out;
}

// ---------------------------------------------------------------- semigroups

std::size_t SemigroupSample::count_upto(std::uint64_t N) const {
    return static_cast<std::size_t>(std::upper_bound(elements.begin(), elements.end(), N) - elements.begin());
}

bool SemigroupSample::contains(std::uint64_t x) const { return std::binary_search(elements.begin(), elements.end(), x); }

SemigroupSample semigroup_enumerate(const std::vector<std::uint64_t>& generators, std::uint64_t N_max,
                                    bool include_one) {
    if (generators.empty()) throw DomainError("need at least one generator");
    for (auto g : generators)
        if (g < 2) throw DomainError("generators must be >= 2");
    if (N_max > (std::uint64_t{1} << 50)) throw ResourceGuardError("N_max capped at 2^50");
    SemigroupSample s;
    s.generators = generators;
    std::sort(s.generators.begin(), s.generators.end());
    s.generators.erase(std::unique(s.generators.begin(), s.generators.end()), s.generators.end());
    s.N_max = N_max;
    s.include_one = include_one;

    std::priority_queue<std::uint64_t, std::vector<std::uint64_t>, std::greater<>> heap;
    std::unordered_set<std::uint64_t> seen;
    for (auto g : s.generators)
        if (g <= N_max && seen.insert(g).second) heap.push(g);
    if (include_one && N_max >= 1) s.elements.push_back(1);
    while (!heap.empty()) {
        const std::uint64_t x = heap.top();
        heap.pop();
        s.elements.push_back(x);
        if (s.elements.size() > 5000000) throw ResourceGuardError("semigroup sample exceeds 5e6 elements");
        for (auto g : s.generators)
            if (x <= N_max / g && seen.insert(x * g).second) heap.push(x * g);
    }
    fill_support(s, s.generators);
    fill_curve(s);
    return s;
}

SemigroupSample semigroup_from_elements(std::vector<std::uint64_t> elements, std::uint64_t N_max) {
    std::sort(elements.begin(), elements.end());
    elements.erase(std::unique(elements.begin(), elements.end()), elements.end());
    if (elements.empty() || elements.front() == 0) throw DomainError("elements must be positive");
    SemigroupSample s;
    s.N_max = N_max;
    for (auto x : elements)
        if (x <= N_max) s.elements.push_back(x);
    s.include_one = !s.elements.empty() && s.elements.front() == 1;
    fill_support(s, s.elements);
    fill_curve(s);
    return s;
}

std::vector<FolnerRow> folner_check(const SemigroupSample& S, std::uint64_t x, const std::vector<std::uint64_t>& Ns,
                                    bool truncated) {
    if (!S.contains(x)) throw DomainError(std::to_string(x) + " is not in the sample");
    std::vector<FolnerRow> out;
    for (auto N : Ns) {
        FolnerRow row;
        row.N = N;
        const std::vector<std::uint64_t> SN(S.elements.begin(), S.elements.begin() + static_cast<long>(S.count_upto(N)));
        row.size = SN.size();
        if (SN.empty()) {
            out.push_back(row);
            continue;
        }
        if (SN.size() > 20000) throw ResourceGuardError("S_N too large for the difference set");
        std::vector<std::uint64_t> shifted;
        for (auto s : SN) {
            if (s > std::numeric_limits<std::uint64_t>::max() / x) throw ResourceGuardError("product overflow");
            if (!truncated || s * x <= N) shifted.push_back(s * x);
        }
        std::vector<std::uint64_t> sym;
        std::set_symmetric_difference(shifted.begin(), shifted.end(), SN.begin(), SN.end(), std::back_inserter(sym));
        const Rational size(static_cast<unsigned long>(SN.size()));
        row.shift_ratio = Rational(static_cast<unsigned long>(sym.size())) / size;

        std::vector<std::vector<long>> ev;
        for (auto s : SN) ev.push_back(exponents(s, S.prime_support));
        std::set<std::vector<long>> diffs;
        std::vector<long> dv(S.prime_support.size());
        for (const auto& a : ev)
            for (const auto& b : ev) {
                for (std::size_t i = 0; i < dv.size(); ++i) dv[i] = a[i] - b[i];
                diffs.insert(dv);
            }
        row.difference_ratio = Rational(static_cast<unsigned long>(diffs.size())) / size;
        out.push_back(row);
    }
    return out;
}

LatticeCount lattice_count(const std::vector<std::uint64_t>& primes, const Rational& y) {
    if (primes.empty()) throw DomainError("need at least one prime");
    if (sgn(y) < 0) throw DomainError("y must be >= 0");
    if (y > 41) throw ResourceGuardError("lattice_count: y capped at 41");
    for (auto p : primes)
        if (factor_primes(p) != std::vector<std::uint64_t>{p}) throw DomainError(std::to_string(p) + " is not prime");
    const std::uint64_t E = floor_exp(y).get_ui();
    LatticeCount out;
    // count p-smooth n <= E over the given primes
    std::function<void(std::size_t, std::uint64_t)> walk = [&](std::size_t i, std::uint64_t n) {
        if (i == primes.size()) {
            ++out.L;
            return;
        }
        for (std::uint64_t m = n;; m *= primes[i]) {
            walk(i + 1, m);
            if (m > E / primes[i]) break;
        }
    };
    walk(0, 1);
    const double yd = to_double(y);
    const std::size_t d = primes.size();
    double denom = 1;
    for (std::size_t i = 1; i <= d; ++i) denom *= static_cast<double>(i);
    for (auto p : primes) denom *= std::log(static_cast<double>(p));
    out.asymptote = std::pow(yd, static_cast<double>(d)) / denom;
    out.residual = std::abs(static_cast<double>(out.L) - out.asymptote);
    out.normalized_residual = d == 1 ? out.residual : out.residual / std::pow(yd, static_cast<double>(d - 1));
    return out;
}

DichotomyReport dichotomy_report(const std::vector<SemigroupSample>& samples) {
    if (samples.empty()) throw DomainError("need at least one sample");
    DichotomyReport out;
    for (const auto& s : samples) {
        if (s.elements.empty()) throw DomainError("empty sample");
        out.horizons.push_back(s.N_max);
        out.support_sizes.push_back(s.prime_support.size());
    }
    const bool stable = std::all_of(out.support_sizes.begin(), out.support_sizes.end(),
                                    [&](std::size_t k) { return k == out.support_sizes.front(); });
    const SemigroupSample& last = samples.back();
    if (stable) {
        out.verdict = "convergence side";
        std::uint64_t x = last.elements.front();
        if (x == 1 && last.elements.size() > 1) x = last.elements[1];
        std::vector<std::uint64_t> Ns;
        for (std::uint64_t N = 100; N <= last.N_max; N *= 10) {
            if (last.count_upto(N) > 20000) break;
            Ns.push_back(N);
        }
        if (Ns.empty()) Ns.push_back(last.N_max);
        out.folner = folner_check(last, x, Ns);
    } else {
        out.verdict = "divergence side";
        for (const auto& s : samples) out.curves.push_back(s.curve);
        GrowthProfile g;
        g.kind = "semigroup-log";
        BigInt prev = 0;
        for (long N = 1;; ++N) {
            const BigInt E = floor_exp(Rational(N));
            if (E > last.N_max) break;
            const BigInt hN = static_cast<unsigned long>(last.count_upto(E.get_ui()));
            g.h.push_back(hN);
            g.c.push_back(sgn(hN) == 0 ? Rational(0) : Rational(hN - prev) / Rational(hN));
            prev = hN;
        }
        g.weak_c = weak_one_norm(g.c);
        out.growth = std::move(g);
    }
    return out;
}

}  // namespace divergia::khintchine
