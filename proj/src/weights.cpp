#include "divergia/weights.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "divergia/errors.hpp"

namespace divergia::weights {

namespace {

const mpfr_prec_t kTagBits = digits_to_bits(30);

void require_nonempty(const WeightSequence& w) {
    if (w.values.empty()) throw DomainError("weight sequence is empty");
}

Rational rationalize(const Real& x) {
    Real r(kTagBits);
    mpfr_set(r.get(), x.get(), MPFR_RNDN);
    return r.to_rational();
}

// Slots 0..n-1; a span contributes weights[index] to every slot in [begin, end).
struct Span {
    std::size_t begin;
    std::size_t end;
    std::size_t index;
};

struct ActiveMax {
    std::size_t slot = 0;
    Rational value = 0;
    std::vector<std::size_t> active;  // span indices
};

std::vector<std::size_t> active_at(std::size_t slot, const std::vector<Span>& spans) {
    std::vector<std::size_t> out;
    for (const auto& s : spans)
        if (s.begin <= slot && slot < s.end) out.push_back(s.index);
    std::sort(out.begin(), out.end());
    return out;
}

Rational exact_at(std::size_t slot, const std::vector<Span>& spans, const std::vector<Rational>& weights) {
    std::vector<Rational> terms;
    for (const auto& s : spans)
        if (s.begin <= slot && slot < s.end) terms.push_back(weights[s.index]);
    return pairwise_sum(terms);
}

// Maximum over slots of the sum of active weights. A long double difference
// array with a rigorous rounding bound selects candidate slots; the winner is
// then confirmed with exact rational sums.
ActiveMax max_active_sum(std::size_t slots, const std::vector<Span>& spans, const std::vector<Rational>& weights) {
    ActiveMax best;
    if (slots == 0 || spans.empty()) return best;
    std::vector<long double> diff(slots + 1, 0.0L);
    long double total = 0.0L;
    for (const auto& s : spans) {
        const long double v = static_cast<long double>(weights[s.index].get_d());
        diff[s.begin] += v;
        diff[s.end] -= v;
        total += v;
    }
    std::vector<long double> approx(slots);
    long double run = 0.0L;
    long double top = -1.0L;
    for (std::size_t i = 0; i < slots; ++i) {
        run += diff[i];
        approx[i] = run;
        top = std::max(top, run);
    }
    const long double n = static_cast<long double>(spans.size());
    // conversion to double (2^-52 relative) plus 2n long double additions (2^-63 each)
    const long double err = 4.0L * total * (n * std::ldexp(1.0L, -52) + 2.0L * n * std::ldexp(1.0L, -63)) + n * 1e-300L;
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < slots; ++i)
        if (approx[i] >= top - 2.0L * err) candidates.push_back(i);

    if (candidates.size() <= 64) {
        bool first = true;
        for (std::size_t slot : candidates) {
            Rational v = exact_at(slot, spans, weights);
            if (first || v > best.value) {
                best.slot = slot;
                best.value = v;
                first = false;
            }
        }
    } else {
        std::vector<std::vector<std::size_t>> starts(slots + 1), stops(slots + 1);
        for (const auto& s : spans) {
            starts[s.begin].push_back(s.index);
            stops[s.end].push_back(s.index);
        }
        Rational running = 0;
        bool first = true;
        for (std::size_t i = 0; i < slots; ++i) {
            for (auto idx : stops[i]) running -= weights[idx];
            for (auto idx : starts[i]) running += weights[idx];
            if (first || running > best.value) {
                best.slot = i;
                best.value = running;
                first = false;
            }
        }
    }
    best.active = active_at(best.slot, spans);
    return best;
}

Rational div_pow2(const Rational& q, std::size_t e) {
    Rational out;
    mpq_div_2exp(out.get_mpq_t(), q.get_mpq_t(), static_cast<mp_bitcnt_t>(e));
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

// t^(a/b) at the given precision, rounded to nearest at each step.
Real int_power(unsigned long t, const Exponent& e, mpfr_prec_t bits, bool reciprocal) {
    Real r(bits);
    BigInt tb = pow(BigInt(t), e.num);
    mpfr_set_z(r.get(), tb.get_mpz_t(), MPFR_RNDN);
    if (e.den != 1) mpfr_rootn_ui(r.get(), r.get(), e.den, MPFR_RNDN);
    if (reciprocal) mpfr_ui_div(r.get(), 1, r.get(), MPFR_RNDN);
    return r;
}

}  // namespace

WeightSequence WeightSequence::from_values(std::vector<Rational> values, std::string tag) {
    if (values.empty()) throw DomainError("weight sequence is empty");
    bool any_positive = false;
    for (auto& v : values) {
        v.canonicalize();
        if (sgn(v) < 0) throw DomainError("weights must be nonnegative");
        any_positive = any_positive || sgn(v) > 0;
    }
    if (!any_positive) throw DomainError("weight sequence has no positive entry");
    return WeightSequence{std::move(values), std::move(tag)};
}

WeightSequence WeightSequence::truncated(std::size_t h) const {
    if (h == 0 || h > values.size()) throw DomainError("truncation horizon out of range");
    return from_values(std::vector<Rational>(values.begin(), values.begin() + static_cast<long>(h)), tag);
}

WeightSequence materialize(const std::string& tag, std::size_t horizon) {
    if (horizon == 0) throw DomainError("horizon must be positive");
    const auto colon = tag.find(':');
    const std::string name = tag.substr(0, colon);
    const std::string arg = colon == std::string::npos ? std::string() : tag.substr(colon + 1);
    std::vector<Rational> v;
    v.reserve(horizon);
    if (name == "reciprocal-t") {
        for (std::size_t t = 1; t <= horizon; ++t) v.push_back(make_rational(1, static_cast<long>(t)));
    } else if (name == "reciprocal-Phi" || name == "loglog-over-Phi") {
        const bool loglog = name == "loglog-over-Phi";
        for (std::size_t t = 1; t <= horizon; ++t) {
            Real ph = phi(Rational(static_cast<unsigned long>(t)), kTagBits + 32);
            Real r(kTagBits + 32);
            if (loglog && t >= 16) {
                mpfr_set_ui(r.get(), static_cast<unsigned long>(t), MPFR_RNDN);
                mpfr_log(r.get(), r.get(), MPFR_RNDN);
                mpfr_log(r.get(), r.get(), MPFR_RNDN);
                mpfr_div(r.get(), r.get(), ph.get(), MPFR_RNDN);
            } else {
                mpfr_ui_div(r.get(), 1, ph.get(), MPFR_RNDN);
            }
            v.push_back(rationalize(r));
        }
    } else if (name == "inv-root-t") {
        if (arg.empty()) throw DomainError("inv-root-t needs an exponent, e.g. inv-root-t:2");
        const Exponent p = Exponent::from(parse_rational(arg));
        // t^(-1/p) = t^(-den/num)
        const Exponent inv{p.den, p.num};
        for (std::size_t t = 1; t <= horizon; ++t)
            v.push_back(rationalize(int_power(static_cast<unsigned long>(t), inv, kTagBits + 32, true)));
    } else if (name == "constant") {
        const Rational c = parse_rational(arg);
        v.assign(horizon, c);
    } else if (name == "indicator-of-J") {
        v.assign(horizon, Rational(0));
        for (const auto& item : split(arg, ',')) {
            const long j = std::stol(item);
            if (j < 1 || static_cast<std::size_t>(j) > horizon)
                throw DomainError("indicator index outside the horizon: " + item);
            v[static_cast<std::size_t>(j - 1)] = 1;
        }
    } else {
        throw DomainError("unknown weight tag: " + tag);
    }
    return WeightSequence::from_values(std::move(v), tag);
}

std::string to_string(Functional f) {
    switch (f) {
        case Functional::C1: return "C1";
        case Functional::C1Prime: return "C1_prime";
        case Functional::Cp: return "Cp";
        case Functional::WeakNorm: return "weak_norm";
    }
    return "?";
}

std::optional<Rational> WeightFunctionalReport::exact_value() const {
    if (p == 1) return value_power.exact();
    return std::nullopt;
}

std::string WeightFunctionalReport::decimal(int digits) const {
    if (auto e = exact_value()) return to_decimal(*e, digits);
    return Real(value_power.root_enclose(digits_to_bits(digits + 10)).lo()).to_string(digits);
}

double WeightFunctionalReport::approx() const { return value_power.root_enclose(128).mid_double(); }

WeightFunctionalReport weak_norm_seq(const WeightSequence& w, const Rational& p) {
    require_nonempty(w);
    if (p < 1) throw DomainError("weak norm needs p >= 1");
    const Exponent e = Exponent::from(p);
    std::vector<std::size_t> order(w.horizon());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return w.values[a] > w.values[b]; });

    WeightFunctionalReport rep;
    rep.functional = Functional::WeakNorm;
    rep.p = p;
    rep.value_power = PowerValue::zero(e);
    std::size_t best_count = 0;
    for (std::size_t i = 0; i < order.size();) {
        const Rational& y = w.values[order[i]];
        if (sgn(y) == 0) break;
        std::size_t j = i;
        while (j < order.size() && w.values[order[j]] == y) ++j;
        PowerValue cand = PowerValue::monomial(static_cast<unsigned long>(j), y, e);
        if (best_count == 0 || rep.value_power < cand) {
            rep.value_power = cand;
            rep.argmax_threshold = y;
            best_count = j;
        }
        i = j;
    }
    for (std::size_t k = 0; k < best_count; ++k) rep.contributing_indices.push_back(order[k] + 1);
    std::sort(rep.contributing_indices.begin(), rep.contributing_indices.end());
    return rep;
}

Rational c1_window_sum(const WeightSequence& w, const Rational& y) {
    std::vector<Rational> terms;
    for (std::size_t t = 1; t <= w.horizon(); ++t) {
        const Rational& wt = w.values[t - 1];
        if (y < wt && div_pow2(wt, t) < y) terms.push_back(wt);
    }
    return pairwise_sum(terms);
}

WeightFunctionalReport c1(const WeightSequence& w) {
    require_nonempty(w);
    std::vector<Rational> points;
    points.reserve(2 * w.horizon());
    std::vector<Rational> lows(w.horizon());
    for (std::size_t t = 1; t <= w.horizon(); ++t) {
        if (sgn(w.values[t - 1]) == 0) continue;
        lows[t - 1] = div_pow2(w.values[t - 1], t);
        points.push_back(w.values[t - 1]);
        points.push_back(lows[t - 1]);
    }
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    auto index_of = [&](const Rational& q) {
        return static_cast<std::size_t>(std::lower_bound(points.begin(), points.end(), q) - points.begin());
    };
    std::vector<Span> spans;
    for (std::size_t t = 1; t <= w.horizon(); ++t) {
        if (sgn(w.values[t - 1]) == 0) continue;
        spans.push_back(Span{index_of(lows[t - 1]), index_of(w.values[t - 1]), t - 1});
    }
    // slot g is the open gap (points[g], points[g+1])
    ActiveMax m = max_active_sum(points.size() - 1, spans, w.values);

    WeightFunctionalReport rep;
    rep.functional = Functional::C1;
    rep.p = 1;
    rep.value_power = PowerValue::scalar(m.value, Exponent{});
    rep.argmax_threshold = (points[m.slot] + points[m.slot + 1]) / 2;
    for (auto idx : m.active) rep.contributing_indices.push_back(idx + 1);
    return rep;
}

Rational c1_prime_sum(const WeightSequence& w, std::size_t z) {
    const Rational threshold = pow2(-static_cast<long>(z));
    std::vector<Rational> terms;
    for (std::size_t t = z + 1; t <= w.horizon(); ++t)
        if (w.values[t - 1] > threshold) terms.push_back(w.values[t - 1]);
    return pairwise_sum(terms);
}

WeightFunctionalReport c1_prime(const WeightSequence& w) {
    require_nonempty(w);
    const std::size_t T = w.horizon();
    std::vector<Span> spans;
    for (std::size_t t = 1; t <= T; ++t) {
        const Rational& wt = w.values[t - 1];
        if (sgn(wt) == 0) continue;
        // smallest z >= 0 with w_t * 2^z > 1
        std::size_t z = 0;
        if (wt <= 1) {
            const long guess = static_cast<long>(mpz_sizeinbase(wt.get_den_mpz_t(), 2)) -
                               static_cast<long>(mpz_sizeinbase(wt.get_num_mpz_t(), 2)) - 1;
            z = static_cast<std::size_t>(std::max(0L, guess));
            while (wt * pow2(static_cast<long>(z)) <= 1) ++z;
            while (z > 0 && wt * pow2(static_cast<long>(z) - 1) > 1) --z;
        }
        if (z <= t - 1) spans.push_back(Span{z, t, t - 1});
    }
    ActiveMax m = max_active_sum(T + 1, spans, w.values);
    WeightFunctionalReport rep;
    rep.functional = Functional::C1Prime;
    rep.p = 1;
    rep.value_power = PowerValue::scalar(m.value, Exponent{});
    rep.argmax_threshold = Rational(static_cast<unsigned long>(m.slot));
    for (auto idx : m.active) rep.contributing_indices.push_back(idx + 1);
    return rep;
}

WeightFunctionalReport cp(const WeightSequence& w, const Rational& p) {
    if (p < 1) throw DomainError("C_p needs p >= 1");
    if (p == 1) return c1(w);
    auto rep = weak_norm_seq(w, p);
    rep.functional = Functional::Cp;
    return rep;
}

Real phi(const Real& t) {
    if (mpfr_sgn(t.get()) <= 0) throw DomainError("Phi needs t > 0");
    const mpfr_prec_t bits = t.precision();
    Real result(t);
    Real cur(t);
    Real gap(bits);
    for (;;) {
        mpfr_log(cur.get(), cur.get(), MPFR_RNDN);
        if (mpfr_cmp_ui(cur.get(), 1) <= 0) break;
        // an iterate that is 1 up to accumulated rounding counts as exactly 1
        mpfr_sub_ui(gap.get(), cur.get(), 1, MPFR_RNDN);
        if (mpfr_get_exp(gap.get()) < -static_cast<mpfr_exp_t>(bits) + 16) break;
        mpfr_mul(result.get(), result.get(), cur.get(), MPFR_RNDN);
    }
    return result;
}

Real phi(const Rational& t, mpfr_prec_t bits) { return phi(Real::from_rational(t, MPFR_RNDN, bits)); }

std::string to_string(HardyVerdict v) {
    switch (v) {
        case HardyVerdict::BoundedSoFar: return "bounded-so-far";
        case HardyVerdict::Growing: return "growing";
        case HardyVerdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

HardyReport classify_hardy(const WeightSequence& w, const Rational& p) {
    if (w.horizon() < 16) throw DomainError("classify_hardy needs horizon >= 16");
    if (p < 1) throw DomainError("classify_hardy needs p >= 1");
    const mpfr_prec_t bits = 128;
    HardyReport rep;
    rep.p = p;
    const std::size_t T = w.horizon();
    const Exponent e = Exponent::from(p);
    const Exponent inv{e.den, e.num};
    for (std::size_t t = 1; t <= T; ++t) {
        Real factor = p == 1 ? phi(Rational(static_cast<unsigned long>(t)), bits)
                             : int_power(static_cast<unsigned long>(t), inv, bits, false);
        mpfr_mul_q(factor.get(), factor.get(), w.values[t - 1].get_mpq_t(), MPFR_RNDN);
        const double v = factor.to_double();
        rep.profile.push_back(v);
        rep.running_max.push_back(rep.running_max.empty() ? v : std::max(rep.running_max.back(), v));
    }
    for (std::size_t t = 1; t <= T; ++t) {
        double& slot = t <= T / 2 ? rep.first_half_max : rep.last_half_max;
        slot = std::max(slot, rep.profile[t - 1]);
    }
    for (std::size_t k = 1; (std::size_t{1} << k) <= T; ++k) {
        double m = 0;
        for (std::size_t t = (std::size_t{1} << (k - 1)) + 1; t <= (std::size_t{1} << k); ++t)
            m = std::max(m, rep.profile[t - 1]);
        rep.dyadic_block_max.push_back(m);
    }
    if (rep.last_half_max > 2 * rep.first_half_max) {
        rep.verdict = HardyVerdict::Growing;
    } else if (rep.last_half_max <= rep.first_half_max * (1 + 1e-12)) {
        rep.verdict = HardyVerdict::BoundedSoFar;
    } else {
        const auto& b = rep.dyadic_block_max;
        bool increasing = b.size() >= 4;
        for (std::size_t i = b.size() - std::min<std::size_t>(b.size(), 4) + 1; increasing && i < b.size(); ++i)
            increasing = b[i] > b[i - 1];
        rep.verdict = increasing ? HardyVerdict::Growing : HardyVerdict::Inconclusive;
    }
    return rep;
}

std::vector<Rational> dyadic_envelope(const std::vector<Rational>& u, std::size_t T) {
    if (T >= 63 || u.size() < (std::size_t{1} << T))
        throw DomainError("dyadic_envelope needs at least 2^T terms");
    std::vector<Rational> v;
    for (std::size_t t = 1; t <= T; ++t) {
        const std::size_t lo = (std::size_t{1} << (t - 1)) + 1;
        const std::size_t hi = std::size_t{1} << t;
        Rational m = u[lo - 1];
        for (std::size_t n = lo + 1; n <= hi; ++n) m = std::max(m, u[n - 1]);
        v.push_back(m);
    }
    return v;
}

ScaledSum scale_and_sum(const std::vector<WeightSequence>& ws, const std::vector<Rational>& targets,
                        const Rational& p) {
    if (ws.empty() || ws.size() != targets.size()) throw DomainError("need one target per sequence");
    const std::size_t T = ws.front().horizon();
    for (const auto& w : ws)
        if (w.horizon() != T) throw DomainError("scale_and_sum: mismatched horizons");
    const Exponent e = Exponent::from(p);
    ScaledSum out;
    std::vector<Rational> sum(T, Rational(0));
    for (std::size_t k = 0; k < ws.size(); ++k) {
        if (sgn(targets[k]) <= 0) throw DomainError("targets must be positive");
        const auto cur = cp(ws[k], p);
        Rational factor;
        if (p == 1) {
            factor = targets[k] / *cur.exact_value();
        } else {
            // weak norm = y * c^(den/num)
            const BigInt c(static_cast<unsigned long>(cur.contributing_indices.size()));
            BigInt root;
            const bool perfect = mpz_root(root.get_mpz_t(), c.get_mpz_t(), e.num) != 0;
            if (perfect) {
                factor = targets[k] / (cur.argmax_threshold * Rational(pow(root, e.den)));
            } else {
                out.exact = false;
                Interval norm = cur.value_power.root_enclose(kTagBits + 32);
                Real lam(kTagBits + 32);
                Real tq = Real::from_rational(targets[k], MPFR_RNDN, kTagBits + 32);
                Real mid(kTagBits + 32);
                mpfr_add(mid.get(), norm.lo().get(), norm.hi().get(), MPFR_RNDN);
                mpfr_div_2ui(mid.get(), mid.get(), 1, MPFR_RNDN);
                mpfr_div(lam.get(), tq.get(), mid.get(), MPFR_RNDN);
                factor = rationalize(lam);
            }
        }
        factor.canonicalize();
        out.factors.push_back(factor);
        std::vector<Rational> scaled(T);
        for (std::size_t t = 0; t < T; ++t) {
            scaled[t] = ws[k].values[t] * factor;
            sum[t] += scaled[t];
        }
        out.scaled_parts.push_back(cp(WeightSequence::from_values(std::move(scaled)), p));
    }
    out.sum = WeightSequence::from_values(std::move(sum), "scaled-sum");
    out.sum_cp = cp(out.sum, p);
    return out;
}

}  // namespace divergia::weights
