#include "divergia/dynsys.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "divergia/errors.hpp"

namespace divergia::dynsys {

using measure::norms;
using measure::pointwise_max;
using weights::WeightSequence;

namespace {

BigInt digits_numerator(const DigitReal& a, std::size_t from) {
    // integer whose base-k digits are digits[from..]
    static const char* sym = "0123456789abcdefghijklmnopqrstuvwxyz";
    if (from >= a.digits.size()) return 0;
    std::string s;
    s.reserve(a.digits.size() - from);
    for (std::size_t i = from; i < a.digits.size(); ++i) s.push_back(sym[a.digits[i]]);
    return BigInt(s, static_cast<int>(a.base));
}

void check_digits(const DigitReal& a) {
    if (a.base < 2 || a.base > 36) throw DomainError("digit base must be in 2..36");
    if (a.digits.empty()) throw DomainError("DigitReal needs at least one digit");
    for (auto d : a.digits)
        if (d >= a.base) throw DomainError("digit out of range for the base");
}

Rational round_down(const Real& x, mpfr_prec_t bits = 100) {
    Real r(bits);
    mpfr_set(r.get(), x.get(), MPFR_RNDD);
    return r.to_rational();
}

Rational round_up(const Real& x, mpfr_prec_t bits = 100) {
    Real r(bits);
    mpfr_set(r.get(), x.get(), MPFR_RNDU);
    return r.to_rational();
}

Rational pow_rational_up(const Rational& base, const Rational& e) {
    const Exponent ex = Exponent::from(e);
    if (ex.is_integer()) return pow(base, static_cast<long>(ex.num));
    return round_up(rational_power(base, ex, 256).hi());
}

StepFunction scaled(const StepFunction& f, const Rational& c) {
    return f.map_values([&](const Rational& v) { return Rational(v * c); });
}

double ratio_of_roots(const PowerValue& num, const PowerValue& den) {
    if (den.is_zero()) return 0;
    return num.root_enclose(128).mid_double() / den.root_enclose(128).mid_double();
}

}  // namespace

Rational DigitReal::value() const {
    check_digits(*this);
    return Rational(digits_numerator(*this, 0), pow(BigInt(base), digits.size()));
}

std::size_t DigitReal::valid_horizon() const { return reserve >= digits.size() ? 0 : digits.size() - reserve; }

Rational DigitReal::shifted_frac(std::size_t n) const {
    check_digits(*this);
    if (n > valid_horizon())
        throw PrecisionError("shift by " + std::to_string(base) + "^" + std::to_string(n) + " exceeds the digit horizon " +
                             std::to_string(valid_horizon()));
    Rational q(digits_numerator(*this, n), pow(BigInt(base), digits.size() - n));
    q.canonicalize();
    return q;
}

Domain SystemModel::domain() const {
    if (auto* t = std::get_if<Translation>(&model)) return Domain::circle(t->modulus);
    if (auto* m = std::get_if<MapFamily>(&model)) return Domain::circle(m->modulus);
    return Domain::circle(1);
}

std::string SystemModel::kind() const {
    if (auto* t = std::get_if<Translation>(&model)) return t->flow ? "flow" : "circle_rotation";
    if (std::holds_alternative<DigitRotation>(model)) return "digit_rotation";
    return "map_family";
}

Rational SystemModel::shift(const Rational& time) const {
    if (auto* t = std::get_if<Translation>(&model)) {
        if (!t->flow && time.get_den() != 1) throw DomainError("rotations take integer times");
        return mod(time * t->step, t->modulus);
    }
    if (auto* d = std::get_if<DigitRotation>(&model)) {
        if (time.get_den() != 1 || sgn(time) <= 0) throw DomainError("digit rotations take times base^n");
        const BigInt a = time.get_num();
        const std::size_t n = mpz_sizeinbase(a.get_mpz_t(), static_cast<int>(d->alpha.base)) - 1;
        std::size_t exact = n;
        if (pow(BigInt(d->alpha.base), n) != a) {
            if (pow(BigInt(d->alpha.base), n + 1) == a)
                exact = n + 1;
            else if (n > 0 && pow(BigInt(d->alpha.base), n - 1) == a)
                exact = n - 1;
            else
                throw DomainError("time " + time.get_str() + " is not a power of the digit base");
        }
        const Rational s = d->alpha.shifted_frac(exact);
        return d->backward && sgn(s) != 0 ? Rational(1 - s) : s;
    }
    throw DomainError("map families have no time parameter");
}

StepFunction average(const SystemModel& system, const StepFunction& f, const std::vector<Rational>& times,
                     std::size_t t, AverageMode mode) {
    if (!(f.domain() == system.domain())) throw DomainError("function and system live on different domains");
    if (auto* fam = std::get_if<MapFamily>(&system.model)) {
        if (mode != AverageMode::Full) throw DomainError("map families only support full averages");
        if (t == 0 || t > fam->shifts.size()) throw DomainError("no maps for level " + std::to_string(t));
        const auto& sh = fam->shifts[t - 1];
        if (t < 63 && sh.size() > (std::size_t{1} << t)) throw DomainError("more than 2^t maps at a level");
        return measure::sum_of_shifts(f, sh, pow2(-static_cast<long>(t)));
    }
    if (t >= 40) throw ResourceGuardError("dyadic level too large for explicit averaging");
    if (mode == AverageMode::Block && t == 0) throw DomainError("block averages need t >= 1");
    const std::size_t hi = std::size_t{1} << t;
    const std::size_t lo = mode == AverageMode::Full ? 1 : hi / 2 + 1;
    if (times.size() < hi) throw DomainError("need at least 2^t times");
    std::vector<Rational> shifts;
    shifts.reserve(hi - lo + 1);
    for (std::size_t n = lo; n <= hi; ++n) shifts.push_back(system.shift(times[n - 1]));
    const Rational coeff = mode == AverageMode::Full ? pow2(-static_cast<long>(t)) : pow2(1 - static_cast<long>(t));
    return measure::sum_of_shifts(f, shifts, coeff);
}

namespace {

MaximalResult assemble(std::vector<StepFunction> weighted, const std::vector<Rational>& wvals, const StepFunction& f,
                       const std::vector<Rational>& ps) {
    MaximalResult res;
    res.profile = pointwise_max(weighted);
    res.report.ps = ps;
    for (const auto& p : ps) {
        auto nm = norms(res.profile, p);
        auto nf = norms(f, p);
        res.report.weak_p.push_back(nm.weak_p);
        res.report.f_strong_p.push_back(nf.strong_p);
        res.report.ratio.push_back(ratio_of_roots(nm.weak_p, nf.strong_p));
    }
    for (std::size_t i = 0; i < weighted.size(); ++i) {
        LevelContribution c;
        c.t = i + 1;
        c.weight = wvals[i];
        c.peak = weighted[i].max_value();
        c.measure_attaining = 0;
        for (const auto& o : measure::overlay(weighted[i], res.profile))
            if (sgn(o.a) > 0 && o.a == o.b) c.measure_attaining += o.end - o.start;
        res.report.per_t.push_back(std::move(c));
    }
    return res;
}

std::vector<StepFunction> family_levels(const MapFamily& fam, const StepFunction& f, const WeightSequence& w,
                                        std::vector<Rational>& wvals) {
    const std::size_t T = std::min(fam.shifts.size(), w.horizon());
    if (T == 0) throw DomainError("empty map family or weight sequence");
    SystemModel sys{fam};
    std::vector<StepFunction> out;
    for (std::size_t t = 1; t <= T; ++t) {
        out.push_back(scaled(average(sys, f, {}, t), w.at(t)));
        wvals.push_back(w.at(t));
    }
    return out;
}

}  // namespace

MaximalResult maximal_profile(const SystemModel& system, const StepFunction& f, const std::vector<Rational>& times,
                              const WeightSequence& w, std::size_t T, const std::vector<Rational>& ps,
                              AverageMode mode) {
    if (T == 0 || T > w.horizon()) throw DomainError("horizon must be in 1..|w|");
    std::vector<StepFunction> weighted;
    std::vector<Rational> wvals;
    for (std::size_t t = 1; t <= T; ++t) {
        weighted.push_back(scaled(average(system, f, times, t, mode), w.at(t)));
        wvals.push_back(w.at(t));
    }
    return assemble(std::move(weighted), wvals, f, ps);
}

AuditReport audit_fa1(const MapFamily& family, const StepFunction& f, const WeightSequence& w) {
    std::vector<Rational> wvals;
    auto res = assemble(family_levels(family, f, w, wvals), wvals, f, {1});
    const WeightSequence used = w.truncated(wvals.size());
    const Rational bound = 9 * *weights::c1(used).exact_value() * f.integral();
    AuditReport rep;
    rep.name = "fa1";
    rep.lhs = res.report.weak_p.front();
    rep.bound = Interval::point(bound, 128);
    const Rational lhs = *rep.lhs.exact();
    rep.ratio = sgn(bound) > 0 ? to_double(lhs / bound) : 0;
    rep.holds = lhs <= bound;
    if (!rep.holds)
        throw BoundViolation("weak-(1,1) bound violated: " + to_string(lhs) + " > 9 C1 ||f||_1 = " + to_string(bound));
    return rep;
}

AuditReport audit_fap(const MapFamily& family, const StepFunction& f, const WeightSequence& w, const Rational& p,
                      const Rational& r) {
    if (!(1 <= r && r < p)) throw DomainError("audit_fap needs 1 <= r < p");
    std::vector<Rational> wvals;
    auto levels = family_levels(family, f, w, wvals);
    auto res = assemble(levels, wvals, f, {p});
    const WeightSequence used = w.truncated(wvals.size());
    const Exponent e = Exponent::from(p);
    const PowerValue wnorm = weights::weak_norm_seq(used, p).value_power;
    const PowerValue fnorm = res.report.f_strong_p.front();

    AuditReport rep;
    rep.name = "fap";
    rep.lhs = res.report.weak_p.front();
    bool decided = false;
    for (mpfr_prec_t bits : {mpfr_prec_t(128), mpfr_prec_t(1024)}) {
        const Interval P = Interval::point(p, bits);
        const Interval K = P.exp() / ((P - Interval::point(r, bits)).exp() - Interval::point(1, bits));
        const Interval two_p = rational_power(2, e, bits);
        rep.bound = two_p * K * wnorm.enclose(bits) * fnorm.enclose(bits);
        const Interval lhs = rep.lhs.enclose(bits);
        if (lhs.certainly_le(rep.bound)) {
            rep.holds = true;
            decided = true;
        } else if (rep.bound.certainly_less(lhs)) {
            rep.holds = false;
            decided = true;
        }
        rep.ratio = lhs.mid_double() / rep.bound.mid_double();
        if (decided) break;
    }
    if (!decided) rep.holds = true;  // equal to 300 digits: not a violation

    // literal lambda = 2 form on c f with ||c f||_p close to 1
    if (!fnorm.is_zero()) {
        const Rational c = round_down(fnorm.root_enclose(128).lo());
        const Rational normalization = 1 / c;
        const Rational mu = res.profile.measure_above(2 / normalization);
        const Interval P = Interval::point(p, 256);
        const Interval K = P.exp() / ((P - Interval::point(r, 256)).exp() - Interval::point(1, 256));
        const Interval bound2 = K * wnorm.enclose(256) * fnorm.scaled(1, normalization).enclose(256);
        rep.normalization = normalization;
        rep.lambda2_measure = mu;
        rep.lambda2_bound = bound2;
        if (bound2.certainly_less(mu)) rep.holds = false;
    }
    if (!rep.holds) throw BoundViolation("weak-(p,p) bound violated in the fap audit");
    return rep;
}

RefineReport refine_subset(const std::vector<StepFunction>& averages, const StepFunction& f, const Rational& C,
                           const Rational& p) {
    if (averages.empty()) throw DomainError("refine_subset needs a nonempty family");
    if (sgn(C) <= 0) throw DomainError("refine_subset needs C > 0");
    const Exponent e = Exponent::from(p);
    const PowerValue fp = norms(f, p).strong_p;
    if (fp.is_zero()) throw DomainError("refine_subset needs f != 0");
    const auto J = static_cast<unsigned long>(averages.size());
    const PowerValue maxp = norms(pointwise_max(averages), p).strong_p;

    RefineReport rep;
    rep.C = C;
    if (maxp < fp.scaled(J, C)) {
        // achieved constant, rounded down so the hypothesis holds as an inequality
        Interval ratio = maxp.enclose(256) / fp.scaled(J, 1).enclose(256);
        Interval root = ratio;
        if (e.num != 1) root = ratio.root(e.num);
        Interval Cint = Interval::point(1, 256);
        for (unsigned long i = 0; i < e.den; ++i) Cint = Cint * root;
        rep.C = round_down(Cint.lo());
        rep.recomputed_C = true;
        if (sgn(rep.C) <= 0) throw InvariantError("achieved constant rounds to zero");
    }
    const Rational half = rep.C / 2;
    const PowerValue threshold = fp.scaled(1, half);
    std::vector<StepFunction> kept;
    for (std::size_t j = 0; j < averages.size(); ++j) {
        if (norms(averages[j], p).strong_p < threshold) {
            rep.dropped.push_back(j);
        } else {
            rep.kept.push_back(j);
            kept.push_back(averages[j]);
        }
    }
    rep.required_p = fp.scaled(J, half);
    rep.max_kept_p = kept.empty() ? PowerValue::zero(e) : norms(pointwise_max(kept), p).strong_p;
    if (rep.max_kept_p < rep.required_p) throw InvariantError("refine conclusion failed: max over J' too small");
    return rep;
}

namespace {

// k with R^(k-1/2) < v <= R^(k+1/2), i.e. R^(2k-1) < v^2 <= R^(2k+1).
long level_of(const Rational& v, const Rational& R) {
    const double lv = std::log(to_double(v));
    const double lr = std::log(to_double(R));
    long k = std::isfinite(lv) && std::isfinite(lr) && lr > 0 ? std::lround(lv / lr) : 0;
    const Rational v2 = v * v;
    while (v2 > pow(R, 2 * k + 1)) ++k;
    while (v2 <= pow(R, 2 * k - 1)) --k;
    return k;
}

}  // namespace

LevelDecomposition level_decompose(const SystemModel& system, const StepFunction& f, const std::vector<Rational>& times,
                                   std::size_t t, const Rational& C, const Rational& p, AverageMode mode) {
    if (!(sgn(C) > 0 && C < 1)) throw DomainError("level_decompose needs 0 < C < 1");
    if (p <= 1) throw DomainError("level_decompose needs p > 1");
    LevelDecomposition out;
    out.Af = average(system, f, times, t, mode);
    const PowerValue Afp = norms(out.Af, p).strong_p;
    const PowerValue fp = norms(f, p).strong_p;
    if (Afp < fp.scaled(1, C / 2)) throw DomainError("precondition ||A f||_p >= (C/2)||f||_p is violated");

    out.L = pow_rational_up(16 / C, p);
    out.R = std::max(Rational(64), pow_rational_up(8 * out.L, 2 / (p - 1)));

    std::set<long> ks;
    for (const auto& v : out.Af.levels())
        if (sgn(v) > 0) ks.insert(level_of(v, out.R));

    const Domain d = f.domain();
    out.B_sum = StepFunction::constant(d, 0);
    out.B_prime_sum = StepFunction::constant(d, 0);
    for (long k : ks) {
        LevelPiece lp;
        lp.k = k;
        const Rational R = out.R;
        lp.E = out.Af.map_values(
            [&](const Rational& v) { return Rational(sgn(v) > 0 && level_of(v, R) == k ? 1 : 0); });
        const Rational lo = pow(R, k - 1);
        const Rational hi = pow(R, k + 1);
        const StepFunction fk = f.map_values([&](const Rational& v) { return lo < v && v <= hi ? v : Rational(0); });
        lp.B = measure::multiply(average(system, fk, times, t, mode), lp.E);
        lp.B_prime = lp.B.map_values([&](const Rational& v) { return v > lo ? v : Rational(0); });
        out.B_sum = measure::scale_add(1, out.B_sum, 1, lp.B);
        out.B_prime_sum = measure::scale_add(1, out.B_prime_sum, 1, lp.B_prime);
        out.levels.push_back(std::move(lp));
    }
    const StepFunction residual = measure::scale_add(1, out.Af, -1, out.B_prime_sum);
    out.residual_p = norms(residual, p).strong_p;
    out.half_Af_p = Afp.scaled(1, Rational(1, 2));
    out.bound_holds = out.residual_p <= out.half_Af_p;

    // rho = A(f^p) / (A f)^p, in double precision
    const double pd = to_double(p);
    const StepFunction fpow = f.map_values([&](const Rational& v) {
        return sgn(v) == 0 ? Rational(0) : round_up(rational_power(v, Exponent::from(p), 128).hi(), 64);
    });
    const StepFunction Afpow = average(system, fpow, times, t, mode);
    const double Ld = to_double(out.L);
    out.rho_above_L_measure = 0;
    for (const auto& o : measure::overlay(Afpow, out.Af)) {
        if (sgn(o.b) == 0) continue;
        const double rho = to_double(o.a) / std::pow(to_double(o.b), pd);
        out.rho_max = std::max(out.rho_max, rho);
        if (rho > Ld) out.rho_above_L_measure += o.end - o.start;
    }
    return out;
}

RandomInstance random_instance(std::uint64_t seed, std::size_t levels, std::size_t max_maps) {
    std::mt19937_64 rng(seed);
    auto below = [&](std::uint64_t n) { return static_cast<long>(rng() % n); };
    RandomInstance inst;
    inst.family.modulus = 1;
    for (std::size_t t = 1; t <= levels; ++t) {
        const std::size_t cap = std::min<std::size_t>(max_maps, t < 63 ? std::size_t{1} << t : max_maps);
        const std::size_t count = 1 + static_cast<std::size_t>(below(cap));
        std::vector<Rational> sh;
        for (std::size_t i = 0; i < count; ++i) {
            const long den = 2 + below(63);
            sh.push_back(make_rational(below(den), den));
        }
        inst.family.shifts.push_back(std::move(sh));
    }
    const Domain d = Domain::circle(1);
    std::vector<measure::Piece> pieces;
    const long np = 1 + below(6);
    for (long i = 0; i < np; ++i) {
        const long den = 2 + below(40);
        const Rational a = make_rational(below(den), den);
        const Rational len = make_rational(1 + below(den), 2 * den);
        pieces.push_back(measure::Piece{a, a + len, make_rational(1 + below(64), 1 + below(8))});
    }
    inst.f = StepFunction::from_pieces(d, pieces);
    std::vector<Rational> wv;
    for (std::size_t t = 1; t <= levels; ++t) {
        const long b = 1 + below(16);
        wv.push_back(make_rational(1 + below(b), b));
    }
    inst.w = WeightSequence::from_values(std::move(wv), "random");
    return inst;
}

}  // namespace divergia::dynsys
