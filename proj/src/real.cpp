#include "divergia/real.hpp"

#include <cmath>
#include <cstdlib>
#include <utility>

#include "divergia/errors.hpp"

namespace divergia {

mpfr_prec_t digits_to_bits(int digits) {
    return static_cast<mpfr_prec_t>(std::ceil(digits * 3.3219280948873623)) + 16;
}

mpfr_prec_t default_precision_bits() {
    static const mpfr_prec_t bits = [] {
        int digits = 30;
        if (const char* env = std::getenv("DIVERGIA_PRECISION_DIGITS")) {
            int v = std::atoi(env);
            if (v >= 10 && v <= 10000) digits = v;
        }
        return digits_to_bits(digits);
    }();
    return bits;
}

Real::Real(mpfr_prec_t bits) {
    mpfr_init2(value_, bits);
    mpfr_set_zero(value_, 1);
}

Real::Real(const Real& other) {
    mpfr_init2(value_, other.precision());
    mpfr_set(value_, other.value_, MPFR_RNDN);
}

Real::Real(Real&& other) noexcept {
    mpfr_init2(value_, other.precision());
    mpfr_swap(value_, other.value_);
}

Real& Real::operator=(const Real& other) {
    if (this != &other) {
        mpfr_set_prec(value_, other.precision());
        mpfr_set(value_, other.value_, MPFR_RNDN);
    }
    return *this;
}

Real& Real::operator=(Real&& other) noexcept {
    if (this != &other) {
        mpfr_set_prec(value_, other.precision());
        mpfr_swap(value_, other.value_);
    }
    return *this;
}

Real::~Real() { mpfr_clear(value_); }

Real Real::from_rational(const Rational& q, mpfr_rnd_t rnd, mpfr_prec_t bits) {
    Real r(bits);
    mpfr_set_q(r.value_, q.get_mpq_t(), rnd);
    return r;
}

Real Real::from_double(double v, mpfr_prec_t bits) {
    Real r(bits);
    mpfr_set_d(r.value_, v, MPFR_RNDN);
    return r;
}

Rational Real::to_rational() const {
    if (!mpfr_number_p(value_)) throw DomainError("non-finite real cannot be converted to a rational");
    Rational q;
    mpfr_get_q(q.get_mpq_t(), value_);
    return q;
}

std::string Real::to_string(int digits) const {
    char* buf = nullptr;
    mpfr_asprintf(&buf, "%.*Rg", digits, value_);
    std::string out(buf);
    mpfr_free_str(buf);
    return out;
}

Interval::Interval(mpfr_prec_t bits) : lo_(bits), hi_(bits) {}

Interval Interval::point(const Rational& q, mpfr_prec_t bits) { return hull(q, q, bits); }

Interval Interval::hull(const Rational& lo, const Rational& hi, mpfr_prec_t bits) {
    Interval r(bits);
    mpfr_set_q(r.lo_.get(), lo.get_mpq_t(), MPFR_RNDD);
    mpfr_set_q(r.hi_.get(), hi.get_mpq_t(), MPFR_RNDU);
    return r;
}

Interval Interval::operator+(const Interval& o) const {
    Interval r(std::max(precision(), o.precision()));
    mpfr_add(r.lo_.get(), lo_.get(), o.lo_.get(), MPFR_RNDD);
    mpfr_add(r.hi_.get(), hi_.get(), o.hi_.get(), MPFR_RNDU);
    return r;
}

Interval Interval::operator-(const Interval& o) const {
    Interval r(std::max(precision(), o.precision()));
    mpfr_sub(r.lo_.get(), lo_.get(), o.hi_.get(), MPFR_RNDD);
    mpfr_sub(r.hi_.get(), hi_.get(), o.lo_.get(), MPFR_RNDU);
    return r;
}

Interval Interval::operator*(const Interval& o) const {
    const mpfr_prec_t bits = std::max(precision(), o.precision());
    Interval r(bits);
    Real t(bits);
    bool first = true;
    for (const Real* a : {&lo_, &hi_}) {
        for (const Real* b : {&o.lo_, &o.hi_}) {
            mpfr_mul(t.get(), a->get(), b->get(), MPFR_RNDD);
            if (first || t.compare(r.lo_) < 0) r.lo_ = t;
            mpfr_mul(t.get(), a->get(), b->get(), MPFR_RNDU);
            if (first || t.compare(r.hi_) > 0) r.hi_ = t;
            first = false;
        }
    }
    return r;
}

Interval Interval::operator/(const Interval& o) const {
    if (mpfr_sgn(o.lo_.get()) <= 0 && mpfr_sgn(o.hi_.get()) >= 0)
        throw DomainError("interval division by an interval containing zero");
    const mpfr_prec_t bits = std::max(precision(), o.precision());
    Interval inv(bits);
    mpfr_ui_div(inv.lo_.get(), 1, o.hi_.get(), MPFR_RNDD);
    mpfr_ui_div(inv.hi_.get(), 1, o.lo_.get(), MPFR_RNDU);
    return *this * inv;
}

Interval Interval::log() const {
    if (mpfr_sgn(lo_.get()) <= 0) throw DomainError("log of a non-positive interval");
    Interval r(precision());
    mpfr_log(r.lo_.get(), lo_.get(), MPFR_RNDD);
    mpfr_log(r.hi_.get(), hi_.get(), MPFR_RNDU);
    return r;
}

Interval Interval::exp() const {
    Interval r(precision());
    mpfr_exp(r.lo_.get(), lo_.get(), MPFR_RNDD);
    mpfr_exp(r.hi_.get(), hi_.get(), MPFR_RNDU);
    return r;
}

Interval Interval::root(unsigned long n) const {
    if (mpfr_sgn(lo_.get()) < 0) throw DomainError("root of a negative interval");
    Interval r(precision());
    mpfr_rootn_ui(r.lo_.get(), lo_.get(), n, MPFR_RNDD);
    mpfr_rootn_ui(r.hi_.get(), hi_.get(), n, MPFR_RNDU);
    return r;
}

Real Interval::width() const {
    Real w(precision());
    mpfr_sub(w.get(), hi_.get(), lo_.get(), MPFR_RNDU);
    return w;
}

double Interval::mid_double() const {
    return 0.5 * (mpfr_get_d(lo_.get(), MPFR_RNDN) + mpfr_get_d(hi_.get(), MPFR_RNDN));
}

std::string Interval::to_string(int digits) const {
    return "[" + lo_.to_string(digits) + ", " + hi_.to_string(digits) + "]";
}

bool Interval::contains(const Rational& q) const { return lo_.compare(q) <= 0 && hi_.compare(q) >= 0; }

Interval ln2_interval(mpfr_prec_t bits) {
    Interval r(bits);
    mpfr_const_log2(r.lo().get(), MPFR_RNDD);
    mpfr_const_log2(r.hi().get(), MPFR_RNDU);
    return r;
}

Interval e_interval(mpfr_prec_t bits) { return Interval::point(1, bits).exp(); }

Interval rational_power(const Rational& q, const Exponent& p, mpfr_prec_t bits) {
    if (sgn(q) < 0) throw DomainError("rational_power of a negative base");
    Rational powered = pow(q, static_cast<long>(p.num));
    Interval r = Interval::point(powered, bits);
    return p.den == 1 ? r : r.root(p.den);
}

}  // namespace divergia
