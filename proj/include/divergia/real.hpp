#pragma once

// Multiple-precision reals (MPFR) and outward-rounded intervals.
//
// Interval endpoints are always rounded outward, so every operation
// returns an enclosure of the exact result. Comparisons that cannot be
// decided at the working precision report "undecided" instead of guessing.

#include <mpfr.h>

#include <optional>
#include <string>

#include "divergia/rational.hpp"

namespace divergia {

/// Working precision in bits; honours DIVERGIA_PRECISION_DIGITS (default 30).
mpfr_prec_t default_precision_bits();

/// Decimal digits -> bits, with a small guard.
mpfr_prec_t digits_to_bits(int digits);

class Real {
public:
    explicit Real(mpfr_prec_t bits = default_precision_bits());
    Real(const Real& other);
    Real(Real&& other) noexcept;
    Real& operator=(const Real& other);
    Real& operator=(Real&& other) noexcept;
    ~Real();

    static Real from_rational(const Rational& q, mpfr_rnd_t rnd, mpfr_prec_t bits = default_precision_bits());
    static Real from_double(double v, mpfr_prec_t bits = default_precision_bits());

    mpfr_ptr get() { return value_; }
    mpfr_srcptr get() const { return value_; }
    mpfr_prec_t precision() const { return mpfr_get_prec(value_); }

    /// Exact conversion (every finite MPFR value is a dyadic rational).
    Rational to_rational() const;
    double to_double() const { return mpfr_get_d(value_, MPFR_RNDN); }
    std::string to_string(int digits = 30) const;

    int compare(const Real& other) const { return mpfr_cmp(value_, other.value_); }
    int compare(const Rational& q) const { return mpfr_cmp_q(value_, q.get_mpq_t()); }

private:
    mpfr_t value_;
};

class Interval {
public:
    explicit Interval(mpfr_prec_t bits = default_precision_bits());
    static Interval point(const Rational& q, mpfr_prec_t bits = default_precision_bits());
    static Interval hull(const Rational& lo, const Rational& hi, mpfr_prec_t bits = default_precision_bits());

    const Real& lo() const { return lo_; }
    const Real& hi() const { return hi_; }
    Real& lo() { return lo_; }
    Real& hi() { return hi_; }
    mpfr_prec_t precision() const { return lo_.precision(); }

    Interval operator+(const Interval& o) const;
    Interval operator-(const Interval& o) const;
    Interval operator*(const Interval& o) const;
    Interval operator/(const Interval& o) const;

    /// Natural log / exp; log requires lo > 0.
    Interval log() const;
    Interval exp() const;
    /// x^(1/n) for x >= 0.
    Interval root(unsigned long n) const;

    /// Width hi - lo, rounded up.
    Real width() const;
    double mid_double() const;
    std::string to_string(int digits = 30) const;

    bool contains(const Rational& q) const;
    bool certainly_less(const Interval& o) const { return hi_.compare(o.lo_) < 0; }
    bool certainly_le(const Interval& o) const { return hi_.compare(o.lo_) <= 0; }
    bool certainly_less(const Rational& q) const { return hi_.compare(q) < 0; }
    bool certainly_greater(const Rational& q) const { return lo_.compare(q) > 0; }

private:
    Real lo_;
    Real hi_;
};

Interval ln2_interval(mpfr_prec_t bits = default_precision_bits());
Interval e_interval(mpfr_prec_t bits = default_precision_bits());

/// Enclosure of q^(a/b) for q >= 0.
Interval rational_power(const Rational& q, const Exponent& p, mpfr_prec_t bits = default_precision_bits());

}  // namespace divergia
