#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>

#include "divergia/rational.hpp"
#include "divergia/real.hpp"

namespace divergia {

/// A nonnegative quantity  sum_i c_i * b_i^p  with rational c_i, b_i >= 0 and a
/// fixed rational exponent p > 0.
///
/// p-th powers of L^p and weak-L^p norms of step functions have exactly this
/// shape, so they can be kept exact even when p is not an integer. When p is an
/// integer every term collapses to a plain rational.
class PowerValue {
public:
    PowerValue() = default;
    explicit PowerValue(Exponent p) : p_(p) {}

    static PowerValue zero(Exponent p) { return PowerValue(p); }
    /// coeff * base^p
    static PowerValue monomial(const Rational& coeff, const Rational& base, Exponent p);
    /// A plain rational r (= r * 1^p).
    static PowerValue scalar(const Rational& r, Exponent p) { return monomial(r, 1, p); }

    const Exponent& exponent() const { return p_; }
    const std::map<Rational, Rational>& terms() const { return terms_; }

    bool is_zero() const { return terms_.empty(); }
    bool is_monomial() const { return terms_.size() <= 1; }
    /// Exact rational value when available (integer p, or every base equal to 1).
    std::optional<Rational> exact() const;

    PowerValue& operator+=(const PowerValue& other);
    friend PowerValue operator+(PowerValue a, const PowerValue& b) { return a += b; }

    /// Multiply by coeff * base^p.
    PowerValue scaled(const Rational& coeff, const Rational& base = 1) const;

    Interval enclose(mpfr_prec_t bits = default_precision_bits()) const;
    /// Enclosure of value^(1/p).
    Interval root_enclose(mpfr_prec_t bits = default_precision_bits()) const;
    std::string decimal(int digits = 30) const;
    /// "p/q" when exact, otherwise a sum of "c*(b)^(p)" terms.
    std::string expression() const;

    /// Certified three-way comparison; throws InvariantError if two distinct
    /// multi-term values cannot be separated at 16384 bits.
    friend std::strong_ordering compare(const PowerValue& a, const PowerValue& b);
    friend bool operator<=(const PowerValue& a, const PowerValue& b) { return compare(a, b) <= 0; }
    friend bool operator<(const PowerValue& a, const PowerValue& b) { return compare(a, b) < 0; }
    friend bool operator==(const PowerValue& a, const PowerValue& b) { return compare(a, b) == 0; }
    friend bool operator>=(const PowerValue& a, const PowerValue& b) { return compare(a, b) >= 0; }
    friend bool operator>(const PowerValue& a, const PowerValue& b) { return compare(a, b) > 0; }

private:
    void add_term(const Rational& coeff, const Rational& base);

    Exponent p_{};
    std::map<Rational, Rational> terms_;  // base -> coeff, coeff > 0, base > 0
};

}  // namespace divergia
