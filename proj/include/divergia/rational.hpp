#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace divergia {

using Rational = mpq_class;
using BigInt = mpz_class;

/// Parses "p/q", "p" or a plain decimal like "0.25" into a canonical rational.
Rational parse_rational(std::string_view text);

/// Canonical "p/q" rendering ("p" when q = 1).
std::string to_string(const Rational& q);

inline Rational make_rational(long num, long den = 1) {
    Rational q(num, den);
    q.canonicalize();
    return q;
}

BigInt floor(const Rational& q);
BigInt ceil(const Rational& q);

/// q - floor(q), in [0, 1).
Rational frac(const Rational& q);

/// x reduced into [0, modulus).
Rational mod(const Rational& x, const Rational& modulus);

/// Integer power with signed exponent (q != 0 when e < 0).
Rational pow(const Rational& q, long e);

BigInt pow(const BigInt& base, unsigned long e);

/// 2^e as a rational, e may be negative.
Rational pow2(long e);

/// Exact sum of many rationals, combined pairwise so operand sizes stay balanced.
Rational pairwise_sum(std::span<const Rational> terms);

/// p = num/den with num, den > 0 coprime; throws DomainError otherwise.
struct Exponent {
    unsigned long num = 1;
    unsigned long den = 1;
    static Exponent from(const Rational& p);
    bool is_integer() const { return den == 1; }
    Rational value() const { return make_rational(static_cast<long>(num), static_cast<long>(den)); }
};

/// Decimal rendering with a fixed number of significant digits.
std::string to_decimal(const Rational& q, int digits = 30);

double to_double(const Rational& q);

}  // namespace divergia
