#include "divergia/rational.hpp"

#include <mpfr.h>

#include <algorithm>
#include <cctype>

#include "divergia/errors.hpp"

namespace divergia {

Rational parse_rational(std::string_view text) {
    std::string s(text);
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
    if (s.empty()) throw DomainError("empty rational literal");
    try {
        if (auto dot = s.find('.'); dot != std::string::npos) {
            if (s.find('/') != std::string::npos) throw DomainError("mixed decimal/fraction literal: " + s);
            bool neg = s[0] == '-';
            std::string digits = s.substr(neg || s[0] == '+' ? 1 : 0);
            dot = digits.find('.');
            std::string whole = digits.substr(0, dot);
            std::string fracpart = digits.substr(dot + 1);
            if (whole.empty()) whole = "0";
            BigInt num(whole + fracpart, 10);
            BigInt den = pow(BigInt(10), static_cast<unsigned long>(fracpart.size()));
            Rational q(num, den);
            q.canonicalize();
            return neg ? Rational(-q) : q;
        }
        Rational q(s, 10);
        if (q.get_den() == 0) throw DomainError("zero denominator: " + s);
        q.canonicalize();
        return q;
    } catch (const std::invalid_argument&) {
        throw DomainError("not a rational literal: " + s);
    }
}

std::string to_string(const Rational& q) { return q.get_str(10); }

BigInt floor(const Rational& q) {
    BigInt r;
    mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return r;
}

BigInt ceil(const Rational& q) {
    BigInt r;
    mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return r;
}

Rational frac(const Rational& q) {
    BigInt r;
    mpz_fdiv_r(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    Rational out(r, q.get_den());
    out.canonicalize();
    return out;
}

Rational mod(const Rational& x, const Rational& modulus) {
    if (sgn(modulus) <= 0) throw DomainError("modulus must be positive");
    Rational ratio = x / modulus;
    Rational out = x - Rational(floor(ratio)) * modulus;
    return out;
}

Rational pow(const Rational& q, long e) {
    if (e == 0) return 1;
    if (e < 0) {
        if (sgn(q) == 0) throw DomainError("zero to a negative power");
        return 1 / pow(q, -e);
    }
    BigInt n, d;
    mpz_pow_ui(n.get_mpz_t(), q.get_num_mpz_t(), static_cast<unsigned long>(e));
    mpz_pow_ui(d.get_mpz_t(), q.get_den_mpz_t(), static_cast<unsigned long>(e));
    return Rational(n, d);  // already canonical: coprime powers
}

BigInt pow(const BigInt& base, unsigned long e) {
    BigInt r;
    mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), e);
    return r;
}

Rational pow2(long e) {
    BigInt one(1);
    BigInt p;
    mpz_mul_2exp(p.get_mpz_t(), one.get_mpz_t(), static_cast<mp_bitcnt_t>(e < 0 ? -e : e));
    return e < 0 ? Rational(one, p) : Rational(p);
}

Rational pairwise_sum(std::span<const Rational> terms) {
    if (terms.empty()) return 0;
    std::vector<Rational> level(terms.begin(), terms.end());
    while (level.size() > 1) {
        std::vector<Rational> next;
        next.reserve((level.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < level.size(); i += 2) next.emplace_back(level[i] + level[i + 1]);
        if (level.size() % 2) next.emplace_back(std::move(level.back()));
        level = std::move(next);
    }
    return level.front();
}

Exponent Exponent::from(const Rational& p) {
    if (sgn(p) <= 0) throw DomainError("exponent must be positive");
    if (!p.get_num().fits_ulong_p() || !p.get_den().fits_ulong_p())
        throw DomainError("exponent too large: " + to_string(p));
    return Exponent{p.get_num().get_ui(), p.get_den().get_ui()};
}

std::string to_decimal(const Rational& q, int digits) {
    mpfr_t x;
    mpfr_init2(x, static_cast<mpfr_prec_t>(digits * 3.33) + 16);
    mpfr_set_q(x, q.get_mpq_t(), MPFR_RNDN);
    char* buf = nullptr;
    mpfr_asprintf(&buf, "%.*Rg", digits, x);
    std::string out(buf);
    mpfr_free_str(buf);
    mpfr_clear(x);
    return out;
}

double to_double(const Rational& q) {
    mpfr_t x;
    mpfr_init2(x, 64);
    mpfr_set_q(x, q.get_mpq_t(), MPFR_RNDN);
    double d = mpfr_get_d(x, MPFR_RNDN);
    mpfr_clear(x);
    return d;
}

}  // namespace divergia
