#include "divergia/power_value.hpp"

#include <sstream>

#include "divergia/errors.hpp"

namespace divergia {

PowerValue PowerValue::monomial(const Rational& coeff, const Rational& base, Exponent p) {
    PowerValue v(p);
    v.add_term(coeff, base);
    return v;
}

void PowerValue::add_term(const Rational& coeff, const Rational& base) {
    if (sgn(coeff) < 0 || sgn(base) < 0) throw DomainError("PowerValue terms must be nonnegative");
    if (sgn(coeff) == 0 || sgn(base) == 0) return;
    if (p_.is_integer() && base != 1) {
        add_term(coeff * pow(base, static_cast<long>(p_.num)), 1);
        return;
    }
    auto [it, inserted] = terms_.try_emplace(base, coeff);
    if (!inserted) it->second += coeff;
}

std::optional<Rational> PowerValue::exact() const {
    if (terms_.empty()) return Rational(0);
    if (terms_.size() == 1 && terms_.begin()->first == 1) return terms_.begin()->second;
    return std::nullopt;
}

PowerValue& PowerValue::operator+=(const PowerValue& other) {
    if (other.p_.num != p_.num || other.p_.den != p_.den) {
        if (terms_.empty() && p_.num == 1 && p_.den == 1 && other.terms_.empty()) return *this;
        throw DomainError("adding PowerValues with different exponents");
    }
    for (const auto& [base, coeff] : other.terms_) add_term(coeff, base);
    return *this;
}

PowerValue PowerValue::scaled(const Rational& coeff, const Rational& base) const {
    PowerValue out(p_);
    for (const auto& [b, c] : terms_) out.add_term(c * coeff, b * base);
    return out;
}

Interval PowerValue::enclose(mpfr_prec_t bits) const {
    Interval sum = Interval::point(0, bits);
    for (const auto& [base, coeff] : terms_) {
        // coeff * base^(a/b) = (coeff^b * base^a)^(1/b)
        Rational inside = pow(coeff, static_cast<long>(p_.den)) * pow(base, static_cast<long>(p_.num));
        Interval term = Interval::point(inside, bits);
        if (p_.den != 1) term = term.root(p_.den);
        sum = sum + term;
    }
    return sum;
}

Interval PowerValue::root_enclose(mpfr_prec_t bits) const {
    Interval v = enclose(bits);
    if (is_zero()) return v;
    // value^(1/p) = value^(den/num)
    Interval r = v.root(p_.num);
    Interval out = Interval::point(1, bits);
    for (unsigned long i = 0; i < p_.den; ++i) out = out * r;
    return out;
}

std::string PowerValue::decimal(int digits) const {
    if (auto e = exact()) return to_decimal(*e, digits);
    Interval v = enclose(digits_to_bits(digits + 10));
    return Real(v.lo()).to_string(digits);
}

std::string PowerValue::expression() const {
    if (auto e = exact()) return to_string(*e);
    std::ostringstream os;
    bool first = true;
    for (const auto& [base, coeff] : terms_) {
        if (!first) os << " + ";
        first = false;
        os << to_string(coeff) << "*(" << to_string(base) << ")^(" << p_.num;
        if (p_.den != 1) os << "/" << p_.den;
        os << ")";
    }
    return os.str();
}

std::strong_ordering compare(const PowerValue& a, const PowerValue& b) {
    if (a.p_.num != b.p_.num || a.p_.den != b.p_.den) {
        if (a.is_zero() && b.is_zero()) return std::strong_ordering::equal;
        throw DomainError("comparing PowerValues with different exponents");
    }
    if (a.terms_ == b.terms_) return std::strong_ordering::equal;
    if (a.is_zero()) return std::strong_ordering::less;
    if (b.is_zero()) return std::strong_ordering::greater;
    auto ea = a.exact();
    auto eb = b.exact();
    if (ea && eb) return cmp(*ea, *eb) <=> 0;
    if (a.is_monomial() && b.is_monomial()) {
        const auto& [ba, ca] = *a.terms_.begin();
        const auto& [bb, cb] = *b.terms_.begin();
        const long num = static_cast<long>(a.p_.num);
        const long den = static_cast<long>(a.p_.den);
        Rational lhs = pow(ca, den) * pow(ba, num);
        Rational rhs = pow(cb, den) * pow(bb, num);
        return cmp(lhs, rhs) <=> 0;
    }
    for (mpfr_prec_t bits : {mpfr_prec_t(128), mpfr_prec_t(1024), mpfr_prec_t(16384)}) {
        Interval ia = a.enclose(bits);
        Interval ib = b.enclose(bits);
        if (ia.certainly_less(ib)) return std::strong_ordering::less;
        if (ib.certainly_less(ia)) return std::strong_ordering::greater;
    }
    throw InvariantError("cannot separate " + a.expression() + " from " + b.expression());
}

}  // namespace divergia
