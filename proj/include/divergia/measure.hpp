#pragma once

// Exact nonnegative step functions on a circle R/MZ or a bounded line window,
// with their L^p and weak L^(p,inf) norms.

#include <functional>
#include <string>
#include <vector>

#include "divergia/power_value.hpp"
#include "divergia/rational.hpp"

namespace divergia::measure {

struct Domain {
    enum class Kind { Circle, Window };
    Kind kind = Kind::Circle;
    Rational left = 0;   // 0 for circles
    Rational right = 1;  // circumference for circles

    static Domain circle(const Rational& circumference);
    static Domain window(const Rational& left, const Rational& right);

    bool is_circle() const { return kind == Kind::Circle; }
    Rational length() const { return right - left; }
    bool operator==(const Domain& o) const { return kind == o.kind && left == o.left && right == o.right; }
    std::string describe() const;
};

/// A constant piece [start, end) of a function, in base coordinates
/// ([0, M) on a circle, [L, R) on a window).
struct Piece {
    Rational start;
    Rational end;
    Rational value;
};

/// Canonical layout:
///   circle  m breakpoints, m cells; cell i is [b_i, b_(i+1)), the last cell
///           wraps through 0. A constant has no breakpoints and one value.
///   window  m interior breakpoints, m+1 cells; f = 0 outside [L, R).
/// Adjacent cells (including across the circle's wrap point) never share a value.
class StepFunction {
public:
    StepFunction() = default;

    static StepFunction constant(const Domain& d, const Rational& c);
    /// value on [lo, hi): taken mod M on circles (hi - lo <= M), clipped on windows.
    static StepFunction indicator(const Domain& d, const Rational& lo, const Rational& hi, const Rational& value = 1);
    /// Sum of the given pieces (overlaps add); uncovered points are 0.
    static StepFunction from_pieces(const Domain& d, const std::vector<Piece>& pieces);
    /// Raw layout; validated and canonicalized.
    static StepFunction from_layout(const Domain& d, std::vector<Rational> breakpoints, std::vector<Rational> values);

    const Domain& domain() const { return domain_; }
    const std::vector<Rational>& breakpoints() const { return breakpoints_; }
    const std::vector<Rational>& values() const { return values_; }
    std::size_t cells() const { return values_.size(); }

    /// Consecutive pieces covering the base interval in increasing order.
    std::vector<Piece> pieces() const;
    Rational operator()(const Rational& x) const;

    Rational integral() const;
    Rational max_value() const;
    Rational measure_at_least(const Rational& y) const;
    Rational measure_above(const Rational& y) const;
    /// Distinct values present on a set of positive measure, ascending.
    std::vector<Rational> levels() const;

    /// Apply v -> fn(v) to every cell (fn must keep values nonnegative).
    StepFunction map_values(const std::function<Rational(const Rational&)>& fn) const;

    bool operator==(const StepFunction& o) const = default;

private:
    Domain domain_;
    std::vector<Rational> breakpoints_;
    std::vector<Rational> values_{Rational(0)};
};

/// x -> f(x - s). Circle shifts reduce mod M; window shifts clip to the window.
StepFunction translate(const StepFunction& f, const Rational& s);

/// x -> sum_j coeffs[j] * f(x + shifts[j]) by a single sorted jump sweep.
StepFunction sum_of_shifts(const StepFunction& f, const std::vector<Rational>& shifts, const Rational& coeff = 1);

/// Common refinement of two functions on the same domain.
struct Overlay {
    Rational start;
    Rational end;
    Rational a;
    Rational b;
};
std::vector<Overlay> overlay(const StepFunction& f, const StepFunction& g);

StepFunction multiply(const StepFunction& f, const StepFunction& g);
StepFunction pointwise_max(const std::vector<StepFunction>& fs);
StepFunction scale_add(const Rational& a, const StepFunction& f, const Rational& b, const StepFunction& g);

struct Split {
    StepFunction up;      // [f >= hi] f
    StepFunction middle;  // [lo < f < hi] f
    StepFunction down;    // [f <= lo] f
};
Split threshold_split(const StepFunction& f, const Rational& lo, const Rational& hi);

struct NormReport {
    Rational p = 1;
    PowerValue strong_p;  // ||f||_p^p
    PowerValue weak_p;    // ||f||_(p,inf)^p
    Rational attaining_level;
};
NormReport norms(const StepFunction& f, const Rational& p);

}  // namespace divergia::measure
