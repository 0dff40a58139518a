#pragma once

// Weight sequences (w_t) and the functionals that decide whether weighted
// dyadic averages w_t A_t f can satisfy a maximal inequality.
//
// Everything is evaluated at a finite horizon T; "C_1(w) = infinity" style
// statements show up only as value-versus-horizon curves.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "divergia/power_value.hpp"
#include "divergia/rational.hpp"
#include "divergia/real.hpp"

namespace divergia::weights {

/// Finite weights w_1..w_T (stored 0-based: values[t-1] = w_t).
///
/// Weights are nonnegative with at least one positive entry; indicator
/// sequences of finite sets need the zeros.
struct WeightSequence {
    std::vector<Rational> values;
    std::string tag;  // empty for explicit sequences

    std::size_t horizon() const { return values.size(); }
    const Rational& at(std::size_t t) const { return values.at(t - 1); }

    static WeightSequence from_values(std::vector<Rational> values, std::string tag = {});
    /// Same tag, first `horizon` terms (the truncations w^(n)).
    WeightSequence truncated(std::size_t horizon) const;
};

/// Materialize a tagged generator at the given horizon. Supported tags:
///   reciprocal-Phi        1/Phi(t)
///   reciprocal-t          1/t
///   inv-root-t:<p>        t^(-1/p)
///   loglog-over-Phi       (ln ln t)/Phi(t) for t >= 16, 1/Phi(t) before
///   constant:<q>          q for every t
///   indicator-of-J:<list> 1 on the comma-separated set J, 0 elsewhere
/// Irrational weights are rounded to nearest at a fixed 30 significant digits,
/// independent of DIVERGIA_PRECISION_DIGITS, so re-materializing is bit-exact.
WeightSequence materialize(const std::string& tag, std::size_t horizon);

enum class Functional { C1, C1Prime, Cp, WeakNorm };
std::string to_string(Functional f);

struct WeightFunctionalReport {
    Functional functional = Functional::C1;
    Rational p = 1;
    /// value^p; a plain rational for C1 and C1'.
    PowerValue value_power;
    /// The supremum's location: y for C1 / weak norm, z for C1'.
    Rational argmax_threshold;
    /// 1-based t contributing at the attaining threshold.
    std::vector<std::size_t> contributing_indices;

    std::optional<Rational> exact_value() const;
    std::string decimal(int digits = 30) const;
    double approx() const;
};

/// sup_y y * #{t : w_t >= y}^(1/p); attained at some y = w_t.
WeightFunctionalReport weak_norm_seq(const WeightSequence& w, const Rational& p);

/// sum_t [y < w_t < 2^t y] w_t at a single y.
Rational c1_window_sum(const WeightSequence& w, const Rational& y);

/// sup_y sum_t [y < w_t < 2^t y] w_t, exact.
WeightFunctionalReport c1(const WeightSequence& w);

/// sum_t [t > z and w_t > 2^-z] w_t at a single integer z >= 0.
Rational c1_prime_sum(const WeightSequence& w, std::size_t z);

/// sup over z in {0..T} of c1_prime_sum.
WeightFunctionalReport c1_prime(const WeightSequence& w);

/// c1 for p = 1, weak_norm_seq for p > 1.
WeightFunctionalReport cp(const WeightSequence& w, const Rational& p);

/// t times every iterated natural log of t that is strictly greater than 1.
Real phi(const Real& t);
Real phi(const Rational& t, mpfr_prec_t bits = default_precision_bits());

enum class HardyVerdict { BoundedSoFar, Growing, Inconclusive };
std::string to_string(HardyVerdict v);

/// Finite-horizon heuristic for the Phi / t^(1/p) classification; never a
/// statement about limits.
struct HardyReport {
    Rational p = 1;
    std::vector<double> profile;      // w_t * Phi(t)  or  w_t * t^(1/p)
    std::vector<double> running_max;
    double first_half_max = 0;
    double last_half_max = 0;
    std::vector<double> dyadic_block_max;  // max over (2^(k-1), 2^k]
    HardyVerdict verdict = HardyVerdict::Inconclusive;
};

/// Verdict rule: Growing if the last-half max exceeds twice the first-half max;
/// BoundedSoFar if the last-half max does not exceed the first-half max (up to
/// 1e-12 relative); otherwise Growing when the last four dyadic-block maxima
/// strictly increase, else Inconclusive.
HardyReport classify_hardy(const WeightSequence& w, const Rational& p);

/// v_t = max_{2^(t-1) < n <= 2^t} u_n for t = 1..T; u is 1-based (u[0] = u_1).
std::vector<Rational> dyadic_envelope(const std::vector<Rational>& u, std::size_t T);

struct ScaledSum {
    WeightSequence sum;
    std::vector<Rational> factors;
    std::vector<WeightFunctionalReport> scaled_parts;
    WeightFunctionalReport sum_cp;
    /// False when some target could only be met to 30 digits (irrational factor).
    bool exact = true;
};

/// Rescale each sequence so cp(w^(k), p) equals targets[k], then add pointwise.
ScaledSum scale_and_sum(const std::vector<WeightSequence>& ws, const std::vector<Rational>& targets,
                        const Rational& p);

}  // namespace divergia::weights
