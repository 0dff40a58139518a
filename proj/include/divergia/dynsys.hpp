#pragma once

// Translation systems, the weighted dyadic averages A_t, maximal profiles and
// exact audits of the positive maximal inequalities.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "divergia/measure.hpp"
#include "divergia/power_value.hpp"
#include "divergia/weights.hpp"

namespace divergia::dynsys {

using measure::Domain;
using measure::StepFunction;

/// alpha = sum_i digits[i-1] * base^(-i), a finite prefix of a real number.
struct DigitReal {
    unsigned base = 2;
    std::vector<unsigned> digits;
    /// Trailing digits that may not be shifted into the integer part.
    std::size_t reserve = 0;

    Rational value() const;
    /// Largest n for which base^n * alpha mod 1 is trusted.
    std::size_t valid_horizon() const;
    /// base^n * alpha mod 1, exact; PrecisionError beyond valid_horizon().
    Rational shifted_frac(std::size_t n) const;
};

/// T^a x = x + a * step on the circle R/(modulus Z). Rotations take integer
/// times, flows any rational time.
struct Translation {
    Rational step;
    Rational modulus = 1;
    bool flow = false;
};

/// T^a x = x + a * alpha on R/Z (x - a * alpha when backward) for times
/// a = base^n only.
struct DigitRotation {
    DigitReal alpha;
    bool backward = false;
};

/// Explicit transformations: shifts[t-1] lists the translations in the
/// family used at level t (at most 2^t of them).
struct MapFamily {
    Rational modulus = 1;
    std::vector<std::vector<Rational>> shifts;
};

struct SystemModel {
    std::variant<Translation, DigitRotation, MapFamily> model;

    Domain domain() const;
    std::string kind() const;
    /// s with f(T^a x) = f(x + s).
    Rational shift(const Rational& time) const;
};

enum class AverageMode { Full, Block };

/// Full: 2^-t sum_{n <= 2^t} f(T^(a_n) x).
/// Block: 2^-(t-1) sum_{2^(t-1) < n <= 2^t} f(T^(a_n) x), so that
/// block_t = 2 full_t - full_(t-1).
/// times[n-1] = a_n. Map families ignore `times` and use 2^-t sum over T_t.
StepFunction average(const SystemModel& system, const StepFunction& f, const std::vector<Rational>& times,
                     std::size_t t, AverageMode mode = AverageMode::Full);

struct LevelContribution {
    std::size_t t = 0;
    Rational weight;
    Rational peak;            // max of w_t A_t f
    Rational measure_attaining;  // where w_t A_t f equals the profile and is positive
};

struct MaximalReport {
    std::vector<Rational> ps;
    std::vector<PowerValue> weak_p;    // ||sup_t w_t A_t f||_(p,inf)^p
    std::vector<PowerValue> f_strong_p;  // ||f||_p^p
    std::vector<double> ratio;         // weak / strong (not p-th powers)
    std::vector<LevelContribution> per_t;
};

struct MaximalResult {
    StepFunction profile;
    MaximalReport report;
};

/// sup_{t <= T} w_t A_t f, exact, in full mode.
MaximalResult maximal_profile(const SystemModel& system, const StepFunction& f, const std::vector<Rational>& times,
                              const weights::WeightSequence& w, std::size_t T, const std::vector<Rational>& ps = {1},
                              AverageMode mode = AverageMode::Full);

struct AuditReport {
    std::string name;
    PowerValue lhs;          // achieved quantity
    Interval bound;          // certified enclosure of the claimed bound
    double ratio = 0;        // lhs / bound
    bool holds = true;
    /// fap only: mu{sup_t w_t A_t f > 2} for the normalized f, against its bound.
    std::optional<Rational> lambda2_measure;
    std::optional<Interval> lambda2_bound;
    std::optional<Rational> normalization;  // the factor applied to f for the lambda = 2 form
};

/// ||sup_t w_t A_t f||_(1,inf) <= 9 C_1(w) ||f||_1 on a map family.
/// Throws BoundViolation when the inequality fails.
AuditReport audit_fa1(const MapFamily& family, const StepFunction& f, const weights::WeightSequence& w);

/// sup_lambda lambda^p mu{M > lambda} <= 2^p e^p / (e^(p-r) - 1) ||w||_(p,inf)^p ||f||_p^p
/// (the lambda = 2 estimate transported by homogeneity), plus the literal
/// lambda = 2 form after rescaling f so that ||f||_p = 1.
AuditReport audit_fap(const MapFamily& family, const StepFunction& f, const weights::WeightSequence& w,
                      const Rational& p, const Rational& r);

struct RefineReport {
    std::vector<std::size_t> kept;     // J', as indices into the input list
    std::vector<std::size_t> dropped;  // J_1
    Rational C;                        // constant actually used
    bool recomputed_C = false;         // the supplied C violated the hypothesis
    PowerValue max_kept_p;             // ||max_{J'} A_j f||_p^p
    PowerValue required_p;             // (C/2)^p |J| ||f||_p^p
};

/// Select J' = {j : ||A_j f||_p >= (C/2) ||f||_p} and verify both conclusions.
RefineReport refine_subset(const std::vector<StepFunction>& averages, const StepFunction& f, const Rational& C,
                           const Rational& p);

struct LevelPiece {
    long k = 0;
    StepFunction E;        // indicator of {A f in (R^(k-1/2), R^(k+1/2)]}
    StepFunction B;        // B^k f
    StepFunction B_prime;  // B'^k f
};

struct LevelDecomposition {
    Rational L;
    Rational R;
    StepFunction Af;
    std::vector<LevelPiece> levels;
    StepFunction B_sum;        // sum_k B^k f
    StepFunction B_prime_sum;  // sum_k B'^k f
    PowerValue residual_p;     // ||A f - B' f||_p^p
    PowerValue half_Af_p;      // 2^-p ||A f||_p^p
    bool bound_holds = false;
    double rho_max = 0;          // max of rho over cells (double diagnostics)
    Rational rho_above_L_measure;  // mu{rho > L}, cells decided in double precision
};

/// Level-set operators B^k, B'^k with L = (16/C)^p and R = max(64, (8L)^(2/(p-1))),
/// both rounded up to rationals when irrational. Needs 0 < C < 1, p > 1 and
/// ||A f||_p >= (C/2) ||f||_p for the average at level t.
LevelDecomposition level_decompose(const SystemModel& system, const StepFunction& f, const std::vector<Rational>& times,
                                   std::size_t t, const Rational& C, const Rational& p,
                                   AverageMode mode = AverageMode::Full);

/// Reproducible random instance for the audit property tests.
struct RandomInstance {
    MapFamily family;
    StepFunction f;
    weights::WeightSequence w;
};
RandomInstance random_instance(std::uint64_t seed, std::size_t levels, std::size_t max_maps = 64);

}  // namespace divergia::dynsys
