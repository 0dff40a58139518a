#pragma once

// Time sequences and the explicit divergence constructions: the residue
// solver behind lacunary counterexamples, the L^1 and L^p block builders,
// the base-k infection construction and the sumset construction.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "divergia/dynsys.hpp"
#include "divergia/power_value.hpp"
#include "divergia/rational.hpp"
#include "divergia/real.hpp"
#include "divergia/weights.hpp"

namespace divergia::constructions {

using dynsys::SystemModel;
using measure::StepFunction;
using weights::WeightSequence;

/// One term of a time sequence: an integer, or the square root of one.
struct Term {
    BigInt value;  // the radicand for sqrt terms
    bool is_sqrt = false;

    Interval enclose(mpfr_prec_t bits = 128) const;
    /// Exact value; DomainError for sqrt terms.
    Rational rational() const;
    std::string describe() const;
    friend bool operator<(const Term& a, const Term& b);
    friend bool operator==(const Term& a, const Term& b) = default;
};

struct TimeSequence {
    enum class Kind { Power, Factorial, SqrtAll, SqrtSquarefree, FloorLog, Explicit };
    Kind kind = Kind::Power;
    unsigned long base = 2;    // power(k)
    std::vector<BigInt> list;  // explicit

    static TimeSequence power(unsigned long k);
    static TimeSequence of(Kind kind);
    static TimeSequence explicit_list(std::vector<BigInt> terms);
    /// "power:3", "factorial", "sqrt_all", "sqrt_squarefree", "floor_log", "explicit:1,4,9"
    static TimeSequence parse(const std::string& text);
    std::string describe() const;
    bool integer_valued() const { return kind != Kind::SqrtAll && kind != Kind::SqrtSquarefree; }
};

/// First N terms, exactly.
std::vector<Term> materialize(const TimeSequence& seq, std::size_t N);
/// First N terms as rationals (integer-valued kinds only).
std::vector<Rational> integer_times(const TimeSequence& seq, std::size_t N);

struct LacunarityProfile {
    Rational epsilon;
    std::vector<double> ratio;     // a_(n+1)/a_n, n = 1..N-1
    std::vector<double> poly;      // ratio / n^eps
    std::vector<double> log;       // ratio / (ln n)^eps, n >= 2 (NaN at n = 1)
    std::string poly_trend;        // "grows" or "fails"
    std::string log_trend;
};

/// Trend rule: "grows" when the second half of the profile is nondecreasing
/// and its last value exceeds 1.2 times the value at the midpoint.
LacunarityProfile lacunarity_profile(const TimeSequence& seq, const Rational& epsilon, std::size_t N);

struct GapRefinement {
    bool ok = false;
    std::vector<std::size_t> indices;  // kept n (1-based), increasing
    std::size_t max_gap = 0;
    std::string failure;
};

/// Greedy: keep a_i once a_i / b_last > target(#kept), scanning at most
/// `window` terms past the last kept one. Integer-valued kinds only.
GapRefinement refine_bounded_gaps(const TimeSequence& seq, const std::function<Rational(std::size_t)>& target,
                                  std::size_t N, std::size_t window);

struct ResidueProblem {
    unsigned long K = 2;
    std::vector<Rational> terms;          // b_1 < b_2 < ...
    std::vector<unsigned long> targets;   // r_i in 0..K-1
};

struct ResidueSolution {
    Rational lo;
    Rational hi;
    Rational midpoint;
    std::vector<Rational> certificate;  // midpoint * b_i mod 1
    std::vector<Rational> slack;        // hi_s - (candidate end) at each nested step
};

/// Nested intervals; DomainError when b_(i+1)/b_i > 2K fails.
ResidueSolution solve_residues(const ResidueProblem& prob);

struct SearchSolution {
    Rational beta;
    std::vector<Interval> certificate;  // enclosures of beta * b_i mod 1
    std::size_t evaluations = 0;
};

/// Certified grid search for irrational terms (e.g. square roots): beta runs
/// over i/Q for Q = 16, 32, ... until every beta * b_i mod 1 is certified in its
/// target window. PrecisionError once `budget` candidates are exhausted.
SearchSolution search_residues(const std::vector<Term>& terms, unsigned long K,
                               const std::vector<unsigned long>& targets, std::size_t budget = 1000000);

struct ConstructionPlan {
    std::string name;
    SystemModel system;
    StepFunction f;
    std::optional<WeightSequence> w;
    std::vector<Rational> times;  // a_n for the averages (empty for map families)
    nlohmann::json bookkeeping;
    nlohmann::json inputs;        // enough to rebuild the plan
    Rational p = 1;
    /// Lower bound for (||sup||_(p,inf) / ||f||_p)^p claimed by the construction.
    PowerValue claimed_bound;
    /// The same ratio, achieved on the instance.
    PowerValue achieved;

    bool holds() const { return claimed_bound <= achieved; }
};

/// M >= 1; n0 is the lower threshold on N. Flow on the unit circle
/// with step beta = alpha/K; f = 2N 1_[0,2/K).
ConstructionPlan build_ubL1(const WeightSequence& w, unsigned long M, const TimeSequence& seq,
                            unsigned long n0 = 0);

/// J nonempty set of positive levels; flow x - alpha t rescaled to the unit
/// circle, f = 2 1_[0,2/K).
ConstructionPlan build_ubLp(const std::vector<unsigned long>& J, const Rational& p, unsigned long n0,
                            const TimeSequence& seq);

struct InfectionTotals {
    unsigned long n0 = 0;
    Rational m_y;
    Rational l_y;
    Rational l_2y;
    bool identity_holds = false;  // l_y + l_2y > m_y - 9
};

/// n0 and the three sums for (k, w, y), exactly.
InfectionTotals infection_totals(unsigned long k, const WeightSequence& w, unsigned long y);

/// Lyndon words of length n over {0..k-1}, lexicographic.
std::vector<std::vector<unsigned>> lyndon_words(unsigned k, unsigned n);

/// Base-k digits of alpha chosen so that whole rotation classes of blocks get
/// infected; T = w.horizon().
ConstructionPlan build_infection(unsigned long k, const WeightSequence& w, unsigned long y);

struct SumsetInstance {
    unsigned long k = 3;
    std::vector<unsigned long> J;
    std::vector<std::vector<std::int64_t>> B_parts;  // B_j
    std::vector<std::vector<std::int64_t>> C_parts;  // C_j
    std::vector<std::int64_t> B;
    std::vector<std::int64_t> C;
    std::int64_t window_right = 0;  // f = 1_B on {0..window_right}
};

struct SumsetChecks {
    bool unique_decomposition = false;
    bool c_large = false;        // |C| >= |B|/2
    bool half_lower = false;     // A_(j0+1) f >= 1/2 on C - k^(2^j0)
    bool disjoint = false;       // the translates C - k^(2^j0) are pairwise disjoint
    bool differences_outside = false;  // k^(2^l) - k^(2^m) not in B - B
    bool weak_bound = false;     // ||sup||_(p,inf) >= |J|^(1/p) ||f||_p / 4
};

struct SumsetResult {
    SumsetInstance instance;
    SumsetChecks checks;
    dynsys::MaximalReport report;  // levels j0 + 1, counting measure
    std::string isa;
};

SumsetResult build_sumset(unsigned long k, const std::vector<unsigned long>& J, const Rational& p);

}  // namespace divergia::constructions
