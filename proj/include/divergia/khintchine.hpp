#pragma once

// Khintchine averages f(n x mod 1), their logarithmic (additive) counterpart,
// the tower transference between the two, growth estimates and the
// multiplicative-semigroup dichotomy.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "divergia/measure.hpp"
#include "divergia/power_value.hpp"
#include "divergia/rational.hpp"
#include "divergia/real.hpp"

namespace divergia::khintchine {

using measure::StepFunction;

/// (1/|S|) sum_{n in S} f(n x mod 1), exact; f lives on the unit circle.
Rational khintchine_average(const StepFunction& f, const Rational& x, const std::vector<BigInt>& S);
/// K_N f(x) = sum_{n <= N} f(n x mod 1).
Rational khintchine_sum(const StepFunction& f, const Rational& x, std::size_t N);

struct CertifiedValue {
    Rational lo;
    Rational hi;
    bool widened = false;  // some probe straddled a breakpoint of g
    bool exact() const { return lo == hi; }
};

/// (1/|I|) sum_{n in I} g(y - ln a_n) for g on a window (0 outside). Logs
/// are enclosed at `bits`; a probe whose enclosure meets a breakpoint
/// contributes the range of g over the enclosure.
CertifiedValue additive_average(const StepFunction& g, const Rational& y, const std::vector<std::size_t>& I,
                                const std::vector<BigInt>& a, mpfr_prec_t bits = default_precision_bits());

struct KhintchineLower {
    std::vector<unsigned long> J;
    Rational p;
    /// max_j B_j g written in u = e^y: a step function on [1, 2^(max J + 2)).
    StepFunction profile_u;
    Interval certified_measure;  // measure in y of the union of [j ln 2, (j+1) ln 2)
    Interval measure_at_least_1;  // measure in y of {max >= 1}
    Interval weak_p;             // ||max_j B_j g||_(p,inf)^p
    Interval g_strong_p;         // 2^(p+1) ln 2
    Interval ratio;              // ||max||_(p,inf) / ||g||_p
    Interval claimed;            // 2^(-1-1/p) (ln 2)^(1/p) |J|^(1/p)
    bool certificate_ok = false;  // B_j g >= 1 on [2^j, 2^(j+1)) for every j, exactly
    bool holds = false;          // ratio certainly >= claimed
};

/// g = 2 1_[0, 2 ln 2), I_j = {n <= 2^j}. J nonempty, max(J) <= 24.
KhintchineLower khintchine_lower(const std::vector<unsigned long>& J, const Rational& p,
                                 mpfr_prec_t bits = default_precision_bits());

/// Rokhlin-tower geometry {0..N-1}^d with one value per cell.
struct TowerModel {
    unsigned d = 1;
    unsigned N = 1;
    std::vector<Rational> values;  // row-major, size N^d
    Rational epsilon = 0;

    std::size_t index(const std::vector<unsigned>& cell) const;
    const Rational& at(const std::vector<unsigned>& cell) const { return values.at(index(cell)); }
};

struct TowerTransfer {
    TowerModel dst;
    std::vector<bool> core;  // r <= n_i < N for all i
    Rational core_mass;      // ((N - r)/N)^d (1 - epsilon)
    std::size_t probes = 0;
    bool equal_on_core = false;  // src(n - e) == dst(n - e) for n in core, e in [0, r]^d
    bool max_equal = false;      // max over the exponent box agrees on the core
};

/// Copy cell values by index and verify the transported evaluations.
TowerTransfer tower_transfer(const TowerModel& src, unsigned r);

struct WeakboundReport {
    std::vector<Rational> c;      // c_n, n = 1..T, with h_0 = 0
    Rational d;                   // ||c||_(1,inf) under counting measure
    std::optional<Rational> K;    // h_1 prod_{j=2}^{2 ceil(d) - 1} 1/(1 - t_j)
    bool degenerate = false;      // some t_j = 1 inside the product
    bool holds = false;           // h_n <= e K n^d for all n
    std::size_t first_failure = 0;
};

/// h nondecreasing with h_1 > 0.
WeakboundReport weakbound_check(const std::vector<Rational>& h);

/// Exact ||c||_(1,inf) = max_k k t_k over the decreasing rearrangement t.
Rational weak_one_norm(std::vector<Rational> c);

struct GrowthProfile {
    std::string kind;
    std::vector<BigInt> h;           // h(N), N = 1..horizon
    std::vector<Rational> c;
    Rational weak_c;
    std::vector<std::size_t> probed; // n whose probe certified sup_N B_N g >= c_n at n + 1/2
    bool probes_ok = true;
};

/// t-sequence kinds: "identity" (t_n = n), "sqrt" (t_n = sqrt n), "log"
/// (t_n = ln n), "explicit:<t_1>,<t_2>,..." (rationals). h(N) = #{n : t_n <= N}.
GrowthProfile growth_divergence(const std::string& kind, std::size_t horizon);

struct SemigroupSample {
    std::vector<std::uint64_t> generators;
    std::vector<std::uint64_t> elements;  // sorted, <= N_max
    std::uint64_t N_max = 0;
    bool include_one = false;
    std::vector<std::uint64_t> prime_support;
    unsigned lattice_dim = 0;

    struct Curve {
        std::vector<std::uint64_t> N;
        std::vector<std::size_t> count;
        std::vector<std::vector<double>> normalized;  // [k-1][i] = |S_N| / (ln N)^k
    } curve;

    std::size_t count_upto(std::uint64_t N) const;
    bool contains(std::uint64_t x) const;
};

/// Heap-ordered products of the generators up to N_max.
SemigroupSample semigroup_enumerate(const std::vector<std::uint64_t>& generators, std::uint64_t N_max,
                                    bool include_one = false);
/// A sample given by its elements (sorted and deduplicated here).
SemigroupSample semigroup_from_elements(std::vector<std::uint64_t> elements, std::uint64_t N_max);

struct FolnerRow {
    std::uint64_t N = 0;
    std::size_t size = 0;
    Rational shift_ratio;       // |x S_N symdiff S_N| / |S_N|
    Rational difference_ratio;  // |S_N - S_N| / |S_N| on exponent vectors
};

std::vector<FolnerRow> folner_check(const SemigroupSample& S, std::uint64_t x, const std::vector<std::uint64_t>& Ns,
                                    bool truncated = false);

struct LatticeCount {
    std::uint64_t L = 0;
    double asymptote = 0;
    double residual = 0;
    double normalized_residual = 0;  // residual / y^(d-1)
};

/// #{alpha >= 0 : sum alpha_i ln p_i <= y}, i.e. #{p-smooth n <= e^y}.
LatticeCount lattice_count(const std::vector<std::uint64_t>& primes, const Rational& y);

struct DichotomyReport {
    std::string verdict;  // "convergence side" or "divergence side"
    std::vector<std::uint64_t> horizons;
    std::vector<std::size_t> support_sizes;
    std::vector<FolnerRow> folner;  // convergence side
    std::vector<SemigroupSample::Curve> curves;  // divergence side
    std::optional<GrowthProfile> growth;         // divergence side, h(N) = |S_(e^N)|
};

/// Samples at increasing horizons. The verdict is qualified by those horizons.
DichotomyReport dichotomy_report(const std::vector<SemigroupSample>& samples);

}  // namespace divergia::khintchine
