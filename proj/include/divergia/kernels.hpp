#pragma once

// Integer-window kernels used by the sumset construction. Each has a scalar
// and an AVX2 version; the dispatching entry points pick AVX2 when the CPU
// supports it and DIVERGIA_FORCE_SCALAR is unset.

#include <cstddef>
#include <cstdint>
#include <string>

namespace divergia::kernels {

enum class Isa { Scalar, Avx2 };

bool cpu_has_avx2();
Isa active_isa();
std::string to_string(Isa isa);

/// counts[i] += src[i] for i < n (src holds 0/1 bytes).
void accumulate_shifted(std::uint16_t* counts, const std::uint8_t* src, std::size_t n);
/// dst[i] = max(dst[i], src[i] << shift), shift < 16.
void scale_max_into(std::uint32_t* dst, const std::uint16_t* src, unsigned shift, std::size_t n);
/// #{i < n : v[i] >= threshold}
std::size_t count_at_least(const std::uint32_t* v, std::size_t n, std::uint32_t threshold);
/// popcount(a & b) over `words` 64-bit words.
std::size_t and_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t words);

namespace scalar {
void accumulate_shifted(std::uint16_t* counts, const std::uint8_t* src, std::size_t n);
void scale_max_into(std::uint32_t* dst, const std::uint16_t* src, unsigned shift, std::size_t n);
std::size_t count_at_least(const std::uint32_t* v, std::size_t n, std::uint32_t threshold);
std::size_t and_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t words);
}  // namespace scalar

namespace avx2 {
void accumulate_shifted(std::uint16_t* counts, const std::uint8_t* src, std::size_t n);
void scale_max_into(std::uint32_t* dst, const std::uint16_t* src, unsigned shift, std::size_t n);
std::size_t count_at_least(const std::uint32_t* v, std::size_t n, std::uint32_t threshold);
std::size_t and_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t words);
}  // namespace avx2

}  // namespace divergia::kernels
