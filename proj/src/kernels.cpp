#include "divergia/kernels.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>

namespace divergia::kernels {

namespace scalar {

void accumulate_shifted(std::uint16_t* counts, const std::uint8_t* src, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) counts[i] = static_cast<std::uint16_t>(counts[i] + src[i]);
}

void scale_max_into(std::uint32_t* dst, const std::uint16_t* src, unsigned shift, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = std::max(dst[i], static_cast<std::uint32_t>(src[i]) << shift);
}

std::size_t count_at_least(const std::uint32_t* v, std::size_t n, std::uint32_t threshold) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < n; ++i) c += v[i] >= threshold;
    return c;
}

std::size_t and_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < words; ++i) c += static_cast<std::size_t>(std::popcount(a[i] & b[i]));
    return c;
}

}  // namespace scalar

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

Isa active_isa() {
    static const Isa isa = [] {
        const char* force = std::getenv("DIVERGIA_FORCE_SCALAR");
        if (force && *force && std::string(force) != "0") return Isa::Scalar;
        return cpu_has_avx2() ? Isa::Avx2 : Isa::Scalar;
    }();
    return isa;
}

std::string to_string(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

void accumulate_shifted(std::uint16_t* counts, const std::uint8_t* src, std::size_t n) {
    if (active_isa() == Isa::Avx2) return avx2::accumulate_shifted(counts, src, n);
    scalar::accumulate_shifted(counts, src, n);
}

void scale_max_into(std::uint32_t* dst, const std::uint16_t* src, unsigned shift, std::size_t n) {
    if (active_isa() == Isa::Avx2) return avx2::scale_max_into(dst, src, shift, n);
    scalar::scale_max_into(dst, src, shift, n);
}

std::size_t count_at_least(const std::uint32_t* v, std::size_t n, std::uint32_t threshold) {
    if (active_isa() == Isa::Avx2) return avx2::count_at_least(v, n, threshold);
    return scalar::count_at_least(v, n, threshold);
}

std::size_t and_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
    if (active_isa() == Isa::Avx2) return avx2::and_popcount(a, b, words);
    return scalar::and_popcount(a, b, words);
}

}  // namespace divergia::kernels
