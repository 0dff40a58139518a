// Compiled with -mavx2; only reached after a runtime CPU check.
#include <immintrin.h>

#include "divergia/kernels.hpp"

namespace divergia::kernels::avx2 {

void accumulate_shifted(std::uint16_t* counts, const std::uint8_t* src, std::size_t n) {
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const __m128i bytes = _mm_loadu_si128(reinterpret_cast<const __m128i*>(src + i));
        const __m256i wide = _mm256_cvtepu8_epi16(bytes);
        __m256i* dst = reinterpret_cast<__m256i*>(counts + i);
        _mm256_storeu_si256(dst, _mm256_add_epi16(_mm256_loadu_si256(dst), wide));
    }
    scalar::accumulate_shifted(counts + i, src + i, n - i);
}

void scale_max_into(std::uint32_t* dst, const std::uint16_t* src, unsigned shift, std::size_t n) {
    const __m128i sh = _mm_cvtsi32_si128(static_cast<int>(shift));
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m128i halfs = _mm_loadu_si128(reinterpret_cast<const __m128i*>(src + i));
        const __m256i v = _mm256_sll_epi32(_mm256_cvtepu16_epi32(halfs), sh);
        __m256i* d = reinterpret_cast<__m256i*>(dst + i);
        _mm256_storeu_si256(d, _mm256_max_epu32(_mm256_loadu_si256(d), v));
    }
    scalar::scale_max_into(dst + i, src + i, shift, n - i);
}

std::size_t count_at_least(const std::uint32_t* v, std::size_t n, std::uint32_t threshold) {
    const __m256i thr = _mm256_set1_epi32(static_cast<int>(threshold));
    std::size_t c = 0;
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256i x = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(v + i));
        // x >= thr  <=>  max(x, thr) == x  (unsigned)
        const __m256i ge = _mm256_cmpeq_epi32(_mm256_max_epu32(x, thr), x);
        c += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(_mm256_movemask_ps(_mm256_castsi256_ps(ge)))));
    }
    return c + scalar::count_at_least(v + i, n - i, threshold);
}

std::size_t and_popcount(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
    // nibble lookup popcount, summed with sad
    const __m256i lut = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,
                                         0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
    const __m256i low = _mm256_set1_epi8(0x0f);
    __m256i acc = _mm256_setzero_si256();
    std::size_t i = 0;
    for (; i + 4 <= words; i += 4) {
        const __m256i x = _mm256_and_si256(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i)),
                                           _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i)));
        const __m256i lo = _mm256_shuffle_epi8(lut, _mm256_and_si256(x, low));
        const __m256i hi = _mm256_shuffle_epi8(lut, _mm256_and_si256(_mm256_srli_epi16(x, 4), low));
        acc = _mm256_add_epi64(acc, _mm256_sad_epu8(_mm256_add_epi8(lo, hi), _mm256_setzero_si256()));
    }
    alignas(32) std::uint64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
    const std::size_t c = lanes[0] + lanes[1] + lanes[2] + lanes[3];
    return c + scalar::and_popcount(a + i, b + i, words - i);
}

}  // namespace divergia::kernels::avx2
