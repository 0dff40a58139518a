#include <doctest.h>

#include <cstdlib>
#include <random>
#include <vector>

#include "divergia/kernels.hpp"

using namespace divergia::kernels;

namespace {

template <class T>
std::vector<T> random_vec(std::mt19937_64& rng, std::size_t n, std::uint64_t bound) {
    std::vector<T> v(n);
    for (auto& x : v) x = static_cast<T>(rng() % bound);
    return v;
}

}  // namespace

TEST_CASE("avx2 kernels agree with the scalar ones on ragged lengths") {
    if (!cpu_has_avx2()) {
        MESSAGE("no AVX2 on this CPU; only the scalar path is exercised");
        return;
    }
    std::mt19937_64 rng(7);
    for (std::size_t n : {0, 1, 7, 8, 15, 16, 17, 31, 33, 255, 1000, 4099}) {
        const auto src = random_vec<std::uint8_t>(rng, n, 2);
        auto c1 = random_vec<std::uint16_t>(rng, n, 60000);
        auto c2 = c1;
        scalar::accumulate_shifted(c1.data(), src.data(), n);
        avx2::accumulate_shifted(c2.data(), src.data(), n);
        CHECK(c1 == c2);

        const auto halfs = random_vec<std::uint16_t>(rng, n, 65536);
        for (unsigned sh : {0u, 1u, 5u, 15u}) {
            auto d1 = random_vec<std::uint32_t>(rng, n, 1u << 31);
            auto d2 = d1;
            scalar::scale_max_into(d1.data(), halfs.data(), sh, n);
            avx2::scale_max_into(d2.data(), halfs.data(), sh, n);
            CHECK(d1 == d2);
        }

        const auto v = random_vec<std::uint32_t>(rng, n, 0xffffffffull);
        for (std::uint32_t thr : {0u, 1u, 0x7fffffffu, 0x80000000u, 0xfffffffeu})
            CHECK(scalar::count_at_least(v.data(), n, thr) == avx2::count_at_least(v.data(), n, thr));

        const auto a = random_vec<std::uint64_t>(rng, n, ~0ull);
        const auto b = random_vec<std::uint64_t>(rng, n, ~0ull);
        CHECK(scalar::and_popcount(a.data(), b.data(), n) == avx2::and_popcount(a.data(), b.data(), n));
    }
}

TEST_CASE("scalar kernels match direct definitions") {
    std::vector<std::uint16_t> c{1, 2, 3};
    const std::vector<std::uint8_t> s{1, 0, 1};
    scalar::accumulate_shifted(c.data(), s.data(), 3);
    CHECK(c == std::vector<std::uint16_t>{2, 2, 4});

    std::vector<std::uint32_t> d{5, 5, 5};
    const std::vector<std::uint16_t> h{1, 2, 3};
    scalar::scale_max_into(d.data(), h.data(), 2, 3);
    CHECK(d == std::vector<std::uint32_t>{5, 8, 12});
    CHECK(scalar::count_at_least(d.data(), 3, 8) == 2);

    const std::uint64_t a[2] = {0xff, 0xf0f0};
    const std::uint64_t b[2] = {0x0f, 0xffff};
    CHECK(scalar::and_popcount(a, b, 2) == 4 + 8);
    if (!std::getenv("DIVERGIA_FORCE_SCALAR")) CHECK((active_isa() == Isa::Avx2) == cpu_has_avx2());
}
