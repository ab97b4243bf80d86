#include "mfl/error.hpp"
#include "mfl/rng.hpp"
#include "mfl/simd/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <string_view>
#include <cstring>
#include <vector>

using namespace mfl;
using namespace mfl::simd;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed, double scale = 1.0)
{
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> v(n);
    for (double& x : v) x = scale * normal(rng);
    return v;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

// Straightforward long-double reference for the reductions.
long double reference_power_sum(const std::vector<double>& x, int k)
{
    long double acc = 0.0L;
    for (double v : x) acc += std::pow(static_cast<long double>(v), k);
    return acc;
}

}  // namespace

TEST_SUITE("simd")
{
    TEST_CASE("dispatch")
    {
        CHECK(isa_available(Isa::scalar));
        CHECK(isa_name(Isa::scalar) == "scalar");
        CHECK(isa_name(Isa::avx2) == "avx2");
        CHECK(isa_available(active_isa()));
        CHECK(kernels().isa == active_isa());
        CHECK(kernels(Isa::scalar).isa == Isa::scalar);
        if (!isa_available(Isa::avx2)) {
            try {
                kernels(Isa::avx2);
                FAIL("expected unsupported");
            } catch (const Error& e) {
                CHECK(e.kind() == ErrorKind::unsupported);
            }
        }
        if (const char* forced = std::getenv("MFL_SIMD"); forced && std::string_view(forced) == "scalar")
            CHECK(active_isa() == Isa::scalar);
        MESSAGE("active SIMD variant: " << isa_name(active_isa()));
    }

    TEST_CASE("scalar reference reductions are accurate")
    {
        const auto& s = scalar_kernels();
        const auto x = random_values(10007, 1);
        for (int k : {0, 1, 2, 3, 4, 7, 16}) {
            const long double ref = reference_power_sum(x, k);
            CHECK(s.sum_int_power(x.data(), x.size(), k) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-13));
        }
        CHECK(s.sum_int_power(x.data(), x.size(), 0) == static_cast<double>(x.size()));
        CHECK(s.sum(x.data(), 0) == 0.0);

        // compensation recovers what naive summation loses
        std::vector<double> hard = {1e16, 1.0, -1e16, 1.0, 1e-3, 3.0, -2.0, 1e16, -1e16};
        CHECK(s.sum(hard.data(), hard.size()) == doctest::Approx(3.001).epsilon(1e-15));
    }

#if defined(MFL_HAVE_AVX2)
    TEST_CASE("AVX2 kernels are bit-identical to the scalar reference")
    {
        if (!isa_available(Isa::avx2)) {
            MESSAGE("AVX2 not available on this CPU; equivalence not exercised");
            return;
        }
        const auto& s = scalar_kernels();
        const auto& a = avx2_kernels();

        std::vector<std::size_t> sizes;
        for (std::size_t n = 0; n <= 40; ++n) sizes.push_back(n);
        for (std::size_t n : {63u, 64u, 65u, 1000u, 4099u, 65536u + 3u}) sizes.push_back(n);

        std::uint64_t seed = 100;
        for (std::size_t n : sizes) {
            CAPTURE(n);
            const auto x = random_values(n, ++seed, 1e3);
            CHECK(same_bits(s.sum(x.data(), n), a.sum(x.data(), n)));
            for (int k = 0; k <= max_int_power; ++k) {
                CAPTURE(k);
                CHECK(same_bits(s.sum_int_power(x.data(), n, k), a.sum_int_power(x.data(), n, k)));
            }
            for (std::size_t lag : {1u, 2u, 3u, 5u, 17u}) {
                if (lag >= n) continue;
                std::vector<double> o1(n - lag), o2(n - lag);
                s.abs_increments(x.data(), n, lag, o1.data());
                a.abs_increments(x.data(), n, lag, o2.data());
                CHECK(std::memcmp(o1.data(), o2.data(), o1.size() * sizeof(double)) == 0);
            }
            auto v1 = random_values(n, ++seed);
            auto v2 = v1;
            const auto dw = random_values(n, ++seed, 0.03);
            for (int step = 0; step < 5; ++step) {
                s.euler_maruyama_step(v1.data(), dw.data(), n, 1.3, 1e-3, 0.5);
                a.euler_maruyama_step(v2.data(), dw.data(), n, 1.3, 1e-3, 0.5);
            }
            CHECK(std::memcmp(v1.data(), v2.data(), n * sizeof(double)) == 0);
        }
    }

    TEST_CASE("AVX2 equivalence survives special values")
    {
        if (!isa_available(Isa::avx2)) return;
        const auto& s = scalar_kernels();
        const auto& a = avx2_kernels();
        std::vector<double> x = {0.0, -0.0, 1e-310, -1e-310, 1e300, -1e300, 1e-20, 3.5, -2.25, 7.0, 1e308};
        CHECK(same_bits(s.sum(x.data(), x.size()), a.sum(x.data(), x.size())));
        for (int k = 0; k <= 4; ++k)
            CHECK(same_bits(s.sum_int_power(x.data(), x.size(), k), a.sum_int_power(x.data(), x.size(), k)));
        std::vector<double> v1 = {0.0, -0.0, 1.0, -1.0, 5.0}, v2 = v1;
        const std::vector<double> dw = {0.1, -0.1, 0.0, 0.2, -0.3};
        s.euler_maruyama_step(v1.data(), dw.data(), v1.size(), 1.0, 0.01, 0.5);
        a.euler_maruyama_step(v2.data(), dw.data(), v2.size(), 1.0, 0.01, 0.5);
        CHECK(std::memcmp(v1.data(), v2.data(), v1.size() * sizeof(double)) == 0);
    }
#endif

    TEST_CASE("span wrappers check their arguments")
    {
        const std::vector<double> v = {1.0, 2.0, 4.0};
        std::vector<double> out(2);
        abs_increments(v, 1, out);
        CHECK(out[0] == 1.0);
        CHECK(out[1] == 2.0);
        auto expect_domain = [](auto&& fn) {
            try {
                fn();
                FAIL("expected a domain error");
            } catch (const Error& e) {
                CHECK(e.kind() == ErrorKind::domain);
            }
        };
        expect_domain([&] { abs_increments(v, 3, out); });
        expect_domain([&] { sum_int_power(v, 17); });
        expect_domain([&] { sum_int_power(v, -1); });
        std::vector<double> state(4, 1.0);
        expect_domain([&] { euler_maruyama_step(state, v, 1.0, 0.1, 0.1); });
        CHECK(sum(v) == 7.0);
        CHECK(sum_int_power(v, 2) == 21.0);
    }
}
