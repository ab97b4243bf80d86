#include "mfl/simd/kernels.hpp"

#include "mfl/error.hpp"

#include <cstdlib>
#include <string>

namespace mfl::simd {

bool isa_available(Isa isa) noexcept
{
    switch (isa) {
    case Isa::scalar:
        return true;
    case Isa::avx2:
#if defined(MFL_HAVE_AVX2)
        return __builtin_cpu_supports("avx2");
#else
        return false;
#endif
    }
    return false;
}

std::string_view isa_name(Isa isa) noexcept
{
    switch (isa) {
    case Isa::scalar:
        return "scalar";
    case Isa::avx2:
        return "avx2";
    }
    return "unknown";
}

namespace {

Isa select_isa()
{
    if (const char* forced = std::getenv("MFL_SIMD")) {
        const std::string name(forced);
        if (name == "scalar") return Isa::scalar;
        if (name == "avx2" && isa_available(Isa::avx2)) return Isa::avx2;
    }
    return isa_available(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

}  // namespace

Isa active_isa()
{
    static const Isa isa = select_isa();
    return isa;
}

const KernelTable& kernels(Isa isa)
{
    require(isa_available(isa), ErrorKind::unsupported, "SIMD variant not available: " + std::string(isa_name(isa)));
#if defined(MFL_HAVE_AVX2)
    if (isa == Isa::avx2) return avx2_kernels();
#endif
    return scalar_kernels();
}

const KernelTable& kernels()
{
    static const KernelTable& table = kernels(active_isa());
    return table;
}

void abs_increments(std::span<const double> v, std::size_t lag, std::span<double> out)
{
    require(lag < v.size() && out.size() >= v.size() - lag, ErrorKind::domain, "abs_increments: bad lag or output size");
    kernels().abs_increments(v.data(), v.size(), lag, out.data());
}

double sum(std::span<const double> x) { return kernels().sum(x.data(), x.size()); }

double sum_int_power(std::span<const double> x, int k)
{
    require(k >= 0 && k <= max_int_power, ErrorKind::domain, "sum_int_power: exponent outside [0, 16]");
    return kernels().sum_int_power(x.data(), x.size(), k);
}

void euler_maruyama_step(std::span<double> v, std::span<const double> dw, double t0, double dt, double sigma)
{
    require(dw.size() >= v.size(), ErrorKind::domain, "euler_maruyama_step: noise buffer too short");
    kernels().euler_maruyama_step(v.data(), dw.data(), v.size(), t0, dt, sigma);
}

}  // namespace mfl::simd
