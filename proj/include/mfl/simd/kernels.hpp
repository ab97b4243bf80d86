#pragma once

// Data-parallel inner loops shared by the analysis and simulation modules.
//
// Every kernel has a scalar reference implementation and, where the CPU
// supports it, a vector implementation selected at runtime. All variants use
// the same reduction tree (four interleaved Neumaier accumulators, element i
// feeding lane i % 4, lanes combined in order), so results are bit-identical
// across variants.

#include <cstddef>
#include <span>
#include <string_view>

namespace mfl::simd {

enum class Isa { scalar, avx2 };

struct KernelTable {
    Isa isa;
    // out[i] = |v[i + lag] - v[i]| for i in [0, n - lag)
    void (*abs_increments)(const double* v, std::size_t n, std::size_t lag, double* out);
    double (*sum)(const double* x, std::size_t n);
    // sum of x[i]^k, k in [0, 16], by binary powering
    double (*sum_int_power)(const double* x, std::size_t n, int k);
    // v[i] += (-v[i] / t0) * dt + v[i] * sigma * dw[i]
    void (*euler_maruyama_step)(double* v, const double* dw, std::size_t n, double t0, double dt, double sigma);
};

inline constexpr int max_int_power = 16;

bool isa_available(Isa isa) noexcept;
std::string_view isa_name(Isa isa) noexcept;

/// Best available ISA, unless MFL_SIMD=scalar|avx2 forces a choice.
Isa active_isa();

const KernelTable& kernels();
/// Table for a specific ISA; throws unsupported error when the CPU lacks it.
const KernelTable& kernels(Isa isa);

const KernelTable& scalar_kernels() noexcept;
#if defined(MFL_HAVE_AVX2)
const KernelTable& avx2_kernels() noexcept;
#endif

void abs_increments(std::span<const double> v, std::size_t lag, std::span<double> out);
double sum(std::span<const double> x);
double sum_int_power(std::span<const double> x, int k);
void euler_maruyama_step(std::span<double> v, std::span<const double> dw, double t0, double dt, double sigma);

}  // namespace mfl::simd
