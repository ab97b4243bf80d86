#include "mfl/simd/kernels.hpp"

#include <cmath>

namespace mfl::simd {
namespace {

constexpr std::size_t kLanes = 4;

struct Lane {
    double s = 0.0;
    double c = 0.0;

    void add(double x) noexcept
    {
        const double t = s + x;
        if (std::fabs(s) >= std::fabs(x))
            c += (s - t) + x;
        else
            c += (x - t) + s;
        s = t;
    }
};

double combine(const Lane (&lanes)[kLanes]) noexcept
{
    Lane acc;
    for (const Lane& l : lanes) acc.add(l.s);
    for (const Lane& l : lanes) acc.add(l.c);
    return acc.s + acc.c;
}

double int_power(double x, int k) noexcept
{
    double r = 1.0;
    double b = x;
    while (k != 0) {
        if (k & 1) r *= b;
        b *= b;
        k >>= 1;
    }
    return r;
}

void abs_increments_scalar(const double* v, std::size_t n, std::size_t lag, double* out)
{
    if (lag >= n) return;
    for (std::size_t i = 0; i + lag < n; ++i) out[i] = std::fabs(v[i + lag] - v[i]);
}

double sum_scalar(const double* x, std::size_t n)
{
    Lane lanes[kLanes];
    for (std::size_t i = 0; i < n; ++i) lanes[i % kLanes].add(x[i]);
    return combine(lanes);
}

double sum_int_power_scalar(const double* x, std::size_t n, int k)
{
    Lane lanes[kLanes];
    for (std::size_t i = 0; i < n; ++i) lanes[i % kLanes].add(int_power(x[i], k));
    return combine(lanes);
}

void euler_maruyama_step_scalar(double* v, const double* dw, std::size_t n, double t0, double dt, double sigma)
{
    for (std::size_t i = 0; i < n; ++i) {
        const double x = v[i];
        v[i] = (x + (-x / t0) * dt) + (x * sigma) * dw[i];
    }
}

}  // namespace

const KernelTable& scalar_kernels() noexcept
{
    static const KernelTable table{Isa::scalar, abs_increments_scalar, sum_scalar, sum_int_power_scalar,
                                   euler_maruyama_step_scalar};
    return table;
}

}  // namespace mfl::simd
