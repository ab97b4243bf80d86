#include "mfl/stats.hpp"

#include "mfl/error.hpp"
#include "mfl/simd/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <vector>

namespace mfl {

std::size_t resource_cap()
{
    constexpr std::size_t fallback = std::size_t{1} << 24;
    if (const char* env = std::getenv("MFL_MAX_CELLS")) {
        char* end = nullptr;
        const unsigned long long value = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0' && value > 0) return static_cast<std::size_t>(value);
    }
    return fallback;
}

void NeumaierSum::add(double x) noexcept
{
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x))
        comp_ += (sum_ - t) + x;
    else
        comp_ += (x - t) + sum_;
    sum_ = t;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y)
{
    require(x.size() == y.size(), ErrorKind::domain, "fit_line: x and y differ in length");
    const std::size_t n = x.size();
    require(n >= 2, ErrorKind::numeric, "fit_line: need at least two points");

    NeumaierSum sx, sy;
    for (std::size_t i = 0; i < n; ++i) {
        sx.add(x[i]);
        sy.add(y[i]);
    }
    const double mx = sx.value() / static_cast<double>(n);
    const double my = sy.value() / static_cast<double>(n);

    NeumaierSum sxx, sxy, syy;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx.add(dx * dx);
        sxy.add(dx * dy);
        syy.add(dy * dy);
    }
    require(sxx.value() > 0.0, ErrorKind::numeric, "fit_line: all x values are equal");

    LineFit fit;
    fit.points = n;
    fit.slope = sxy.value() / sxx.value();
    fit.intercept = my - fit.slope * mx;

    NeumaierSum ssr;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ssr.add(r * r);
    }
    const double residual = ssr.value();
    fit.slope_stderr = n > 2 ? std::sqrt(residual / static_cast<double>(n - 2) / sxx.value())
                             : std::numeric_limits<double>::quiet_NaN();
    fit.r_squared = syy.value() > 0.0 ? 1.0 - residual / syy.value() : 1.0;
    if (!std::isfinite(fit.slope) || !std::isfinite(fit.intercept))
        fail(ErrorKind::numeric, "fit_line: non-finite regression");
    return fit;
}

MeanEstimate mean_estimate(std::span<const double> values)
{
    require(!values.empty(), ErrorKind::numeric, "mean_estimate: empty sample");
    const std::size_t n = values.size();
    const double mean = simd::sum(values) / static_cast<double>(n);
    NeumaierSum ss;
    for (double v : values) ss.add((v - mean) * (v - mean));
    const double var = n > 1 ? ss.value() / static_cast<double>(n - 1) : 0.0;
    return {mean, std::sqrt(var / static_cast<double>(n)), n};
}

double flatness(std::span<const double> increments)
{
    require(!increments.empty(), ErrorKind::numeric, "flatness: empty sample");
    std::vector<double> a(increments.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::fabs(increments[i]);
    const double s2 = simd::sum_int_power(a, 2);
    const double s4 = simd::sum_int_power(a, 4);
    require(s2 > 0.0, ErrorKind::numeric, "flatness: all increments are zero");
    const double n = static_cast<double>(a.size());
    return (s4 / n) / ((s2 / n) * (s2 / n));
}

}  // namespace mfl
