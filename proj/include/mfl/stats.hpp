#pragma once

#include <cstddef>
#include <span>

namespace mfl {

/// Compensated (Neumaier) accumulator.
class NeumaierSum {
public:
    void add(double x) noexcept;
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;  // NaN when only two points are available
    double r_squared = 1.0;
    std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope * x.
/// Throws numeric error for fewer than two points or constant x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Mean and standard error of the mean of a sample, summed with compensation.
struct MeanEstimate {
    double mean = 0.0;
    double stderr = 0.0;
    std::size_t n = 0;
};

MeanEstimate mean_estimate(std::span<const double> values);

/// Flatness S4 / S2^2 of a set of increments (3 for Gaussian increments).
double flatness(std::span<const double> increments);

}  // namespace mfl
