#pragma once

// Synthetic intermittent velocity series: multiplicative cascades, Brownian
// motion run in cascade time, inversion-jump dynamics on a Cantor set and a
// plain Gaussian random walk as the non-intermittent control.

#include "mfl/fractal.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace mfl {

struct DeterministicWeights {
    std::vector<double> weights;
};

/// Per-family log-normal weights exp(mu + sigma Z), divided by their family sum.
struct LogNormalWeights {
    double mu = 0.0;
    double sigma = 0.3;
};

struct CascadeSpec {
    int branching = 2;
    std::variant<DeterministicWeights, LogNormalWeights> weights = DeterministicWeights{{0.5, 0.5}};
    int depth = 10;
    std::uint64_t seed = 0;

    bool deterministic() const noexcept { return std::holds_alternative<DeterministicWeights>(weights); }
    /// Number of cells at full depth; throws resource-limit error above `cap`.
    std::size_t cell_count(std::size_t cap) const;
    void validate(std::size_t cap) const;
};

struct MeasureGrid {
    int depth = 0;
    std::vector<double> masses;
};

MeasureGrid build_cascade(const CascadeSpec& spec, std::size_t cap);
MeasureGrid build_cascade(const CascadeSpec& spec);

/// zeta(q) = 1 - log_b(sum_i w_i^q): scaling exponent of the mean q-th power of cell masses.
/// Throws unsupported error for log-normal specs.
double analytic_zeta(const CascadeSpec& spec, double q);
double analytic_zeta(std::span<const double> weights, double q);

/// A sampled Lagrangian velocity signal, stored column-wise.
struct VelocitySeries {
    double v0 = 1.0;
    double tau0 = 1.0;
    std::vector<double> t;
    std::vector<double> v;
    std::string generator;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return v.size(); }
    /// Mean spacing (t_last - t_first) / (n - 1).
    double spacing() const;
    /// Throws validation error unless t is strictly increasing and all values finite.
    void validate() const;
};

inline constexpr std::size_t min_series_samples = std::size_t{1} << 10;

struct SubordinationOptions {
    /// Samples per finest cascade cell; one integral time tau0 spans
    /// branching^depth * samples_per_cell samples.
    int samples_per_cell = 1;
};

/// v(t_i) = v0 W(theta(t_i)) with theta the cumulative cascade mass (the
/// staircase of the measure) and W a Gaussian process with independent
/// increments of variance d theta. Each integral time tau0 carries its own
/// cascade (re-drawn for log-normal weights), so the record may span several
/// integral times.
VelocitySeries synthesize_subordinated(const CascadeSpec& spec, double v0, double tau0, std::size_t n_samples,
                                       std::uint64_t seed, SubordinationOptions options = {});

struct JumpOptions {
    /// Samples per relaxation time tau0.
    int steps_per_tau0 = 16;
    /// Fraction of each log-jump phi log(1/x) applied per step.
    double coupling = 0.005;
};

/// Inversion-jump dynamics on the Cantor set of `ifs`: at each step a crossing
/// point u is drawn uniformly on [0, 1]; when u lies in a gap of width x with
/// staircase value phi, v is multiplied by x^(-+phi) (fair-coin sign), i.e.
/// log v takes the step +-phi log(1/x), scaled by the coupling. log(v / v0)
/// relaxes toward 0 with time constant tau0.
VelocitySeries synthesize_inversion_jumps(const IfsSpec& ifs, double v0, double tau0, std::size_t n_steps,
                                          std::uint64_t seed, JumpOptions options = {});

/// Gaussian random walk with unit spacing and step standard deviation v0.
VelocitySeries brownian_baseline(double v0, std::size_t n_samples, std::uint64_t seed);

/// Runs `make(derived_seed, index)` for `count` members on up to `threads`
/// threads. Member i receives derive_seed(seed, i), so output order and
/// content do not depend on scheduling.
std::vector<VelocitySeries> generate_ensemble(std::size_t count, std::uint64_t seed, unsigned threads,
                                              const std::function<VelocitySeries(std::uint64_t, std::size_t)>& make);

}  // namespace mfl
