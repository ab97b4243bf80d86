#pragma once

// Structure functions of velocity increments, log-log scaling fits, and the
// Legendre transform pair between scaling exponents xi(q) and the spectrum D(h).

#include "mfl/cascade.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace mfl {

/// S_q(tau) = mean |v(t + tau) - v(t)|^q on a (q, tau) grid.
/// Cells are stored row-major by q; a cell with count 0 is empty.
struct StructureFunctionTable {
    std::vector<double> q;
    std::vector<double> tau;
    std::vector<std::size_t> lag;  // sample lag used for each tau
    std::vector<double> S;
    std::vector<std::size_t> count;

    std::size_t index(std::size_t qi, std::size_t ti) const noexcept { return qi * tau.size() + ti; }
    double at(std::size_t qi, std::size_t ti) const noexcept { return S[index(qi, ti)]; }
    std::size_t count_at(std::size_t qi, std::size_t ti) const noexcept { return count[index(qi, ti)]; }
};

/// Each tau is rounded to the nearest whole number of mean sample spacings
/// (at least one). q must be >= 0; integer q up to 16 take the vectorized
/// power-sum path. Cells are independent and may be computed on `threads`
/// threads without changing any bit of the result.
StructureFunctionTable structure_functions(const VelocitySeries& series, std::span<const double> q_grid,
                                           std::span<const double> tau_grid, unsigned threads = 1);

/// Same estimator over several records with a common spacing; increment pairs
/// never straddle two records.
StructureFunctionTable structure_functions(std::span<const VelocitySeries> segments, std::span<const double> q_grid,
                                           std::span<const double> tau_grid, unsigned threads = 1);

/// tau = spacing * 2^k for k = 0, 1, ... up to max_tau (default: half the record).
std::vector<double> dyadic_tau_grid(const VelocitySeries& series, double max_tau = 0.0);

struct FitRange {
    double tau_min = 0.0;
    double tau_max = 0.0;
};

/// [4 * spacing, span / 8].
FitRange default_fit_range(const VelocitySeries& series);

struct ExponentCurve {
    std::vector<double> q;
    std::vector<double> xi;
};

struct ScalingFit {
    std::vector<double> q;
    std::vector<double> xi;      // NaN where the fit failed
    std::vector<double> stderr;
    std::vector<double> r2;
    std::vector<std::size_t> points;
    std::vector<bool> ok;
    FitRange range;

    /// Exponent at grid value q; throws numeric error when that fit failed.
    double xi_at(double q) const;
    double stderr_at(double q) const;
    /// Successful fits only.
    ExponentCurve curve() const;
};

/// Per q, OLS slope of log S_q against log tau over the lags inside `range`
/// with nonempty, positive cells. Fewer than 4 usable lags marks that q as
/// failed; throws numeric error only when every q fails.
ScalingFit fit_exponents(const StructureFunctionTable& table, FitRange range);

struct Spectrum {
    std::vector<double> h;
    std::vector<double> D;
};

/// -8 .. 8 in steps of 0.25.
std::vector<double> default_q_grid();
/// Evenly spaced points from h_min to h_max inclusive (defaults 0 .. 1.5).
std::vector<double> h_grid(double h_min = 0.0, double h_max = 1.5, std::size_t points = 301);

/// xi(q) = min over the h grid of q h + 1 - D(h). With `refine`, the minimum
/// is polished by the vertex of the parabola through the grid minimum and its
/// two neighbours when that parabola is convex.
ExponentCurve legendre_xi_from_D(const Spectrum& spectrum, std::span<const double> q_grid, bool refine = true);

inline constexpr double default_spectrum_floor = -10.0;

/// D(h) = min over the q samples of q h + 1 - xi(q), clipped below at `floor`.
Spectrum legendre_D_from_xi(const ExponentCurve& xi, std::span<const double> h_values,
                            double floor = default_spectrum_floor, bool refine = true);

struct ConcavityViolation {
    std::size_t index = 0;
    double q = 0.0;
    double second_difference = 0.0;
    double tolerance = 0.0;
};

struct ConcavityReport {
    bool concave = true;
    bool strictly_concave = true;
    std::vector<double> second_differences;  // at interior points, twice the chord excess
    std::vector<ConcavityViolation> violations;
};

/// Second differences (chord form, valid for uneven q spacing) must not exceed
/// twice the largest stderr of the three points involved.
ConcavityReport concavity_report(const ExponentCurve& curve, std::span<const double> stderr = {});
ConcavityReport concavity_report(const ScalingFit& fit);

/// S4 / S2^2 at each lag of the table; requires q = 2 and q = 4 in the grid.
std::vector<double> flatness_curve(const StructureFunctionTable& table);

}  // namespace mfl
