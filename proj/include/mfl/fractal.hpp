#pragma once

// Cantor sets generated by affine iterated function systems on [0, 1], their
// staircase (Cantor) functions and fractal-dimension estimates.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mfl {

/// One contraction of the IFS: x -> offset + ratio * x, carrying `weight` of the measure.
struct IfsPiece {
    double offset = 0.0;
    double ratio = 0.0;
    double weight = 0.0;
};

/// A Cantor set on [0, 1] described by its ordered, gap-separated pieces.
///
/// Invariants (checked by validate()):
///  - at least two pieces, ordered left to right;
///  - offset in [0, 1), ratio in (0, 1), weight in [0, 1];
///  - consecutive pieces separated by a gap, the last piece ending inside [0, 1];
///  - weights summing to 1 within 1e-12.
///
/// A zero weight is accepted so that degenerate measures (all mass on one
/// piece) can be expressed.
struct IfsSpec {
    std::string label;
    std::vector<IfsPiece> pieces;

    /// Throws validation error describing the first violated invariant.
    void validate() const;

    double total_ratio() const noexcept;
    bool equal_ratios() const noexcept;

    /// `count` equal pieces of ratio `ratio` separated by equal gaps, each with weight 1/count.
    static IfsSpec uniform(int count, double ratio, std::string label = {});
    /// Two pieces at the ends of [0, 1] with ratio 1/3: the middle-third Cantor set.
    static IfsSpec middle_third();
};

struct CoverInterval {
    double left = 0.0;
    double right = 0.0;
    double mass = 0.0;
};

/// Level-n approximation of the set: the images of [0, 1] under all n-fold
/// compositions of the pieces, left to right.
struct Cover {
    int level = 0;
    std::vector<CoverInterval> intervals;
};

enum class DimensionMethod { similarity, box_counting };

struct DimensionEstimate {
    double value = 0.0;
    double stderr = 0.0;
    DimensionMethod method = DimensionMethod::similarity;
    int level_min = 0;  // grid exponents used (box counting) or 0
    int level_max = 0;
};

Cover build_cover(const IfsSpec& spec, int level, std::size_t cap);
Cover build_cover(const IfsSpec& spec, int level);

/// Moran dimension: log m / log(1/a) for m equal ratios, otherwise the root of
/// sum ratio_i^s = 1 found by bisection.
DimensionEstimate similarity_dimension(const IfsSpec& spec);

/// Residual sum ratio_i^s - 1 of Moran's equation.
double moran_residual(const IfsSpec& spec, double s);

struct GridRange {
    int min_exponent = 2;
    int max_exponent = 8;
};

/// Default grid exponents for a cover of the given level: 2 .. min(level - 2, 16).
GridRange default_grid(int level);

/// Number of grid cells [j 2^-k, (j+1) 2^-k) meeting the cover.
std::size_t box_count(const Cover& cover, int exponent);
std::size_t box_count(std::span<const double> points, int exponent);

/// OLS slope of log N(eps) against log(1/eps) over eps = 2^-k.
/// Counts that are identical at every scale yield slope 0 (a zero-dimensional
/// set); an empty input is a numeric failure.
DimensionEstimate box_counting_dimension(const Cover& cover, GridRange grid);
DimensionEstimate box_counting_dimension(std::span<const double> points, GridRange grid);

inline constexpr double default_staircase_tol = 1e-12;
inline constexpr int staircase_depth_cap = 64;

/// Cumulative IFS measure of [0, x]: the Cantor function of the set described by `spec`.
/// Exact on gaps and at piece endpoints; elsewhere the descent stops once the
/// unresolved mass falls below `tol` (or after 64 levels) and the midpoint of
/// the remaining mass range is returned.
double staircase_eval(const IfsSpec& spec, double x, double tol = default_staircase_tol);

/// Where a point of [0, 1] falls relative to the set.
struct GapLocation {
    bool in_gap = false;
    int level = 0;          // 1 for the gaps of [0, 1] itself
    double left = 0.0;      // gap endpoints (absolute coordinates)
    double right = 0.0;
    double staircase = 0.0; // constant value of the Cantor function on the gap
};

/// Descends the IFS until `x` lands in a gap (in_gap = true) or the depth cap
/// is reached (in_gap = false).
GapLocation locate_gap(const IfsSpec& spec, double x, int depth_cap = staircase_depth_cap);

}  // namespace mfl
