#include "mfl/fractal.hpp"

#include "mfl/error.hpp"
#include "mfl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mfl {

namespace {

std::string piece_name(std::size_t i) { return "piece " + std::to_string(i); }

}  // namespace

void IfsSpec::validate() const
{
    require(pieces.size() >= 2, ErrorKind::validation, "IFS needs at least 2 pieces");
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        const IfsPiece& p = pieces[i];
        require(std::isfinite(p.offset) && p.offset >= 0.0 && p.offset < 1.0, ErrorKind::validation,
                piece_name(i) + ": offset must lie in [0, 1)");
        require(std::isfinite(p.ratio) && p.ratio > 0.0 && p.ratio < 1.0, ErrorKind::validation,
                piece_name(i) + ": ratio must lie in (0, 1)");
        require(std::isfinite(p.weight) && p.weight >= 0.0 && p.weight <= 1.0, ErrorKind::validation,
                piece_name(i) + ": weight must lie in [0, 1]");
        if (i + 1 < pieces.size()) {
            require(p.offset + p.ratio < pieces[i + 1].offset, ErrorKind::validation,
                    piece_name(i) + " overlaps or touches " + piece_name(i + 1) + " (no gap between them)");
        }
        weight_sum += p.weight;
    }
    require(pieces.back().offset + pieces.back().ratio <= 1.0 + 1e-12, ErrorKind::validation,
            "last piece extends beyond 1");
    require(std::fabs(weight_sum - 1.0) <= 1e-12, ErrorKind::validation, "weights must sum to 1");
}

double IfsSpec::total_ratio() const noexcept
{
    double total = 0.0;
    for (const auto& p : pieces) total += p.ratio;
    return total;
}

bool IfsSpec::equal_ratios() const noexcept
{
    return std::all_of(pieces.begin(), pieces.end(), [&](const IfsPiece& p) { return p.ratio == pieces.front().ratio; });
}

IfsSpec IfsSpec::uniform(int count, double ratio, std::string label)
{
    require(count >= 2, ErrorKind::validation, "IFS needs at least 2 pieces");
    require(ratio > 0.0 && ratio < 1.0, ErrorKind::validation, "ratio must lie in (0, 1)");
    IfsSpec spec;
    if (label.empty()) {
        std::ostringstream os;
        os << count << "-piece ratio " << ratio;
        label = os.str();
    }
    spec.label = std::move(label);
    const double gap = (1.0 - count * ratio) / (count - 1);
    const double weight = 1.0 / count;
    for (int k = 0; k < count; ++k) {
        const double offset = (k + 1 == count) ? 1.0 - ratio : k * gap + k * ratio;
        spec.pieces.push_back({offset, ratio, weight});
    }
    spec.validate();
    return spec;
}

IfsSpec IfsSpec::middle_third() { return uniform(2, 1.0 / 3.0, "middle-third"); }

Cover build_cover(const IfsSpec& spec, int level) { return build_cover(spec, level, resource_cap()); }

Cover build_cover(const IfsSpec& spec, int level, std::size_t cap)
{
    spec.validate();
    require(level >= 0, ErrorKind::domain, "cover level must be >= 0");
    std::size_t count = 1;
    for (int i = 0; i < level; ++i) {
        require(count <= cap / spec.pieces.size(), ErrorKind::resource_limit,
                "cover at level " + std::to_string(level) + " exceeds the interval cap of " + std::to_string(cap));
        count *= spec.pieces.size();
    }

    Cover cover;
    cover.level = level;
    cover.intervals.reserve(count);
    cover.intervals.push_back({0.0, 1.0, 1.0});
    std::vector<CoverInterval> next;
    next.reserve(count);
    for (int n = 0; n < level; ++n) {
        next.clear();
        for (const CoverInterval& parent : cover.intervals) {
            const double width = parent.right - parent.left;
            for (const IfsPiece& p : spec.pieces) {
                const double left = parent.left + width * p.offset;
                next.push_back({left, left + width * p.ratio, parent.mass * p.weight});
            }
        }
        cover.intervals.swap(next);
    }
    return cover;
}

double moran_residual(const IfsSpec& spec, double s)
{
    double total = 0.0;
    for (const auto& p : spec.pieces) total += std::pow(p.ratio, s);
    return total - 1.0;
}

DimensionEstimate similarity_dimension(const IfsSpec& spec)
{
    spec.validate();
    DimensionEstimate est;
    est.method = DimensionMethod::similarity;
    if (spec.equal_ratios()) {
        est.value = std::log(static_cast<double>(spec.pieces.size())) / std::log(1.0 / spec.pieces.front().ratio);
        return est;
    }
    // sum r_i^s - 1 decreases in s; positive at 0 and negative at 1 since the pieces leave a gap.
    double lo = 0.0;
    double hi = 1.0;
    for (int iter = 0; iter < 200 && hi - lo > 1e-16; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (moran_residual(spec, mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    est.value = 0.5 * (lo + hi);
    require(std::fabs(moran_residual(spec, est.value)) < 1e-12, ErrorKind::numeric,
            "Moran equation did not converge");
    return est;
}

GridRange default_grid(int level) { return {2, std::min(level - 2, 16)}; }

std::size_t box_count(const Cover& cover, int exponent)
{
    const double cells = std::ldexp(1.0, exponent);
    const long long last_cell = static_cast<long long>(cells) - 1;
    std::size_t count = 0;
    long long last = -1;
    for (const CoverInterval& iv : cover.intervals) {
        long long a = static_cast<long long>(std::floor(iv.left * cells));
        const long long b = std::min(static_cast<long long>(std::floor(iv.right * cells)), last_cell);
        a = std::max(a, last + 1);
        if (b >= a) {
            count += static_cast<std::size_t>(b - a + 1);
            last = b;
        }
    }
    return count;
}

std::size_t box_count(std::span<const double> points, int exponent)
{
    const double cells = std::ldexp(1.0, exponent);
    const long long last_cell = static_cast<long long>(cells) - 1;
    std::vector<long long> ids;
    ids.reserve(points.size());
    for (double x : points) ids.push_back(std::clamp(static_cast<long long>(std::floor(x * cells)), 0LL, last_cell));
    std::sort(ids.begin(), ids.end());
    return static_cast<std::size_t>(std::unique(ids.begin(), ids.end()) - ids.begin());
}

namespace {

template <class Counter>
DimensionEstimate dimension_from_counts(GridRange grid, Counter&& counter)
{
    require(grid.max_exponent - grid.min_exponent + 1 >= 4, ErrorKind::domain,
            "box counting needs at least 4 grid sizes");
    require(grid.min_exponent >= 0 && grid.max_exponent <= 52, ErrorKind::domain,
            "grid exponents must lie in [0, 52]");
    std::vector<double> x;
    std::vector<double> y;
    std::vector<std::size_t> counts;
    for (int k = grid.min_exponent; k <= grid.max_exponent; ++k) {
        const std::size_t n = counter(k);
        require(n > 0, ErrorKind::numeric, "box counting on an empty set");
        counts.push_back(n);
        x.push_back(k * std::numbers::ln2);
        y.push_back(std::log(static_cast<double>(n)));
    }
    DimensionEstimate est;
    est.method = DimensionMethod::box_counting;
    est.level_min = grid.min_exponent;
    est.level_max = grid.max_exponent;
    if (std::all_of(counts.begin(), counts.end(), [&](std::size_t c) { return c == counts.front(); }))
        return est;  // zero-dimensional: the count never grows
    const LineFit fit = fit_line(x, y);
    est.value = fit.slope;
    est.stderr = fit.slope_stderr;
    return est;
}

}  // namespace

DimensionEstimate box_counting_dimension(const Cover& cover, GridRange grid)
{
    require(!cover.intervals.empty(), ErrorKind::numeric, "box counting on an empty cover");
    double widest = 0.0;
    for (const auto& iv : cover.intervals) widest = std::max(widest, iv.right - iv.left);
    require(widest <= std::ldexp(1.0, -grid.max_exponent), ErrorKind::domain,
            "cover level " + std::to_string(cover.level) + " is too coarse for grid 2^-" +
                std::to_string(grid.max_exponent));
    return dimension_from_counts(grid, [&](int k) { return box_count(cover, k); });
}

DimensionEstimate box_counting_dimension(std::span<const double> points, GridRange grid)
{
    require(!points.empty(), ErrorKind::numeric, "box counting on an empty point sample");
    for (double x : points)
        require(std::isfinite(x) && x >= 0.0 && x <= 1.0, ErrorKind::domain, "sample points must lie in [0, 1]");
    return dimension_from_counts(grid, [&](int k) { return box_count(points, k); });
}

double staircase_eval(const IfsSpec& spec, double x, double tol)
{
    require(std::isfinite(x) && x >= 0.0 && x <= 1.0, ErrorKind::domain, "staircase argument must lie in [0, 1]");
    require(tol > 0.0, ErrorKind::domain, "staircase tolerance must be positive");

    double lo = 0.0;
    double width = 1.0;
    double acc = 0.0;
    double mass = 1.0;
    for (int depth = 0; depth < staircase_depth_cap && mass >= tol; ++depth) {
        const double y = (x - lo) / width;
        double left_mass = 0.0;
        bool descended = false;
        for (const IfsPiece& p : spec.pieces) {
            const double end = p.offset + p.ratio;
            if (y <= p.offset) return acc + mass * left_mass;  // gap to the left, or left endpoint
            if (y == end) return acc + mass * (left_mass + p.weight);
            if (y < end) {
                acc += mass * left_mass;
                lo += width * p.offset;
                width *= p.ratio;
                mass *= p.weight;
                descended = true;
                break;
            }
            left_mass += p.weight;
        }
        if (!descended) return acc + mass * left_mass;  // right of every piece
    }
    return acc + 0.5 * mass;
}

GapLocation locate_gap(const IfsSpec& spec, double x, int depth_cap)
{
    require(std::isfinite(x) && x >= 0.0 && x <= 1.0, ErrorKind::domain, "locate_gap argument must lie in [0, 1]");
    double lo = 0.0;
    double width = 1.0;
    double acc = 0.0;
    double mass = 1.0;
    GapLocation loc;
    for (int depth = 0; depth < depth_cap; ++depth) {
        const double y = (x - lo) / width;
        double left_mass = 0.0;
        double prev_end = 0.0;
        bool descended = false;
        for (const IfsPiece& p : spec.pieces) {
            const double end = p.offset + p.ratio;
            if (y < p.offset) {
                loc = {true, depth + 1, lo + width * prev_end, lo + width * p.offset, acc + mass * left_mass};
                return loc.right > loc.left ? loc : GapLocation{};
            }
            if (y <= end) {
                acc += mass * left_mass;
                lo += width * p.offset;
                width *= p.ratio;
                mass *= p.weight;
                descended = true;
                break;
            }
            left_mass += p.weight;
            prev_end = end;
        }
        if (!descended) {
            loc = {true, depth + 1, lo + width * prev_end, lo + width, acc + mass * left_mass};
            return loc.right > loc.left ? loc : GapLocation{};
        }
    }
    return GapLocation{};
}

}  // namespace mfl
