#include "mfl/analysis.hpp"

#include "mfl/error.hpp"
#include "mfl/simd/kernels.hpp"
#include "mfl/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

namespace mfl {

namespace {

bool small_integer(double q) { return q >= 0.0 && q <= simd::max_int_power && q == std::floor(q); }

void check_grids(std::span<const double> q_grid, std::span<const double> tau_grid)
{
    require(!q_grid.empty() && !tau_grid.empty(), ErrorKind::domain, "structure functions need q and tau grids");
    for (double q : q_grid)
        require(std::isfinite(q) && q >= 0.0, ErrorKind::domain, "structure functions need q >= 0");
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
        require(std::isfinite(tau_grid[i]) && tau_grid[i] > 0.0, ErrorKind::domain, "lags must be positive");
        if (i > 0)
            require(tau_grid[i] > tau_grid[i - 1], ErrorKind::domain, "lags must be strictly increasing");
    }
}

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn)
{
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
        std::vector<std::jthread> pool;
        for (unsigned k = 1; k < threads; ++k) pool.emplace_back(worker);
        worker();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

StructureFunctionTable structure_functions(const VelocitySeries& series, std::span<const double> q_grid,
                                           std::span<const double> tau_grid, unsigned threads)
{
    return structure_functions(std::span<const VelocitySeries>(&series, 1), q_grid, tau_grid, threads);
}

StructureFunctionTable structure_functions(std::span<const VelocitySeries> segments, std::span<const double> q_grid,
                                           std::span<const double> tau_grid, unsigned threads)
{
    check_grids(q_grid, tau_grid);
    require(!segments.empty(), ErrorKind::domain, "structure functions need at least one record");
    for (const auto& seg : segments) {
        seg.validate();
        require(seg.size() >= 2, ErrorKind::domain, "each record needs at least two samples");
    }
    const double dt = segments.front().spacing();
    for (const auto& seg : segments)
        require(std::fabs(seg.spacing() - dt) <= 1e-9 * dt, ErrorKind::domain, "records differ in sample spacing");

    StructureFunctionTable table;
    table.q.assign(q_grid.begin(), q_grid.end());
    table.tau.assign(tau_grid.begin(), tau_grid.end());
    table.lag.resize(tau_grid.size());
    table.S.assign(q_grid.size() * tau_grid.size(), 0.0);
    table.count.assign(table.S.size(), 0);
    for (std::size_t ti = 0; ti < tau_grid.size(); ++ti)
        table.lag[ti] = static_cast<std::size_t>(std::max(1.0, std::round(tau_grid[ti] / dt)));

    parallel_for(tau_grid.size(), threads, [&](std::size_t ti) {
        const std::size_t lag = table.lag[ti];
        std::size_t total = 0;
        for (const auto& seg : segments)
            if (lag < seg.size()) total += seg.size() - lag;
        if (total == 0) return;  // lag longer than every record: empty cell

        std::vector<double> increments(total);
        std::size_t offset = 0;
        for (const auto& seg : segments) {
            if (lag >= seg.size()) continue;
            const std::size_t m = seg.size() - lag;
            simd::abs_increments(seg.v, lag, std::span<double>(increments.data() + offset, m));
            offset += m;
        }
        std::vector<double> powered;
        for (std::size_t qi = 0; qi < q_grid.size(); ++qi) {
            const double q = q_grid[qi];
            double sum = 0.0;
            if (small_integer(q)) {
                sum = simd::sum_int_power(increments, static_cast<int>(q));
            } else {
                powered.resize(total);
                for (std::size_t i = 0; i < total; ++i) powered[i] = std::pow(increments[i], q);
                sum = simd::sum(powered);
            }
            table.S[table.index(qi, ti)] = sum / static_cast<double>(total);
            table.count[table.index(qi, ti)] = total;
        }
    });
    return table;
}

std::vector<double> dyadic_tau_grid(const VelocitySeries& series, double max_tau)
{
    const double dt = series.spacing();
    const double span = series.t.back() - series.t.front();
    if (max_tau <= 0.0) max_tau = 0.5 * span;
    std::vector<double> grid;
    for (double lag = 1.0; lag * dt <= max_tau * (1.0 + 1e-12); lag *= 2.0) grid.push_back(lag * dt);
    require(!grid.empty(), ErrorKind::domain, "maximum lag is shorter than the sample spacing");
    return grid;
}

FitRange default_fit_range(const VelocitySeries& series)
{
    const double dt = series.spacing();
    return {4.0 * dt, (series.t.back() - series.t.front()) / 8.0};
}

double ScalingFit::xi_at(double qv) const
{
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] != qv) continue;
        require(ok[i], ErrorKind::numeric, "no scaling fit for q = " + std::to_string(qv));
        return xi[i];
    }
    fail(ErrorKind::domain, "q = " + std::to_string(qv) + " is not on the fit grid");
}

double ScalingFit::stderr_at(double qv) const
{
    for (std::size_t i = 0; i < q.size(); ++i)
        if (q[i] == qv && ok[i]) return stderr[i];
    fail(ErrorKind::domain, "no scaling fit for q = " + std::to_string(qv));
}

ExponentCurve ScalingFit::curve() const
{
    ExponentCurve c;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (!ok[i]) continue;
        c.q.push_back(q[i]);
        c.xi.push_back(xi[i]);
    }
    return c;
}

ScalingFit fit_exponents(const StructureFunctionTable& table, FitRange range)
{
    require(range.tau_min > 0.0 && range.tau_max >= range.tau_min, ErrorKind::domain, "invalid fit range");
    ScalingFit fit;
    fit.range = range;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double slack = 1e-9;
    bool any = false;
    for (std::size_t qi = 0; qi < table.q.size(); ++qi) {
        std::vector<double> x;
        std::vector<double> y;
        for (std::size_t ti = 0; ti < table.tau.size(); ++ti) {
            const double tau = table.tau[ti];
            if (tau < range.tau_min * (1.0 - slack) || tau > range.tau_max * (1.0 + slack)) continue;
            const double s = table.at(qi, ti);
            if (table.count_at(qi, ti) == 0 || !(s > 0.0) || !std::isfinite(s)) continue;
            x.push_back(std::log(tau));
            y.push_back(std::log(s));
        }
        fit.q.push_back(table.q[qi]);
        fit.points.push_back(x.size());
        if (x.size() < 4) {
            fit.xi.push_back(nan);
            fit.stderr.push_back(nan);
            fit.r2.push_back(nan);
            fit.ok.push_back(false);
            continue;
        }
        const LineFit line = fit_line(x, y);
        fit.xi.push_back(line.slope);
        fit.stderr.push_back(line.slope_stderr);
        fit.r2.push_back(line.r_squared);
        fit.ok.push_back(true);
        any = true;
    }
    require(any, ErrorKind::numeric, "no q has 4 usable lags inside the fit range");
    return fit;
}

std::vector<double> default_q_grid()
{
    std::vector<double> grid;
    for (int k = -32; k <= 32; ++k) grid.push_back(0.25 * k);
    return grid;
}

std::vector<double> h_grid(double h_min, double h_max, std::size_t points)
{
    require(points >= 2 && h_max > h_min, ErrorKind::domain, "h grid needs h_max > h_min and at least 2 points");
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i)
        grid[i] = h_min + (h_max - h_min) * static_cast<double>(i) / static_cast<double>(points - 1);
    return grid;
}

namespace {

// min_i (slope * x_i + 1 - y_i), optionally polished by a local parabola.
double conjugate_min(std::span<const double> x, std::span<const double> y, double slope, bool refine)
{
    std::size_t best = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double g = slope * x[i] + 1.0 - y[i];
        if (g < best_value) {
            best_value = g;
            best = i;
        }
    }
    if (!refine || best == 0 || best + 1 >= x.size()) return best_value;

    const double x0 = x[best - 1], x1 = x[best], x2 = x[best + 1];
    const double g0 = slope * x0 + 1.0 - y[best - 1];
    const double g1 = best_value;
    const double g2 = slope * x2 + 1.0 - y[best + 1];
    const double d01 = (g1 - g0) / (x1 - x0);
    const double d12 = (g2 - g1) / (x2 - x1);
    const double curvature = (d12 - d01) / (x2 - x0);
    if (!(curvature > 0.0)) return best_value;
    const double vertex = 0.5 * (x0 + x1) - d01 / (2.0 * curvature);
    if (vertex < x0 || vertex > x2) return best_value;
    const double value = g0 + d01 * (vertex - x0) + curvature * (vertex - x0) * (vertex - x1);
    return std::min(best_value, value);
}

void require_increasing(std::span<const double> grid, const char* what)
{
    for (std::size_t i = 0; i < grid.size(); ++i) {
        require(std::isfinite(grid[i]), ErrorKind::domain, std::string(what) + " grid has a non-finite value");
        if (i > 0) require(grid[i] > grid[i - 1], ErrorKind::domain, std::string(what) + " grid must be increasing");
    }
}

}  // namespace

ExponentCurve legendre_xi_from_D(const Spectrum& spectrum, std::span<const double> q_grid, bool refine)
{
    require(!spectrum.h.empty() && spectrum.h.size() == spectrum.D.size(), ErrorKind::domain,
            "Legendre transform of an empty spectrum");
    require_increasing(spectrum.h, "h");
    ExponentCurve out;
    out.q.assign(q_grid.begin(), q_grid.end());
    for (double q : q_grid) out.xi.push_back(conjugate_min(spectrum.h, spectrum.D, q, refine));
    return out;
}

Spectrum legendre_D_from_xi(const ExponentCurve& xi, std::span<const double> h_values, double floor, bool refine)
{
    require(!xi.q.empty() && xi.q.size() == xi.xi.size(), ErrorKind::domain, "Legendre transform of an empty fit");
    require_increasing(xi.q, "q");
    Spectrum out;
    out.h.assign(h_values.begin(), h_values.end());
    for (double h : h_values) out.D.push_back(std::max(floor, conjugate_min(xi.q, xi.xi, h, refine)));
    return out;
}

ConcavityReport concavity_report(const ExponentCurve& curve, std::span<const double> stderr)
{
    require(curve.q.size() >= 3 && curve.q.size() == curve.xi.size(), ErrorKind::domain,
            "concavity check needs at least 3 points");
    require(stderr.empty() || stderr.size() == curve.q.size(), ErrorKind::domain, "stderr length mismatch");
    require_increasing(curve.q, "q");
    ConcavityReport report;
    const auto& q = curve.q;
    const auto& xi = curve.xi;
    for (std::size_t i = 1; i + 1 < q.size(); ++i) {
        const double chord = ((q[i + 1] - q[i]) * xi[i - 1] + (q[i] - q[i - 1]) * xi[i + 1]) / (q[i + 1] - q[i - 1]);
        const double d2 = 2.0 * (chord - xi[i]);
        double tol = 1e-12;
        if (!stderr.empty()) tol += 2.0 * std::max({stderr[i - 1], stderr[i], stderr[i + 1]});
        report.second_differences.push_back(d2);
        if (d2 > tol) report.violations.push_back({i, q[i], d2, tol});
        if (!(d2 < -1e-12)) report.strictly_concave = false;
    }
    report.concave = report.violations.empty();
    if (!report.concave) report.strictly_concave = false;
    return report;
}

ConcavityReport concavity_report(const ScalingFit& fit)
{
    ExponentCurve c;
    std::vector<double> se;
    for (std::size_t i = 0; i < fit.q.size(); ++i) {
        if (!fit.ok[i]) continue;
        c.q.push_back(fit.q[i]);
        c.xi.push_back(fit.xi[i]);
        se.push_back(std::isfinite(fit.stderr[i]) ? fit.stderr[i] : 0.0);
    }
    return concavity_report(c, se);
}

std::vector<double> flatness_curve(const StructureFunctionTable& table)
{
    const auto find = [&](double qv) {
        const auto it = std::find(table.q.begin(), table.q.end(), qv);
        require(it != table.q.end(), ErrorKind::domain, "flatness needs q = 2 and q = 4 in the table");
        return static_cast<std::size_t>(it - table.q.begin());
    };
    const std::size_t q2 = find(2.0);
    const std::size_t q4 = find(4.0);
    std::vector<double> out;
    for (std::size_t ti = 0; ti < table.tau.size(); ++ti) {
        const double s2 = table.at(q2, ti);
        out.push_back(table.count_at(q2, ti) > 0 && s2 > 0.0 ? table.at(q4, ti) / (s2 * s2)
                                                             : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
}

}  // namespace mfl
