#include "mfl/langevin.hpp"

#include "mfl/error.hpp"
#include "mfl/rng.hpp"
#include "mfl/simd/kernels.hpp"
#include "mfl/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

namespace mfl {

void LangevinParams::validate() const
{
    require(T0 > 0.0 && std::isfinite(T0), ErrorKind::domain, "T0 must be positive");
    require(sigma >= 0.0 && std::isfinite(sigma), ErrorKind::domain, "sigma must be >= 0");
    require(std::isfinite(v0), ErrorKind::domain, "v0 must be finite");
    require(dt > 0.0 && std::isfinite(dt), ErrorKind::domain, "dt must be positive");
    require(steps >= 1, ErrorKind::domain, "steps must be >= 1");
    require(dt <= T0 / 10.0, ErrorKind::domain, "unstable step: dt must not exceed T0 / 10");
    require(l0 > 0.0 && nu > 0.0, ErrorKind::domain, "l0 and nu must be positive");
}

double LangevinParams::reynolds() const { return mfl::reynolds(l0, std::fabs(v0), nu); }

namespace {

Trajectory make_trajectory(const LangevinParams& params, Scheme scheme)
{
    Trajectory tr;
    tr.scheme = scheme;
    tr.params = params;
    tr.t.resize(static_cast<std::size_t>(params.steps) + 1);
    tr.v.resize(tr.t.size());
    for (std::size_t k = 0; k < tr.t.size(); ++k) tr.t[k] = static_cast<double>(k) * params.dt;
    tr.v[0] = params.v0;
    return tr;
}

// Brownian increments of stream `index`, sqrt(dt) Z per step.
std::vector<double> brownian_increments(const LangevinParams& params, std::uint64_t index)
{
    Rng rng = make_rng(params.seed, index);
    std::normal_distribution<double> normal;
    const double scale = std::sqrt(params.dt);
    std::vector<double> dw(static_cast<std::size_t>(params.steps));
    for (double& x : dw) x = scale * normal(rng);
    return dw;
}

inline double euler_maruyama(double x, double t0, double dt, double sigma, double dw)
{
    return (x + (-x / t0) * dt) + (x * sigma) * dw;
}

}  // namespace

LinearRun integrate_linear(const LangevinParams& params)
{
    params.validate();
    LinearRun run{make_trajectory(params, Scheme::euler), make_trajectory(params, Scheme::exact), 0.0};
    for (std::size_t k = 1; k < run.euler.v.size(); ++k) {
        run.euler.v[k] = euler_maruyama(run.euler.v[k - 1], params.T0, params.dt, 0.0, 0.0);
        run.exact.v[k] = params.v0 * std::exp(-run.exact.t[k] / params.T0);
        run.max_error = std::max(run.max_error, std::fabs(run.euler.v[k] - run.exact.v[k]));
    }
    return run;
}

Trajectory integrate_langevin(const LangevinParams& params, Interpretation interpretation)
{
    params.validate();
    const std::vector<double> dw = brownian_increments(params, 0);
    if (interpretation == Interpretation::ito) {
        Trajectory tr = make_trajectory(params, Scheme::euler_maruyama);
        for (std::size_t k = 1; k < tr.v.size(); ++k)
            tr.v[k] = euler_maruyama(tr.v[k - 1], params.T0, params.dt, params.sigma, dw[k - 1]);
        return tr;
    }
    Trajectory tr = make_trajectory(params, Scheme::heun);
    const auto drift = [&](double x) { return -x / params.T0; };
    for (std::size_t k = 1; k < tr.v.size(); ++k) {
        const double x = tr.v[k - 1];
        const double predictor = x + drift(x) * params.dt + params.sigma * x * dw[k - 1];
        tr.v[k] = x + 0.5 * (drift(x) + drift(predictor)) * params.dt +
                  0.5 * params.sigma * (x + predictor) * dw[k - 1];
    }
    return tr;
}

Trajectory langevin_exact_path(const LangevinParams& params, Interpretation interpretation)
{
    params.validate();
    const std::vector<double> dw = brownian_increments(params, 0);
    Trajectory tr = make_trajectory(params, Scheme::exact);
    const double correction = interpretation == Interpretation::ito ? 0.5 * params.sigma * params.sigma : 0.0;
    double w = 0.0;
    for (std::size_t k = 1; k < tr.v.size(); ++k) {
        w += dw[k - 1];
        const double t = tr.t[k];
        tr.v[k] = params.v0 * std::exp(-t / params.T0 - correction * t + params.sigma * w);
    }
    return tr;
}

double langevin_moment(const LangevinParams& params, double q, double t, Interpretation interpretation)
{
    const double s2 = params.sigma * params.sigma;
    const double rate = interpretation == Interpretation::ito ? -q / params.T0 + 0.5 * q * (q - 1.0) * s2
                                                              : -q / params.T0 + 0.5 * q * q * s2;
    return std::pow(params.v0, q) * std::exp(rate * t);
}

std::vector<MomentSummary> langevin_ensemble(const LangevinParams& params, std::size_t paths,
                                             std::span<const int> checkpoints, std::span<const double> q_list,
                                             unsigned threads)
{
    params.validate();
    require(paths >= 2, ErrorKind::domain, "ensemble needs at least two paths");
    require(!checkpoints.empty() && !q_list.empty(), ErrorKind::domain, "ensemble needs checkpoints and moments");
    for (int c : checkpoints)
        require(c >= 0 && c <= params.steps, ErrorKind::domain, "checkpoint outside [0, steps]");
    require(paths * checkpoints.size() <= resource_cap(), ErrorKind::resource_limit,
            "ensemble storage exceeds the resource cap");

    // values[c * paths + j]: path j at checkpoint c
    std::vector<double> values(paths * checkpoints.size());
    constexpr std::size_t block = 256;
    const std::size_t blocks = (paths + block - 1) / block;
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(blocks);

    auto run_block = [&](std::size_t b) {
        const std::size_t first = b * block;
        const std::size_t count = std::min(block, paths - first);
        std::vector<Rng> rngs;
        rngs.reserve(count);
        for (std::size_t j = 0; j < count; ++j) rngs.push_back(make_rng(params.seed, first + j));
        std::vector<std::normal_distribution<double>> normals(count);
        const double scale = std::sqrt(params.dt);
        std::vector<double> v(count, params.v0);
        std::vector<double> dw(count);
        auto record = [&](int step) {
            for (std::size_t c = 0; c < checkpoints.size(); ++c)
                if (checkpoints[c] == step)
                    std::copy(v.begin(), v.end(), values.begin() + static_cast<std::ptrdiff_t>(c * paths + first));
        };
        record(0);
        for (int step = 1; step <= params.steps; ++step) {
            for (std::size_t j = 0; j < count; ++j) dw[j] = scale * normals[j](rngs[j]);
            simd::euler_maruyama_step(v, dw, params.T0, params.dt, params.sigma);
            record(step);
        }
    };
    auto worker = [&] {
        for (std::size_t b = next++; b < blocks; b = next++) {
            try {
                run_block(b);
            } catch (...) {
                errors[b] = std::current_exception();
            }
        }
    };
    {
        threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(blocks)));
        std::vector<std::jthread> pool;
        for (unsigned k = 1; k < threads; ++k) pool.emplace_back(worker);
        worker();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<MomentSummary> out;
    std::vector<double> powered(paths);
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
        const std::span<const double> at(values.data() + c * paths, paths);
        for (double q : q_list) {
            for (std::size_t j = 0; j < paths; ++j) powered[j] = std::pow(at[j], q);
            const MeanEstimate m = mean_estimate(powered);
            out.push_back({q, checkpoints[c] * params.dt, m.mean, m.stderr, m.n});
        }
    }
    return out;
}

ScaleInvariantPath integrate_scale_invariant(const LangevinParams& params)
{
    params.validate();
    const std::vector<double> dw = brownian_increments(params, 0);
    ScaleInvariantPath path;
    const std::size_t n = dw.size() + 1;
    path.t.resize(n);
    path.log_tau.resize(n);
    path.v_tilde.resize(n);
    path.t[0] = 0.0;
    path.log_tau[0] = 0.0;
    path.v_tilde[0] = 1.0;
    for (std::size_t k = 1; k < n; ++k) {
        const double dlog_tau = params.sigma * dw[k - 1];
        path.t[k] = static_cast<double>(k) * params.dt;
        path.log_tau[k] = path.log_tau[k - 1] + dlog_tau;
        path.v_tilde[k] = path.v_tilde[k - 1] * std::exp(dlog_tau);
    }
    return path;
}

ScaleInvariantSolution scale_invariant_solution_with_constant(double C, std::span<const double> t_grid)
{
    require(std::isfinite(C), ErrorKind::domain, "constant must be finite");
    require(t_grid.size() >= 3, ErrorKind::domain, "grid needs at least three points");
    ScaleInvariantSolution sol;
    sol.C = C;
    sol.t.assign(t_grid.begin(), t_grid.end());
    std::sort(sol.t.begin(), sol.t.end());
    for (std::size_t i = 0; i < sol.t.size(); ++i) {
        require(sol.t[i] > 0.0 && sol.t[i] < 1.0, ErrorKind::domain, "grid points must lie in (0, 1)");
        if (i > 0) require(sol.t[i] > sol.t[i - 1], ErrorKind::domain, "grid points must be distinct");
    }
    sol.tau.resize(sol.t.size());
    std::vector<double> u(sol.t.size());
    for (std::size_t i = 0; i < sol.t.size(); ++i) {
        u[i] = -std::log(sol.t[i]);
        sol.tau[i] = C * u[i];
    }
    for (std::size_t i = 1; i + 1 < sol.t.size(); ++i) {
        const double slope = (sol.tau[i + 1] - sol.tau[i - 1]) / (u[i + 1] - u[i - 1]);
        sol.max_residual = std::max(sol.max_residual, std::fabs(u[i] * slope - sol.tau[i]));
    }
    return sol;
}

ScaleInvariantSolution scale_invariant_solution(double t1, double tau1, std::span<const double> t_grid)
{
    require(t1 > 0.0 && t1 < 1.0, ErrorKind::domain, "t1 must lie in (0, 1)");
    return scale_invariant_solution_with_constant(tau1 / -std::log(t1), t_grid);
}

double correlated_time(double T0, double eta, double tau)
{
    require(tau > 0.0 && std::isfinite(tau), ErrorKind::domain, "correlated_time: tau must be positive");
    return T0 * (1.0 + eta + std::log(tau));
}

double reynolds(double l0, double v0, double nu)
{
    require(l0 > 0.0 && v0 > 0.0 && nu > 0.0, ErrorKind::domain, "reynolds: arguments must be positive");
    return l0 * v0 / nu;
}

}  // namespace mfl
