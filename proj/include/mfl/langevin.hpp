#pragma once

// Relaxation dynamics of a Lagrangian velocity: the linear ODE dv/dt = -v/T0,
// its stochastic extension dv = -v/T0 dt + v dlog(tau) with dlog(tau) = sigma dW,
// the scale-invariant multiplicative update, and the log-scale variability
// equation log(1/t) dtau/dlog(1/t) = tau.

#include <cstdint>
#include <span>
#include <vector>

namespace mfl {

struct LangevinParams {
    double T0 = 1.0;      // relaxation time
    double sigma = 0.0;   // amplitude of dlog(tau) = sigma dW
    double v0 = 1.0;      // initial velocity
    double dt = 1e-3;
    int steps = 1000;
    std::uint64_t seed = 0;
    double l0 = 1.0;      // integral scale
    double nu = 1e-5;     // kinematic viscosity

    /// Throws domain error on invalid values or dt > T0 / 10.
    void validate() const;
    double horizon() const noexcept { return dt * steps; }
    double reynolds() const;
};

enum class Scheme { exact, euler, euler_maruyama, heun };
enum class Interpretation { ito, stratonovich };

struct Trajectory {
    std::vector<double> t;
    std::vector<double> v;
    Scheme scheme = Scheme::exact;
    LangevinParams params;
};

struct LinearRun {
    Trajectory euler;
    Trajectory exact;
    double max_error = 0.0;
};

/// Explicit Euler for dv/dt = -v/T0 next to the exact solution v0 e^(-t/T0).
LinearRun integrate_linear(const LangevinParams& params);

/// One path of the stochastic equation. Ito paths use Euler-Maruyama,
/// Stratonovich paths use the stochastic Heun predictor-corrector. With
/// sigma = 0 the Ito path equals the Euler path of integrate_linear exactly.
Trajectory integrate_langevin(const LangevinParams& params, Interpretation interpretation = Interpretation::ito);

/// Closed-form solution driven by the same Brownian increments as integrate_langevin:
/// Ito v0 exp(-t/T0 - sigma^2 t/2 + sigma W), Stratonovich v0 exp(-t/T0 + sigma W).
Trajectory langevin_exact_path(const LangevinParams& params, Interpretation interpretation = Interpretation::ito);

/// E[v(t)^q] in closed form.
double langevin_moment(const LangevinParams& params, double q, double t,
                       Interpretation interpretation = Interpretation::ito);

struct MomentSummary {
    double q = 0.0;
    double t = 0.0;
    double mean = 0.0;
    double stderr = 0.0;
    std::size_t n = 0;
};

/// Monte-Carlo moments of an Euler-Maruyama (Ito) ensemble. Path j is driven
/// by stream j of params.seed (path 0 is the integrate_langevin path).
/// `checkpoints` are step indices in [0, steps]. Results do not depend on the
/// thread count.
std::vector<MomentSummary> langevin_ensemble(const LangevinParams& params, std::size_t paths,
                                             std::span<const int> checkpoints, std::span<const double> q_list,
                                             unsigned threads = 1);

struct ScaleInvariantPath {
    std::vector<double> t;
    std::vector<double> log_tau;  // log tau, a walk with increments sigma dW
    std::vector<double> v_tilde;  // v / v0 under v_{k+1} = v_k exp(dlog tau)
};

/// The undamped (T0 -> infinity) multiplicative update dv~ = v~ dlog(tau).
ScaleInvariantPath integrate_scale_invariant(const LangevinParams& params);

struct ScaleInvariantSolution {
    double C = 0.0;                 // tau(t) = C log(1/t)
    std::vector<double> t;
    std::vector<double> tau;
    double max_residual = 0.0;      // |log(1/t) dtau/dlog(1/t) - tau| by central differences
};

/// tau(t) = C log(1/t) with C fixed by tau(t1) = tau1; grid points in (0, 1).
ScaleInvariantSolution scale_invariant_solution(double t1, double tau1, std::span<const double> t_grid);
ScaleInvariantSolution scale_invariant_solution_with_constant(double C, std::span<const double> t_grid);

/// t ~ T0 (1 + eta + log tau).
double correlated_time(double T0, double eta, double tau);

/// Re = l0 v0 / nu.
double reynolds(double l0, double v0, double nu);

}  // namespace mfl
