#include "mfl/identities.hpp"

#include "mfl/fractal.hpp"
#include "mfl/langevin.hpp"
#include "mfl/rng.hpp"
#include "mfl/ultrametric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfl {

namespace {

IdentityResult check(std::string name, double value, double tolerance)
{
    return {std::move(name), value, tolerance, value <= tolerance};
}

IdentityResult conservation(const IdentityOptions& options)
{
    struct Case {
        double t, a, p;
        int n;
    };
    const Case cases[] = {{0.1, 0.5, 1.5, 3}, {0.01, 1.0 / 3.0, 2.0, 7}, {0.5, 0.2, 3.0, 1}, {1e-6, 0.9, 1.05, 20}};
    double worst = 0.0;
    for (const auto& c : cases) {
        const auto r = measure_conservation_residual(c.t, c.a, c.p, c.n, options.conservation_T_scale);
        worst = std::max(worst, r.residual);
    }
    return check("measure conservation residual", worst, 1e-10);
}

IdentityResult inversion(const IdentityOptions& options)
{
    Rng rng = make_rng(options.seed, 1);
    std::uniform_real_distribution<double> tau_dist(1e-6, 1.0 - 1e-6);
    std::uniform_real_distribution<double> a_dist(0.0, 5.0);
    double worst = 0.0;
    for (int i = 0; i < options.inversion_cases; ++i) {
        const double tau_minus = tau_dist(rng);
        const double a = a_dist(rng);
        const auto jump = inversion_image(tau_minus, a);
        worst = std::max(worst, jump.residual);
        if (jump.tau_plus > 1.0 && std::isfinite(jump.tau_plus)) {
            const double back = valuation_exponent(tau_minus, jump.tau_plus);
            worst = std::max(worst, std::fabs(back - a) / std::max(1.0, a));
        }
    }
    return check("inversion round trip", worst, 1e-10);
}

IdentityResult deformation()
{
    const double eps = std::numeric_limits<double>::epsilon();
    double worst = 0.0;
    for (double x : {1e-9, 1e-3, 0.1, 0.25, 0.5, 0.9, 0.999}) {
        for (double phi : {0.0, 0.01, 0.1, 0.3, 0.5, 0.9}) {
            const auto d = deform(x, phi);
            worst = std::max(worst, std::fabs(d.x_plus * d.x_minus - x * x) / (x * x));
        }
    }
    // a handful of ulps: two pows and one product, each correctly rounded or nearly so
    return check("deformation geometric mean", worst, 8 * eps);
}

IdentityResult variability_ode()
{
    std::vector<double> grid;
    for (int k = 1; k <= 200; ++k) grid.push_back(std::pow(10.0, -0.05 * k));
    std::reverse(grid.begin(), grid.end());
    const auto sol = scale_invariant_solution(0.1, 2.0, grid);
    return check("log-scale variability ODE residual", sol.max_residual, 1e-8);
}

IdentityResult relaxation_exact()
{
    LangevinParams p;
    p.T0 = 1.0;
    p.sigma = 0.0;
    p.v0 = 1.0;
    p.dt = 1e-3;
    p.steps = 2000;
    const auto exact = langevin_exact_path(p);
    double worst = 0.0;
    for (std::size_t i = 0; i < exact.t.size(); ++i) {
        const double ref = std::exp(-exact.t[i] / p.T0);
        worst = std::max(worst, std::fabs(exact.v[i] - ref) / ref);
    }
    return check("relaxation exact solution", worst, 1e-12);
}

IdentityResult relaxation_euler()
{
    LangevinParams p;
    p.T0 = 1.0;
    p.v0 = 1.0;
    p.dt = 1e-4;
    p.steps = 20000;
    const auto run = integrate_linear(p);
    // global error of explicit Euler on v' = -v/T0 is below dt v0 / (2 e T0)
    return check("relaxation Euler convergence", run.max_error, p.dt * p.v0 / (2.0 * std::exp(1.0) * p.T0) * 1.01);
}

IdentityResult dimension_agreement()
{
    const double via_measure = dim_s(1.0 / 3.0, 2.0);
    const double via_ifs = similarity_dimension(IfsSpec::middle_third()).value;
    return check("conservation dimension vs similarity dimension", std::fabs(via_measure - via_ifs), 1e-12);
}

}  // namespace

std::vector<IdentityResult> run_identity_suite(const IdentityOptions& options)
{
    return {conservation(options), inversion(options),  deformation(),         variability_ode(),
            relaxation_exact(),    relaxation_euler(), dimension_agreement()};
}

}  // namespace mfl
