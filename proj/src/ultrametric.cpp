#include "mfl/ultrametric.hpp"

#include "mfl/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mfl {

RelativeInfinitesimal::RelativeInfinitesimal(double delta, double lambda, double l)
    : delta_(delta), lambda_(lambda), l_(l)
{
    require(delta > 0.0 && delta < 1.0, ErrorKind::domain, "relative infinitesimal: delta must lie in (0, 1)");
    require(lambda > 0.0 && std::isfinite(lambda), ErrorKind::domain, "relative infinitesimal: lambda must be positive");
    require(l > 0.0 && l < 1.0, ErrorKind::domain, "relative infinitesimal: l must lie in (0, 1)");
    require(std::log(lambda) + l * std::log(delta) < 0.0, ErrorKind::domain,
            "relative infinitesimal: lambda * delta^l must be < 1");
}

double RelativeInfinitesimal::log_value() const noexcept { return std::log(lambda_) + (1.0 + l_) * std::log(delta_); }

double RelativeInfinitesimal::value() const noexcept { return std::exp(log_value()); }

double RelativeInfinitesimal::scale_invariant() const noexcept
{
    return std::exp(std::log(lambda_) + l_ * std::log(delta_));
}

double RelativeInfinitesimal::valuation() const noexcept
{
    return finite_valuation_log(std::log(delta_), log_value());
}

double finite_valuation_log(double log_delta, double log_xtilde)
{
    require(log_delta < 0.0 && log_xtilde < log_delta, ErrorKind::domain,
            "finite_valuation: need 0 < xtilde < delta < 1");
    return (log_delta - log_xtilde) / -log_delta;
}

double finite_valuation(double delta, double xtilde)
{
    require(xtilde > 0.0 && xtilde < delta && delta < 1.0, ErrorKind::domain,
            "finite_valuation: need 0 < xtilde < delta < 1");
    return finite_valuation_log(std::log(delta), std::log(xtilde));
}

double valuation_error_bound(double delta, double lambda)
{
    require(delta > 0.0 && delta < 1.0 && lambda > 0.0, ErrorKind::domain, "valuation_error_bound: bad arguments");
    return std::fabs(std::log(lambda)) / std::log(1.0 / delta);
}

UltrametricCheck ultrametric_check(double delta, double l1, double l2)
{
    require(delta > 0.0 && delta < 1.0 && l1 > 0.0 && l2 > 0.0, ErrorKind::domain, "ultrametric_check: bad arguments");
    const double ld = std::log(delta);
    const double lx1 = (1.0 + l1) * ld;
    const double lx2 = (1.0 + l2) * ld;
    // log(x1 + x2) without leaving the log domain
    const double hi = std::max(lx1, lx2);
    const double lsum = hi + std::log1p(std::exp(std::min(lx1, lx2) - hi));

    UltrametricCheck c;
    c.v_first = finite_valuation_log(ld, lx1);
    c.v_second = finite_valuation_log(ld, lx2);
    c.v_sum = finite_valuation_log(ld, lsum);
    c.defect = std::fabs(c.v_sum - std::min(c.v_first, c.v_second));
    c.inequality_slack = std::max(c.v_first, c.v_second) - c.v_sum;
    return c;
}

InversionJump inversion_image(double tau_minus, double a)
{
    require(tau_minus > 0.0 && tau_minus < 1.0, ErrorKind::domain, "inversion_image: tau_minus must lie in (0, 1)");
    require(a >= 0.0 && std::isfinite(a), ErrorKind::domain, "inversion_image: a must be >= 0");
    InversionJump j;
    j.tau_minus = tau_minus;
    j.a = a;
    const double log_minus = std::log(tau_minus);
    j.tau_plus = std::exp(-(1.0 + a) * log_minus);
    j.residual = std::fabs(std::expm1(std::log(j.tau_plus) + (1.0 + a) * log_minus));
    return j;
}

double valuation_exponent(double tau_minus, double tau_plus)
{
    require(tau_minus > 0.0 && tau_minus < 1.0 && tau_plus > 1.0 && std::isfinite(tau_plus), ErrorKind::domain,
            "valuation_exponent: need 0 < tau_minus < 1 < tau_plus");
    const double inv = -std::log(tau_minus);
    return (std::log(tau_plus) - inv) / inv;
}

Deformation deform(double x, double phi)
{
    require(x > 0.0 && x < 1.0, ErrorKind::domain, "deform: x must lie in (0, 1)");
    require(phi >= 0.0 && phi <= 1.0, ErrorKind::domain, "deform: phi must lie in [0, 1]");
    // x^(1 -+ phi) = x / x^phi and x * x^phi: the product is x^2 up to three roundings
    const double xphi = std::pow(x, phi);
    return {x / xphi, x * xphi};
}

Increment scale_invariant_increment(double x, double phi)
{
    require(x > 0.0 && x < 1.0, ErrorKind::domain, "scale_invariant_increment: x must lie in (0, 1)");
    require(phi >= 0.0 && std::isfinite(phi), ErrorKind::domain, "scale_invariant_increment: phi must be >= 0");
    const double inc = phi * -std::log(x);
    return {inc, x * inc};
}

namespace {

void require_dimension_domain(double a, double p)
{
    require(a > 0.0 && a < 1.0, ErrorKind::domain, "contraction a must lie in (0, 1)");
    require(p > 1.0 && p * a < 1.0, ErrorKind::domain, "multiplier p must lie in (1, 1/a)");
}

}  // namespace

ConservationCheck measure_conservation_residual(double t, double a, double p, int n, double T_scale)
{
    require(t > 0.0 && t < 1.0, ErrorKind::domain, "conservation: t must lie in (0, 1)");
    require_dimension_domain(a, p);
    require(n >= 1, ErrorKind::domain, "conservation: n must be >= 1");
    require(T_scale > 0.0, ErrorKind::domain, "conservation: T scale must be positive");

    ConservationCheck c;
    c.t = t;
    c.a = a;
    c.p = p;
    c.n = n;
    c.s = dim_s(a, p);
    const double log_inv_t = -std::log(t);
    const double log_T = log_inv_t / c.s + std::log(T_scale);
    c.T = std::exp(log_T);
    c.residual = std::fabs(n * log_inv_t * std::log(a) + n * log_T * std::log(p));
    return c;
}

double dim_s(double a, double p)
{
    require_dimension_domain(a, p);
    return std::log(p) / std::log(1.0 / a);
}

double dim_stilde(double a, double p)
{
    require_dimension_domain(a, p);
    return std::log(1.0 / (a * p)) / std::log(p);
}

double cantor_valuation(const IfsSpec& spec, double delta, double xtilde, double tol)
{
    const double v = finite_valuation(delta, xtilde);
    return staircase_eval(spec, std::clamp(v, 0.0, 1.0), tol);
}

}  // namespace mfl
