#pragma once

// Valuations of relative infinitesimals, inversion jumps across gaps, the
// deformation and increment laws they induce, and the log-scale measure
// conservation identity tying a contraction a and a multiplier p to the
// dimension s = log p / log(1/a).

#include "mfl/fractal.hpp"

namespace mfl {

/// x~ = lambda * delta^(1 + l): a quantity small relative to the scale delta.
/// Construction checks 0 < lambda * delta^l < 1 so that 0 < x~ < delta.
class RelativeInfinitesimal {
public:
    RelativeInfinitesimal(double delta, double lambda, double l);

    double delta() const noexcept { return delta_; }
    double lambda() const noexcept { return lambda_; }
    double exponent() const noexcept { return l_; }

    /// log x~, exact for scales far below the double range.
    double log_value() const noexcept;
    double value() const noexcept;
    /// X~ = x~ / delta = lambda * delta^l.
    double scale_invariant() const noexcept;
    /// finite_valuation(delta, x~), evaluated in the log domain.
    double valuation() const noexcept;

private:
    double delta_;
    double lambda_;
    double l_;
};

/// log(delta / x~) / log(1 / delta); requires 0 < x~ < delta < 1.
double finite_valuation(double delta, double xtilde);
/// Same quantity from logarithms, for scales that underflow a double.
double finite_valuation_log(double log_delta, double log_xtilde);

/// Upper bound |log lambda| / log(1/delta) on |valuation - l| for the family lambda * delta^(1+l).
double valuation_error_bound(double delta, double lambda);

/// Gap between the valuation of a sum and the ultrametric prediction
/// min(v(x1), v(x2)); nonnegative and at most log 2 / log(1/delta).
struct UltrametricCheck {
    double v_sum = 0.0;
    double v_first = 0.0;
    double v_second = 0.0;
    double defect = 0.0;           // v_sum distance from min(v_first, v_second)
    double inequality_slack = 0.0; // max(v_first, v_second) - v_sum, >= 0 when the inequality holds
};

/// Evaluates the valuation on x1 = delta^(1+l1), x2 = delta^(1+l2) and on x1 + x2.
UltrametricCheck ultrametric_check(double delta, double l1, double l2);

struct InversionJump {
    double tau_minus = 0.0;
    double a = 0.0;
    double tau_plus = 0.0;
    double residual = 0.0;  // |tau_plus * tau_minus^(1+a) - 1|
};

/// tau_plus = tau_minus^-(1+a); requires 0 < tau_minus < 1, a >= 0.
InversionJump inversion_image(double tau_minus, double a);

/// a = (log tau_plus - log(1/tau_minus)) / log(1/tau_minus); requires 0 < tau_minus < 1 < tau_plus.
double valuation_exponent(double tau_minus, double tau_plus);

struct Deformation {
    double x_plus = 0.0;   // x^(1 - phi)
    double x_minus = 0.0;  // x^(1 + phi)
};

Deformation deform(double x, double phi);

struct Increment {
    double scale_invariant = 0.0;  // phi * log(1/x)
    double linear = 0.0;           // phi * x * log(1/x), increment of the fattened variable itself
};

Increment scale_invariant_increment(double x, double phi);

struct ConservationCheck {
    double t = 0.0;
    double a = 0.0;
    double p = 0.0;
    int n = 0;
    double s = 0.0;  // log p / log(1/a)
    double T = 0.0;  // t^(-1/s), optionally scaled
    double residual = 0.0;

    /// Identity holds to 1e-10 * n.
    bool holds() const noexcept { return residual < 1e-10 * n; }
};

/// Log-domain residual |n log(1/t) log a + n log T log p| of
/// t = t * a^(n log 1/t) * p^(n log T) with T = t^(-1/s).
/// `T_scale` multiplies T before the residual is formed (1 leaves the identity exact).
ConservationCheck measure_conservation_residual(double t, double a, double p, int n, double T_scale = 1.0);

/// s = log p / log(1/a); requires 0 < a < 1 < p < 1/a.
double dim_s(double a, double p);
/// s~ = log(1/(a p)) / log p; same domain.
double dim_stilde(double a, double p);

/// Valuation with Cantor staircase structure: staircase_eval(spec, v) where v
/// is finite_valuation(delta, x~) clipped to [0, 1].
double cantor_valuation(const IfsSpec& spec, double delta, double xtilde, double tol = default_staircase_tol);

}  // namespace mfl
