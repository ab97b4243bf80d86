#include "oracles.hpp"

#include "mfl/analysis.hpp"
#include "mfl/cascade.hpp"
#include "mfl/error.hpp"
#include "mfl/rng.hpp"
#include "mfl/stats.hpp"

#include <doctest.h>

#include <cmath>

using namespace mfl;

namespace {

ErrorKind kind_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an mfl::Error");
    return ErrorKind::io;
}

CascadeSpec binomial(double w0, int depth, std::uint64_t seed = 0)
{
    CascadeSpec s;
    s.branching = 2;
    s.weights = DeterministicWeights{{w0, 1.0 - w0}};
    s.depth = depth;
    s.seed = seed;
    return s;
}

ScalingFit fit_series(const VelocitySeries& s, std::vector<double> q, FitRange range)
{
    const auto tau = dyadic_tau_grid(s);
    return fit_exponents(structure_functions(s, q, tau), range);
}

}  // namespace

TEST_SUITE("cascade")
{
    TEST_CASE("build_cascade examples")
    {
        const auto uniform = build_cascade(binomial(0.5, 3));
        REQUIRE(uniform.masses.size() == 8);
        for (double m : uniform.masses) CHECK(m == 0.125);

        const auto grid = build_cascade(binomial(0.7, 2));
        REQUIRE(grid.masses.size() == 4);
        CHECK(grid.masses[0] == doctest::Approx(0.49).epsilon(1e-15));
        CHECK(grid.masses[1] == doctest::Approx(0.21).epsilon(1e-15));
        CHECK(grid.masses[2] == doctest::Approx(0.21).epsilon(1e-15));
        CHECK(grid.masses[3] == doctest::Approx(0.09).epsilon(1e-15));
    }

    TEST_CASE("deterministic cascades conserve mass at every depth")
    {
        for (int depth = 1; depth <= 14; ++depth) {
            CascadeSpec s;
            s.branching = 3;
            s.weights = DeterministicWeights{{0.2, 0.5, 0.3}};
            s.depth = depth;
            const auto g = build_cascade(s);
            CHECK(g.masses.size() == static_cast<std::size_t>(std::pow(3, depth)));
            NeumaierSum total;
            for (double m : g.masses) total.add(m);
            CHECK(std::fabs(total.value() - 1.0) < 1e-12);
        }
    }

    TEST_CASE("log-normal cascades: per-family normalization, seeded")
    {
        CascadeSpec s;
        s.branching = 2;
        s.weights = LogNormalWeights{0.0, 0.3};
        s.depth = 10;
        double mean_total = 0.0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            s.seed = seed;
            const auto g = build_cascade(s);
            NeumaierSum total;
            for (double m : g.masses) {
                CHECK(m >= 0.0);
                total.add(m);
            }
            mean_total += total.value() / 100.0;
        }
        CHECK(std::fabs(mean_total - 1.0) < 0.05);

        s.seed = 42;
        const auto a = build_cascade(s);
        const auto b = build_cascade(s);
        CHECK(a.masses == b.masses);
        s.seed = 43;
        CHECK(build_cascade(s).masses != a.masses);
    }

    TEST_CASE("cascade validation and cap")
    {
        CHECK(kind_of([] { build_cascade(binomial(0.7, 30), std::size_t{1} << 24); }) == ErrorKind::resource_limit);
        CascadeSpec bad = binomial(0.7, 3);
        bad.weights = DeterministicWeights{{0.7, 0.4}};
        CHECK(kind_of([&] { build_cascade(bad); }) == ErrorKind::validation);
        bad.weights = DeterministicWeights{{0.7, 0.2, 0.1}};
        CHECK(kind_of([&] { build_cascade(bad); }) == ErrorKind::validation);
        bad.weights = DeterministicWeights{{1.0, 0.0}};
        CHECK(kind_of([&] { build_cascade(bad); }) == ErrorKind::validation);
        CascadeSpec b1 = binomial(0.7, 3);
        b1.branching = 1;
        CHECK(kind_of([&] { build_cascade(b1); }) == ErrorKind::validation);
    }

    TEST_CASE("analytic zeta")
    {
        const double half[] = {0.5, 0.5};
        for (double q : {-2.0, 0.0, 0.5, 1.0, 3.0, 7.5}) CHECK(analytic_zeta(half, q) == doctest::Approx(q).epsilon(1e-14));

        const double w[] = {0.7, 0.3};
        CHECK(analytic_zeta(w, 2.0) == doctest::Approx(1.0 - std::log2(0.58)).epsilon(1e-14));
        CHECK(analytic_zeta(w, 2.0) == doctest::Approx(1.78589).epsilon(1e-5));
        CHECK(analytic_zeta(w, 1.0) == 1.0);
        CHECK(analytic_zeta(w, 0.0) == 0.0);
        for (double q = -4; q <= 8; q += 0.5) CHECK(analytic_zeta(w, q) == doctest::Approx(oracle::zeta(w, q)).epsilon(1e-13));

        // concave in q
        for (double q = -4; q <= 8; q += 0.25) {
            const double d2 = analytic_zeta(w, q + 0.25) - 2 * analytic_zeta(w, q) + analytic_zeta(w, q - 0.25);
            CHECK(d2 < 0.0);
        }

        CascadeSpec ln;
        ln.weights = LogNormalWeights{};
        CHECK(kind_of([&] { analytic_zeta(ln, 2.0); }) == ErrorKind::unsupported);
        CHECK(analytic_zeta(binomial(0.7, 4), 2.0) == analytic_zeta(w, 2.0));
    }

    TEST_CASE("series validation")
    {
        VelocitySeries s;
        s.t = {0.0, 1.0, 1.0};
        s.v = {0.0, 0.0, 0.0};
        CHECK(kind_of([&] { s.validate(); }) == ErrorKind::validation);
        s.t = {0.0, 1.0, 2.0};
        s.v = {0.0, NAN, 0.0};
        CHECK(kind_of([&] { s.validate(); }) == ErrorKind::validation);
        CHECK(kind_of([] { brownian_baseline(1.0, 100, 1); }) == ErrorKind::domain);
        CHECK(kind_of([] { brownian_baseline(-1.0, 2048, 1); }) == ErrorKind::domain);
    }

    TEST_CASE("seed determinism of every generator")
    {
        const auto sub_spec = binomial(0.7, 8, 3);
        CHECK(synthesize_subordinated(sub_spec, 1.0, 1.0, 4096, 9).v ==
              synthesize_subordinated(sub_spec, 1.0, 1.0, 4096, 9).v);
        CHECK(synthesize_subordinated(sub_spec, 1.0, 1.0, 4096, 9).v !=
              synthesize_subordinated(sub_spec, 1.0, 1.0, 4096, 10).v);
        const auto mid = IfsSpec::middle_third();
        CHECK(synthesize_inversion_jumps(mid, 1.0, 1.0, 4096, 9).v == synthesize_inversion_jumps(mid, 1.0, 1.0, 4096, 9).v);
        CHECK(brownian_baseline(1.0, 4096, 9).v == brownian_baseline(1.0, 4096, 9).v);
        CHECK(brownian_baseline(1.0, 4096, 9).v != brownian_baseline(1.0, 4096, 8).v);
    }

    TEST_CASE("generator layout")
    {
        const auto s = synthesize_subordinated(binomial(0.7, 10), 2.0, 4.0, 3000, 1);
        CHECK(s.size() == 3000);
        CHECK(s.t[0] == 0.0);
        CHECK(s.v[0] == 0.0);
        CHECK(s.spacing() == doctest::Approx(4.0 / 1024.0).epsilon(1e-12));
        CHECK_NOTHROW(s.validate());
        CHECK(s.generator == "subordinated");

        const auto j = synthesize_inversion_jumps(IfsSpec::middle_third(), 2.0, 1.0, 2048, 1, {8, 0.01});
        CHECK(j.v[0] == 2.0);
        CHECK(j.spacing() == doctest::Approx(1.0 / 8.0).epsilon(1e-12));
        for (double v : j.v) CHECK(v > 0.0);
    }

    TEST_CASE("subordinated increments: cascade time is the increment variance")
    {
        // With a deterministic cascade, Var(v[k+1] - v[k]) = v0^2 mass_k, so
        // the squared increments averaged over many periods reproduce the masses.
        const auto spec = binomial(0.7, 4);
        const auto grid = build_cascade(spec);
        const auto s = synthesize_subordinated(spec, 1.0, 1.0, 16 * 20000 + 1, 4);
        std::vector<double> acc(16, 0.0);
        for (std::size_t i = 1; i < s.size(); ++i) {
            const double d = s.v[i] - s.v[i - 1];
            acc[(i - 1) % 16] += d * d / 20000.0;
        }
        for (std::size_t k = 0; k < 16; ++k) CHECK(acc[k] == doctest::Approx(grid.masses[k]).epsilon(0.05));
    }

    TEST_CASE("subordination oracle: uniform weights give q/2")
    {
        const auto spec = binomial(0.5, 12, 21);
        const auto s = synthesize_subordinated(spec, 1.0, 1.0, std::size_t{1} << 18, 21);
        const auto fit = fit_series(s, {1, 2, 4}, {4 * s.spacing(), 1.0 / 8.0});
        for (double q : {1.0, 2.0, 4.0}) CHECK(std::fabs(fit.xi_at(q) - q / 2.0) < 0.05);
    }

    TEST_CASE("subordination oracle: fitted xi(q) tracks zeta(q/2) for (0.7, 0.3)")
    {
        const auto spec = binomial(0.7, 12, 22);
        const auto s = synthesize_subordinated(spec, 1.0, 1.0, std::size_t{1} << 18, 22);
        const auto fit = fit_series(s, {1, 2, 3, 4}, {4 * s.spacing(), 1.0 / 8.0});
        const double w[] = {0.7, 0.3};
        CHECK(std::fabs(fit.xi_at(2) - 1.0) < 0.05);
        CHECK(std::fabs(fit.xi_at(4) - oracle::zeta(w, 2.0)) < 0.1);
        for (double q : {1.0, 2.0, 3.0, 4.0}) {
            CAPTURE(q);
            // 3 fit-stderr plus a small allowance for the finite-size bias
            CHECK(std::fabs(fit.xi_at(q) - oracle::zeta(w, q / 2.0)) <= 3.0 * fit.stderr_at(q) + 0.03);
        }
        // subadditivity of a concave exponent curve through the origin
        CHECK(fit.xi_at(2) <= 2 * fit.xi_at(1) + 2 * fit.stderr_at(1));
        CHECK(fit.xi_at(4) <= fit.xi_at(1) + fit.xi_at(3) + 2 * std::max(fit.stderr_at(1), fit.stderr_at(3)));
        CHECK(fit.xi_at(4) <= 2 * fit.xi_at(2) + 2 * fit.stderr_at(2));
    }

    TEST_CASE("log-normal cascades also drive the subordinated walk")
    {
        CascadeSpec s;
        s.weights = LogNormalWeights{0.0, 0.3};
        s.depth = 10;
        s.seed = 5;
        const auto series = synthesize_subordinated(s, 1.0, 1.0, 1 << 14, 5);
        CHECK_NOTHROW(series.validate());
        CHECK(synthesize_subordinated(s, 1.0, 1.0, 1 << 14, 5).v == series.v);
    }

    TEST_CASE("inversion jumps: zero valuation leaves v at v0")
    {
        const IfsSpec degenerate{"all-right", {{0.0, 1.0 / 3.0, 0.0}, {2.0 / 3.0, 1.0 / 3.0, 1.0}}};
        const auto s = synthesize_inversion_jumps(degenerate, 1.5, 1.0, 4096, 3);
        for (double v : s.v) CHECK(v == 1.5);
    }

    TEST_CASE("inversion jumps: flatness above 3 at small lags, decreasing with lag")
    {
        const auto s = synthesize_inversion_jumps(IfsSpec::middle_third(), 1.0, 1.0, std::size_t{1} << 18, 8);
        std::vector<double> tau;
        for (int k = 0; k <= 6; ++k) tau.push_back(s.spacing() * std::ldexp(1.0, k));
        const double q[] = {2.0, 4.0};
        const auto flat = flatness_curve(structure_functions(s, q, tau));
        CHECK(flat.front() > 3.5);
        CHECK(flat.back() < flat.front());
        for (std::size_t i = 1; i < flat.size(); ++i) CHECK(flat[i] <= flat[i - 1] + 0.1);
    }

    TEST_CASE("Brownian baseline")
    {
        const auto s = brownian_baseline(1.0, std::size_t{1} << 18, 31);
        CHECK(s.spacing() == 1.0);
        const auto fit = fit_series(s, {1, 2, 4}, default_fit_range(s));
        CHECK(std::fabs(fit.xi_at(2) - 1.0) < 0.05);
        CHECK(std::fabs(fit.xi_at(4) - 2.0) < 0.1);
        CHECK(std::fabs(2 * fit.xi_at(2) - fit.xi_at(4)) <= 0.1);
        const double q[] = {2.0, 4.0};
        const double tau[] = {1, 4, 16, 64, 256};
        for (double f : flatness_curve(structure_functions(s, q, tau))) CHECK(std::fabs(f - 3.0) < 0.2);
    }

    TEST_CASE("ensembles: per-member seeds, independent of thread count")
    {
        auto make = [](std::uint64_t seed, std::size_t) { return brownian_baseline(1.0, 2048, seed); };
        const auto one = generate_ensemble(6, 77, 1, make);
        const auto four = generate_ensemble(6, 77, 4, make);
        REQUIRE(one.size() == 6);
        for (std::size_t i = 0; i < 6; ++i) {
            CHECK(one[i].seed == derive_seed(77, i));
            CHECK(one[i].v == four[i].v);
        }
        CHECK(one[0].v != one[1].v);

        auto failing = [](std::uint64_t, std::size_t i) -> VelocitySeries {
            if (i == 3) fail(ErrorKind::numeric, "member failed");
            return brownian_baseline(1.0, 2048, 1);
        };
        CHECK(kind_of([&] { generate_ensemble(6, 1, 3, failing); }) == ErrorKind::numeric);
    }
}
