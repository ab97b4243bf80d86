#include "mfl/cascade.hpp"

#include "mfl/error.hpp"
#include "mfl/rng.hpp"
#include "mfl/ultrametric.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <cmath>
#include <numeric>
#include <thread>

namespace mfl {

std::size_t CascadeSpec::cell_count(std::size_t cap) const
{
    require(branching >= 2, ErrorKind::validation, "cascade branching must be >= 2");
    require(depth >= 1, ErrorKind::validation, "cascade depth must be >= 1");
    std::size_t count = 1;
    for (int i = 0; i < depth; ++i) {
        require(count <= cap / static_cast<std::size_t>(branching), ErrorKind::resource_limit,
                "cascade with " + std::to_string(branching) + "^" + std::to_string(depth) +
                    " cells exceeds the cap of " + std::to_string(cap));
        count *= static_cast<std::size_t>(branching);
    }
    return count;
}

void CascadeSpec::validate(std::size_t cap) const
{
    cell_count(cap);
    if (const auto* det = std::get_if<DeterministicWeights>(&weights)) {
        require(det->weights.size() == static_cast<std::size_t>(branching), ErrorKind::validation,
                "cascade needs one weight per branch");
        double total = 0.0;
        for (double w : det->weights) {
            require(w > 0.0 && std::isfinite(w), ErrorKind::validation, "cascade weights must be positive");
            total += w;
        }
        require(std::fabs(total - 1.0) <= 1e-12, ErrorKind::validation, "cascade weights must sum to 1");
    } else {
        const auto& ln = std::get<LogNormalWeights>(weights);
        require(std::isfinite(ln.mu) && ln.sigma >= 0.0 && std::isfinite(ln.sigma), ErrorKind::validation,
                "log-normal weights need finite mu and sigma >= 0");
    }
}

MeasureGrid build_cascade(const CascadeSpec& spec) { return build_cascade(spec, resource_cap()); }

MeasureGrid build_cascade(const CascadeSpec& spec, std::size_t cap)
{
    spec.validate(cap);
    const auto b = static_cast<std::size_t>(spec.branching);
    MeasureGrid grid;
    grid.depth = spec.depth;
    grid.masses.reserve(spec.cell_count(cap));
    grid.masses.push_back(1.0);

    std::vector<double> family(b);
    Rng rng = make_rng(spec.seed);
    std::normal_distribution<double> normal;
    std::vector<double> next;
    for (int level = 0; level < spec.depth; ++level) {
        next.clear();
        next.reserve(grid.masses.size() * b);
        for (double parent : grid.masses) {
            if (const auto* det = std::get_if<DeterministicWeights>(&spec.weights)) {
                for (double w : det->weights) next.push_back(parent * w);
            } else {
                const auto& ln = std::get<LogNormalWeights>(spec.weights);
                double total = 0.0;
                for (double& w : family) {
                    w = std::exp(ln.mu + ln.sigma * normal(rng));
                    total += w;
                }
                for (double w : family) next.push_back(parent * (w / total));
            }
        }
        grid.masses.swap(next);
    }
    return grid;
}

double analytic_zeta(std::span<const double> weights, double q)
{
    require(weights.size() >= 2, ErrorKind::domain, "analytic_zeta needs at least two weights");
    double total = 0.0;
    for (double w : weights) {
        require(w > 0.0, ErrorKind::domain, "analytic_zeta needs positive weights");
        total += std::pow(w, q);
    }
    return 1.0 - std::log(total) / std::log(static_cast<double>(weights.size()));
}

double analytic_zeta(const CascadeSpec& spec, double q)
{
    const auto* det = std::get_if<DeterministicWeights>(&spec.weights);
    require(det != nullptr, ErrorKind::unsupported, "analytic_zeta is defined for deterministic weights only");
    return analytic_zeta(det->weights, q);
}

double VelocitySeries::spacing() const
{
    require(t.size() >= 2, ErrorKind::domain, "series needs at least two samples");
    return (t.back() - t.front()) / static_cast<double>(t.size() - 1);
}

void VelocitySeries::validate() const
{
    require(t.size() == v.size(), ErrorKind::validation, "series columns differ in length");
    for (std::size_t i = 0; i < t.size(); ++i) {
        require(std::isfinite(t[i]) && std::isfinite(v[i]), ErrorKind::validation,
                "series sample " + std::to_string(i) + " is not finite");
        if (i > 0)
            require(t[i] > t[i - 1], ErrorKind::validation, "series times must be strictly increasing");
    }
}

namespace {

void require_series_args(double v0, double tau0, std::size_t n)
{
    require(v0 > 0.0 && std::isfinite(v0), ErrorKind::domain, "v0 must be positive");
    require(tau0 > 0.0 && std::isfinite(tau0), ErrorKind::domain, "tau0 must be positive");
    require(n >= min_series_samples, ErrorKind::domain, "series needs at least 1024 samples");
    require(n <= resource_cap(), ErrorKind::resource_limit,
            "series length " + std::to_string(n) + " exceeds the cap of " + std::to_string(resource_cap()));
}

}  // namespace

VelocitySeries synthesize_subordinated(const CascadeSpec& spec, double v0, double tau0, std::size_t n_samples,
                                       std::uint64_t seed, SubordinationOptions options)
{
    require_series_args(v0, tau0, n_samples);
    require(options.samples_per_cell >= 1, ErrorKind::domain, "samples_per_cell must be >= 1");
    const std::size_t cap = resource_cap();
    spec.validate(cap);
    const std::size_t cells = spec.cell_count(cap);
    const auto per_cell = static_cast<std::size_t>(options.samples_per_cell);
    const std::size_t period = cells * per_cell;
    const double dt = tau0 / static_cast<double>(period);

    VelocitySeries s;
    s.v0 = v0;
    s.tau0 = tau0;
    s.generator = "subordinated";
    s.seed = seed;
    s.t.resize(n_samples);
    s.v.resize(n_samples);

    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal;
    MeasureGrid grid;
    double w = 0.0;
    s.t[0] = 0.0;
    s.v[0] = 0.0;
    for (std::size_t i = 1; i < n_samples; ++i) {
        const std::size_t step = i - 1;  // increment over [t_{i-1}, t_i]
        if (step % period == 0) {
            if (step == 0 || !spec.deterministic()) {
                CascadeSpec member = spec;
                member.seed = derive_seed(spec.seed, step / period);
                grid = build_cascade(member, cap);
            }
        }
        const double dtheta = grid.masses[(step % period) / per_cell] / static_cast<double>(per_cell);
        w += std::sqrt(dtheta) * normal(rng);
        s.t[i] = static_cast<double>(i) * dt;
        s.v[i] = v0 * w;
    }
    return s;
}

VelocitySeries synthesize_inversion_jumps(const IfsSpec& ifs, double v0, double tau0, std::size_t n_steps,
                                          std::uint64_t seed, JumpOptions options)
{
    require_series_args(v0, tau0, n_steps);
    require(options.steps_per_tau0 >= 1, ErrorKind::domain, "steps_per_tau0 must be >= 1");
    require(options.coupling >= 0.0 && std::isfinite(options.coupling), ErrorKind::domain,
            "coupling must be >= 0");
    ifs.validate();

    const double dt = tau0 / options.steps_per_tau0;
    const double rho = std::exp(-1.0 / options.steps_per_tau0);

    VelocitySeries s;
    s.v0 = v0;
    s.tau0 = tau0;
    s.generator = "inversion";
    s.seed = seed;
    s.t.resize(n_steps);
    s.v.resize(n_steps);

    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    double log_ratio = 0.0;  // log(v / v0)
    s.t[0] = 0.0;
    s.v[0] = v0;
    for (std::size_t i = 1; i < n_steps; ++i) {
        const GapLocation gap = locate_gap(ifs, uniform(rng));
        const bool up = coin(rng);
        double step = 0.0;
        if (gap.in_gap) {
            const double width = gap.right - gap.left;
            step = scale_invariant_increment(width, gap.staircase).scale_invariant;
            if (!up) step = -step;
        }
        log_ratio = rho * log_ratio + options.coupling * step;
        s.t[i] = static_cast<double>(i) * dt;
        s.v[i] = v0 * std::exp(log_ratio);
    }
    return s;
}

VelocitySeries brownian_baseline(double v0, std::size_t n_samples, std::uint64_t seed)
{
    require_series_args(v0, 1.0, n_samples);
    VelocitySeries s;
    s.v0 = v0;
    s.tau0 = 1.0;
    s.generator = "brownian";
    s.seed = seed;
    s.t.resize(n_samples);
    s.v.resize(n_samples);
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal;
    double w = 0.0;
    s.t[0] = 0.0;
    s.v[0] = 0.0;
    for (std::size_t i = 1; i < n_samples; ++i) {
        w += normal(rng);
        s.t[i] = static_cast<double>(i);
        s.v[i] = v0 * w;
    }
    return s;
}

std::vector<VelocitySeries> generate_ensemble(std::size_t count, std::uint64_t seed, unsigned threads,
                                              const std::function<VelocitySeries(std::uint64_t, std::size_t)>& make)
{
    std::vector<VelocitySeries> out(count);
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                out[i] = make(derive_seed(seed, i), i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (unsigned k = 1; k < threads; ++k) pool.emplace_back(worker);
        worker();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace mfl
