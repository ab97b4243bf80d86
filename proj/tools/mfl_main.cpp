// mfl: batch front end for the multifractal laboratory.
//
// Every output carries the tool version, the command, the seed and the fully
// resolved configuration, either as leading '#' lines (CSV) or as manifest
// fields (JSON). Any of those files can be passed back through --config to
// reproduce the run.

#include "mfl/analysis.hpp"
#include "mfl/cascade.hpp"
#include "mfl/error.hpp"
#include "mfl/fractal.hpp"
#include "mfl/identities.hpp"
#include "mfl/io.hpp"
#include "mfl/langevin.hpp"
#include "mfl/simd/kernels.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using mfl::io::Json;

namespace {

constexpr const char* tool_version = "mfl " MFL_VERSION;
constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_numeric = 2;

const std::vector<std::string> command_names = {"cantor", "generate", "simulate", "analyze", "spectrum", "verify"};

// ---------------------------------------------------------------------------
// Configuration files

std::string scalar_token(const Json& v)
{
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    if (v.is_number_float()) return mfl::io::format_double(v.get<double>());
    mfl::fail(mfl::ErrorKind::validation, "config values must be scalars or lists of scalars");
}

std::string value_token(const Json& v)
{
    if (!v.is_array()) return scalar_token(v);
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += scalar_token(v[i]);
    }
    return out;
}

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

struct LoadedConfig {
    std::optional<std::string> command;
    std::vector<std::pair<std::string, std::string>> entries;
};

void add_json_entries(LoadedConfig& cfg, const Json& obj, const std::string& source)
{
    mfl::require(obj.is_object(), mfl::ErrorKind::validation, source + ": config must be an object");
    for (const auto& [key, value] : obj.items()) cfg.entries.emplace_back(key, value_token(value));
}

// Accepts a JSON manifest ({"command": ..., "config": {...}}), a file written
// by this tool with '# command:' / '# config:' header lines, or a flat
// key=value file.
LoadedConfig load_config(const fs::path& path)
{
    const std::string text = mfl::io::read_file(path);
    const std::string source = path.string();
    LoadedConfig cfg;

    if (const auto first = text.find_first_not_of(" \t\r\n"); first != std::string::npos && text[first] == '{') {
        Json j;
        try {
            j = Json::parse(text);
        } catch (const Json::exception& e) {
            mfl::fail(mfl::ErrorKind::validation, source + ": " + e.what());
        }
        if (j.contains("command")) cfg.command = j["command"].get<std::string>();
        if (j.contains("config")) {
            add_json_entries(cfg, j["config"], source);
        } else {
            for (const auto& [key, value] : j.items())
                if (key != "command") cfg.entries.emplace_back(key, value_token(value));
        }
        return cfg;
    }

    std::size_t pos = 0;
    bool embedded = false;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        const std::string line = trim(std::string_view(text).substr(pos, end - pos));
        pos = end + 1;
        if (line.rfind("# command:", 0) == 0) {
            cfg.command = trim(std::string_view(line).substr(10));
            continue;
        }
        if (line.rfind("# config:", 0) == 0) {
            try {
                add_json_entries(cfg, Json::parse(line.substr(9)), source);
            } catch (const Json::exception& e) {
                mfl::fail(mfl::ErrorKind::validation, source + ": " + e.what());
            }
            embedded = true;
            continue;
        }
        if (line.empty() || line.front() == '#') continue;
        if (embedded) break;  // data rows of a tool-written file
        const auto eq = line.find('=');
        mfl::require(eq != std::string::npos, mfl::ErrorKind::validation,
                     source + ": expected key=value, got '" + line + "'");
        cfg.entries.emplace_back(trim(std::string_view(line).substr(0, eq)),
                                 trim(std::string_view(line).substr(eq + 1)));
    }
    return cfg;
}

// Removes `--config FILE` from argv and splices the file's entries in as
// `--key=value` tokens right after the subcommand, so that later flags on the
// command line take precedence.
std::vector<std::string> expand_config(std::vector<std::string> args)
{
    std::optional<std::string> config_path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config") {
            mfl::require(i + 1 < args.size(), mfl::ErrorKind::validation, "--config requires a file");
            config_path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + 2));
            --i;
        } else if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            --i;
        }
    }
    if (!config_path) return args;

    const LoadedConfig cfg = load_config(*config_path);
    std::size_t sub = 0;
    for (std::size_t i = 1; i < args.size() && sub == 0; ++i)
        for (const auto& name : command_names)
            if (args[i] == name) sub = i;
    if (sub == 0) {
        mfl::require(cfg.command.has_value(), mfl::ErrorKind::validation,
                     *config_path + ": no subcommand given and the config names none");
        args.insert(args.begin() + 1, *cfg.command);
        sub = 1;
    }
    std::vector<std::string> tokens;
    for (const auto& [key, value] : cfg.entries) {
        if (key == "config") continue;
        tokens.push_back("--" + key + "=" + value);
    }
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub + 1), tokens.begin(), tokens.end());
    return args;
}

// ---------------------------------------------------------------------------
// Helpers shared by the commands

std::vector<double> parse_list(const std::string& text, const std::string& what)
{
    std::vector<double> out;
    if (trim(text).empty()) return out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        if (comma == std::string::npos) comma = text.size();
        const std::string field = trim(std::string_view(text).substr(start, comma - start));
        double value = 0.0;
        const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
        mfl::require(!field.empty() && res.ec == std::errc{} && res.ptr == field.data() + field.size(),
                     mfl::ErrorKind::validation, what + ": not a number: '" + field + "'");
        out.push_back(value);
        start = comma + 1;
    }
    return out;
}

Json list_json(const std::vector<double>& values)
{
    Json arr = Json::array();
    for (double v : values) arr.push_back(v);
    return arr;
}

struct Common {
    std::uint64_t seed = 1;
    std::string out;
    std::string format = "csv";
    unsigned threads = 1;
};

void add_common(CLI::App* cmd, Common& common)
{
    cmd->add_option("--seed", common.seed, "Master seed")->capture_default_str();
    cmd->add_option("--out", common.out, "Output path stem (default: the command name)");
    cmd->add_option("--format", common.format, "Format of data files")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    cmd->add_option("--threads", common.threads, "Worker threads")->check(CLI::Range(1u, 256u))->capture_default_str();
    // Consumed before parsing; registered for --help only.
    cmd->add_option("--config", "Flat key=value file, JSON manifest, or a file written by this tool");
}

/// Resolved configuration shared by all outputs of one run.
struct Run {
    std::string command;
    Common common;
    Json config = Json::object();

    fs::path path(const std::string& suffix) const
    {
        const std::string stem = common.out.empty() ? command : common.out;
        return fs::path(stem + suffix);
    }

    mfl::io::Comments comments() const
    {
        return {tool_version, "command: " + command, "seed: " + std::to_string(common.seed),
                "config: " + config.dump()};
    }

    Json manifest() const
    {
        return {{"tool", tool_version}, {"command", command}, {"seed", common.seed}, {"config", config}};
    }

    void finish_config()
    {
        config["seed"] = common.seed;
        config["format"] = common.format;
        config["threads"] = common.threads;
    }
};

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

/// Writes a CSV body produced by the io module, or its JSON equivalent.
void write_data(const Run& run, const std::string& suffix, const std::string& csv_text, Json extra = Json::object())
{
    if (run.common.format == "csv") {
        mfl::io::write_atomic(run.path(suffix + ".csv"), csv_text);
        return;
    }
    const auto data = mfl::io::parse_csv(csv_text, suffix);
    Json rows = Json::array();
    for (const auto& r : data.rows) rows.push_back(list_json(r));
    Json j = run.manifest();
    for (auto& [k, v] : extra.items()) j[k] = v;
    j["columns"] = data.header;
    j["rows"] = rows;
    mfl::io::write_atomic(run.path(suffix + ".json"), j.dump(1) + "\n");
}

void write_json(const Run& run, const std::string& suffix, const Json& body)
{
    Json j = run.manifest();
    for (const auto& [k, v] : body.items()) j[k] = v;
    mfl::io::write_atomic(run.path(suffix + ".json"), j.dump(1) + "\n");
}

mfl::VelocitySeries read_series(const fs::path& path)
{
    if (path.extension() != ".json") return mfl::io::read_series_csv(path);
    const std::string text = mfl::io::read_file(path);
    mfl::require(!text.empty(), mfl::ErrorKind::io, path.string() + ": file is empty");
    mfl::VelocitySeries s;
    try {
        const Json j = Json::parse(text);
        mfl::require(j.at("columns") == Json::array({"t", "v"}), mfl::ErrorKind::io,
                     path.string() + ": expected columns t, v");
        for (const auto& r : j.at("rows")) {
            s.t.push_back(r.at(0).get<double>());
            s.v.push_back(r.at(1).get<double>());
        }
    } catch (const Json::exception& e) {
        mfl::fail(mfl::ErrorKind::io, path.string() + ": " + e.what());
    }
    mfl::require(!s.v.empty(), mfl::ErrorKind::io, path.string() + ": file has no data rows");
    s.generator = "file:" + path.filename().string();
    s.validate();
    return s;
}

// ---------------------------------------------------------------------------
// cantor

struct CantorArgs {
    int pieces = 2;
    double ratio = 1.0 / 3.0;
    int level = 10;
    std::string spec_file;
    int box_min = 0;
    int box_max = 0;
};

int run_cantor(Run& run, const CantorArgs& a)
{
    mfl::IfsSpec spec = a.spec_file.empty() ? mfl::IfsSpec::uniform(a.pieces, a.ratio)
                                            : mfl::io::read_ifs(a.spec_file);
    spec.validate();
    if (a.spec_file.empty()) {
        run.config["pieces"] = a.pieces;
        run.config["ratio"] = a.ratio;
    } else {
        run.config["spec"] = a.spec_file;
    }
    run.config["level"] = a.level;
    run.config["box-min"] = a.box_min;
    run.config["box-max"] = a.box_max;
    run.finish_config();

    const auto cover = mfl::build_cover(spec, a.level);
    const auto similarity = mfl::similarity_dimension(spec);

    Json report = {{"ifs", mfl::io::to_json(spec)},
                   {"level", a.level},
                   {"intervals", cover.intervals.size()},
                   {"similarity", mfl::io::to_json(similarity)}};
    mfl::GridRange grid = mfl::default_grid(a.level);
    if (a.box_min > 0) grid.min_exponent = a.box_min;
    if (a.box_max > 0) grid.max_exponent = a.box_max;
    std::optional<mfl::DimensionEstimate> box;
    if (grid.max_exponent - grid.min_exponent + 1 >= 4) {
        box = mfl::box_counting_dimension(cover, grid);
        report["box_counting"] = mfl::io::to_json(*box);
    } else {
        report["box_counting"] = nullptr;
        report["box_counting_note"] = "level too shallow for a box-counting fit";
    }

    write_data(run, ".cover", mfl::io::cover_csv(cover, run.comments()));
    write_json(run, ".dimension", report);

    std::cout << "similarity dimension " << mfl::io::format_double(similarity.value) << "\n";
    if (box)
        std::cout << "box-counting dimension " << mfl::io::format_double(box->value) << " +/- "
                  << mfl::io::format_double(box->stderr) << " (2^-" << grid.min_exponent << " .. 2^-"
                  << grid.max_exponent << ")\n";
    std::cout << "cover: " << cover.intervals.size() << " intervals at level " << a.level << "\n";
    return exit_ok;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
    std::string generator = "brownian";
    std::size_t n = std::size_t{1} << 16;
    double v0 = 1.0;
    double tau0 = 1.0;
    std::string cascade = "deterministic";
    std::string weights = "0.7,0.3";
    int branching = 0;
    int depth = 12;
    double lognormal_mu = 0.0;
    double lognormal_sigma = 0.3;
    int samples_per_cell = 1;
    int pieces = 2;
    double ratio = 1.0 / 3.0;
    std::string ifs_file;
    double coupling = 0.005;
    int steps_per_tau0 = 16;
    std::size_t members = 1;
    std::string q_list = "0,1,2,3,4,5,6";
};

int run_generate(Run& run, const GenerateArgs& a)
{
    auto& cfg = run.config;
    cfg["generator"] = a.generator;
    cfg["n"] = a.n;
    cfg["v0"] = a.v0;
    cfg["members"] = a.members;
    const auto q_grid = parse_list(a.q_list, "--q-list");
    cfg["q-list"] = list_json(q_grid);

    Json spec_json;
    Json oracle = nullptr;
    std::function<mfl::VelocitySeries(std::uint64_t, std::size_t)> make;

    if (a.generator == "brownian") {
        spec_json = {{"generator", "brownian"}};
        make = [&](std::uint64_t seed, std::size_t) { return mfl::brownian_baseline(a.v0, a.n, seed); };
    } else if (a.generator == "subordinated") {
        mfl::CascadeSpec spec;
        spec.depth = a.depth;
        cfg["tau0"] = a.tau0;
        cfg["cascade"] = a.cascade;
        cfg["depth"] = a.depth;
        cfg["samples-per-cell"] = a.samples_per_cell;
        if (a.cascade == "deterministic") {
            const auto w = parse_list(a.weights, "--weights");
            spec.weights = mfl::DeterministicWeights{w};
            spec.branching = a.branching > 0 ? a.branching : static_cast<int>(w.size());
            cfg["weights"] = list_json(w);
        } else {
            spec.weights = mfl::LogNormalWeights{a.lognormal_mu, a.lognormal_sigma};
            spec.branching = a.branching > 0 ? a.branching : 2;
            cfg["lognormal-mu"] = a.lognormal_mu;
            cfg["lognormal-sigma"] = a.lognormal_sigma;
        }
        cfg["branching"] = spec.branching;
        spec.validate(mfl::resource_cap());

        spec_json = {{"generator", "subordinated"}, {"branching", spec.branching}, {"depth", spec.depth},
                     {"cascade", a.cascade}};
        if (spec.deterministic()) {
            spec_json["weights"] = cfg["weights"];
            Json zq = Json::array();
            for (double q : q_grid) zq.push_back({{"q", q}, {"xi", mfl::analytic_zeta(spec, q / 2.0)}});
            // increments over a lag tau scale with the cascade measure of tau to the power q/2
            oracle = {{"relation", "xi(q) = zeta(q/2) = 1 - log_b sum w^(q/2)"}, {"values", zq}};
        }
        const double period = std::pow(static_cast<double>(spec.branching), spec.depth) * a.samples_per_cell;
        const double dt = a.tau0 / period;
        spec_json["recommended_fit"] = {{"fit_min", 4.0 * dt}, {"fit_max", a.tau0 / 8.0}};
        make = [&, spec](std::uint64_t seed, std::size_t) mutable {
            spec.seed = seed;
            return mfl::synthesize_subordinated(spec, a.v0, a.tau0, a.n, seed, {a.samples_per_cell});
        };
    } else if (a.generator == "inversion") {
        const mfl::IfsSpec ifs = a.ifs_file.empty() ? mfl::IfsSpec::uniform(a.pieces, a.ratio)
                                                    : mfl::io::read_ifs(a.ifs_file);
        if (a.ifs_file.empty()) {
            cfg["pieces"] = a.pieces;
            cfg["ratio"] = a.ratio;
        } else {
            cfg["ifs"] = a.ifs_file;
        }
        cfg["tau0"] = a.tau0;
        cfg["coupling"] = a.coupling;
        cfg["steps-per-tau0"] = a.steps_per_tau0;
        spec_json = {{"generator", "inversion"}, {"ifs", mfl::io::to_json(ifs)}, {"coupling", a.coupling},
                     {"steps_per_tau0", a.steps_per_tau0}};
        make = [&, ifs](std::uint64_t seed, std::size_t) {
            return mfl::synthesize_inversion_jumps(ifs, a.v0, a.tau0, a.n, seed, {a.steps_per_tau0, a.coupling});
        };
    } else {
        mfl::fail(mfl::ErrorKind::validation, "unknown generator: " + a.generator);
    }
    run.finish_config();

    std::vector<mfl::VelocitySeries> members;
    if (a.members == 1) {
        members.push_back(make(run.common.seed, 0));
    } else {
        members = mfl::generate_ensemble(a.members, run.common.seed, run.common.threads, make);
    }

    Json manifest = mfl::io::ensemble_manifest(a.generator, spec_json, run.common.seed, members);
    manifest["zeta_oracle"] = oracle;
    Json files = Json::array();
    for (std::size_t i = 0; i < members.size(); ++i) {
        const std::string suffix = members.size() == 1 ? std::string{} : "." + std::to_string(i);
        auto comments = run.comments();
        comments.push_back("member: " + std::to_string(i) + " seed: " + std::to_string(members[i].seed));
        write_data(run, suffix, mfl::io::series_csv(members[i], comments));
        files.push_back(run.path(suffix + "." + run.common.format).filename().string());
    }
    manifest["files"] = files;
    write_json(run, ".manifest", manifest);

    std::cout << "generated " << members.size() << " series of " << members.front().size() << " samples ("
              << a.generator << ")\n";
    return exit_ok;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    double T0 = 1.0;
    double sigma = 0.5;
    double v0 = 1.0;
    double dt = 1e-3;
    int steps = 1000;
    std::size_t paths = 10000;
    std::string q_list = "1,2";
    std::string checkpoints;
    std::string interpretation = "ito";
};

int run_simulate(Run& run, const SimulateArgs& a)
{
    mfl::LangevinParams p;
    p.T0 = a.T0;
    p.sigma = a.sigma;
    p.v0 = a.v0;
    p.dt = a.dt;
    p.steps = a.steps;
    p.seed = run.common.seed;
    p.validate();

    const auto q = parse_list(a.q_list, "--q-list");
    std::vector<int> checkpoints;
    for (double c : parse_list(a.checkpoints, "--checkpoints")) {
        mfl::require(c >= 0 && c <= a.steps && c == std::floor(c), mfl::ErrorKind::validation,
                     "--checkpoints are step indices in [0, steps]");
        checkpoints.push_back(static_cast<int>(c));
    }
    if (checkpoints.empty()) checkpoints.push_back(a.steps);
    const auto interp =
        a.interpretation == "ito" ? mfl::Interpretation::ito : mfl::Interpretation::stratonovich;

    auto& cfg = run.config;
    cfg["T0"] = a.T0;
    cfg["sigma"] = a.sigma;
    cfg["v0"] = a.v0;
    cfg["dt"] = a.dt;
    cfg["steps"] = a.steps;
    cfg["paths"] = a.paths;
    cfg["q-list"] = list_json(q);
    cfg["checkpoints"] = list_json(std::vector<double>(checkpoints.begin(), checkpoints.end()));
    cfg["interpretation"] = a.interpretation;
    run.finish_config();

    const auto path = mfl::integrate_langevin(p, interp);
    write_data(run, ".trajectory", mfl::io::trajectory_csv(path, run.comments()));

    Json body = {{"interpretation", a.interpretation}};
    if (a.paths > 0) {
        mfl::require(interp == mfl::Interpretation::ito, mfl::ErrorKind::unsupported,
                     "ensemble moments are computed for the Ito interpretation only");
        const auto moments = mfl::langevin_ensemble(p, a.paths, checkpoints, q, run.common.threads);
        Json theory = Json::array();
        for (const auto& m : moments) theory.push_back(mfl::langevin_moment(p, m.q, m.t, interp));
        body["moments"] = mfl::io::to_json(moments);
        body["closed_form"] = theory;
        for (std::size_t i = 0; i < moments.size(); ++i)
            std::cout << "E[v^" << mfl::io::format_double(moments[i].q) << "](t=" << mfl::io::format_double(moments[i].t)
                      << ") = " << mfl::io::format_double(moments[i].mean) << " +/- "
                      << mfl::io::format_double(moments[i].stderr) << "  closed form "
                      << mfl::io::format_double(theory[i].get<double>()) << "\n";
    }
    write_json(run, ".moments", body);
    return exit_ok;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
    std::string input;
    std::string q_list = "0,1,2,3,4,5,6";
    std::string tau_list;
    double fit_min = 0.0;
    double fit_max = 0.0;
};

int run_analyze(Run& run, const AnalyzeArgs& a)
{
    const auto series = read_series(a.input);
    const auto q = parse_list(a.q_list, "--q-list");
    mfl::require(!q.empty(), mfl::ErrorKind::validation, "--q-list is empty");
    auto tau = parse_list(a.tau_list, "--tau-list");
    if (tau.empty()) tau = mfl::dyadic_tau_grid(series);
    mfl::FitRange range = mfl::default_fit_range(series);
    if (a.fit_min > 0) range.tau_min = a.fit_min;
    if (a.fit_max > 0) range.tau_max = a.fit_max;
    mfl::require(range.tau_min < range.tau_max, mfl::ErrorKind::validation, "fit range is empty");

    auto& cfg = run.config;
    cfg["input"] = a.input;
    cfg["q-list"] = list_json(q);
    if (!a.tau_list.empty()) cfg["tau-list"] = list_json(tau);
    cfg["fit-min"] = range.tau_min;
    cfg["fit-max"] = range.tau_max;
    run.finish_config();

    const auto table = mfl::structure_functions(series, q, tau, run.common.threads);
    const auto fit = mfl::fit_exponents(table, range);

    Json body = mfl::io::to_json(fit);
    body["samples"] = series.size();
    if (fit.curve().q.size() >= 3)
        body["concave"] = mfl::concavity_report(fit).concave;
    else
        body["concave"] = nullptr;
    bool has2 = false, has4 = false;
    for (double v : q) {
        has2 |= v == 2.0;
        has4 |= v == 4.0;
    }
    if (has2 && has4) {
        Json flat = Json::array();
        for (double f : mfl::flatness_curve(table)) flat.push_back(std::isfinite(f) ? Json(f) : Json(nullptr));
        body["flatness"] = {{"tau", list_json(table.tau)}, {"value", flat}};
    }

    write_data(run, ".table", mfl::io::table_csv(table, run.comments()));
    write_data(run, ".plot", mfl::io::plot_csv(table, fit, run.comments()));
    write_json(run, ".fit", body);

    for (std::size_t i = 0; i < fit.q.size(); ++i) {
        std::cout << "xi(" << mfl::io::format_double(fit.q[i]) << ") = ";
        if (fit.ok[i])
            std::cout << mfl::io::format_double(fit.xi[i]) << " +/- " << mfl::io::format_double(fit.stderr[i]) << "\n";
        else
            std::cout << "fit failed\n";
    }
    return exit_ok;
}

// ---------------------------------------------------------------------------
// spectrum

struct SpectrumArgs {
    std::string input;
    std::string direction = "xi-to-D";
    double h_min = 0.0;
    double h_max = 1.5;
    std::size_t h_points = 301;
    double q_min = -8.0;
    double q_max = 8.0;
    double q_step = 0.25;
    double floor = mfl::default_spectrum_floor;
    bool no_refine = false;
};

int run_spectrum(Run& run, const SpectrumArgs& a)
{
    auto& cfg = run.config;
    cfg["input"] = a.input;
    cfg["direction"] = a.direction;
    cfg["no-refine"] = a.no_refine;
    std::string csv;
    if (a.direction == "xi-to-D") {
        const std::string text = mfl::io::read_file(a.input);
        mfl::require(!trim(text).empty(), mfl::ErrorKind::io, a.input + ": file is empty");
        mfl::ExponentCurve curve;
        if (fs::path(a.input).extension() == ".json") {
            Json j;
            try {
                j = Json::parse(text);
            } catch (const Json::exception& e) {
                mfl::fail(mfl::ErrorKind::io, a.input + ": " + e.what());
            }
            curve = mfl::io::fit_from_json(j).curve();
        } else {
            const auto data = mfl::io::parse_csv(text, a.input);
            mfl::require(data.header == std::vector<std::string>{"q", "xi"}, mfl::ErrorKind::io,
                         a.input + ": expected columns q, xi");
            for (const auto& r : data.rows) {
                curve.q.push_back(r[0]);
                curve.xi.push_back(r[1]);
            }
        }
        mfl::require(curve.q.size() >= 2, mfl::ErrorKind::validation, a.input + ": need at least two exponents");
        cfg["h-min"] = a.h_min;
        cfg["h-max"] = a.h_max;
        cfg["h-points"] = a.h_points;
        cfg["floor"] = a.floor;
        run.finish_config();
        const auto h = mfl::h_grid(a.h_min, a.h_max, a.h_points);
        csv = mfl::io::spectrum_csv(mfl::legendre_D_from_xi(curve, h, a.floor, !a.no_refine), run.comments());
    } else if (a.direction == "D-to-xi") {
        const auto spectrum = mfl::io::read_spectrum_csv(a.input);
        mfl::require(a.q_step > 0 && a.q_max >= a.q_min, mfl::ErrorKind::validation, "invalid q grid");
        std::vector<double> q;
        const auto count = static_cast<long>(std::floor((a.q_max - a.q_min) / a.q_step + 1e-9));
        for (long i = 0; i <= count; ++i) q.push_back(a.q_min + a.q_step * static_cast<double>(i));
        cfg["q-min"] = a.q_min;
        cfg["q-max"] = a.q_max;
        cfg["q-step"] = a.q_step;
        run.finish_config();
        csv = mfl::io::curve_csv(mfl::legendre_xi_from_D(spectrum, q, !a.no_refine), run.comments());
    } else {
        mfl::fail(mfl::ErrorKind::validation, "unknown direction: " + a.direction);
    }
    write_data(run, "", csv);
    std::cout << "wrote " << run.path("." + run.common.format).string() << "\n";
    return exit_ok;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
    bool json = false;
    double perturb = 1.0;
};

int run_verify(Run& run, const VerifyArgs& a)
{
    mfl::require(a.perturb > 0 && std::isfinite(a.perturb), mfl::ErrorKind::validation, "--perturb must be positive");
    run.config["perturb"] = a.perturb;
    run.config["json"] = a.json;
    run.finish_config();

    mfl::IdentityOptions options;
    options.conservation_T_scale = a.perturb;
    options.seed = run.common.seed;
    const auto results = mfl::run_identity_suite(options);
    bool all = true;
    for (const auto& r : results) all = all && r.passed;

    Json checks = Json::array();
    for (const auto& r : results)
        checks.push_back({{"name", r.name}, {"value", r.value}, {"tolerance", r.tolerance}, {"passed", r.passed}});
    Json report = run.manifest();
    report["checks"] = checks;
    report["passed"] = all;
    report["simd"] = std::string(mfl::simd::isa_name(mfl::simd::active_isa()));

    if (a.json) {
        std::cout << report.dump(1) << "\n";
    } else {
        for (const auto& r : results)
            std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << mfl::io::format_double(r.value)
                      << " (tolerance " << mfl::io::format_double(r.tolerance) << ")\n";
        std::cout << (all ? "all identities hold\n" : "identity check failed\n");
    }
    if (!run.common.out.empty()) mfl::io::write_atomic(run.path(".json"), report.dump(1) + "\n");
    return all ? exit_ok : exit_numeric;
}

int exit_code_for(mfl::ErrorKind kind)
{
    switch (kind) {
    case mfl::ErrorKind::numeric:
    case mfl::ErrorKind::resource_limit:
        return exit_numeric;
    default:
        return exit_usage;
    }
}

int main_impl(int argc, char** argv)
{
    std::vector<std::string> args(argv, argv + argc);
    try {
        args = expand_config(std::move(args));
    } catch (const mfl::Error& e) {
        std::cerr << "mfl: " << e.what() << "\n";
        return exit_code_for(e.kind());
    }

    CLI::App app{"Multifractal laboratory: Cantor sets, intermittent series, structure-function analysis", "mfl"};
    app.set_version_flag("--version", tool_version);
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    Common common;

    CantorArgs cantor;
    auto* c_cantor = app.add_subcommand("cantor", "Build an IFS cover and estimate its dimension");
    add_common(c_cantor, common);
    c_cantor->add_option("--pieces", cantor.pieces, "Number of equal pieces")->capture_default_str();
    c_cantor->add_option("--ratio", cantor.ratio, "Contraction ratio of each piece")->capture_default_str();
    c_cantor->add_option("--level", cantor.level, "Construction level")->check(CLI::Range(0, 62))->capture_default_str();
    c_cantor->add_option("--spec", cantor.spec_file, "IFS JSON file (replaces --pieces/--ratio)");
    c_cantor->add_option("--box-min", cantor.box_min, "Smallest box exponent (0: default grid)");
    c_cantor->add_option("--box-max", cantor.box_max, "Largest box exponent (0: default grid)");

    GenerateArgs gen;
    auto* c_gen = app.add_subcommand("generate", "Synthesize velocity series");
    add_common(c_gen, common);
    c_gen->add_option("--generator", gen.generator)
        ->check(CLI::IsMember({"subordinated", "inversion", "brownian"}))
        ->capture_default_str();
    c_gen->add_option("--n", gen.n, "Samples per series")->capture_default_str();
    c_gen->add_option("--v0", gen.v0, "Velocity scale")->capture_default_str();
    c_gen->add_option("--tau0", gen.tau0, "Integral time")->capture_default_str();
    c_gen->add_option("--cascade", gen.cascade)->check(CLI::IsMember({"deterministic", "lognormal"}))->capture_default_str();
    c_gen->add_option("--weights", gen.weights, "Comma-separated cascade weights")->capture_default_str();
    c_gen->add_option("--branching", gen.branching, "Cascade branching (default: number of weights)");
    c_gen->add_option("--depth", gen.depth, "Cascade depth")->capture_default_str();
    c_gen->add_option("--lognormal-mu", gen.lognormal_mu)->capture_default_str();
    c_gen->add_option("--lognormal-sigma", gen.lognormal_sigma)->capture_default_str();
    c_gen->add_option("--samples-per-cell", gen.samples_per_cell)->capture_default_str();
    c_gen->add_option("--pieces", gen.pieces, "Inversion generator: IFS pieces")->capture_default_str();
    c_gen->add_option("--ratio", gen.ratio, "Inversion generator: IFS ratio")->capture_default_str();
    c_gen->add_option("--ifs", gen.ifs_file, "Inversion generator: IFS JSON file");
    c_gen->add_option("--coupling", gen.coupling, "Inversion generator: jump coupling")->capture_default_str();
    c_gen->add_option("--steps-per-tau0", gen.steps_per_tau0)->capture_default_str();
    c_gen->add_option("--members", gen.members, "Ensemble size")->check(CLI::Range(std::size_t{1}, std::size_t{100000}));
    c_gen->add_option("--q-list", gen.q_list, "Moments for the exponent oracle")->capture_default_str();

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Integrate the stochastic relaxation equation");
    add_common(c_sim, common);
    c_sim->add_option("--T0", sim.T0)->capture_default_str();
    c_sim->add_option("--sigma", sim.sigma)->capture_default_str();
    c_sim->add_option("--v0", sim.v0)->capture_default_str();
    c_sim->add_option("--dt", sim.dt)->capture_default_str();
    c_sim->add_option("--steps", sim.steps)->capture_default_str();
    c_sim->add_option("--paths", sim.paths, "Ensemble size for moments (0: single path)")->capture_default_str();
    c_sim->add_option("--q-list", sim.q_list)->capture_default_str();
    c_sim->add_option("--checkpoints", sim.checkpoints, "Step indices for moments (default: last step)");
    c_sim->add_option("--interpretation", sim.interpretation)
        ->check(CLI::IsMember({"ito", "stratonovich"}))
        ->capture_default_str();

    AnalyzeArgs an;
    auto* c_an = app.add_subcommand("analyze", "Structure functions and scaling exponents of a series");
    add_common(c_an, common);
    c_an->add_option("--input", an.input, "Series file (t,v CSV or JSON)")->required();
    c_an->add_option("--q-list", an.q_list)->capture_default_str();
    c_an->add_option("--tau-list", an.tau_list, "Lags (default: dyadic up to half the record)");
    c_an->add_option("--fit-min", an.fit_min, "Smallest fitted lag (default: 4 dt)");
    c_an->add_option("--fit-max", an.fit_max, "Largest fitted lag (default: span / 8)");

    SpectrumArgs sp;
    auto* c_sp = app.add_subcommand("spectrum", "Legendre transform between xi(q) and D(h)");
    add_common(c_sp, common);
    c_sp->add_option("--input", sp.input, "Fit JSON or q,xi CSV (xi-to-D); h,D CSV (D-to-xi)")->required();
    c_sp->add_option("--direction", sp.direction)->check(CLI::IsMember({"xi-to-D", "D-to-xi"}))->capture_default_str();
    c_sp->add_option("--h-min", sp.h_min)->capture_default_str();
    c_sp->add_option("--h-max", sp.h_max)->capture_default_str();
    c_sp->add_option("--h-points", sp.h_points)->capture_default_str();
    c_sp->add_option("--q-min", sp.q_min)->capture_default_str();
    c_sp->add_option("--q-max", sp.q_max)->capture_default_str();
    c_sp->add_option("--q-step", sp.q_step)->capture_default_str();
    c_sp->add_option("--floor", sp.floor, "Lower clip for D(h)")->capture_default_str();
    c_sp->add_flag("--no-refine", sp.no_refine, "Plain grid minimum, no parabolic polish");

    VerifyArgs ver;
    auto* c_ver = app.add_subcommand("verify", "Run the closed-form identity suite");
    add_common(c_ver, common);
    c_ver->add_flag("--json", ver.json, "Machine-readable report on stdout");
    c_ver->add_option("--perturb", ver.perturb, "Scale factor on T in the conservation checks")->capture_default_str();

    try {
        std::vector<std::string> rest(args.begin() + 1, args.end());
        std::reverse(rest.begin(), rest.end());
        app.parse(rest);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        Run run;
        run.common = common;
        if (c_cantor->parsed()) return run.command = "cantor", run_cantor(run, cantor);
        if (c_gen->parsed()) return run.command = "generate", run_generate(run, gen);
        if (c_sim->parsed()) return run.command = "simulate", run_simulate(run, sim);
        if (c_an->parsed()) return run.command = "analyze", run_analyze(run, an);
        if (c_sp->parsed()) return run.command = "spectrum", run_spectrum(run, sp);
        if (c_ver->parsed()) return run.command = "verify", run_verify(run, ver);
    } catch (const mfl::Error& e) {
        std::cerr << "mfl: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::bad_alloc&) {
        std::cerr << "mfl: out of memory\n";
        return exit_numeric;
    }
    return exit_usage;
}

}  // namespace

int main(int argc, char** argv)
{
    try {
        return main_impl(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "mfl: " << e.what() << "\n";
        return exit_numeric;
    }
}
