#pragma once

// File formats: IFS specs as JSON, covers/series/tables/spectra as CSV with
// optional '#' comment lines ahead of the column header, fits and summaries as
// JSON. Doubles are written in shortest round-trip form.

#include "mfl/analysis.hpp"
#include "mfl/cascade.hpp"
#include "mfl/fractal.hpp"
#include "mfl/langevin.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mfl::io {

using Json = nlohmann::ordered_json;

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);
/// Whole file; throws io error naming the file when it cannot be opened.
std::string read_file(const std::filesystem::path& path);

std::string format_double(double x);

Json to_json(const IfsSpec& spec);
IfsSpec ifs_from_json(const Json& j);
IfsSpec read_ifs(const std::filesystem::path& path);

Json to_json(const DimensionEstimate& est);
Json to_json(const ScalingFit& fit);
ScalingFit fit_from_json(const Json& j);
Json to_json(const std::vector<MomentSummary>& moments);

/// Ensemble manifest: generator, spec, and the derived seed of each member.
Json ensemble_manifest(std::string_view generator, const Json& spec, std::uint64_t seed,
                       std::span<const VelocitySeries> members);

using Comments = std::vector<std::string>;

std::string cover_csv(const Cover& cover, const Comments& comments = {});
std::string series_csv(const VelocitySeries& series, const Comments& comments = {});
std::string trajectory_csv(const Trajectory& trajectory, const Comments& comments = {});
std::string table_csv(const StructureFunctionTable& table, const Comments& comments = {});
std::string spectrum_csv(const Spectrum& spectrum, const Comments& comments = {});
std::string curve_csv(const ExponentCurve& curve, const Comments& comments = {});
/// Columns q, tau, log_tau, log_S, fit_log_S for every nonempty cell of a fitted q.
std::string plot_csv(const StructureFunctionTable& table, const ScalingFit& fit, const Comments& comments = {});

/// Rows of a CSV file below its header, '#' lines skipped.
struct CsvData {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

CsvData parse_csv(std::string_view text, std::string_view source);

/// Reads a `t,v` series; throws io error naming the file when it is missing or has no rows.
VelocitySeries read_series_csv(const std::filesystem::path& path);
Spectrum read_spectrum_csv(const std::filesystem::path& path);

}  // namespace mfl::io
