#include "mfl/io.hpp"

#include "mfl/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace mfl::io {

namespace fs = std::filesystem;

void write_atomic(const fs::path& path, std::string_view content)
{
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(static_cast<bool>(out), ErrorKind::io, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        require(static_cast<bool>(out), ErrorKind::io, "write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        fail(ErrorKind::io, "cannot rename into " + path.string());
    }
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_double(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

Json to_json(const IfsSpec& spec)
{
    Json pieces = Json::array();
    for (const auto& p : spec.pieces) pieces.push_back({p.offset, p.ratio, p.weight});
    return {{"label", spec.label}, {"pieces", pieces}};
}

IfsSpec ifs_from_json(const Json& j)
{
    IfsSpec spec;
    try {
        for (const auto& [key, value] : j.items())
            require(key == "label" || key == "pieces", ErrorKind::validation, "unknown IFS key: " + key);
        spec.label = j.value("label", std::string{});
        for (const auto& p : j.at("pieces")) {
            require(p.is_array() && p.size() == 3, ErrorKind::validation, "each piece is [offset, ratio, weight]");
            spec.pieces.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
        }
    } catch (const Json::exception& e) {
        fail(ErrorKind::validation, std::string("malformed IFS JSON: ") + e.what());
    }
    spec.validate();
    return spec;
}

IfsSpec read_ifs(const fs::path& path)
{
    const std::string text = read_file(path);
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::exception& e) {
        fail(ErrorKind::validation, path.string() + ": " + e.what());
    }
    return ifs_from_json(j);
}

Json to_json(const DimensionEstimate& est)
{
    Json j = {{"value", est.value},
              {"stderr", est.stderr},
              {"method", est.method == DimensionMethod::similarity ? "similarity" : "box-counting"}};
    if (est.method == DimensionMethod::box_counting) j["levels_used"] = {est.level_min, est.level_max};
    return j;
}

namespace {

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

double number_or_nan(const Json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

}  // namespace

Json to_json(const ScalingFit& fit)
{
    Json q = Json::array(), xi = Json::array(), se = Json::array(), r2 = Json::array(), pts = Json::array();
    for (std::size_t i = 0; i < fit.q.size(); ++i) {
        q.push_back(fit.q[i]);
        xi.push_back(number_or_null(fit.xi[i]));
        se.push_back(number_or_null(fit.stderr[i]));
        r2.push_back(number_or_null(fit.r2[i]));
        pts.push_back(fit.points[i]);
    }
    return {{"q", q}, {"xi", xi}, {"stderr", se}, {"r2", r2}, {"points", pts},
            {"fit_min", fit.range.tau_min}, {"fit_max", fit.range.tau_max}};
}

ScalingFit fit_from_json(const Json& j)
{
    ScalingFit fit;
    try {
        const auto& q = j.at("q");
        const auto& xi = j.at("xi");
        require(q.size() == xi.size(), ErrorKind::validation, "fit JSON: q and xi differ in length");
        const bool has_se = j.contains("stderr");
        const bool has_r2 = j.contains("r2");
        for (std::size_t i = 0; i < q.size(); ++i) {
            fit.q.push_back(q[i].get<double>());
            fit.xi.push_back(number_or_nan(xi[i]));
            fit.stderr.push_back(has_se ? number_or_nan(j["stderr"][i]) : 0.0);
            fit.r2.push_back(has_r2 ? number_or_nan(j["r2"][i]) : std::nan(""));
            fit.points.push_back(j.contains("points") ? j["points"][i].get<std::size_t>() : 0);
            fit.ok.push_back(std::isfinite(fit.xi.back()));
        }
        fit.range = {j.value("fit_min", 0.0), j.value("fit_max", 0.0)};
    } catch (const Json::exception& e) {
        fail(ErrorKind::validation, std::string("malformed fit JSON: ") + e.what());
    }
    return fit;
}

Json to_json(const std::vector<MomentSummary>& moments)
{
    Json arr = Json::array();
    for (const auto& m : moments)
        arr.push_back({{"q", m.q}, {"t", m.t}, {"mean", m.mean}, {"stderr", m.stderr}, {"n", m.n}});
    return arr;
}

Json ensemble_manifest(std::string_view generator, const Json& spec, std::uint64_t seed,
                       std::span<const VelocitySeries> members)
{
    Json list = Json::array();
    for (std::size_t i = 0; i < members.size(); ++i)
        list.push_back({{"index", i}, {"seed", members[i].seed}, {"samples", members[i].size()}});
    return {{"generator", generator}, {"spec", spec}, {"seed", seed}, {"members", list}};
}

namespace {

void put_comments(std::string& out, const Comments& comments)
{
    for (const auto& c : comments) {
        out += "# ";
        out += c;
        out += '\n';
    }
}

void put_row(std::string& out, std::initializer_list<double> values)
{
    bool first = true;
    for (double v : values) {
        if (!first) out += ',';
        out += format_double(v);
        first = false;
    }
    out += '\n';
}

}  // namespace

std::string cover_csv(const Cover& cover, const Comments& comments)
{
    std::string out;
    put_comments(out, comments);
    out += "level,left,right,mass\n";
    for (const auto& iv : cover.intervals) {
        out += std::to_string(cover.level);
        out += ',';
        put_row(out, {iv.left, iv.right, iv.mass});
    }
    return out;
}

std::string series_csv(const VelocitySeries& series, const Comments& comments)
{
    std::string out;
    out.reserve(series.size() * 40);
    put_comments(out, comments);
    out += "t,v\n";
    for (std::size_t i = 0; i < series.size(); ++i) put_row(out, {series.t[i], series.v[i]});
    return out;
}

std::string trajectory_csv(const Trajectory& trajectory, const Comments& comments)
{
    std::string out;
    put_comments(out, comments);
    out += "t,v\n";
    for (std::size_t i = 0; i < trajectory.t.size(); ++i) put_row(out, {trajectory.t[i], trajectory.v[i]});
    return out;
}

std::string table_csv(const StructureFunctionTable& table, const Comments& comments)
{
    std::string out;
    put_comments(out, comments);
    out += "q,tau,S,count\n";
    for (std::size_t qi = 0; qi < table.q.size(); ++qi)
        for (std::size_t ti = 0; ti < table.tau.size(); ++ti)
            put_row(out, {table.q[qi], table.tau[ti], table.at(qi, ti), static_cast<double>(table.count_at(qi, ti))});
    return out;
}

std::string spectrum_csv(const Spectrum& spectrum, const Comments& comments)
{
    std::string out;
    put_comments(out, comments);
    out += "h,D\n";
    for (std::size_t i = 0; i < spectrum.h.size(); ++i) put_row(out, {spectrum.h[i], spectrum.D[i]});
    return out;
}

std::string curve_csv(const ExponentCurve& curve, const Comments& comments)
{
    std::string out;
    put_comments(out, comments);
    out += "q,xi\n";
    for (std::size_t i = 0; i < curve.q.size(); ++i) put_row(out, {curve.q[i], curve.xi[i]});
    return out;
}

std::string plot_csv(const StructureFunctionTable& table, const ScalingFit& fit, const Comments& comments)
{
    std::string out;
    put_comments(out, comments);
    out += "q,tau,log_tau,log_S,fit_log_S\n";
    for (std::size_t qi = 0; qi < table.q.size() && qi < fit.q.size(); ++qi) {
        if (!fit.ok[qi]) continue;
        // intercept from the fitted cells, for the overlay line
        double sx = 0.0, sy = 0.0;
        std::size_t n = 0;
        for (std::size_t ti = 0; ti < table.tau.size(); ++ti) {
            const double tau = table.tau[ti];
            const double s = table.at(qi, ti);
            if (tau < fit.range.tau_min * (1 - 1e-9) || tau > fit.range.tau_max * (1 + 1e-9)) continue;
            if (table.count_at(qi, ti) == 0 || !(s > 0.0)) continue;
            sx += std::log(tau);
            sy += std::log(s);
            ++n;
        }
        const double intercept = n > 0 ? (sy - fit.xi[qi] * sx) / static_cast<double>(n) : 0.0;
        for (std::size_t ti = 0; ti < table.tau.size(); ++ti) {
            const double s = table.at(qi, ti);
            if (table.count_at(qi, ti) == 0 || !(s > 0.0)) continue;
            const double lt = std::log(table.tau[ti]);
            put_row(out, {table.q[qi], table.tau[ti], lt, std::log(s), intercept + fit.xi[qi] * lt});
        }
    }
    return out;
}

CsvData parse_csv(std::string_view text, std::string_view source)
{
    CsvData data;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;

        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (data.header.empty()) {
            for (auto f : fields) data.header.emplace_back(f);
            continue;
        }
        require(fields.size() == data.header.size(), ErrorKind::io,
                std::string(source) + ":" + std::to_string(line_no) + ": wrong number of columns");
        std::vector<double> row;
        for (auto f : fields) {
            double value = 0.0;
            const auto res = std::from_chars(f.data(), f.data() + f.size(), value);
            require(res.ec == std::errc{} && res.ptr == f.data() + f.size(), ErrorKind::io,
                    std::string(source) + ":" + std::to_string(line_no) + ": not a number: " + std::string(f));
            row.push_back(value);
        }
        data.rows.push_back(std::move(row));
    }
    return data;
}

namespace {

CsvData read_csv_expect(const fs::path& path, std::initializer_list<std::string_view> columns)
{
    const CsvData data = parse_csv(read_file(path), path.string());
    require(!data.header.empty() && !data.rows.empty(), ErrorKind::io, path.string() + ": file has no data rows");
    std::vector<std::string> expected(columns.begin(), columns.end());
    require(data.header == expected, ErrorKind::io, path.string() + ": unexpected column header");
    return data;
}

}  // namespace

VelocitySeries read_series_csv(const fs::path& path)
{
    const CsvData data = read_csv_expect(path, {"t", "v"});
    VelocitySeries s;
    s.generator = "file:" + path.filename().string();
    s.t.reserve(data.rows.size());
    s.v.reserve(data.rows.size());
    for (const auto& r : data.rows) {
        s.t.push_back(r[0]);
        s.v.push_back(r[1]);
    }
    s.validate();
    return s;
}

Spectrum read_spectrum_csv(const fs::path& path)
{
    const CsvData data = read_csv_expect(path, {"h", "D"});
    Spectrum sp;
    for (const auto& r : data.rows) {
        sp.h.push_back(r[0]);
        sp.D.push_back(r[1]);
    }
    return sp;
}

}  // namespace mfl::io
