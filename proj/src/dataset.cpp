// Copyright 2026 The iontk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "iontk/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "iontk/errors.hpp"
#include "iontk/io.hpp"
#include "iontk/units.hpp"

namespace iontk {

std::string_view to_string(DatasetKind kind)
{
    switch (kind) {
    case DatasetKind::Heating: return "heating";
    case DatasetKind::Charging: return "charging";
    case DatasetKind::SidebandScan: return "sideband-scan";
    case DatasetKind::PositionScan: return "position-scan";
    }
    return "?";
}

DatasetKind dataset_kind_from_string(std::string_view s)
{
    if (s == "heating")
        return DatasetKind::Heating;
    if (s == "charging")
        return DatasetKind::Charging;
    if (s == "sideband-scan" || s == "sideband")
        return DatasetKind::SidebandScan;
    if (s == "position-scan" || s == "position")
        return DatasetKind::PositionScan;
    throw ValidationError("unknown dataset kind: " + std::string(s));
}

std::optional<std::size_t> Dataset::column_index(std::string_view name) const
{
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == name)
            return i;
    return std::nullopt;
}

std::vector<double> Dataset::column(std::string_view name) const
{
    auto idx = column_index(name);
    if (!idx)
        throw ValidationError("dataset has no column " + std::string(name));
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto &r : rows)
        out.push_back(r[*idx]);
    return out;
}

namespace {

enum class Family { Time, Frequency, Angular, Length, Dimensionless, Count };

struct UnitDef {
    std::string_view name;
    double factor;
};

// First entry of each family is the SI unit written back out.
std::span<const UnitDef> units_of(Family f)
{
    static const UnitDef time[] = {{"s", 1}, {"ms", 1e-3}, {"us", 1e-6}};
    static const UnitDef freq[] = {{"Hz", 1}, {"kHz", 1e3}, {"MHz", 1e6}};
    static const UnitDef ang[] = {{"rad/s", 1},
                                  {"Hz", constants::two_pi},
                                  {"kHz", constants::two_pi * 1e3},
                                  {"MHz", constants::two_pi * 1e6}};
    static const UnitDef len[] = {{"m", 1}, {"mm", 1e-3}, {"um", 1e-6}};
    static const UnitDef none[] = {{"", 1}, {"1", 1}};
    switch (f) {
    case Family::Time: return time;
    case Family::Frequency: return freq;
    case Family::Angular: return ang;
    case Family::Length: return len;
    case Family::Dimensionless:
    case Family::Count: return none;
    }
    return none;
}

struct ColumnSpec {
    std::string_view name;
    Family family;
    bool required;
};

std::span<const ColumnSpec> schema(DatasetKind kind)
{
    static const ColumnSpec heating[] = {{"time", Family::Time, true},
                                         {"nbar", Family::Dimensionless, true},
                                         {"nbar_err", Family::Dimensionless, false}};
    static const ColumnSpec charging[] = {{"time", Family::Time, true},
                                          {"freq", Family::Frequency, true},
                                          {"err", Family::Frequency, false}};
    static const ColumnSpec sideband[] = {{"time", Family::Time, true},
                                          {"p_red", Family::Dimensionless, true},
                                          {"p_blue", Family::Dimensionless, true},
                                          {"shots", Family::Count, true},
                                          {"probe", Family::Time, false}};
    static const ColumnSpec position[] = {{"pos", Family::Length, true},
                                          {"rabi", Family::Angular, true},
                                          {"err", Family::Angular, false}};
    switch (kind) {
    case DatasetKind::Heating: return heating;
    case DatasetKind::Charging: return charging;
    case DatasetKind::SidebandScan: return sideband;
    case DatasetKind::PositionScan: return position;
    }
    return heating;
}

std::string trim(std::string_view s)
{
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

[[noreturn]] void fail(const std::string &source, std::size_t line, std::size_t col,
                       const std::string &msg)
{
    std::string where = source + ":" + std::to_string(line);
    if (col > 0)
        where += ":" + std::to_string(col);
    throw ValidationError(where + ": " + msg);
}

std::optional<double> parse_number(const std::string &s)
{
    if (s == "inf" || s == "-inf" || s == "nan")
        return std::nullopt;
    double v = 0;
    const char *b = s.data();
    const char *e = s.data() + s.size();
    if (b != e && *b == '+')
        ++b;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e || !std::isfinite(v))
        return std::nullopt;
    return v;
}

std::vector<Interval> parse_intervals(const std::string &value, const std::string &source,
                                      std::size_t line)
{
    std::vector<Interval> out;
    for (const auto &part : split(value, ';')) {
        if (part.empty())
            continue;
        auto nums = split(part, ',');
        if (nums.size() != 2)
            fail(source, line, 0, "light_on expects 'start, end' pairs separated by ';'");
        auto a = parse_number(nums[0]);
        auto b = parse_number(nums[1]);
        if (!a || !b || *b < *a)
            fail(source, line, 0, "invalid light_on interval '" + part + "'");
        out.push_back({*a, *b});
    }
    return out;
}

} // namespace

Dataset parse_dataset(std::istream &in, DatasetKind kind, const std::string &source)
{
    Dataset ds{kind, {}, {}, {}};
    const auto spec = schema(kind);
    std::vector<double> factors;
    std::vector<std::size_t> header_line_cols;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;

    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty())
            continue;
        if (t[0] == '#') {
            if (have_header)
                continue;
            auto colon = t.find(':');
            if (colon == std::string::npos)
                continue; // plain comment
            ds.metadata[trim(std::string_view(t).substr(1, colon - 1))] =
                trim(std::string_view(t).substr(colon + 1));
            continue;
        }
        auto cells = split(t, ',');
        if (!have_header) {
            for (std::size_t c = 0; c < cells.size(); ++c) {
                auto parts = split(cells[c], ':');
                if (parts.size() > 2 || parts[0].empty())
                    fail(source, lineno, c + 1, "malformed column header '" + cells[c] + "'");
                std::string name = parts[0];
                std::string unit = parts.size() == 2 ? parts[1] : "";
                if (ds.column_index(name))
                    fail(source, lineno, c + 1, "duplicate column '" + name + "'");
                auto it = std::find_if(spec.begin(), spec.end(),
                                       [&](const ColumnSpec &s) { return s.name == name; });
                if (it == spec.end()) {
                    // unknown columns are carried through unconverted
                    ds.columns.push_back({name, unit});
                    factors.push_back(1.0);
                    continue;
                }
                auto units = units_of(it->family);
                auto u = std::find_if(units.begin(), units.end(),
                                      [&](const UnitDef &d) { return d.name == unit; });
                if (u == units.end())
                    fail(source, lineno, c + 1,
                         "unit '" + unit + "' not accepted for column '" + name + "'");
                ds.columns.push_back({name, std::string(units.front().name)});
                factors.push_back(u->factor);
            }
            for (const auto &s : spec)
                if (s.required && !ds.column_index(s.name))
                    fail(source, lineno, 0,
                         "missing required column '" + std::string(s.name) + "' for " +
                             std::string(to_string(kind)) + " data");
            have_header = true;
            continue;
        }
        if (cells.size() != ds.columns.size())
            fail(source, lineno, 0,
                 "expected " + std::to_string(ds.columns.size()) + " fields, found " +
                     std::to_string(cells.size()));
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            auto v = parse_number(cells[c]);
            if (!v)
                fail(source, lineno, c + 1, "cannot parse number '" + cells[c] + "'");
            row[c] = *v * factors[c];
        }
        if (!ds.rows.empty() && !(row[0] > ds.rows.back()[0]))
            fail(source, lineno, 1,
                 "non-monotonic " + ds.columns[0].name + " at data row " +
                     std::to_string(ds.rows.size() + 1) + " (must be strictly increasing)");
        ds.rows.push_back(std::move(row));
    }
    if (!have_header)
        fail(source, lineno, 0, "missing header row");
    if (ds.columns[0].name != spec.front().name)
        fail(source, 0, 1, "first column must be '" + std::string(spec.front().name) + "'");

    if (auto it = ds.metadata.find("kind"); it != ds.metadata.end())
        if (dataset_kind_from_string(it->second) != kind)
            throw ValidationError(source + ": file declares kind '" + it->second +
                                  "', expected " + std::string(to_string(kind)));
    ds.metadata["kind"] = std::string(to_string(kind));

    if (kind == DatasetKind::Charging)
        if (auto it = ds.metadata.find("light_on"); it != ds.metadata.end())
            parse_intervals(it->second, source, 0);

    if (kind == DatasetKind::PositionScan) {
        auto it = ds.metadata.find("origin");
        if (it == ds.metadata.end())
            throw ValidationError(source +
                                  ": position scans must declare '# origin: grating' or "
                                  "'# origin: loading_hole'");
        if (it->second == "loading_hole") {
            double offset = default_grating_offset;
            if (auto o = ds.metadata.find("grating_offset_um"); o != ds.metadata.end()) {
                auto v = parse_number(o->second);
                if (!v)
                    throw ValidationError(source + ": invalid grating_offset_um");
                offset = *v * 1e-6;
            }
            for (auto &r : ds.rows)
                r[0] = offset - r[0];
            std::reverse(ds.rows.begin(), ds.rows.end());
            ds.metadata["origin"] = "grating";
            ds.metadata["origin_declared"] = "loading_hole";
        } else if (it->second != "grating") {
            throw ValidationError(source + ": unknown origin '" + it->second + "'");
        }
    }
    return ds;
}

Dataset load_dataset(const std::filesystem::path &path, DatasetKind kind)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    return parse_dataset(in, kind, path.string());
}

std::string format_dataset(const Dataset &ds)
{
    std::ostringstream out;
    for (const auto &[k, v] : ds.metadata)
        out << "# " << k << ": " << v << "\n";
    for (std::size_t c = 0; c < ds.columns.size(); ++c) {
        if (c)
            out << ",";
        out << ds.columns[c].name;
        if (!ds.columns[c].unit.empty())
            out << ":" << ds.columns[c].unit;
    }
    out << "\n";
    for (const auto &r : ds.rows) {
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (c)
                out << ",";
            out << format_double(r[c]);
        }
        out << "\n";
    }
    return out.str();
}

void write_dataset(const std::filesystem::path &path, const Dataset &ds)
{
    write_file_atomic(path, format_dataset(ds));
}

HeatingSeries to_heating_series(const Dataset &ds, const TrapContext &ctx)
{
    if (ds.kind != DatasetKind::Heating)
        throw ValidationError("expected a heating dataset");
    const auto t = *ds.column_index("time");
    const auto n = *ds.column_index("nbar");
    const auto e = ds.column_index("nbar_err");
    HeatingSeries s{{}, ctx};
    for (const auto &r : ds.rows)
        s.points.push_back({r[t], r[n], e ? std::optional<double>(r[*e]) : std::nullopt});
    s.validate();
    return s;
}

FrequencySeries to_frequency_series(const Dataset &ds)
{
    if (ds.kind != DatasetKind::Charging)
        throw ValidationError("expected a charging dataset");
    const auto t = *ds.column_index("time");
    const auto f = *ds.column_index("freq");
    const auto e = ds.column_index("err");
    FrequencySeries s;
    for (const auto &r : ds.rows)
        s.points.push_back({r[t], r[f], e ? std::optional<double>(r[*e]) : std::nullopt});
    if (auto it = ds.metadata.find("light_on"); it != ds.metadata.end())
        s.light_on_intervals = parse_intervals(it->second, "light_on", 0);
    s.validate();
    return s;
}

RabiPositionScan to_position_scan(const Dataset &ds)
{
    if (ds.kind != DatasetKind::PositionScan)
        throw ValidationError("expected a position-scan dataset");
    const auto x = *ds.column_index("pos");
    const auto w = *ds.column_index("rabi");
    const auto e = ds.column_index("err");
    RabiPositionScan s;
    for (const auto &r : ds.rows)
        s.points.push_back({r[x], r[w], e ? std::optional<double>(r[*e]) : std::nullopt});
    s.validate();
    return s;
}

std::vector<SidebandObservation> to_sideband_observations(const Dataset &ds)
{
    if (ds.kind != DatasetKind::SidebandScan)
        throw ValidationError("expected a sideband-scan dataset");
    const auto r = *ds.column_index("p_red");
    const auto b = *ds.column_index("p_blue");
    const auto n = *ds.column_index("shots");
    const auto probe = ds.column_index("probe");
    std::vector<SidebandObservation> out;
    for (const auto &row : ds.rows) {
        if (!(row[n] >= 1) || row[n] != std::floor(row[n]))
            throw ValidationError("shots must be a positive integer");
        SidebandObservation obs{probe ? row[*probe] : 0.0, row[r], row[b],
                                static_cast<std::uint64_t>(row[n])};
        obs.validate();
        out.push_back(obs);
    }
    return out;
}

Dataset make_dataset(const HeatingSeries &series)
{
    Dataset ds{DatasetKind::Heating, {{"time", "s"}, {"nbar", ""}}, {}, {}};
    ds.metadata["kind"] = "heating";
    const bool err = !series.points.empty() && series.points.front().nbar_err.has_value();
    if (err)
        ds.columns.push_back({"nbar_err", ""});
    for (const auto &p : series.points) {
        std::vector<double> r{p.wait_time, p.nbar};
        if (err)
            r.push_back(p.nbar_err.value_or(0));
        ds.rows.push_back(std::move(r));
    }
    return ds;
}

Dataset make_dataset(const FrequencySeries &series)
{
    Dataset ds{DatasetKind::Charging, {{"time", "s"}, {"freq", "Hz"}}, {}, {}};
    ds.metadata["kind"] = "charging";
    if (!series.light_on_intervals.empty()) {
        std::string v;
        for (const auto &iv : series.light_on_intervals) {
            if (!v.empty())
                v += "; ";
            v += format_double(iv.start) + ", " + format_double(iv.end);
        }
        ds.metadata["light_on"] = v;
    }
    const bool err = !series.points.empty() && series.points.front().freq_err.has_value();
    if (err)
        ds.columns.push_back({"err", "Hz"});
    for (const auto &p : series.points) {
        std::vector<double> r{p.time, p.freq};
        if (err)
            r.push_back(p.freq_err.value_or(0));
        ds.rows.push_back(std::move(r));
    }
    return ds;
}

Dataset make_dataset(const RabiPositionScan &scan)
{
    Dataset ds{DatasetKind::PositionScan, {{"pos", "m"}, {"rabi", "rad/s"}}, {}, {}};
    ds.metadata["kind"] = "position-scan";
    ds.metadata["origin"] = "grating";
    const bool err = !scan.points.empty() && scan.points.front().rabi_err.has_value();
    if (err)
        ds.columns.push_back({"err", "rad/s"});
    for (const auto &p : scan.points) {
        std::vector<double> r{p.position, p.rabi};
        if (err)
            r.push_back(p.rabi_err.value_or(0));
        ds.rows.push_back(std::move(r));
    }
    return ds;
}

Dataset make_dataset(std::span<const SidebandObservation> obs, std::span<const double> waits)
{
    if (obs.size() != waits.size())
        throw ValidationError("make_dataset: observation and wait counts differ");
    Dataset ds{DatasetKind::SidebandScan,
               {{"time", "s"}, {"p_red", ""}, {"p_blue", ""}, {"shots", ""}, {"probe", "s"}},
               {},
               {}};
    ds.metadata["kind"] = "sideband-scan";
    for (std::size_t i = 0; i < obs.size(); ++i)
        ds.rows.push_back({waits[i], obs[i].p_red, obs[i].p_blue,
                           static_cast<double>(obs[i].shots), obs[i].probe_time});
    return ds;
}

} // namespace iontk
