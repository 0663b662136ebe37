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

#include "iontk/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "iontk/beam.hpp"
#include "iontk/charging.hpp"
#include "iontk/dataset.hpp"
#include "iontk/errors.hpp"
#include "iontk/heating.hpp"
#include "iontk/io.hpp"
#include "iontk/report.hpp"
#include "iontk/sim.hpp"
#include "iontk/thermometry.hpp"
#include "iontk/units.hpp"

namespace iontk {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- configuration -------------------------------------------------------

struct Config {
    SpeciesTable species = SpeciesTable::builtin();
    SimConfig sim = SimConfig::defaults();
};

void check_keys(const json &j, std::initializer_list<const char *> allowed, const char *where)
{
    if (!j.is_object())
        throw ValidationError(std::string("config: '") + where + "' must be an object");
    for (const auto &[k, v] : j.items())
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char *a) { return k == a; }))
            throw ValidationError("config: unknown key '" + k + "' in '" + where + "'");
}

template <typename T>
void read_opt(const json &j, const char *key, T &dst)
{
    if (auto it = j.find(key); it != j.end()) {
        try {
            dst = it->get<T>();
        } catch (const json::exception &) {
            throw ValidationError(std::string("config: bad value for '") + key + "'");
        }
    }
}

Config load_config(const std::optional<std::string> &path)
{
    Config c;
    if (!path)
        return c;
    json j;
    try {
        j = json::parse(read_file(*path));
    } catch (const json::parse_error &e) {
        throw ValidationError("config " + *path + ": " + e.what());
    }
    check_keys(j, {"species", "trap", "sideband", "simulation"}, "<root>");

    if (auto it = j.find("species"); it != j.end()) {
        if (!it->is_object())
            throw ValidationError("config: 'species' must be an object");
        for (const auto &[name, s] : it->items()) {
            check_keys(s, {"mass_u", "charge_e"}, name.c_str());
            double mass_u = 0, charge_e = 1;
            read_opt(s, "mass_u", mass_u);
            read_opt(s, "charge_e", charge_e);
            if (!(mass_u > 0) || !(charge_e != 0))
                throw ValidationError("config: species '" + name + "' needs mass_u > 0");
            c.species.set({name, mass_u * constants::atomic_mass_unit,
                           charge_e * constants::elementary_charge});
        }
    }

    auto &sim = c.sim;
    std::string sp = sim.trap.species.name;
    double axial = hertz(sim.trap.axial_freq) / 1e6, radial = hertz(sim.trap.radial_freq) / 1e6;
    double dist = sim.trap.ion_surface_distance * 1e6, rf = sim.trap.rf_drive_freq / 1e6;
    if (auto it = j.find("trap"); it != j.end()) {
        check_keys(*it, {"species", "axial_mhz", "radial_mhz", "distance_um", "rf_drive_mhz"},
                   "trap");
        read_opt(*it, "species", sp);
        read_opt(*it, "axial_mhz", axial);
        read_opt(*it, "radial_mhz", radial);
        read_opt(*it, "distance_um", dist);
        read_opt(*it, "rf_drive_mhz", rf);
    }
    sim.trap = make_trap_context(sp, angular(axial * 1e6), angular(radial * 1e6), dist * 1e-6,
                                 c.species, {}, rf * 1e6);

    if (auto it = j.find("sideband"); it != j.end()) {
        check_keys(*it, {"rabi_khz", "lamb_dicke", "model", "probe_time_us"}, "sideband");
        double rabi = hertz(sim.rabi.base_rabi) / 1e3;
        read_opt(*it, "rabi_khz", rabi);
        read_opt(*it, "lamb_dicke", sim.rabi.lamb_dicke);
        sim.rabi.base_rabi = angular(rabi * 1e3);
        std::string model = "first-order";
        read_opt(*it, "model", model);
        if (model == "first-order")
            sim.rabi.model = MatrixElementModel::FirstOrderLambDicke;
        else if (model == "exact")
            sim.rabi.model = MatrixElementModel::ExactLaguerre;
        else
            throw ValidationError("config: sideband model must be 'first-order' or 'exact'");
        sim.rabi.validate();
        double probe_us = -1;
        read_opt(*it, "probe_time_us", probe_us);
        sim.probe_time = probe_us >= 0
                             ? probe_us * 1e-6
                             : std::numbers::pi / (sim.rabi.base_rabi * sim.rabi.lamb_dicke);
    }

    if (auto it = j.find("simulation"); it != j.end()) {
        check_keys(*it,
                   {"shots", "initial_nbar", "heating_rate", "max_wait_ms", "noise_hz",
                    "rabi_noise"},
                   "simulation");
        read_opt(*it, "shots", sim.shots_per_point);
        read_opt(*it, "initial_nbar", sim.initial_nbar);
        read_opt(*it, "heating_rate", sim.heating_rate);
        double max_wait_ms = sim.max_wait * 1e3;
        read_opt(*it, "max_wait_ms", max_wait_ms);
        sim.max_wait = max_wait_ms * 1e-3;
        read_opt(*it, "noise_hz", sim.noise_floor);
        read_opt(*it, "rabi_noise", sim.rabi_noise);
    }
    sim.validate();
    return c;
}

// ---- outputs ----------------------------------------------------------------

class Table {
public:
    explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

    void add(std::vector<double> row)
    {
        if (row.size() != header_.size())
            throw std::logic_error("table row width mismatch");
        rows_.push_back(std::move(row));
    }

    std::string str() const
    {
        std::ostringstream s;
        for (std::size_t i = 0; i < header_.size(); ++i)
            s << (i ? "," : "") << header_[i];
        s << "\n";
        for (const auto &r : rows_) {
            for (std::size_t i = 0; i < r.size(); ++i)
                s << (i ? "," : "") << format_double(r[i]);
            s << "\n";
        }
        return s.str();
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<double>> rows_;
};

struct Artifacts {
    FitReport report;
    std::string table;
};

struct Globals {
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::optional<std::string> config_path;
    std::optional<std::string> out_dir;
    std::string format = "report";
    std::optional<std::string> name;
};

void emit(const Globals &g, const std::string &default_name, const Artifacts &a,
          std::ostream &out)
{
    const std::string report = to_json(a.report);
    if (g.out_dir) {
        const std::string name = g.name.value_or(default_name);
        const fs::path dir(*g.out_dir);
        write_file_atomic(dir / (name + ".report.json"), report);
        write_file_atomic(dir / (name + ".table.csv"), a.table);
    }
    out << (g.format == "table" ? a.table : report);
}

FitReport base_report(const std::string &model, const Globals &g, const std::string &digest = {})
{
    FitReport r;
    r.model = model;
    r.provenance.input_digest = digest;
    if (g.seed_given)
        r.provenance.seed = g.seed;
    return r;
}

struct Input {
    std::string path;
    std::string text;
    Dataset dataset;
};

DatasetKind declared_kind(const std::string &text, DatasetKind fallback)
{
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        auto b = line.find_first_not_of(" \t");
        if (b == std::string::npos)
            continue;
        if (line[b] != '#')
            break;
        auto colon = line.find(':');
        if (colon == std::string::npos)
            continue;
        std::string key = line.substr(b + 1, colon - b - 1);
        key.erase(0, key.find_first_not_of(" \t"));
        key.erase(key.find_last_not_of(" \t") + 1);
        if (key == "kind") {
            std::string v = line.substr(colon + 1);
            v.erase(0, v.find_first_not_of(" \t"));
            v.erase(v.find_last_not_of(" \t\r") + 1);
            return dataset_kind_from_string(v);
        }
    }
    return fallback;
}

Input read_input(const std::string &path, DatasetKind fallback, bool autodetect = false)
{
    Input in{path, read_file(path), {}};
    const DatasetKind kind = autodetect ? declared_kind(in.text, fallback) : fallback;
    std::istringstream s(in.text);
    in.dataset = parse_dataset(s, kind, path);
    return in;
}

void add_metadata_trap(Dataset &ds, const TrapContext &ctx)
{
    ds.metadata["species"] = ctx.species.name;
    ds.metadata["axial_hz"] = format_double(hertz(ctx.axial_freq));
    ds.metadata["radial_hz"] = format_double(hertz(ctx.radial_freq));
    ds.metadata["distance_m"] = format_double(ctx.ion_surface_distance);
}

double meta_number(const Dataset &ds, const std::string &key, double fallback)
{
    auto it = ds.metadata.find(key);
    if (it == ds.metadata.end())
        return fallback;
    try {
        std::size_t used = 0;
        double v = std::stod(it->second, &used);
        if (used != it->second.size())
            throw std::invalid_argument(key);
        return v;
    } catch (const std::exception &) {
        throw ValidationError("metadata '" + key + "' is not a number");
    }
}

struct TrapOverrides {
    std::optional<std::string> species;
    std::optional<double> axial_mhz;
    std::optional<double> distance_um;

    void attach(CLI::App *app)
    {
        app->add_option("--species", species, "Ion species (overrides data and config)");
        app->add_option("--axial-mhz", axial_mhz, "Axial secular frequency / 2 pi in MHz");
        app->add_option("--distance-um", distance_um, "Ion-surface distance in um");
    }

    TrapContext resolve(const Config &cfg, const Dataset *ds) const
    {
        const auto &base = cfg.sim.trap;
        std::string sp = base.species.name;
        double axial = hertz(base.axial_freq);
        double radial = hertz(base.radial_freq);
        double dist = base.ion_surface_distance;
        if (ds) {
            if (auto it = ds->metadata.find("species"); it != ds->metadata.end())
                sp = it->second;
            axial = meta_number(*ds, "axial_hz", axial);
            radial = meta_number(*ds, "radial_hz", radial);
            dist = meta_number(*ds, "distance_m", dist);
        }
        if (species)
            sp = *species;
        if (axial_mhz)
            axial = *axial_mhz * 1e6;
        if (distance_um)
            dist = *distance_um * 1e-6;
        return make_trap_context(sp, angular(axial), angular(radial), dist, cfg.species, {},
                                 base.rf_drive_freq);
    }
};

void add_param(FitReport &r, const std::string &name, double value, double error,
               const std::string &unit, bool weak = false)
{
    r.parameters.push_back({name, value, error, unit, weak});
}

std::vector<double> linspace(double a, double b, int n)
{
    if (n < 1)
        throw ValidationError("point count must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return out;
}

// ---- simulate -----------------------------------------------------------------

struct SimHeatingArgs {
    std::optional<double> rate, initial_nbar, max_wait_ms;
    std::optional<std::uint64_t> shots;
    int points = 6;
};

SimConfig sim_config(const Config &cfg, const Globals &g)
{
    SimConfig s = cfg.sim;
    s.seed = g.seed;
    return s;
}

Artifacts simulate_heating(const Config &cfg, const Globals &g, const SimHeatingArgs &a)
{
    SimConfig s = sim_config(cfg, g);
    if (a.rate)
        s.heating_rate = *a.rate;
    if (a.initial_nbar)
        s.initial_nbar = *a.initial_nbar;
    if (a.max_wait_ms)
        s.max_wait = *a.max_wait_ms * 1e-3;
    if (a.shots)
        s.shots_per_point = *a.shots;
    const auto waits = linspace(0, s.max_wait, a.points);
    const auto series = simulate_heating_series(s, waits);
    Dataset ds = make_dataset(series);
    add_metadata_trap(ds, s.trap);

    Artifacts out{base_report("simulate-heating", g), format_dataset(ds)};
    out.report.statistics = {{"true_rate", s.heating_rate},
                             {"initial_nbar", s.initial_nbar},
                             {"points", static_cast<double>(a.points)},
                             {"shots", static_cast<double>(s.shots_per_point)}};
    return out;
}

Artifacts simulate_sideband(const Config &cfg, const Globals &g, const SimHeatingArgs &a)
{
    SimConfig s = sim_config(cfg, g);
    if (a.rate)
        s.heating_rate = *a.rate;
    if (a.initial_nbar)
        s.initial_nbar = *a.initial_nbar;
    if (a.max_wait_ms)
        s.max_wait = *a.max_wait_ms * 1e-3;
    if (a.shots)
        s.shots_per_point = *a.shots;
    if (s.analytic())
        throw ValidationError("sideband scans need a finite shot count");
    const auto waits = linspace(0, s.max_wait, a.points);
    std::vector<SidebandObservation> obs;
    for (std::size_t i = 0; i < waits.size(); ++i)
        obs.push_back(simulate_sideband_scan(s, waits[i], i));
    Dataset ds = make_dataset(obs, waits);
    add_metadata_trap(ds, s.trap);

    Artifacts out{base_report("simulate-sideband", g), format_dataset(ds)};
    out.report.statistics = {{"true_rate", s.heating_rate},
                             {"initial_nbar", s.initial_nbar},
                             {"probe_time", s.probe_time},
                             {"shots", static_cast<double>(s.shots_per_point)}};
    return out;
}

struct SimChargingArgs {
    double cadence = 15, t_on = 400, duration = 2000, total = 4500;
    std::optional<double> noise_hz;
};

Artifacts simulate_charging(const Config &cfg, const Globals &g, const SimChargingArgs &a)
{
    SimConfig s = sim_config(cfg, g);
    if (a.noise_hz)
        s.noise_floor = *a.noise_hz;
    const Interval on{a.t_on, a.t_on + a.duration};
    // keep the discharge continuous with the charging curve at the new t_off
    const double shift = charging_freq(on.end, {s.charging.df1, s.charging.df2, s.charging.T1,
                                                s.charging.T2, on.start, s.charging.f0}) -
                         s.charging.f0;
    s.discharge.df4 = -shift - s.discharge.df3;
    const auto series = simulate_charging_series(s, a.cadence, on, a.total);
    Dataset ds = make_dataset(series);

    Artifacts out{base_report("simulate-charging", g), format_dataset(ds)};
    out.report.statistics = {{"df1", s.charging.df1},       {"df2", s.charging.df2},
                             {"T1", s.charging.T1},         {"T2", s.charging.T2},
                             {"df3", s.discharge.df3},      {"df4", s.discharge.df4},
                             {"T3", s.discharge.T3},        {"T4", s.discharge.T4},
                             {"f0", s.charging.f0},         {"noise_hz", s.noise_floor},
                             {"settled_offset", settled_offset(s.charging)}};
    return out;
}

struct SimPositionArgs {
    double from_um = -3, to_um = 3, separation_um = 1.8, waist_um = 0.9, phase = 0, ratio = 1,
           center_um = 0;
    int points = 121;
    std::optional<double> noise;
    std::string mode = "two-beamlet";
    std::string origin = "grating";
    double grating_offset_um = default_grating_offset * 1e6;
};

BeamMode beam_mode(const std::string &s)
{
    if (s == "two-beamlet")
        return BeamMode::TwoBeamlet;
    if (s == "single")
        return BeamMode::SingleGaussian;
    throw ValidationError("beam mode must be 'two-beamlet' or 'single'");
}

Artifacts simulate_position(const Config &cfg, const Globals &g, const SimPositionArgs &a)
{
    SimConfig s = sim_config(cfg, g);
    if (a.noise)
        s.rabi_noise = *a.noise;
    GratingOutputModel beam;
    beam.mode = beam_mode(a.mode);
    beam.waist = a.waist_um * 1e-6;
    beam.beamlet_separation = a.separation_um * 1e-6;
    beam.beamlet_phase = a.phase;
    beam.beamlet_amplitude_ratio = a.ratio;
    beam.center = a.center_um * 1e-6;
    const auto xs = linspace(a.from_um * 1e-6, a.to_um * 1e-6, a.points);
    const auto scan = simulate_position_scan(s, beam, xs);
    Dataset ds = make_dataset(scan);
    if (a.origin == "loading_hole") {
        const double offset = a.grating_offset_um * 1e-6;
        for (auto &r : ds.rows)
            r[0] = offset - r[0];
        std::reverse(ds.rows.begin(), ds.rows.end());
        ds.metadata["origin"] = "loading_hole";
        ds.metadata["grating_offset_um"] = format_double(a.grating_offset_um);
    } else if (a.origin != "grating") {
        throw ValidationError("origin must be 'grating' or 'loading_hole'");
    }

    Artifacts out{base_report("simulate-position", g), format_dataset(ds)};
    out.report.statistics = {{"separation", beam.beamlet_separation},
                             {"waist", beam.waist},
                             {"phase", beam.beamlet_phase},
                             {"ratio", beam.beamlet_amplitude_ratio},
                             {"center", beam.center},
                             {"base_rabi", s.rabi.base_rabi},
                             {"rabi_noise", s.rabi_noise}};
    return out;
}

// ---- fits ---------------------------------------------------------------------

HeatingSeries heating_series_from(const Input &in, const TrapContext &ctx)
{
    if (in.dataset.kind == DatasetKind::Heating)
        return to_heating_series(in.dataset, ctx);
    if (in.dataset.kind != DatasetKind::SidebandScan)
        throw ValidationError(in.path + ": fit-heating needs heating or sideband-scan data");
    const auto obs = to_sideband_observations(in.dataset);
    const auto waits = in.dataset.column("time");
    HeatingSeries s{{}, ctx};
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const auto est = nbar_with_uncertainty(obs[i]);
        s.points.push_back({waits[i], est.value, est.error});
    }
    s.validate();
    return s;
}

std::string combined_digest(const std::vector<Input> &inputs)
{
    if (inputs.size() == 1)
        return sha256_hex(inputs.front().text);
    std::string all;
    for (const auto &in : inputs)
        all += sha256_hex(in.text) + "\n";
    return sha256_hex(all);
}

struct FitHeatingArgs {
    std::vector<std::string> inputs;
    std::vector<double> positions_um;
    TrapOverrides trap;
    std::optional<std::string> ref_species;
    std::optional<double> ref_axial_mhz;
};

Artifacts fit_heating(const Config &cfg, const Globals &g, const FitHeatingArgs &a)
{
    std::vector<Input> inputs;
    for (const auto &p : a.inputs)
        inputs.push_back(read_input(p, DatasetKind::Heating, true));
    if (!a.positions_um.empty() && a.positions_um.size() != inputs.size())
        throw ValidationError("--position-um must be given once per --input");

    Artifacts out{base_report("linear-heating", g, combined_digest(inputs)), {}};
    auto &r = out.report;
    const bool normalize = a.ref_species || a.ref_axial_mhz;
    const IonSpecies ref = cfg.species.at(a.ref_species.value_or("Ca-40"));
    const double ref_freq = angular(a.ref_axial_mhz.value_or(1.0) * 1e6);

    if (inputs.size() == 1) {
        const TrapContext ctx = a.trap.resolve(cfg, &inputs[0].dataset);
        const auto series = heating_series_from(inputs[0], ctx);
        const auto fit = fit_heating_rate(series);
        add_param(r, "ndot", fit.ndot, fit.ndot_err, "quanta/s");
        add_param(r, "intercept", fit.intercept, fit.intercept_err, "quanta");
        const double se = spectral_density_from_rate(fit, ctx);
        add_param(r, "S_E", se, se * fit.ndot_err / std::abs(fit.ndot), "V^2/m^2/Hz");
        if (normalize) {
            const double n = normalize_rate(fit, ctx, ref, ref_freq);
            add_param(r, "ndot_normalized", n, n * fit.ndot_err / std::abs(fit.ndot),
                      "quanta/s");
            r.notes["reference"] = ref.name + " @ " + format_double(hertz(ref_freq)) + " Hz";
        }
        double ss = 0;
        Table t({"time:s", "nbar", "nbar_err", "model"});
        for (const auto &p : series.points) {
            const double m = fit.intercept + fit.ndot * p.wait_time;
            ss += (p.nbar - m) * (p.nbar - m);
            t.add({p.wait_time, p.nbar, p.nbar_err.value_or(std::nan("")), m});
        }
        r.residual_rms = std::sqrt(ss / static_cast<double>(series.points.size()));
        r.statistics = {{"chi2", fit.chi2},
                        {"dof", static_cast<double>(fit.dof)},
                        {"points", static_cast<double>(series.points.size())}};
        if (!series.points.front().nbar_err)
            r.flags.push_back("unweighted");
        r.notes["species"] = ctx.species.name;
        r.notes["axial_hz"] = format_double(hertz(ctx.axial_freq));
        out.table = t.str();
        return out;
    }

    // several inputs: one rate per position, then a flatness test
    r.model = "linear-heating-scan";
    std::vector<PositionRate> rates;
    Table t({"position:m", "ndot:quanta/s", "ndot_err:quanta/s"});
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const TrapContext ctx = a.trap.resolve(cfg, &inputs[i].dataset);
        const auto fit = fit_heating_rate(heating_series_from(inputs[i], ctx));
        const double x = a.positions_um.empty() ? static_cast<double>(i)
                                                : a.positions_um[i] * 1e-6;
        rates.push_back({x, fit});
        t.add({x, fit.ndot, fit.ndot_err});
        add_param(r, "ndot[" + std::to_string(i) + "]", fit.ndot, fit.ndot_err, "quanta/s");
    }
    const auto summary = position_scan_summary(rates);
    add_param(r, "ndot_mean", summary.mean, summary.std_error, "quanta/s");
    r.statistics = {{"chi2", summary.chi2},
                    {"dof", static_cast<double>(summary.dof)},
                    {"p_value", summary.p_value}};
    if (!summary.flat)
        r.flags.push_back("position_dependent");
    double ss = 0;
    for (const auto &pr : rates)
        ss += (pr.rate.ndot - summary.mean) * (pr.rate.ndot - summary.mean);
    r.residual_rms = std::sqrt(ss / static_cast<double>(rates.size()));
    out.table = t.str();
    return out;
}

void add_exp_report(FitReport &r, const ExpFitReport &e)
{
    for (const auto &p : e.parameters)
        r.parameters.push_back(p);
    r.flags = e.flags;
    r.residual_rms = e.residual_rms;
    r.statistics = {{"chi2", e.chi2},
                    {"dof", static_cast<double>(e.dof)},
                    {"points", static_cast<double>(e.points)},
                    {"starts", static_cast<double>(e.starts)},
                    {"iterations", static_cast<double>(e.iterations)}};
}

struct FitExpArgs {
    std::string input;
    std::optional<double> t_switch;
    std::optional<double> t_end;
    std::optional<double> f0_hz;
    bool fixed_f0 = false;
    bool no_baseline = false;
    double weak_threshold = 0.5;
    std::optional<double> continuity_shift_hz;
    bool stability = false;
    std::optional<double> settle_after;
};

ExpFitOptions exp_options(const FitExpArgs &a)
{
    ExpFitOptions o;
    if (a.fixed_f0 || a.f0_hz) {
        o.f0_mode = F0Mode::Fixed;
        o.f0 = a.f0_hz;
    }
    o.t_end = a.t_end;
    o.use_baseline = !a.no_baseline;
    o.weak_threshold = a.weak_threshold;
    o.continuity_shift = a.continuity_shift_hz;
    return o;
}

template <typename Model>
std::string overlay_table(const FrequencySeries &s, double from, double to, Model model)
{
    Table t({"time:s", "freq:Hz", "model:Hz", "residual:Hz"});
    for (const auto &p : s.points) {
        if (p.time < from || p.time > to)
            continue;
        const double m = model(p.time);
        t.add({p.time, p.freq, m, p.freq - m});
    }
    return t.str();
}

Artifacts fit_charging_cmd(const Globals &g, const FitExpArgs &a)
{
    const Input in = read_input(a.input, DatasetKind::Charging);
    const auto series = to_frequency_series(in.dataset);
    double t_on = 0;
    if (a.t_switch)
        t_on = *a.t_switch;
    else if (!series.light_on_intervals.empty())
        t_on = series.light_on_intervals.front().start;
    else
        throw ValidationError("--t-on is required when the data has no light_on metadata");

    const auto fit = fit_charging(series, t_on, exp_options(a));
    Artifacts out{base_report(fit.report.model, g, sha256_hex(in.text)), {}};
    add_exp_report(out.report, fit.report);
    const double offset = settled_offset(fit.params);
    out.report.statistics["compensation_field"] = compensation_field(offset);

    if (a.stability) {
        const auto st = settled_stability(series, fit.params, a.settle_after);
        out.report.statistics["settled_mean"] = st.mean;
        out.report.statistics["settled_sigma"] = st.sigma;
        out.report.statistics["settled_points"] = static_cast<double>(st.residuals.size());
        out.report.statistics["jarque_bera_p"] = st.jarque_bera_p;
        out.report.statistics["lag1_autocorrelation"] = st.lag1_autocorrelation;
        if (st.normality_flag)
            out.report.flags.push_back("settled_non_normal");
        if (st.correlation_flag)
            out.report.flags.push_back("settled_correlated");
    }

    double end = series.points.back().time;
    for (const auto &iv : series.light_on_intervals)
        if (iv.start <= t_on && t_on < iv.end)
            end = iv.end;
    if (a.t_end)
        end = *a.t_end;
    const auto p = fit.params;
    out.table = overlay_table(series, 0, end, [&](double t) {
        return t < p.t_on ? p.f0 : charging_freq(t, p);
    });
    return out;
}

Artifacts fit_discharge_cmd(const Globals &g, const FitExpArgs &a)
{
    const Input in = read_input(a.input, DatasetKind::Charging);
    const auto series = to_frequency_series(in.dataset);
    double t_off = 0;
    if (a.t_switch)
        t_off = *a.t_switch;
    else if (!series.light_on_intervals.empty())
        t_off = series.light_on_intervals.front().end;
    else
        throw ValidationError("--t-off is required when the data has no light_on metadata");

    const auto fit = fit_discharge(series, t_off, exp_options(a));
    Artifacts out{base_report(fit.report.model, g, sha256_hex(in.text)), {}};
    add_exp_report(out.report, fit.report);
    const auto p = fit.params;
    out.table = overlay_table(series, t_off, a.t_end.value_or(series.points.back().time),
                              [&](double t) { return discharge_freq(t, p); });
    return out;
}

struct ThermometryArgs {
    std::optional<double> p_red, p_blue;
    std::optional<std::uint64_t> shots;
    double probe_us = 0;
    std::optional<std::string> input;
};

Artifacts thermometry_cmd(const Globals &g, const ThermometryArgs &a)
{
    if (a.input) {
        const Input in = read_input(*a.input, DatasetKind::SidebandScan);
        const auto obs = to_sideband_observations(in.dataset);
        const auto waits = in.dataset.column("time");
        Artifacts out{base_report("sideband-asymmetry", g, sha256_hex(in.text)), {}};
        Table t({"time:s", "p_red", "p_blue", "shots", "nbar", "nbar_err"});
        for (std::size_t i = 0; i < obs.size(); ++i) {
            const auto est = nbar_with_uncertainty(obs[i]);
            t.add({waits[i], obs[i].p_red, obs[i].p_blue, static_cast<double>(obs[i].shots),
                   est.value, est.error});
            add_param(out.report, "nbar[" + std::to_string(i) + "]", est.value, est.error, "");
        }
        out.report.statistics["points"] = static_cast<double>(obs.size());
        out.table = t.str();
        return out;
    }
    if (!a.p_red || !a.p_blue || !a.shots)
        throw ValidationError("thermometry needs --p-red, --p-blue and --shots, or --input");
    const SidebandObservation obs{a.probe_us * 1e-6, *a.p_red, *a.p_blue, *a.shots};
    const auto est = nbar_with_uncertainty(obs);
    Artifacts out{base_report("sideband-asymmetry", g), {}};
    add_param(out.report, "nbar", est.value, est.error, "");
    out.report.statistics["ratio"] = obs.p_red / obs.p_blue;
    Table t({"p_red", "p_blue", "shots", "nbar", "nbar_err"});
    t.add({obs.p_red, obs.p_blue, static_cast<double>(obs.shots), est.value, est.error});
    out.table = t.str();
    return out;
}

struct BeamArgs {
    std::string input;
    std::string mode = "two-beamlet";
    double weak_threshold = 0.5;
    double default_waist_um = 0.9;
    int grid = 241;
};

Artifacts beam_profile_cmd(const Globals &g, const BeamArgs &a)
{
    const Input in = read_input(a.input, DatasetKind::PositionScan);
    const auto scan = to_position_scan(in.dataset);
    ProfileFitOptions o;
    o.weak_threshold = a.weak_threshold;
    o.default_waist = a.default_waist_um * 1e-6;
    const auto fit = fit_profile(scan, beam_mode(a.mode), o);

    Artifacts out{base_report(a.mode == "single" ? "gaussian-profile" : "two-beamlet-profile", g,
                              sha256_hex(in.text)),
                  {}};
    auto &r = out.report;
    r.parameters = fit.parameters;
    r.flags = fit.flags;
    r.residual_rms = fit.residual_rms;
    r.statistics = {{"chi2", fit.chi2},
                    {"dof", static_cast<double>(fit.dof)},
                    {"peak_separation", fit.peak_separation},
                    {"dip_depth", fit.dip_depth},
                    {"rabi_scale", fit.rabi_scale}};
    for (std::size_t i = 0; i < fit.peak_positions.size(); ++i)
        r.statistics["peak[" + std::to_string(i) + "]"] = fit.peak_positions[i];
    r.notes["origin"] = in.dataset.metadata.at("origin");
    if (auto it = in.dataset.metadata.find("origin_declared"); it != in.dataset.metadata.end())
        r.notes["origin_declared"] = it->second;

    // data rows followed by a dense model curve for plotting
    Table t({"pos:m", "rabi:rad/s", "model:rad/s", "is_data"});
    for (const auto &p : scan.points)
        t.add({p.position, p.rabi, fit.rabi_at(p.position), 1});
    const auto xs = linspace(scan.points.front().position, scan.points.back().position, a.grid);
    for (double x : xs)
        t.add({x, std::nan(""), fit.rabi_at(x), 0});
    out.table = t.str();
    return out;
}

struct NormalizeArgs {
    std::optional<double> rate;
    double rate_err = 0;
    TrapOverrides trap;
    std::string ref_species = "Ca-40";
    double ref_axial_mhz = 1.0;
    std::vector<std::string> points;
};

Artifacts normalize_cmd(const Config &cfg, const Globals &g, const NormalizeArgs &a)
{
    Artifacts out{base_report("normalize", g), {}};
    auto &r = out.report;
    const IonSpecies ref = cfg.species.at(a.ref_species);
    const double ref_freq = angular(a.ref_axial_mhz * 1e6);
    r.notes["reference"] = ref.name + " @ " + format_double(hertz(ref_freq)) + " Hz";

    if (!a.points.empty()) {
        // frequency scan: "f_mhz,rate[,err]" per point, fitted as rate = A f^-alpha
        r.model = "power-law";
        std::vector<double> f, y, e;
        for (const auto &p : a.points) {
            std::vector<double> v;
            std::stringstream ss(p);
            std::string cell;
            while (std::getline(ss, cell, ','))
                try {
                    v.push_back(std::stod(cell));
                } catch (const std::exception &) {
                    throw ValidationError("bad --point '" + p + "'");
                }
            if (v.size() < 2 || v.size() > 3)
                throw ValidationError("--point expects 'f_mhz,rate[,err]', got '" + p + "'");
            f.push_back(v[0] * 1e6);
            y.push_back(v[1]);
            if (v.size() == 3)
                e.push_back(v[2]);
        }
        if (!e.empty() && e.size() != f.size())
            throw ValidationError("either all or no --point entries need an error");
        const auto fit = fit_power_law(f, y, e);
        add_param(r, "amplitude", fit.amplitude, fit.amplitude_err, "quanta/s Hz^alpha");
        add_param(r, "exponent", fit.exponent, fit.exponent_err, "");
        r.statistics = {{"chi2", fit.chi2}, {"dof", static_cast<double>(fit.dof)}};
        Table t({"freq:Hz", "rate:quanta/s", "err:quanta/s", "model:quanta/s"});
        double ss = 0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double m = fit.amplitude * std::pow(f[i], -fit.exponent);
            ss += (y[i] - m) * (y[i] - m);
            t.add({f[i], y[i], e.empty() ? std::nan("") : e[i], m});
        }
        r.residual_rms = std::sqrt(ss / static_cast<double>(f.size()));
        out.table = t.str();
        return out;
    }

    if (!a.rate)
        throw ValidationError("normalize needs --rate or --point");
    const TrapContext ctx = a.trap.resolve(cfg, nullptr);
    const HeatingRateResult h{*a.rate, a.rate_err, 0};
    const double n = normalize_rate(h, ctx, ref, ref_freq);
    const double scale = *a.rate != 0 ? n / *a.rate : 0;
    const double se = spectral_density_from_rate(h, ctx);
    add_param(r, "ndot", *a.rate, a.rate_err, "quanta/s");
    add_param(r, "ndot_normalized", n, a.rate_err * std::abs(scale), "quanta/s");
    add_param(r, "S_E", se, *a.rate != 0 ? se * a.rate_err / std::abs(*a.rate) : 0,
              "V^2/m^2/Hz");
    r.notes["species"] = ctx.species.name;
    r.notes["axial_hz"] = format_double(hertz(ctx.axial_freq));
    Table t({"ndot:quanta/s", "ndot_normalized:quanta/s", "S_E:V^2/m^2/Hz"});
    t.add({*a.rate, n, se});
    out.table = t.str();
    return out;
}

Artifacts report_cmd(const std::string &path)
{
    const std::string text = read_file(path);
    Artifacts out{report_from_json(text), {}};
    std::ostringstream s;
    s << "name,unit,value,error,weak\n";
    for (const auto &p : out.report.parameters)
        s << p.name << "," << p.unit << "," << format_double(p.value) << ","
          << format_double(p.error) << "," << (p.weak ? 1 : 0) << "\n";
    out.table = s.str();
    return out;
}

// ---- error records --------------------------------------------------------------

int fail(std::ostream &err, int code, const std::string &kind, const std::string &message,
         json extra = json::object())
{
    json rec;
    rec["code"] = code;
    rec["kind"] = kind;
    rec["message"] = message;
    for (const auto &[k, v] : extra.items())
        rec[k] = v;
    err << json{{"error", rec}}.dump() << "\n";
    return code;
}

} // namespace

int run_pipeline(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Trapped-ion heating, charging and beam-profile analysis", "iontk"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Seed for simulation (recorded in reports)")
        ->each([&](const std::string &) { g.seed_given = true; });
    app.add_option("--config", g.config_path, "JSON configuration file");
    app.add_option("--out-dir", g.out_dir, "Directory for <name>.report.json and <name>.table.csv");
    app.add_option("--format", g.format, "What to print on stdout")
        ->check(CLI::IsMember({"table", "report"}));
    app.add_option("--name", g.name, "Artifact base name (defaults to the subcommand)");

    std::function<Artifacts(const Config &)> action;
    std::string default_name;

    // simulate
    auto *sim = app.add_subcommand("simulate", "Generate synthetic datasets");
    sim->require_subcommand(1);
    SimHeatingArgs sh;
    for (const char *which : {"heating", "sideband"}) {
        auto *c = sim->add_subcommand(which, std::string("Simulated ") + which + " data");
        c->add_option("--rate", sh.rate, "Heating rate in quanta/s");
        c->add_option("--initial-nbar", sh.initial_nbar, "Mean occupation at zero wait");
        c->add_option("--max-wait-ms", sh.max_wait_ms, "Longest wait in ms");
        c->add_option("--points", sh.points, "Number of wait times")->check(CLI::PositiveNumber);
        c->add_option("--shots", sh.shots, "Shots per sideband (0 = exact)");
        const bool heating = std::string(which) == "heating";
        c->callback([&, heating] {
            default_name = heating ? "heating" : "sideband";
            action = [&, heating](const Config &cfg) {
                return heating ? simulate_heating(cfg, g, sh) : simulate_sideband(cfg, g, sh);
            };
        });
    }
    SimChargingArgs sc;
    {
        auto *c = sim->add_subcommand("charging", "Simulated photo-charging record");
        c->add_option("--cadence", sc.cadence, "Sample interval in s");
        c->add_option("--t-on", sc.t_on, "Light switched on at (s)");
        c->add_option("--duration", sc.duration, "Light-on duration in s");
        c->add_option("--total", sc.total, "Record length in s");
        c->add_option("--noise-hz", sc.noise_hz, "Gaussian frequency noise in Hz");
        c->callback([&] {
            default_name = "charging";
            action = [&](const Config &cfg) { return simulate_charging(cfg, g, sc); };
        });
    }
    SimPositionArgs sp;
    {
        auto *c = sim->add_subcommand("position", "Simulated Rabi-vs-position scan");
        c->add_option("--from-um", sp.from_um);
        c->add_option("--to-um", sp.to_um);
        c->add_option("--points", sp.points)->check(CLI::PositiveNumber);
        c->add_option("--separation-um", sp.separation_um, "Beamlet centre separation");
        c->add_option("--waist-um", sp.waist_um);
        c->add_option("--phase", sp.phase, "Beamlet relative phase in rad");
        c->add_option("--ratio", sp.ratio, "Beamlet amplitude ratio");
        c->add_option("--center-um", sp.center_um);
        c->add_option("--noise", sp.noise, "Relative Rabi noise");
        c->add_option("--mode", sp.mode)->check(CLI::IsMember({"two-beamlet", "single"}));
        c->add_option("--origin", sp.origin, "Position convention of the written file")
            ->check(CLI::IsMember({"grating", "loading_hole"}));
        c->add_option("--grating-offset-um", sp.grating_offset_um);
        c->callback([&] {
            default_name = "position";
            action = [&](const Config &cfg) { return simulate_position(cfg, g, sp); };
        });
    }

    FitHeatingArgs fh;
    {
        auto *c = app.add_subcommand("fit-heating", "Linear fit of nbar against wait time");
        c->add_option("--input", fh.inputs, "Heating or sideband-scan file (repeat for a scan)")
            ->required();
        c->add_option("--position-um", fh.positions_um, "Ion position per input");
        fh.trap.attach(c);
        c->add_option("--ref-species", fh.ref_species, "Normalise to this species");
        c->add_option("--ref-axial-mhz", fh.ref_axial_mhz, "Normalise to this frequency");
        c->callback([&] {
            default_name = "fit-heating";
            action = [&](const Config &cfg) { return fit_heating(cfg, g, fh); };
        });
    }

    FitExpArgs fc, fd;
    auto exp_opts = [](CLI::App *c, FitExpArgs &a, const char *switch_flag) {
        c->add_option("--input", a.input, "Charging-schema file")->required();
        c->add_option(switch_flag, a.t_switch, "Switching time in s");
        c->add_option("--t-end", a.t_end, "End of the fit window in s");
        c->add_option("--f0-hz", a.f0_hz, "Hold f0 at this value");
        c->add_flag("--fixed-f0", a.fixed_f0, "Hold f0 at the baseline mean");
        c->add_option("--weak-threshold", a.weak_threshold, "Relative error flagged as weak");
    };
    {
        auto *c = app.add_subcommand("fit-charging", "Two-exponential charging fit");
        exp_opts(c, fc, "--t-on");
        c->add_flag("--no-baseline", fc.no_baseline, "Ignore points before t_on");
        c->add_flag("--stability", fc.stability, "Analyse the settled residuals");
        c->add_option("--settle-after", fc.settle_after, "Settled region start after t_on (s)");
        c->callback([&] {
            default_name = "fit-charging";
            action = [&](const Config &) { return fit_charging_cmd(g, fc); };
        });
    }
    {
        auto *c = app.add_subcommand("fit-discharge", "Two-exponential discharge fit");
        exp_opts(c, fd, "--t-off");
        c->add_option("--continuity-shift-hz", fd.continuity_shift_hz,
                      "Tie the curve to f0 + shift at t_off");
        c->callback([&] {
            default_name = "fit-discharge";
            action = [&](const Config &) { return fit_discharge_cmd(g, fd); };
        });
    }

    ThermometryArgs th;
    {
        auto *c = app.add_subcommand("thermometry", "nbar from red/blue sideband asymmetry");
        c->add_option("--p-red", th.p_red);
        c->add_option("--p-blue", th.p_blue);
        c->add_option("--shots", th.shots);
        c->add_option("--probe-us", th.probe_us);
        c->add_option("--input", th.input, "Sideband-scan file");
        c->callback([&] {
            default_name = "thermometry";
            action = [&](const Config &) { return thermometry_cmd(g, th); };
        });
    }

    BeamArgs ba;
    {
        auto *c = app.add_subcommand("beam-profile", "Fit a Rabi-vs-position scan");
        c->add_option("--input", ba.input, "Position-scan file")->required();
        c->add_option("--mode", ba.mode)->check(CLI::IsMember({"two-beamlet", "single"}));
        c->add_option("--weak-threshold", ba.weak_threshold);
        c->add_option("--default-waist-um", ba.default_waist_um);
        c->add_option("--grid", ba.grid, "Model curve samples")->check(CLI::PositiveNumber);
        c->callback([&] {
            default_name = "beam-profile";
            action = [&](const Config &) { return beam_profile_cmd(g, ba); };
        });
    }

    NormalizeArgs na;
    {
        auto *c = app.add_subcommand("normalize", "Scale a heating rate to a reference trap");
        c->add_option("--rate", na.rate, "Heating rate in quanta/s");
        c->add_option("--rate-err", na.rate_err);
        na.trap.attach(c);
        c->add_option("--ref-species", na.ref_species);
        c->add_option("--ref-axial-mhz", na.ref_axial_mhz);
        c->add_option("--point", na.points, "f_mhz,rate[,err] for a power-law fit");
        c->callback([&] {
            default_name = "normalize";
            action = [&](const Config &cfg) { return normalize_cmd(cfg, g, na); };
        });
    }

    std::string report_path;
    {
        auto *c = app.add_subcommand("report", "Validate and re-emit a saved report");
        c->add_option("--input", report_path)->required();
        c->callback([&] {
            default_name = "report";
            action = [&](const Config &) { return report_cmd(report_path); };
        });
    }

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForHelp &) {
        const CLI::App *sub = &app;
        while (!sub->get_subcommands().empty())
            sub = sub->get_subcommands().front();
        out << sub->help();
        return kExitOk;
    } catch (const CLI::ParseError &e) {
        return fail(err, kExitValidation, "usage", e.what());
    } catch (const ValidationError &e) {
        return fail(err, kExitValidation, "validation", e.what());
    }

    try {
        const Config cfg = load_config(g.config_path);
        emit(g, default_name, action(cfg), out);
        return kExitOk;
    } catch (const ValidationError &e) {
        return fail(err, kExitValidation, "validation", e.what());
    } catch (const FitError &e) {
        json extra;
        extra["best_cost"] = std::isfinite(e.best_cost()) ? json(e.best_cost()) : json(nullptr);
        extra["best_params"] = e.best_params();
        return fail(err, kExitFit, "fit", e.what(), extra);
    } catch (const IoError &e) {
        return fail(err, kExitIo, "io", e.what());
    } catch (const fs::filesystem_error &e) {
        return fail(err, kExitIo, "io", e.what());
    } catch (const std::invalid_argument &e) {
        return fail(err, kExitValidation, "validation", e.what());
    } catch (const std::out_of_range &e) {
        return fail(err, kExitValidation, "validation", e.what());
    } catch (const std::exception &e) {
        return fail(err, kExitInternal, "internal", e.what());
    }
}

} // namespace iontk
