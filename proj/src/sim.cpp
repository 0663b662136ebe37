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

#include "iontk/sim.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "iontk/errors.hpp"

namespace iontk {

void SimConfig::validate() const
{
    rabi.validate();
    if (!(initial_nbar >= 0))
        throw ValidationError("initial nbar must be >= 0");
    if (!(heating_rate >= 0))
        throw ValidationError("heating rate must be >= 0");
    if (!(probe_time >= 0))
        throw ValidationError("probe time must be >= 0");
    if (!(noise_floor >= 0))
        throw ValidationError("noise floor must be >= 0");
    if (!(rabi_noise >= 0))
        throw ValidationError("Rabi noise must be >= 0");
    if (!(max_wait > 0))
        throw ValidationError("max wait must be positive");
}

SimConfig SimConfig::defaults()
{
    SimConfig c;
    c.trap = make_trap_context("Yb-171", angular(5.329e6), angular(12.7e6), 20e-6);
    c.rabi = {angular(121.1e3), 0.1, MatrixElementModel::FirstOrderLambDicke};
    // blue-sideband pi pulse for the ground state
    c.probe_time = std::numbers::pi / (c.rabi.base_rabi * c.rabi.lamb_dicke);
    c.initial_nbar = 0.1;
    c.heating_rate = 780;
    c.charging = {151e3, 50e3, 21, 900, 400, 5.329e6};
    const double t_off = 2400;
    const double shift = charging_freq(t_off, c.charging) - c.charging.f0;
    const double df3 = -60e3;
    c.discharge = {df3, -shift - df3, 360, 18000, t_off, c.charging.f0};
    c.noise_floor = 1e3;
    return c;
}

CounterRng point_rng(const SimConfig &cfg, SimStream stream, std::uint64_t index)
{
    return CounterRng(cfg.seed, static_cast<std::uint64_t>(stream)).split(index);
}

SidebandObservation simulate_sideband_scan(const SimConfig &cfg, double wait_time,
                                           std::uint64_t index)
{
    cfg.validate();
    if (!(wait_time >= 0))
        throw ValidationError("wait time must be >= 0");
    const ThermalMotionalState state(cfg.initial_nbar + cfg.heating_rate * wait_time);
    const ThermalSidebandTable table(state, cfg.rabi);
    const double red = table.excitation(cfg.probe_time, Sideband::Red);
    const double blue = table.excitation(cfg.probe_time, Sideband::Blue);
    if (cfg.analytic())
        return {cfg.probe_time, red, blue, std::numeric_limits<std::uint64_t>::max()};

    auto rng = point_rng(cfg, SimStream::Sideband, index);
    const auto n = cfg.shots_per_point;
    const double dn = static_cast<double>(n);
    const double k_red = static_cast<double>(rng.binomial(n, std::min(red, 1.0)));
    const double k_blue = static_cast<double>(rng.binomial(n, std::min(blue, 1.0)));
    return {cfg.probe_time, k_red / dn, k_blue / dn, n};
}

HeatingSeries simulate_heating_series(const SimConfig &cfg, std::span<const double> wait_times)
{
    cfg.validate();
    HeatingSeries series{{}, cfg.trap};
    for (std::size_t i = 0; i < wait_times.size(); ++i) {
        const double w = wait_times[i];
        if (i > 0 && !(w > wait_times[i - 1]))
            throw ValidationError("wait times must be strictly increasing");
        if (w > cfg.max_wait)
            throw ValidationError("wait time exceeds the configured maximum");
        auto obs = simulate_sideband_scan(cfg, w, i);
        if (cfg.analytic()) {
            series.points.push_back({w, nbar_from_asymmetry(obs.p_red / obs.p_blue), {}});
        } else {
            auto est = nbar_with_uncertainty(obs);
            series.points.push_back({w, est.value, est.error});
        }
    }
    return series;
}

FrequencySeries simulate_charging_series(const SimConfig &cfg, double sample_interval,
                                         Interval on_window, double total)
{
    cfg.validate();
    if (!(sample_interval > 0))
        throw ValidationError("sample interval must be positive");
    if (!(total >= 0))
        throw ValidationError("total duration must be >= 0");
    if (!(on_window.start >= 0 && on_window.end >= on_window.start && on_window.end <= total))
        throw ValidationError("light-on window must lie within the record");

    ChargingModelParams on = cfg.charging;
    on.t_on = on_window.start;
    DischargeModelParams off = cfg.discharge;
    off.t_off = on_window.end;
    const bool lit = on_window.end > on_window.start;

    FrequencySeries series;
    if (lit)
        series.light_on_intervals.push_back(on_window);
    const auto count = static_cast<std::uint64_t>(std::floor(total / sample_interval + 1e-9)) + 1;
    for (std::uint64_t k = 0; k < count; ++k) {
        const double t = static_cast<double>(k) * sample_interval;
        double f;
        if (!lit || t < on.t_on)
            f = on.f0;
        else if (t < off.t_off)
            f = charging_freq(t, on);
        else
            f = discharge_freq(t, off);
        std::optional<double> err;
        if (cfg.noise_floor > 0) {
            auto rng = point_rng(cfg, SimStream::Charging, k);
            f += cfg.noise_floor * rng.normal();
            err = cfg.noise_floor;
        }
        series.points.push_back({t, f, err});
    }
    return series;
}

RabiPositionScan simulate_position_scan(const SimConfig &cfg, const GratingOutputModel &beam,
                                        std::span<const double> positions)
{
    cfg.validate();
    beam.validate();
    if (!(beam.peak_intensity > 0))
        throw ValidationError("beam peak intensity must be positive");
    const RabiReference ref{cfg.rabi.base_rabi, beam.peak_intensity};
    RabiPositionScan scan;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const double x = positions[i];
        if (i > 0 && !(x > positions[i - 1]))
            throw ValidationError("positions must be strictly increasing");
        double rabi = rabi_from_intensity(std::max(profile_intensity(x, beam), 0.0), ref);
        if (cfg.rabi_noise > 0) {
            auto rng = point_rng(cfg, SimStream::Position, i);
            rabi = std::max(0.0, rabi * (1 + cfg.rabi_noise * rng.normal()));
        }
        scan.points.push_back({x, rabi, {}});
    }
    return scan;
}

} // namespace iontk
