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

#pragma once

#include <cstdint>
#include <span>

#include "iontk/beam.hpp"
#include "iontk/charging.hpp"
#include "iontk/heating.hpp"
#include "iontk/rng.hpp"
#include "iontk/thermometry.hpp"
#include "iontk/units.hpp"

namespace iontk {

/// Stream identifiers; each simulated quantity draws from its own stream,
/// split further by point index.
enum class SimStream : std::uint64_t { Sideband = 1, Charging = 2, Position = 3 };

struct SimConfig {
    std::uint64_t seed = 0;
    /// Shots per sideband probe; 0 selects analytic mode (exact probabilities).
    std::uint64_t shots_per_point = 500;
    TrapContext trap;
    RabiParams rabi;
    double probe_time;        // s
    double initial_nbar;
    double heating_rate;      // quanta/s
    double max_wait = 2e-3;   // s, longest heating wait accepted
    ChargingModelParams charging;
    DischargeModelParams discharge;
    double noise_floor;       // Hz, Gaussian frequency noise
    double rabi_noise = 0.05; // relative, position scans

    bool analytic() const { return shots_per_point == 0; }
    void validate() const;

    /// Yb-171 at 2 pi x 5.329 MHz, 20 um; <n> 0.1 -> +0.78 q/ms; charging
    /// T1 = 21 s, T2 = 900 s, df1 - df2 = 101 kHz; discharge T3 = 360 s,
    /// T4 = 18000 s, continuous with the charging curve at t_off = 2400 s.
    static SimConfig defaults();
};

CounterRng point_rng(const SimConfig &cfg, SimStream stream, std::uint64_t index);

/// One red/blue probe after wait_time of heating. index selects the point's
/// random stream.
SidebandObservation simulate_sideband_scan(const SimConfig &cfg, double wait_time,
                                           std::uint64_t index = 0);

HeatingSeries simulate_heating_series(const SimConfig &cfg, std::span<const double> wait_times);

/// Baseline f0 before on_window.start, light-on model inside the window,
/// light-off model after it; samples every sample_interval from 0 to total.
FrequencySeries simulate_charging_series(const SimConfig &cfg, double sample_interval,
                                         Interval on_window, double total);

RabiPositionScan simulate_position_scan(const SimConfig &cfg, const GratingOutputModel &beam,
                                        std::span<const double> positions);

} // namespace iontk
