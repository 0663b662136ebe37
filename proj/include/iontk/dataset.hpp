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

// Tabular datasets: comma-separated text, optional "# key: value" metadata
// lines, then a mandatory header row of "name:unit" columns. Values are
// converted to SI on load (Rabi columns in Hz/kHz are read as Omega / 2 pi).
//
//   # kind: charging
//   # light_on: 400, 2400
//   time:s, freq:MHz, err:Hz
//   0, 5.329001, 1000

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iontk/beam.hpp"
#include "iontk/charging.hpp"
#include "iontk/heating.hpp"
#include "iontk/thermometry.hpp"

namespace iontk {

enum class DatasetKind { Heating, Charging, SidebandScan, PositionScan };

std::string_view to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(std::string_view s);

struct Column {
    std::string name;
    std::string unit; // SI unit after load
};

struct Dataset {
    DatasetKind kind;
    std::vector<Column> columns;
    std::vector<std::vector<double>> rows; // SI values
    std::map<std::string, std::string> metadata;

    std::optional<std::size_t> column_index(std::string_view name) const;
    std::vector<double> column(std::string_view name) const;
};

Dataset parse_dataset(std::istream &in, DatasetKind kind, const std::string &source = "<input>");
Dataset load_dataset(const std::filesystem::path &path, DatasetKind kind);

/// Serialises with 17 significant digits so that a reload is exact.
std::string format_dataset(const Dataset &ds);
void write_dataset(const std::filesystem::path &path, const Dataset &ds);

HeatingSeries to_heating_series(const Dataset &ds, const TrapContext &ctx);
FrequencySeries to_frequency_series(const Dataset &ds);
RabiPositionScan to_position_scan(const Dataset &ds);
std::vector<SidebandObservation> to_sideband_observations(const Dataset &ds);

Dataset make_dataset(const HeatingSeries &series);
Dataset make_dataset(const FrequencySeries &series);
Dataset make_dataset(const RabiPositionScan &scan);
Dataset make_dataset(std::span<const SidebandObservation> observations,
                     std::span<const double> wait_times);

/// Distance from the loading hole to the output grating along the trap axis.
inline constexpr double default_grating_offset = 80e-6; // m

} // namespace iontk
