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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "iontk/parameter.hpp"

namespace iontk {

inline constexpr const char *toolkit_version = "iontk 0.1.0";

struct Provenance {
    std::string input_digest; // sha256 of the input bytes, empty when none
    std::optional<std::uint64_t> seed;
    std::string version = toolkit_version;
};

struct FitReport {
    std::string model;
    std::vector<FittedParameter> parameters;
    double residual_rms = 0;
    std::vector<std::string> flags;
    Provenance provenance;
    std::map<std::string, double> statistics;
    std::map<std::string, std::string> notes;

    bool operator==(const FitReport &) const = default;
};

bool operator==(const FittedParameter &a, const FittedParameter &b);
bool operator==(const Provenance &a, const Provenance &b);

/// JSON with sorted keys and two-space indent. Non-finite numbers are
/// written as the strings "inf", "-inf" and "nan".
std::string to_json(const FitReport &report);
FitReport report_from_json(const std::string &text);

} // namespace iontk
