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
#include <utility>
#include <vector>

namespace iontk {

/// Thermal (Bose-Einstein) distribution of a single motional mode.
class ThermalMotionalState {
public:
    explicit ThermalMotionalState(double nbar);

    double nbar() const { return nbar_; }

    /// p_n = nbar^n / (nbar + 1)^(n + 1)
    double probability(long n) const;

    /// Smallest N with sum_{n<=N} p_n >= 1 - tail.
    long cutoff(double tail = 1e-12) const;

private:
    double nbar_;
};

double fock_probability(const ThermalMotionalState &state, long n);

enum class MatrixElementModel { FirstOrderLambDicke, ExactLaguerre };

enum class Sideband : int { Red = -1, Blue = +1 };

struct RabiParams {
    double base_rabi;  // rad/s, carrier Rabi frequency
    double lamb_dicke; // eta
    MatrixElementModel model = MatrixElementModel::FirstOrderLambDicke;

    void validate() const;
};

/// Rabi frequency of the n -> n+1 (blue) or n -> n-1 (red) transition.
double sideband_rabi_frequency(const RabiParams &params, long n, Sideband order);

/// Thermally averaged excitation probability after a square pulse of
/// duration probe_time on the chosen sideband.
double sideband_excitation(const ThermalMotionalState &state, const RabiParams &params,
                           double probe_time, Sideband order);

/// Per-level weights and blue-sideband Rabi frequencies of a thermal state,
/// truncated at cumulative probability 1 - tail. Evaluating many probe
/// times against one table avoids recomputing the matrix elements.
class ThermalSidebandTable {
public:
    ThermalSidebandTable(const ThermalMotionalState &state, const RabiParams &params,
                         double tail = 1e-12);

    double excitation(double probe_time, Sideband order) const;
    std::size_t levels() const { return weight_.size(); }

private:
    double ratio_;
    std::vector<double> weight_; // p_n
    std::vector<double> rabi_;   // Omega_{n,n+1}
};

/// Inverts p_red / p_blue = nbar / (nbar + 1).
double nbar_from_asymmetry(double ratio);

struct SidebandObservation {
    double probe_time; // s
    double p_red;
    double p_blue;
    std::uint64_t shots;

    void validate() const;
};

struct Estimate {
    double value;
    double error;
};

/// nbar from one red/blue pair, with first-order propagation of the
/// binomial projection noise on both proportions.
Estimate nbar_with_uncertainty(const SidebandObservation &obs);

} // namespace iontk
