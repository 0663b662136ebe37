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

#include <map>
#include <numbers>
#include <span>
#include <string>
#include <string_view>

namespace iontk {

namespace constants {
// CODATA 2018 exact / recommended values.
inline constexpr double elementary_charge = 1.602176634e-19;   // C
inline constexpr double hbar = 1.054571817e-34;                 // J s
inline constexpr double atomic_mass_unit = 1.66053906660e-27;   // kg
inline constexpr double two_pi = 2.0 * std::numbers::pi;
} // namespace constants

inline constexpr double angular(double hz) { return constants::two_pi * hz; }
inline constexpr double hertz(double rad_per_s) { return rad_per_s / constants::two_pi; }

enum class Dimension { Dimensionless, Frequency, Time, Length, Field, Decibel, QuantaPerTime };

std::string_view to_string(Dimension d);

/// A scalar tagged with its physical dimension. Only the handful of
/// dimensions this toolkit needs; no general unit algebra.
class Quantity {
public:
    constexpr Quantity(double value, Dimension dim) : value_(value), dim_(dim) {}

    constexpr double value() const { return value_; }
    constexpr Dimension dimension() const { return dim_; }

    Quantity operator+(const Quantity &o) const;
    Quantity operator-(const Quantity &o) const;
    Quantity operator*(double s) const { return {value_ * s, dim_}; }
    Quantity operator/(double s) const { return {value_ / s, dim_}; }
    /// Ratio of two like quantities; mismatched dimensions throw.
    double operator/(const Quantity &o) const;
    bool operator<(const Quantity &o) const;
    bool operator==(const Quantity &o) const;

private:
    double value_;
    Dimension dim_;
};

struct IonSpecies {
    std::string name;
    double mass;   // kg
    double charge; // C
};

/// Name -> species lookup. Starts with the built-in isotopes and can be
/// extended or overridden from a config file.
class SpeciesTable {
public:
    static SpeciesTable builtin();

    const IonSpecies &at(std::string_view name) const;
    bool contains(std::string_view name) const;
    void set(IonSpecies species);

private:
    std::map<std::string, IonSpecies, std::less<>> entries_;
};

IonSpecies species(std::string_view name);

struct PlausibilityWindow {
    double min_axial = angular(0.1e6); // rad/s
    double max_axial = angular(20e6);  // rad/s
};

struct TrapContext {
    IonSpecies species;
    double axial_freq;           // rad/s
    double radial_freq;          // rad/s
    double rf_drive_freq;        // Hz
    double ion_surface_distance; // m
};

TrapContext make_trap_context(std::string_view species_name, double axial_freq,
                              double radial_freq, double distance,
                              const SpeciesTable &table = SpeciesTable::builtin(),
                              const PlausibilityWindow &window = {},
                              double rf_drive_freq = 74.5e6);

/// Total of a chain of gains/losses in dB.
double db_chain(std::span<const double> losses);

} // namespace iontk
