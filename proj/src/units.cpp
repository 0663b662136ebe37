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

#include "iontk/units.hpp"

#include <cmath>

#include "iontk/errors.hpp"

namespace iontk {

std::string_view to_string(Dimension d)
{
    switch (d) {
    case Dimension::Dimensionless: return "dimensionless";
    case Dimension::Frequency: return "frequency";
    case Dimension::Time: return "time";
    case Dimension::Length: return "length";
    case Dimension::Field: return "field";
    case Dimension::Decibel: return "dB";
    case Dimension::QuantaPerTime: return "quanta/time";
    }
    return "?";
}

namespace {

void require_same(Dimension a, Dimension b, const char *op)
{
    if (a != b)
        throw ValidationError(std::string("dimension mismatch in ") + op + ": " +
                              std::string(to_string(a)) + " vs " + std::string(to_string(b)));
}

} // namespace

Quantity Quantity::operator+(const Quantity &o) const
{
    require_same(dim_, o.dim_, "+");
    return {value_ + o.value_, dim_};
}

Quantity Quantity::operator-(const Quantity &o) const
{
    require_same(dim_, o.dim_, "-");
    return {value_ - o.value_, dim_};
}

double Quantity::operator/(const Quantity &o) const
{
    require_same(dim_, o.dim_, "/");
    return value_ / o.value_;
}

bool Quantity::operator<(const Quantity &o) const
{
    require_same(dim_, o.dim_, "<");
    return value_ < o.value_;
}

bool Quantity::operator==(const Quantity &o) const
{
    require_same(dim_, o.dim_, "==");
    return value_ == o.value_;
}

SpeciesTable SpeciesTable::builtin()
{
    using constants::atomic_mass_unit;
    using constants::elementary_charge;
    SpeciesTable t;
    t.set({"Yb-171", 170.936 * atomic_mass_unit, elementary_charge});
    t.set({"Ca-40", 39.963 * atomic_mass_unit, elementary_charge});
    return t;
}

const IonSpecies &SpeciesTable::at(std::string_view name) const
{
    auto it = entries_.find(name);
    if (it == entries_.end())
        throw ValidationError("unknown species: " + std::string(name));
    return it->second;
}

bool SpeciesTable::contains(std::string_view name) const
{
    return entries_.find(name) != entries_.end();
}

void SpeciesTable::set(IonSpecies s)
{
    if (s.name.empty())
        throw ValidationError("species name must be non-empty");
    if (!(s.mass > 0) || !std::isfinite(s.mass))
        throw ValidationError("species mass must be positive: " + s.name);
    if (!(s.charge > 0) || !std::isfinite(s.charge))
        throw ValidationError("species charge must be positive: " + s.name);
    auto key = s.name;
    entries_.insert_or_assign(std::move(key), std::move(s));
}

IonSpecies species(std::string_view name)
{
    return SpeciesTable::builtin().at(name);
}

TrapContext make_trap_context(std::string_view species_name, double axial_freq,
                              double radial_freq, double distance,
                              const SpeciesTable &table, const PlausibilityWindow &window,
                              double rf_drive_freq)
{
    const auto &sp = table.at(species_name);
    auto positive = [](double v) { return std::isfinite(v) && v > 0; };
    if (!positive(axial_freq))
        throw ValidationError("axial frequency must be positive");
    if (!positive(radial_freq))
        throw ValidationError("radial frequency must be positive");
    if (!positive(rf_drive_freq))
        throw ValidationError("rf drive frequency must be positive");
    if (!positive(distance))
        throw ValidationError("ion-surface distance must be positive");
    if (axial_freq < window.min_axial || axial_freq > window.max_axial)
        throw ValidationError("axial frequency outside plausibility window: " +
                              std::to_string(hertz(axial_freq)) + " Hz");
    return {sp, axial_freq, radial_freq, rf_drive_freq, distance};
}

double db_chain(std::span<const double> losses)
{
    if (losses.empty())
        throw ValidationError("db_chain: empty loss sequence");
    // Neumaier summation keeps the total order-independent to rounding.
    double sum = 0, comp = 0;
    for (double v : losses) {
        if (!std::isfinite(v))
            throw ValidationError("db_chain: non-finite term");
        double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    return sum + comp;
}

} // namespace iontk
