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

#include <optional>
#include <span>
#include <vector>

#include "iontk/units.hpp"

namespace iontk {

struct HeatingPoint {
    double wait_time;               // s
    double nbar;
    std::optional<double> nbar_err;
};

struct HeatingSeries {
    std::vector<HeatingPoint> points;
    TrapContext context;

    /// Strictly increasing times, nbar >= 0, positive errors where given.
    void validate() const;
};

struct HeatingRateResult {
    double ndot;     // quanta/s
    double ndot_err; // quanta/s
    double intercept;
    double intercept_err = 0;
    double chi2 = 0;
    int dof = 0;
};

/// Weighted straight-line fit nbar(t) = intercept + ndot * t. Points with
/// errors get weight 1/sigma^2 and an absolute covariance; if no point
/// carries an error, unit weights and a residual-scaled covariance are used.
HeatingRateResult fit_heating_rate(const HeatingSeries &series);

/// S_E = 4 m hbar omega ndot / q^2, in (V/m)^2/Hz.
double spectral_density_from_rate(const HeatingRateResult &result, const TrapContext &ctx);

/// Inverse of spectral_density_from_rate.
double rate_from_spectral_density(double s_e, const TrapContext &ctx);

/// Rescales a heating rate to another species and secular frequency
/// assuming S_E ~ 1/omega: ndot_ref = ndot (m / m_ref) (omega / omega_ref)^2.
double normalize_rate(const HeatingRateResult &result, const TrapContext &ctx,
                      const IonSpecies &ref_species, double ref_freq);

struct PowerLawFit {
    double amplitude;
    double amplitude_err;
    double exponent; // y = amplitude * x^-exponent
    double exponent_err;
    double chi2 = 0;
    int dof = 0;
};

/// Weighted straight-line fit in log-log space. y_err is optional (empty
/// span means unit weights in log space); relative errors y_err/y are used as
/// the log-space sigmas, which biases the fit when errors are large.
PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y,
                          std::span<const double> y_err = {});

struct ScanSummary {
    double mean;      // quanta/s
    double std_error; // quanta/s
    double chi2;
    int dof;
    double p_value; // consistency with a constant rate
    bool flat;      // p_value > threshold
};

struct PositionRate {
    double position; // m
    HeatingRateResult rate;
};

/// Inverse-variance weighted mean across positions plus a chi-square test
/// of the constant-rate hypothesis.
ScanSummary position_scan_summary(std::span<const PositionRate> rates,
                                  double p_threshold = 0.05);

/// Upper tail of the chi-square distribution.
double chi2_survival(double chi2, int dof);

} // namespace iontk
