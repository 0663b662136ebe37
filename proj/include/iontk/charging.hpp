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
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "iontk/parameter.hpp"

namespace iontk {

/// Light-on model: two opposing charging effects settling with time
/// constants T1 (fast) and T2 (slow).
///   f(t) = f0 + df1 (1 - e^{-(t-t_on)/T1}) - df2 (1 - e^{-(t-t_on)/T2})
struct ChargingModelParams {
    double df1; // Hz
    double df2; // Hz
    double T1;  // s
    double T2;  // s
    double t_on;
    double f0; // Hz

    void validate() const;
};

/// Light-off model:
///   f(t) = f0 - df3 e^{-(t-t_off)/T3} - df4 e^{-(t-t_off)/T4}
struct DischargeModelParams {
    double df3;
    double df4;
    double T3;
    double T4;
    double t_off;
    double f0;

    void validate() const;
};

struct FrequencyPoint {
    double time; // s
    double freq; // Hz
    std::optional<double> freq_err;
};

struct Interval {
    double start;
    double end;
};

struct FrequencySeries {
    std::vector<FrequencyPoint> points;
    std::vector<Interval> light_on_intervals;

    void validate() const;
};

struct DutyCycle {
    double probe_time;    // s
    double duty_fraction; // (0, 1]

    void validate() const;
    double cycle_period() const { return probe_time / duty_fraction; }
};

double charging_freq(double t, const ChargingModelParams &p);
double discharge_freq(double t, const DischargeModelParams &p);

struct ExpFitReport {
    std::string model;
    std::vector<FittedParameter> parameters; // includes derived quantities
    Eigen::MatrixXd covariance;              // over the free internal parameters
    std::vector<std::string> free_parameters;
    std::vector<std::string> flags;
    double residual_rms = 0; // Hz, unweighted
    double chi2 = 0;
    int dof = 0;
    std::size_t points = 0;
    int starts = 0;
    int iterations = 0;
    /// chi2 rise when the slower time constant is pinned far beyond the window.
    std::optional<double> profile_delta_chi2;

    const FittedParameter &parameter(const std::string &name) const;
    bool has_flag(const std::string &flag) const;
};

enum class F0Mode { Free, Fixed };

struct ExpFitOptions {
    F0Mode f0_mode = F0Mode::Free;
    /// Used when f0_mode is Fixed. If empty, the weighted mean of the points
    /// before t_on is used (charging fits only).
    std::optional<double> f0;
    /// End of the fit window; defaults to the end of the light-on interval
    /// starting at t_on (charging) or to the last point (discharge).
    std::optional<double> t_end;
    /// Include points before t_on as f = f0 constraints (charging fits only).
    bool use_baseline = true;
    /// Relative standard error above which a parameter is flagged weak.
    double weak_threshold = 0.5;
    std::vector<double> seed_grid{1, 10, 100, 1e3, 1e4};
    /// Profile check on the slower time constant: it is refit pinned at
    /// profile_factor times the window span, and flagged weak (unbounded
    /// above) if chi2 rises by less than profile_delta_chi2. Zero disables.
    double profile_factor = 10;
    double profile_delta_chi2 = 9;
    /// Discharge only: enforce f_dq(t_off) = f0 + shift by eliminating df4,
    /// where shift = f_q(t_off) - f0 from the charging fit.
    std::optional<double> continuity_shift;
};

struct ChargingFit {
    ChargingModelParams params;
    ExpFitReport report;
};

struct DischargeFit {
    DischargeModelParams params;
    ExpFitReport report;
};

/// Weighted damped Gauss-Newton fit of the light-on model with multi-start
/// seeding over pairs T_fast < T_slow from the seed grid.
ChargingFit fit_charging(const FrequencySeries &series, double t_on,
                         const ExpFitOptions &options = {});

DischargeFit fit_discharge(const FrequencySeries &series, double t_off,
                           const ExpFitOptions &options = {});

/// df1 - df2, the shift the light-on model settles to.
double settled_offset(const ChargingModelParams &p);

/// Field needed to cancel a frequency offset, linear in the offset.
/// Calibration pair: 2.4 kV/cm cancels 0.1 MHz.
struct FieldCalibration {
    double field = 2.4e5;  // V/m
    double offset = 1e5;   // Hz

    double sensitivity() const { return field / offset; }
};

double compensation_field(double offset, const FieldCalibration &cal = {});
double compensation_field(double offset, double sensitivity);

struct Exposure {
    double exposure;     // s of equivalent continuous illumination
    double cycle_period; // s
};

Exposure effective_exposure(const DutyCycle &duty, double wall_time);

struct Histogram {
    double lo = 0;
    double width = 0;
    std::vector<std::size_t> counts;
};

struct StabilityReport {
    std::vector<double> times;
    std::vector<double> residuals; // data - model, Hz
    double mean = 0;
    double sigma = 0; // sample standard deviation, Hz
    Histogram histogram;
    double jarque_bera = 0;
    double jarque_bera_p = 1;
    double lag1_autocorrelation = 0;
    bool normality_flag = false;   // Jarque-Bera p < 0.01
    bool correlation_flag = false; // |rho_1| > 3 / sqrt(n)
};

/// Residual statistics over the settled part of a light-on record:
/// points with t - t_on > settle_after (default 5 * max(T1, T2)) inside the
/// light-on interval.
StabilityReport settled_stability(const FrequencySeries &series, const ChargingModelParams &fit,
                                  std::optional<double> settle_after = {}, int bins = 0);

} // namespace iontk
