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

enum class BeamMode { SingleGaussian, TwoBeamlet };

/// Grating output beam along the scan axis. In two-beamlet mode the field
/// is g(x - x1) + ratio * e^{i phase} g(x - x2), x1,2 = center -+ sep/2,
/// g(u) = exp(-u^2 / waist^2): a phenomenological surrogate for the
/// reflector-spacing interference that splits the focus.
struct GratingOutputModel {
    double emission_angle = 63.0; // degrees; metadata only
    double waist = 0.9e-6;        // m (beamlet waist in two-beamlet mode)
    double focus_height = 20e-6;  // m
    double peak_intensity = 1.0;  // W/m^2 or relative
    BeamMode mode = BeamMode::TwoBeamlet;
    double beamlet_separation = 1.8e-6; // m, between beamlet centres
    double beamlet_phase = 0.0;         // rad
    double beamlet_amplitude_ratio = 1.0;
    double center = 0.0; // m, beamlet midpoint along the scan axis

    void validate() const;
};

/// Paraxial Gaussian beam irradiance.
double gaussian_intensity(double r, double z, double waist, double wavelength, double peak);

double rayleigh_range(double waist, double wavelength);

double two_beamlet_intensity(double x, const GratingOutputModel &model);

/// Intensity along the scan axis for either mode.
double profile_intensity(double x, const GratingOutputModel &model);

struct RabiReference {
    double rabi;      // rad/s
    double intensity; // same units as the intensities being mapped
};

/// Omega = rabi_ref * sqrt(I / I_ref); the Rabi frequency follows the field amplitude.
double rabi_from_intensity(double intensity, const RabiReference &ref);

double pi_time_to_rabi(double t_pi);
double rabi_to_pi_time(double rabi);

struct RabiPoint {
    double position; // m
    double rabi;     // rad/s
    std::optional<double> rabi_err;
};

struct RabiPositionScan {
    std::vector<RabiPoint> points;

    void validate() const;
};

struct ProfileFitOptions {
    double weak_threshold = 0.5;
    double default_waist = 0.9e-6;
    /// When given, the fitted model's peak_intensity is calibrated against it.
    std::optional<RabiReference> reference;
};

struct ProfileFit {
    GratingOutputModel model;
    double rabi_scale; // rad/s per unit field amplitude
    std::vector<FittedParameter> parameters;
    std::vector<std::string> flags;
    std::vector<double> peak_positions; // m, local maxima of the fitted intensity
    double peak_separation = 0;         // m, between the two strongest maxima
    double dip_depth = 0;               // 1 - I(dip) / min(I(peaks))
    double residual_rms = 0;            // rad/s
    double chi2 = 0;
    int dof = 0;
    Eigen::MatrixXd covariance;

    bool has_flag(const std::string &flag) const;
    double rabi_at(double x) const;
};

/// Nonlinear least-squares fit of Omega(x) = scale * |field(x)| to a scan,
/// multi-started over separation / phase / waist seeds.
ProfileFit fit_profile(const RabiPositionScan &scan, BeamMode mode,
                       const ProfileFitOptions &options = {});

} // namespace iontk
