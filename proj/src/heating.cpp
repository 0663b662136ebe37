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

#include "iontk/heating.hpp"

#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "iontk/errors.hpp"
#include "iontk/lsq.hpp"

namespace iontk {

void HeatingSeries::validate() const
{
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto &p = points[i];
        if (!std::isfinite(p.wait_time) || !std::isfinite(p.nbar))
            throw ValidationError("heating series: non-finite value at point " + std::to_string(i));
        if (p.nbar < 0)
            throw ValidationError("heating series: negative nbar at point " + std::to_string(i));
        if (p.nbar_err && !(*p.nbar_err > 0))
            throw ValidationError("heating series: non-positive error at point " +
                                  std::to_string(i));
        if (i > 0 && !(p.wait_time > points[i - 1].wait_time))
            throw ValidationError("heating series: wait times not strictly increasing at point " +
                                  std::to_string(i));
    }
}

HeatingRateResult fit_heating_rate(const HeatingSeries &series)
{
    series.validate();
    const auto n = static_cast<Eigen::Index>(series.points.size());
    if (n < 3)
        throw ValidationError("fit_heating_rate: need at least 3 points");

    bool any_err = false, all_err = true;
    for (const auto &p : series.points) {
        any_err = any_err || p.nbar_err.has_value();
        all_err = all_err && p.nbar_err.has_value();
    }
    if (any_err && !all_err)
        throw ValidationError("fit_heating_rate: errors must be given for all points or none");

    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd y(n), sigma(all_err ? n : 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto &p = series.points[static_cast<std::size_t>(i)];
        design(i, 0) = 1.0;
        design(i, 1) = p.wait_time;
        y[i] = p.nbar;
        if (all_err)
            sigma[i] = *p.nbar_err;
    }
    const auto fit = lsq::weighted_linear(design, y, sigma);
    return {fit.coef[1], std::sqrt(fit.cov(1, 1)), fit.coef[0], std::sqrt(fit.cov(0, 0)),
            fit.chi2, fit.dof};
}

double spectral_density_from_rate(const HeatingRateResult &result, const TrapContext &ctx)
{
    if (!(result.ndot >= 0))
        throw ValidationError("heating rate must be >= 0");
    const double q = ctx.species.charge;
    return 4 * ctx.species.mass * constants::hbar * ctx.axial_freq * result.ndot / (q * q);
}

double rate_from_spectral_density(double s_e, const TrapContext &ctx)
{
    const double q = ctx.species.charge;
    return q * q * s_e / (4 * ctx.species.mass * constants::hbar * ctx.axial_freq);
}

double normalize_rate(const HeatingRateResult &result, const TrapContext &ctx,
                      const IonSpecies &ref_species, double ref_freq)
{
    if (!(result.ndot >= 0))
        throw ValidationError("heating rate must be >= 0");
    if (!(ref_freq > 0) || !(ref_species.mass > 0))
        throw ValidationError("reference frequency and mass must be positive");
    const double w = ctx.axial_freq / ref_freq;
    return result.ndot * (ctx.species.mass / ref_species.mass) * w * w;
}

PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y,
                          std::span<const double> y_err)
{
    const auto n = static_cast<Eigen::Index>(x.size());
    if (y.size() != x.size() || (!y_err.empty() && y_err.size() != x.size()))
        throw ValidationError("fit_power_law: size mismatch");
    if (n < 3)
        throw ValidationError("fit_power_law: need at least 3 points");

    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd ly(n), sigma(y_err.empty() ? 0 : n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (!(x[k] > 0) || !(y[k] > 0) || !std::isfinite(x[k]) || !std::isfinite(y[k]))
            throw ValidationError("fit_power_law: data must be positive and finite");
        design(i, 0) = 1.0;
        design(i, 1) = -std::log(x[k]);
        ly[i] = std::log(y[k]);
        if (!y_err.empty())
            sigma[i] = y_err[k] / y[k];
    }
    const auto fit = lsq::weighted_linear(design, ly, sigma);
    const double amp = std::exp(fit.coef[0]);
    return {amp, amp * std::sqrt(fit.cov(0, 0)), fit.coef[1], std::sqrt(fit.cov(1, 1)), fit.chi2,
            fit.dof};
}

double chi2_survival(double chi2, int dof)
{
    if (dof <= 0)
        throw ValidationError("chi2_survival: dof must be positive");
    if (chi2 <= 0)
        return 1.0;
    return boost::math::gamma_q(0.5 * dof, 0.5 * chi2);
}

ScanSummary position_scan_summary(std::span<const PositionRate> rates, double p_threshold)
{
    if (rates.size() < 2)
        throw ValidationError("position_scan_summary: need at least 2 positions");
    double sw = 0, swx = 0;
    for (const auto &r : rates) {
        if (!(r.rate.ndot_err > 0))
            throw ValidationError("position_scan_summary: rate errors must be positive");
        double w = 1 / (r.rate.ndot_err * r.rate.ndot_err);
        sw += w;
        swx += w * r.rate.ndot;
    }
    const double mean = swx / sw;
    double chi2 = 0;
    for (const auto &r : rates) {
        double z = (r.rate.ndot - mean) / r.rate.ndot_err;
        chi2 += z * z;
    }
    const int dof = static_cast<int>(rates.size()) - 1;
    const double p = chi2_survival(chi2, dof);
    return {mean, 1 / std::sqrt(sw), chi2, dof, p, p > p_threshold};
}

} // namespace iontk
