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

#include "iontk/beam.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "iontk/errors.hpp"
#include "iontk/lsq.hpp"

namespace iontk {

using std::numbers::pi;

void GratingOutputModel::validate() const
{
    if (!(waist > 0))
        throw ValidationError("beam waist must be positive");
    if (!(focus_height > 0))
        throw ValidationError("focus height must be positive");
    if (!(beamlet_amplitude_ratio >= 0))
        throw ValidationError("beamlet amplitude ratio must be >= 0");
    if (!(peak_intensity >= 0))
        throw ValidationError("peak intensity must be >= 0");
}

double rayleigh_range(double waist, double wavelength)
{
    return pi * waist * waist / wavelength;
}

double gaussian_intensity(double r, double z, double waist, double wavelength, double peak)
{
    if (!(wavelength > 0) || !(waist > wavelength / pi))
        throw ValidationError("gaussian_intensity: waist must exceed wavelength/pi");
    const double zr = rayleigh_range(waist, wavelength);
    const double ratio2 = 1 + (z / zr) * (z / zr); // (w(z)/w0)^2
    const double wz2 = waist * waist * ratio2;
    return peak / ratio2 * std::exp(-2 * r * r / wz2);
}

namespace {

// |g1 + r e^{i phi} g2|^2 with unit-peak field envelopes
double field_sq(double x, double center, double sep, double waist, double ratio, double phase)
{
    const double u1 = (x - (center - sep / 2)) / waist;
    const double u2 = (x - (center + sep / 2)) / waist;
    const double g1 = std::exp(-u1 * u1);
    const double g2 = std::exp(-u2 * u2);
    return g1 * g1 + ratio * ratio * g2 * g2 + 2 * ratio * g1 * g2 * std::cos(phase);
}

} // namespace

double two_beamlet_intensity(double x, const GratingOutputModel &m)
{
    m.validate();
    if (m.mode != BeamMode::TwoBeamlet)
        throw ValidationError("two_beamlet_intensity requires two-beamlet mode");
    return m.peak_intensity * field_sq(x, m.center, m.beamlet_separation, m.waist,
                                       m.beamlet_amplitude_ratio, m.beamlet_phase);
}

double profile_intensity(double x, const GratingOutputModel &m)
{
    if (m.mode == BeamMode::TwoBeamlet)
        return two_beamlet_intensity(x, m);
    m.validate();
    const double u = (x - m.center) / m.waist;
    return m.peak_intensity * std::exp(-2 * u * u);
}

double rabi_from_intensity(double intensity, const RabiReference &ref)
{
    if (!(ref.intensity > 0))
        throw ValidationError("reference intensity must be positive");
    if (!(intensity >= 0))
        throw ValidationError("intensity must be >= 0");
    return ref.rabi * std::sqrt(intensity / ref.intensity);
}

double pi_time_to_rabi(double t_pi)
{
    if (!(t_pi > 0))
        throw ValidationError("pi time must be positive");
    return pi / t_pi;
}

double rabi_to_pi_time(double rabi)
{
    if (!(rabi > 0))
        throw ValidationError("Rabi frequency must be positive");
    return pi / rabi;
}

void RabiPositionScan::validate() const
{
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto &p = points[i];
        if (!std::isfinite(p.position) || !std::isfinite(p.rabi))
            throw ValidationError("position scan: non-finite value at point " + std::to_string(i));
        if (p.rabi < 0)
            throw ValidationError("position scan: negative Rabi frequency at point " +
                                  std::to_string(i));
        if (p.rabi_err && !(*p.rabi_err > 0))
            throw ValidationError("position scan: non-positive error at point " +
                                  std::to_string(i));
        if (i > 0 && !(p.position > points[i - 1].position))
            throw ValidationError("position scan: positions not strictly increasing at point " +
                                  std::to_string(i));
    }
}

bool ProfileFit::has_flag(const std::string &flag) const
{
    return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

double ProfileFit::rabi_at(double x) const
{
    GratingOutputModel unit = model;
    unit.peak_intensity = 1.0;
    return rabi_scale * std::sqrt(std::max(profile_intensity(x, unit), 0.0));
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Internal parameters are in micrometres and Rabi-scale units so that the
// finite-difference steps are well scaled:
//   single: [A, c, w]      two: [A, c, s, w, r, phi]
constexpr double um = 1e-6;

double model_rabi(const VectorXd &p, double x_um, bool two)
{
    if (!two) {
        const double u = (x_um - p[1]) / p[2];
        return p[0] * std::exp(-u * u);
    }
    return p[0] * std::sqrt(std::max(field_sq(x_um, p[1], p[2], p[3], p[4], p[5]), 0.0));
}

double wrap_phase(double phi)
{
    phi = std::remainder(phi, 2 * pi); // [-pi, pi]
    if (phi <= -pi)
        phi += 2 * pi;
    return phi;
}

VectorXd canonical(VectorXd p, bool two)
{
    if (!two) {
        p[2] = std::abs(p[2]);
        return p;
    }
    p[3] = std::abs(p[3]);
    if (p[4] < 0) {
        p[4] = -p[4];
        p[5] += pi;
    }
    if (p[2] < 0) {
        // swap the beamlets: g2 + r e^{i phi} g1 = r e^{i phi} (g1 + (1/r) e^{-i phi} g2)
        p[2] = -p[2];
        if (p[4] > 0) {
            p[0] *= p[4];
            p[4] = 1 / p[4];
            p[5] = -p[5];
        }
    }
    p[5] = wrap_phase(p[5]);
    return p;
}

// Local maxima of f on [lo, hi]: dense scan then golden-section refinement.
std::vector<double> local_maxima(const std::function<double(double)> &f, double lo, double hi)
{
    const int n = 4001;
    const double h = (hi - lo) / (n - 1);
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i)
        v[static_cast<std::size_t>(i)] = f(lo + i * h);
    std::vector<double> out;
    for (int i = 1; i + 1 < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (!(v[k] > v[k - 1] && v[k] >= v[k + 1]))
            continue;
        double a = lo + (i - 1) * h, b = lo + (i + 1) * h;
        const double gr = (std::sqrt(5.0) - 1) / 2;
        double c = b - gr * (b - a), d = a + gr * (b - a);
        double fc = f(c), fd = f(d);
        for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
            if (fc > fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - gr * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + gr * (b - a);
                fd = f(d);
            }
        }
        out.push_back(0.5 * (a + b));
    }
    return out;
}

} // namespace

ProfileFit fit_profile(const RabiPositionScan &scan, BeamMode mode, const ProfileFitOptions &opt)
{
    scan.validate();
    const auto &pts = scan.points;
    if (pts.size() < 7)
        throw ValidationError("fit_profile: need at least 7 scan points");
    const bool two = mode == BeamMode::TwoBeamlet;
    const int k = two ? 6 : 3;

    bool any_err = false, all_err = true;
    for (const auto &p : pts) {
        any_err = any_err || p.rabi_err.has_value();
        all_err = all_err && p.rabi_err.has_value();
    }
    if (any_err && !all_err)
        throw ValidationError("fit_profile: errors must be given for all points or none");

    const auto m = static_cast<Eigen::Index>(pts.size());
    std::vector<double> x(pts.size()), y(pts.size()), s(pts.size());
    double ymax = 0, sw = 0, sx = 0, sxx = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        x[i] = pts[i].position / um;
        y[i] = pts[i].rabi;
        s[i] = all_err ? *pts[i].rabi_err : 1.0;
        ymax = std::max(ymax, y[i]);
        const double w = y[i] * y[i];
        sw += w;
        sx += w * x[i];
        sxx += w * x[i] * x[i];
    }
    if (!(ymax > 0))
        throw ValidationError("fit_profile: scan has no signal");
    // Normalise Rabi values so that the amplitude parameter is O(1).
    const double yscale = ymax;
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] /= yscale;
        s[i] /= yscale;
    }
    const double centroid = sx / sw;
    const double rms = std::sqrt(std::max(sxx / sw - centroid * centroid, 1e-6));

    lsq::Problem prob;
    prob.num_residuals = m;
    prob.residuals = [&](const VectorXd &p, VectorXd &r) {
        for (std::size_t i = 0; i < x.size(); ++i)
            r[static_cast<Eigen::Index>(i)] = (model_rabi(p, x[i], two) - y[i]) / s[i];
    };
    prob.typical = VectorXd::Constant(k, 1.0);

    std::vector<VectorXd> starts;
    const double w_default = opt.default_waist / um;
    if (!two) {
        for (double w : {rms * 2, w_default}) {
            VectorXd p(3);
            p << 1.0, centroid, w;
            starts.push_back(p);
        }
    } else {
        for (double sep : {1.0 * rms, 2.0 * rms, 1.8})
            for (double w : {w_default, rms})
                for (double phi : {0.0, pi / 2, pi, 3 * pi / 2}) {
                    VectorXd p(6);
                    p << 1.0, centroid, sep, w, 1.0, phi;
                    starts.push_back(p);
                }
    }

    VectorXd p;
    bool nested = false;
    try {
        p = canonical(lsq::multi_start(prob, starts).params, two);
    } catch (const FitError &e) {
        if (!two)
            throw;
        // Starts that creep towards separation or ratio zero never settle.
        // Accept the nested single-Gaussian point when it is at least as good.
        const auto single = fit_profile(scan, BeamMode::SingleGaussian, opt);
        if (!(single.chi2 <= 2 * e.best_cost() * (1 + 1e-9)))
            throw;
        p = VectorXd::Zero(6);
        p << single.rabi_scale / yscale, single.model.center / um, 0.0, single.model.waist / um,
            0.0, 0.0;
        nested = true;
    }
    VectorXd r(m);
    prob.residuals(p, r);
    MatrixXd jac = lsq::numeric_jacobian(prob, p);

    ProfileFit out;
    out.chi2 = r.squaredNorm();
    out.dof = static_cast<int>(m) - k;
    const double scale = all_err ? 1.0 : (out.dof > 0 ? out.chi2 / out.dof : 1.0);
    auto cov = lsq::covariance_from_jacobian(jac, scale);
    out.covariance = cov.matrix;
    double ss = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
        double d = r[i] * s[static_cast<std::size_t>(i)] * yscale;
        ss += d * d;
    }
    out.residual_rms = std::sqrt(ss / static_cast<double>(m));

    auto err = [&](int i) { return std::sqrt(cov.matrix(i, i)); };
    out.rabi_scale = p[0] * yscale;
    GratingOutputModel &gm = out.model;
    gm.mode = mode;
    gm.center = p[1] * um;
    if (two) {
        gm.beamlet_separation = p[2] * um;
        gm.waist = p[3] * um;
        gm.beamlet_amplitude_ratio = p[4];
        gm.beamlet_phase = p[5];
    } else {
        gm.waist = p[2] * um;
        gm.beamlet_separation = 0;
        gm.beamlet_amplitude_ratio = 0;
    }
    if (opt.reference)
        gm.peak_intensity = opt.reference->intensity *
                            std::pow(out.rabi_scale / opt.reference->rabi, 2);
    else
        gm.peak_intensity = out.rabi_scale * out.rabi_scale;

    const double thr = opt.weak_threshold;
    auto add = [&](const char *name, double value, double e, const char *unit, bool check) {
        bool weak = check && !(e <= thr * std::abs(value));
        out.parameters.push_back({name, value, e, unit, weak});
        if (weak)
            out.flags.push_back(std::string("weak:") + name);
    };
    add("rabi_scale", out.rabi_scale, err(0) * yscale, "rad/s", true);
    add("center", gm.center, err(1) * um, "m", false);
    if (two) {
        add("beamlet_separation", gm.beamlet_separation, err(2) * um, "m", true);
        add("waist", gm.waist, err(3) * um, "m", true);
        add("beamlet_amplitude_ratio", gm.beamlet_amplitude_ratio, err(4), "", true);
        add("beamlet_phase", gm.beamlet_phase, err(5), "rad", false);
        if (err(5) > thr * pi)
            out.flags.push_back("weak:beamlet_phase");
    } else {
        add("waist", gm.waist, err(2) * um, "m", true);
    }
    if (cov.singular)
        out.flags.push_back("covariance_singular");
    if (two && (cov.singular || gm.beamlet_amplitude_ratio < 1e-3 ||
                out.has_flag("weak:beamlet_separation") || out.has_flag("weak:beamlet_amplitude_ratio")))
        out.flags.push_back("degenerate");
    if (nested) {
        out.flags.push_back("not_converged");
        out.flags.push_back("nested_single_gaussian");
    }
    if (!all_err)
        out.flags.push_back("unweighted");

    // Peaks of the fitted intensity over the scanned range.
    GratingOutputModel unit = gm;
    unit.peak_intensity = 1.0;
    auto intensity = [&](double xm) { return profile_intensity(xm, unit); };
    const double lo = pts.front().position, hi = pts.back().position;
    auto maxima = local_maxima(intensity, lo, hi);
    std::sort(maxima.begin(), maxima.end(),
              [&](double a, double b) { return intensity(a) > intensity(b); });
    if (maxima.size() > 2)
        maxima.resize(2);
    std::sort(maxima.begin(), maxima.end());
    out.peak_positions = maxima;
    if (maxima.size() == 2) {
        out.peak_separation = maxima[1] - maxima[0];
        auto neg = [&](double xm) { return -intensity(xm); };
        auto dips = local_maxima(neg, maxima[0], maxima[1]);
        double dip = dips.empty() ? std::min(intensity(maxima[0]), intensity(maxima[1]))
                                  : intensity(dips.front());
        out.dip_depth = 1 - dip / std::min(intensity(maxima[0]), intensity(maxima[1]));
    }
    return out;
}

} // namespace iontk
