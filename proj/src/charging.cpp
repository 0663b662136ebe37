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

#include "iontk/charging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "iontk/errors.hpp"
#include "iontk/heating.hpp"
#include "iontk/lsq.hpp"

namespace iontk {

void ChargingModelParams::validate() const
{
    if (!(T1 > 0) || !(T2 > 0))
        throw ValidationError("charging time constants must be positive");
    if (!(T1 < T2))
        throw ValidationError("charging model requires T1 < T2");
    if (!(f0 > 0))
        throw ValidationError("f0 must be positive");
}

void DischargeModelParams::validate() const
{
    if (!(T3 > 0) || !(T4 > 0))
        throw ValidationError("discharge time constants must be positive");
    if (!(T3 < T4))
        throw ValidationError("discharge model requires T3 < T4");
    if (!(f0 > 0))
        throw ValidationError("f0 must be positive");
}

void FrequencySeries::validate() const
{
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto &p = points[i];
        if (!std::isfinite(p.time) || !std::isfinite(p.freq))
            throw ValidationError("frequency series: non-finite value at point " + std::to_string(i));
        if (!(p.freq > 0))
            throw ValidationError("frequency series: non-positive frequency at point " +
                                  std::to_string(i));
        if (p.freq_err && !(*p.freq_err > 0))
            throw ValidationError("frequency series: non-positive error at point " +
                                  std::to_string(i));
        if (i > 0 && !(p.time > points[i - 1].time))
            throw ValidationError("frequency series: times not strictly increasing at point " +
                                  std::to_string(i));
    }
    for (const auto &iv : light_on_intervals)
        if (!(iv.end >= iv.start))
            throw ValidationError("frequency series: light-on interval ends before it starts");
}

void DutyCycle::validate() const
{
    if (!(probe_time > 0))
        throw ValidationError("probe time must be positive");
    if (!(duty_fraction > 0 && duty_fraction <= 1))
        throw ValidationError("duty fraction must lie in (0, 1]");
}

double charging_freq(double t, const ChargingModelParams &p)
{
    if (t < p.t_on)
        throw ValidationError("charging_freq: t before t_on");
    const double tau = t - p.t_on;
    return p.f0 + p.df1 * -std::expm1(-tau / p.T1) - p.df2 * -std::expm1(-tau / p.T2);
}

double discharge_freq(double t, const DischargeModelParams &p)
{
    if (t < p.t_off)
        throw ValidationError("discharge_freq: t before t_off");
    const double tau = t - p.t_off;
    return p.f0 - p.df3 * std::exp(-tau / p.T3) - p.df4 * std::exp(-tau / p.T4);
}

const FittedParameter &ExpFitReport::parameter(const std::string &name) const
{
    for (const auto &p : parameters)
        if (p.name == name)
            return p;
    throw ValidationError("no fitted parameter named " + name);
}

bool ExpFitReport::has_flag(const std::string &flag) const
{
    return std::find(flags.begin(), flags.end(), flag) != flags.end();
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Window {
    std::vector<double> tau;
    std::vector<double> y; // freq - reference
    std::vector<double> sigma;
    std::vector<char> baseline;
    bool weighted = false;
    double reference = 0;
    double span = 0;      // duration of the modelled (non-baseline) part
    std::size_t modelled = 0;
};

// Parameter vector: [f0 (if free), amp_a, amp_b (unless continuity), ln T_a, ln T_b]
struct TwoExp {
    bool charging;
    bool fit_f0;
    double f0_fixed = 0; // relative to the window reference
    std::optional<double> shift;

    int n() const { return (fit_f0 ? 1 : 0) + (shift ? 1 : 2) + 2; }
    int ia() const { return fit_f0 ? 1 : 0; }
    int ib() const { return shift ? -1 : ia() + 1; }
    int isa() const { return ia() + (shift ? 1 : 2); }
    int isb() const { return isa() + 1; }

    double amp_b(const VectorXd &p) const { return shift ? -*shift - p[ia()] : p[ib()]; }

    double eval(const VectorXd &p, double tau, bool base, double *grad) const
    {
        const double f0 = fit_f0 ? p[0] : f0_fixed;
        if (grad)
            std::fill(grad, grad + n(), 0.0);
        if (base) {
            if (grad && fit_f0)
                grad[0] = 1;
            return f0;
        }
        const double a = p[ia()];
        const double b = amp_b(p);
        const double ta = std::exp(p[isa()]);
        const double tb = std::exp(p[isb()]);
        const double ea = std::exp(-tau / ta);
        const double eb = std::exp(-tau / tb);
        double value;
        if (charging) {
            value = f0 + a * (1 - ea) - b * (1 - eb);
            if (grad) {
                grad[ia()] = 1 - ea;
                if (ib() >= 0)
                    grad[ib()] = -(1 - eb);
                grad[isa()] = -a * ea * tau / ta;
                grad[isb()] = b * eb * tau / tb;
            }
        } else {
            value = f0 - a * ea - b * eb;
            if (grad) {
                grad[ia()] = shift ? -ea + eb : -ea;
                if (ib() >= 0)
                    grad[ib()] = -eb;
                grad[isa()] = -a * ea * tau / ta;
                grad[isb()] = -b * eb * tau / tb;
            }
        }
        if (grad && fit_f0)
            grad[0] = 1;
        return value;
    }

    // Relabel so that T_a < T_b, preserving the model curve.
    VectorXd canonical(VectorXd p) const
    {
        if (p[isa()] <= p[isb()])
            return p;
        const double a = p[ia()];
        const double b = amp_b(p);
        if (charging) {
            p[ia()] = -b;
            if (ib() >= 0)
                p[ib()] = -a;
        } else {
            p[ia()] = b;
            if (ib() >= 0)
                p[ib()] = a;
        }
        std::swap(p[isa()], p[isb()]);
        return p;
    }
};

Window make_window(const FrequencySeries &series, double t0, double t_end, bool with_baseline,
                   double baseline_from)
{
    Window w;
    bool any_err = false, all_err = true;
    for (const auto &pt : series.points) {
        bool in_model = pt.time >= t0 && pt.time <= t_end;
        bool in_base = with_baseline && pt.time < t0 && pt.time >= baseline_from;
        if (!in_model && !in_base)
            continue;
        any_err = any_err || pt.freq_err.has_value();
        all_err = all_err && pt.freq_err.has_value();
        w.tau.push_back(pt.time - t0);
        w.y.push_back(pt.freq);
        w.sigma.push_back(pt.freq_err.value_or(1.0));
        w.baseline.push_back(in_model ? 0 : 1);
        if (in_model) {
            ++w.modelled;
            w.span = std::max(w.span, pt.time - t0);
        }
    }
    if (any_err && !all_err)
        throw ValidationError("frequency errors must be given for all points or none");
    w.weighted = all_err && !w.y.empty();
    if (!w.weighted)
        std::fill(w.sigma.begin(), w.sigma.end(), 1.0);
    if (!w.y.empty()) {
        std::vector<double> sorted = w.y;
        std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
        w.reference = sorted[sorted.size() / 2];
        for (auto &v : w.y)
            v -= w.reference;
    }
    return w;
}

lsq::Problem make_problem(const Window &w, const TwoExp &model)
{
    lsq::Problem prob;
    prob.num_residuals = static_cast<Eigen::Index>(w.y.size());
    prob.residuals = [&w, model](const VectorXd &p, VectorXd &r) {
        for (std::size_t i = 0; i < w.y.size(); ++i)
            r[static_cast<Eigen::Index>(i)] =
                (model.eval(p, w.tau[i], w.baseline[i] != 0, nullptr) - w.y[i]) / w.sigma[i];
    };
    prob.jacobian = [&w, model](const VectorXd &p, MatrixXd &j) {
        std::vector<double> g(static_cast<std::size_t>(model.n()));
        for (std::size_t i = 0; i < w.y.size(); ++i) {
            model.eval(p, w.tau[i], w.baseline[i] != 0, g.data());
            for (int k = 0; k < model.n(); ++k)
                j(static_cast<Eigen::Index>(i), k) = g[static_cast<std::size_t>(k)] / w.sigma[i];
        }
    };
    return prob;
}

// Amplitudes (and f0) are linear once the time constants are fixed, so each
// seed pair gets its linear part from a weighted linear solve.
std::optional<VectorXd> seed(const Window &w, const TwoExp &model, double ta, double tb)
{
    const int nlin = model.n() - 2;
    const auto m = static_cast<Eigen::Index>(w.y.size());
    MatrixXd design = MatrixXd::Zero(m, nlin);
    VectorXd rhs(m), sigma(m);
    VectorXd p = VectorXd::Zero(model.n());
    p[model.isa()] = std::log(ta);
    p[model.isb()] = std::log(tb);
    std::vector<double> g(static_cast<std::size_t>(model.n()));
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto k = static_cast<std::size_t>(i);
        // Model is affine in the linear block: value = base + grad . lin
        double base = model.eval(p, w.tau[k], w.baseline[k] != 0, g.data());
        for (int c = 0; c < nlin; ++c)
            design(i, c) = g[static_cast<std::size_t>(c)];
        rhs[i] = w.y[k] - base;
        sigma[i] = w.sigma[k];
    }
    try {
        auto fit = lsq::weighted_linear(design, rhs, sigma);
        p.head(nlin) = fit.coef;
        return p;
    } catch (const ValidationError &) {
        return std::nullopt;
    }
}

struct FitOutcome {
    VectorXd params;
    lsq::Covariance cov;
    double chi2;
    double rms;
    int dof;
    int starts;
    int iterations;
};

FitOutcome run_fit(const Window &w, const TwoExp &model, const ExpFitOptions &opt)
{
    std::vector<double> grid = opt.seed_grid;
    std::sort(grid.begin(), grid.end());
    std::vector<VectorXd> starts;
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t j = i + 1; j < grid.size(); ++j)
            if (grid[i] > 0)
                if (auto s = seed(w, model, grid[i], grid[j]))
                    starts.push_back(*s);
    if (starts.empty())
        throw ValidationError("no usable seed for the time constants");

    const auto prob = make_problem(w, model);
    lsq::Result best = lsq::multi_start(prob, starts);

    FitOutcome out;
    out.params = model.canonical(best.params);
    VectorXd r(prob.num_residuals);
    prob.residuals(out.params, r);
    MatrixXd jac(prob.num_residuals, model.n());
    prob.jacobian(out.params, jac);

    out.chi2 = r.squaredNorm();
    out.dof = static_cast<int>(w.y.size()) - model.n();
    double ss = 0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        double d = r[i] * w.sigma[static_cast<std::size_t>(i)];
        ss += d * d;
    }
    out.rms = std::sqrt(ss / static_cast<double>(r.size()));
    const double scale = w.weighted ? 1.0 : (out.dof > 0 ? out.chi2 / out.dof : 1.0);
    out.cov = lsq::covariance_from_jacobian(jac, scale);
    out.starts = static_cast<int>(starts.size());
    out.iterations = best.iterations;
    return out;
}

// Best chi2 with the slower time constant pinned at tb. The pinned entry is
// the last parameter, so the reduced vector is the head of the full one.
std::optional<double> pinned_chi2(const Window &w, const TwoExp &model, const ExpFitOptions &opt,
                                  double tb, double scale)
{
    const int n = model.n();
    const double ln_tb = std::log(tb);
    const auto full = make_problem(w, model);
    auto expand = [n, ln_tb](const VectorXd &q) {
        VectorXd p(n);
        p.head(n - 1) = q;
        p[n - 1] = ln_tb;
        return p;
    };
    lsq::Problem prob;
    prob.num_residuals = full.num_residuals;
    prob.residuals = [&full, expand](const VectorXd &q, VectorXd &r) { full.residuals(expand(q), r); };
    prob.jacobian = [&full, expand, n](const VectorXd &q, MatrixXd &j) {
        MatrixXd jf(j.rows(), n);
        full.jacobian(expand(q), jf);
        j = jf.leftCols(n - 1);
    };
    std::vector<VectorXd> starts;
    for (double ta : opt.seed_grid)
        if (ta > 0 && ta < tb)
            if (auto s = seed(w, model, ta, tb))
                starts.push_back(s->head(n - 1));
    if (starts.empty())
        return std::nullopt;
    try {
        auto res = lsq::multi_start(prob, starts);
        return 2 * res.cost / scale;
    } catch (const FitError &) {
        return std::nullopt;
    }
}

// Marks the slower time constant weak when the data cannot exclude a value
// far beyond the window, which curvature-based errors miss on a flat valley.
void profile_slow_constant(ExpFitReport &rep, const Window &w, const TwoExp &model,
                           const FitOutcome &fit, const ExpFitOptions &opt, const char *name,
                           double tb)
{
    if (!(opt.profile_factor > 0) || !(w.span > 0))
        return;
    const double probe = opt.profile_factor * w.span;
    const double scale = w.weighted ? 1.0 : (fit.dof > 0 ? fit.chi2 / fit.dof : 1.0);
    bool unbounded = tb >= probe;
    if (!unbounded) {
        auto chi2 = pinned_chi2(w, model, opt, probe, scale);
        double delta = chi2 ? *chi2 - fit.chi2 / scale : 0.0;
        rep.profile_delta_chi2 = delta;
        unbounded = chi2 && delta < opt.profile_delta_chi2;
    }
    if (!unbounded)
        return;
    rep.flags.push_back(std::string("unbounded_above:") + name);
    for (auto &fp : rep.parameters)
        if (fp.name == name && !fp.weak) {
            fp.weak = true;
            rep.flags.push_back(std::string("weak:") + name);
        }
}

double sd(const lsq::Covariance &c, int i)
{
    return i < 0 ? 0.0 : std::sqrt(c.matrix(i, i));
}

struct Labels {
    const char *a, *b, *ta, *tb;
};

ExpFitReport build_report(const std::string &model_name, const Window &w, const TwoExp &model,
                          const FitOutcome &fit, const ExpFitOptions &opt, const Labels &names,
                          double &f0, double &amp_a, double &amp_b, double &ta, double &tb)
{
    const auto &p = fit.params;
    const auto &cov = fit.cov;
    ExpFitReport rep;
    rep.model = model_name;
    rep.covariance = cov.matrix;
    rep.residual_rms = fit.rms;
    rep.chi2 = fit.chi2;
    rep.dof = fit.dof;
    rep.points = w.y.size();
    rep.starts = fit.starts;
    rep.iterations = fit.iterations;

    f0 = (model.fit_f0 ? p[0] : model.f0_fixed) + w.reference;
    amp_a = p[model.ia()];
    amp_b = model.amp_b(p);
    ta = std::exp(p[model.isa()]);
    tb = std::exp(p[model.isb()]);

    double var_b;
    if (model.shift)
        var_b = cov.matrix(model.ia(), model.ia());
    else
        var_b = cov.matrix(model.ib(), model.ib());

    if (model.fit_f0)
        rep.free_parameters.push_back("f0");
    rep.free_parameters.push_back(names.a);
    if (!model.shift)
        rep.free_parameters.push_back(names.b);
    rep.free_parameters.push_back(std::string("ln_") + names.ta);
    rep.free_parameters.push_back(std::string("ln_") + names.tb);

    const double thr = opt.weak_threshold;
    auto amp = [&](const char *name, double v, double e) {
        bool weak = !(e <= thr * std::abs(v));
        rep.parameters.push_back({name, v, e, "Hz", weak});
    };
    auto tconst = [&](const char *name, double t, double sd_log) {
        bool weak = !(sd_log <= thr);
        rep.parameters.push_back({name, t, t * sd_log, "s", weak});
    };
    rep.parameters.push_back({"f0", f0, model.fit_f0 ? sd(cov, 0) : 0.0, "Hz", false});
    amp(names.a, amp_a, sd(cov, model.ia()));
    amp(names.b, amp_b, std::sqrt(var_b));
    tconst(names.ta, ta, sd(cov, model.isa()));
    tconst(names.tb, tb, sd(cov, model.isb()));

    for (const auto &fp : rep.parameters)
        if (fp.weak)
            rep.flags.push_back("weak:" + fp.name);
    if (cov.singular)
        rep.flags.push_back("covariance_singular");
    if (ta > w.span)
        rep.flags.push_back(std::string("window_shorter_than:") + names.ta);
    if (tb > w.span)
        rep.flags.push_back(std::string("window_shorter_than:") + names.tb);
    if (!w.weighted)
        rep.flags.push_back("unweighted");
    return rep;
}

double baseline_mean(const FrequencySeries &series, double t_on)
{
    double sw = 0, swx = 0;
    for (const auto &pt : series.points) {
        if (pt.time >= t_on)
            break;
        double s = pt.freq_err.value_or(1.0);
        sw += 1 / (s * s);
        swx += pt.freq / (s * s);
    }
    if (sw == 0)
        throw ValidationError("fixed f0 requested but no baseline points precede t_on");
    return swx / sw;
}

} // namespace

ChargingFit fit_charging(const FrequencySeries &series, double t_on, const ExpFitOptions &opt)
{
    series.validate();
    double t_end = std::numeric_limits<double>::infinity();
    if (opt.t_end) {
        t_end = *opt.t_end;
    } else {
        for (const auto &iv : series.light_on_intervals)
            if (t_on >= iv.start - 1e-9 * std::max(1.0, std::abs(iv.start)) && t_on < iv.end)
                t_end = iv.end;
    }
    if (!(t_end > t_on))
        throw ValidationError("fit_charging: empty fit window");

    // Baseline only reaches back to the previous light-off, if any.
    double baseline_from = -std::numeric_limits<double>::infinity();
    for (const auto &iv : series.light_on_intervals)
        if (iv.end <= t_on)
            baseline_from = std::max(baseline_from, iv.end);

    Window w = make_window(series, t_on, t_end, opt.use_baseline, baseline_from);
    if (w.modelled < 8)
        throw ValidationError("fit_charging: need at least 8 points after t_on, have " +
                              std::to_string(w.modelled));

    TwoExp model{true, opt.f0_mode == F0Mode::Free, 0.0, std::nullopt};
    if (!model.fit_f0) {
        double f0 = opt.f0 ? *opt.f0 : baseline_mean(series, t_on);
        model.f0_fixed = f0 - w.reference;
        // fixed f0 makes baseline points carry no information
        Window trimmed;
        trimmed.weighted = w.weighted;
        trimmed.reference = w.reference;
        trimmed.span = w.span;
        trimmed.modelled = w.modelled;
        for (std::size_t i = 0; i < w.y.size(); ++i) {
            if (w.baseline[i])
                continue;
            trimmed.tau.push_back(w.tau[i]);
            trimmed.y.push_back(w.y[i]);
            trimmed.sigma.push_back(w.sigma[i]);
            trimmed.baseline.push_back(0);
        }
        w = std::move(trimmed);
    }

    FitOutcome fit = run_fit(w, model, opt);
    ChargingFit out;
    out.params.t_on = t_on;
    out.report = build_report("charging", w, model, fit, opt, {"df1", "df2", "T1", "T2"},
                              out.params.f0, out.params.df1, out.params.df2, out.params.T1,
                              out.params.T2);
    profile_slow_constant(out.report, w, model, fit, opt, "T2", out.params.T2);

    // settled offset df1 - df2 with its covariance
    const auto &c = fit.cov.matrix;
    const int ia = model.ia(), ib = model.ib();
    double var = c(ia, ia) + c(ib, ib) - 2 * c(ia, ib);
    double offset = settled_offset(out.params);
    out.report.parameters.push_back(
        {"settled_offset", offset, std::sqrt(std::max(var, 0.0)), "Hz",
         !(std::sqrt(std::max(var, 0.0)) <= opt.weak_threshold * std::abs(offset))});

    bool all_amp_weak = out.report.parameter("df1").weak && out.report.parameter("df2").weak;
    if (all_amp_weak)
        out.report.flags.push_back("degenerate");
    return out;
}

DischargeFit fit_discharge(const FrequencySeries &series, double t_off, const ExpFitOptions &opt)
{
    series.validate();
    double t_end = std::numeric_limits<double>::infinity();
    if (opt.t_end) {
        t_end = *opt.t_end;
    } else {
        for (const auto &iv : series.light_on_intervals)
            if (iv.start > t_off)
                t_end = std::min(t_end, iv.start);
    }
    if (!(t_end > t_off))
        throw ValidationError("fit_discharge: empty fit window");

    Window w = make_window(series, t_off, t_end, false, 0.0);
    if (w.modelled < 8)
        throw ValidationError("fit_discharge: need at least 8 points after t_off, have " +
                              std::to_string(w.modelled));

    TwoExp model{false, opt.f0_mode == F0Mode::Free, 0.0, opt.continuity_shift};
    if (!model.fit_f0) {
        if (!opt.f0)
            throw ValidationError("fit_discharge: fixed f0 requires a value");
        model.f0_fixed = *opt.f0 - w.reference;
    }

    FitOutcome fit = run_fit(w, model, opt);
    DischargeFit out;
    out.params.t_off = t_off;
    out.report = build_report("discharge", w, model, fit, opt, {"df3", "df4", "T3", "T4"},
                              out.params.f0, out.params.df3, out.params.df4, out.params.T3,
                              out.params.T4);
    profile_slow_constant(out.report, w, model, fit, opt, "T4", out.params.T4);
    if (out.params.df3 < 0 && out.params.df4 < 0)
        out.report.flags.push_back("amplitudes_negative:frequency_above_f0");
    if (model.shift)
        out.report.flags.push_back("continuity_constrained");
    if (out.report.parameter("df3").weak && out.report.parameter("df4").weak)
        out.report.flags.push_back("degenerate");
    return out;
}

double settled_offset(const ChargingModelParams &p)
{
    return p.df1 - p.df2;
}

double compensation_field(double offset, const FieldCalibration &cal)
{
    if (!(cal.field > 0) || !(cal.offset > 0))
        throw ValidationError("field calibration must be positive");
    return offset * cal.field / cal.offset;
}

double compensation_field(double offset, double sensitivity)
{
    if (!(sensitivity > 0))
        throw ValidationError("field sensitivity must be positive");
    return offset * sensitivity;
}

Exposure effective_exposure(const DutyCycle &duty, double wall_time)
{
    duty.validate();
    if (!(wall_time >= 0))
        throw ValidationError("wall time must be >= 0");
    return {wall_time * duty.duty_fraction, duty.cycle_period()};
}

StabilityReport settled_stability(const FrequencySeries &series, const ChargingModelParams &fit,
                                  std::optional<double> settle_after, int bins)
{
    series.validate();
    const double after = settle_after.value_or(5 * std::max(fit.T1, fit.T2));
    double t_end = std::numeric_limits<double>::infinity();
    for (const auto &iv : series.light_on_intervals)
        if (fit.t_on >= iv.start - 1e-9 * std::max(1.0, std::abs(iv.start)) && fit.t_on < iv.end)
            t_end = iv.end;

    StabilityReport rep;
    for (const auto &pt : series.points) {
        if (pt.time - fit.t_on > after && pt.time <= t_end) {
            rep.times.push_back(pt.time);
            rep.residuals.push_back(pt.freq - charging_freq(pt.time, fit));
        }
    }
    const auto n = rep.residuals.size();
    if (n < 3)
        throw ValidationError("settled_stability: fewer than 3 points in the settled window");

    const double dn = static_cast<double>(n);
    rep.mean = std::accumulate(rep.residuals.begin(), rep.residuals.end(), 0.0) / dn;
    double m2 = 0, m3 = 0, m4 = 0, lag = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = rep.residuals[i] - rep.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        if (i > 0)
            lag += d * (rep.residuals[i - 1] - rep.mean);
    }
    rep.sigma = std::sqrt(m2 / (dn - 1));
    m2 /= dn;
    m3 /= dn;
    m4 /= dn;
    if (m2 > 0) {
        const double skew = m3 / std::pow(m2, 1.5);
        const double kurt = m4 / (m2 * m2);
        rep.jarque_bera = dn / 6 * (skew * skew + 0.25 * (kurt - 3) * (kurt - 3));
        rep.jarque_bera_p = chi2_survival(rep.jarque_bera, 2);
        rep.lag1_autocorrelation = lag / (m2 * dn);
    }
    rep.normality_flag = rep.jarque_bera_p < 0.01;
    rep.correlation_flag = std::abs(rep.lag1_autocorrelation) > 3 / std::sqrt(dn);

    const int nb = bins > 0 ? bins : static_cast<int>(std::ceil(std::sqrt(dn)));
    const auto [lo, hi] = std::minmax_element(rep.residuals.begin(), rep.residuals.end());
    rep.histogram.lo = *lo;
    rep.histogram.width = *hi > *lo ? (*hi - *lo) / nb : 1.0;
    rep.histogram.counts.assign(static_cast<std::size_t>(nb), 0);
    for (double r : rep.residuals) {
        auto b = static_cast<std::size_t>((r - rep.histogram.lo) / rep.histogram.width);
        rep.histogram.counts[std::min(b, rep.histogram.counts.size() - 1)]++;
    }
    return rep;
}

} // namespace iontk
