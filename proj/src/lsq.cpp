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

#include "iontk/lsq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "iontk/errors.hpp"

namespace iontk::lsq {

LinearFit weighted_linear(const MatrixXd &design, const VectorXd &y, const VectorXd &sigma)
{
    const auto n = design.rows();
    const auto k = design.cols();
    if (y.size() != n)
        throw ValidationError("weighted_linear: size mismatch");
    const bool weighted = sigma.size() != 0;
    if (weighted && sigma.size() != n)
        throw ValidationError("weighted_linear: sigma size mismatch");
    if (n < k)
        throw ValidationError("weighted_linear: fewer points than coefficients");

    MatrixXd a = design;
    VectorXd b = y;
    if (weighted) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!(sigma[i] > 0) || !std::isfinite(sigma[i]))
                throw ValidationError("weighted_linear: sigma must be positive");
            a.row(i) /= sigma[i];
            b[i] /= sigma[i];
        }
    }

    Eigen::ColPivHouseholderQR<MatrixXd> qr(a);
    if (qr.rank() < k)
        throw ValidationError("weighted_linear: degenerate design matrix");

    LinearFit fit;
    fit.coef = qr.solve(b);
    fit.chi2 = (a * fit.coef - b).squaredNorm();
    fit.dof = static_cast<int>(n - k);

    MatrixXd ata = a.transpose() * a;
    fit.cov = ata.ldlt().solve(MatrixXd::Identity(k, k));
    if (!weighted && fit.dof > 0)
        fit.cov *= fit.chi2 / fit.dof;
    return fit;
}

Covariance covariance_from_jacobian(const MatrixXd &jacobian, double scale)
{
    const auto k = jacobian.cols();
    VectorXd colnorm(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        double c = jacobian.col(j).norm();
        colnorm[j] = c > 0 ? c : 1.0;
    }
    MatrixXd js = jacobian * colnorm.cwiseInverse().asDiagonal();
    Eigen::JacobiSVD<MatrixXd> svd(js, Eigen::ComputeThinV);
    const VectorXd &s = svd.singularValues();
    const MatrixXd &v = svd.matrixV();

    Covariance out;
    double smax = s.size() ? s[0] : 0;
    double smin = s.size() ? s[s.size() - 1] : 0;
    out.condition = smin > 0 ? smax / smin : std::numeric_limits<double>::infinity();
    const double tiny = smax * 1e-13 * static_cast<double>(std::max(jacobian.rows(), k));

    MatrixXd cov = MatrixXd::Zero(k, k);
    VectorXd infinite = VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s[i] <= tiny) {
            out.singular = true;
            for (Eigen::Index j = 0; j < k; ++j)
                if (std::abs(v(j, i)) > 1e-8)
                    infinite[j] = 1;
            continue;
        }
        cov += (v.col(i) / (s[i] * s[i])) * v.col(i).transpose();
    }
    cov = colnorm.cwiseInverse().asDiagonal() * cov * colnorm.cwiseInverse().asDiagonal();
    cov *= scale;
    const double inf = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < k; ++j)
        if (infinite[j] != 0)
            cov(j, j) = inf;
    out.matrix = std::move(cov);
    return out;
}

MatrixXd numeric_jacobian(const Problem &problem, const VectorXd &params)
{
    const auto k = params.size();
    MatrixXd jac(problem.num_residuals, k);
    VectorXd rp(problem.num_residuals), rm(problem.num_residuals);
    const double base = std::cbrt(std::numeric_limits<double>::epsilon());
    for (Eigen::Index j = 0; j < k; ++j) {
        double typical = problem.typical.size() == k ? problem.typical[j] : 1.0;
        double h = base * std::max(std::abs(params[j]), std::abs(typical));
        if (h == 0)
            h = base;
        VectorXd p = params;
        p[j] = params[j] + h;
        problem.residuals(p, rp);
        p[j] = params[j] - h;
        problem.residuals(p, rm);
        jac.col(j) = (rp - rm) / (2 * h);
    }
    return jac;
}

namespace {

bool finite(const VectorXd &v)
{
    return v.allFinite();
}

} // namespace

Result damped_gauss_newton(const Problem &problem, VectorXd x, const Options &opt)
{
    const auto m = problem.num_residuals;
    const auto k = x.size();
    auto eval_jac = [&](const VectorXd &p) {
        if (problem.jacobian) {
            MatrixXd j(m, k);
            problem.jacobian(p, j);
            return j;
        }
        return numeric_jacobian(problem, p);
    };

    Result res;
    VectorXd r(m);
    problem.residuals(x, r);
    if (!finite(r)) {
        res.params = x;
        res.residuals = r;
        res.cost = std::numeric_limits<double>::infinity();
        res.reason = "non-finite residuals at start";
        return res;
    }
    double cost = 0.5 * r.squaredNorm();
    MatrixXd jac = eval_jac(x);

    VectorXd diag(k);
    for (Eigen::Index j = 0; j < k; ++j)
        diag[j] = std::max(jac.col(j).norm(), 1e-300);

    double lambda = opt.initial_lambda;
    double nu = 2;
    VectorXd rnew(m);
    MatrixXd aug(m + k, k);
    VectorXd rhs(m + k);

    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        if (cost == 0) {
            res.converged = true;
            res.reason = "zero residual";
            break;
        }
        VectorXd grad = jac.transpose() * r;
        double gscaled = 0;
        for (Eigen::Index j = 0; j < k; ++j)
            gscaled = std::max(gscaled, std::abs(grad[j]) / (diag[j] * std::sqrt(2 * cost)));
        if (gscaled <= opt.gtol) {
            res.converged = true;
            res.reason = "gradient tolerance";
            break;
        }

        for (Eigen::Index j = 0; j < k; ++j)
            diag[j] = std::max(diag[j], jac.col(j).norm());

        bool accepted = false;
        bool done = false;
        while (!accepted) {
            aug.topRows(m) = jac;
            aug.bottomRows(k) = (std::sqrt(lambda) * diag).asDiagonal();
            rhs.head(m) = -r;
            rhs.tail(k).setZero();
            VectorXd step = aug.colPivHouseholderQr().solve(rhs);

            double xnorm = (diag.asDiagonal() * x).norm();
            double snorm = (diag.asDiagonal() * step).norm();
            if (snorm <= opt.xtol * (xnorm + opt.xtol)) {
                res.converged = true;
                res.reason = "step tolerance";
                done = true;
                break;
            }

            VectorXd xnew = x + step;
            problem.residuals(xnew, rnew);
            double costnew = finite(rnew) ? 0.5 * rnew.squaredNorm()
                                          : std::numeric_limits<double>::infinity();
            VectorXd jstep = jac * step;
            double predicted = -(grad.dot(step) + 0.5 * jstep.squaredNorm());
            double actual = cost - costnew;
            double rho = predicted > 0 ? actual / predicted : -1;

            if (actual > 0 && rho > 0) {
                accepted = true;
                bool small = actual <= opt.ftol * cost;
                x = std::move(xnew);
                r = rnew;
                cost = costnew;
                jac = eval_jac(x);
                lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2 * rho - 1, 3));
                nu = 2;
                if (small) {
                    res.converged = true;
                    res.reason = "cost tolerance";
                    done = true;
                }
            } else {
                lambda *= nu;
                nu *= 2;
                if (lambda > 1e20) {
                    // No descent direction left at machine precision.
                    res.converged = true;
                    res.reason = "damping saturated";
                    done = true;
                    break;
                }
            }
        }
        if (done) {
            ++it;
            break;
        }
    }
    if (!res.converged)
        res.reason = "iteration limit";

    res.params = x;
    res.residuals = r;
    res.jacobian = jac;
    res.cost = cost;
    res.iterations = it;
    return res;
}

Result multi_start(const Problem &problem, const std::vector<VectorXd> &starts,
                   const Options &options)
{
    Result best;
    best.cost = std::numeric_limits<double>::infinity();
    Result best_any = best;
    for (const auto &s : starts) {
        Result r = damped_gauss_newton(problem, s, options);
        if (r.cost < best_any.cost)
            best_any = r;
        if (r.converged && r.cost < best.cost)
            best = std::move(r);
    }
    if (!std::isfinite(best.cost)) {
        std::vector<double> p(best_any.params.data(),
                              best_any.params.data() + best_any.params.size());
        throw FitError("no start converged (" + std::to_string(starts.size()) + " starts)",
                       std::move(p), best_any.cost);
    }
    return best;
}

} // namespace iontk::lsq
