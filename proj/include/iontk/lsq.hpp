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

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace iontk::lsq {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct LinearFit {
    VectorXd coef;
    MatrixXd cov;
    double chi2 = 0; // weighted sum of squared residuals
    int dof = 0;
};

/// Weighted linear least squares y ~ design * coef.
///
/// With per-point sigmas the covariance is the absolute (X^T W X)^-1; with
/// an empty sigma vector unit weights are used and the covariance is scaled
/// by chi2/dof. Throws ValidationError if the design is rank-deficient.
LinearFit weighted_linear(const MatrixXd &design, const VectorXd &y, const VectorXd &sigma);

struct Covariance {
    MatrixXd matrix;
    bool singular = false;
    double condition = 0;
};

/// (J^T J)^-1 * scale via a column-equilibrated SVD. Directions with
/// vanishing singular value get infinite variance instead of being dropped.
Covariance covariance_from_jacobian(const MatrixXd &jacobian, double scale = 1.0);

struct Problem {
    Eigen::Index num_residuals = 0;
    std::function<void(const VectorXd &params, VectorXd &residuals)> residuals;
    /// Optional; central differences are used when empty.
    std::function<void(const VectorXd &params, MatrixXd &jacobian)> jacobian;
    /// Typical magnitude per parameter for finite-difference steps.
    VectorXd typical;
};

struct Options {
    int max_iterations = 400;
    double ftol = 1e-15;  // relative cost decrease
    double xtol = 1e-13;  // relative step length
    double gtol = 1e-16;  // scaled gradient
    double initial_lambda = 1e-3;
};

struct Result {
    VectorXd params;
    VectorXd residuals;
    MatrixXd jacobian;
    double cost = 0; // 0.5 * |r|^2
    int iterations = 0;
    bool converged = false;
    std::string reason;
};

MatrixXd numeric_jacobian(const Problem &problem, const VectorXd &params);

/// Levenberg-Marquardt: Gauss-Newton steps damped by lambda * diag(J^T J),
/// solved through QR of the augmented system.
Result damped_gauss_newton(const Problem &problem, VectorXd start, const Options &options = {});

/// Runs damped_gauss_newton from every start and keeps the lowest cost among
/// converged runs. Throws FitError carrying the best-so-far parameters when
/// no start converges.
Result multi_start(const Problem &problem, const std::vector<VectorXd> &starts,
                   const Options &options = {});

} // namespace iontk::lsq
