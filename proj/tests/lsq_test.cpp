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


#include <cmath>

#include <gtest/gtest.h>

#include "iontk/errors.hpp"
#include "iontk/lsq.hpp"

using namespace iontk;
using namespace iontk::lsq;

TEST(WeightedLinear, ExactLine)
{
    MatrixXd A(4, 2);
    VectorXd y(4), s(4);
    for (int i = 0; i < 4; ++i) {
        A(i, 0) = 1;
        A(i, 1) = i;
        y(i) = 2 + 3 * i;
        s(i) = 0.5;
    }
    auto fit = weighted_linear(A, y, s);
    EXPECT_NEAR(fit.coef(0), 2, 1e-12);
    EXPECT_NEAR(fit.coef(1), 3, 1e-12);
    EXPECT_NEAR(fit.chi2, 0, 1e-20);
    EXPECT_EQ(fit.dof, 2);
    // slope variance for x = 0..3 with sigma 0.5: sigma^2 / sum (x - xbar)^2
    EXPECT_NEAR(fit.cov(1, 1), 0.25 / 5.0, 1e-12);
}

TEST(WeightedLinear, UnweightedScalesByResidualVariance)
{
    MatrixXd A(5, 2);
    VectorXd y(5);
    const double noise[] = {0.1, -0.2, 0.05, 0.1, -0.05};
    for (int i = 0; i < 5; ++i) {
        A(i, 0) = 1;
        A(i, 1) = i;
        y(i) = 1 + 2 * i + noise[i];
    }
    auto fit = weighted_linear(A, y, VectorXd());
    const double s2 = fit.chi2 / fit.dof;
    EXPECT_NEAR(fit.cov(1, 1), s2 / 10.0, 1e-12);
}

TEST(WeightedLinear, Errors)
{
    MatrixXd A(3, 2);
    A << 1, 1, 1, 1, 1, 1;
    VectorXd y(3);
    y << 1, 2, 3;
    EXPECT_THROW(weighted_linear(A, y, VectorXd()), ValidationError);
    MatrixXd B(1, 2);
    B << 1, 2;
    EXPECT_THROW(weighted_linear(B, VectorXd::Ones(1), VectorXd()), ValidationError);
    MatrixXd C(3, 1);
    C << 1, 2, 3;
    VectorXd bad(3);
    bad << 1, 0, 1;
    EXPECT_THROW(weighted_linear(C, y, bad), ValidationError);
}

TEST(Covariance, SingularDirectionIsInfinite)
{
    MatrixXd J(3, 2);
    J << 1, 2, 2, 4, 3, 6;
    auto c = covariance_from_jacobian(J);
    EXPECT_TRUE(c.singular);
    EXPECT_TRUE(std::isinf(c.matrix(0, 0)));
}

TEST(Covariance, MatchesNormalEquations)
{
    MatrixXd J(4, 2);
    J << 1, 0, 1, 1, 1, 2, 1, 3;
    auto c = covariance_from_jacobian(J, 2.0);
    MatrixXd expect = 2.0 * (J.transpose() * J).inverse();
    EXPECT_FALSE(c.singular);
    EXPECT_NEAR((c.matrix - expect).norm(), 0, 1e-12);
}

namespace {

// y = a exp(-t / b) on t = 0..9
Problem exp_problem(double a, double b)
{
    Problem p;
    p.num_residuals = 10;
    p.residuals = [a, b](const VectorXd &x, VectorXd &r) {
        r.resize(10);
        for (int i = 0; i < 10; ++i)
            r(i) = x(0) * std::exp(-i / x(1)) - a * std::exp(-i / b);
    };
    p.typical = VectorXd::Ones(2);
    return p;
}

} // namespace

TEST(GaussNewton, RecoversExponential)
{
    auto p = exp_problem(3.0, 2.5);
    VectorXd start(2);
    start << 1, 1;
    auto res = damped_gauss_newton(p, start);
    EXPECT_TRUE(res.converged) << res.reason;
    EXPECT_NEAR(res.params(0), 3.0, 1e-9);
    EXPECT_NEAR(res.params(1), 2.5, 1e-9);
}

TEST(GaussNewton, NumericJacobianMatchesAnalytic)
{
    auto p = exp_problem(3.0, 2.5);
    VectorXd x(2);
    x << 2.0, 3.0;
    MatrixXd J = numeric_jacobian(p, x);
    for (int i = 0; i < 10; ++i) {
        EXPECT_NEAR(J(i, 0), std::exp(-i / 3.0), 1e-8);
        EXPECT_NEAR(J(i, 1), 2.0 * i / 9.0 * std::exp(-i / 3.0), 1e-8);
    }
}

TEST(GaussNewton, IterationLimitIsNotConvergence)
{
    auto p = exp_problem(3.0, 2.5);
    VectorXd start(2);
    start << 100, 0.1;
    Options o;
    o.max_iterations = 1;
    auto res = damped_gauss_newton(p, start, o);
    EXPECT_FALSE(res.converged);
    EXPECT_EQ(res.reason, "iteration limit");
}

TEST(MultiStart, PicksBestAndReportsFailure)
{
    auto p = exp_problem(3.0, 2.5);
    VectorXd s1(2), s2(2);
    s1 << 1, 1;
    s2 << 10, 50;
    auto res = multi_start(p, {s1, s2});
    EXPECT_NEAR(res.params(1), 2.5, 1e-8);

    Options o;
    o.max_iterations = 1;
    try {
        multi_start(p, {s2}, o);
        FAIL() << "expected FitError";
    } catch (const FitError &e) {
        EXPECT_EQ(e.best_params().size(), 2u);
        EXPECT_TRUE(std::isfinite(e.best_cost()));
    }
}
