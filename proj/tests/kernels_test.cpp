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
#include <vector>

#include <gtest/gtest.h>

#include "iontk/beam.hpp"
#include "iontk/kernels.hpp"
#include "iontk/sim.hpp"

using namespace iontk;

TEST(Kernels, MapTrialsMatchesSerial)
{
    auto cfg = SimConfig::defaults();
    auto trial = [&](std::size_t i) {
        auto c = cfg;
        c.seed = i;
        const std::vector<double> waits{0, 4e-4, 8e-4, 1.2e-3, 1.6e-3, 2e-3};
        return fit_heating_rate(simulate_heating_series(c, waits)).ndot;
    };
    const auto a = kernels::serial::map_trials(64, trial);
    const auto b = kernels::omp::map_trials(64, trial);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_EQ(a[i], b[i]) << i;
}

TEST(Kernels, MapTrialsRethrows)
{
    auto trial = [](std::size_t i) -> int {
        if (i == 7)
            throw ValidationError("boom");
        return static_cast<int>(i);
    };
    EXPECT_THROW(kernels::omp::map_trials(16, trial), ValidationError);
}

TEST(Kernels, ExcitationCurveMatchesSerial)
{
    ThermalSidebandTable table(ThermalMotionalState(2.5),
                               {angular(121.1e3), 0.1, MatrixElementModel::ExactLaguerre});
    std::vector<double> t(500), a(500), b(500);
    for (std::size_t i = 0; i < t.size(); ++i)
        t[i] = 1e-7 * static_cast<double>(i);
    for (auto order : {Sideband::Red, Sideband::Blue}) {
        kernels::serial::excitation_curve(table, order, t, a);
        kernels::omp::excitation_curve(table, order, t, b);
        EXPECT_EQ(a, b);
    }
    std::vector<double> shorter(3);
    EXPECT_THROW(kernels::omp::excitation_curve(table, Sideband::Red, t, shorter),
                 ValidationError);
}

TEST(Kernels, EvaluateMatchesSerial)
{
    GratingOutputModel m;
    m.beamlet_phase = 1.1;
    std::vector<double> x(1000), a(1000), b(1000);
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = -5e-6 + 1e-8 * static_cast<double>(i);
    auto f = [&](double v) { return profile_intensity(v, m); };
    kernels::serial::evaluate(f, x, a);
    kernels::omp::evaluate(f, x, b);
    EXPECT_EQ(a, b);
}

TEST(Kernels, ThreadCountDoesNotChangeResults)
{
    auto trial = [](std::size_t i) {
        CounterRng r(3, 1);
        auto s = r.split(i);
        return s.normal() + s.uniform();
    };
    const int saved = kernels::max_threads();
    kernels::set_threads(1);
    const auto one = kernels::omp::map_trials(100, trial);
    kernels::set_threads(4);
    const auto four = kernels::omp::map_trials(100, trial);
    kernels::set_threads(saved);
    EXPECT_EQ(one, four);
}
