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

// Reference implementations written independently of the library, used as
// test oracles. They favour directness over speed.

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/laguerre.hpp>

namespace oracle {

inline constexpr double u = 1.66053906660e-27;
inline constexpr double hbar = 1.054571817e-34;
inline constexpr double e = 1.602176634e-19;
inline constexpr double yb171 = 170.936 * u;
inline constexpr double ca40 = 39.963 * u;

/// Thermal-state sideband excitation, summed over Fock levels until the
/// remaining population is below 1e-15 (capped at 20000 levels).
inline double sideband(double nbar, double rabi0, double eta, bool exact, double t, bool blue)
{
    const double q = nbar / (nbar + 1);
    double p = 1 / (nbar + 1); // p_0
    double sum = 0, tail = q; // population above level n is q^(n+1)
    for (unsigned n = 0; n < 20000; ++n) {
        unsigned lo = blue ? n : n - 1;
        if (blue || n > 0) {
            double rabi;
            if (exact) {
                const double x = eta * eta;
                rabi = rabi0 * std::exp(-x / 2) * eta *
                       std::abs(boost::math::laguerre(lo, 1, x)) / std::sqrt(lo + 1.0);
            } else {
                rabi = rabi0 * eta * std::sqrt(lo + 1.0);
            }
            const double s = std::sin(rabi * t / 2);
            sum += p * s * s;
        }
        if (tail < 1e-15 && n > 10)
            break;
        p *= q;
        tail *= q;
    }
    return sum;
}

/// S_E = 4 m hbar omega ndot / q^2.
inline double spectral_density(double ndot, double mass, double omega, double charge = e)
{
    return 4 * mass * hbar * omega * ndot / (charge * charge);
}

/// Rate a reference ion would see in the same noise, assuming omega * S_E is
/// frequency independent.
inline double normalized_rate(double ndot, double mass, double omega, double ref_mass,
                              double ref_omega, double charge = e)
{
    const double se = spectral_density(ndot, mass, omega, charge) * omega / ref_omega;
    return charge * charge * se / (4 * ref_mass * hbar * ref_omega);
}

/// nbar from (p_red, p_blue) by first-order error propagation.
inline double nbar_sigma(double pr, double pb, double shots)
{
    const double vr = pr * (1 - pr) / shots, vb = pb * (1 - pb) / shots;
    const double d = pb - pr;
    return std::sqrt((pb * pb * vr + pr * pr * vb) / (d * d * d * d));
}

} // namespace oracle
