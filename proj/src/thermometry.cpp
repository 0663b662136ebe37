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

#include "iontk/thermometry.hpp"

#include <cmath>

#include "iontk/errors.hpp"

namespace iontk {

ThermalMotionalState::ThermalMotionalState(double nbar) : nbar_(nbar)
{
    if (!(nbar >= 0) || !std::isfinite(nbar))
        throw ValidationError("mean occupation must be finite and >= 0");
}

double ThermalMotionalState::probability(long n) const
{
    if (n < 0)
        throw ValidationError("occupation number must be >= 0");
    if (nbar_ == 0)
        return n == 0 ? 1.0 : 0.0;
    // log form avoids overflow of nbar^n for large n
    const double q = nbar_ / (nbar_ + 1);
    return std::exp(static_cast<double>(n) * std::log(q)) / (nbar_ + 1);
}

long ThermalMotionalState::cutoff(double tail) const
{
    if (nbar_ == 0)
        return 0;
    // 1 - cumulative(N) = q^(N+1)
    const double lq = std::log(nbar_ / (nbar_ + 1));
    long n = static_cast<long>(std::ceil(std::log(tail) / lq)) - 1;
    if (n < 0)
        n = 0;
    while (n > 0 && (n) * lq <= std::log(tail))
        --n;
    while ((n + 1) * lq > std::log(tail))
        ++n;
    return n;
}

double fock_probability(const ThermalMotionalState &state, long n)
{
    return state.probability(n);
}

void RabiParams::validate() const
{
    if (!(base_rabi > 0) || !std::isfinite(base_rabi))
        throw ValidationError("base Rabi frequency must be positive");
    if (!(lamb_dicke > 0 && lamb_dicke < 1))
        throw ValidationError("Lamb-Dicke parameter must lie in (0, 1)");
}

double sideband_rabi_frequency(const RabiParams &params, long n, Sideband order)
{
    params.validate();
    if (n < 0)
        throw ValidationError("occupation number must be >= 0");
    if (order == Sideband::Red && n == 0)
        throw ValidationError("red sideband undefined for n = 0");
    // Both directions couple the pair (lo, lo + 1).
    const long lo = order == Sideband::Blue ? n : n - 1;
    const double eta = params.lamb_dicke;
    if (params.model == MatrixElementModel::FirstOrderLambDicke)
        return params.base_rabi * eta * std::sqrt(static_cast<double>(lo + 1));
    // |<lo+1| exp(i eta (a + a^dag)) |lo>| = e^{-eta^2/2} eta L^1_lo(eta^2) / sqrt(lo+1)
    const double x = eta * eta;
    const double lag = std::assoc_laguerre(static_cast<unsigned>(lo), 1u, x);
    return params.base_rabi * std::exp(-x / 2) * eta * std::abs(lag) /
           std::sqrt(static_cast<double>(lo + 1));
}

ThermalSidebandTable::ThermalSidebandTable(const ThermalMotionalState &state,
                                           const RabiParams &params, double tail)
    : ratio_(state.nbar() / (state.nbar() + 1))
{
    params.validate();
    const long cutoff = state.cutoff(tail);
    weight_.reserve(static_cast<std::size_t>(cutoff) + 1);
    rabi_.reserve(static_cast<std::size_t>(cutoff) + 1);

    const double eta = params.lamb_dicke;
    const double x = eta * eta;
    const double envelope = params.base_rabi * std::exp(-x / 2) * eta;
    // L^1_n(x) by the three-term recurrence
    double lag_prev = 0, lag = 1;
    double p = 1.0 / (state.nbar() + 1);
    for (long n = 0; n <= cutoff; ++n) {
        const double dn = static_cast<double>(n);
        double rabi;
        if (params.model == MatrixElementModel::FirstOrderLambDicke)
            rabi = params.base_rabi * eta * std::sqrt(dn + 1);
        else
            rabi = envelope * std::abs(lag) / std::sqrt(dn + 1);
        weight_.push_back(p);
        rabi_.push_back(rabi);
        p *= ratio_;
        double next = ((2 * dn + 2 - x) * lag - (dn + 1) * lag_prev) / (dn + 1);
        lag_prev = lag;
        lag = next;
    }
}

double ThermalSidebandTable::excitation(double probe_time, Sideband order) const
{
    if (!(probe_time >= 0))
        throw ValidationError("probe time must be >= 0");
    // Red: sum over n >= 1 of p_n sin^2(Omega_{n,n-1} t / 2); with m = n - 1,
    // p_{m+1} = ratio * p_m and Omega_{m+1,m} = Omega_{m,m+1}.
    const double scale = order == Sideband::Blue ? 1.0 : ratio_;
    double sum = 0;
    for (std::size_t i = 0; i < weight_.size(); ++i) {
        double s = std::sin(0.5 * rabi_[i] * probe_time);
        sum += scale * weight_[i] * s * s;
    }
    return sum;
}

double sideband_excitation(const ThermalMotionalState &state, const RabiParams &params,
                           double probe_time, Sideband order)
{
    if (!(probe_time >= 0))
        throw ValidationError("probe time must be >= 0");
    return ThermalSidebandTable(state, params).excitation(probe_time, order);
}

double nbar_from_asymmetry(double ratio)
{
    if (!std::isfinite(ratio) || ratio < 0)
        throw ValidationError("sideband ratio must be >= 0");
    if (ratio >= 1)
        throw ValidationError("sideband ratio >= 1: non-thermal or saturated data");
    return ratio / (1 - ratio);
}

void SidebandObservation::validate() const
{
    if (!(probe_time >= 0))
        throw ValidationError("probe time must be >= 0");
    if (!(p_red >= 0 && p_red <= 1) || !(p_blue >= 0 && p_blue <= 1))
        throw ValidationError("sideband probabilities must lie in [0, 1]");
    if (shots < 1)
        throw ValidationError("shots must be >= 1");
}

namespace {

// Binomial variance of an observed proportion. At p = 0 or 1 the plug-in
// estimate is zero; (k + 1/2) / (n + 1) keeps it finite.
double proportion_variance(double p, std::uint64_t shots)
{
    const double n = static_cast<double>(shots);
    if (p <= 0 || p >= 1)
        p = (p * n + 0.5) / (n + 1);
    return p * (1 - p) / n;
}

} // namespace

Estimate nbar_with_uncertainty(const SidebandObservation &obs)
{
    obs.validate();
    if (obs.p_blue == 0)
        throw ValidationError("p_blue = 0: sideband ratio undefined");
    const double nbar = nbar_from_asymmetry(obs.p_red / obs.p_blue);
    const double d = obs.p_blue - obs.p_red;
    const double var_r = proportion_variance(obs.p_red, obs.shots);
    const double var_b = proportion_variance(obs.p_blue, obs.shots);
    // nbar = r / (b - r): dn/dr = b / d^2, dn/db = -r / d^2
    const double var = (obs.p_blue * obs.p_blue * var_r + obs.p_red * obs.p_red * var_b) /
                       (d * d * d * d);
    return {nbar, std::sqrt(var)};
}

} // namespace iontk
