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

#include "iontk/rng.hpp"

#include <cmath>
#include <numbers>

#include "iontk/errors.hpp"

namespace iontk {

namespace {
constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t CounterRng::mix(std::uint64_t z)
{
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(mix(seed + golden * (stream + 1)))
{
}

CounterRng::result_type CounterRng::operator()()
{
    ++counter_;
    return mix(key_ + golden * counter_);
}

double CounterRng::uniform()
{
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double CounterRng::normal()
{
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t CounterRng::binomial(std::uint64_t trials, double p)
{
    if (!(p >= 0.0 && p <= 1.0))
        throw ValidationError("binomial probability outside [0, 1]");
    std::uint64_t k = 0;
    for (std::uint64_t i = 0; i < trials; ++i)
        k += uniform() < p ? 1 : 0;
    return k;
}

} // namespace iontk
