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

#include <cstdint>
#include <limits>

namespace iontk {

/// Counter-based generator with a fully specified output sequence, so that
/// simulations reproduce bit-for-bit in any language that implements it.
///
///   mix(z)      = SplitMix64 finalizer:
///                   z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
///                   z ^= z >> 27; z *= 0x94D049BB133111EB;
///                   z ^= z >> 31
///   key         = mix(seed + 0x9E3779B97F4A7C15 * (stream + 1))
///   draw k      = mix(key + 0x9E3779B97F4A7C15 * k),  k = 1, 2, ...
///   uniform     = (draw >> 11) * 2^-53                          in [0, 1)
///   normal      = sqrt(-2 ln(1 - u1)) * cos(2 pi u2)            (two draws)
///   binomial    = count of u_i < p over n draws
///
/// split(i) derives an independent child stream keyed by (key, i); a point's
/// stream therefore depends only on its index, never on scheduling order.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    double uniform();
    double normal();
    double normal(double mean, double sigma) { return mean + sigma * normal(); }
    std::uint64_t binomial(std::uint64_t trials, double p);

    CounterRng split(std::uint64_t index) const { return CounterRng(key_, index); }

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

    static std::uint64_t mix(std::uint64_t z);

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace iontk
