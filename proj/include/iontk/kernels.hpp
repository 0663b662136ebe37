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

// Data-parallel kernels. Every kernel has an OpenMP version (namespace omp)
// and a plain loop (namespace serial) kept as the reference; each output
// element depends only on its own index, so the two agree bit-for-bit.

#include <cstddef>
#include <exception>
#include <span>
#include <type_traits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "iontk/errors.hpp"
#include "iontk/thermometry.hpp"

namespace iontk::kernels {

inline int max_threads()
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline void set_threads(int n)
{
#ifdef _OPENMP
    if (n > 0)
        omp_set_num_threads(n);
#else
    (void)n;
#endif
}

namespace serial {

template <class F>
auto map_trials(std::size_t count, F &&trial) -> std::vector<std::invoke_result_t<F &, std::size_t>>
{
    std::vector<std::invoke_result_t<F &, std::size_t>> out(count);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = trial(i);
    return out;
}

inline void excitation_curve(const ThermalSidebandTable &table, Sideband order,
                             std::span<const double> times, std::span<double> out)
{
    if (times.size() != out.size())
        throw ValidationError("excitation_curve: size mismatch");
    for (std::size_t i = 0; i < times.size(); ++i)
        out[i] = table.excitation(times[i], order);
}

template <class F>
void evaluate(F &&f, std::span<const double> xs, std::span<double> out)
{
    if (xs.size() != out.size())
        throw ValidationError("evaluate: size mismatch");
    for (std::size_t i = 0; i < xs.size(); ++i)
        out[i] = f(xs[i]);
}

} // namespace serial

namespace omp {

/// Runs trial(i) for i in [0, count) across threads. Results are stored by
/// index, so the output does not depend on the schedule. The first exception
/// thrown by any trial is rethrown after the loop.
template <class F>
auto map_trials(std::size_t count, F &&trial) -> std::vector<std::invoke_result_t<F &, std::size_t>>
{
    std::vector<std::invoke_result_t<F &, std::size_t>> out(count);
    std::exception_ptr error;
    const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            out[static_cast<std::size_t>(i)] = trial(static_cast<std::size_t>(i));
        } catch (...) {
#pragma omp critical(iontk_map_trials_error)
            if (!error)
                error = std::current_exception();
        }
    }
    if (error)
        std::rethrow_exception(error);
    return out;
}

inline void excitation_curve(const ThermalSidebandTable &table, Sideband order,
                             std::span<const double> times, std::span<double> out)
{
    if (times.size() != out.size())
        throw ValidationError("excitation_curve: size mismatch");
    for (double t : times)
        if (!(t >= 0))
            throw ValidationError("probe time must be >= 0");
    const auto n = static_cast<std::ptrdiff_t>(times.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = table.excitation(times[static_cast<std::size_t>(i)], order);
}

/// f must be safe to call concurrently and must not throw.
template <class F>
void evaluate(F &&f, std::span<const double> xs, std::span<double> out)
{
    if (xs.size() != out.size())
        throw ValidationError("evaluate: size mismatch");
    const auto n = static_cast<std::ptrdiff_t>(xs.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = f(xs[static_cast<std::size_t>(i)]);
}

} // namespace omp

} // namespace iontk::kernels
