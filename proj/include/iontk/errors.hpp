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

#include <stdexcept>
#include <string>
#include <vector>

namespace iontk {

/// Rejected input: bad argument, schema violation, unit mismatch.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A nonlinear fit exhausted its restarts without converging. Carries the
/// best parameter vector seen so callers can still inspect it.
class FitError : public std::runtime_error {
public:
    FitError(const std::string &what, std::vector<double> best_params, double best_cost)
        : std::runtime_error(what), best_params_(std::move(best_params)), best_cost_(best_cost)
    {
    }

    const std::vector<double> &best_params() const noexcept { return best_params_; }
    double best_cost() const noexcept { return best_cost_; }

private:
    std::vector<double> best_params_;
    double best_cost_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace iontk
