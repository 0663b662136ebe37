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

#include <iosfwd>
#include <string>
#include <vector>

namespace iontk {

enum ExitCode : int {
    kExitOk = 0,
    kExitInternal = 1,
    kExitValidation = 2,
    kExitFit = 3,
    kExitIo = 4,
};

/// Runs one CLI invocation. `args` excludes the program name. Reports and
/// tables go to `out` (and to --out-dir when given); failures print a
/// one-line JSON error record to `err`.
int run_pipeline(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace iontk
