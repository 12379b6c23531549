// Copyright 2026 The wigsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace wigsim {

/// Invalid experiment description or parameter set (CLI exit code 2).
struct config_error : std::runtime_error {
    explicit config_error(const std::string &msg) : std::runtime_error(msg) {}
};

/// Work or memory estimate exceeds the configured caps (CLI exit code 3).
struct resource_error : std::runtime_error {
    explicit resource_error(const std::string &msg) : std::runtime_error(msg) {}
};

/// No ground-truth distribution is computable for this configuration
/// (CLI exit code 4).
struct oracle_unavailable_error : std::runtime_error {
    explicit oracle_unavailable_error(const std::string &msg) : std::runtime_error(msg) {}
};

/// Quadrature refinement failed to stabilize within the evaluation cap.
struct accuracy_error : std::runtime_error {
    explicit accuracy_error(const std::string &msg) : std::runtime_error(msg) {}
};

/// A grid distribution carries no probability mass.
struct degenerate_grid_error : std::runtime_error {
    explicit degenerate_grid_error(const std::string &msg) : std::runtime_error(msg) {}
};

/// An integration region misses a required fraction of the density mass.
struct region_too_small_error : std::runtime_error {
    explicit region_too_small_error(const std::string &msg) : std::runtime_error(msg) {}
};

} // namespace wigsim
