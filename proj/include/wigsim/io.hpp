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

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "wigsim/errors.hpp"
#include "wigsim/sampler.hpp"

namespace wigsim {

namespace detail {

inline std::string format_double(double v)
{
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

} // namespace detail

/// One CSV row per trajectory: index, then the 2n outcome coordinates in
/// (q, p) per-mode order. 17 significant digits keep files byte-stable.
inline std::string format_outcomes_csv(const std::vector<TrajectoryOutcome> &outcomes)
{
    std::string out = "trajectory";
    if (!outcomes.empty()) {
        const int n = static_cast<int>(outcomes.front().outcome.size() / 2);
        for (int j = 0; j < n; ++j) {
            out += ",q" + std::to_string(j) + ",p" + std::to_string(j);
        }
    }
    out += "\n";
    for (const auto &o : outcomes) {
        out += std::to_string(o.trajectory_index);
        for (Eigen::Index i = 0; i < o.outcome.size(); ++i) {
            out += ",";
            out += detail::format_double(o.outcome(i));
        }
        out += "\n";
    }
    return out;
}

/// One JSON object per line: {"trajectory": i, "outcome": [...]}.
inline std::string format_outcomes_jsonl(const std::vector<TrajectoryOutcome> &outcomes)
{
    std::string out;
    for (const auto &o : outcomes) {
        out += "{\"trajectory\": " + std::to_string(o.trajectory_index) + ", \"outcome\": [";
        for (Eigen::Index i = 0; i < o.outcome.size(); ++i) {
            if (i > 0) {
                out += ", ";
            }
            out += detail::format_double(o.outcome(i));
        }
        out += "]}\n";
    }
    return out;
}

inline void write_text_file(const std::string &path, const std::string &content)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw resource_error("cannot open for writing: " + path);
    }
    f << content;
    if (!f.good()) {
        throw resource_error("write failed: " + path);
    }
}

inline std::string read_text_file(const std::string &path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw config_error("cannot open for reading: " + path);
    }
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

} // namespace wigsim
