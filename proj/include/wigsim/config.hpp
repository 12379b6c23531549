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

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "wigsim/discretization.hpp"
#include "wigsim/errors.hpp"
#include "wigsim/measurement.hpp"
#include "wigsim/phase_space.hpp"
#include "wigsim/sampler.hpp"
#include "wigsim/states.hpp"

namespace wigsim {

/// One state entry: kind in {vacuum, coherent, thermal, squeezed, gaussian,
/// spats} plus its numeric parameters.
struct StateSpecEntry {
    std::string kind;
    nlohmann::json params = nlohmann::json::object();
};

/// One gate entry: kind in {phase_shifter, beam_splitter, squeezer,
/// displacement}, parameters, and target mode indices.
struct GateSpecEntry {
    std::string kind;
    nlohmann::json params = nlohmann::json::object();
    std::vector<int> targets;
};

struct DiscretizationEntry {
    ParamMode mode = ParamMode::certified;
    std::optional<double> delta;
    std::optional<double> area;
    std::optional<double> beta;
    std::optional<double> lambda;
};

/// Declarative experiment description mirroring the JSON schema.
struct ExperimentConfig {
    int modes = 1;
    std::vector<StateSpecEntry> states;
    std::vector<GateSpecEntry> gates;
    std::variant<std::string, std::vector<Eigen::Matrix2d>> measurement = std::string("heterodyne");
    double epsilon = 0.1;
    double gamma = 0.25;
    long samples = 1;
    std::uint64_t seed = 0;
    DiscretizationEntry discretization;
};

namespace detail {

inline double require_number(const nlohmann::json &j, const std::string &key,
                             const std::string &path)
{
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw config_error(path + "." + key + ": number required");
    }
    return j.at(key).get<double>();
}

inline double optional_number(const nlohmann::json &j, const std::string &key, double fallback)
{
    if (!j.contains(key)) {
        return fallback;
    }
    return j.at(key).get<double>();
}

inline Eigen::Matrix2d parse_matrix2(const nlohmann::json &j, const std::string &path)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_array() || j[0].size() != 2 ||
        !j[1].is_array() || j[1].size() != 2) {
        throw config_error(path + ": 2x2 matrix required");
    }
    Eigen::Matrix2d m;
    m << j[0][0].get<double>(), j[0][1].get<double>(), j[1][0].get<double>(),
        j[1][1].get<double>();
    return m;
}

inline nlohmann::json dump_matrix2(const Eigen::Matrix2d &m)
{
    return nlohmann::json::array(
        {nlohmann::json::array({m(0, 0), m(0, 1)}), nlohmann::json::array({m(1, 0), m(1, 1)})});
}

} // namespace detail

/// Parse and validate a JSON experiment document.
inline ExperimentConfig parse_config(const std::string &text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception &e) {
        throw config_error(std::string("config: invalid JSON: ") + e.what());
    }
    ExperimentConfig cfg;

    if (!j.contains("modes") || !j.at("modes").is_number_integer()) {
        throw config_error("modes: integer required");
    }
    cfg.modes = j.at("modes").get<int>();
    if (cfg.modes < 1) {
        throw config_error("modes: must be >= 1");
    }

    if (!j.contains("states") || !j.at("states").is_array() ||
        static_cast<int>(j.at("states").size()) != cfg.modes) {
        throw config_error("states: exactly one entry per mode required");
    }
    static const std::vector<std::string> state_kinds = {"vacuum",   "coherent", "thermal",
                                                         "squeezed", "gaussian", "spats"};
    for (std::size_t i = 0; i < j.at("states").size(); ++i) {
        const auto &s = j.at("states")[i];
        const std::string path = "states[" + std::to_string(i) + "]";
        if (!s.contains("kind") || !s.at("kind").is_string()) {
            throw config_error(path + ".kind: string required");
        }
        StateSpecEntry entry;
        entry.kind = s.at("kind").get<std::string>();
        if (std::find(state_kinds.begin(), state_kinds.end(), entry.kind) == state_kinds.end()) {
            throw config_error(path + ".kind: unknown state kind '" + entry.kind + "'");
        }
        if (s.contains("params")) {
            entry.params = s.at("params");
        }
        if (entry.kind == "spats") {
            const double efficiency = detail::require_number(entry.params, "efficiency", path);
            if (efficiency > 0.5) {
                throw config_error(
                    path + ": spats efficiency " + std::to_string(efficiency) +
                    " exceeds 0.5; only efficiencies <= 0.5 keep the Wigner function "
                    "nonnegative and classically samplable");
            }
        }
        cfg.states.push_back(std::move(entry));
    }

    static const std::vector<std::string> gate_kinds = {"phase_shifter", "beam_splitter",
                                                        "squeezer", "displacement"};
    if (j.contains("gates")) {
        if (!j.at("gates").is_array()) {
            throw config_error("gates: array required");
        }
        for (std::size_t i = 0; i < j.at("gates").size(); ++i) {
            const auto &g = j.at("gates")[i];
            const std::string path = "gates[" + std::to_string(i) + "]";
            GateSpecEntry entry;
            if (!g.contains("kind") || !g.at("kind").is_string()) {
                throw config_error(path + ".kind: string required");
            }
            entry.kind = g.at("kind").get<std::string>();
            if (std::find(gate_kinds.begin(), gate_kinds.end(), entry.kind) == gate_kinds.end()) {
                throw config_error(path + ".kind: unknown gate kind '" + entry.kind + "'");
            }
            if (g.contains("params")) {
                entry.params = g.at("params");
            }
            if (!g.contains("targets") || !g.at("targets").is_array()) {
                throw config_error(path + ".targets: array required");
            }
            const std::size_t expected = entry.kind == "beam_splitter" ? 2 : 1;
            if (g.at("targets").size() != expected) {
                throw config_error(path + ".targets: expected " + std::to_string(expected) +
                                   " target(s)");
            }
            for (std::size_t k = 0; k < g.at("targets").size(); ++k) {
                const int target = g.at("targets")[k].get<int>();
                if (target < 0 || target >= cfg.modes) {
                    throw config_error(path + ".targets[" + std::to_string(k) +
                                       "]: mode index out of range");
                }
                entry.targets.push_back(target);
            }
            if (entry.kind == "beam_splitter" && entry.targets[0] == entry.targets[1]) {
                throw config_error(path + ".targets: beam splitter modes must be distinct");
            }
            cfg.gates.push_back(std::move(entry));
        }
    }

    if (!j.contains("measurement")) {
        throw config_error("measurement: required");
    }
    if (j.at("measurement").is_string()) {
        const std::string preset = j.at("measurement").get<std::string>();
        if (preset != "heterodyne") {
            throw config_error("measurement: unknown preset '" + preset + "'");
        }
        cfg.measurement = preset;
    } else if (j.at("measurement").is_array()) {
        if (static_cast<int>(j.at("measurement").size()) != cfg.modes) {
            throw config_error("measurement: exactly one covariance per mode required");
        }
        std::vector<Eigen::Matrix2d> covs;
        for (std::size_t i = 0; i < j.at("measurement").size(); ++i) {
            covs.push_back(detail::parse_matrix2(j.at("measurement")[i],
                                                 "measurement[" + std::to_string(i) + "]"));
        }
        cfg.measurement = std::move(covs);
    } else {
        throw config_error("measurement: 'heterodyne' or a list of 2x2 covariances required");
    }

    if (!j.contains("epsilon") || !j.at("epsilon").is_number()) {
        throw config_error("epsilon: number required");
    }
    cfg.epsilon = j.at("epsilon").get<double>();
    if (!(cfg.epsilon > 0.0) || !(cfg.epsilon < 1.0)) {
        throw config_error("epsilon must be in (0,1)");
    }
    if (!j.contains("gamma") || !j.at("gamma").is_number()) {
        throw config_error("gamma: number required");
    }
    cfg.gamma = j.at("gamma").get<double>();
    if (!(cfg.gamma > 0.0)) {
        throw config_error("gamma: must be positive");
    }
    if (j.contains("samples")) {
        cfg.samples = j.at("samples").get<long>();
        if (cfg.samples < 1) {
            throw config_error("samples: must be >= 1");
        }
    }
    if (j.contains("seed")) {
        cfg.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("discretization")) {
        const auto &d = j.at("discretization");
        if (d.contains("mode")) {
            const std::string mode = d.at("mode").get<std::string>();
            if (mode == "certified") {
                cfg.discretization.mode = ParamMode::certified;
            } else if (mode == "practical") {
                cfg.discretization.mode = ParamMode::practical;
            } else {
                throw config_error("discretization.mode: 'certified' or 'practical' required");
            }
        }
        if (d.contains("delta")) {
            cfg.discretization.delta = d.at("delta").get<double>();
        }
        if (d.contains("area")) {
            cfg.discretization.area = d.at("area").get<double>();
        }
        if (d.contains("beta")) {
            cfg.discretization.beta = d.at("beta").get<double>();
        }
        if (d.contains("lambda")) {
            cfg.discretization.lambda = d.at("lambda").get<double>();
        }
        if (cfg.discretization.mode == ParamMode::practical &&
            !cfg.discretization.delta.has_value()) {
            throw config_error("discretization.delta: required in practical mode");
        }
    }
    return cfg;
}

inline std::string serialize_config(const ExperimentConfig &cfg)
{
    nlohmann::json j;
    j["modes"] = cfg.modes;
    j["states"] = nlohmann::json::array();
    for (const auto &s : cfg.states) {
        nlohmann::json e;
        e["kind"] = s.kind;
        if (!s.params.empty()) {
            e["params"] = s.params;
        }
        j["states"].push_back(e);
    }
    j["gates"] = nlohmann::json::array();
    for (const auto &g : cfg.gates) {
        nlohmann::json e;
        e["kind"] = g.kind;
        if (!g.params.empty()) {
            e["params"] = g.params;
        }
        e["targets"] = g.targets;
        j["gates"].push_back(e);
    }
    if (const auto *preset = std::get_if<std::string>(&cfg.measurement)) {
        j["measurement"] = *preset;
    } else {
        j["measurement"] = nlohmann::json::array();
        for (const auto &m : std::get<std::vector<Eigen::Matrix2d>>(cfg.measurement)) {
            j["measurement"].push_back(detail::dump_matrix2(m));
        }
    }
    j["epsilon"] = cfg.epsilon;
    j["gamma"] = cfg.gamma;
    j["samples"] = cfg.samples;
    j["seed"] = cfg.seed;
    nlohmann::json d;
    d["mode"] = cfg.discretization.mode == ParamMode::certified ? "certified" : "practical";
    if (cfg.discretization.delta) {
        d["delta"] = *cfg.discretization.delta;
    }
    if (cfg.discretization.area) {
        d["area"] = *cfg.discretization.area;
    }
    if (cfg.discretization.beta) {
        d["beta"] = *cfg.discretization.beta;
    }
    if (cfg.discretization.lambda) {
        d["lambda"] = *cfg.discretization.lambda;
    }
    j["discretization"] = d;
    return j.dump(2);
}

/// Instantiate the per-mode evaluators of a parsed config.
inline std::vector<WignerEvaluator> build_states(const ExperimentConfig &cfg)
{
    std::vector<WignerEvaluator> out;
    for (std::size_t i = 0; i < cfg.states.size(); ++i) {
        const auto &s = cfg.states[i];
        const std::string path = "states[" + std::to_string(i) + "]";
        try {
            if (s.kind == "vacuum") {
                out.push_back(WignerEvaluator::gaussian(GaussianStateSpec::vacuum()));
            } else if (s.kind == "coherent") {
                out.push_back(WignerEvaluator::gaussian(
                    GaussianStateSpec::coherent(detail::require_number(s.params, "q", path),
                                                detail::require_number(s.params, "p", path))));
            } else if (s.kind == "thermal") {
                out.push_back(WignerEvaluator::gaussian(
                    GaussianStateSpec::thermal(detail::require_number(s.params, "nbar", path))));
            } else if (s.kind == "squeezed") {
                out.push_back(WignerEvaluator::gaussian(GaussianStateSpec::squeezed(
                    detail::require_number(s.params, "r", path),
                    detail::optional_number(s.params, "q", 0.0),
                    detail::optional_number(s.params, "p", 0.0))));
            } else if (s.kind == "gaussian") {
                if (!s.params.contains("mean") || !s.params.at("mean").is_array() ||
                    s.params.at("mean").size() != 2) {
                    throw config_error(path + ".params.mean: [q, p] required");
                }
                const Eigen::Vector2d mean(s.params.at("mean")[0].get<double>(),
                                           s.params.at("mean")[1].get<double>());
                if (!s.params.contains("cov")) {
                    throw config_error(path + ".params.cov: 2x2 matrix required");
                }
                out.push_back(WignerEvaluator::gaussian(GaussianStateSpec(
                    mean, detail::parse_matrix2(s.params.at("cov"), path + ".params.cov"))));
            } else if (s.kind == "spats") {
                out.push_back(WignerEvaluator::spats(
                    SpatsSpec(detail::require_number(s.params, "nbar", path),
                              detail::require_number(s.params, "efficiency", path))));
            } else {
                throw config_error(path + ".kind: unknown state kind '" + s.kind + "'");
            }
        } catch (const std::invalid_argument &e) {
            throw config_error(path + ": " + e.what());
        }
    }
    return out;
}

inline GaussianMeasurementSpec build_measurement(const ExperimentConfig &cfg)
{
    if (std::holds_alternative<std::string>(cfg.measurement)) {
        return GaussianMeasurementSpec::heterodyne(cfg.modes);
    }
    try {
        return GaussianMeasurementSpec(std::get<std::vector<Eigen::Matrix2d>>(cfg.measurement));
    } catch (const std::invalid_argument &e) {
        throw config_error(std::string("measurement: ") + e.what());
    }
}

/// Left-fold the gate list into a single affine map; listed order is
/// application order.
inline AffineSymplecticMap compile_circuit(const ExperimentConfig &cfg)
{
    AffineSymplecticMap circuit = AffineSymplecticMap::identity(cfg.modes);
    for (std::size_t i = 0; i < cfg.gates.size(); ++i) {
        const auto &g = cfg.gates[i];
        const std::string path = "gates[" + std::to_string(i) + "]";
        AffineSymplecticMap gate = AffineSymplecticMap::identity(cfg.modes);
        if (g.kind == "phase_shifter") {
            gate = phase_shifter(detail::require_number(g.params, "theta", path), g.targets[0],
                                 cfg.modes);
        } else if (g.kind == "beam_splitter") {
            gate = beam_splitter(detail::require_number(g.params, "theta", path), g.targets[0],
                                 g.targets[1], cfg.modes);
        } else if (g.kind == "squeezer") {
            gate = squeezer(detail::require_number(g.params, "r", path), g.targets[0], cfg.modes);
        } else if (g.kind == "displacement") {
            gate = displacement(detail::require_number(g.params, "dq", path),
                                detail::require_number(g.params, "dp", path), g.targets[0],
                                cfg.modes);
        } else {
            throw config_error(path + ".kind: unknown gate kind '" + g.kind + "'");
        }
        circuit = compose(gate, circuit);
    }
    return circuit;
}

/// Resolve a parsed config into a runnable plan.
inline RunConfig build_run_config(const ExperimentConfig &cfg, int threads = 1,
                                  std::size_t cells_cap = (std::size_t{1} << 26),
                                  std::optional<std::uint64_t> seed_override = std::nullopt)
{
    auto states = build_states(cfg);
    auto measurement = build_measurement(cfg);
    auto circuit = compile_circuit(cfg);
    SelectionOverrides ov;
    ov.delta = cfg.discretization.delta;
    ov.area = cfg.discretization.area;
    ov.beta = cfg.discretization.beta;
    ov.lambda = cfg.discretization.lambda;
    auto params = select_parameters(cfg.epsilon, cfg.gamma, states, measurement, circuit,
                                    cfg.discretization.mode, ov);
    RunConfig run{std::move(states),
                  std::move(circuit),
                  std::move(measurement),
                  params,
                  cfg.samples,
                  seed_override.value_or(cfg.seed),
                  threads,
                  cells_cap};
    return run;
}

} // namespace wigsim
