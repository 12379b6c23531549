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

#include <CLI11.hpp>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "wigsim/config.hpp"
#include "wigsim/discretization.hpp"
#include "wigsim/io.hpp"
#include "wigsim/oracle.hpp"
#include "wigsim/sampler.hpp"
#include "wigsim/states.hpp"

namespace {

using nlohmann::json;

json params_to_json(const wigsim::DiscretizationParams &p)
{
    json j;
    j["mode"] = p.mode == wigsim::ParamMode::certified ? "certified" : "practical";
    j["epsilon"] = p.epsilon;
    j["gamma"] = p.gamma;
    j["delta"] = p.delta;
    j["gamma_ratio"] = p.gamma_ratio;
    j["sqrt_area"] = p.sqrt_area;
    j["area"] = p.area;
    j["half_extent"] = p.half_extent;
    j["area_bound"] = p.area_bound;
    j["delta_bound"] = p.delta_bound; // the certified pitch, even when not run
    j["oracle_tol"] = p.oracle_tol;
    j["affine_precision_budget"] = p.affine_precision_budget;
    j["affine_precision_estimate"] = p.affine_precision_estimate;
    j["beta"] = p.beta;
    j["lambda"] = p.lambda;
    j["t_norm"] = p.t_norm;
    j["constants_assumed"] = p.constants_assumed;
    j["cells_per_mode"] = p.cells_per_mode();
    return j;
}

json estimates_to_json(const wigsim::DiscretizationParams &p, int modes, long samples,
                       std::size_t cells_cap)
{
    json j;
    const double cells = static_cast<double>(p.cells_per_mode());
    const bool streaming = p.cells_per_mode() > cells_cap;
    j["streaming"] = streaming;
    j["cells_cap"] = cells_cap;
    // Dense grids hold weights plus a cumulative table per mode for both the
    // state and the outcome grid.
    j["grid_memory_bytes"] = streaming ? 0.0 : cells * 16.0 * 2.0 * modes;
    j["grid_build_evaluations"] = cells * 2.0 * modes;
    j["sample_draw_cost"] = streaming ? static_cast<double>(samples) * cells * 2.0 * modes
                                      : static_cast<double>(samples) * 2.0 * modes *
                                            std::max(1.0, std::log2(cells));
    return j;
}

json condition_to_json(const wigsim::ConditionStatus &c)
{
    json j;
    j["pass"] = c.pass;
    j["verified"] = c.verified;
    j["detail"] = c.detail;
    return j;
}

json conditions_to_json(const wigsim::ConditionsReport &r)
{
    json j;
    j["inputs_bounded"] = condition_to_json(r.inputs_bounded);
    j["gradient_bounds"] = condition_to_json(r.gradient_bounds);
    j["delta_bound"] = condition_to_json(r.delta_bound);
    j["precision_budget"] = condition_to_json(r.precision_budget);
    j["area_bound"] = condition_to_json(r.area_bound);
    j["oracle_tolerance"] = condition_to_json(r.oracle_tolerance);
    j["all_pass"] = r.all_pass();
    j["all_verified"] = r.all_verified();
    return j;
}

json summary_to_json(const wigsim::EnsembleSummary &s)
{
    json j;
    j["count"] = s.count;
    if (s.count == 0) {
        return j;
    }
    j["mean"] = std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size());
    json cov = json::array();
    for (Eigen::Index r = 0; r < s.covariance.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < s.covariance.cols(); ++c) {
            row.push_back(s.covariance(r, c));
        }
        cov.push_back(row);
    }
    j["covariance"] = cov;
    json per_mode = json::array();
    const int n = static_cast<int>(s.mean.size() / 2);
    for (int m = 0; m < n; ++m) {
        json e;
        e["mean"] = {s.mean(2 * m), s.mean(2 * m + 1)};
        e["covariance"] = {{s.covariance(2 * m, 2 * m), s.covariance(2 * m, 2 * m + 1)},
                           {s.covariance(2 * m + 1, 2 * m), s.covariance(2 * m + 1, 2 * m + 1)}};
        per_mode.push_back(e);
    }
    j["per_mode"] = per_mode;
    return j;
}

json comparison_to_json(const wigsim::ComparisonReport &r, const std::string &oracle_kind,
                        double empirical_tail, double oracle_tail)
{
    json j;
    j["oracle"] = oracle_kind;
    j["one_norm"] = r.divergence.one_norm;
    j["tv"] = r.divergence.tv;
    j["worst_diff"] = r.divergence.worst_diff;
    j["worst_bin"] = r.divergence.worst_bin;
    j["occupied_bins"] = r.occupied_bins;
    j["samples"] = r.samples;
    j["epsilon"] = r.epsilon;
    j["allowance"] = r.allowance;
    j["threshold"] = r.threshold;
    j["pass"] = r.pass;
    j["empirical_tail"] = empirical_tail;
    j["oracle_tail"] = oracle_tail;
    return j;
}

std::string format_number(double v)
{
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.12g", v);
    return buffer;
}

struct CommonFlags {
    std::string config_path;
    std::string out_path;
    std::string format = "csv";
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::size_t memory_cap = (std::size_t{1} << 26);
};

int cmd_simulate(const CommonFlags &flags)
{
    const auto cfg = wigsim::parse_config(wigsim::read_text_file(flags.config_path));
    const auto run = wigsim::build_run_config(cfg, flags.threads, flags.memory_cap, flags.seed);
    const auto conditions =
        wigsim::check_conditions(run.params, run.states, run.measurement, run.circuit);
    const auto result = wigsim::run_ensemble(run);
    const std::string payload = flags.format == "jsonl"
                                    ? wigsim::format_outcomes_jsonl(result.outcomes)
                                    : wigsim::format_outcomes_csv(result.outcomes);
    wigsim::write_text_file(flags.out_path, payload);
    json report;
    report["params"] = params_to_json(run.params);
    report["conditions"] = conditions_to_json(conditions);
    report["summary"] = summary_to_json(result.summary);
    report["output"] = flags.out_path;
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_params(const CommonFlags &flags)
{
    const auto cfg = wigsim::parse_config(wigsim::read_text_file(flags.config_path));
    const auto states = wigsim::build_states(cfg);
    const auto measurement = wigsim::build_measurement(cfg);
    const auto circuit = wigsim::compile_circuit(cfg);
    wigsim::SelectionOverrides ov;
    ov.delta = cfg.discretization.delta;
    ov.area = cfg.discretization.area;
    ov.beta = cfg.discretization.beta;
    ov.lambda = cfg.discretization.lambda;
    const auto params = wigsim::select_parameters(cfg.epsilon, cfg.gamma, states, measurement,
                                                  circuit, cfg.discretization.mode, ov);
    const auto conditions = wigsim::check_conditions(params, states, measurement, circuit);
    json report;
    report["params"] = params_to_json(params);
    report["conditions"] = conditions_to_json(conditions);
    report["estimates"] = estimates_to_json(params, cfg.modes, cfg.samples, flags.memory_cap);
    std::cout << report.dump(2) << "\n";
    return 0;
}

int cmd_oracle_compare(const CommonFlags &flags)
{
    const auto cfg = wigsim::parse_config(wigsim::read_text_file(flags.config_path));
    const auto run = wigsim::build_run_config(cfg, flags.threads, flags.memory_cap, flags.seed);
    const int n = cfg.modes;
    bool all_gaussian = true;
    for (const auto &w : run.states) {
        all_gaussian = all_gaussian && w.kind() == wigsim::WignerEvaluator::Kind::gaussian;
    }
    if (!all_gaussian && n > 2) {
        throw wigsim::oracle_unavailable_error(
            "oracle unavailable: non-Gaussian states with more than two modes");
    }

    const auto conditions =
        wigsim::check_conditions(run.params, run.states, run.measurement, run.circuit);
    const auto result = wigsim::run_ensemble(run);
    const auto law = wigsim::moment_output_law(run.states, run.circuit, run.measurement);
    const double gamma = run.params.gamma;

    json report;
    report["params"] = params_to_json(run.params);
    report["conditions"] = conditions_to_json(conditions);
    report["summary"] = summary_to_json(result.summary);

    double offdiag = 0.0;
    for (Eigen::Index r = 0; r < law.covariance.rows(); ++r) {
        for (Eigen::Index c = 0; c < law.covariance.cols(); ++c) {
            if (r != c) {
                offdiag = std::max(offdiag, std::abs(law.covariance(r, c)));
            }
        }
    }
    const bool joint_feasible = all_gaussian ? (n == 1 || (n == 2 && offdiag < 1e-13))
                                             : (n == 1);

    bool pass = true;
    if (joint_feasible) {
        const Eigen::VectorXd origin = wigsim::lattice_origin(law.mean, gamma);
        const auto region = wigsim::default_region(law, gamma, origin, 8.0);
        const auto empirical = wigsim::histogram(result.outcomes, gamma, origin, region);
        wigsim::DiscreteOutcomeDistribution oracle;
        std::string oracle_kind;
        if (all_gaussian) {
            oracle = wigsim::binned_gaussian_distribution(law, gamma, origin, region);
            oracle_kind = "analytic";
        } else {
            oracle = wigsim::quadrature_outcome_distribution(run.states, run.circuit,
                                                             run.measurement, gamma, origin,
                                                             region);
            oracle_kind = "quadrature";
        }
        const auto cmp =
            wigsim::compare_with_oracle(empirical, oracle, run.params.epsilon, run.samples);
        report["comparison"] =
            comparison_to_json(cmp, oracle_kind, empirical.tail_mass, oracle.tail_mass);
        pass = cmp.pass;
    } else {
        // Mode-by-mode marginals: the joint bin set would be unmanageable.
        json marginals = json::array();
        for (int m = 0; m < n; ++m) {
            wigsim::OutputLaw marginal;
            marginal.mean = law.mean.segment<2>(2 * m);
            marginal.covariance = law.covariance.block<2, 2>(2 * m, 2 * m);
            const Eigen::VectorXd origin = wigsim::lattice_origin(marginal.mean, gamma);
            const auto region = wigsim::default_region(marginal, gamma, origin, 8.0);
            std::vector<wigsim::TrajectoryOutcome> projected = result.outcomes;
            for (auto &o : projected) {
                o.outcome = Eigen::VectorXd(o.outcome.segment<2>(2 * m));
            }
            const auto empirical = wigsim::histogram(projected, gamma, origin, region);
            wigsim::DiscreteOutcomeDistribution oracle;
            std::string oracle_kind;
            if (all_gaussian) {
                oracle = wigsim::binned_gaussian_distribution(marginal, gamma, origin, region);
                oracle_kind = "analytic-marginal";
            } else {
                oracle = wigsim::quadrature_marginal_distribution(
                    run.states, run.circuit, run.measurement, m, gamma, origin, region);
                oracle_kind = "quadrature-marginal";
            }
            const auto cmp =
                wigsim::compare_with_oracle(empirical, oracle, run.params.epsilon, run.samples);
            json e = comparison_to_json(cmp, oracle_kind, empirical.tail_mass, oracle.tail_mass);
            e["mode"] = m;
            marginals.push_back(e);
            pass = pass && cmp.pass;
        }
        report["comparison"] = json();
        report["comparison"]["oracle"] = "marginals";
        report["comparison"]["per_mode"] = marginals;
        report["comparison"]["pass"] = pass;
    }

    const std::string dump = report.dump(2);
    if (!flags.out_path.empty()) {
        wigsim::write_text_file(flags.out_path, dump + "\n");
    }
    std::cout << dump << "\n";
    return 0;
}

struct ScanRange {
    double min = 0.0;
    double max = 1.0;
    int steps = 2;
};

int cmd_scan_spats(const ScanRange &nbar, const ScanRange &eff, const std::string &out_path)
{
    if (nbar.steps < 1 || eff.steps < 1 || nbar.min < 0.0 || eff.min < 0.0 || eff.max > 1.0 ||
        nbar.max < nbar.min || eff.max < eff.min) {
        throw wigsim::config_error("scan-spats: invalid ranges");
    }
    std::string csv = "nbar,efficiency,w00,is_positive,fidelity,p00\n";
    for (int i = 0; i < nbar.steps; ++i) {
        const double nb = nbar.steps == 1
                              ? nbar.min
                              : nbar.min + (nbar.max - nbar.min) * i / (nbar.steps - 1);
        for (int k = 0; k < eff.steps; ++k) {
            const double et =
                eff.steps == 1 ? eff.min : eff.min + (eff.max - eff.min) * k / (eff.steps - 1);
            const wigsim::SpatsSpec spec(nb, et);
            const double w00 = wigsim::spats_wigner_origin(spec);
            const double fidelity = wigsim::fidelity_to_vacuum(spec);
            // The P-function is singular at nbar = 0 or efficiency = 0; its
            // origin value diverges to -inf there.
            const double p00 = (nb > 0.0 && et > 0.0)
                                   ? wigsim::spats_p_function(spec, 0.0, 0.0)
                                   : -std::numeric_limits<double>::infinity();
            csv += format_number(nb) + "," + format_number(et) + "," + format_number(w00) + "," +
                   (wigsim::is_positive_wigner(spec) ? "1" : "0") + "," +
                   format_number(fidelity) + "," + format_number(p00) + "\n";
        }
    }
    wigsim::write_text_file(out_path, csv);
    std::cout << "{\"rows\": " << (nbar.steps * eff.steps) << ", \"output\": \"" << out_path
              << "\"}\n";
    return 0;
}

int dispatch(int argc, char **argv)
{
    CLI::App app{"Phase-space sampler for linear-optical circuits with nonnegative Wigner "
                 "functions"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::uint64_t seed_value = 0;

    auto *simulate = app.add_subcommand("simulate", "Sample measurement outcomes");
    simulate->add_option("--config", flags.config_path, "experiment JSON")->required();
    simulate->add_option("--out", flags.out_path, "outcome file")->required();
    simulate->add_option("--format", flags.format, "outcome format")
        ->check(CLI::IsMember({"csv", "jsonl"}));
    auto *sim_seed = simulate->add_option("--seed", seed_value, "override config seed");
    simulate->add_option("--threads", flags.threads, "worker threads");
    simulate->add_option("--memory-cap", flags.memory_cap, "max dense grid cells");

    auto *params = app.add_subcommand("params", "Resolve and report run parameters");
    params->add_option("--config", flags.config_path, "experiment JSON")->required();
    params->add_option("--memory-cap", flags.memory_cap, "max dense grid cells");

    auto *compare = app.add_subcommand("oracle-compare",
                                       "Sample and compare against a ground-truth distribution");
    compare->add_option("--config", flags.config_path, "experiment JSON")->required();
    compare->add_option("--out", flags.out_path, "report file");
    auto *cmp_seed = compare->add_option("--seed", seed_value, "override config seed");
    compare->add_option("--threads", flags.threads, "worker threads");
    compare->add_option("--memory-cap", flags.memory_cap, "max dense grid cells");

    ScanRange nbar_range{0.0, 10.0, 51};
    ScanRange eff_range{0.0, 1.0, 51};
    std::string scan_out;
    auto *scan = app.add_subcommand("scan-spats",
                                    "Tabulate photon-added thermal state diagnostics");
    scan->add_option("--nbar-min", nbar_range.min, "smallest mean photon number");
    scan->add_option("--nbar-max", nbar_range.max, "largest mean photon number");
    scan->add_option("--nbar-steps", nbar_range.steps, "grid points along nbar");
    scan->add_option("--eff-min", eff_range.min, "smallest quantum efficiency");
    scan->add_option("--eff-max", eff_range.max, "largest quantum efficiency");
    scan->add_option("--eff-steps", eff_range.steps, "grid points along efficiency");
    scan->add_option("--out", scan_out, "scan CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (sim_seed->count() > 0 || cmp_seed->count() > 0) {
        flags.seed = seed_value;
    }

    if (simulate->parsed()) {
        return cmd_simulate(flags);
    }
    if (params->parsed()) {
        return cmd_params(flags);
    }
    if (compare->parsed()) {
        return cmd_oracle_compare(flags);
    }
    return cmd_scan_spats(nbar_range, eff_range, scan_out);
}

} // namespace

int main(int argc, char **argv)
{
    try {
        return dispatch(argc, argv);
    } catch (const wigsim::oracle_unavailable_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const wigsim::resource_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const wigsim::accuracy_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const wigsim::config_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
