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
#include <array>
#include <cstdint>
#include <thread>
#include <utility>
#include <vector>

#include "wigsim/discretization.hpp"
#include "wigsim/errors.hpp"
#include "wigsim/measurement.hpp"
#include "wigsim/phase_space.hpp"
#include "wigsim/rng.hpp"
#include "wigsim/states.hpp"

namespace wigsim {

/// One sampled trajectory. Per mode, the outcome is the transformed
/// trajectory point plus gamma times the rebinned measurement cell, so the
/// offset from u_tilde is an exact integer multiple of gamma by construction.
struct TrajectoryOutcome {
    long trajectory_index = 0;
    Eigen::VectorXd outcome;                        // 2n outcome coordinates
    Eigen::VectorXd u_tilde;                        // transformed trajectory point
    std::vector<std::array<long, 2>> state_cells;   // per-mode initial draw (l, m)
    std::vector<std::array<long, 2>> measurement_cells; // per-mode outcome draw (l, m)
    std::vector<std::array<long, 2>> rebinned;      // per-mode (r, s) on the gamma lattice
};

struct RunConfig {
    std::vector<WignerEvaluator> states;
    AffineSymplecticMap circuit;
    GaussianMeasurementSpec measurement;
    DiscretizationParams params;
    long samples = 1;
    std::uint64_t seed = 0;
    int threads = 1;
    std::size_t cells_cap = (std::size_t{1} << 26);
};

/// Nearest integer to l / ratio for odd ratio; parity rules out ties.
inline long rebin_nearest(long l, long ratio)
{
    const long half = ratio / 2;
    return l >= 0 ? (l + half) / ratio : -((-l + half) / ratio);
}

/// Draw one initial phase-space point: an independent cell per mode, mapped
/// to the cell center. Cell indices are recorded in `cells`.
inline PhasePoint sample_initial(const std::vector<GridDistribution> &grids, CounterRng &rng,
                                 std::vector<std::array<long, 2>> *cells = nullptr)
{
    const int n = static_cast<int>(grids.size());
    Eigen::VectorXd u(2 * n);
    for (int j = 0; j < n; ++j) {
        const auto [l, m] = grids[j].sample(rng);
        const Eigen::Vector2d point = grids[j].cell_center(l, m);
        u(2 * j) = point(0);
        u(2 * j + 1) = point(1);
        if (cells != nullptr) {
            cells->push_back({l, m});
        }
    }
    return PhasePoint(std::move(u));
}

/// Draw one outcome per mode around u_tilde: a cell (l, m) from the offset
/// grid, rebinned to the gamma lattice as (r, s) = nearest integers to
/// delta (l, m) / gamma, giving k_j = u_tilde_j + gamma (r, s).
inline Eigen::VectorXd sample_measurement(const std::vector<GridDistribution> &meas_grids,
                                          const Eigen::VectorXd &u_tilde, double gamma,
                                          long gamma_ratio, CounterRng &rng,
                                          std::vector<std::array<long, 2>> *cells = nullptr,
                                          std::vector<std::array<long, 2>> *rebinned = nullptr)
{
    const int n = static_cast<int>(meas_grids.size());
    Eigen::VectorXd k(2 * n);
    for (int j = 0; j < n; ++j) {
        const auto [l, m] = meas_grids[j].sample(rng);
        const long r = rebin_nearest(l, gamma_ratio);
        const long s = rebin_nearest(m, gamma_ratio);
        k(2 * j) = u_tilde(2 * j) + gamma * static_cast<double>(r);
        k(2 * j + 1) = u_tilde(2 * j + 1) + gamma * static_cast<double>(s);
        if (cells != nullptr) {
            cells->push_back({l, m});
        }
        if (rebinned != nullptr) {
            rebinned->push_back({r, s});
        }
    }
    return k;
}

/// Immutable per-run context: grids are built once and shared by all
/// trajectory draws (and threads). Each trajectory consumes its own counter
/// stream keyed by (seed, trajectory_index), so results do not depend on the
/// number of workers.
class TrajectorySampler {
  public:
    explicit TrajectorySampler(const RunConfig &config) : config_(config)
    {
        const int n = static_cast<int>(config.states.size());
        if (n < 1 || config.circuit.modes() != n || config.measurement.modes() != n) {
            throw config_error("TrajectorySampler: mode counts disagree");
        }
        if (config.params.gamma_ratio % 2 == 0) {
            throw config_error("TrajectorySampler: gamma must be an odd multiple of delta");
        }
        if (config.params.affine_precision_estimate > config.params.affine_precision_budget) {
            throw config_error(
                "TrajectorySampler: double precision cannot meet the affine error budget");
        }
        for (int j = 0; j < n; ++j) {
            state_grids_.push_back(build_state_grid(config.states[j], config.params,
                                                    config.cells_cap));
            meas_grids_.push_back(build_measurement_grid(config.measurement, j, config.params,
                                                         config.cells_cap));
        }
        // Streaming draws cost one full sweep per sample; refuse plans that
        // could not finish at desk scale.
        for (const auto &g : state_grids_) {
            if (g.streaming() &&
                static_cast<double>(g.cell_count()) * static_cast<double>(config.samples) > 1e12) {
                throw resource_error(
                    "TrajectorySampler: streaming grids too large for the requested sample "
                    "count; lower delta resolution, raise the cell cap, or reduce samples");
            }
        }
    }

    const std::vector<GridDistribution> &state_grids() const { return state_grids_; }
    const std::vector<GridDistribution> &measurement_grids() const { return meas_grids_; }

    TrajectoryOutcome run(long trajectory_index) const
    {
        CounterRng rng(config_.seed, static_cast<std::uint64_t>(trajectory_index));
        TrajectoryOutcome out;
        out.trajectory_index = trajectory_index;
        const PhasePoint u = sample_initial(state_grids_, rng, &out.state_cells);
        out.u_tilde = config_.circuit.matrix() * u.coords() + config_.circuit.shift();
        out.outcome = sample_measurement(meas_grids_, out.u_tilde, config_.params.gamma,
                                         config_.params.gamma_ratio, rng, &out.measurement_cells,
                                         &out.rebinned);
        return out;
    }

  private:
    RunConfig config_;
    std::vector<GridDistribution> state_grids_;
    std::vector<GridDistribution> meas_grids_;
};

struct EnsembleSummary {
    long count = 0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance; // sample covariance, full 2n x 2n
};

struct EnsembleResult {
    std::vector<TrajectoryOutcome> outcomes; // in trajectory order
    EnsembleSummary summary;
};

inline EnsembleSummary summarize(const std::vector<TrajectoryOutcome> &outcomes)
{
    EnsembleSummary s;
    s.count = static_cast<long>(outcomes.size());
    if (outcomes.empty()) {
        return s;
    }
    const auto dim = outcomes.front().outcome.size();
    s.mean = Eigen::VectorXd::Zero(dim);
    for (const auto &o : outcomes) {
        s.mean += o.outcome;
    }
    s.mean /= static_cast<double>(s.count);
    s.covariance = Eigen::MatrixXd::Zero(dim, dim);
    for (const auto &o : outcomes) {
        const Eigen::VectorXd d = o.outcome - s.mean;
        s.covariance += d * d.transpose();
    }
    s.covariance /= static_cast<double>(std::max<long>(s.count - 1, 1));
    return s;
}

/// Run `samples` trajectories. The outcome vector is ordered by trajectory
/// index and bitwise independent of the worker count.
inline EnsembleResult run_ensemble(const RunConfig &config)
{
    if (config.samples < 1) {
        throw config_error("run_ensemble: samples must be >= 1");
    }
    TrajectorySampler sampler(config);
    EnsembleResult result;
    result.outcomes.resize(static_cast<std::size_t>(config.samples));
    const int workers = std::max(1, config.threads);
    if (workers == 1) {
        for (long i = 0; i < config.samples; ++i) {
            result.outcomes[static_cast<std::size_t>(i)] = sampler.run(i);
        }
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        const long chunk = (config.samples + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const long lo = w * chunk;
            const long hi = std::min(config.samples, lo + chunk);
            if (lo >= hi) {
                break;
            }
            pool.emplace_back([&, lo, hi]() {
                for (long i = lo; i < hi; ++i) {
                    result.outcomes[static_cast<std::size_t>(i)] = sampler.run(i);
                }
            });
        }
        for (auto &t : pool) {
            t.join();
        }
    }
    result.summary = summarize(result.outcomes);
    return result;
}

} // namespace wigsim
