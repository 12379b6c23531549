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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "wigsim/io.hpp"
#include "wigsim/oracle.hpp"
#include "wigsim/sampler.hpp"

using Catch::Approx;
using namespace wigsim;

namespace {

RunConfig vacuum_run(long samples, std::uint64_t seed, int threads = 1)
{
    std::vector<WignerEvaluator> states = {
        WignerEvaluator::gaussian(GaussianStateSpec::vacuum())};
    auto measurement =
        GaussianMeasurementSpec(std::vector<Eigen::Matrix2d>{0.25 * Eigen::Matrix2d::Identity()});
    auto circuit = AffineSymplecticMap::identity(1);
    SelectionOverrides ov;
    ov.delta = 0.05;
    const auto params = select_parameters(0.1, 0.25, states, measurement, circuit,
                                          ParamMode::practical, ov);
    return RunConfig{std::move(states), std::move(circuit), std::move(measurement), params,
                     samples, seed, threads, (std::size_t{1} << 26)};
}

GridDistribution point_mass_grid(const Eigen::Vector2d &center, double delta, long half_extent)
{
    return GridDistribution(center, delta, half_extent,
                            [](long l, long m) { return l == 0 && m == 0 ? 1.0 : 0.0; });
}

} // namespace

TEST_CASE("rebinning to the coarse lattice", "[sampler]")
{
    SECTION("worked example at ratio 3")
    {
        CHECK(rebin_nearest(4, 3) == 1);
        CHECK(rebin_nearest(-2, 3) == -1);
        CHECK(rebin_nearest(0, 3) == 0);
    }
    SECTION("ratio 1 is the identity")
    {
        for (long l = -20; l <= 20; ++l) {
            CHECK(rebin_nearest(l, 1) == l);
        }
    }
    SECTION("every fine cell lands within half a coarse cell")
    {
        for (long ratio : {3L, 5L, 7L}) {
            for (long l = -500; l <= 500; ++l) {
                const long r = rebin_nearest(l, ratio);
                CHECK(std::abs(l - r * ratio) * 2 < ratio);
            }
        }
    }
    SECTION("fine-then-coarse equals direct coarse binning")
    {
        // Exhaustive over cells |l| <= 50 and points inside each fine cell.
        const double delta = 0.1;
        for (long ratio : {1L, 3L, 5L}) {
            const double gamma = delta * ratio;
            for (long l = -50; l <= 50; ++l) {
                for (double off : {-0.49, -0.2, 0.0, 0.31, 0.49}) {
                    const double y = delta * (l + off);
                    const long direct = std::llround(y / gamma);
                    const long fine = std::llround(y / delta);
                    CHECK(fine == l);
                    CHECK(rebin_nearest(fine, ratio) == direct);
                }
            }
        }
    }
}

TEST_CASE("initial sampling", "[sampler]")
{
    SECTION("point mass pins the draw to the center")
    {
        const Eigen::Vector2d mu(1.5, -2.5);
        std::vector<GridDistribution> grids;
        grids.push_back(point_mass_grid(mu, 0.1, 3));
        CounterRng rng(1, 0);
        for (int i = 0; i < 50; ++i) {
            const auto u = sample_initial(grids, rng);
            CHECK(u.q(0) == mu(0));
            CHECK(u.p(0) == mu(1));
        }
    }
    SECTION("cell frequencies match the weights")
    {
        const auto config = vacuum_run(1, 0);
        const auto grid = build_state_grid(config.states.front(), config.params);
        CounterRng rng(2024, 0);
        const int draws = 100000;
        std::map<std::pair<long, long>, long> counts;
        for (int i = 0; i < draws; ++i) {
            counts[grid.sample(rng)] += 1;
        }
        for (long l = -grid.half_extent(); l <= grid.half_extent(); ++l) {
            for (long m = -grid.half_extent(); m <= grid.half_extent(); ++m) {
                const double w = grid.weight(l, m);
                if (w < 1e-3) {
                    continue;
                }
                const double freq =
                    static_cast<double>(counts[{l, m}]) / static_cast<double>(draws);
                const double sigma = std::sqrt(w * (1.0 - w) / draws);
                CHECK(std::abs(freq - w) <= 4.0 * sigma);
            }
        }
    }
    SECTION("modes draw independently")
    {
        std::vector<WignerEvaluator> states = {
            WignerEvaluator::gaussian(GaussianStateSpec::vacuum()),
            WignerEvaluator::gaussian(GaussianStateSpec::vacuum())};
        auto measurement = GaussianMeasurementSpec::heterodyne(2);
        auto circuit = AffineSymplecticMap::identity(2);
        SelectionOverrides ov;
        ov.delta = 0.1;
        const auto params = select_parameters(0.1, 0.3, states, measurement, circuit,
                                              ParamMode::practical, ov);
        std::vector<GridDistribution> grids;
        grids.push_back(build_state_grid(states[0], params));
        grids.push_back(build_state_grid(states[1], params));
        CounterRng rng(77, 0);
        const int draws = 100000;
        double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
        for (int i = 0; i < draws; ++i) {
            std::vector<std::array<long, 2>> cells;
            sample_initial(grids, rng, &cells);
            const double a = static_cast<double>(cells[0][0]);
            const double b = static_cast<double>(cells[1][0]);
            sx += a;
            sy += b;
            sxx += a * a;
            syy += b * b;
            sxy += a * b;
        }
        const double n = draws;
        const double corr = (sxy / n - sx / n * sy / n) /
                            std::sqrt((sxx / n - sx / n * sx / n) *
                                      (syy / n - sy / n * sy / n));
        CHECK(std::abs(corr) <= 0.01);
    }
}

TEST_CASE("measurement sampling", "[sampler]")
{
    SECTION("center draw returns u_tilde itself")
    {
        std::vector<GridDistribution> grids;
        grids.push_back(point_mass_grid(Eigen::Vector2d::Zero(), 0.1, 2));
        CounterRng rng(3, 1);
        Eigen::VectorXd ut(2);
        ut << 0.123, -4.56;
        const auto k = sample_measurement(grids, ut, 0.3, 3, rng);
        CHECK(k(0) == ut(0));
        CHECK(k(1) == ut(1));
    }
    SECTION("outcome offsets are exact gamma multiples")
    {
        const auto config = vacuum_run(500, 99);
        const TrajectorySampler sampler(config);
        for (long i = 0; i < 500; ++i) {
            const auto out = sampler.run(i);
            for (int j = 0; j < 1; ++j) {
                const double expect_q =
                    out.u_tilde(2 * j) +
                    config.params.gamma * static_cast<double>(out.rebinned[j][0]);
                const double expect_p =
                    out.u_tilde(2 * j + 1) +
                    config.params.gamma * static_cast<double>(out.rebinned[j][1]);
                CHECK(out.outcome(2 * j) == expect_q);
                CHECK(out.outcome(2 * j + 1) == expect_p);
                CHECK(out.rebinned[j][0] ==
                      rebin_nearest(out.measurement_cells[j][0], config.params.gamma_ratio));
            }
        }
    }
}

TEST_CASE("trajectory determinism and equivariance", "[sampler]")
{
    SECTION("same seed and index reproduce the outcome")
    {
        const auto config = vacuum_run(1, 31415);
        const TrajectorySampler sampler(config);
        const auto a = sampler.run(7);
        const auto b = sampler.run(7);
        CHECK(a.outcome == b.outcome);
        CHECK(a.state_cells == b.state_cells);
    }
    SECTION("displacement shifts outcomes rigidly")
    {
        auto base = vacuum_run(200, 555);
        auto shifted = base;
        const Eigen::Vector2d d(0.37, -1.21);
        shifted.circuit = displacement(d(0), d(1), 0, 1);
        const TrajectorySampler plain(base);
        const TrajectorySampler moved(shifted);
        for (long i = 0; i < 200; ++i) {
            const auto a = plain.run(i);
            const auto b = moved.run(i);
            CHECK(b.outcome(0) == Approx(a.outcome(0) + d(0)).margin(1e-12));
            CHECK(b.outcome(1) == Approx(a.outcome(1) + d(1)).margin(1e-12));
        }
    }
}

TEST_CASE("ensemble execution", "[sampler]")
{
    SECTION("one sample equals one trajectory")
    {
        const auto config = vacuum_run(1, 2718);
        const auto result = run_ensemble(config);
        const TrajectorySampler sampler(config);
        CHECK(result.outcomes.size() == 1);
        CHECK(result.outcomes.front().outcome == sampler.run(0).outcome);
    }
    SECTION("same seed gives byte-identical streams")
    {
        const auto a = run_ensemble(vacuum_run(400, 1234));
        const auto b = run_ensemble(vacuum_run(400, 1234));
        CHECK(format_outcomes_csv(a.outcomes) == format_outcomes_csv(b.outcomes));
        CHECK(format_outcomes_jsonl(a.outcomes) == format_outcomes_jsonl(b.outcomes));
    }
    SECTION("worker count never changes the outcomes")
    {
        const auto serial = run_ensemble(vacuum_run(600, 42, 1));
        const auto quad_workers = run_ensemble(vacuum_run(600, 42, 4));
        CHECK(format_outcomes_csv(serial.outcomes) ==
              format_outcomes_csv(quad_workers.outcomes));
    }
    SECTION("empirical covariance matches the convolution law")
    {
        // vacuum variance 1/4 plus measurement scatter 1/8 per axis
        const auto result = run_ensemble(vacuum_run(200000, 20260810));
        const double se = std::sqrt(2.0 / 200000.0) * 0.375;
        CHECK(result.summary.covariance(0, 0) == Approx(0.375).margin(3.0 * se));
        CHECK(result.summary.covariance(1, 1) == Approx(0.375).margin(3.0 * se));
        CHECK(result.summary.mean.cwiseAbs().maxCoeff() <=
              3.0 * std::sqrt(0.375 / 200000.0));
    }
    SECTION("rotated vacuum is statistically indistinguishable")
    {
        auto base = vacuum_run(50000, 808);
        auto rotated = base;
        rotated.circuit = phase_shifter(0.7, 0, 1);
        const auto a = run_ensemble(base);
        const auto b = run_ensemble(rotated);
        const auto law = moment_output_law(base.states, base.circuit, base.measurement);
        const auto origin = lattice_origin(law.mean, base.params.gamma);
        const auto region = default_region(law, base.params.gamma, origin, 8.0);
        const auto ha = histogram(a.outcomes, base.params.gamma, origin, region);
        const auto hb = histogram(b.outcomes, base.params.gamma, origin, region);
        const auto d = tv_distance(ha, hb);
        const double allowance =
            2.5 * std::sqrt(static_cast<double>(ha.bins.size()) / 50000.0);
        CHECK(d.tv <= allowance);
    }
}

TEST_CASE("sampler guards", "[sampler]")
{
    SECTION("mode count mismatch")
    {
        auto config = vacuum_run(1, 0);
        config.circuit = AffineSymplecticMap::identity(2);
        CHECK_THROWS_AS(TrajectorySampler(config), config_error);
    }
    SECTION("streaming work estimate is enforced before sampling")
    {
        auto config = vacuum_run(2000000000, 0);
        config.cells_cap = 16; // forces streaming on a 26k-cell grid
        CHECK_THROWS_AS(run_ensemble(config), resource_error);
    }
}
