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
#include <vector>

#include "wigsim/discretization.hpp"
#include "wigsim/quadrature.hpp"
#include "wigsim/rng.hpp"

using Catch::Approx;
using namespace wigsim;

namespace {

std::vector<Eigen::Matrix2d> quarter_cov() { return {0.25 * Eigen::Matrix2d::Identity()}; }

GaussianMeasurementSpec quarter_measurement()
{
    return GaussianMeasurementSpec(quarter_cov());
}

std::vector<WignerEvaluator> vacuum_state()
{
    return {WignerEvaluator::gaussian(GaussianStateSpec::vacuum())};
}

} // namespace

TEST_CASE("selection bounds", "[discretization]")
{
    SECTION("area bound")
    {
        CHECK(area_lower_bound(0.1, quarter_cov(), quarter_cov(), 1) == Approx(160.0));
        CHECK(area_lower_bound(0.1, quarter_cov(), quarter_cov(), 2) == Approx(320.0));
        CHECK(area_lower_bound(0.2, quarter_cov(), quarter_cov(), 1) == Approx(80.0));
        CHECK_THROWS_AS(area_lower_bound(1.0, quarter_cov(), quarter_cov(), 1), config_error);
    }
    SECTION("pitch bound")
    {
        // epsilon / (16 [(1 + 1) 1 + 1] 1 sqrt(2))
        const double expected = 0.1 / (16.0 * 3.0 * std::sqrt(2.0));
        CHECK(delta_upper_bound(0.1, 1.0, 1.0, 1.0, 1) == Approx(expected).epsilon(1e-14));
        CHECK(delta_upper_bound(0.1, 1.0, 1.0, 1.0, 1) == Approx(1.4731e-3).margin(1e-7));
        CHECK(delta_upper_bound(0.1, 1.0, 100.0, 1.0, 1) <
              delta_upper_bound(0.1, 1.0, 1.0, 1.0, 1));
        // n sqrt(2n) grows from sqrt(2) to 4: ratio sqrt(2)/4
        CHECK(delta_upper_bound(0.1, 1.0, 1.0, 1.0, 2) /
                  delta_upper_bound(0.1, 1.0, 1.0, 1.0, 1) ==
              Approx(std::sqrt(2.0) / 4.0).epsilon(1e-12));
    }
    SECTION("oracle tolerance bound")
    {
        CHECK(oracle_tol_bound(0.1, 1, 160.0) == Approx(7.8125e-5).epsilon(1e-12));
        CHECK(oracle_tol_bound(0.1, 2, 160.0) == Approx(2.44140625e-7).epsilon(1e-12));
        CHECK(oracle_tol_bound(0.2, 1, 160.0) == Approx(2.0 * 7.8125e-5).epsilon(1e-12));
    }
    SECTION("affine precision budget")
    {
        CHECK(affine_precision_budget(1.0, 1e-3, 2) == Approx(1e-3).epsilon(1e-14));
        CHECK(affine_precision_budget(2.0, 0.0, 3) == 0.0);
        CHECK(affine_precision_budget(1.0, 1.0, 4) / affine_precision_budget(1.0, 1.0, 1) ==
              Approx(2.0).epsilon(1e-14));
    }
}

TEST_CASE("odd multiple rounding", "[discretization]")
{
    CHECK(odd_multiple_at_least(0.15, 0.05) == 3);
    CHECK(odd_multiple_at_least(12.65, 0.05) == 253);
    CHECK(odd_multiple_at_least(0.2, 0.05) == 5); // 4 is even, round up
    CHECK(odd_multiple_at_least(0.01, 0.05) == 1);
    CHECK(odd_multiple_at_least(0.25, 1.4731424e-3) == 171);
}

TEST_CASE("parameter selection", "[discretization]")
{
    const auto id = AffineSymplecticMap::identity(1);

    SECTION("certified with unit constants reproduces the worked numbers")
    {
        SelectionOverrides ov;
        ov.beta = 1.0;
        ov.lambda = 1.0;
        const auto params = select_parameters(0.1, 0.25, vacuum_state(), quarter_measurement(),
                                              id, ParamMode::certified, ov);
        CHECK(params.area_bound == Approx(160.0).epsilon(1e-12));
        CHECK(params.delta_bound ==
              Approx(0.1 / (16.0 * 3.0 * std::sqrt(2.0))).epsilon(1e-9));
        CHECK(params.gamma == 0.25);
        CHECK(params.gamma_ratio % 2 == 1);
        CHECK(params.delta == Approx(params.gamma / params.gamma_ratio));
        CHECK(params.delta <= params.delta_bound);
        CHECK(params.sqrt_area >= std::sqrt(160.0));
        CHECK(std::llround(params.sqrt_area / params.delta) % 2 == 1);
        CHECK(params.oracle_tol == Approx(0.1 / (8.0 * params.area)).epsilon(1e-12));

        const auto report =
            check_conditions(params, vacuum_state(), quarter_measurement(), id);
        CHECK(report.all_pass());
        CHECK_FALSE(report.gradient_bounds.verified);
    }

    SECTION("certified with derived constants verifies every condition")
    {
        const auto params = select_parameters(0.1, 0.25, vacuum_state(), quarter_measurement(),
                                              id, ParamMode::certified);
        const auto report =
            check_conditions(params, vacuum_state(), quarter_measurement(), id);
        CHECK(report.all_pass());
        CHECK(report.all_verified());
        CHECK_FALSE(params.constants_assumed);
    }

    SECTION("practical mode keeps the user's grid")
    {
        SelectionOverrides ov;
        ov.delta = 0.05;
        ov.area = 12.65 * 12.65;
        const auto params = select_parameters(0.1, 0.15, vacuum_state(), quarter_measurement(),
                                              id, ParamMode::practical, ov);
        CHECK(params.delta == 0.05);
        CHECK(params.gamma == Approx(0.15));
        CHECK(params.gamma_ratio == 3);
        CHECK(params.sqrt_area == Approx(12.65).epsilon(1e-12));
        CHECK(params.half_extent == 126);
        const auto report =
            check_conditions(params, vacuum_state(), quarter_measurement(), id);
        CHECK_FALSE(report.delta_bound.pass); // far above the certified pitch
        CHECK(report.area_bound.pass == (params.area >= 160.0));
    }

    SECTION("gamma already an odd multiple is kept")
    {
        SelectionOverrides ov;
        ov.delta = 0.1;
        const auto params = select_parameters(0.1, 0.3, vacuum_state(), quarter_measurement(),
                                              id, ParamMode::practical, ov);
        CHECK(params.gamma == Approx(0.3));
        CHECK(params.gamma_ratio == 3);
    }

    SECTION("rejections")
    {
        CHECK_THROWS_AS(select_parameters(1.5, 0.25, vacuum_state(), quarter_measurement(), id,
                                          ParamMode::certified),
                        config_error);
        CHECK_THROWS_AS(select_parameters(0.1, 1e-5, vacuum_state(), quarter_measurement(), id,
                                          ParamMode::certified),
                        config_error); // gamma below the certified pitch
        CHECK_THROWS_AS(select_parameters(0.1, 0.25, vacuum_state(), quarter_measurement(), id,
                                          ParamMode::practical),
                        config_error); // practical mode needs delta
    }

    SECTION("tightening epsilon never coarsens the plan")
    {
        double last_delta = 1e9;
        double last_area = 0.0;
        for (double epsilon : {0.5, 0.25, 0.1, 0.05}) {
            const auto params = select_parameters(epsilon, 0.25, vacuum_state(),
                                                  quarter_measurement(), id,
                                                  ParamMode::certified);
            CHECK(params.delta <= last_delta * (1.0 + 1e-12));
            CHECK(params.area >= last_area * (1.0 - 1e-12));
            last_delta = params.delta;
            last_area = params.area;
        }
    }
}

TEST_CASE("grid distributions", "[discretization]")
{
    const auto id = AffineSymplecticMap::identity(1);
    SelectionOverrides ov;
    ov.delta = 0.5;
    ov.area = 4.5 * 4.5;
    const auto params = select_parameters(0.1, 0.5, vacuum_state(), quarter_measurement(), id,
                                          ParamMode::practical, ov);
    REQUIRE(params.half_extent == 4);

    SECTION("vacuum grid is symmetric with the peak at the center")
    {
        const auto grid = build_state_grid(vacuum_state().front(), params);
        CHECK(grid.weight_sum() == Approx(1.0).margin(1e-12));
        double max_w = 0.0;
        for (long l = -4; l <= 4; ++l) {
            for (long m = -4; m <= 4; ++m) {
                max_w = std::max(max_w, grid.weight(l, m));
                CHECK(grid.weight(l, m) == Approx(grid.weight(-l, -m)).margin(1e-12));
                CHECK(grid.weight(l, m) == Approx(grid.weight(m, l)).margin(1e-12));
            }
        }
        CHECK(grid.weight(0, 0) == max_w);
    }

    SECTION("measurement grid weight ratio")
    {
        const auto grid = build_measurement_grid(quarter_measurement(), 0, params);
        // quadratic form at delta (1,0): 0.25 * 4 = 1, so the ratio is e.
        CHECK(grid.weight(0, 0) / grid.weight(1, 0) == Approx(std::exp(1.0)).epsilon(1e-12));
    }

    SECTION("negative raw values are clamped before normalizing")
    {
        const GridDistribution grid(
            Eigen::Vector2d::Zero(), 1.0, 1,
            [](long l, long m) { return (l == 0 && m == 0) ? 1.0 : -1e-12; });
        CHECK(grid.weight(0, 0) >= 0.0);
        CHECK(grid.weight(1, 1) == 0.0);
        CHECK(grid.weight_sum() == Approx(1.0).margin(1e-12));
    }

    SECTION("degenerate grids are rejected")
    {
        CHECK_THROWS_AS(GridDistribution(Eigen::Vector2d::Zero(), 1.0, 2,
                                         [](long, long) { return 0.0; }),
                        degenerate_grid_error);
    }

    SECTION("streaming draws match dense draws bit for bit")
    {
        const auto dense = build_state_grid(vacuum_state().front(), params);
        const auto streaming = build_state_grid(vacuum_state().front(), params, 10);
        REQUIRE_FALSE(dense.streaming());
        REQUIRE(streaming.streaming());
        CounterRng rng_a(99, 3);
        CounterRng rng_b(99, 3);
        for (int i = 0; i < 2000; ++i) {
            CHECK(dense.sample(rng_a) == streaming.sample(rng_b));
        }
    }
}

TEST_CASE("clamping keeps raw values nonnegative in state grids", "[discretization]")
{
    // A boundary-efficiency state touches zero at the origin; rounding there
    // must not produce negative weights.
    const auto w = WignerEvaluator::spats(SpatsSpec(1.0, 0.5));
    SelectionOverrides ov;
    ov.delta = 0.25;
    ov.area = 36.0;
    const auto params =
        select_parameters(0.1, 0.25, {w}, GaussianMeasurementSpec::heterodyne(1),
                          AffineSymplecticMap::identity(1), ParamMode::practical, ov);
    const auto grid = build_state_grid(w, params);
    for (long l = -params.half_extent; l <= params.half_extent; ++l) {
        for (long m = -params.half_extent; m <= params.half_extent; ++m) {
            CHECK(grid.weight(l, m) >= 0.0);
        }
    }
}

TEST_CASE("truncation tails", "[discretization]")
{
    SECTION("vacuum against the Chebyshev budget at |A| = 160")
    {
        const auto vac = vacuum_state().front();
        const double measured = out_of_region_mass(vac, std::sqrt(160.0));
        const double bound = chebyshev_tail_bound(vac.covariance(), 160.0);
        CHECK(bound == Approx(0.0125).epsilon(1e-12));
        CHECK(measured <= bound);
        CHECK(measured <= 1e-30); // the true Gaussian tail is tiny
    }
    SECTION("photon-added state tail holds with slack")
    {
        const auto w = WignerEvaluator::spats(SpatsSpec(1.0, 0.4));
        const double area = 144.0;
        const double measured = out_of_region_mass(w, std::sqrt(area));
        CHECK(measured <= chebyshev_tail_bound(w.covariance(), area));
        CHECK(measured <= 1e-12);
        // closed-form radial tail vs direct quadrature of the density outside
        // a smaller square, where the tail is still resolvable
        const double side = 5.0;
        const double inside = quad::integrate_2d(
            [&](double q, double p) { return w.value(q, p); }, -side / 2, side / 2, -side / 2,
            side / 2, 12, 16);
        CHECK(out_of_region_mass(w, side) >= (1.0 - inside) * (1.0 - 1e-6));
    }
}

TEST_CASE("cell mass accuracy bound", "[discretization]")
{
    // |raw cell value - integral of W over the cell| is controlled by the
    // gradient bound times delta^2 * (delta sqrt(2) / 2), plus the oracle
    // tolerance share.
    const auto vac = vacuum_state().front();
    const auto id = AffineSymplecticMap::identity(1);
    SelectionOverrides ov;
    ov.delta = 0.05;
    ov.area = 160.0;
    const auto params = select_parameters(0.1, 0.25, {vac}, quarter_measurement(), id,
                                          ParamMode::practical, ov);
    const auto grid = build_state_grid(vac, params);
    const double delta = params.delta;
    const double bound = vac.sup_gradient() * delta * delta * delta * std::sqrt(2.0) / 2.0 +
                         params.oracle_tol * delta * delta;
    CounterRng rng(5, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const long l =
            static_cast<long>(rng.next_u64() % (2 * params.half_extent + 1)) - params.half_extent;
        const long m =
            static_cast<long>(rng.next_u64() % (2 * params.half_extent + 1)) - params.half_extent;
        const Eigen::Vector2d c = grid.cell_center(l, m);
        const double raw = grid.weight(l, m) * grid.total_raw_mass();
        const double integral = quad::integrate_2d(
            [&](double q, double p) { return vac.value(q, p); }, c(0) - delta / 2,
            c(0) + delta / 2, c(1) - delta / 2, c(1) + delta / 2, 2, 12);
        CHECK(std::abs(raw - integral) <= bound);
    }
}

TEST_CASE("odd ratio rebinning has no ties", "[discretization]")
{
    for (long ratio : {1L, 3L, 5L, 7L}) {
        for (long l = -10000; l <= 10000; ++l) {
            // a tie would need 2 l to be an odd multiple of the odd ratio
            const long residue = ((2 * l) % (2 * ratio) + 2 * ratio) % (2 * ratio);
            CHECK(residue != ratio);
        }
    }
}
