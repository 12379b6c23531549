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
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "wigsim/errors.hpp"
#include "wigsim/measurement.hpp"
#include "wigsim/phase_space.hpp"
#include "wigsim/rng.hpp"
#include "wigsim/states.hpp"

namespace wigsim {

enum class ParamMode { certified, practical };

/// The resolved error-budget parameters of one run.
///
/// The sampling grids cover a square of area `area` per mode, tiled by cells
/// of side `delta` with an odd number of cells per side (so a cell is
/// centered on the distribution mean) and outcomes are reported on a lattice
/// of pitch `gamma`, an odd integer multiple of `delta` (which makes
/// rebinning tie-free by parity). `area_bound` and `delta_bound` keep the
/// raw values of the selection inequalities before odd-multiple rounding.
struct DiscretizationParams {
    double epsilon = 0.0;
    double gamma = 0.0;
    double delta = 0.0;
    double sqrt_area = 0.0;
    double area = 0.0;
    long half_extent = 0;  // cells indexed l, m in [-half_extent, half_extent]
    long gamma_ratio = 1;  // gamma / delta, odd
    double area_bound = 0.0;
    double delta_bound = 0.0;
    double oracle_tol = 0.0;
    double affine_precision_budget = 0.0;
    double affine_precision_estimate = 0.0;
    double beta = 0.0;
    double lambda = 0.0;
    double t_norm = 1.0;
    bool constants_assumed = false;
    ParamMode mode = ParamMode::certified;

    std::size_t cells_per_mode() const
    {
        const std::size_t side = static_cast<std::size_t>(2 * half_extent + 1);
        return side * side;
    }
};

/// Truncation-area requirement: 16 n max_{i,j}(tr V_rho_i + tr V_M_j) / epsilon.
inline double area_lower_bound(double epsilon, const std::vector<Eigen::Matrix2d> &state_covs,
                               const std::vector<Eigen::Matrix2d> &meas_covs, int n)
{
    if (!(epsilon > 0.0) || !(epsilon < 1.0)) {
        throw config_error("epsilon must be in (0,1)");
    }
    double worst = 0.0;
    for (const auto &vs : state_covs) {
        for (const auto &vm : meas_covs) {
            worst = std::max(worst, vs(0, 0) + vs(1, 1) + vm(0, 0) + vm(1, 1));
        }
    }
    return 16.0 * n * worst / epsilon;
}

/// Grid-pitch requirement: epsilon / (16 [(1 + |T|) Lambda + beta] n sqrt(2n)).
/// The cap delta <= gamma is the caller's.
inline double delta_upper_bound(double epsilon, double t_norm, double beta, double lambda, int n)
{
    return epsilon / (16.0 * ((1.0 + t_norm) * lambda + beta) * n * std::sqrt(2.0 * n));
}

/// Tolerance allowed of the grid-point density oracle: epsilon / (8 n |A|^n).
inline double oracle_tol_bound(double epsilon, int n, double area)
{
    const double area_pow = std::pow(area, n);
    if (!std::isfinite(area_pow)) {
        throw resource_error("oracle_tol_bound: area^n overflows at this mode count");
    }
    return epsilon / (8.0 * n * area_pow);
}

/// Numerical-error budget allowed in the affine update: |T| delta sqrt(n/2).
inline double affine_precision_budget(double t_norm, double delta, int n)
{
    return t_norm * delta * std::sqrt(0.5 * n);
}

/// Smallest odd integer k with k * d >= x, snapping to round(x / d) when the
/// ratio is within 1e-9 of an integer.
inline long odd_multiple_at_least(double x, double d)
{
    if (!(d > 0.0) || !(x > 0.0)) {
        throw std::invalid_argument("odd_multiple_at_least: arguments must be positive");
    }
    const double ratio = x / d;
    long k = std::llround(ratio);
    if (std::abs(ratio - k) > 1e-9 * std::max(1.0, std::abs(ratio))) {
        k = static_cast<long>(std::ceil(ratio));
    }
    if (k < 1) {
        k = 1;
    }
    if (k % 2 == 0) {
        k += 1;
    }
    return k;
}

/// Upper bound on sup |grad| of a product of per-mode densities from per-mode
/// gradient and peak bounds: each partial derivative is maximized separately.
inline double product_sup_gradient(const std::vector<double> &grad_sups,
                                   const std::vector<double> &peaks)
{
    double total = 0.0;
    for (std::size_t j = 0; j < grad_sups.size(); ++j) {
        double term = grad_sups[j];
        for (std::size_t i = 0; i < peaks.size(); ++i) {
            if (i != j) {
                term *= peaks[i];
            }
        }
        total += term * term;
    }
    return std::sqrt(total);
}

inline double combined_state_sup_gradient(const std::vector<WignerEvaluator> &states)
{
    std::vector<double> grads, peaks;
    for (const auto &w : states) {
        grads.push_back(w.sup_gradient());
        peaks.push_back(w.sup_value());
    }
    return product_sup_gradient(grads, peaks);
}

inline double combined_measurement_sup_gradient(const GaussianMeasurementSpec &meas)
{
    std::vector<double> grads, peaks;
    for (int j = 0; j < meas.modes(); ++j) {
        grads.push_back(mode_conditional_sup_gradient(meas, j));
        peaks.push_back(mode_conditional_peak(meas, j));
    }
    return product_sup_gradient(grads, peaks);
}

/// Optional user-supplied parameters. `delta` and `area` drive practical
/// mode; `beta` and `lambda` replace the derived gradient constants (their
/// existence is then assumed rather than verified).
struct SelectionOverrides {
    std::optional<double> delta;
    std::optional<double> area;
    std::optional<double> beta;
    std::optional<double> lambda;
};

namespace detail {

inline double default_sqrt_area(const std::vector<WignerEvaluator> &states,
                                const GaussianMeasurementSpec &meas)
{
    double sigma = 0.0;
    for (const auto &w : states) {
        const Eigen::Matrix2d v = w.covariance();
        sigma = std::max(sigma, std::sqrt(std::max(v(0, 0), v(1, 1))));
    }
    for (int j = 0; j < meas.modes(); ++j) {
        const Eigen::Matrix2d v = meas.physical_outcome_cov(j);
        sigma = std::max(sigma, std::sqrt(std::max(v(0, 0), v(1, 1))));
    }
    return 16.0 * sigma;
}

inline double double_precision_affine_error(const AffineSymplecticMap &map, double t_norm,
                                            double mu_max, double sqrt_area)
{
    // Coarse forward-error bound for a dense double-precision mat-vec.
    const double eps = std::numeric_limits<double>::epsilon();
    const double u_max = mu_max + sqrt_area;
    const double x_max = map.shift().size() ? map.shift().cwiseAbs().maxCoeff() : 0.0;
    return 64.0 * eps * map.matrix().rows() * (t_norm * u_max + x_max + 1.0);
}

} // namespace detail

/// Resolve the run parameters for the given experiment.
///
/// Certified mode derives everything from the error budget: the area from
/// its lower bound, the gradient constants from the evaluators (scaled by
/// |A|^n / n), the pitch from its upper bound, then shrinks delta so that
/// gamma and sqrt(|A|) are odd integer multiples of it. Practical mode takes
/// the user's delta (and optionally area) verbatim, only enforcing the
/// odd-multiple layout and delta <= gamma.
inline DiscretizationParams select_parameters(double epsilon, double gamma_request,
                                              const std::vector<WignerEvaluator> &states,
                                              const GaussianMeasurementSpec &meas,
                                              const AffineSymplecticMap &map, ParamMode mode,
                                              const SelectionOverrides &ov = {})
{
    if (!(epsilon > 0.0) || !(epsilon < 1.0)) {
        throw config_error("epsilon must be in (0,1)");
    }
    if (!(gamma_request > 0.0)) {
        throw config_error("gamma must be positive");
    }
    const int n = static_cast<int>(states.size());
    if (n < 1 || meas.modes() != n || map.modes() != n) {
        throw config_error("select_parameters: mode counts disagree");
    }

    std::vector<Eigen::Matrix2d> state_covs, meas_covs;
    double mu_max = 0.0;
    for (const auto &w : states) {
        state_covs.push_back(w.covariance());
        mu_max = std::max(mu_max, w.mean().cwiseAbs().maxCoeff());
    }
    for (int j = 0; j < n; ++j) {
        meas_covs.push_back(meas.mode_cov(j));
    }

    DiscretizationParams out;
    out.epsilon = epsilon;
    out.mode = mode;
    out.t_norm = spectral_norm(map.matrix());
    out.area_bound = area_lower_bound(epsilon, state_covs, meas_covs, n);
    out.constants_assumed = ov.beta.has_value() || ov.lambda.has_value();

    const double sup_w = combined_state_sup_gradient(states);
    const double sup_m = combined_measurement_sup_gradient(meas);
    const auto constants_for_area = [&](double area) -> std::pair<double, double> {
        const double scale = std::pow(area, n) / n;
        if (!std::isfinite(scale)) {
            throw resource_error("select_parameters: area^n overflows at this mode count");
        }
        return {ov.beta.value_or(sup_w * scale), ov.lambda.value_or(sup_m * scale)};
    };

    if (mode == ParamMode::certified) {
        double area = out.area_bound;
        long k_gamma = 1, k_area = 1;
        double delta = gamma_request;
        for (int iter = 0; iter < 64; ++iter) {
            const auto [beta, lambda] = constants_for_area(area);
            out.beta = beta;
            out.lambda = lambda;
            out.delta_bound = delta_upper_bound(epsilon, out.t_norm, beta, lambda, n);
            if (gamma_request < out.delta_bound) {
                throw config_error("gamma is below the certified delta; no valid grid");
            }
            k_gamma = odd_multiple_at_least(gamma_request, out.delta_bound);
            delta = gamma_request / k_gamma;
            k_area = odd_multiple_at_least(std::sqrt(out.area_bound), delta);
            const double next_area = (k_area * delta) * (k_area * delta);
            if (std::abs(next_area - area) <= 1e-12 * area) {
                area = next_area;
                break;
            }
            area = next_area;
        }
        out.delta = delta;
        out.gamma = gamma_request;
        out.gamma_ratio = k_gamma;
        out.sqrt_area = k_area * delta;
        out.area = out.sqrt_area * out.sqrt_area;
        out.half_extent = (k_area - 1) / 2;
    } else {
        if (!ov.delta.has_value()) {
            throw config_error("practical mode requires an explicit delta");
        }
        const double delta = *ov.delta;
        if (!(delta > 0.0)) {
            throw config_error("delta must be positive");
        }
        const long k_gamma = odd_multiple_at_least(gamma_request, delta);
        out.delta = delta;
        out.gamma = k_gamma * delta;
        out.gamma_ratio = k_gamma;
        const double sqrt_area_request =
            ov.area.has_value() ? std::sqrt(*ov.area) : detail::default_sqrt_area(states, meas);
        if (sqrt_area_request < delta) {
            throw config_error("area is smaller than a single grid cell");
        }
        const long k_area = odd_multiple_at_least(sqrt_area_request, delta);
        out.sqrt_area = k_area * delta;
        out.area = out.sqrt_area * out.sqrt_area;
        out.half_extent = (k_area - 1) / 2;
        const auto [beta, lambda] = constants_for_area(out.area);
        out.beta = beta;
        out.lambda = lambda;
        out.delta_bound = delta_upper_bound(epsilon, out.t_norm, beta, lambda, n);
    }

    out.oracle_tol = oracle_tol_bound(epsilon, n, out.area);
    out.affine_precision_budget = affine_precision_budget(out.t_norm, out.delta, n);
    out.affine_precision_estimate =
        detail::double_precision_affine_error(map, out.t_norm, mu_max, out.sqrt_area);
    return out;
}

/// Boundedness caps used by the condition report; the shift cap default is
/// deliberately loose and configurable.
struct BoundednessCaps {
    double mean_cap = 1e6;
    double cov_cap = 1e6;
    double t_norm_cap = 1e6;
    double shift_cap = 1e6;
};

struct ConditionStatus {
    bool pass = false;
    bool verified = true; // false when the claim rests on user-supplied constants
    std::string detail;
};

struct ConditionsReport {
    ConditionStatus inputs_bounded;   // 1: means, covariances, |T|, |x| within caps
    ConditionStatus gradient_bounds;  // 2: sup-gradients within n beta / |A|^n
    ConditionStatus delta_bound;      // 3: delta within its upper bound and <= gamma
    ConditionStatus precision_budget; // 4: epsilon < 1 and affine error within budget
    ConditionStatus area_bound;       // 5: area at least its lower bound
    ConditionStatus oracle_tolerance; // 6: oracle tolerance within its bound

    bool all_pass() const
    {
        return inputs_bounded.pass && gradient_bounds.pass && delta_bound.pass &&
               precision_budget.pass && area_bound.pass && oracle_tolerance.pass;
    }
    bool all_verified() const
    {
        return inputs_bounded.verified && gradient_bounds.verified && delta_bound.verified &&
               precision_budget.verified && area_bound.verified && oracle_tolerance.verified;
    }
};

inline ConditionsReport check_conditions(const DiscretizationParams &params,
                                         const std::vector<WignerEvaluator> &states,
                                         const GaussianMeasurementSpec &meas,
                                         const AffineSymplecticMap &map,
                                         const BoundednessCaps &caps = {})
{
    const int n = static_cast<int>(states.size());
    ConditionsReport report;
    const double rel = 1.0 + 1e-9;

    {
        double mu_max = 0.0, cov_max = 0.0;
        std::vector<Eigen::Matrix2d> state_covs, meas_covs;
        for (const auto &w : states) {
            mu_max = std::max(mu_max, w.mean().norm());
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(w.covariance());
            cov_max = std::max(cov_max, es.eigenvalues().cwiseAbs().maxCoeff());
            state_covs.push_back(w.covariance());
        }
        for (int j = 0; j < n; ++j) {
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(meas.mode_cov(j));
            cov_max = std::max(cov_max, es.eigenvalues().cwiseAbs().maxCoeff());
            meas_covs.push_back(meas.mode_cov(j));
        }
        const double x_norm = map.shift().norm();
        auto &c = report.inputs_bounded;
        c.pass = n >= 1 && mu_max <= caps.mean_cap && cov_max <= caps.cov_cap &&
                 params.t_norm <= caps.t_norm_cap && x_norm <= caps.shift_cap;
        std::ostringstream os;
        os << "max|mean|=" << mu_max << " max|V|=" << cov_max << " |T|=" << params.t_norm
           << " |x|=" << x_norm << " caps=" << caps.shift_cap;
        c.detail = os.str();

        auto &c5 = report.area_bound;
        const double bound = area_lower_bound(params.epsilon, state_covs, meas_covs, n);
        c5.pass = params.area >= bound * (1.0 - 1e-9);
        std::ostringstream os5;
        os5 << "area=" << params.area << " bound=" << bound;
        c5.detail = os5.str();
    }

    {
        auto &c = report.gradient_bounds;
        const bool finite = std::isfinite(params.beta) && std::isfinite(params.lambda) &&
                            params.beta > 0.0 && params.lambda > 0.0;
        if (params.constants_assumed) {
            c.pass = finite;
            c.verified = false;
            c.detail = "beta/lambda supplied by the caller; existence assumed";
        } else {
            const double scale = std::pow(params.area, n) / n;
            const double allowed_w = params.beta / scale;
            const double allowed_m = params.lambda / scale;
            const double sup_w = combined_state_sup_gradient(states);
            const double sup_m = combined_measurement_sup_gradient(meas);
            c.pass = finite && sup_w <= allowed_w * rel && sup_m <= allowed_m * rel;
            std::ostringstream os;
            os << "sup|gradW|=" << sup_w << " allowed=" << allowed_w << " sup|gradM|=" << sup_m
               << " allowed=" << allowed_m;
            c.detail = os.str();
        }
    }

    {
        auto &c = report.delta_bound;
        const double bound =
            delta_upper_bound(params.epsilon, params.t_norm, params.beta, params.lambda, n);
        c.pass = params.delta <= std::min(bound, params.gamma) * rel;
        c.verified = !params.constants_assumed;
        std::ostringstream os;
        os << "delta=" << params.delta << " bound=" << std::min(bound, params.gamma);
        c.detail = os.str();
    }

    {
        auto &c = report.precision_budget;
        c.pass = params.epsilon < 1.0 &&
                 params.affine_precision_estimate <= params.affine_precision_budget * rel;
        std::ostringstream os;
        os << "estimate=" << params.affine_precision_estimate
           << " budget=" << params.affine_precision_budget;
        c.detail = os.str();
    }

    {
        auto &c = report.oracle_tolerance;
        const double bound = oracle_tol_bound(params.epsilon, n, params.area);
        c.pass = params.oracle_tol <= bound * rel;
        std::ostringstream os;
        os << "oracle_tol=" << params.oracle_tol << " bound=" << bound;
        c.detail = os.str();
    }

    return report;
}

/// A normalized probability table over grid cells (l, m) with
/// |l|, |m| <= half_extent, cell centers at center + delta * (l, m).
/// Above the cell cap the weights are never materialized: draws walk the
/// cells in row-major order accumulating raw mass over the precomputed
/// total, which makes dense and streaming draws bit-identical.
class GridDistribution {
  public:
    using RawFn = std::function<double(long, long)>;

    GridDistribution(Eigen::Vector2d center, double delta, long half_extent, RawFn raw,
                     std::size_t cells_cap = (std::size_t{1} << 26))
        : center_(std::move(center)), delta_(delta), half_extent_(half_extent),
          raw_(std::move(raw))
    {
        if (!(delta_ > 0.0) || half_extent_ < 0) {
            throw std::invalid_argument("GridDistribution: bad geometry");
        }
        const std::size_t side = static_cast<std::size_t>(2 * half_extent_ + 1);
        cells_ = side * side;
        total_raw_ = 0.0;
        for_each_cell([&](long, long, double v) { total_raw_ += v; });
        if (!(total_raw_ > 0.0) || !std::isfinite(total_raw_)) {
            throw degenerate_grid_error("GridDistribution: no probability mass in the region");
        }
        if (cells_ <= cells_cap) {
            weights_.reserve(cells_);
            cumulative_.reserve(cells_);
            double acc = 0.0;
            for_each_cell([&](long, long, double v) {
                const double w = v / total_raw_;
                weights_.push_back(w);
                acc += w;
                cumulative_.push_back(acc);
            });
        }
    }

    bool streaming() const { return weights_.empty(); }
    std::size_t cell_count() const { return cells_; }
    long half_extent() const { return half_extent_; }
    double delta() const { return delta_; }
    const Eigen::Vector2d &center() const { return center_; }
    double total_raw_mass() const { return total_raw_; }

    double weight(long l, long m) const
    {
        check_index(l, m);
        if (!streaming()) {
            return weights_[flat_index(l, m)];
        }
        return raw_(l, m) / total_raw_;
    }

    /// Normalized sum of all weights (1 up to rounding).
    double weight_sum() const
    {
        if (!streaming()) {
            return cumulative_.back();
        }
        double acc = 0.0;
        for_each_cell([&](long, long, double v) { acc += v / total_raw_; });
        return acc;
    }

    /// Inverse-CDF draw over the row-major cell order; consumes one uniform.
    std::pair<long, long> sample(CounterRng &rng) const
    {
        const double xi = rng.next_double();
        if (!streaming()) {
            const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), xi);
            std::size_t idx = it == cumulative_.end() ? cells_ - 1
                                                      : static_cast<std::size_t>(
                                                            it - cumulative_.begin());
            return cell_of(idx);
        }
        double acc = 0.0;
        long pick_l = half_extent_, pick_m = half_extent_;
        bool found = false;
        for (long l = -half_extent_; l <= half_extent_ && !found; ++l) {
            for (long m = -half_extent_; m <= half_extent_; ++m) {
                acc += raw_(l, m) / total_raw_;
                if (acc > xi) {
                    pick_l = l;
                    pick_m = m;
                    found = true;
                    break;
                }
            }
        }
        return {pick_l, pick_m};
    }

    Eigen::Vector2d cell_center(long l, long m) const
    {
        return center_ + delta_ * Eigen::Vector2d(static_cast<double>(l), static_cast<double>(m));
    }

  private:
    template <class F>
    void for_each_cell(F &&f) const
    {
        for (long l = -half_extent_; l <= half_extent_; ++l) {
            for (long m = -half_extent_; m <= half_extent_; ++m) {
                f(l, m, raw_(l, m));
            }
        }
    }

    void check_index(long l, long m) const
    {
        if (std::abs(l) > half_extent_ || std::abs(m) > half_extent_) {
            throw std::out_of_range("GridDistribution: cell index out of range");
        }
    }

    std::size_t flat_index(long l, long m) const
    {
        const long side = 2 * half_extent_ + 1;
        return static_cast<std::size_t>((l + half_extent_) * side + (m + half_extent_));
    }

    std::pair<long, long> cell_of(std::size_t idx) const
    {
        const long side = 2 * half_extent_ + 1;
        const long l = static_cast<long>(idx) / side - half_extent_;
        const long m = static_cast<long>(idx) % side - half_extent_;
        return {l, m};
    }

    Eigen::Vector2d center_;
    double delta_;
    long half_extent_;
    RawFn raw_;
    std::size_t cells_;
    double total_raw_;
    std::vector<double> weights_;
    std::vector<double> cumulative_;
};

/// Grid over one state's Wigner density, centered at its mean. Raw cell
/// values are density at the cell center times delta^2; values that come
/// back negative within the oracle tolerance are clamped to zero before the
/// normalization pass.
inline GridDistribution build_state_grid(const WignerEvaluator &w,
                                         const DiscretizationParams &params,
                                         std::size_t cells_cap = (std::size_t{1} << 26))
{
    const Eigen::Vector2d center = w.mean();
    const double delta = params.delta;
    return GridDistribution(
        center, delta, params.half_extent,
        [w, center, delta](long l, long m) {
            const double v = w.value(center(0) + l * delta, center(1) + m * delta);
            return v > 0.0 ? v * delta * delta : 0.0;
        },
        cells_cap);
}

/// Translation-invariant grid over one mode's outcome offsets, centered at 0.
inline GridDistribution build_measurement_grid(const GaussianMeasurementSpec &meas, int mode,
                                               const DiscretizationParams &params,
                                               std::size_t cells_cap = (std::size_t{1} << 26))
{
    const Eigen::Matrix2d inv = meas.mode_cov_inverse(mode);
    const double delta = params.delta;
    return GridDistribution(
        Eigen::Vector2d::Zero(), delta, params.half_extent,
        [inv, delta](long l, long m) {
            const Eigen::Vector2d d(delta * l, delta * m);
            return std::exp(-d.dot(inv * d)) * delta * delta;
        },
        cells_cap);
}

/// Chebyshev tail bound for the mass of one mode outside its truncation
/// square: 4 (V_11 + V_22) / |A|.
inline double chebyshev_tail_bound(const Eigen::Matrix2d &cov, double area)
{
    return 4.0 * (cov(0, 0) + cov(1, 1)) / area;
}

/// Upper bound on a state's actual mass outside the centered square of side
/// sqrt_area. Gaussian states use exact axis tails in the eigenbasis of the
/// inscribed circle; photon-added thermal states use the closed-form radial
/// tail outside the inscribed circle.
inline double out_of_region_mass(const WignerEvaluator &w, double sqrt_area)
{
    const double half = 0.5 * sqrt_area;
    if (const auto *g = w.as_gaussian()) {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(g->covariance());
        // outside the square => outside the inscribed circle of radius half
        // => one eigen-axis coordinate exceeds half / sqrt(2).
        const double r = half / std::sqrt(2.0);
        double mass = 0.0;
        for (int i = 0; i < 2; ++i) {
            const double sigma = std::sqrt(es.eigenvalues()(i));
            mass += std::erfc(r / (sigma * std::sqrt(2.0)));
        }
        return mass;
    }
    const SpatsSpec &s = *w.as_spats();
    const double scale = 1.0 + 2.0 * s.nbar * s.efficiency;
    const double a = 1.0 + 2.0 * s.efficiency * (s.nbar - 2.0 * s.nbar * s.efficiency - 1.0);
    const double b = 4.0 * s.efficiency * (s.nbar + 1.0);
    const double c = (2.0 / M_PI) / (scale * scale * scale);
    const double alpha = 2.0 / scale;
    // 2 pi Integral_{r>half} (a + b r^2) e^{-alpha r^2} r dr, closed form.
    const double e = std::exp(-alpha * half * half);
    const double i1 = e / (2.0 * alpha);
    const double i3 = e * (half * half / (2.0 * alpha) + 1.0 / (2.0 * alpha * alpha));
    return 2.0 * M_PI * c * (a * i1 + b * i3);
}

} // namespace wigsim
