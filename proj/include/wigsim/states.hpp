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
#include <cmath>
#include <stdexcept>
#include <utility>
#include <variant>

#include "wigsim/errors.hpp"
#include "wigsim/phase_space.hpp"
#include "wigsim/quadrature.hpp"

namespace wigsim {

/// Single-mode Gaussian state: mean (q, p) and a symmetric positive-definite
/// 2x2 covariance with det V >= 1/16 (the uncertainty bound in units where
/// the vacuum covariance is diag(1/4, 1/4)).
class GaussianStateSpec {
  public:
    GaussianStateSpec(Eigen::Vector2d mean, Eigen::Matrix2d covariance)
        : mean_(std::move(mean)), cov_(std::move(covariance))
    {
        if (!mean_.allFinite() || !cov_.allFinite()) {
            throw std::invalid_argument("GaussianStateSpec: entries must be finite");
        }
        if (std::abs(cov_(0, 1) - cov_(1, 0)) > 1e-12) {
            throw std::invalid_argument("GaussianStateSpec: covariance must be symmetric");
        }
        det_ = cov_.determinant();
        if (cov_(0, 0) <= 0.0 || det_ <= 0.0) {
            throw std::invalid_argument("GaussianStateSpec: covariance must be positive-definite");
        }
        if (det_ < 1.0 / 16.0 - 1e-12) {
            throw std::invalid_argument("GaussianStateSpec: det V >= 1/16 required");
        }
        inv_ = cov_.inverse();
    }

    static GaussianStateSpec vacuum()
    {
        return GaussianStateSpec(Eigen::Vector2d::Zero(),
                                 kVacuumVariance * Eigen::Matrix2d::Identity());
    }

    static GaussianStateSpec coherent(double q, double p)
    {
        return GaussianStateSpec(Eigen::Vector2d(q, p),
                                 kVacuumVariance * Eigen::Matrix2d::Identity());
    }

    /// Thermal state with mean photon number nbar: variance (2*nbar + 1)/4.
    static GaussianStateSpec thermal(double nbar)
    {
        if (nbar < 0.0) {
            throw std::invalid_argument("thermal: nbar must be >= 0");
        }
        return GaussianStateSpec(Eigen::Vector2d::Zero(),
                                 (2.0 * nbar + 1.0) * kVacuumVariance *
                                     Eigen::Matrix2d::Identity());
    }

    /// Squeezed vacuum displaced to (q, p): variances (e^{2r}/4, e^{-2r}/4).
    static GaussianStateSpec squeezed(double r, double q = 0.0, double p = 0.0)
    {
        Eigen::Matrix2d v = Eigen::Matrix2d::Zero();
        v(0, 0) = std::exp(2.0 * r) * kVacuumVariance;
        v(1, 1) = std::exp(-2.0 * r) * kVacuumVariance;
        return GaussianStateSpec(Eigen::Vector2d(q, p), v);
    }

    const Eigen::Vector2d &mean() const { return mean_; }
    const Eigen::Matrix2d &covariance() const { return cov_; }
    const Eigen::Matrix2d &covariance_inverse() const { return inv_; }
    double covariance_determinant() const { return det_; }

  private:
    Eigen::Vector2d mean_;
    Eigen::Matrix2d cov_;
    Eigen::Matrix2d inv_;
    double det_;
};

/// Single-photon-added thermal state seen through a loss channel of
/// transmittance `efficiency` (the quantum efficiency; loss rate is
/// 1 - efficiency). `nbar` is the mean photon number of the underlying
/// thermal state.
struct SpatsSpec {
    double nbar;
    double efficiency;

    SpatsSpec(double nbar_in, double efficiency_in) : nbar(nbar_in), efficiency(efficiency_in)
    {
        if (!(nbar >= 0.0) || !std::isfinite(nbar)) {
            throw std::invalid_argument("SpatsSpec: nbar must be >= 0");
        }
        if (!(efficiency >= 0.0) || !(efficiency <= 1.0)) {
            throw std::invalid_argument("SpatsSpec: efficiency must be in [0, 1]");
        }
    }
};

/// Density of a single-mode Gaussian Wigner function at (q, p).
inline double gaussian_wigner(const GaussianStateSpec &spec, double q, double p)
{
    const Eigen::Vector2d d(q - spec.mean()(0), p - spec.mean()(1));
    const double quad = d.dot(spec.covariance_inverse() * d);
    return std::exp(-0.5 * quad) / (2.0 * M_PI * std::sqrt(spec.covariance_determinant()));
}

/// Wigner function of the lossy photon-added thermal state,
///
///   W(q, p) = (2/pi) [1 + 2 eta (nbar + 2 (nbar+1) r^2 - 2 nbar eta - 1)]
///             / (1 + 2 nbar eta)^3 * exp(-2 r^2 / (1 + 2 nbar eta)),
///
/// with r^2 = q^2 + p^2. Negative for efficiency > 0.5; usable as a
/// diagnostic in that regime but not admitted as a sampling density.
inline double spats_wigner(const SpatsSpec &spec, double q, double p)
{
    const double r2 = q * q + p * p;
    const double scale = 1.0 + 2.0 * spec.nbar * spec.efficiency;
    const double numer =
        1.0 + 2.0 * spec.efficiency *
                  (spec.nbar + 2.0 * (spec.nbar + 1.0) * r2 - 2.0 * spec.nbar * spec.efficiency -
                   1.0);
    return (2.0 / M_PI) * numer / (scale * scale * scale) * std::exp(-2.0 * r2 / scale);
}

/// Most negative point of the state's Wigner function,
/// W(0,0) = (2/pi) (1 + 2 eta (nbar - 2 nbar eta - 1)) / (1 + 2 nbar eta)^3.
/// Vanishes exactly at efficiency 0.5.
inline double spats_wigner_origin(const SpatsSpec &spec)
{
    const double scale = 1.0 + 2.0 * spec.nbar * spec.efficiency;
    const double numer =
        1.0 +
        2.0 * spec.efficiency * (spec.nbar - 2.0 * spec.nbar * spec.efficiency - 1.0);
    return (2.0 / M_PI) * numer / (scale * scale * scale);
}

/// Glauber P-function of the lossy photon-added thermal state,
///
///   P(q, p) = (1 / (pi nbar^3 eta)) [ (nbar+1) r^2 / eta - nbar ]
///             * exp(-r^2 / (nbar eta)).
///
/// Singular at nbar = 0 or efficiency = 0; negative at the origin for every
/// valid parameter choice, so the state never lies in the convex hull of
/// coherent states.
inline double spats_p_function(const SpatsSpec &spec, double q, double p)
{
    if (spec.nbar <= 0.0 || spec.efficiency <= 0.0) {
        throw std::domain_error("spats_p_function: requires nbar > 0 and efficiency > 0");
    }
    const double r2 = q * q + p * p;
    const double bracket = (spec.nbar + 1.0) * r2 / spec.efficiency - spec.nbar;
    const double prefactor = 1.0 / (M_PI * spec.nbar * spec.nbar * spec.nbar * spec.efficiency);
    return prefactor * bracket * std::exp(-r2 / (spec.nbar * spec.efficiency));
}

/// Husimi Q-function of the vacuum, (1/pi) exp(-(q^2 + p^2)).
inline double vacuum_q_function(double q, double p)
{
    return std::exp(-(q * q + p * p)) / M_PI;
}

/// Fidelity to the vacuum, F = (1 - eta) / (1 + nbar eta)^2.
inline double fidelity_to_vacuum(const SpatsSpec &spec)
{
    const double denom = 1.0 + spec.nbar * spec.efficiency;
    return (1.0 - spec.efficiency) / (denom * denom);
}

/// Cross-check of fidelity_to_vacuum as the overlap integral
/// pi * Integral P(q,p) Q(q,p) dq dp. Requires nbar > 0 and efficiency > 0.
inline double fidelity_to_vacuum_quadrature(const SpatsSpec &spec, int panels = 12,
                                            int order = 16)
{
    if (spec.nbar <= 0.0 || spec.efficiency <= 0.0) {
        throw std::domain_error("fidelity_to_vacuum_quadrature: requires nbar > 0, efficiency > 0");
    }
    // Integrand decays like exp(-alpha r^2); size the box to ~10 decay lengths.
    const double alpha = 1.0 + 1.0 / (spec.nbar * spec.efficiency);
    const double half = 10.0 / std::sqrt(alpha);
    const double overlap = quad::integrate_2d(
        [&](double q, double p) { return spats_p_function(spec, q, p) * vacuum_q_function(q, p); },
        -half, half, -half, half, panels, order);
    return M_PI * overlap;
}

/// True iff the state's Wigner function is nonnegative everywhere,
/// equivalently sign(1 - 2 * efficiency) >= 0.
inline bool is_positive_wigner(const SpatsSpec &spec) { return spec.efficiency <= 0.5; }

namespace detail {

inline Eigen::Matrix2d spats_covariance(const SpatsSpec &s)
{
    // Second moment of the radial closed form; isotropic.
    const double var = (1.0 + 2.0 * s.efficiency + 4.0 * s.nbar * s.efficiency) / 4.0;
    return var * Eigen::Matrix2d::Identity();
}

inline Eigen::Vector2d spats_gradient(const SpatsSpec &s, double q, double p)
{
    const double r2 = q * q + p * p;
    const double scale = 1.0 + 2.0 * s.nbar * s.efficiency;
    const double a =
        1.0 + 2.0 * s.efficiency * (s.nbar - 2.0 * s.nbar * s.efficiency - 1.0);
    const double b = 4.0 * s.efficiency * (s.nbar + 1.0);
    const double c = (2.0 / M_PI) / (scale * scale * scale);
    const double e = std::exp(-2.0 * r2 / scale);
    const double radial = 2.0 * c * e * (b - 2.0 * (a + b * r2) / scale);
    return Eigen::Vector2d(q * radial, p * radial);
}

inline Eigen::Vector2d gaussian_gradient(const GaussianStateSpec &s, double q, double p)
{
    const Eigen::Vector2d d(q - s.mean()(0), p - s.mean()(1));
    return -(s.covariance_inverse() * d) * gaussian_wigner(s, q, p);
}

} // namespace detail

/// Exact supremum of |grad W| for a Gaussian density with covariance V:
/// e^{-1/2} / (sqrt(lambda_min) * 2 pi sqrt(det V)).
inline double gaussian_sup_gradient(const Eigen::Matrix2d &cov)
{
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
    const double lmin = es.eigenvalues().minCoeff();
    return std::exp(-0.5) / (std::sqrt(lmin) * 2.0 * M_PI * std::sqrt(cov.determinant()));
}

/// Region and resolution of a tensor-grid quadrature pass.
struct QuadratureSpec {
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    double half_width = 6.0;
    int panels = 10;
    int order = 16;
};

/// An evaluatable single-mode Wigner density with nonnegative values.
/// Gaussian states are admitted unconditionally; photon-added thermal states
/// only up to efficiency 0.5 (beyond which the density turns negative).
/// Instances are immutable and safe to share across threads; the gradient
/// bound is a numeric maximum inflated by a 1.25 safety factor, precomputed
/// at construction.
class WignerEvaluator {
  public:
    enum class Kind { gaussian, spats };

    static WignerEvaluator gaussian(GaussianStateSpec spec)
    {
        return WignerEvaluator(Payload(std::move(spec)));
    }

    static WignerEvaluator spats(SpatsSpec spec)
    {
        if (spec.efficiency > 0.5) {
            throw std::invalid_argument(
                "WignerEvaluator: spats efficiency must be <= 0.5 for a nonnegative "
                "Wigner function; higher efficiencies are not classically samplable here");
        }
        return WignerEvaluator(Payload(std::move(spec)));
    }

    Kind kind() const
    {
        return std::holds_alternative<GaussianStateSpec>(payload_) ? Kind::gaussian : Kind::spats;
    }

    double value(double q, double p) const
    {
        if (const auto *g = std::get_if<GaussianStateSpec>(&payload_)) {
            return gaussian_wigner(*g, q, p);
        }
        return spats_wigner(std::get<SpatsSpec>(payload_), q, p);
    }

    Eigen::Vector2d gradient(double q, double p) const
    {
        if (const auto *g = std::get_if<GaussianStateSpec>(&payload_)) {
            return detail::gaussian_gradient(*g, q, p);
        }
        return detail::spats_gradient(std::get<SpatsSpec>(payload_), q, p);
    }

    Eigen::Vector2d mean() const
    {
        if (const auto *g = std::get_if<GaussianStateSpec>(&payload_)) {
            return g->mean();
        }
        return Eigen::Vector2d::Zero();
    }

    Eigen::Matrix2d covariance() const
    {
        if (const auto *g = std::get_if<GaussianStateSpec>(&payload_)) {
            return g->covariance();
        }
        return detail::spats_covariance(std::get<SpatsSpec>(payload_));
    }

    /// Declared upper bound on sup |grad W| (per mode).
    double sup_gradient() const { return sup_gradient_; }

    /// Declared upper bound on sup W (per mode).
    double sup_value() const { return sup_value_; }

    const GaussianStateSpec *as_gaussian() const
    {
        return std::get_if<GaussianStateSpec>(&payload_);
    }
    const SpatsSpec *as_spats() const { return std::get_if<SpatsSpec>(&payload_); }

  private:
    using Payload = std::variant<GaussianStateSpec, SpatsSpec>;

    explicit WignerEvaluator(Payload payload) : payload_(std::move(payload))
    {
        const auto [grad_max, value_max] = scan_maxima();
        sup_gradient_ = 1.25 * grad_max;
        sup_value_ = 1.25 * value_max;
    }

    // Dense scan with two zoom passes around the running argmax.
    std::pair<double, double> scan_maxima() const
    {
        const Eigen::Vector2d mu = mean();
        const Eigen::Matrix2d v = covariance();
        const double sigma = std::sqrt(std::max(v(0, 0), v(1, 1)));
        double grad_max = 0.0;
        double value_max = 0.0;
        double cx = mu(0), cy = mu(1);
        double half = 6.0 * sigma;
        int points = 401;
        for (int pass = 0; pass < 3; ++pass) {
            double best_x = cx, best_y = cy;
            const double step = 2.0 * half / (points - 1);
            for (int i = 0; i < points; ++i) {
                const double q = cx - half + i * step;
                for (int j = 0; j < points; ++j) {
                    const double p = cy - half + j * step;
                    const double g = gradient(q, p).norm();
                    if (g > grad_max) {
                        grad_max = g;
                        best_x = q;
                        best_y = p;
                    }
                    value_max = std::max(value_max, value(q, p));
                }
            }
            cx = best_x;
            cy = best_y;
            half = 2.5 * step;
            points = 101;
        }
        return {grad_max, value_max};
    }

    Payload payload_;
    double sup_gradient_ = 0.0;
    double sup_value_ = 0.0;
};

/// Tensor-grid moments of an evaluator over the given region. Throws
/// region_too_small_error when more than 1e-6 of the mass lies outside.
inline std::pair<Eigen::Vector2d, Eigen::Matrix2d> numeric_moments(const WignerEvaluator &w,
                                                                   const QuadratureSpec &grid)
{
    const auto xs = quad::composite_nodes(grid.center(0) - grid.half_width,
                                          grid.center(0) + grid.half_width, grid.panels,
                                          grid.order);
    const auto ys = quad::composite_nodes(grid.center(1) - grid.half_width,
                                          grid.center(1) + grid.half_width, grid.panels,
                                          grid.order);
    double mass = 0.0, mq = 0.0, mp = 0.0, mqq = 0.0, mqp = 0.0, mpp = 0.0;
    for (const auto &[q, wq] : xs) {
        for (const auto &[p, wp] : ys) {
            const double f = wq * wp * w.value(q, p);
            mass += f;
            mq += f * q;
            mp += f * p;
            mqq += f * q * q;
            mqp += f * q * p;
            mpp += f * p * p;
        }
    }
    if (mass < 1.0 - 1e-6) {
        throw region_too_small_error("numeric_moments: region misses more than 1e-6 of the mass");
    }
    Eigen::Vector2d mean(mq / mass, mp / mass);
    Eigen::Matrix2d cov;
    cov(0, 0) = mqq / mass - mean(0) * mean(0);
    cov(1, 1) = mpp / mass - mean(1) * mean(1);
    cov(0, 1) = cov(1, 0) = mqp / mass - mean(0) * mean(1);
    return {mean, cov};
}

} // namespace wigsim
