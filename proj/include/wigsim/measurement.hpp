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
#include <vector>

#include "wigsim/errors.hpp"
#include "wigsim/phase_space.hpp"
#include "wigsim/states.hpp"

namespace wigsim {

/// Separable Gaussian measurement, one 2x2 covariance V_j per mode.
///
/// The conditional outcome density per mode is
///
///   M_j(k | u) = (1 / X_j) exp(-(k - u)^T V_j^{-1} (k - u)),  X_j = pi sqrt(det V_j),
///
/// i.e. the exponent carries no 1/2 factor, so the outcome scatter of a
/// declared covariance V is a normal with covariance V/2 (see
/// physical_outcome_cov). Homodyne-style rank-deficient covariances are
/// excluded by an eigenvalue floor of 1e-6.
class GaussianMeasurementSpec {
  public:
    explicit GaussianMeasurementSpec(std::vector<Eigen::Matrix2d> mode_covariances)
        : covs_(std::move(mode_covariances))
    {
        if (covs_.empty()) {
            throw std::invalid_argument("GaussianMeasurementSpec: at least one mode required");
        }
        invs_.reserve(covs_.size());
        norms_.reserve(covs_.size());
        for (const auto &v : covs_) {
            if (!v.allFinite() || std::abs(v(0, 1) - v(1, 0)) > 1e-12) {
                throw std::invalid_argument(
                    "GaussianMeasurementSpec: covariances must be finite and symmetric");
            }
            Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(v);
            if (es.eigenvalues().minCoeff() < 1e-6) {
                throw std::invalid_argument(
                    "GaussianMeasurementSpec: covariance eigenvalues must be >= 1e-6");
            }
            invs_.push_back(v.inverse());
            norms_.push_back(M_PI * std::sqrt(v.determinant()));
        }
    }

    /// Coherent-state (heterodyne) measurement: V = diag(1/2, 1/2), whose
    /// outcome scatter V/2 = diag(1/4, 1/4) matches the vacuum variance.
    static GaussianMeasurementSpec heterodyne(int modes)
    {
        return GaussianMeasurementSpec(std::vector<Eigen::Matrix2d>(
            static_cast<std::size_t>(modes), 0.5 * Eigen::Matrix2d::Identity()));
    }

    int modes() const { return static_cast<int>(covs_.size()); }
    const Eigen::Matrix2d &mode_cov(int j) const { return covs_.at(j); }
    const Eigen::Matrix2d &mode_cov_inverse(int j) const { return invs_.at(j); }
    /// Normalization X_j = pi sqrt(det V_j).
    double mode_norm(int j) const { return norms_.at(j); }
    /// Covariance of the outcome scatter around the trajectory, V_j / 2.
    Eigen::Matrix2d physical_outcome_cov(int j) const { return 0.5 * covs_.at(j); }

  private:
    std::vector<Eigen::Matrix2d> covs_;
    std::vector<Eigen::Matrix2d> invs_;
    std::vector<double> norms_;
};

/// One mode's conditional density at outcome (kq, kp) given trajectory (uq, up).
inline double mode_conditional_density(const GaussianMeasurementSpec &spec, int j, double kq,
                                       double kp, double uq, double up)
{
    const Eigen::Vector2d d(kq - uq, kp - up);
    return std::exp(-d.dot(spec.mode_cov_inverse(j) * d)) / spec.mode_norm(j);
}

/// Product over modes of the per-mode conditional densities.
inline double conditional_density(const GaussianMeasurementSpec &spec, const PhasePoint &k,
                                  const PhasePoint &u)
{
    if (spec.modes() != k.modes() || spec.modes() != u.modes()) {
        throw std::invalid_argument("conditional_density: mode counts disagree");
    }
    double density = 1.0;
    for (int j = 0; j < spec.modes(); ++j) {
        density *= mode_conditional_density(spec, j, k.q(j), k.p(j), u.q(j), u.p(j));
    }
    return density;
}

/// Peak of one mode's conditional density, 1 / X_j.
inline double mode_conditional_peak(const GaussianMeasurementSpec &spec, int j)
{
    return 1.0 / spec.mode_norm(j);
}

/// Exact sup over (k, u) of |grad_k M_j|; the density in k is a normal with
/// covariance V_j / 2.
inline double mode_conditional_sup_gradient(const GaussianMeasurementSpec &spec, int j)
{
    return gaussian_sup_gradient(spec.physical_outcome_cov(j));
}

struct BornQuadratureOptions {
    int panels = 8;
    int order = 16;
    /// Half-width of the per-mode integration box in units of the state's
    /// largest standard deviation.
    double sigma_multiple = 8.5;
};

/// Outcome probability density p(k) = Integral W(u) M(k | T u + x) du by
/// tensor-grid quadrature over the trajectory variable. Supported for one or
/// two modes; larger systems have no affordable brute-force density here.
inline double born_probability_density(const std::vector<WignerEvaluator> &states,
                                       const AffineSymplecticMap &map,
                                       const GaussianMeasurementSpec &spec, const PhasePoint &k,
                                       const BornQuadratureOptions &opts = {})
{
    const int n = static_cast<int>(states.size());
    if (n < 1 || n > 2) {
        throw oracle_unavailable_error(
            "born_probability_density: quadrature supported for 1 or 2 modes only");
    }
    if (map.modes() != n || spec.modes() != n || k.modes() != n) {
        throw std::invalid_argument("born_probability_density: mode counts disagree");
    }
    std::vector<std::vector<std::pair<double, double>>> axes;
    for (int j = 0; j < n; ++j) {
        const Eigen::Vector2d mu = states[j].mean();
        const Eigen::Matrix2d v = states[j].covariance();
        const double half = opts.sigma_multiple * std::sqrt(std::max(v(0, 0), v(1, 1)));
        axes.push_back(
            quad::composite_nodes(mu(0) - half, mu(0) + half, opts.panels, opts.order));
        axes.push_back(
            quad::composite_nodes(mu(1) - half, mu(1) + half, opts.panels, opts.order));
    }
    const Eigen::MatrixXd &t = map.matrix();
    const Eigen::VectorXd &x = map.shift();
    Eigen::VectorXd u(2 * n);
    double total = 0.0;
    const auto body = [&](double weight) {
        const Eigen::VectorXd ut = t * u + x;
        double f = weight;
        for (int j = 0; j < n; ++j) {
            f *= states[j].value(u(2 * j), u(2 * j + 1));
            f *= mode_conditional_density(spec, j, k.q(j), k.p(j), ut(2 * j), ut(2 * j + 1));
        }
        total += f;
    };
    if (n == 1) {
        for (const auto &[q0, w0] : axes[0]) {
            u(0) = q0;
            for (const auto &[p0, w1] : axes[1]) {
                u(1) = p0;
                body(w0 * w1);
            }
        }
    } else {
        for (const auto &[q0, w0] : axes[0]) {
            u(0) = q0;
            for (const auto &[p0, w1] : axes[1]) {
                u(1) = p0;
                for (const auto &[q1, w2] : axes[2]) {
                    u(2) = q1;
                    for (const auto &[p1, w3] : axes[3]) {
                        u(3) = p1;
                        body(w0 * w1 * w2 * w3);
                    }
                }
            }
        }
    }
    return total;
}

} // namespace wigsim
