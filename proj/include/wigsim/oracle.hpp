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
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "wigsim/discretization.hpp"
#include "wigsim/errors.hpp"
#include "wigsim/measurement.hpp"
#include "wigsim/phase_space.hpp"
#include "wigsim/quadrature.hpp"
#include "wigsim/sampler.hpp"
#include "wigsim/states.hpp"

namespace wigsim {

/// A probability table over outcome hypercubes of side gamma. Bin k (a 2n
/// integer index) covers the cube centered at origin + gamma * k. Mass known
/// to lie outside the tabulated region is kept in tail_mass, so a truncated
/// table still accounts for all probability.
struct DiscreteOutcomeDistribution {
    double gamma = 0.0;
    Eigen::VectorXd origin;
    std::map<std::vector<int>, double> bins;
    double tail_mass = 0.0;

    double total_mass() const
    {
        double s = tail_mass;
        for (const auto &[k, p] : bins) {
            s += p;
        }
        return s;
    }
};

/// Index ranges of the tabulated region, one inclusive [lo, hi] per axis.
struct BinRegion {
    std::vector<std::array<int, 2>> ranges;
};

struct OutputLaw {
    Eigen::VectorXd mean;       // T mu + x
    Eigen::MatrixXd covariance; // T V_rho T^T + V_M / 2
};

/// Moment propagation through the circuit and measurement; exact for the
/// mean and covariance of the outcome density of any product input.
inline OutputLaw moment_output_law(const std::vector<WignerEvaluator> &states,
                                   const AffineSymplecticMap &map,
                                   const GaussianMeasurementSpec &meas)
{
    const int n = static_cast<int>(states.size());
    if (map.modes() != n || meas.modes() != n) {
        throw std::invalid_argument("moment_output_law: mode counts disagree");
    }
    Eigen::VectorXd mu(2 * n);
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    Eigen::MatrixXd noise = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (int j = 0; j < n; ++j) {
        mu.segment<2>(2 * j) = states[j].mean();
        v.block<2, 2>(2 * j, 2 * j) = states[j].covariance();
        noise.block<2, 2>(2 * j, 2 * j) = meas.physical_outcome_cov(j);
    }
    OutputLaw law;
    law.mean = map.matrix() * mu + map.shift();
    law.covariance = map.matrix() * v * map.matrix().transpose() + noise;
    return law;
}

/// The exact Gaussian outcome law; all input states must be Gaussian.
inline OutputLaw gaussian_output_law(const std::vector<WignerEvaluator> &states,
                                     const AffineSymplecticMap &map,
                                     const GaussianMeasurementSpec &meas)
{
    for (const auto &w : states) {
        if (w.kind() != WignerEvaluator::Kind::gaussian) {
            throw oracle_unavailable_error(
                "gaussian_output_law: input contains a non-Gaussian state");
        }
    }
    return moment_output_law(states, map, meas);
}

/// Snap a point onto the gamma lattice (the conventional table origin).
inline Eigen::VectorXd lattice_origin(const Eigen::VectorXd &point, double gamma)
{
    Eigen::VectorXd origin(point.size());
    for (Eigen::Index i = 0; i < point.size(); ++i) {
        origin(i) = gamma * std::round(point(i) / gamma);
    }
    return origin;
}

/// Index box covering mean +- nsigma standard deviations on every axis.
inline BinRegion default_region(const OutputLaw &law, double gamma,
                                const Eigen::VectorXd &origin, double nsigma = 6.5)
{
    BinRegion region;
    for (Eigen::Index a = 0; a < law.mean.size(); ++a) {
        const double sigma = std::sqrt(law.covariance(a, a));
        const int center = static_cast<int>(std::llround((law.mean(a) - origin(a)) / gamma));
        const int half = static_cast<int>(std::ceil(nsigma * sigma / gamma)) + 1;
        region.ranges.push_back({center - half, center + half});
    }
    return region;
}

namespace detail {

template <class F>
void for_each_bin(const BinRegion &region, F &&f)
{
    std::vector<int> idx;
    idx.reserve(region.ranges.size());
    for (const auto &r : region.ranges) {
        idx.push_back(r[0]);
    }
    const std::size_t dims = region.ranges.size();
    while (true) {
        f(idx);
        std::size_t a = 0;
        while (a < dims) {
            if (++idx[a] <= region.ranges[a][1]) {
                break;
            }
            idx[a] = region.ranges[a][0];
            ++a;
        }
        if (a == dims) {
            break;
        }
    }
}

// Mass of a normal with mean mu, covariance sigma over an axis-aligned box.
// Diagonal covariances factor into erf differences; otherwise the first axis
// is integrated numerically against the conditional normal of the second.
inline double normal_box_mass_2d(const Eigen::Vector2d &mu, const Eigen::Matrix2d &sigma,
                                 double a1, double b1, double a2, double b2)
{
    const auto axis_mass = [](double mean, double var, double lo, double hi) {
        const double s = std::sqrt(2.0 * var);
        return 0.5 * (std::erf((hi - mean) / s) - std::erf((lo - mean) / s));
    };
    if (std::abs(sigma(0, 1)) < 1e-14 * std::sqrt(sigma(0, 0) * sigma(1, 1))) {
        return axis_mass(mu(0), sigma(0, 0), a1, b1) * axis_mass(mu(1), sigma(1, 1), a2, b2);
    }
    const double s11 = sigma(0, 0);
    const double slope = sigma(1, 0) / s11;
    const double cond_var = sigma(1, 1) - sigma(1, 0) * sigma(1, 0) / s11;
    double total = 0.0;
    for (const auto &[x, w] : quad::composite_nodes(a1, b1, 2, 8)) {
        const double marginal =
            std::exp(-0.5 * (x - mu(0)) * (x - mu(0)) / s11) / std::sqrt(2.0 * M_PI * s11);
        const double cond_mean = mu(1) + slope * (x - mu(0));
        total += w * marginal * axis_mass(cond_mean, cond_var, a2, b2);
    }
    return total;
}

} // namespace detail

/// Bin the exact Gaussian law over the region. Diagonal covariances use erf
/// products; correlated ones fall back to per-bin quadrature of the density.
inline DiscreteOutcomeDistribution binned_gaussian_distribution(const OutputLaw &law,
                                                                double gamma,
                                                                const Eigen::VectorXd &origin,
                                                                const BinRegion &region)
{
    const Eigen::Index dim = law.mean.size();
    if (origin.size() != dim || static_cast<Eigen::Index>(region.ranges.size()) != dim) {
        throw std::invalid_argument("binned_gaussian_distribution: dimensions disagree");
    }
    DiscreteOutcomeDistribution dist;
    dist.gamma = gamma;
    dist.origin = origin;

    double offdiag = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            if (i != j) {
                offdiag = std::max(offdiag, std::abs(law.covariance(i, j)));
            }
        }
    }
    const bool diagonal = offdiag < 1e-13;

    double total = 0.0;
    if (diagonal) {
        // Per-axis edge masses, combined as a tensor product.
        std::vector<std::vector<double>> axis_masses(static_cast<std::size_t>(dim));
        for (Eigen::Index a = 0; a < dim; ++a) {
            const auto &r = region.ranges[static_cast<std::size_t>(a)];
            const double s = std::sqrt(2.0 * law.covariance(a, a));
            std::vector<double> edges;
            for (int i = r[0]; i <= r[1] + 1; ++i) {
                const double e = origin(a) + gamma * (i - 0.5);
                edges.push_back(0.5 * std::erf((e - law.mean(a)) / s));
            }
            auto &masses = axis_masses[static_cast<std::size_t>(a)];
            masses.resize(edges.size() - 1);
            for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
                masses[i] = edges[i + 1] - edges[i];
            }
        }
        detail::for_each_bin(region, [&](const std::vector<int> &idx) {
            double p = 1.0;
            for (std::size_t a = 0; a < idx.size(); ++a) {
                p *= axis_masses[a][static_cast<std::size_t>(idx[a] - region.ranges[a][0])];
            }
            if (p > 0.0) {
                dist.bins[idx] = p;
                total += p;
            }
        });
    } else {
        if (dim != 2) {
            throw oracle_unavailable_error(
                "binned_gaussian_distribution: correlated laws supported for one mode only");
        }
        const Eigen::Vector2d mu = law.mean;
        const Eigen::Matrix2d sigma = law.covariance;
        detail::for_each_bin(region, [&](const std::vector<int> &idx) {
            const double c1 = origin(0) + gamma * idx[0];
            const double c2 = origin(1) + gamma * idx[1];
            const double p = detail::normal_box_mass_2d(mu, sigma, c1 - 0.5 * gamma,
                                                        c1 + 0.5 * gamma, c2 - 0.5 * gamma,
                                                        c2 + 0.5 * gamma);
            if (p > 0.0) {
                dist.bins[idx] = p;
                total += p;
            }
        });
    }
    dist.tail_mass = std::max(0.0, 1.0 - total);
    return dist;
}

struct QuadratureOracleOptions {
    int initial_panels = 6;
    int order = 12;
    double sigma_multiple = 8.5; // per-mode half-width over state sigma
    double stability_tol = 1e-7; // per-bin refinement target
    int max_refinements = 4;
    double eval_cap = 1e9;
};

namespace detail {

// One full tensor-quadrature pass over the trajectory variable at the given
// panel count. The inner outcome integral over each bin is exact per mode
// (erf differences, or the conditional reduction for correlated V_M).
inline std::map<std::vector<int>, double>
quadrature_pass(const std::vector<WignerEvaluator> &states, const AffineSymplecticMap &map,
                const GaussianMeasurementSpec &meas, double gamma, const Eigen::VectorXd &origin,
                const BinRegion &region, int panels, int order, double sigma_multiple,
                double *evals)
{
    const int n = static_cast<int>(states.size());
    std::vector<std::vector<std::pair<double, double>>> axes;
    for (int j = 0; j < n; ++j) {
        const Eigen::Vector2d mu = states[j].mean();
        const Eigen::Matrix2d v = states[j].covariance();
        const double half = sigma_multiple * std::sqrt(std::max(v(0, 0), v(1, 1)));
        axes.push_back(quad::composite_nodes(mu(0) - half, mu(0) + half, panels, order));
        axes.push_back(quad::composite_nodes(mu(1) - half, mu(1) + half, panels, order));
    }

    std::vector<bool> mode_diagonal(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const Eigen::Matrix2d v = meas.mode_cov(j);
        mode_diagonal[static_cast<std::size_t>(j)] =
            std::abs(v(0, 1)) < 1e-14 * std::sqrt(v(0, 0) * v(1, 1));
    }

    const Eigen::MatrixXd &t = map.matrix();
    const Eigen::VectorXd &x = map.shift();

    std::map<std::vector<int>, double> acc;
    detail::for_each_bin(region, [&](const std::vector<int> &idx) { acc[idx] = 0.0; });

    // Per-mode bin masses at a fixed transformed point.
    std::vector<std::vector<double>> mode_mass(static_cast<std::size_t>(n));
    const auto fill_mode_masses = [&](int j, double uq, double up) {
        const auto &rq = region.ranges[static_cast<std::size_t>(2 * j)];
        const auto &rp = region.ranges[static_cast<std::size_t>(2 * j + 1)];
        const std::size_t nq = static_cast<std::size_t>(rq[1] - rq[0] + 1);
        const std::size_t np = static_cast<std::size_t>(rp[1] - rp[0] + 1);
        auto &masses = mode_mass[static_cast<std::size_t>(j)];
        masses.assign(nq * np, 0.0);
        if (mode_diagonal[static_cast<std::size_t>(j)]) {
            const Eigen::Matrix2d v = meas.mode_cov(j);
            std::vector<double> fq(nq + 1), fp(np + 1);
            for (std::size_t i = 0; i <= nq; ++i) {
                const double e = origin(2 * j) + gamma * (rq[0] + static_cast<int>(i) - 0.5);
                fq[i] = 0.5 * std::erf((e - uq) / std::sqrt(v(0, 0)));
            }
            for (std::size_t i = 0; i <= np; ++i) {
                const double e = origin(2 * j + 1) + gamma * (rp[0] + static_cast<int>(i) - 0.5);
                fp[i] = 0.5 * std::erf((e - up) / std::sqrt(v(1, 1)));
            }
            for (std::size_t a = 0; a < nq; ++a) {
                const double mq = fq[a + 1] - fq[a];
                for (std::size_t b = 0; b < np; ++b) {
                    masses[a * np + b] = mq * (fp[b + 1] - fp[b]);
                }
            }
        } else {
            const Eigen::Matrix2d sigma = meas.physical_outcome_cov(j);
            const Eigen::Vector2d mu(uq, up);
            for (std::size_t a = 0; a < nq; ++a) {
                const double c1 = origin(2 * j) + gamma * (rq[0] + static_cast<int>(a));
                for (std::size_t b = 0; b < np; ++b) {
                    const double c2 = origin(2 * j + 1) + gamma * (rp[0] + static_cast<int>(b));
                    masses[a * np + b] = detail::normal_box_mass_2d(
                        mu, sigma, c1 - 0.5 * gamma, c1 + 0.5 * gamma, c2 - 0.5 * gamma,
                        c2 + 0.5 * gamma);
                }
            }
        }
    };

    Eigen::VectorXd u(2 * n);
    const auto body = [&](double weight) {
        double wdensity = weight;
        for (int j = 0; j < n; ++j) {
            wdensity *= states[j].value(u(2 * j), u(2 * j + 1));
        }
        if (wdensity == 0.0) {
            return;
        }
        const Eigen::VectorXd ut = t * u + x;
        for (int j = 0; j < n; ++j) {
            fill_mode_masses(j, ut(2 * j), ut(2 * j + 1));
        }
        *evals += 1.0;
        if (n == 1) {
            const auto &rq = region.ranges[0];
            const auto &rp = region.ranges[1];
            const std::size_t np = static_cast<std::size_t>(rp[1] - rp[0] + 1);
            auto it = acc.begin();
            for (int i = rq[0]; i <= rq[1]; ++i) {
                for (int k = rp[0]; k <= rp[1]; ++k, ++it) {
                    it->second += wdensity *
                                  mode_mass[0][static_cast<std::size_t>(i - rq[0]) * np +
                                               static_cast<std::size_t>(k - rp[0])];
                }
            }
        } else {
            for (auto &[idx, value] : acc) {
                double p = wdensity;
                for (int j = 0; j < n; ++j) {
                    const auto &rq = region.ranges[static_cast<std::size_t>(2 * j)];
                    const auto &rp = region.ranges[static_cast<std::size_t>(2 * j + 1)];
                    const std::size_t np = static_cast<std::size_t>(rp[1] - rp[0] + 1);
                    p *= mode_mass[static_cast<std::size_t>(j)]
                                  [static_cast<std::size_t>(idx[2 * j] - rq[0]) * np +
                                   static_cast<std::size_t>(idx[2 * j + 1] - rp[0])];
                }
                value += p;
            }
        }
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
    return acc;
}

} // namespace detail

/// Brute-force outcome distribution: for every bin in the region, the Born
/// density integrated over the bin. The trajectory integral is refined
/// (panel doubling) until every bin is stable to `stability_tol`; the inner
/// outcome integrals are exact per mode. One or two modes only.
inline DiscreteOutcomeDistribution quadrature_outcome_distribution(
    const std::vector<WignerEvaluator> &states, const AffineSymplecticMap &map,
    const GaussianMeasurementSpec &meas, double gamma, const Eigen::VectorXd &origin,
    const BinRegion &region, const QuadratureOracleOptions &opts = {},
    double *achieved_stability = nullptr)
{
    const int n = static_cast<int>(states.size());
    if (n < 1 || n > 2) {
        throw oracle_unavailable_error(
            "quadrature_outcome_distribution: supported for 1 or 2 modes only");
    }
    if (map.modes() != n || meas.modes() != n ||
        static_cast<int>(region.ranges.size()) != 2 * n || origin.size() != 2 * n) {
        throw std::invalid_argument("quadrature_outcome_distribution: dimensions disagree");
    }

    double evals = 0.0;
    int panels = opts.initial_panels;
    auto coarse = detail::quadrature_pass(states, map, meas, gamma, origin, region, panels,
                                          opts.order, opts.sigma_multiple, &evals);
    for (int r = 0; r < opts.max_refinements; ++r) {
        panels *= 2;
        auto fine = detail::quadrature_pass(states, map, meas, gamma, origin, region, panels,
                                            opts.order, opts.sigma_multiple, &evals);
        double worst = 0.0;
        for (const auto &[idx, p] : fine) {
            worst = std::max(worst, std::abs(p - coarse.at(idx)));
        }
        coarse = std::move(fine);
        if (achieved_stability != nullptr) {
            *achieved_stability = worst;
        }
        if (worst <= opts.stability_tol) {
            DiscreteOutcomeDistribution dist;
            dist.gamma = gamma;
            dist.origin = origin;
            double total = 0.0;
            for (auto &[idx, p] : coarse) {
                if (p > 0.0) {
                    dist.bins[idx] = p;
                    total += p;
                }
            }
            dist.tail_mass = std::max(0.0, 1.0 - total);
            return dist;
        }
        if (evals > opts.eval_cap) {
            std::ostringstream os;
            os << "quadrature_outcome_distribution: not stable to " << opts.stability_tol
               << " after " << evals << " trajectory evaluations (last change " << worst << ")";
            throw accuracy_error(os.str());
        }
    }
    std::ostringstream os;
    os << "quadrature_outcome_distribution: refinement cap reached before stability target "
       << opts.stability_tol;
    throw accuracy_error(os.str());
}

/// Single-mode marginal of the outcome distribution by the same trajectory
/// quadrature: the other modes' outcome integrals are exactly one, so only
/// the chosen mode's bin masses enter. Region and origin are 2-dimensional.
inline DiscreteOutcomeDistribution quadrature_marginal_distribution(
    const std::vector<WignerEvaluator> &states, const AffineSymplecticMap &map,
    const GaussianMeasurementSpec &meas, int mode, double gamma, const Eigen::VectorXd &origin,
    const BinRegion &region, const QuadratureOracleOptions &opts = {},
    double *achieved_stability = nullptr)
{
    const int n = static_cast<int>(states.size());
    if (n < 1 || n > 2) {
        throw oracle_unavailable_error(
            "quadrature_marginal_distribution: supported for 1 or 2 modes only");
    }
    if (mode < 0 || mode >= n || region.ranges.size() != 2 || origin.size() != 2) {
        throw std::invalid_argument("quadrature_marginal_distribution: bad mode or region");
    }

    const auto pass = [&](int panels) {
        std::vector<std::vector<std::pair<double, double>>> axes;
        for (int j = 0; j < n; ++j) {
            const Eigen::Vector2d mu = states[j].mean();
            const Eigen::Matrix2d v = states[j].covariance();
            const double half = opts.sigma_multiple * std::sqrt(std::max(v(0, 0), v(1, 1)));
            axes.push_back(
                quad::composite_nodes(mu(0) - half, mu(0) + half, panels, opts.order));
            axes.push_back(
                quad::composite_nodes(mu(1) - half, mu(1) + half, panels, opts.order));
        }
        const auto &rq = region.ranges[0];
        const auto &rp = region.ranges[1];
        const std::size_t nq = static_cast<std::size_t>(rq[1] - rq[0] + 1);
        const std::size_t np = static_cast<std::size_t>(rp[1] - rp[0] + 1);
        std::vector<double> acc(nq * np, 0.0);
        const Eigen::Matrix2d v = meas.mode_cov(mode);
        const bool diagonal = std::abs(v(0, 1)) < 1e-14 * std::sqrt(v(0, 0) * v(1, 1));
        const Eigen::MatrixXd &t = map.matrix();
        const Eigen::VectorXd &x = map.shift();
        Eigen::VectorXd u(2 * n);
        std::vector<double> fq(nq + 1), fp(np + 1);
        const auto body = [&](double weight) {
            double wdensity = weight;
            for (int j = 0; j < n; ++j) {
                wdensity *= states[j].value(u(2 * j), u(2 * j + 1));
            }
            if (wdensity == 0.0) {
                return;
            }
            const Eigen::VectorXd ut = t * u + x;
            const double uq = ut(2 * mode);
            const double up = ut(2 * mode + 1);
            if (diagonal) {
                for (std::size_t i = 0; i <= nq; ++i) {
                    const double e = origin(0) + gamma * (rq[0] + static_cast<int>(i) - 0.5);
                    fq[i] = 0.5 * std::erf((e - uq) / std::sqrt(v(0, 0)));
                }
                for (std::size_t i = 0; i <= np; ++i) {
                    const double e = origin(1) + gamma * (rp[0] + static_cast<int>(i) - 0.5);
                    fp[i] = 0.5 * std::erf((e - up) / std::sqrt(v(1, 1)));
                }
                for (std::size_t a = 0; a < nq; ++a) {
                    const double mq = wdensity * (fq[a + 1] - fq[a]);
                    for (std::size_t b = 0; b < np; ++b) {
                        acc[a * np + b] += mq * (fp[b + 1] - fp[b]);
                    }
                }
            } else {
                const Eigen::Matrix2d sigma = meas.physical_outcome_cov(mode);
                const Eigen::Vector2d center(uq, up);
                for (std::size_t a = 0; a < nq; ++a) {
                    const double c1 = origin(0) + gamma * (rq[0] + static_cast<int>(a));
                    for (std::size_t b = 0; b < np; ++b) {
                        const double c2 = origin(1) + gamma * (rp[0] + static_cast<int>(b));
                        acc[a * np + b] += wdensity * detail::normal_box_mass_2d(
                                                          center, sigma, c1 - 0.5 * gamma,
                                                          c1 + 0.5 * gamma, c2 - 0.5 * gamma,
                                                          c2 + 0.5 * gamma);
                    }
                }
            }
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
        return acc;
    };

    int panels = opts.initial_panels;
    auto coarse = pass(panels);
    for (int r = 0; r < opts.max_refinements; ++r) {
        panels *= 2;
        auto fine = pass(panels);
        double worst = 0.0;
        for (std::size_t i = 0; i < fine.size(); ++i) {
            worst = std::max(worst, std::abs(fine[i] - coarse[i]));
        }
        coarse = std::move(fine);
        if (achieved_stability != nullptr) {
            *achieved_stability = worst;
        }
        if (worst <= opts.stability_tol) {
            DiscreteOutcomeDistribution dist;
            dist.gamma = gamma;
            dist.origin = origin;
            const auto &rq = region.ranges[0];
            const auto &rp = region.ranges[1];
            const std::size_t np = static_cast<std::size_t>(rp[1] - rp[0] + 1);
            double total = 0.0;
            for (int i = rq[0]; i <= rq[1]; ++i) {
                for (int k = rp[0]; k <= rp[1]; ++k) {
                    const double p = coarse[static_cast<std::size_t>(i - rq[0]) * np +
                                            static_cast<std::size_t>(k - rp[0])];
                    if (p > 0.0) {
                        dist.bins[{i, k}] = p;
                        total += p;
                    }
                }
            }
            dist.tail_mass = std::max(0.0, 1.0 - total);
            return dist;
        }
    }
    throw accuracy_error("quadrature_marginal_distribution: refinement cap reached before "
                         "stability target");
}

/// Empirical bin frequencies of an outcome stream; outcomes outside the
/// region land in the tail.
inline DiscreteOutcomeDistribution histogram(const std::vector<TrajectoryOutcome> &outcomes,
                                             double gamma, const Eigen::VectorXd &origin,
                                             const BinRegion &region)
{
    if (outcomes.empty()) {
        throw std::invalid_argument("histogram: no outcomes");
    }
    const Eigen::Index dim = origin.size();
    if (static_cast<Eigen::Index>(region.ranges.size()) != dim) {
        throw std::invalid_argument("histogram: region dimension disagrees with origin");
    }
    DiscreteOutcomeDistribution dist;
    dist.gamma = gamma;
    dist.origin = origin;
    const double weight = 1.0 / static_cast<double>(outcomes.size());
    std::vector<int> idx(static_cast<std::size_t>(dim));
    for (const auto &o : outcomes) {
        if (o.outcome.size() != dim) {
            throw std::invalid_argument("histogram: outcome dimension disagrees with origin");
        }
        bool inside = true;
        for (Eigen::Index a = 0; a < dim; ++a) {
            const long i = std::llround((o.outcome(a) - origin(a)) / gamma);
            const auto &r = region.ranges[static_cast<std::size_t>(a)];
            if (i < r[0] || i > r[1]) {
                inside = false;
                break;
            }
            idx[static_cast<std::size_t>(a)] = static_cast<int>(i);
        }
        if (inside) {
            dist.bins[idx] += weight;
        } else {
            dist.tail_mass += weight;
        }
    }
    return dist;
}

struct Divergence {
    double one_norm = 0.0;
    double tv = 0.0;
    double worst_diff = 0.0;
    std::vector<int> worst_bin;
};

/// Sum of |a - b| over the union of bins plus the tail difference, reported
/// as (one_norm, one_norm / 2). Grids must share gamma and sit on the same
/// lattice; a whole-bin origin offset is reindexed away.
inline Divergence tv_distance(const DiscreteOutcomeDistribution &a,
                              const DiscreteOutcomeDistribution &b)
{
    if (std::abs(a.gamma - b.gamma) > 1e-12 * std::max(a.gamma, b.gamma)) {
        throw std::invalid_argument("tv_distance: bin sizes disagree");
    }
    if (a.origin.size() != b.origin.size()) {
        throw std::invalid_argument("tv_distance: dimensions disagree");
    }
    std::vector<int> shift(static_cast<std::size_t>(a.origin.size()));
    for (Eigen::Index i = 0; i < a.origin.size(); ++i) {
        const double t = (b.origin(i) - a.origin(i)) / a.gamma;
        const long k = std::llround(t);
        if (std::abs(t - k) > 1e-9) {
            throw std::invalid_argument("tv_distance: grids are not commensurate");
        }
        shift[static_cast<std::size_t>(i)] = static_cast<int>(k);
    }

    std::map<std::vector<int>, double> diff;
    for (const auto &[idx, p] : a.bins) {
        diff[idx] += p;
    }
    for (const auto &[idx, p] : b.bins) {
        std::vector<int> shifted(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            shifted[i] = idx[i] + shift[i];
        }
        diff[shifted] -= p;
    }

    Divergence d;
    for (const auto &[idx, delta] : diff) {
        const double mag = std::abs(delta);
        d.one_norm += mag;
        if (mag > d.worst_diff) {
            d.worst_diff = mag;
            d.worst_bin = idx;
        }
    }
    d.one_norm += std::abs(a.tail_mass - b.tail_mass);
    d.tv = 0.5 * d.one_norm;
    return d;
}

struct ComparisonReport {
    Divergence divergence;
    std::size_t occupied_bins = 0;
    long samples = 0;
    double epsilon = 0.0;
    double allowance = 0.0; // 2 sqrt(B / N)
    double threshold = 0.0; // epsilon + allowance
    bool pass = false;
};

/// Accept when the empirical-vs-oracle 1-norm stays within epsilon plus the
/// multinomial sampling allowance 2 sqrt(B / N).
inline ComparisonReport compare_with_oracle(const DiscreteOutcomeDistribution &empirical,
                                            const DiscreteOutcomeDistribution &oracle,
                                            double epsilon, long samples)
{
    ComparisonReport report;
    report.divergence = tv_distance(empirical, oracle);
    report.occupied_bins = empirical.bins.size();
    report.samples = samples;
    report.epsilon = epsilon;
    report.allowance =
        2.0 * std::sqrt(static_cast<double>(report.occupied_bins) / static_cast<double>(samples));
    report.threshold = epsilon + report.allowance;
    report.pass = report.divergence.one_norm <= report.threshold;
    return report;
}

} // namespace wigsim
