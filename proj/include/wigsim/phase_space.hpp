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
#include <string>

namespace wigsim {

/// Quadrature layout is interleaved: (q_1, p_1, q_2, p_2, ..., q_n, p_n),
/// so each mode occupies a contiguous 2x2 block of any mode-local operator.
/// Units are fixed so that the vacuum state has quadrature variance 1/4.
inline constexpr double kVacuumVariance = 0.25;

/// Admission tolerance for composed symplectic matrices.
inline constexpr double kSymplecticTol = 1e-9;

/// A point u in R^{2n} of phase space.
class PhasePoint {
  public:
    explicit PhasePoint(Eigen::VectorXd coords) : coords_(std::move(coords))
    {
        if (coords_.size() < 2 || coords_.size() % 2 != 0) {
            throw std::invalid_argument("PhasePoint: length must be a positive even number");
        }
        if (!coords_.allFinite()) {
            throw std::invalid_argument("PhasePoint: coordinates must be finite");
        }
    }

    static PhasePoint zero(int modes) { return PhasePoint(Eigen::VectorXd::Zero(2 * modes)); }

    int modes() const { return static_cast<int>(coords_.size() / 2); }
    double q(int mode) const { return coords_(2 * mode); }
    double p(int mode) const { return coords_(2 * mode + 1); }
    const Eigen::VectorXd &coords() const { return coords_; }

  private:
    Eigen::VectorXd coords_;
};

/// Block-diagonal symplectic form, [[0, 1], [-1, 0]] per mode.
inline Eigen::MatrixXd symplectic_form(int modes)
{
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * modes, 2 * modes);
    for (int m = 0; m < modes; ++m) {
        j(2 * m, 2 * m + 1) = 1.0;
        j(2 * m + 1, 2 * m) = -1.0;
    }
    return j;
}

/// Max-norm of T^T J T - J; zero for exactly symplectic T.
inline double symplectic_defect(const Eigen::MatrixXd &t)
{
    const int modes = static_cast<int>(t.rows() / 2);
    const Eigen::MatrixXd j = symplectic_form(modes);
    return (t.transpose() * j * t - j).cwiseAbs().maxCoeff();
}

/// Largest singular value via power iteration on T^T T, converged to 1e-9
/// relative change of the Rayleigh quotient.
inline double spectral_norm(const Eigen::MatrixXd &t)
{
    const Eigen::MatrixXd b = t.transpose() * t;
    const int dim = static_cast<int>(b.rows());
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) {
        v(i) = 1.0 + 1e-3 * (i + 1); // deterministic, not orthogonal to any axis pair
    }
    v.normalize();
    double lambda = v.dot(b * v);
    for (int iter = 0; iter < 100000; ++iter) {
        Eigen::VectorXd w = b * v;
        const double norm = w.norm();
        if (norm == 0.0) {
            return 0.0;
        }
        v = w / norm;
        const double next = v.dot(b * v);
        if (std::abs(next - lambda) <= 1e-9 * std::abs(next)) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return std::sqrt(std::abs(lambda));
}

/// The affine phase-space action u -> T u + x of a linear optical circuit.
/// T must be symplectic within kSymplecticTol.
class AffineSymplecticMap {
  public:
    AffineSymplecticMap(Eigen::MatrixXd matrix, Eigen::VectorXd shift)
        : matrix_(std::move(matrix)), shift_(std::move(shift))
    {
        if (matrix_.rows() != matrix_.cols() || matrix_.rows() < 2 || matrix_.rows() % 2 != 0) {
            throw std::invalid_argument("AffineSymplecticMap: matrix must be 2n x 2n");
        }
        if (shift_.size() != matrix_.rows()) {
            throw std::invalid_argument("AffineSymplecticMap: shift length must match matrix");
        }
        if (!matrix_.allFinite() || !shift_.allFinite()) {
            throw std::invalid_argument("AffineSymplecticMap: entries must be finite");
        }
        if (symplectic_defect(matrix_) > kSymplecticTol) {
            throw std::invalid_argument("AffineSymplecticMap: matrix is not symplectic");
        }
        if (std::abs(std::abs(matrix_.determinant()) - 1.0) > kSymplecticTol) {
            throw std::invalid_argument("AffineSymplecticMap: |det T| must be 1");
        }
    }

    static AffineSymplecticMap identity(int modes)
    {
        return AffineSymplecticMap(Eigen::MatrixXd::Identity(2 * modes, 2 * modes),
                                   Eigen::VectorXd::Zero(2 * modes));
    }

    int modes() const { return static_cast<int>(matrix_.rows() / 2); }
    const Eigen::MatrixXd &matrix() const { return matrix_; }
    const Eigen::VectorXd &shift() const { return shift_; }

  private:
    Eigen::MatrixXd matrix_;
    Eigen::VectorXd shift_;
};

inline PhasePoint apply_affine(const AffineSymplecticMap &map, const PhasePoint &u)
{
    if (map.modes() != u.modes()) {
        throw std::invalid_argument("apply_affine: mode counts disagree");
    }
    return PhasePoint(map.matrix() * u.coords() + map.shift());
}

/// Composite map equal to `first` followed by `second`: (T2 T1, T2 x1 + x2).
inline AffineSymplecticMap compose(const AffineSymplecticMap &second,
                                   const AffineSymplecticMap &first)
{
    if (second.modes() != first.modes()) {
        throw std::invalid_argument("compose: mode counts disagree");
    }
    return AffineSymplecticMap(second.matrix() * first.matrix(),
                               second.matrix() * first.shift() + second.shift());
}

namespace detail {

inline void check_mode_index(int mode, int modes, const char *what)
{
    if (modes < 1) {
        throw std::invalid_argument(std::string(what) + ": mode count must be >= 1");
    }
    if (mode < 0 || mode >= modes) {
        throw std::invalid_argument(std::string(what) + ": mode index out of range");
    }
}

} // namespace detail

/// Clockwise rotation of one mode's (q, p) plane:
/// (q, p) -> (q cos(theta) + p sin(theta), -q sin(theta) + p cos(theta)).
inline AffineSymplecticMap phase_shifter(double theta, int mode, int modes)
{
    detail::check_mode_index(mode, modes, "phase_shifter");
    Eigen::MatrixXd t = Eigen::MatrixXd::Identity(2 * modes, 2 * modes);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    t(2 * mode, 2 * mode) = c;
    t(2 * mode, 2 * mode + 1) = s;
    t(2 * mode + 1, 2 * mode) = -s;
    t(2 * mode + 1, 2 * mode + 1) = c;
    return AffineSymplecticMap(std::move(t), Eigen::VectorXd::Zero(2 * modes));
}

/// Beam splitter mixing modes a and b: the (q_a, q_b) pair and the (p_a, p_b)
/// pair are each rotated by theta.
inline AffineSymplecticMap beam_splitter(double theta, int mode_a, int mode_b, int modes)
{
    detail::check_mode_index(mode_a, modes, "beam_splitter");
    detail::check_mode_index(mode_b, modes, "beam_splitter");
    if (mode_a == mode_b) {
        throw std::invalid_argument("beam_splitter: modes must be distinct");
    }
    Eigen::MatrixXd t = Eigen::MatrixXd::Identity(2 * modes, 2 * modes);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    for (int offset = 0; offset < 2; ++offset) { // q block then p block
        const int ia = 2 * mode_a + offset;
        const int ib = 2 * mode_b + offset;
        t(ia, ia) = c;
        t(ia, ib) = s;
        t(ib, ia) = -s;
        t(ib, ib) = c;
    }
    return AffineSymplecticMap(std::move(t), Eigen::VectorXd::Zero(2 * modes));
}

/// Single-mode squeezer (q, p) -> (e^r q, e^{-r} p).
inline AffineSymplecticMap squeezer(double r, int mode, int modes)
{
    detail::check_mode_index(mode, modes, "squeezer");
    Eigen::MatrixXd t = Eigen::MatrixXd::Identity(2 * modes, 2 * modes);
    t(2 * mode, 2 * mode) = std::exp(r);
    t(2 * mode + 1, 2 * mode + 1) = std::exp(-r);
    return AffineSymplecticMap(std::move(t), Eigen::VectorXd::Zero(2 * modes));
}

/// Displacement of one mode by (dq, dp).
inline AffineSymplecticMap displacement(double dq, double dp, int mode, int modes)
{
    detail::check_mode_index(mode, modes, "displacement");
    Eigen::VectorXd x = Eigen::VectorXd::Zero(2 * modes);
    x(2 * mode) = dq;
    x(2 * mode + 1) = dp;
    return AffineSymplecticMap(Eigen::MatrixXd::Identity(2 * modes, 2 * modes), std::move(x));
}

} // namespace wigsim
