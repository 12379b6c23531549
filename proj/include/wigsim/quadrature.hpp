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

#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace wigsim::quad {

/// Nodes and weights of a quadrature rule on [-1, 1].
struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {

// Gauss-Legendre rule via Newton iteration on the Legendre recurrence.
inline Rule make_gauss_legendre(int order)
{
    if (order < 1) {
        throw std::invalid_argument("gauss_legendre: order must be >= 1");
    }
    Rule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const int half = (order + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Tricomi initial guess for the i-th root (descending from +1).
        double x = std::cos(M_PI * (i + 0.75) / (order + 0.5));
        double p1 = 0.0, pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            if (order == 1) {
                p1 = x;
                p0 = 1.0;
            }
            pp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) {
                break;
            }
        }
        // One clean evaluation at the converged root for the weight.
        double p0 = 1.0;
        p1 = x;
        for (int k = 2; k <= order; ++k) {
            const double pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = pk;
        }
        pp = order * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.nodes[i] = -x;
        rule.nodes[order - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[order - 1 - i] = w;
    }
    if (order == 1) {
        rule.nodes[0] = 0.0;
        rule.weights[0] = 2.0;
    }
    return rule;
}

} // namespace detail

/// Cached Gauss-Legendre rule of the given order on [-1, 1].
inline const Rule &gauss_legendre(int order)
{
    static std::map<int, Rule> cache;
    static std::mutex guard;
    std::lock_guard<std::mutex> lock(guard);
    auto it = cache.find(order);
    if (it == cache.end()) {
        it = cache.emplace(order, detail::make_gauss_legendre(order)).first;
    }
    return it->second;
}

/// Composite Gauss-Legendre abscissae over [a, b]: `panels` equal panels,
/// `order` nodes each, returned as (node, weight) pairs in ascending order.
inline std::vector<std::pair<double, double>> composite_nodes(double a, double b, int panels,
                                                              int order)
{
    if (panels < 1) {
        throw std::invalid_argument("composite_nodes: panels must be >= 1");
    }
    if (!(b > a)) {
        throw std::invalid_argument("composite_nodes: empty interval");
    }
    const Rule &rule = gauss_legendre(order);
    const double h = (b - a) / panels;
    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<std::size_t>(panels) * order);
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h;
        const double mid = lo + 0.5 * h;
        for (int k = 0; k < order; ++k) {
            out.emplace_back(mid + 0.5 * h * rule.nodes[k], 0.5 * h * rule.weights[k]);
        }
    }
    return out;
}

template <class F>
double integrate_1d(F &&f, double a, double b, int panels = 8, int order = 16)
{
    double total = 0.0;
    for (const auto &[x, w] : composite_nodes(a, b, panels, order)) {
        total += w * f(x);
    }
    return total;
}

/// Tensor-grid integral of f(x, y) over [ax, bx] x [ay, by].
template <class F>
double integrate_2d(F &&f, double ax, double bx, double ay, double by, int panels = 8,
                    int order = 16)
{
    const auto xs = composite_nodes(ax, bx, panels, order);
    const auto ys = composite_nodes(ay, by, panels, order);
    double total = 0.0;
    for (const auto &[x, wx] : xs) {
        double row = 0.0;
        for (const auto &[y, wy] : ys) {
            row += wy * f(x, y);
        }
        total += wx * row;
    }
    return total;
}

} // namespace wigsim::quad
