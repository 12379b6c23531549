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
#include <functional>

namespace testutil {

// Composite Simpson in 2D; deliberately not the library's quadrature engine.
inline double simpson_2d(const std::function<double(double, double)> &f, double ax, double bx,
                         double ay, double by, int cells = 400)
{
    const int n = cells % 2 == 0 ? cells : cells + 1;
    const double hx = (bx - ax) / n;
    const double hy = (by - ay) / n;
    auto coeff = [n](int i) { return i == 0 || i == n ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0); };
    double total = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double x = ax + i * hx;
        double row = 0.0;
        for (int j = 0; j <= n; ++j) {
            row += coeff(j) * f(x, ay + j * hy);
        }
        total += coeff(i) * row;
    }
    return total * hx * hy / 9.0;
}

inline double central_diff(const std::function<double(double)> &f, double x, double h = 1e-6)
{
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

} // namespace testutil
