// SPDX-License-Identifier: Apache-2.0
//
// onebit - channel estimation for massive MIMO with one-bit ADCs
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

// Standard normal pdf/cdf and the tail-safe quantities built on them.
//
// Everything that touches the Gaussian CDF in this library (likelihood,
// gradient, Hessian, Fisher weights, detector metric) goes through these
// functions. Below x = -kTailCut the CDF is never formed: the inverse Mills
// ratio phi(x)/Phi(x) = t + c(t), t = -x, is evaluated with the continued
// fraction
//
//     c(t) = 1 / (t + 2 / (t + 3 / (t + 4 / ...)))
//
// which also yields x + phi(x)/Phi(x) = c(t) without cancellation.

#include <algorithm>
#include <cmath>
#include <numbers>

namespace onebit::normal
{

inline constexpr double kTailCut = 6.0;
inline constexpr int kFractionDepth = 40;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;

inline double pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

inline double log_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

inline double cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Phi(x) clamped to [eps, 1 - eps]; 1 - eps rounds to 1 for tiny eps, so the
// upper end is at most the largest double below 1.
inline double cdf_clamped(double x, double eps = 1e-300)
{
    return std::clamp(cdf(x), eps, std::min(1.0 - eps, std::nextafter(1.0, 0.0)));
}

namespace detail
{

// c(t) for t >= kTailCut, evaluated bottom-up.
inline double tail_fraction(double t)
{
    double tail = t;
    for (int k = kFractionDepth; k >= 2; --k) {
        tail = t + k / tail;
    }
    return 1.0 / tail;
}

} // namespace detail

// log Phi(x), finite for every finite x.
inline double log_cdf(double x)
{
    if (x >= 0.0) {
        return std::log1p(-0.5 * std::erfc(x / std::numbers::sqrt2));
    }
    if (x >= -kTailCut) {
        return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
    }
    const double t = -x;
    return log_pdf(t) - std::log(t + detail::tail_fraction(t));
}

// Inverse Mills ratio phi(x)/Phi(x).
inline double mills(double x)
{
    if (x >= -kTailCut) {
        return pdf(x) / cdf(x);
    }
    const double t = -x;
    return t + detail::tail_fraction(t);
}

// x + phi(x)/Phi(x), always positive. Equals -d^2/dx^2 log Phi(x) / mills(x).
inline double mills_excess(double x)
{
    if (x >= -kTailCut) {
        return x + mills(x);
    }
    return detail::tail_fraction(-x);
}

// Derivatives of l(x) = log Phi(s * x) for a sign s in {-1, +1}.
struct LogCdfDerivatives
{
    double value;
    double first;
    double second;
};

inline LogCdfDerivatives signed_log_cdf(double x, int sign)
{
    const double sx = sign * x;
    const double m = mills(sx);
    return {log_cdf(sx), sign * m, -m * mills_excess(sx)};
}

// phi(x)^2 / (Phi(x) (1 - Phi(x))) written as mills(x) * mills(-x).
inline double fisher_weight(double x) { return mills(x) * mills(-x); }

} // namespace onebit::normal
