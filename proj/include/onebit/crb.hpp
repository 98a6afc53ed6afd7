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

// Fisher information and Cramer-Rao bounds for one-bit measurements.
//
//     J(h) = sum_n g(u_n) a_n a_n^T,   g(u) = f_w(u)^2 / (F_w(u) (1 - F_w(u)))
//
// with u_n = a_n^T h - tau_n. J is block diagonal with one 2K x 2K block per
// antenna, J_m = A~^T diag(g_m) A~, so the CRB is inverted block by block.

#include "onebit/errors.hpp"
#include "onebit/linalg.hpp"
#include "onebit/model.hpp"
#include "onebit/normal.hpp"
#include "onebit/quant.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

namespace onebit
{

// g(u) for noise variance sigma2. Peaks at u = 0 with value 2 / (pi sigma2).
inline double g_weight(double u, double sigma2)
{
    const double sigma = std::sqrt(sigma2);
    return normal::fisher_weight(u / sigma) / sigma2;
}

// Reciprocal of g for a common threshold offset delta: the factor by which
// the CRB scales relative to (A^T A)^{-1}.
inline double offset_penalty(double delta, double sigma2) { return 1.0 / g_weight(delta, sigma2); }

struct CrbReport
{
    std::vector<RealMatrix> fim_blocks;
    RealVector crb_diagonal; // empty when some block is not invertible
    double trace = std::numeric_limits<double>::infinity();
    double worst_condition = 0.0;
    std::size_t worst_block = 0;
    bool near_singular = false;
};

namespace detail
{

// Accumulates trace and diagonal of the inverse of one symmetric block.
inline double invert_block_into(const RealMatrix &block, Eigen::Ref<RealVector> diagonal, double &condition)
{
    const Eigen::SelfAdjointEigenSolver<RealMatrix> eig(block);
    condition = condition_number(eig);
    const RealVector inv = eig.eigenvalues().cwiseInverse();
    const RealMatrix &V = eig.eigenvectors();
    diagonal = V.cwiseAbs2() * inv;
    return inv.sum();
}

} // namespace detail

// FIM blocks and, where the blocks are invertible, the CRB trace and diagonal.
inline CrbReport fim(const RealModel &model, const ThresholdVector &tau, const RealVector &h)
{
    model.check_params(h);
    if (tau.size() != model.measurements()) {
        throw DimensionError("fim: threshold length must equal 2ML");
    }
    const RealMatrix &a = model.block();
    const Eigen::Index rows = model.rows_per_antenna();
    const Eigen::Index params = model.params_per_antenna();

    CrbReport report;
    report.fim_blocks.reserve(static_cast<std::size_t>(model.M()));
    report.crb_diagonal.resize(model.parameters());
    double trace = 0.0;
    RealVector weights(rows);
    for (int m = 0; m < model.M(); ++m) {
        const RealVector z = a * h.segment(m * params, params);
        for (Eigen::Index r = 0; r < rows; ++r) {
            weights[r] = g_weight(z[r] - tau.tau[m * rows + r], model.sigma2());
        }
        RealMatrix block = a.transpose() * weights.asDiagonal() * a;
        double cond = 0.0;
        trace += detail::invert_block_into(block, report.crb_diagonal.segment(m * params, params), cond);
        if (!(cond <= report.worst_condition)) {
            report.worst_condition = cond;
            report.worst_block = static_cast<std::size_t>(m);
        }
        report.fim_blocks.push_back(std::move(block));
    }
    report.near_singular = !(report.worst_condition <= kConditionLimit);
    if (report.near_singular) {
        report.crb_diagonal.resize(0);
    } else {
        report.trace = trace;
    }
    return report;
}

// tr(J^{-1}); throws when some block's condition number exceeds 1e12.
inline double crb_trace(const RealModel &model, const ThresholdVector &tau, const RealVector &h)
{
    const CrbReport report = fim(model, tau, h);
    if (report.near_singular) {
        throw NumericalError(report.worst_block, report.worst_condition,
                             "crb_trace: Fisher information block is ill-conditioned");
    }
    return report.trace;
}

// sigma2 tr((A^T A)^{-1}), the bound with unquantized observations.
inline double crb_nq_trace(const RealModel &model)
{
    const RealMatrix gram = model.block().transpose() * model.block();
    const Eigen::SelfAdjointEigenSolver<RealMatrix> eig(gram);
    const double cond = condition_number(eig);
    if (!(cond <= kConditionLimit)) {
        throw NumericalError(0, cond, "crb_nq_trace: A~^T A~ is singular");
    }
    return model.sigma2() * model.M() * eig.eigenvalues().cwiseInverse().sum();
}

// pi sigma2 M K^2 / P: the CRB trace with optimal thresholds and X X^H = (P/K) I.
inline double crb_optimal_design_trace(int M, int K, double P, double sigma2)
{
    return std::numbers::pi * sigma2 * M * static_cast<double>(K) * K / P;
}

// Half-CDF Phi(x) - 1/2 and its upper bound sqrt(1 - exp(-2x^2/pi)) / 2, x >= 0.
inline std::pair<double, double> gaussian_cdf_bound(double x)
{
    if (x < 0.0) {
        throw std::invalid_argument("gaussian_cdf_bound: x must be non-negative");
    }
    const double half_cdf = 0.5 * std::erf(x / std::numbers::sqrt2);
    const double bound = 0.5 * std::sqrt(-std::expm1(-2.0 * x * x / std::numbers::pi));
    return {half_cdf, bound};
}

// Unit-variance g(x) and its bound (2/pi) exp(-(1 - 2/pi) x^2).
inline std::pair<double, double> g_bar_bound(double x)
{
    const double two_over_pi = 2.0 / std::numbers::pi;
    return {normal::fisher_weight(x), two_over_pi * std::exp(-(1.0 - two_over_pi) * x * x)};
}

} // namespace onebit
