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

// One-bit maximum-likelihood channel estimation.
//
// For measurement n with u_n = (a_n^T h - tau_n) / sigma and bit b_n the
// log-likelihood term is log Phi(b_n u_n), so
//
//     L(h)    = sum_n log Phi(b_n u_n)
//     dl/dz_n = b_n * mills(b_n u_n) / sigma
//     d2l/dz2 = -mills(b_n u_n) * (b_n u_n + mills(b_n u_n)) / sigma^2  (< 0)
//
// Because A = I_M (x) A~, the objective is a sum of M independent concave
// problems in the 2K-vectors h_m. All batches share A~, so per antenna the
// per-row weights of every batch are accumulated first and the Hessian block
// is A~^T diag(c) A~.

#include "onebit/errors.hpp"
#include "onebit/linalg.hpp"
#include "onebit/model.hpp"
#include "onebit/normal.hpp"
#include "onebit/quant.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace onebit
{

class LikelihoodProblem
{
public:
    explicit LikelihoodProblem(RealModel model, double prob_floor = 1e-300)
        : model_(std::move(model)), prob_floor_(prob_floor)
    {
    }

    LikelihoodProblem(RealModel model, QuantizedBatch batch, double prob_floor = 1e-300)
        : LikelihoodProblem(std::move(model), prob_floor)
    {
        add_batch(std::move(batch));
    }

    void add_batch(QuantizedBatch batch)
    {
        if (batch.size() != model_.measurements() || batch.thresholds.size() != model_.measurements()) {
            throw DimensionError("LikelihoodProblem: batch length must equal 2ML");
        }
        batches_.push_back(std::move(batch));
    }

    const RealModel &model() const noexcept { return model_; }
    const std::vector<QuantizedBatch> &batches() const noexcept { return batches_; }
    double prob_floor() const noexcept { return prob_floor_; }

private:
    RealModel model_;
    std::vector<QuantizedBatch> batches_;
    double prob_floor_;
};

namespace detail
{

struct BlockTerms
{
    double value = 0.0;
    RealVector score;     // dl/dz per row of A~, summed over batches
    RealVector curvature; // d2l/dz2 per row of A~, summed over batches
};

inline BlockTerms block_terms(const LikelihoodProblem &prob, int antenna,
                              const Eigen::Ref<const RealVector> &h_block, bool derivatives)
{
    const RealModel &model = prob.model();
    const Eigen::Index rows = model.rows_per_antenna();
    const Eigen::Index offset = antenna * rows;
    const double sigma = model.sigma();
    const RealVector z = model.block() * h_block;

    BlockTerms t;
    if (derivatives) {
        t.score = RealVector::Zero(rows);
        t.curvature = RealVector::Zero(rows);
    }
    for (const QuantizedBatch &batch : prob.batches()) {
        const RealVector &tau = batch.thresholds.tau;
        for (Eigen::Index r = 0; r < rows; ++r) {
            const double u = (z[r] - tau[offset + r]) / sigma;
            const int b = batch.bits[static_cast<std::size_t>(offset + r)];
            if (!derivatives) {
                const double v = normal::log_cdf(b * u);
                t.value += std::isfinite(v) ? v : std::log(prob.prob_floor());
                continue;
            }
            const auto d = normal::signed_log_cdf(u, b);
            t.value += std::isfinite(d.value) ? d.value : std::log(prob.prob_floor());
            t.score[r] += d.first / sigma;
            t.curvature[r] += d.second / (sigma * sigma);
        }
    }
    return t;
}

inline auto block_of(const RealVector &v, const RealModel &model, int m)
{
    return v.segment(m * model.params_per_antenna(), model.params_per_antenna());
}

} // namespace detail

inline double log_likelihood(const LikelihoodProblem &prob, const RealVector &h)
{
    const RealModel &model = prob.model();
    model.check_params(h);
    double total = 0.0;
    for (int m = 0; m < model.M(); ++m) {
        total += detail::block_terms(prob, m, detail::block_of(h, model, m), false).value;
    }
    return total;
}

inline RealVector gradient(const LikelihoodProblem &prob, const RealVector &h)
{
    const RealModel &model = prob.model();
    model.check_params(h);
    RealVector g(model.parameters());
    for (int m = 0; m < model.M(); ++m) {
        const auto t = detail::block_terms(prob, m, detail::block_of(h, model, m), true);
        g.segment(m * model.params_per_antenna(), model.params_per_antenna()) =
            model.block().transpose() * t.score;
    }
    return g;
}

// (sum_n d2l/dz_n^2 a_n a_n^T) v without forming the Hessian.
inline RealVector hessian_action(const LikelihoodProblem &prob, const RealVector &h, const RealVector &v)
{
    const RealModel &model = prob.model();
    model.check_params(h);
    model.check_params(v);
    RealVector out(model.parameters());
    for (int m = 0; m < model.M(); ++m) {
        const auto t = detail::block_terms(prob, m, detail::block_of(h, model, m), true);
        const RealVector av = model.block() * detail::block_of(v, model, m);
        out.segment(m * model.params_per_antenna(), model.params_per_antenna()) =
            model.block().transpose() * t.curvature.cwiseProduct(av);
    }
    return out;
}

struct SolverOptions
{
    int max_iter = 200;
    double grad_tol = 1e-6;        // on the per-antenna gradient 2-norm
    double decrement_tol = 1e-20;  // Newton decrement g^T H^{-1} g
    double relative_decrement_tol = 1e-14;
    double armijo = 1e-4;
    double shrink = 0.5;
    double step_cap = 1e3;         // max norm of one Newton step
    double curvature_floor = 1e-12; // relative to the nominal information scale
    // Radius of the norm-constrained ML used for blocks whose data have no
    // finite maximizer. 0 keeps the rolled-back iterate instead.
    double separable_norm = 0.0;
};

enum class SolveStatus {
    Converged,
    MaxIterations,
    Unbounded,   // recession direction or collapsed curvature: no finite maximizer
    Stalled,     // line search failed away from the optimum
};

struct BlockDiagnostics
{
    SolveStatus status = SolveStatus::Converged;
    int iterations = 0;
    double gradient_norm = 0.0;
};

struct ChannelEstimate
{
    RealVector h_hat;
    int iterations = 0; // worst antenna
    double gradient_norm = 0.0;
    bool converged = true;
    double objective = 0.0;
    std::vector<BlockDiagnostics> blocks;

    int unconverged_blocks() const
    {
        return static_cast<int>(std::count_if(blocks.begin(), blocks.end(), [](const BlockDiagnostics &b) {
            return b.status != SolveStatus::Converged;
        }));
    }
};

namespace detail
{

// True when L is non-decreasing along d from every point, i.e. b_n a_n^T d >= 0
// for every row of every batch. With A~ of full column rank this certifies
// that the maximizer does not exist.
inline bool is_recession_direction(const LikelihoodProblem &prob, int antenna, const RealVector &d)
{
    if (!(d.norm() > 0.0)) {
        return false;
    }
    const Eigen::Index rows = prob.model().rows_per_antenna();
    const RealVector z = prob.model().block() * d;
    const double tol = 1e-12 * z.cwiseAbs().maxCoeff();
    for (const QuantizedBatch &batch : prob.batches()) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            if (batch.bits[static_cast<std::size_t>(antenna * rows + r)] * z[r] < -tol) {
                return false;
            }
        }
    }
    return true;
}

// Some bit disagrees with sgn(a_n^T h - tau_n).
inline bool misfits_some_bit(const LikelihoodProblem &prob, int antenna, const RealVector &h)
{
    const Eigen::Index rows = prob.model().rows_per_antenna();
    const RealVector z = prob.model().block() * h;
    for (const QuantizedBatch &batch : prob.batches()) {
        for (Eigen::Index r = 0; r < rows; ++r) {
            const Eigen::Index n = antenna * rows + r;
            if (batch.bits[static_cast<std::size_t>(n)] * (z[r] - batch.thresholds.tau[n]) < 0.0) {
                return true;
            }
        }
    }
    return false;
}

// Damped Newton on one antenna block, maximizing L_m(h) - ridge/2 ||h||^2.
// Without a ridge, when the data admit a recession direction the iterate is
// rolled back to the last point of the ascent path that still misfit some
// bit (where the path enters the separable region) and the block is
// reported Unbounded.
inline BlockDiagnostics newton_block(const LikelihoodProblem &prob, int antenna, RealVector &h,
                                     const SolverOptions &opt, double nominal_curvature, double &objective,
                                     double ridge = 0.0)
{
    const RealMatrix &a = prob.model().block();
    BlockDiagnostics diag;
    diag.status = SolveStatus::MaxIterations;
    Eigen::SelfAdjointEigenSolver<RealMatrix> eig;
    RealVector boundary = h;
    double boundary_objective = -std::numeric_limits<double>::infinity();

    const auto penalized = [&](const RealVector &x) {
        return block_terms(prob, antenna, x, false).value - 0.5 * ridge * x.squaredNorm();
    };
    const auto unbounded = [&] {
        h = boundary;
        objective = std::isfinite(boundary_objective) ? boundary_objective : penalized(h);
        diag.status = SolveStatus::Unbounded;
        return diag;
    };

    for (int it = 0; it < opt.max_iter; ++it) {
        const BlockTerms t = block_terms(prob, antenna, h, true);
        const double value = t.value - 0.5 * ridge * h.squaredNorm();
        objective = value;
        if (ridge == 0.0 && misfits_some_bit(prob, antenna, h)) {
            boundary = h;
            boundary_objective = value;
        }
        const RealVector g = a.transpose() * t.score - ridge * h;
        RealMatrix info = a.transpose() * (-t.curvature).asDiagonal() * a;
        info.diagonal().array() += ridge;
        diag.iterations = it;
        diag.gradient_norm = g.norm();

        eig.compute(info);
        const RealVector &lambda = eig.eigenvalues();
        if (!(lambda.minCoeff() > opt.curvature_floor * nominal_curvature)) {
            return unbounded();
        }
        RealVector step = eig.eigenvectors() *
                          (eig.eigenvectors().transpose() * g).cwiseQuotient(lambda);
        const double decrement = g.dot(step);
        // Decrements below ~1e-14 |f| are roundoff in the objective itself.
        const double decrement_floor =
            std::max(opt.decrement_tol, opt.relative_decrement_tol * std::abs(value));
        if (diag.gradient_norm <= opt.grad_tol && decrement <= decrement_floor) {
            diag.status = SolveStatus::Converged;
            return diag;
        }
        if (ridge == 0.0 &&
            (is_recession_direction(prob, antenna, h) || is_recession_direction(prob, antenna, step))) {
            return unbounded();
        }

        const double step_norm = step.norm();
        if (step_norm > opt.step_cap) {
            step *= opt.step_cap / step_norm;
        }
        const double slope = g.dot(step);
        double s = 1.0;
        bool accepted = false;
        while (s > 1e-16) {
            const RealVector trial = h + s * step;
            const double f = penalized(trial);
            if (f >= value + opt.armijo * s * slope) {
                if ((trial - h).norm() <= 1e-15 * (1.0 + h.norm())) {
                    break; // no representable progress
                }
                h = trial;
                objective = f;
                accepted = true;
                break;
            }
            s *= opt.shrink;
        }
        if (!accepted) {
            // No representable ascent left: either roundoff-level optimum or stall.
            const bool at_optimum = decrement <= 1e-12 * std::max(1.0, std::abs(value));
            diag.status = at_optimum ? SolveStatus::Converged : SolveStatus::Stalled;
            return diag;
        }
    }
    diag.iterations = opt.max_iter;
    return diag;
}

// max L_m(h) subject to ||h|| <= radius, for a block whose unconstrained
// maximizer does not exist (so the constraint is active). The multiplier is
// found by bisection on log(ridge): ||h(ridge)|| decreases in ridge.
inline RealVector norm_constrained_block(const LikelihoodProblem &prob, int antenna, RealVector h,
                                         double radius, const SolverOptions &opt, double nominal_curvature)
{
    double objective = 0.0;
    const auto solve = [&](double ridge) {
        newton_block(prob, antenna, h, opt, nominal_curvature, objective, ridge);
        return h.norm();
    };
    double hi = nominal_curvature * 1e-3;
    int guard = 0;
    while (solve(hi) > radius && guard++ < 200) {
        hi *= 4.0;
    }
    double lo = hi;
    guard = 0;
    while (solve(lo) < radius && guard++ < 200) {
        lo *= 0.25;
    }
    RealVector best = h;
    for (int i = 0; i < 100 && hi / lo > 1.0 + 1e-12; ++i) {
        const double mid = std::sqrt(lo * hi);
        const double norm = solve(mid);
        best = h;
        if (std::abs(norm - radius) <= 1e-9 * radius) {
            break;
        }
        (norm > radius ? lo : hi) = mid;
    }
    return best;
}

} // namespace detail

// arg max L(h) by damped Newton, antenna by antenna.
inline ChannelEstimate solve_ml(const LikelihoodProblem &prob, const RealVector &h0,
                                const SolverOptions &opt = {})
{
    const RealModel &model = prob.model();
    model.check_params(h0);
    if (prob.batches().empty()) {
        throw DimensionError("solve_ml: no quantized data");
    }
    const RealMatrix &a = model.block();
    const double gram_max =
        Eigen::SelfAdjointEigenSolver<RealMatrix>(a.transpose() * a, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    const double nominal = gram_max * static_cast<double>(prob.batches().size()) / model.sigma2();

    ChannelEstimate est;
    est.h_hat = h0;
    est.blocks.resize(static_cast<std::size_t>(model.M()));
    double grad_sq = 0.0;
    for (int m = 0; m < model.M(); ++m) {
        RealVector h = detail::block_of(h0, model, m);
        double objective = 0.0;
        const auto diag = detail::newton_block(prob, m, h, opt, nominal, objective);
        if (diag.status == SolveStatus::Unbounded && opt.separable_norm > 0.0) {
            h = detail::norm_constrained_block(prob, m, h, opt.separable_norm, opt, nominal);
            objective = detail::block_terms(prob, m, h, false).value;
        }
        est.h_hat.segment(m * model.params_per_antenna(), model.params_per_antenna()) = h;
        est.blocks[static_cast<std::size_t>(m)] = diag;
        est.iterations = std::max(est.iterations, diag.iterations);
        est.converged = est.converged && diag.status == SolveStatus::Converged;
        est.objective += objective;
        grad_sq += diag.gradient_norm * diag.gradient_norm;
    }
    est.gradient_norm = std::sqrt(grad_sq);
    return est;
}

inline ChannelEstimate solve_ml(const LikelihoodProblem &prob, const SolverOptions &opt = {})
{
    return solve_ml(prob, RealVector::Zero(prob.model().parameters()), opt);
}

// Unquantized least squares: h_hat = (A^T A)^{-1} A^T y, one 2K x 2K solve per antenna.
inline ChannelEstimate solve_nq(const RealModel &model, const RealVector &y)
{
    model.check_measurements(y);
    const RealMatrix &a = model.block();
    const RealMatrix gram = a.transpose() * a;
    const Eigen::SelfAdjointEigenSolver<RealMatrix> eig(gram);
    const double cond = condition_number(eig);
    if (!(cond <= kConditionLimit)) {
        throw NumericalError(0, cond, "solve_nq: A~^T A~ is singular, rank-deficient pilots");
    }
    const Eigen::LLT<RealMatrix> llt(gram);
    ChannelEstimate est;
    est.h_hat.resize(model.parameters());
    for (int m = 0; m < model.M(); ++m) {
        est.h_hat.segment(m * model.params_per_antenna(), model.params_per_antenna()) =
            llt.solve(a.transpose() * y.segment(m * model.rows_per_antenna(), model.rows_per_antenna()));
    }
    est.blocks.resize(static_cast<std::size_t>(model.M()));
    return est;
}

} // namespace onebit
