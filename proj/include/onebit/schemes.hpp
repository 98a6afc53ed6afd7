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

// End-to-end estimation policies. Each run draws its own noise from `seed`;
// batch i of any scheme uses the noise stream derive_seed(seed, "noise", {i}),
// so FQ and the first AQ iteration see identical observations.

#include "onebit/mle.hpp"
#include "onebit/model.hpp"
#include "onebit/quant.hpp"
#include "onebit/rng.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace onebit
{

enum class Scheme { FQ, RQ, AQ, OQ, NQ };

inline constexpr Scheme kAllSchemes[] = {Scheme::FQ, Scheme::RQ, Scheme::AQ, Scheme::OQ, Scheme::NQ};

constexpr std::string_view to_string(Scheme s) noexcept
{
    switch (s) {
    case Scheme::FQ: return "FQ";
    case Scheme::RQ: return "RQ";
    case Scheme::AQ: return "AQ";
    case Scheme::OQ: return "OQ";
    case Scheme::NQ: return "NQ";
    }
    return "?";
}

inline std::optional<Scheme> parse_scheme(std::string_view name)
{
    for (Scheme s : kAllSchemes) {
        if (to_string(s) == name) {
            return s;
        }
    }
    return std::nullopt;
}

inline std::uint64_t batch_noise_seed(std::uint64_t seed, int batch)
{
    return derive_seed(seed, "noise", {static_cast<std::uint64_t>(batch)});
}

// ||H - H_hat||_F^2 / (K M), computed on the real vectors.
inline double mse(const RealVector &h, const RealVector &h_hat, int M, int K)
{
    return (h - h_hat).squaredNorm() / (static_cast<double>(M) * K);
}

namespace detail
{

inline ChannelEstimate single_batch(const RealModel &model, const RealVector &h, ThresholdVector tau,
                                    std::uint64_t seed, const SolverOptions &opt)
{
    const RealVector y = generate_noisy_observation(model, h, batch_noise_seed(seed, 1));
    LikelihoodProblem prob(model, quantize(y, std::move(tau)));
    return solve_ml(prob, opt);
}

} // namespace detail

// Zero thresholds.
inline ChannelEstimate run_fq(const RealModel &model, const RealVector &h, std::uint64_t seed,
                              const SolverOptions &opt = {})
{
    return detail::single_batch(model, h, thresholds_fixed(model.measurements()), seed, opt);
}

// Thresholds a_n^T h~_n from independent prior draws.
inline ChannelEstimate run_rq(const RealModel &model, const RealVector &h, double sigma_h2, std::uint64_t seed,
                              const SolverOptions &opt = {})
{
    auto tau = thresholds_random(model, sigma_h2, derive_seed(seed, "thresholds"));
    return detail::single_batch(model, h, std::move(tau), seed, opt);
}

// Oracle thresholds tau = A h. Benchmark only: uses the true channel.
inline ChannelEstimate run_oq(const RealModel &model, const RealVector &h, std::uint64_t seed,
                              const SolverOptions &opt = {})
{
    return detail::single_batch(model, h, thresholds_oracle(model, h), seed, opt);
}

// Least squares on the unquantized observations.
inline ChannelEstimate run_nq(const RealModel &model, const RealVector &h, std::uint64_t seed)
{
    return solve_nq(model, generate_noisy_observation(model, h, batch_noise_seed(seed, 1)));
}

struct AqIteration
{
    int iteration = 0;
    double mse = 0.0;
    double threshold_error = 0.0; // ||tau^(i) - A h|| / ||A h||, thresholds used in this iteration
    bool converged = true;
    int solver_iterations = 0;
    Eigen::Index binary_measurements = 0; // cumulative
};

struct AqState
{
    int iteration = 0;
    int i_max = 0;
    LikelihoodProblem problem;
    ThresholdVector thresholds; // for the next iteration
    RealVector h_hat;
};

struct AqResult
{
    ChannelEstimate estimate;
    std::vector<AqIteration> trace;
};

// Adaptive quantization. Every iteration draws fresh noise, quantizes against
// the current thresholds, re-solves the ML problem over all accumulated
// batches (warm-started at the previous estimate) and sets
// tau^(i+1) = A h_hat^(i).
inline AqResult run_aq(const RealModel &model, const RealVector &h, int i_max, std::uint64_t seed,
                       const SolverOptions &opt = {})
{
    if (i_max < 1) {
        throw std::invalid_argument("run_aq: i_max must be at least 1");
    }
    const RealVector ah = model.apply(h);
    const double ah_norm = ah.norm();

    AqState state{0, i_max, LikelihoodProblem(model), thresholds_fixed(model.measurements()),
                  RealVector::Zero(model.parameters())};
    AqResult result;
    for (int i = 1; i <= i_max; ++i) {
        state.iteration = i;
        const RealVector y = generate_noisy_observation(model, h, batch_noise_seed(seed, i));
        const double tau_error = ah_norm > 0.0 ? (state.thresholds.tau - ah).norm() / ah_norm : 0.0;
        state.problem.add_batch(quantize(y, state.thresholds));

        ChannelEstimate est = solve_ml(state.problem, state.h_hat, opt);
        // A non-converged solve still returns a finite, step-capped iterate;
        // it is kept so the thresholds can move off a separable configuration.
        if (est.h_hat.allFinite()) {
            state.h_hat = est.h_hat;
        }
        result.trace.push_back({i, mse(h, state.h_hat, model.M(), model.K()), tau_error, est.converged,
                                est.iterations, i * model.measurements()});
        state.thresholds = thresholds_adaptive(model, state.h_hat, i + 1);
        est.h_hat = state.h_hat;
        result.estimate = std::move(est);
    }
    return result;
}

} // namespace onebit
