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

#include "onebit/errors.hpp"
#include "onebit/model.hpp"
#include "onebit/rng.hpp"

#include <complex>
#include <cstdint>
#include <vector>

namespace onebit
{

enum class ThresholdPolicy { Fixed, Random, OracleOptimal, Adaptive };

struct ThresholdVector
{
    RealVector tau;
    ThresholdPolicy policy = ThresholdPolicy::Fixed;
    // Fixed: the constant level. Adaptive: the iteration index. Unused otherwise.
    double parameter = 0.0;

    Eigen::Index size() const noexcept { return tau.size(); }
};

struct QuantizedBatch
{
    std::vector<std::int8_t> bits; // each entry is -1 or +1
    ThresholdVector thresholds;

    Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(bits.size()); }
};

// sgn with sgn(0) = +1.
constexpr std::int8_t one_bit(double x) noexcept { return x >= 0.0 ? 1 : -1; }

// b = sgn(y - tau).
inline QuantizedBatch quantize(const RealVector &y, ThresholdVector tau)
{
    if (y.size() != tau.size()) {
        throw DimensionError("quantize: observation and threshold lengths differ");
    }
    QuantizedBatch batch;
    batch.bits.resize(static_cast<std::size_t>(y.size()));
    for (Eigen::Index n = 0; n < y.size(); ++n) {
        batch.bits[static_cast<std::size_t>(n)] = one_bit(y[n] - tau.tau[n]);
    }
    batch.thresholds = std::move(tau);
    return batch;
}

// Complex-domain quantizer: sgn(Re(y - t)) + j sgn(Im(y - t)).
inline std::complex<double> quantize_complex(std::complex<double> y, std::complex<double> t = {})
{
    const auto d = y - t;
    return {static_cast<double>(one_bit(d.real())), static_cast<double>(one_bit(d.imag()))};
}

inline ThresholdVector thresholds_fixed(Eigen::Index N, double c = 0.0)
{
    return {RealVector::Constant(N, c), ThresholdPolicy::Fixed, c};
}

// tau_n = a_n^T h, the conditional optimum. Needs the true channel.
inline ThresholdVector thresholds_oracle(const RealModel &model, const RealVector &h)
{
    return {model.apply(h), ThresholdPolicy::OracleOptimal, 0.0};
}

// tau^(i+1) = A h_hat^(i).
inline ThresholdVector thresholds_adaptive(const RealModel &model, const RealVector &h_hat,
                                           int iteration)
{
    return {model.apply(h_hat), ThresholdPolicy::Adaptive, static_cast<double>(iteration)};
}

// tau_n = a_n^T h~_n with an independent prior draw h~_n for every n. Only the
// 2K entries of h~_n that row a_n touches are drawn; each real entry has
// variance sigma_h2 / 2 (complex entries CN(0, sigma_h2)).
inline ThresholdVector thresholds_random(const RealModel &model, double sigma_h2, std::uint64_t seed)
{
    if (!(sigma_h2 >= 0.0)) {
        throw std::invalid_argument("thresholds_random: sigma_h2 must be non-negative");
    }
    Rng rng(seed);
    const RealMatrix &a = model.block();
    const double variance = 0.5 * sigma_h2;
    RealVector draw(model.params_per_antenna());
    RealVector tau(model.measurements());
    for (Eigen::Index n = 0; n < tau.size(); ++n) {
        for (Eigen::Index i = 0; i < draw.size(); ++i) {
            draw[i] = rng.gaussian(variance);
        }
        tau[n] = a.row(model.locate(n).local).dot(draw);
    }
    return {tau, ThresholdPolicy::Random, sigma_h2};
}

} // namespace onebit
