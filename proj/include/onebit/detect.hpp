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

// Data detection with one-bit, zero-threshold receivers.
//
// During the data phase antenna m observes r_m = sqrt(p) (H s)_m + w_m and
// keeps only b_m = sgn(Re r_m) + j sgn(Im r_m). Given a channel (estimate)
// the detector maximizes
//
//     sum_m log Phi(Re(b_m) Re(sqrt(p) (H s)_m) / sigma)
//         + log Phi(Im(b_m) Im(sqrt(p) (H s)_m) / sigma)
//
// over all 4^K QPSK vectors s.

#include "onebit/errors.hpp"
#include "onebit/model.hpp"
#include "onebit/normal.hpp"
#include "onebit/quant.hpp"
#include "onebit/rng.hpp"

#include <array>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace onebit
{

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;

inline constexpr int kDefaultMaxUsers = 8;

// Unit-energy QPSK in search (tie-break) order.
inline const std::array<Complex, 4> &qpsk()
{
    static const std::array<Complex, 4> points = [] {
        const double a = 1.0 / std::numbers::sqrt2;
        return std::array<Complex, 4>{Complex{a, a}, Complex{-a, a}, Complex{-a, -a}, Complex{a, -a}};
    }();
    return points;
}

struct SymbolFrame
{
    std::vector<std::uint8_t> index; // into qpsk()
    ComplexVector s;
    std::int64_t t = 0;

    static SymbolFrame from_indices(std::vector<std::uint8_t> idx, std::int64_t t = 0)
    {
        SymbolFrame f{std::move(idx), ComplexVector(), t};
        f.s.resize(static_cast<Eigen::Index>(f.index.size()));
        for (std::size_t k = 0; k < f.index.size(); ++k) {
            f.s[static_cast<Eigen::Index>(k)] = qpsk().at(f.index[k]);
        }
        return f;
    }
};

// Sign bits of one received data vector, real and imaginary branches.
struct DataBits
{
    std::vector<std::int8_t> re;
    std::vector<std::int8_t> im;
};

inline DataBits quantize_data(const ComplexVector &r)
{
    DataBits bits;
    bits.re.resize(static_cast<std::size_t>(r.size()));
    bits.im.resize(static_cast<std::size_t>(r.size()));
    for (Eigen::Index m = 0; m < r.size(); ++m) {
        bits.re[static_cast<std::size_t>(m)] = one_bit(r[m].real());
        bits.im[static_cast<std::size_t>(m)] = one_bit(r[m].imag());
    }
    return bits;
}

namespace detail
{

class ExhaustiveSearch
{
public:
    ExhaustiveSearch(const ComplexMatrix &H, const DataBits &bits, double sigma, double amplitude)
        : bits_(bits), inv_sigma_(1.0 / sigma), K_(static_cast<int>(H.cols())),
          partial_(static_cast<std::size_t>(K_) + 1, ComplexVector::Zero(H.rows())),
          current_(static_cast<std::size_t>(K_)), best_(static_cast<std::size_t>(K_))
    {
        columns_.reserve(static_cast<std::size_t>(K_) * 4);
        for (int k = 0; k < K_; ++k) {
            for (const Complex &c : qpsk()) {
                columns_.push_back(amplitude * c * H.col(k));
            }
        }
    }

    std::vector<std::uint8_t> run()
    {
        descend(0);
        return best_;
    }

private:
    void descend(int k)
    {
        if (k == K_) {
            const double metric = score(partial_[static_cast<std::size_t>(K_)]);
            if (metric > best_metric_) {
                best_metric_ = metric;
                best_ = current_;
            }
            return;
        }
        for (std::uint8_t q = 0; q < 4; ++q) {
            current_[static_cast<std::size_t>(k)] = q;
            partial_[static_cast<std::size_t>(k) + 1] =
                partial_[static_cast<std::size_t>(k)] + columns_[static_cast<std::size_t>(4 * k + q)];
            descend(k + 1);
        }
    }

    double score(const ComplexVector &z) const
    {
        double total = 0.0;
        for (Eigen::Index m = 0; m < z.size(); ++m) {
            total += normal::log_cdf(bits_.re[static_cast<std::size_t>(m)] * z[m].real() * inv_sigma_);
            total += normal::log_cdf(bits_.im[static_cast<std::size_t>(m)] * z[m].imag() * inv_sigma_);
        }
        return total;
    }

    const DataBits &bits_;
    double inv_sigma_;
    int K_;
    std::vector<ComplexVector> columns_;
    std::vector<ComplexVector> partial_;
    std::vector<std::uint8_t> current_;
    std::vector<std::uint8_t> best_;
    double best_metric_ = -std::numeric_limits<double>::infinity();
};

} // namespace detail

// Exhaustive one-bit ML detection; ties go to the lexicographically first hypothesis.
inline SymbolFrame detect_ml_onebit(const ComplexMatrix &H_hat, const DataBits &bits, double sigma2,
                                    double amplitude = 1.0, int max_users = kDefaultMaxUsers)
{
    if (H_hat.cols() > max_users) {
        throw CapabilityError("detect_ml_onebit: exhaustive search over 4^" + std::to_string(H_hat.cols()) +
                              " hypotheses refused; reduce K to at most " + std::to_string(max_users));
    }
    if (static_cast<Eigen::Index>(bits.re.size()) != H_hat.rows() ||
        static_cast<Eigen::Index>(bits.im.size()) != H_hat.rows()) {
        throw DimensionError("detect_ml_onebit: bit vectors must have one entry per antenna");
    }
    detail::ExhaustiveSearch search(H_hat, bits, std::sqrt(sigma2), amplitude);
    return SymbolFrame::from_indices(search.run());
}

struct RateEstimate
{
    double rate = 0.0; // bits/s/Hz
    bool capped = false;
};

inline constexpr double kDefaultRateCap = 20.0;

// log2(1 + |E[s* s_hat]|^2 / (E|s_hat|^2 - |E[s* s_hat]|^2)) with sample means.
inline RateEstimate achievable_rate(std::span<const Complex> s, std::span<const Complex> s_hat,
                                    double cap = kDefaultRateCap)
{
    if (s.empty() || s.size() != s_hat.size()) {
        throw std::invalid_argument("achievable_rate: need equally long, non-empty sample sequences");
    }
    Complex corr{0.0, 0.0};
    double power = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        corr += std::conj(s[i]) * s_hat[i];
        power += std::norm(s_hat[i]);
    }
    const double n = static_cast<double>(s.size());
    const double signal = std::norm(corr / n);
    const double distortion = power / n - signal;
    if (!(distortion > 0.0)) {
        return {cap, true};
    }
    const double rate = std::log2(1.0 + signal / distortion);
    if (rate > cap) {
        return {cap, true};
    }
    return {rate, false};
}

struct DataPhaseConfig
{
    int frames = 1000;
    double sigma2 = 1.0;
    double amplitude = 1.0; // sqrt of the per-user symbol energy
    int max_users = kDefaultMaxUsers;
    double rate_cap = kDefaultRateCap;
};

struct DataPhaseResult
{
    std::vector<double> ser_per_user;
    double ser = 0.0;
    std::vector<RateEstimate> rate_per_user;
    double rate = 0.0; // averaged over users
};

// Transmit `frames` random QPSK vectors through the true channel, detect each
// with H_hat and report symbol errors and per-user rates. The symbol and noise
// streams depend only on `seed`, so different estimates can be compared on
// identical data.
inline DataPhaseResult measure_ser(const ComplexMatrix &H, const ComplexMatrix &H_hat,
                                   const DataPhaseConfig &cfg, std::uint64_t seed)
{
    if (H.rows() != H_hat.rows() || H.cols() != H_hat.cols()) {
        throw DimensionError("measure_ser: channel and estimate shapes differ");
    }
    if (cfg.frames < 1) {
        throw std::invalid_argument("measure_ser: need at least one frame");
    }
    const auto K = static_cast<std::size_t>(H.cols());
    const double sigma = std::sqrt(cfg.sigma2);
    Rng rng(seed);
    std::vector<std::vector<Complex>> sent(K), detected(K);
    std::vector<std::int64_t> errors(K, 0);
    ComplexVector r(H.rows());
    for (int t = 0; t < cfg.frames; ++t) {
        std::vector<std::uint8_t> idx(K);
        for (auto &q : idx) {
            q = static_cast<std::uint8_t>(rng.uniform_index(4));
        }
        const SymbolFrame tx = SymbolFrame::from_indices(std::move(idx), t);
        r = cfg.amplitude * (H * tx.s);
        for (Eigen::Index m = 0; m < r.size(); ++m) {
            const double re = sigma * rng.gaussian();
            const double im = sigma * rng.gaussian();
            r[m] += Complex{re, im};
        }
        const SymbolFrame rx = detect_ml_onebit(H_hat, quantize_data(r), cfg.sigma2, cfg.amplitude, cfg.max_users);
        for (std::size_t k = 0; k < K; ++k) {
            errors[k] += tx.index[k] != rx.index[k];
            sent[k].push_back(tx.s[static_cast<Eigen::Index>(k)]);
            detected[k].push_back(rx.s[static_cast<Eigen::Index>(k)]);
        }
    }
    DataPhaseResult out;
    for (std::size_t k = 0; k < K; ++k) {
        out.ser_per_user.push_back(static_cast<double>(errors[k]) / cfg.frames);
        out.rate_per_user.push_back(achievable_rate(sent[k], detected[k], cfg.rate_cap));
        out.ser += out.ser_per_user.back() / static_cast<double>(K);
        out.rate += out.rate_per_user.back().rate / static_cast<double>(K);
    }
    return out;
}

} // namespace onebit
