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

// System model Y = H X + W and its real-valued vectorization y = A h + w.
//
// With Y~ = [Re(Y) Im(Y)]^T (2L x M) and H~ = [Re(H) Im(H)]^T (2K x M) the
// model is Y~ = A~ H~, where
//
//     A~ = [ Re(X)  Im(X) ; -Im(X)  Re(X) ]^T     (2L x 2K)
//
// and A = I_M (x) A~. The full 2ML x 2MK matrix A is never formed. Vectors
// indexed by measurement are laid out antenna-major: y = [y_1; ...; y_M] with
// y_m = [Re(Y(m,:))^T; Im(Y(m,:))^T], and likewise h = [h_1; ...; h_M] with
// h_m = [Re(H(m,:))^T; Im(H(m,:))^T].
//
// The noise convention is per real component: w ~ N(0, sigma2 I).

#include "onebit/errors.hpp"
#include "onebit/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace onebit
{

using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

class ComplexSystem
{
public:
    static constexpr double kPowerTolerance = 1e-9;

    ComplexSystem(int M, int K, int L, ComplexMatrix X, double sigma2, double P)
        : M_(M), K_(K), L_(L), X_(std::move(X)), sigma2_(sigma2), P_(P)
    {
        if (M <= 0 || K <= 0 || L <= 0) {
            throw DimensionError("ComplexSystem: M, K, L must be positive");
        }
        if (X_.rows() != K || X_.cols() != L) {
            throw DimensionError("ComplexSystem: pilot matrix must be K x L");
        }
        if (!(sigma2 > 0.0) || !(P > 0.0)) {
            throw std::invalid_argument("ComplexSystem: sigma2 and P must be positive");
        }
        if (pilot_energy() > P * (1.0 + kPowerTolerance)) {
            throw std::invalid_argument("ComplexSystem: tr(X X^H) exceeds the power budget P");
        }
    }

    int M() const noexcept { return M_; }
    int K() const noexcept { return K_; }
    int L() const noexcept { return L_; }
    const ComplexMatrix &X() const noexcept { return X_; }
    double sigma2() const noexcept { return sigma2_; }
    double P() const noexcept { return P_; }

    double pilot_energy() const { return X_.squaredNorm(); }

private:
    int M_, K_, L_;
    ComplexMatrix X_;
    double sigma2_;
    double P_;
};

class RealModel
{
public:
    RealModel(int M, int K, int L, RealMatrix a_tilde, double sigma2)
        : M_(M), K_(K), L_(L), a_tilde_(std::move(a_tilde)), sigma2_(sigma2)
    {
        if (a_tilde_.rows() != 2 * L || a_tilde_.cols() != 2 * K) {
            throw DimensionError("RealModel: A~ must be 2L x 2K");
        }
    }

    int M() const noexcept { return M_; }
    int K() const noexcept { return K_; }
    int L() const noexcept { return L_; }
    double sigma2() const noexcept { return sigma2_; }
    double sigma() const { return std::sqrt(sigma2_); }

    // A~; the full operator is I_M (x) A~.
    const RealMatrix &block() const noexcept { return a_tilde_; }

    Eigen::Index measurements() const noexcept { return Eigen::Index{2} * M_ * L_; }
    Eigen::Index parameters() const noexcept { return Eigen::Index{2} * M_ * K_; }
    Eigen::Index rows_per_antenna() const noexcept { return Eigen::Index{2} * L_; }
    Eigen::Index params_per_antenna() const noexcept { return Eigen::Index{2} * K_; }

    // y = A h.
    RealVector apply(const RealVector &h) const
    {
        check_params(h);
        RealVector y(measurements());
        for (int m = 0; m < M_; ++m) {
            y.segment(m * rows_per_antenna(), rows_per_antenna()) =
                a_tilde_ * h.segment(m * params_per_antenna(), params_per_antenna());
        }
        return y;
    }

    // A^T r.
    RealVector apply_transpose(const RealVector &r) const
    {
        check_measurements(r);
        RealVector out(parameters());
        for (int m = 0; m < M_; ++m) {
            out.segment(m * params_per_antenna(), params_per_antenna()) =
                a_tilde_.transpose() * r.segment(m * rows_per_antenna(), rows_per_antenna());
        }
        return out;
    }

    // The nonzero part of row n of A and the antenna block it touches.
    struct Row
    {
        int antenna;
        Eigen::Index local;
    };

    Row locate(Eigen::Index n) const
    {
        return {static_cast<int>(n / rows_per_antenna()), n % rows_per_antenna()};
    }

    // The complex pilot matrix recovered from A~'s blocks.
    ComplexMatrix pilots() const
    {
        // A~^T = [Re(X) Im(X); -Im(X) Re(X)]
        const RealMatrix t = a_tilde_.transpose();
        ComplexMatrix X(K_, L_);
        X.real() = t.topLeftCorner(K_, L_);
        X.imag() = t.topRightCorner(K_, L_);
        return X;
    }

    void check_params(const RealVector &h) const
    {
        if (h.size() != parameters()) {
            throw DimensionError("channel vector length must be 2MK");
        }
    }

    void check_measurements(const RealVector &v) const
    {
        if (v.size() != measurements()) {
            throw DimensionError("measurement vector length must be 2ML");
        }
    }

private:
    int M_, K_, L_;
    RealMatrix a_tilde_;
    double sigma2_;
};

inline RealMatrix realify_pilots(const ComplexMatrix &X)
{
    const auto K = X.rows();
    const auto L = X.cols();
    RealMatrix upper(2 * K, 2 * L);
    upper << X.real(), X.imag(), -X.imag(), X.real();
    return upper.transpose();
}

inline RealModel realify(const ComplexSystem &sys)
{
    return RealModel(sys.M(), sys.K(), sys.L(), realify_pilots(sys.X()), sys.sigma2());
}

// h = vec([Re(H) Im(H)]^T).
inline RealVector channel_to_real(const ComplexMatrix &H)
{
    const auto M = H.rows();
    const auto K = H.cols();
    RealVector h(2 * M * K);
    for (Eigen::Index m = 0; m < M; ++m) {
        h.segment(2 * K * m, K) = H.row(m).real().transpose();
        h.segment(2 * K * m + K, K) = H.row(m).imag().transpose();
    }
    return h;
}

inline ComplexMatrix real_to_channel(const RealVector &h, int M, int K)
{
    if (h.size() != Eigen::Index{2} * M * K) {
        throw DimensionError("real_to_channel: length must be 2MK");
    }
    ComplexMatrix H(M, K);
    for (int m = 0; m < M; ++m) {
        H.row(m).real() = h.segment(2 * K * m, K).transpose();
        H.row(m).imag() = h.segment(2 * K * m + K, K).transpose();
    }
    return H;
}

struct ChannelRealization
{
    ComplexMatrix H;
    RealVector h;
    double sigma_h2;
};

// Rayleigh fading: i.i.d. CN(0, sigma_h2) entries.
inline ChannelRealization generate_channel(int M, int K, double sigma_h2, std::uint64_t seed)
{
    if (M <= 0 || K <= 0) {
        throw DimensionError("generate_channel: M, K must be positive");
    }
    if (!(sigma_h2 > 0.0)) {
        throw std::invalid_argument("generate_channel: sigma_h2 must be positive");
    }
    Rng rng(seed);
    ComplexMatrix H(M, K);
    for (int m = 0; m < M; ++m) {
        for (int k = 0; k < K; ++k) {
            H(m, k) = rng.complex_gaussian(sigma_h2);
        }
    }
    return {H, channel_to_real(H), sigma_h2};
}

enum class PilotMethod { Qr, Dft };

// K x L pilots with X X^H = (P/K) I_K.
inline ComplexMatrix generate_pilots_orthogonal(int K, int L, double P, std::uint64_t seed,
                                                PilotMethod method = PilotMethod::Qr)
{
    if (K <= 0 || L <= 0) {
        throw DimensionError("generate_pilots_orthogonal: K, L must be positive");
    }
    if (L < K) {
        throw DimensionError("generate_pilots_orthogonal: orthogonal pilots need L >= K");
    }
    const double scale = std::sqrt(P / K);
    if (method == PilotMethod::Dft) {
        ComplexMatrix X(K, L);
        for (int k = 0; k < K; ++k) {
            for (int l = 0; l < L; ++l) {
                const double angle = -2.0 * std::numbers::pi * k * l / L;
                X(k, l) = std::polar(scale / std::sqrt(static_cast<double>(L)), angle);
            }
        }
        return X;
    }
    Rng rng(seed);
    ComplexMatrix G(L, K);
    for (int l = 0; l < L; ++l) {
        for (int k = 0; k < K; ++k) {
            G(l, k) = rng.complex_gaussian();
        }
    }
    // Thin Q has orthonormal columns, so Q^H Q = I_K.
    Eigen::HouseholderQR<ComplexMatrix> qr(G);
    const ComplexMatrix Q = qr.householderQ() * ComplexMatrix::Identity(L, K);
    return scale * Q.adjoint();
}

// Unstructured K x L Gaussian pilots rescaled to tr(X X^H) = P.
inline ComplexMatrix generate_pilots_random(int K, int L, double P, std::uint64_t seed)
{
    Rng rng(seed);
    ComplexMatrix X(K, L);
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l < L; ++l) {
            X(k, l) = rng.complex_gaussian();
        }
    }
    return X * std::sqrt(P / X.squaredNorm());
}

// y = A h + w, w ~ N(0, sigma2 I).
inline RealVector generate_noisy_observation(const RealModel &model, const RealVector &h,
                                             std::uint64_t seed)
{
    RealVector y = model.apply(h);
    Rng rng(seed);
    const double sigma = model.sigma();
    for (Eigen::Index n = 0; n < y.size(); ++n) {
        y[n] += sigma * rng.gaussian();
    }
    return y;
}

// SNR = P / (K L sigma2).
inline double snr_of(const ComplexSystem &sys)
{
    return sys.P() / (static_cast<double>(sys.K()) * sys.L() * sys.sigma2());
}

// Pilot power budget that realizes a given SNR.
inline double power_for_snr(int K, int L, double sigma2, double snr_db)
{
    return db_to_linear(snr_db) * K * L * sigma2;
}

} // namespace onebit
