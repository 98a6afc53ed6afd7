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

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <limits>

namespace onebit
{

inline constexpr double kConditionLimit = 1e12;

// Largest-to-smallest eigenvalue ratio of a symmetric PSD matrix (inf if singular).
inline double condition_number(const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> &eig)
{
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

} // namespace onebit
