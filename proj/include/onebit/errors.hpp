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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace onebit
{

// Inconsistent dimensions between vectors, models and thresholds.
class DimensionError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// A request the library refuses because it would be intractable (e.g. 4^K detector search).
class CapabilityError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Invalid experiment configuration; carries the offending field name.
class ConfigError : public std::invalid_argument
{
public:
    ConfigError(std::string field, const std::string &what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field))
    {
    }

    const std::string &field() const noexcept { return field_; }

private:
    std::string field_;
};

// Singular or ill-conditioned per-antenna block (FIM, Gram matrix).
class NumericalError : public std::runtime_error
{
public:
    NumericalError(std::size_t block, double condition, const std::string &what)
        : std::runtime_error(what + " (antenna block " + std::to_string(block) + ", condition " +
                             std::to_string(condition) + ")"),
          block_(block), condition_(condition)
    {
    }

    std::size_t block() const noexcept { return block_; }
    double condition() const noexcept { return condition_; }

private:
    std::size_t block_;
    double condition_;
};

} // namespace onebit
