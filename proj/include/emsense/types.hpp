// SPDX-License-Identifier: Apache-2.0
//
// emsense: electromagnetic property sensing with OFDM pilot signals
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

#ifndef EMSENSE_TYPES_HPP
#define EMSENSE_TYPES_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace emsense {

using cplx = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using MatR = Eigen::MatrixXd;
using VecR = Eigen::VectorXd;

constexpr double kSpeedOfLight = 299792458.0;            // [m/s]
constexpr double kVacuumPermittivity = 8.8541878128e-12; // [F/m]
constexpr double kPi = 3.14159265358979323846;

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(const Point2 &a, const Point2 &b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Invalid scenario, config file or argument shape. Maps to CLI exit code 2.
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Singular systems, non-finite data, failed factorizations. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
  public:
    explicit NumericalError(const std::string &what, double condition_estimate = 0.0)
        : std::runtime_error(what), condition_(condition_estimate) {}
    double condition_estimate() const { return condition_; }

  private:
    double condition_;
};

} // namespace emsense

#endif
