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

#include "emsense/special.hpp"

#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <stdexcept>
#include <string>

namespace emsense {

namespace {

void require_positive(double x, const char *fn) {
    if (!(x > 0.0) || !std::isfinite(x))
        throw std::domain_error(std::string(fn) + ": argument must be positive and finite, got " + std::to_string(x));
}

} // namespace

cplx hankel_h0_2(double x) {
    require_positive(x, "hankel_h0_2");
    return {boost::math::cyl_bessel_j(0, x), -boost::math::cyl_neumann(0, x)};
}

cplx hankel_h1_2(double x) {
    require_positive(x, "hankel_h1_2");
    return {boost::math::cyl_bessel_j(1, x), -boost::math::cyl_neumann(1, x)};
}

double bessel_j1(double x) { return boost::math::cyl_bessel_j(1, x); }

} // namespace emsense
