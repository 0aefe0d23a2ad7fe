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

#ifndef EMSENSE_SPECIAL_HPP
#define EMSENSE_SPECIAL_HPP

#include "emsense/types.hpp"

namespace emsense {

// Hankel functions of the second kind, H_n^(2)(x) = J_n(x) - j Y_n(x), for x > 0.
// Throws std::domain_error for x <= 0 or non-finite x.
cplx hankel_h0_2(double x);
cplx hankel_h1_2(double x);

double bessel_j1(double x);

} // namespace emsense

#endif
