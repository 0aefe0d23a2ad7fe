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

#ifndef EMSENSE_MATRIX_IO_HPP
#define EMSENSE_MATRIX_IO_HPP

#include "emsense/types.hpp"

#include <string>

namespace emsense {

// Binary complex matrix file, little-endian:
//   bytes 0-7    magic "EMSMAT01"
//   bytes 8-15   uint64 rows
//   bytes 16-23  uint64 cols
//   then rows*cols complex64 values (float32 real, float32 imag), row-major.
// Values are stored in single precision; reading returns the widened doubles.
inline constexpr char kMatrixMagic[8] = {'E', 'M', 'S', 'M', 'A', 'T', '0', '1'};

void write_matrix(const std::string &path, const MatC &m);
MatC read_matrix(const std::string &path);

} // namespace emsense

#endif
