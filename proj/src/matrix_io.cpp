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

#include "emsense/matrix_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace emsense {

namespace {

static_assert(std::endian::native == std::endian::little, "matrix files assume a little-endian host");

void put_u64(std::ofstream &out, std::uint64_t v) { out.write(reinterpret_cast<const char *>(&v), sizeof v); }

std::uint64_t get_u64(std::ifstream &in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char *>(&v), sizeof v);
    return v;
}

} // namespace

void write_matrix(const std::string &path, const MatC &m) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot open '" + path + "' for writing");
    out.write(kMatrixMagic, sizeof kMatrixMagic);
    put_u64(out, static_cast<std::uint64_t>(m.rows()));
    put_u64(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const std::array<float, 2> v{static_cast<float>(m(i, j).real()), static_cast<float>(m(i, j).imag())};
            out.write(reinterpret_cast<const char *>(v.data()), sizeof v);
        }
    if (!out)
        throw ConfigError("write failed for '" + path + "'");
}

MatC read_matrix(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open '" + path + "'");
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMatrixMagic, sizeof magic) != 0)
        throw ConfigError("'" + path + "' is not an EMSMAT01 matrix file");
    const std::uint64_t rows = get_u64(in);
    const std::uint64_t cols = get_u64(in);
    if (!in || rows > (1u << 30) || cols > (1u << 30))
        throw ConfigError("'" + path + "': corrupt header");
    MatC m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::uint64_t i = 0; i < rows; ++i)
        for (std::uint64_t j = 0; j < cols; ++j) {
            std::array<float, 2> v{};
            in.read(reinterpret_cast<char *>(v.data()), sizeof v);
            m(i, j) = cplx(v[0], v[1]);
        }
    if (!in)
        throw ConfigError("'" + path + "': truncated payload");
    return m;
}

} // namespace emsense
