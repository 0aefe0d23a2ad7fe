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

#include "emsense/sensing.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace emsense {

MatC khatri_rao(const MatC &a, const MatC &b) {
    if (a.cols() != b.cols())
        throw ConfigError("khatri_rao: column counts differ");
    MatC d(a.rows() * b.rows(), a.cols());
    for (Eigen::Index m = 0; m < a.cols(); ++m)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            d.col(m).segment(i * b.rows(), b.rows()) = a(i, m) * b.col(m);
    return d;
}

MatC CarrierSensing::matrix() const { return khatri_rao(excitation, h2); }

VecC CarrierSensing::apply(const VecC &c) const {
    // vec(H2 diag(c) A^T)
    const MatC y = h2 * c.asDiagonal() * excitation.transpose();
    return y.reshaped();
}

VecC CarrierSensing::adjoint_apply(const VecC &y) const {
    const Eigen::Index n_rx = h2.rows();
    const MatC ymat = y.reshaped(n_rx, excitation.rows());
    const MatC b = h2.adjoint() * ymat; // M x I
    return (excitation.conjugate().transpose().cwiseProduct(b)).rowwise().sum();
}

MatC CarrierSensing::gram() const {
    return (excitation.adjoint() * excitation).cwiseProduct(h2.adjoint() * h2);
}

CarrierSensing carrier_sensing(const ChannelSet &channels, int k, const MatC &w, const VecC &chi) {
    const auto &c = channels.carriers.at(k);
    if (w.rows() != channels.n_tx())
        throw ConfigError("sensing: beamformer must have N_t rows");
    CarrierSensing cs;
    cs.excitation = total_field(channels, k, chi, c.h1 * w).transpose();
    cs.h2 = c.h2;
    cs.ratio = channels.omega_c / c.omega;
    return cs;
}

MatC sensing_matrix(const ChannelSet &channels, int k, const MatC &w, const VecC &chi) {
    return carrier_sensing(channels, k, w, chi).matrix();
}

MatR real_block(const MatC &d, double ratio) {
    const Eigen::Index r = d.rows(), m = d.cols();
    MatR e(2 * r, 2 * m);
    e.topLeftCorner(r, m) = d.real();
    e.topRightCorner(r, m) = -ratio * d.imag();
    e.bottomLeftCorner(r, m) = d.imag();
    e.bottomRightCorner(r, m) = ratio * d.real();
    return e;
}

MatR stack_real(const std::vector<MatC> &d, const std::vector<double> &omega, double omega_c) {
    if (d.empty() || d.size() != omega.size())
        throw ConfigError("stack_real: need one angular frequency per sensing matrix");
    const Eigen::Index r = d.front().rows(), m = d.front().cols();
    MatR e(2 * r * static_cast<Eigen::Index>(d.size()), 2 * m);
    for (std::size_t k = 0; k < d.size(); ++k) {
        if (d[k].rows() != r || d[k].cols() != m)
            throw ConfigError("stack_real: sensing matrices have inconsistent shapes");
        e.middleRows(2 * r * static_cast<Eigen::Index>(k), 2 * r) = real_block(d[k], omega_c / omega[k]);
    }
    return e;
}

Eigen::Index SensingSystem::rows() const {
    Eigen::Index n = 0;
    for (const auto &c : carriers)
        n += 2 * c.rows();
    return n;
}

MatR SensingSystem::stacked() const {
    std::vector<MatC> d;
    std::vector<double> omega;
    for (const auto &c : carriers) {
        d.push_back(c.matrix());
        omega.push_back(omega_c / c.ratio);
    }
    return stack_real(d, omega, omega_c);
}

MatR SensingSystem::gram() const {
    const Eigen::Index m = pixels();
    MatR g = MatR::Zero(2 * m, 2 * m);
    for (const auto &c : carriers) {
        const MatC dd = c.gram();
        const double r = c.ratio;
        g.topLeftCorner(m, m) += dd.real();
        g.topRightCorner(m, m) -= r * dd.imag();
        g.bottomLeftCorner(m, m) += r * dd.imag();
        g.bottomRightCorner(m, m) += r * r * dd.real();
    }
    return g;
}

VecR SensingSystem::correlate(const ObservationSet &obs) const {
    if (obs.carriers.size() != carriers.size())
        throw ConfigError("sensing: observation and system have different subcarrier counts");
    const Eigen::Index m = pixels();
    VecR b = VecR::Zero(2 * m);
    for (std::size_t k = 0; k < carriers.size(); ++k) {
        const VecC v = carriers[k].adjoint_apply(obs.carriers[k].vectorized());
        b.head(m) += v.real();
        b.tail(m) += carriers[k].ratio * v.imag();
    }
    return b;
}

std::vector<VecC> SensingSystem::apply(const VecR &s) const {
    const Eigen::Index m = pixels();
    if (s.size() != 2 * m)
        throw ConfigError("sensing: property vector must have length 2M");
    std::vector<VecC> out;
    out.reserve(carriers.size());
    for (const auto &c : carriers) {
        VecC chi(m);
        chi.real() = s.head(m);
        chi.imag() = c.ratio * s.tail(m);
        out.push_back(c.apply(chi));
    }
    return out;
}

double SensingSystem::residual_norm(const ObservationSet &obs, const VecR &s) const {
    const auto pred = apply(s);
    double r2 = 0.0;
    for (std::size_t k = 0; k < carriers.size(); ++k)
        r2 += (obs.carriers[k].vectorized() - pred[k]).squaredNorm();
    return std::sqrt(r2);
}

SensingSystem build_sensing_system(const ChannelSet &channels, const std::vector<MatC> &beamformers,
                                   const std::vector<VecC> &chi_per_carrier) {
    if (static_cast<int>(beamformers.size()) != channels.n_subcarriers() ||
        chi_per_carrier.size() != beamformers.size())
        throw ConfigError("sensing: need one beamformer and one contrast vector per subcarrier");
    SensingSystem sys;
    sys.omega_c = channels.omega_c;
    sys.carriers.reserve(beamformers.size());
    for (int k = 0; k < channels.n_subcarriers(); ++k)
        sys.carriers.push_back(carrier_sensing(channels, k, beamformers[k], chi_per_carrier[k]));
    return sys;
}

namespace {

template <typename Gram> double coherence_from(const Gram &g) {
    const Eigen::Index n = g.rows();
    VecR norms(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        norms[i] = std::sqrt(std::abs(g(i, i)));
        if (!(norms[i] > 0.0))
            throw ConfigError("mutual_coherence: column " + std::to_string(i) + " is zero");
    }
    double mu = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < j; ++i)
            mu = std::max(mu, std::abs(g(i, j)) / (norms[i] * norms[j]));
    return std::min(mu, 1.0);
}

constexpr Eigen::Index kCoherenceBlock = 512;
constexpr Eigen::Index kFullGramLimit = 4096;

} // namespace

double mutual_coherence_from_gram(const MatR &gram) { return coherence_from(gram); }

double mutual_coherence(const MatR &a) {
    const Eigen::Index n = a.cols();
    if (n <= kFullGramLimit)
        return coherence_from(MatR(a.transpose() * a));
    VecR norms = a.colwise().norm().transpose();
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(norms[i] > 0.0))
            throw ConfigError("mutual_coherence: column " + std::to_string(i) + " is zero");
    double mu = 0.0;
    for (Eigen::Index j0 = 0; j0 < n; j0 += kCoherenceBlock) {
        const Eigen::Index nj = std::min(kCoherenceBlock, n - j0);
        for (Eigen::Index i0 = 0; i0 <= j0; i0 += kCoherenceBlock) {
            const Eigen::Index ni = std::min(kCoherenceBlock, n - i0);
            const MatR blk = a.middleCols(i0, ni).transpose() * a.middleCols(j0, nj);
            for (Eigen::Index j = 0; j < nj; ++j)
                for (Eigen::Index i = 0; i < ni; ++i)
                    if (i0 + i < j0 + j)
                        mu = std::max(mu, std::abs(blk(i, j)) / (norms[i0 + i] * norms[j0 + j]));
        }
    }
    return std::min(mu, 1.0);
}

double mutual_coherence(const MatC &a) { return coherence_from(MatC(a.adjoint() * a)); }

double edof(const MatC &h1) {
    if (h1.size() == 0 || h1.cwiseAbs().maxCoeff() == 0.0)
        throw ConfigError("edof: H1 is all zero");
    const VecR s = Eigen::BDCSVD<MatC>(h1).singularValues();
    const VecR lambda = s.array().square();
    const double tr = lambda.sum();
    return tr * tr / lambda.squaredNorm();
}

} // namespace emsense
