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

#include "emsense/beamform.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <numeric>
#include <random>

namespace emsense {

MatR gram_target(const MatC &dp) { return (dp.adjoint() * dp).cwiseAbs(); }

BeamformDesign design_beamformer(const MatC &dp, int pilots, double power_share) {
    if (pilots < 1)
        throw ConfigError("beamform: pilot count must be >= 1");
    if (!(power_share > 0.0))
        throw ConfigError("beamform: power share must be positive");
    BeamformDesign out;
    out.power_share = power_share;
    out.target = gram_target(dp);

    Eigen::BDCSVD<MatC> svd(dp, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VecR &sv = svd.singularValues();
    int r = 0;
    if (sv.size() > 0 && sv[0] > 0.0)
        while (r < sv.size() && sv[r] > kRankTolerance * sv[0])
            ++r;
    if (r == 0)
        throw ConfigError("beamform: D_p has rank zero");
    out.rank = r;
    const MatC u = svd.matrixU().leftCols(r);
    const MatC v = svd.matrixV().leftCols(r);
    const VecR s = sv.head(r);

    MatC z = v.adjoint() * out.target.cast<cplx>() * v;
    z = 0.5 * (z + z.adjoint()).eval();
    out.z = z;

    Eigen::SelfAdjointEigenSolver<MatC> eig(z);
    if (eig.info() != Eigen::Success)
        throw NumericalError("beamform: eigendecomposition of the projected target failed");
    // Descending eigenvalues; ties keep the lower original index first.
    std::vector<int> order(r);
    std::iota(order.begin(), order.end(), 0);
    const VecR &lam = eig.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return lam[a] > lam[b]; });
    int nonneg = 0;
    for (int i = 0; i < r; ++i)
        if (lam[i] >= 0.0)
            ++nonneg;
    out.nonnegative_eigs = nonneg;
    const int keep = std::min(pilots, nonneg);

    out.psi = MatC::Zero(pilots, r);
    out.gram_psi = MatC::Zero(r, r);
    for (int i = 0; i < keep; ++i) {
        const double l = lam[order[i]];
        const VecC q = eig.eigenvectors().col(order[i]);
        out.psi.row(i) = std::sqrt(l) * q.adjoint();
        out.gram_psi += l * q * q.adjoint();
    }

    out.w_unnormalized = out.psi * s.cwiseInverse().asDiagonal() * u.adjoint();
    const double fro = out.w_unnormalized.norm();
    if (!(fro > 0.0))
        throw NumericalError("beamform: designed beamformer is zero (no nonnegative eigenvalue)");
    const MatC wd = out.w_unnormalized * dp;
    out.gram_error = (wd.adjoint() * wd - out.target.cast<cplx>()).norm();
    out.w_hat = std::sqrt(power_share) * out.w_unnormalized.transpose() / fro;
    return out;
}

std::vector<BeamformDesign> beamformer_for_all_subcarriers(const ChannelSet &channels, int pilots,
                                                           double power_budget) {
    const int n_k = channels.n_subcarriers();
    std::vector<BeamformDesign> designs;
    designs.reserve(n_k);
    for (const auto &c : channels.carriers)
        designs.push_back(design_beamformer(c.h1.transpose(), pilots, power_budget / n_k));
    return designs;
}

std::vector<MatC> transmit_matrices(const std::vector<BeamformDesign> &designs) {
    std::vector<MatC> w;
    w.reserve(designs.size());
    for (const auto &d : designs)
        w.push_back(d.w_hat);
    return w;
}

MatC random_beamformer(int n_tx, int pilots, double power_share, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    MatC w(n_tx, pilots);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            const double re = normal(rng);
            w(i, j) = cplx(re, normal(rng));
        }
    return std::sqrt(power_share) * w / w.norm();
}

} // namespace emsense
