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

#ifndef EMSENSE_BEAMFORM_HPP
#define EMSENSE_BEAMFORM_HPP

#include "emsense/emfwd.hpp"
#include "emsense/types.hpp"

#include <cstdint>
#include <vector>

namespace emsense {

// Relative singular-value cutoff for the compact SVD of D_p.
constexpr double kRankTolerance = 1e-10;

// T_ij = |D_p[:,i]^H D_p[:,j]|.
MatR gram_target(const MatC &dp);

struct BeamformDesign {
    MatC w_hat;     // N_t x I transmit beamformer, w_hat = (W^u)^T scaled to the power share
    MatC w_unnormalized; // I x N_t, the row-stacked W^u
    MatR target;    // M x M
    MatC z;         // r x r projected target V^H T V
    MatC gram_psi;  // r x r rank-<=I PSD approximation of Z
    MatC psi;       // I x r, psi^H psi = gram_psi
    double gram_error = 0.0; // ||(W^u D_p)^H (W^u D_p) - T||_F
    double power_share = 0.0;
    int rank = 0;            // numerical rank r of D_p
    int nonnegative_eigs = 0; // z
};

// Gram-target beamformer for D_p = H1^T (N_t x M):
//   D_p = U S V^H (compact), Z = V^H T V = Q L Q^H,
//   G_psi = sum_{i <= min(I, z)} l_i q_i q_i^H, psi = L^{1/2} Q^H (zero rows if I > z),
//   W^u = psi S^{-1} U^H, w_hat = sqrt(P_share) (W^u)^T / ||W^u||_F.
// Throws ConfigError for I < 1 or rank(D_p) = 0.
BeamformDesign design_beamformer(const MatC &dp, int pilots, double power_share);

// One design per subcarrier with P_share = P / K.
std::vector<BeamformDesign> beamformer_for_all_subcarriers(const ChannelSet &channels, int pilots,
                                                           double power_budget);
std::vector<MatC> transmit_matrices(const std::vector<BeamformDesign> &designs);

// i.i.d. complex Gaussian N_t x I beamformer scaled to tr(W^H W) = power_share.
MatC random_beamformer(int n_tx, int pilots, double power_share, std::uint64_t seed);

} // namespace emsense

#endif
