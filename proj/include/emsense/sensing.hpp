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

#ifndef EMSENSE_SENSING_HPP
#define EMSENSE_SENSING_HPP

#include "emsense/emfwd.hpp"
#include "emsense/types.hpp"

#include <vector>

namespace emsense {

// Factored sensing matrix of one subcarrier. D_k is the column-wise Khatri-Rao product
// of the excitation A_k = W_k^T H1_k^T (I - G_k diag chi)^{-T} (I x M) and H2_k
// (N_r x M); its row index is pilot * N_r + rx, matching vec(Y_k).
struct CarrierSensing {
    MatC excitation;
    MatC h2;
    double ratio = 1.0; // omega_c / omega_k

    int pixels() const { return static_cast<int>(h2.cols()); }
    Eigen::Index rows() const { return excitation.rows() * h2.rows(); }

    MatC matrix() const;
    VecC apply(const VecC &c) const;         // D_k c
    VecC adjoint_apply(const VecC &y) const; // D_k^H y
    // D_k^H D_k = (A^H A) o (H2^H H2), elementwise product.
    MatC gram() const;
};

// Excitation and H2 of carrier k for contrast chi (chi = 0 gives the Born system).
CarrierSensing carrier_sensing(const ChannelSet &channels, int k, const MatC &w, const VecC &chi);

// Materialized D_k.
MatC sensing_matrix(const ChannelSet &channels, int k, const MatC &w, const VecC &chi);
MatC khatri_rao(const MatC &a, const MatC &b);

// Real-valued E_k = [[Re D, -r Im D], [Im D, r Re D]] with r = omega_c / omega_k.
MatR real_block(const MatC &d, double ratio);
// Row-stack of the real blocks in subcarrier order. Throws ConfigError on shape mismatch.
MatR stack_real(const std::vector<MatC> &d, const std::vector<double> &omega, double omega_c);

struct SensingSystem {
    std::vector<CarrierSensing> carriers;
    double omega_c = 0.0;

    int pixels() const { return carriers.empty() ? 0 : carriers.front().pixels(); }
    Eigen::Index rows() const;

    // Materialized stacked matrix E~ ((2 I N_r K) x 2M).
    MatR stacked() const;
    // E~^T E~ assembled as sum_k E_k^T E_k from the complex Grams D_k^H D_k.
    MatR gram() const;
    // E~^T z~ for the stacked observation.
    VecR correlate(const ObservationSet &obs) const;
    // E~ s, returned per carrier as complex D_k (s_eps + j r_k s_sigma).
    std::vector<VecC> apply(const VecR &s) const;
    // ||z~ - E~ s||_2 evaluated directly (no Gram cancellation).
    double residual_norm(const ObservationSet &obs, const VecR &s) const;
};

// Builds the per-carrier factors for contrast chi_k on every subcarrier.
SensingSystem build_sensing_system(const ChannelSet &channels, const std::vector<MatC> &beamformers,
                                   const std::vector<VecC> &chi_per_carrier);

// Largest normalized inner product between distinct columns. Throws ConfigError if a
// column is zero.
double mutual_coherence(const MatR &a);
// Same statistic for a complex matrix, |a_i^H a_j| / (||a_i|| ||a_j||).
double mutual_coherence(const MatC &a);
// From a precomputed real Gram matrix.
double mutual_coherence_from_gram(const MatR &gram);

// Effective degrees of freedom (tr R)^2 / ||R||_F^2 of R = H1 H1^H, from the singular
// values of H1. Throws ConfigError for an all-zero H1.
double edof(const MatC &h1);

} // namespace emsense

#endif
