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

#ifndef EMSENSE_EMFWD_HPP
#define EMSENSE_EMFWD_HPP

#include "emsense/scene.hpp"
#include "emsense/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace emsense {

// Largest k*a for which the pulse-basis discretization is accepted.
constexpr double kMaxCellElectricalRadius = 2.0;
// Systems (I - G diag chi) with a larger 1-norm condition estimate are rejected.
constexpr double kMaxConditionEstimate = 1e12;

inline double wavenumber(double frequency) { return 2.0 * kPi * frequency / kSpeedOfLight; }

// Integral of k^2 (j/4) H0^(2)(k|r - r'|) over a disk of radius a centered at r:
// (j pi k a / 2) H1^(2)(k a) + 1.
cplx green_self_term(double k, double a);
// Disk-integrated weight of an off-diagonal cell: (j pi k a / 2) J1(k a). The coupling
// is this weight times H0^(2)(k * distance).
cplx cell_coupling_weight(double k, double a);
// Throws ConfigError when k*a >= kMaxCellElectricalRadius.
void check_discretization(double k, double a);

// Discretized kernel k^2 G over D with pulse basis, point matching, and the
// equivalent-disk (Richmond) cell integration. The diagonal is green_self_term and
// the matrix is used as-is in (I - G diag chi).
MatC green_matrix(const GridGeometry &grid, double k);
// Selected rows/columns of green_matrix without forming the full matrix.
MatC green_block(const GridGeometry &grid, double k, const std::vector<int> &rows, const std::vector<int> &cols);

struct RadiationOperators {
    MatC h1; // M x N_t, field at each cell due to a unit line source at each tx antenna
    MatC h2; // N_r x M, field at each rx antenna due to a unit contrast source in each cell
};

// Throws ConfigError if an antenna lies inside the domain.
RadiationOperators radiation_operators(const GridGeometry &grid, const ArrayGeometry &arrays, double k);

// (I - G diag chi)^{-1} E_inc. Only the support of chi couples, so the dense LU is
// taken on the support block and the remaining rows are filled in by one product.
// Throws NumericalError when the condition estimate exceeds kMaxConditionEstimate.
MatC ls_total_field(const MatC &green, const VecC &chi, const MatC &e_inc);

// X = diag(chi) (I - G diag chi)^{-1}. Rows outside the support of chi are zero.
MatC scattering_operator(const MatC &green, const VecC &chi);

struct SubcarrierChannel {
    int index = 0;
    double frequency = 0.0; // [Hz]
    double omega = 0.0;     // [rad/s]
    double wavenumber = 0.0;
    MatC green; // M x M, empty when the channel set was built without it
    MatC h1;    // M x N_t
    MatC h2;    // N_r x M
};

enum class GreenStorage { Dense, OnDemand };

struct ChannelSet {
    GridGeometry grid;
    ArrayGeometry arrays;
    double omega_c = 0.0;
    std::vector<SubcarrierChannel> carriers;

    int n_subcarriers() const { return static_cast<int>(carriers.size()); }
    int n_tx() const { return static_cast<int>(arrays.tx.size()); }
    int n_rx() const { return static_cast<int>(arrays.rx.size()); }
    int pixels() const { return grid.size(); }
};

ChannelSet build_channels(const ScenarioConfig &config, const GridGeometry &grid,
                          GreenStorage storage = GreenStorage::Dense);

// Total field (I - G_k diag chi)^{-1} E_inc on all cells, using the stored Green's
// matrix or assembling only the blocks touched by the support of chi.
MatC total_field(const ChannelSet &channels, int k, const VecC &chi, const MatC &e_inc);

// Noiseless received pilots H2 diag(chi) (I - G diag chi)^{-1} H1 W.
MatC noiseless_pilots(const ChannelSet &channels, int k, const VecC &chi, const MatC &w);

struct PilotObservation {
    MatC y;                      // N_r x I
    double noise_variance = 0.0; // sigma_k^2 of the complex noise
    double signal_power = 0.0;   // ||H_k W_k||_F^2 / (I N_r)

    // vec(Y), column-major.
    VecC vectorized() const;
    // [Re(y); Im(y)].
    VecR stacked_real() const;
};

struct ObservationSet {
    std::vector<PilotObservation> carriers;

    // Row-stack of z_1..z_K.
    VecR stacked() const;
    // Expected l2 norm of the real-stacked noise: sqrt(sum_k 2 I N_r sigma_k^2 / 2).
    double noise_norm() const;
};

ObservationSet noiseless_observation(const ChannelSet &channels, const ContrastMap &truth,
                                     const std::vector<MatC> &beamformers);

// Adds circularly-symmetric complex Gaussian noise per carrier with variance chosen from
// snr_db against the per-sample signal power, or noise_variance when given (> 0).
// Each carrier draws from its own stream derived from (seed, k).
// snr_db = +inf returns the input unchanged. Throws NumericalError for zero signal power
// with finite SNR and no explicit variance.
ObservationSet add_noise(const ObservationSet &clean, double snr_db, std::uint64_t seed,
                         double noise_variance = 0.0);

ObservationSet synthesize_observation(const ChannelSet &channels, const ContrastMap &truth,
                                      const std::vector<MatC> &beamformers, double snr_db, std::uint64_t seed);

// One file y_<k>.csv per carrier (k one-based) with columns rx,pilot,re,im.
void write_observation_csv(const std::string &dir, const ObservationSet &obs);
ObservationSet read_observation_csv(const std::string &dir, int n_subcarriers);

// Derives an independent 64-bit stream seed from a master seed and a counter.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter);

} // namespace emsense

#endif
