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

#ifndef EMSENSE_INVERT_HPP
#define EMSENSE_INVERT_HPP

#include "emsense/emfwd.hpp"
#include "emsense/scene.hpp"
#include "emsense/sensing.hpp"
#include "emsense/types.hpp"

#include <functional>
#include <vector>

namespace emsense {

// Reported NMSE for an exact reconstruction.
constexpr double kNmseFloorDb = -300.0;

// sum_m sqrt(s_m^2 + s_{m+M}^2). Throws ConfigError for odd length.
double mixed_norm(const VecR &s);

// Proximal map of tau * ||.||_{1,2} + indicator(s >= 0), group by group:
// u = max(v_g, 0), out_g = u * max(1 - tau / ||u||, 0).
VecR group_prox(const VecR &v, double tau);

// Data term 1/2 ||z - E s||^2 = 1/2 s^T Q s - b^T s + 1/2 ||z||^2 in Gram form.
// residual_norm evaluates ||z - E s|| from E itself so that small residuals do not
// suffer from cancellation.
struct LeastSquaresModel {
    MatR gram;
    VecR correlation;
    double data_norm2 = 0.0;
    std::function<double(const VecR &)> residual_norm;

    Eigen::Index unknowns() const { return correlation.size(); }
};

LeastSquaresModel dense_model(const MatR &e, const VecR &z);
LeastSquaresModel sensing_model(const SensingSystem &system, const ObservationSet &obs);

struct SolverOptions {
    double discrepancy_band = 0.05; // accept residual in [(1 - band) eps, (1 + band) eps]
    int max_inner = 5000;
    double inner_tol = 1e-8;     // relative objective change
    int max_tau_steps = 80;
    double tau_floor_ratio = 1e-14; // smallest tau relative to the zero-solution threshold
};

struct SolverReport {
    int iterations = 0; // inner iterations summed over all tau values
    int tau_steps = 0;
    double tau = 0.0;
    double residual = 0.0;
    double mixed_norm = 0.0;
    double discrepancy_target = 0.0;
    bool converged = false;
    std::vector<double> objective_trace; // inner objective of the final tau solve
};

struct BpdnResult {
    VecR s;
    SolverReport report;
};

// Accelerated proximal gradient with restart-on-increase for
//   min 1/2 ||z - E s||^2 + tau ||s||_{1,2}  s.t. s >= 0
// at fixed tau. Every iterate is nonnegative and the recorded objective never increases.
struct PenalizedResult {
    VecR s;
    int iterations = 0;
    std::vector<double> objective;
};
PenalizedResult solve_penalized(const LeastSquaresModel &model, double tau, double lipschitz, const VecR &start,
                                const SolverOptions &opts = {});

// Largest eigenvalue of the Gram matrix by power iteration (with a small safety margin).
double gram_lipschitz(const MatR &gram);

// Constrained problem min ||s||_{1,2} s.t. ||z - E s|| <= eps, s >= 0, realized by
// tuning tau on a log scale until the residual lands in the discrepancy band.
BpdnResult solve_bpdn(const MatR &e, const VecR &z, double eps, const SolverOptions &opts = {});
BpdnResult solve_bpdn(const LeastSquaresModel &model, double eps, const SolverOptions &opts = {},
                      const VecR *warm_start = nullptr);

// s = [eps_r - 1; sigma / (omega_c eps0)].
VecR property_vector(const ContrastMap &map, double omega_c);
ContrastMap contrast_from_property(const VecR &s, int grid_side, double omega_c);
// chi_k = s_eps + j (omega_c / omega_k) s_sigma.
VecC contrast_from_property(const VecR &s, double omega_c, double omega_k);

SensingSystem born_initial_system(const ChannelSet &channels, const std::vector<MatC> &beamformers);

struct ReconstructOptions {
    int max_outer = 10;
    double tol_outer = 1e-3;
    int divergence_patience = 3;
    SolverOptions solver;
};

struct OuterRecord {
    int outer_iter = 0;
    double tau = 0.0;
    double residual = 0.0;  // linearized residual returned by the solver
    double mixed_norm = 0.0;
    double misfit = 0.0;    // nonlinear data misfit of the incoming iterate (NaN for the Born step)
    double nmse_db = 0.0;   // NaN when no truth is supplied
    double step = 0.0;      // ||s^{n+1} - s^n|| / ||s^n||
    SolverReport report;
};

struct Reconstruction {
    ContrastMap map;
    VecR s;
    VecR s_born;
    std::vector<OuterRecord> trace;
    bool converged = false;
};

// Born initialization followed by the linearize-and-solve loop: rebuild D_k from the
// current contrast, solve the BPDN problem, stop on a small relative step or after
// max_outer updates. Returns the iterate with the smallest nonlinear misfit if the
// misfit increases divergence_patience times in a row or the resolvent turns singular.
Reconstruction iterative_reconstruct(const ChannelSet &channels, const std::vector<MatC> &beamformers,
                                     const ObservationSet &obs, double eps, const ReconstructOptions &opts = {},
                                     const ContrastMap *truth = nullptr);

// 10 log10 of the relative error of (eps_r, sigma / (omega_c eps0)); kNmseFloorDb for an exact match.
double nmse_db(const ContrastMap &truth, const ContrastMap &estimate, double omega_c);

void write_solver_trace_csv(const std::string &path, const Reconstruction &rec);

} // namespace emsense

#endif
