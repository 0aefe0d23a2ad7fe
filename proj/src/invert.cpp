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

#include "emsense/invert.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>

namespace emsense {

namespace {

Eigen::Index half_length(const VecR &s) {
    if (s.size() % 2 != 0) {
        throw ConfigError("property vector must have even length, got " + std::to_string(s.size()));
    }
    return s.size() / 2;
}

// f(a) - f(b) for f(s) = 1/2 ||z - E s||^2, without the cancellation of evaluating f itself.
double quadratic_change(const LeastSquaresModel &model, const VecR &a, const VecR &qa, const VecR &b,
                        const VecR &qb) {
    return (a - b).dot(0.5 * (qa + qb) - model.correlation);
}

// Q s, skipping zero groups of s (iterates are usually sparse).
void gram_apply(const MatR &q, const VecR &s, VecR &out) {
    const Eigen::Index m = s.size() / 2;
    out.setZero(s.size());
    for (Eigen::Index i = 0; i < m; ++i) {
        if (s[i] != 0.0) {
            out.noalias() += q.col(i) * s[i];
        }
        if (s[i + m] != 0.0) {
            out.noalias() += q.col(i + m) * s[i + m];
        }
    }
}

double zero_threshold_tau(const LeastSquaresModel &model) {
    const VecR &b = model.correlation;
    const Eigen::Index m = b.size() / 2;
    double tau = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        tau = std::max(tau, std::hypot(std::max(b[i], 0.0), std::max(b[i + m], 0.0)));
    }
    return tau;
}

} // namespace

double mixed_norm(const VecR &s) {
    const Eigen::Index m = half_length(s);
    double total = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        total += std::hypot(s[i], s[i + m]);
    }
    return total;
}

VecR group_prox(const VecR &v, double tau) {
    const Eigen::Index m = half_length(v);
    VecR out = VecR::Zero(v.size());
    for (Eigen::Index i = 0; i < m; ++i) {
        const double a = std::max(v[i], 0.0);
        const double b = std::max(v[i + m], 0.0);
        const double norm = std::hypot(a, b);
        if (norm > tau) {
            const double scale = 1.0 - tau / norm;
            out[i] = a * scale;
            out[i + m] = b * scale;
        }
    }
    return out;
}

LeastSquaresModel dense_model(const MatR &e, const VecR &z) {
    if (e.rows() != z.size()) {
        throw ConfigError("sensing matrix rows do not match observation length");
    }
    half_length(VecR::Zero(e.cols()));
    if (!e.allFinite() || !z.allFinite()) {
        throw ConfigError("sensing matrix and observation must be finite");
    }
    LeastSquaresModel model;
    model.gram = e.transpose() * e;
    model.correlation = e.transpose() * z;
    model.data_norm2 = z.squaredNorm();
    model.residual_norm = [e, z](const VecR &s) { return (z - e * s).norm(); };
    return model;
}

LeastSquaresModel sensing_model(const SensingSystem &system, const ObservationSet &obs) {
    LeastSquaresModel model;
    model.gram = system.gram();
    model.correlation = system.correlate(obs);
    model.data_norm2 = obs.stacked().squaredNorm();
    if (!model.gram.allFinite() || !model.correlation.allFinite() || !std::isfinite(model.data_norm2)) {
        throw ConfigError("sensing system and observation must be finite");
    }
    model.residual_norm = [system, obs](const VecR &s) { return system.residual_norm(obs, s); };
    return model;
}

double gram_lipschitz(const MatR &gram) {
    const Eigen::Index n = gram.rows();
    if (n == 0) {
        return 1.0;
    }
    VecR v = VecR::Ones(n) / std::sqrt(static_cast<double>(n));
    double lambda = 0.0;
    for (int it = 0; it < 500; ++it) {
        VecR w = gram * v;
        const double norm = w.norm();
        if (norm == 0.0) {
            break;
        }
        const double next = v.dot(w);
        v = w / norm;
        if (std::abs(next - lambda) <= 1e-10 * std::abs(next)) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    // Power iteration approaches from below; a margin keeps the step size safe.
    return lambda > 0.0 ? 1.02 * lambda : 1.0;
}

PenalizedResult solve_penalized(const LeastSquaresModel &model, double tau, double lipschitz, const VecR &start,
                                const SolverOptions &opts) {
    const MatR &q = model.gram;
    const VecR &b = model.correlation;
    const double step = 1.0 / lipschitz;

    PenalizedResult out;
    VecR x = group_prox(start, 0.0);
    VecR qx;
    gram_apply(q, x, qx);
    const double r0 = model.residual_norm(x);
    double fx = 0.5 * r0 * r0 + tau * mixed_norm(x);
    out.objective.push_back(fx);

    VecR y = x;
    VecR qy = qx;
    double t = 1.0;
    VecR x_new, qx_new;
    auto change_from_x = [&](const VecR &xn, const VecR &qxn) {
        return quadratic_change(model, xn, qxn, x, qx) + tau * (mixed_norm(xn) - mixed_norm(x));
    };
    for (int it = 0; it < opts.max_inner; ++it) {
        x_new = group_prox(y - step * (qy - b), tau * step);
        gram_apply(q, x_new, qx_new);
        double delta = change_from_x(x_new, qx_new);
        if (delta > 0.0) {
            // Restart: plain proximal gradient step from x, which cannot increase the objective.
            t = 1.0;
            x_new = group_prox(x - step * (qx - b), tau * step);
            gram_apply(q, x_new, qx_new);
            delta = change_from_x(x_new, qx_new);
            if (delta > 0.0) {
                // Rounding-level increase: keep the current point.
                out.iterations = it + 1;
                break;
            }
        }
        const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double momentum = (t - 1.0) / t_new;
        y = x_new + momentum * (x_new - x);
        qy = qx_new + momentum * (qx_new - qx);

        const double moved = (x_new - x).norm();
        x.swap(x_new);
        qx.swap(qx_new);
        fx = std::max(fx + delta, 0.0);
        t = t_new;
        out.objective.push_back(fx);
        out.iterations = it + 1;
        if (-delta <= opts.inner_tol * std::max(fx, std::numeric_limits<double>::min()) &&
            moved <= std::sqrt(opts.inner_tol) * std::max(x.norm(), std::numeric_limits<double>::min())) {
            break;
        }
    }
    out.s = std::move(x);
    return out;
}

BpdnResult solve_bpdn(const MatR &e, const VecR &z, double eps, const SolverOptions &opts) {
    return solve_bpdn(dense_model(e, z), eps, opts);
}

BpdnResult solve_bpdn(const LeastSquaresModel &model, double eps, const SolverOptions &opts, const VecR *warm_start) {
    if (!(eps >= 0.0) || !std::isfinite(eps)) {
        throw ConfigError("discrepancy level must be finite and nonnegative");
    }
    if (model.unknowns() % 2 != 0) {
        throw ConfigError("property vector must have even length");
    }
    BpdnResult result;
    result.report.discrepancy_target = eps;
    const Eigen::Index n = model.unknowns();
    const double data_norm = std::sqrt(model.data_norm2);
    if (data_norm <= eps) {
        result.s = VecR::Zero(n);
        result.report.residual = data_norm;
        result.report.converged = true;
        return result;
    }

    const double tau_max = zero_threshold_tau(model);
    const double lower = (1.0 - opts.discrepancy_band) * eps;
    const double upper = (1.0 + opts.discrepancy_band) * eps;
    const double lipschitz = gram_lipschitz(model.gram);
    if (tau_max <= 0.0) {
        // No nonnegative direction decreases the residual.
        result.s = VecR::Zero(n);
        result.report.residual = data_norm;
        return result;
    }

    struct Sample {
        double tau;
        VecR s;
        double residual;
        std::vector<double> objective;
    };
    auto evaluate = [&](double tau, const VecR &start) {
        PenalizedResult pr = solve_penalized(model, tau, lipschitz, start, opts);
        result.report.iterations += pr.iterations;
        ++result.report.tau_steps;
        const double r = model.residual_norm(pr.s);
        return Sample{tau, std::move(pr.s), r, std::move(pr.objective)};
    };

    // Descend from the zero-solution threshold in decades (residual grows with tau),
    // then bisect log(tau) inside the bracketing decade.
    const double tau_floor = tau_max * opts.tau_floor_ratio;
    VecR start = (warm_start && warm_start->size() == n) ? *warm_start : VecR::Zero(n);
    Sample high{tau_max, VecR::Zero(n), data_norm, {}}; // residual above band
    std::optional<Sample> low;                           // residual at or below upper
    Sample current = evaluate(tau_max * 0.5, start);
    while (true) {
        if (current.residual <= upper) {
            low = std::move(current);
            break;
        }
        if (current.tau <= tau_floor || result.report.tau_steps >= opts.max_tau_steps) {
            break;
        }
        VecR next_start = current.s;
        const double next_tau = std::max(current.tau * 0.1, tau_floor);
        high = std::move(current);
        current = evaluate(next_tau, next_start);
    }
    if (!low) {
        // Discrepancy level unreachable: report the smallest-residual point.
        result.s = std::move(current.s);
        result.report.tau = current.tau;
        result.report.residual = current.residual;
        result.report.mixed_norm = mixed_norm(result.s);
        result.report.objective_trace = std::move(current.objective);
        return result;
    }
    bool in_band = low->residual >= lower;
    while (!in_band && result.report.tau_steps < opts.max_tau_steps) {
        const double tau_mid = std::sqrt(low->tau * high.tau);
        if (tau_mid <= low->tau || tau_mid >= high.tau) {
            break;
        }
        Sample mid = evaluate(tau_mid, low->s);
        if (mid.residual > upper) {
            high = std::move(mid);
        } else {
            low = std::move(mid);
            in_band = low->residual >= lower;
        }
    }
    result.s = std::move(low->s);
    result.report.tau = low->tau;
    result.report.residual = low->residual;
    result.report.mixed_norm = mixed_norm(result.s);
    result.report.objective_trace = std::move(low->objective);
    result.report.converged = in_band;
    return result;
}

VecR property_vector(const ContrastMap &map, double omega_c) {
    const Eigen::Index m = map.size();
    VecR s(2 * m);
    s.head(m) = map.eps_r.array() - 1.0;
    s.tail(m) = map.sigma / (omega_c * kVacuumPermittivity);
    return s;
}

ContrastMap contrast_from_property(const VecR &s, int grid_side, double omega_c) {
    const Eigen::Index m = half_length(s);
    if (m != static_cast<Eigen::Index>(grid_side) * grid_side) {
        throw ConfigError("property vector length does not match the grid");
    }
    ContrastMap map;
    map.grid_side = grid_side;
    map.eps_r = s.head(m).array() + 1.0;
    map.sigma = s.tail(m) * (omega_c * kVacuumPermittivity);
    return map;
}

VecC contrast_from_property(const VecR &s, double omega_c, double omega_k) {
    const Eigen::Index m = half_length(s);
    const double ratio = omega_c / omega_k;
    VecC chi(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        chi[i] = cplx(s[i], ratio * s[i + m]);
    }
    return chi;
}

SensingSystem born_initial_system(const ChannelSet &channels, const std::vector<MatC> &beamformers) {
    std::vector<VecC> zero(channels.carriers.size(), VecC::Zero(channels.pixels()));
    return build_sensing_system(channels, beamformers, zero);
}

namespace {

std::vector<VecC> carrier_contrasts(const ChannelSet &channels, const VecR &s) {
    std::vector<VecC> chi;
    chi.reserve(channels.carriers.size());
    for (const auto &c : channels.carriers) {
        chi.push_back(contrast_from_property(s, channels.omega_c, c.omega));
    }
    return chi;
}

double relative_step(const VecR &next, const VecR &prev) {
    const double base = prev.norm();
    const double diff = (next - prev).norm();
    if (base == 0.0) {
        return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return diff / base;
}

} // namespace

Reconstruction iterative_reconstruct(const ChannelSet &channels, const std::vector<MatC> &beamformers,
                                     const ObservationSet &obs, double eps, const ReconstructOptions &opts,
                                     const ContrastMap *truth) {
    const int side = channels.grid.side;
    const double omega_c = channels.omega_c;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto score = [&](const VecR &s) {
        return truth ? nmse_db(*truth, contrast_from_property(s, side, omega_c), omega_c) : nan;
    };

    Reconstruction rec;
    const SensingSystem born = born_initial_system(channels, beamformers);
    BpdnResult first = solve_bpdn(sensing_model(born, obs), eps, opts.solver);
    rec.trace.push_back({0, first.report.tau, first.report.residual, first.report.mixed_norm, nan, score(first.s),
                         0.0, first.report});
    rec.s_born = first.s;

    VecR s = first.s;
    VecR best = s;
    double best_misfit = std::numeric_limits<double>::infinity();
    int increases = 0;
    double last_misfit = std::numeric_limits<double>::infinity();
    bool diverged = false;
    for (int n = 1; n <= opts.max_outer; ++n) {
        SensingSystem system;
        try {
            system = build_sensing_system(channels, beamformers, carrier_contrasts(channels, s));
        } catch (const NumericalError &) {
            diverged = true;
            break;
        }
        LeastSquaresModel model = sensing_model(system, obs);
        // D(chi) chi is the exact forward response, so this is the nonlinear misfit of s.
        const double misfit = model.residual_norm(s);
        if (misfit < best_misfit) {
            best_misfit = misfit;
            best = s;
        }
        increases = misfit > last_misfit ? increases + 1 : 0;
        last_misfit = misfit;
        if (increases >= opts.divergence_patience) {
            diverged = true;
            break;
        }
        BpdnResult next = solve_bpdn(model, eps, opts.solver, &s);
        const double step = relative_step(next.s, s);
        s = std::move(next.s);
        rec.trace.push_back({n, next.report.tau, next.report.residual, next.report.mixed_norm, misfit, score(s), step,
                             next.report});
        if (step < opts.tol_outer) {
            rec.converged = true;
            break;
        }
    }
    rec.s = diverged ? best : s;
    rec.map = contrast_from_property(rec.s, side, omega_c);
    return rec;
}

double nmse_db(const ContrastMap &truth, const ContrastMap &estimate, double omega_c) {
    if (truth.size() != estimate.size()) {
        throw ConfigError("contrast maps differ in size");
    }
    const double scale = 1.0 / (omega_c * kVacuumPermittivity);
    const double num = (truth.eps_r - estimate.eps_r).squaredNorm() +
                       (truth.sigma - estimate.sigma).squaredNorm() * scale * scale;
    const double den = truth.eps_r.squaredNorm() + truth.sigma.squaredNorm() * scale * scale;
    if (num == 0.0) {
        return kNmseFloorDb;
    }
    return std::max(10.0 * std::log10(num / den), kNmseFloorDb);
}

void write_solver_trace_csv(const std::string &path, const Reconstruction &rec) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot open " + path + " for writing");
    }
    out << "outer_iter,tau,residual,mixed_norm,nmse_vs_truth_if_known\n" << std::setprecision(17);
    for (const auto &r : rec.trace) {
        out << r.outer_iter << ',' << r.tau << ',' << r.residual << ',' << r.mixed_norm << ',';
        if (!std::isnan(r.nmse_db)) {
            out << r.nmse_db;
        }
        out << '\n';
    }
}

} // namespace emsense
