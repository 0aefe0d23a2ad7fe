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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "emsense/harness.hpp"
#include "emsense/invert.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

using namespace emsense;

namespace {

struct SparseFixture {
    MatR e;
    VecR s_true;
    VecR z;
    std::vector<int> groups;
};

// 200 x 64 real matrix from complex Gaussian blocks, M = 32 groups, 4 active.
SparseFixture sparse_fixture(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    MatC d(100, 32);
    for (Eigen::Index j = 0; j < d.cols(); ++j)
        for (Eigen::Index i = 0; i < d.rows(); ++i) {
            const double re = n(rng);
            d(i, j) = cplx(re, n(rng)) / std::sqrt(200.0);
        }
    SparseFixture f;
    f.e = stack_real({d}, {1.0}, 1.0);
    f.s_true = VecR::Zero(64);
    std::vector<int> all(32);
    for (int i = 0; i < 32; ++i)
        all[i] = i;
    std::shuffle(all.begin(), all.end(), rng);
    f.groups.assign(all.begin(), all.begin() + 4);
    std::sort(f.groups.begin(), f.groups.end());
    for (int g : f.groups) {
        f.s_true[g] = u(rng);
        f.s_true[g + 32] = 0.5 * u(rng);
    }
    f.z = f.e * f.s_true;
    return f;
}

// Exhaustive search over all C(32, 4) joint supports for the nonnegative-feasible minimum residual.
VecR exhaustive_support_oracle(const MatR &e, const VecR &z) {
    double best = std::numeric_limits<double>::infinity();
    VecR best_s = VecR::Zero(e.cols());
    for (int a = 0; a < 32; ++a)
        for (int b = a + 1; b < 32; ++b)
            for (int c = b + 1; c < 32; ++c)
                for (int d = c + 1; d < 32; ++d) {
                    const std::vector<int> cols = {a, b, c, d, a + 32, b + 32, c + 32, d + 32};
                    const VecR s = oracle::support_least_squares(e, z, cols);
                    const double r = (z - e * s).norm();
                    if (r < best) {
                        best = r;
                        best_s = s;
                    }
                }
    return best_s;
}

Config desk_config() { return load_config(std::string(EMSENSE_SOURCE_DIR) + "/configs/desk.json"); }

} // namespace

TEST_CASE("mixed norm") {
    CHECK(mixed_norm(VecR::Zero(6)) == 0.0);
    CHECK(mixed_norm((VecR(2) << 3, 4).finished()) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(mixed_norm((VecR(4) << 1, 0, 0, 1).finished()) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK_THROWS_AS(mixed_norm(VecR::Zero(3)), ConfigError);
}

TEST_CASE("group prox") {
    const VecR v = (VecR(4) << 0.5, 2.0, 1.0, 0.25).finished();
    CHECK((group_prox(v, 0.0) - v).norm() == 0.0);
    CHECK(group_prox((VecR(2) << -1, -2).finished(), 0.3).norm() == 0.0);
    const VecR p = group_prox((VecR(2) << 3, 4).finished(), 2.5);
    CHECK(p[0] == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(2.0).epsilon(1e-15));

    SUBCASE("grid-search oracle never beats the prox") {
        std::mt19937_64 rng(99);
        std::uniform_real_distribution<double> u(-3.0, 3.0), ut(0.0, 2.0);
        auto objective = [](double x0, double x1, double v0, double v1, double tau) {
            return 0.5 * ((x0 - v0) * (x0 - v0) + (x1 - v1) * (x1 - v1)) + tau * std::hypot(x0, x1);
        };
        int violations = 0;
        for (int t = 0; t < 10000; ++t) {
            const double v0 = u(rng), v1 = u(rng), tau = ut(rng);
            const VecR x = group_prox((VecR(2) << v0, v1).finished(), tau);
            CHECK_FALSE((x[0] < 0.0 || x[1] < 0.0));
            const double f = objective(x[0], x[1], v0, v1, tau);
            const double hi0 = std::max(v0, 0.0), hi1 = std::max(v1, 0.0);
            const int n = 60;
            for (int i = 0; i <= n; ++i)
                for (int j = 0; j <= n; ++j)
                    if (objective(hi0 * i / n, hi1 * j / n, v0, v1, tau) < f - 1e-9)
                        ++violations;
        }
        CHECK(violations == 0);
    }
}

TEST_CASE("BPDN trivial solutions") {
    const SparseFixture f = sparse_fixture(1);
    const BpdnResult zero = solve_bpdn(f.e, VecR::Zero(200), 0.0);
    CHECK(zero.s.norm() == 0.0);
    CHECK(zero.report.converged);
    const BpdnResult large = solve_bpdn(f.e, f.z, 1.01 * f.z.norm());
    CHECK(large.s.norm() == 0.0);
    CHECK(large.report.converged);
    VecR bad = f.z;
    bad[3] = std::nan("");
    CHECK_THROWS_AS(solve_bpdn(f.e, bad, 1.0), ConfigError);
    CHECK_THROWS_AS(solve_bpdn(f.e, f.z, -1.0), ConfigError);
}

TEST_CASE("noiseless jointly sparse recovery matches the exhaustive-support oracle") {
    const SparseFixture f = sparse_fixture(2024);
    const VecR ref = exhaustive_support_oracle(f.e, f.z);
    CHECK((ref - f.s_true).norm() <= 1e-10 * f.s_true.norm());
    const BpdnResult r = solve_bpdn(f.e, f.z, 1e-8);
    CHECK(r.report.converged);
    CHECK((r.s - ref).norm() <= 1e-4 * ref.norm());
    CHECK(r.s.minCoeff() >= 0.0);
}

TEST_CASE("noisy recovery honors the discrepancy contract") {
    for (std::uint64_t seed : {7u, 8u, 9u}) {
        SparseFixture f = sparse_fixture(seed);
        std::mt19937_64 rng(seed + 100);
        std::normal_distribution<double> n(0.0, 1.0);
        VecR noise(f.z.size());
        for (Eigen::Index i = 0; i < noise.size(); ++i)
            noise[i] = n(rng);
        const double eps = f.z.norm() * std::pow(10.0, -30.0 / 20.0);
        noise *= eps / noise.norm();
        const BpdnResult r = solve_bpdn(f.e, f.z + noise, eps);
        CHECK(r.report.converged);
        CHECK(r.report.residual >= 0.95 * eps);
        CHECK(r.report.residual <= 1.05 * eps);
        CHECK(r.report.residual == doctest::Approx((f.z + noise - f.e * r.s).norm()).epsilon(1e-9));
        CHECK(r.report.discrepancy_target == eps);
        for (int g : f.groups)
            CHECK(std::hypot(r.s[g], r.s[g + 32]) > 0.0);
    }
}

TEST_CASE("inner objective is monotone and iterates are nonnegative") {
    const SparseFixture f = sparse_fixture(5);
    const LeastSquaresModel model = dense_model(f.e, f.z);
    const double lip = gram_lipschitz(model.gram);
    CHECK(lip >= (f.e.transpose() * f.e).eval().selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff());
    for (double tau : {1e-3, 1e-1, 1.0}) {
        const PenalizedResult p = solve_penalized(model, tau, lip, VecR::Zero(64));
        REQUIRE(p.objective.size() >= 2);
        for (std::size_t i = 1; i < p.objective.size(); ++i)
            CHECK(p.objective[i] <= p.objective[i - 1] * (1.0 + 1e-14));
        CHECK(p.s.minCoeff() >= 0.0);
    }
}

TEST_CASE("property vector conversions") {
    const double omega_c = 2.0 * kPi * 30e9;
    ContrastMap m = ContrastMap::air(2);
    m.eps_r << 1.0, 2.0, 3.5, 1.0;
    m.sigma << 0.0, 0.1, 0.0, 0.5;
    const VecR s = property_vector(m, omega_c);
    CHECK(s[1] == doctest::Approx(1.0));
    CHECK(s[5] == doctest::Approx(0.1 / (omega_c * kVacuumPermittivity)));
    const ContrastMap back = contrast_from_property(s, 2, omega_c);
    CHECK((back.eps_r - m.eps_r).norm() <= 1e-14);
    CHECK((back.sigma - m.sigma).norm() <= 1e-14);
    const double omega_k = 1.1 * omega_c;
    const VecC chi = contrast_from_property(s, omega_c, omega_k);
    CHECK(std::abs(chi[3] - m.contrast(omega_k)[3]) <= 1e-12);
}

TEST_CASE("NMSE") {
    ContrastMap t = ContrastMap::air(3);
    t.eps_r[4] = 4.0;
    t.sigma[4] = 0.2;
    const double omega_c = 2.0 * kPi * 30e9;
    CHECK(nmse_db(t, t, omega_c) == kNmseFloorDb);
    CHECK(nmse_db(ContrastMap::air(3), ContrastMap::air(3), omega_c) == kNmseFloorDb);
    ContrastMap e = t;
    const double delta = 0.1 * t.eps_r.norm() / std::sqrt(9.0);
    e.eps_r.array() += delta;
    const double a = 1.0 / (omega_c * kVacuumPermittivity);
    const double num = 9.0 * delta * delta;
    const double den = t.eps_r.squaredNorm() + a * a * t.sigma.squaredNorm();
    CHECK(nmse_db(t, e, omega_c) == doctest::Approx(10.0 * std::log10(num / den)).epsilon(1e-12));
    CHECK_THROWS_AS(nmse_db(t, ContrastMap::air(4), omega_c), ConfigError);
}

TEST_CASE("Born initial system") {
    Config cfg = desk_config();
    cfg.scenario.n_subcarriers = 2;
    cfg.scenario.grid_side = 6;
    const ChannelSet ch = build_channels(cfg.scenario, build_grid(cfg.scenario));
    const auto w = transmit_matrices(beamformer_for_all_subcarriers(ch, cfg.scenario.n_pilots, 1.0));
    const SensingSystem born = born_initial_system(ch, w);
    const MatR e = born.stacked();
    CHECK(e.rows() == 2 * cfg.scenario.n_pilots * cfg.scenario.n_rx * 2);
    for (int k = 0; k < 2; ++k) {
        const MatC d = sensing_matrix(ch, k, w[k], VecC::Zero(ch.pixels()));
        CHECK((born.carriers[k].matrix() - d).norm() == 0.0);
    }
    CHECK_THROWS_AS(born_initial_system(ch, {w[0]}), ConfigError);
}

TEST_CASE("iterative reconstruction") {
    Config cfg = desk_config();
    cfg.scenario.snr_db = std::numeric_limits<double>::infinity();
    cfg.materials.push_back({"weak", 1.01, 0.0005});

    SUBCASE("zero target exits after one outer iteration") {
        Pipeline p(cfg);
        const PipelineResult r = p.run("none", 1);
        CHECK(r.reconstruction.s.norm() == 0.0);
        // Record 0 is the Born step; exactly one outer refinement follows.
        REQUIRE(r.reconstruction.trace.size() == 2);
        CHECK(r.reconstruction.trace.back().outer_iter == 1);
        CHECK(r.reconstruction.trace.back().step == 0.0);
        CHECK(r.reconstruction.converged);
    }
    SUBCASE("weak scatterer: Born estimate is already accurate and is not degraded") {
        Pipeline p(cfg);
        const ContrastMap truth = p.truth("weak");
        const ObservationSet &obs = p.clean_observation("weak");
        const Reconstruction rec = iterative_reconstruct(p.channels(), p.beamformers(), obs,
                                                         p.discrepancy(obs, true), {}, &truth);
        const double omega_c = 2.0 * kPi * cfg.scenario.f_c;
        const double born = nmse_db(truth, contrast_from_property(rec.s_born, truth.grid_side, omega_c), omega_c);
        const double final_nmse = nmse_db(truth, rec.map, omega_c);
        MESSAGE("weak scatterer NMSE: Born " << born << " dB, final " << final_nmse << " dB");
        CHECK(born <= -30.0);
        CHECK(final_nmse <= born);
    }
    SUBCASE("strong scatterer: outer loop improves on the Born estimate") {
        cfg.materials.push_back({"eps4", 4.0, 0.0});
        Pipeline p(cfg);
        const ContrastMap truth = p.truth("eps4");
        const ObservationSet &obs = p.clean_observation("eps4");
        const Reconstruction rec = iterative_reconstruct(p.channels(), p.beamformers(), obs,
                                                         p.discrepancy(obs, true), {}, &truth);
        const double omega_c = 2.0 * kPi * cfg.scenario.f_c;
        const double born = nmse_db(truth, contrast_from_property(rec.s_born, truth.grid_side, omega_c), omega_c);
        const double final_nmse = nmse_db(truth, rec.map, omega_c);
        MESSAGE("strong scatterer NMSE: Born " << born << " dB, final " << final_nmse << " dB");
        CHECK(final_nmse < born);
    }
}

TEST_CASE("solver trace CSV") {
    Reconstruction rec;
    OuterRecord a;
    a.outer_iter = 0;
    a.tau = 0.5;
    a.residual = 1e-3;
    a.mixed_norm = 2.0;
    a.nmse_db = std::nan("");
    rec.trace.push_back(a);
    const std::string path = "test_invert_trace.csv";
    write_solver_trace_csv(path, rec);
    std::ifstream in(path);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "outer_iter,tau,residual,mixed_norm,nmse_vs_truth_if_known");
    CHECK(row.rfind("0,", 0) == 0);
}
