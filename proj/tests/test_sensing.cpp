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

#include "emsense/emfwd.hpp"
#include "emsense/sensing.hpp"

#include <random>

using namespace emsense;

namespace {

MatC random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64 &rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    MatC m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) {
            const double re = n(rng);
            m(i, j) = cplx(re, n(rng));
        }
    return m;
}

ScenarioConfig small_scenario(int k = 3) {
    ScenarioConfig s;
    s.n_tx = 8;
    s.n_rx = 4;
    s.n_pilots = 5;
    s.n_subcarriers = k;
    s.delta_f = 2e9; // wide spacing so carriers differ visibly
    s.domain_extent = {-0.01, 0.01, -0.01, 0.01};
    s.tx_center = {0.1, 0.0};
    s.rx_center = {-0.2, -0.2};
    s.grid_side = 6;
    return s;
}

// Complex-arithmetic oracle for the stacked product: per carrier D_k (s_eps + j r_k s_sigma).
VecR stacked_oracle(const std::vector<MatC> &d, const std::vector<double> &omega, double omega_c, const VecR &s) {
    const Eigen::Index m = d[0].cols();
    std::vector<double> out;
    for (std::size_t k = 0; k < d.size(); ++k) {
        VecC c(m);
        for (Eigen::Index i = 0; i < m; ++i)
            c[i] = cplx(s[i], omega_c / omega[k] * s[i + m]);
        const VecC y = d[k] * c;
        for (Eigen::Index i = 0; i < y.size(); ++i)
            out.push_back(y[i].real());
        for (Eigen::Index i = 0; i < y.size(); ++i)
            out.push_back(y[i].imag());
    }
    return Eigen::Map<VecR>(out.data(), static_cast<Eigen::Index>(out.size()));
}

} // namespace

TEST_CASE("sensing matrix reproduces the noiseless pilots") {
    std::mt19937_64 rng(20);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const ScenarioConfig s = small_scenario();
    const ChannelSet ch = build_channels(s, build_grid(s));
    for (int fixture = 0; fixture < 20; ++fixture) {
        const int k = fixture % s.n_subcarriers;
        VecC chi = VecC::Zero(ch.pixels());
        for (int m = 0; m < ch.pixels(); ++m)
            if (u(rng) < 0.3)
                chi[m] = cplx(3.0 * u(rng), 0.5 * u(rng));
        const MatC w = random_matrix(s.n_tx, s.n_pilots, rng);
        const VecC y = noiseless_pilots(ch, k, chi, w).reshaped();
        const VecC dchi = sensing_matrix(ch, k, w, chi) * chi;
        CHECK((dchi - y).norm() <= 1e-9 * y.norm());
    }
}

TEST_CASE("Born sensing matrix is the Khatri-Rao product of excitation and H2") {
    const ScenarioConfig s = small_scenario(1);
    const ChannelSet ch = build_channels(s, build_grid(s));
    std::mt19937_64 rng(2);
    const MatC w = random_matrix(s.n_tx, s.n_pilots, rng);
    const MatC a = (w.transpose() * ch.carriers[0].h1.transpose());
    const MatC d = sensing_matrix(ch, 0, w, VecC::Zero(ch.pixels()));
    const MatC kr = khatri_rao(a, ch.carriers[0].h2);
    CHECK((d - kr).norm() <= 1e-15 * kr.norm());
    // Explicit column check: column m is kron(A[:,m], H2[:,m]).
    for (int m : {0, 7, 35}) {
        for (int i = 0; i < s.n_pilots; ++i)
            for (int p = 0; p < s.n_rx; ++p)
                CHECK(std::abs(d(i * s.n_rx + p, m) - a(i, m) * ch.carriers[0].h2(p, m)) <=
                      1e-14 * std::abs(a(i, m) * ch.carriers[0].h2(p, m)));
    }
}

TEST_CASE("single-column Khatri-Rao is a Kronecker product of vectors") {
    std::mt19937_64 rng(4);
    const MatC a = random_matrix(3, 1, rng), b = random_matrix(2, 1, rng);
    const MatC d = khatri_rao(a, b);
    REQUIRE(d.rows() == 6);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j)
            CHECK(d(i * 2 + j, 0) == a(i, 0) * b(j, 0));
    CHECK_THROWS_AS(khatri_rao(random_matrix(3, 2, rng), b), ConfigError);
}

TEST_CASE("real stacking") {
    std::mt19937_64 rng(8);
    SUBCASE("real D with one carrier gives a block diagonal") {
        const MatC d = random_matrix(5, 3, rng).real().cast<cplx>();
        const MatR e = stack_real({d}, {1.0}, 1.0);
        MatR expected = MatR::Zero(10, 6);
        expected.topLeftCorner(5, 3) = d.real();
        expected.bottomRightCorner(5, 3) = d.real();
        CHECK((e - expected).norm() == 0.0);
    }
    SUBCASE("zero conductivity") {
        const MatC d = random_matrix(5, 3, rng);
        const MatR e = stack_real({d}, {2.0}, 1.0);
        VecR s = VecR::Zero(6);
        s.head(3) << 1.0, -2.0, 0.5;
        const VecC y = d * s.head(3).cast<cplx>();
        VecR expected(10);
        expected << y.real(), y.imag();
        CHECK((e * s - expected).norm() <= 1e-14 * expected.norm());
    }
    SUBCASE("multi-carrier product matches complex arithmetic") {
        std::vector<MatC> d = {random_matrix(6, 4, rng), random_matrix(6, 4, rng), random_matrix(6, 4, rng)};
        const std::vector<double> omega = {0.9, 1.0, 1.1};
        VecR s = VecR::Zero(8);
        s[1] = 0.7;
        s[5] = 0.3;
        s[3] = 1.2;
        s[7] = 0.05;
        const MatR e = stack_real(d, omega, 1.0);
        CHECK(e.rows() == 2 * 6 * 3);
        CHECK(e.cols() == 8);
        const VecR ref = stacked_oracle(d, omega, 1.0, s);
        CHECK((e * s - ref).norm() <= 1e-13 * ref.norm());
    }
    CHECK_THROWS_AS(stack_real({random_matrix(2, 2, rng), random_matrix(3, 2, rng)}, {1.0, 1.0}, 1.0), ConfigError);
}

TEST_CASE("Gram identities") {
    std::mt19937_64 rng(30);
    const ScenarioConfig s = small_scenario(4);
    const ChannelSet ch = build_channels(s, build_grid(s));
    std::vector<MatC> w;
    for (int k = 0; k < s.n_subcarriers; ++k)
        w.push_back(random_matrix(s.n_tx, s.n_pilots, rng));

    SUBCASE("Khatri-Rao Gram factorization holds elementwise") {
        for (int k = 0; k < s.n_subcarriers; ++k) {
            const MatC d = sensing_matrix(ch, k, w[k], VecC::Zero(ch.pixels()));
            const MatC a = w[k].transpose() * ch.carriers[k].h1.transpose();
            const MatC h2 = ch.carriers[k].h2;
            const MatC lhs = d.adjoint() * d;
            const MatC rhs = (a.adjoint() * a).cwiseProduct(h2.adjoint() * h2);
            CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10 * lhs.cwiseAbs().maxCoeff());
        }
    }
    SUBCASE("stacked Gram is the sum of per-carrier Grams") {
        VecC chi = VecC::Zero(ch.pixels());
        chi[4] = cplx(2.0, 0.1);
        chi[5] = cplx(2.0, 0.1);
        std::vector<VecC> chis(s.n_subcarriers, chi);
        const SensingSystem sys = build_sensing_system(ch, w, chis);
        const MatR e = sys.stacked();
        CHECK(e.rows() == 2 * s.n_pilots * s.n_rx * s.n_subcarriers);
        const MatR g_direct = e.transpose() * e;
        const MatR g = sys.gram();
        CHECK((g - g_direct).norm() <= 1e-10 * g_direct.norm());

        std::normal_distribution<double> n(0.0, 1.0);
        ObservationSet obs;
        for (int k = 0; k < s.n_subcarriers; ++k) {
            PilotObservation o;
            o.y = random_matrix(s.n_rx, s.n_pilots, rng);
            obs.carriers.push_back(o);
        }
        const VecR z = obs.stacked();
        CHECK((sys.correlate(obs) - e.transpose() * z).norm() <= 1e-12 * (e.transpose() * z).norm());
        VecR sv(2 * ch.pixels());
        for (Eigen::Index i = 0; i < sv.size(); ++i)
            sv[i] = n(rng);
        CHECK(sys.residual_norm(obs, sv) == doctest::Approx((z - e * sv).norm()).epsilon(1e-12));
    }
}

TEST_CASE("mutual coherence") {
    CHECK(mutual_coherence(MatR(MatR::Identity(4, 4))) == 0.0);
    MatR dup(3, 2);
    dup << 1, 1, 2, 2, 3, 3;
    CHECK(mutual_coherence(dup) == doctest::Approx(1.0).epsilon(1e-15));
    MatR three(2, 3);
    three << 1, 0, 1 / std::sqrt(2.0), 0, 1, 1 / std::sqrt(2.0);
    CHECK(mutual_coherence(three) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-14));
    MatR zero_col = MatR::Identity(3, 3);
    zero_col.col(1).setZero();
    try {
        mutual_coherence(zero_col);
        FAIL("expected an error");
    } catch (const ConfigError &e) {
        CHECK(std::string(e.what()).find("column 1") != std::string::npos);
    }
    SUBCASE("blocked sweep agrees with brute force beyond the full-Gram limit") {
        std::mt19937_64 rng(6);
        std::normal_distribution<double> n(0.0, 1.0);
        MatR a(3, 4200);
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            for (Eigen::Index i = 0; i < 3; ++i)
                a(i, j) = n(rng);
        a.col(4100) = -2.5 * a.col(17); // exact collinear pair across blocks
        CHECK(mutual_coherence(a) == doctest::Approx(1.0).epsilon(1e-14));
        a.col(4100) = a.col(4100) + 1e-3 * a.col(5);
        double brute = 0.0;
        const VecR norms = a.colwise().norm().transpose();
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            for (Eigen::Index i = 0; i < j; ++i)
                brute = std::max(brute, std::abs(a.col(i).dot(a.col(j))) / (norms[i] * norms[j]));
        CHECK(mutual_coherence(a) == doctest::Approx(brute).epsilon(1e-14));
    }
}

TEST_CASE("effective degrees of freedom") {
    std::mt19937_64 rng(7);
    const MatC u = random_matrix(6, 1, rng), v = random_matrix(1, 4, rng);
    CHECK(edof(u * v) == doctest::Approx(1.0).epsilon(1e-12));
    // R = H H^H with eigenvalues {1,1,1,1}: H with orthonormal columns.
    const MatC q = random_matrix(6, 4, rng).householderQr().householderQ() * MatC::Identity(6, 4);
    CHECK(edof(q) == doctest::Approx(4.0).epsilon(1e-12));
    // Eigenvalues {2,1,1}.
    MatC h = q.leftCols(3);
    h.col(0) *= std::sqrt(2.0);
    CHECK(edof(h) == doctest::Approx(16.0 / 6.0).epsilon(1e-12));
    CHECK_THROWS_AS(edof(MatC::Zero(3, 3)), ConfigError);
}
