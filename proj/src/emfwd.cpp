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

#include "emsense/emfwd.hpp"
#include "emsense/special.hpp"

#include <Eigen/LU>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <tuple>

namespace emsense {

cplx green_self_term(double k, double a) {
    const double ka = k * a;
    return cplx(0.0, kPi * ka / 2.0) * hankel_h1_2(ka) + 1.0;
}

cplx cell_coupling_weight(double k, double a) {
    const double ka = k * a;
    return cplx(0.0, kPi * ka / 2.0) * bessel_j1(ka);
}

void check_discretization(double k, double a) {
    if (!(k > 0.0) || !(a > 0.0))
        throw ConfigError("green: wavenumber and cell radius must be positive");
    if (k * a >= kMaxCellElectricalRadius) {
        std::ostringstream msg;
        msg << "green: grid too coarse for the wavelength (k*a = " << k * a << " >= " << kMaxCellElectricalRadius
            << ")";
        throw ConfigError(msg.str());
    }
}

MatC green_block(const GridGeometry &grid, double k, const std::vector<int> &rows, const std::vector<int> &cols) {
    const double a = grid.equivalent_radius;
    check_discretization(k, a);
    const cplx diag = green_self_term(k, a);
    const cplx weight = cell_coupling_weight(k, a);
    MatC g(rows.size(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) {
        const Point2 &rc = grid.centers[cols[j]];
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i] == cols[j])
                g(i, j) = diag;
            else
                g(i, j) = weight * hankel_h0_2(k * distance(grid.centers[rows[i]], rc));
        }
    }
    return g;
}

MatC green_matrix(const GridGeometry &grid, double k) {
    const double a = grid.equivalent_radius;
    check_discretization(k, a);
    const int m = grid.size();
    const cplx diag = green_self_term(k, a);
    const cplx weight = cell_coupling_weight(k, a);
    MatC g(m, m);
    for (int j = 0; j < m; ++j) {
        g(j, j) = diag;
        for (int i = j + 1; i < m; ++i) {
            const cplx v = weight * hankel_h0_2(k * distance(grid.centers[i], grid.centers[j]));
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

RadiationOperators radiation_operators(const GridGeometry &grid, const ArrayGeometry &arrays, double k) {
    for (const auto &p : arrays.tx)
        if (grid.extent.contains(p))
            throw ConfigError("radiation: transmit antenna inside the sensing domain");
    for (const auto &p : arrays.rx)
        if (grid.extent.contains(p))
            throw ConfigError("radiation: receive antenna inside the sensing domain");
    const int m = grid.size();
    const cplx source(0.0, 0.25);
    const cplx weight = cell_coupling_weight(k, grid.equivalent_radius);
    RadiationOperators ops;
    ops.h1.resize(m, static_cast<Eigen::Index>(arrays.tx.size()));
    for (std::size_t n = 0; n < arrays.tx.size(); ++n)
        for (int i = 0; i < m; ++i)
            ops.h1(i, n) = source * hankel_h0_2(k * distance(grid.centers[i], arrays.tx[n]));
    ops.h2.resize(static_cast<Eigen::Index>(arrays.rx.size()), m);
    for (int i = 0; i < m; ++i)
        for (std::size_t p = 0; p < arrays.rx.size(); ++p)
            ops.h2(p, i) = weight * hankel_h0_2(k * distance(arrays.rx[p], grid.centers[i]));
    return ops;
}

namespace {

std::vector<int> support_of(const VecC &chi) {
    std::vector<int> s;
    for (Eigen::Index m = 0; m < chi.size(); ++m)
        if (chi[m] != cplx(0.0, 0.0))
            s.push_back(static_cast<int>(m));
    return s;
}

void require_finite(const VecC &chi) {
    if (!chi.allFinite())
        throw NumericalError("contrast vector contains non-finite entries");
}

// Solves (I - G_SS diag chi_S) E_S = E_inc,S by dense LU.
MatC solve_support_system(const MatC &g_ss, const VecC &chi_s, const MatC &e_inc_s) {
    MatC sys = -g_ss * chi_s.asDiagonal();
    sys.diagonal().array() += 1.0;
    Eigen::PartialPivLU<MatC> lu(sys);
    const double rcond = lu.rcond();
    const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    if (!(cond <= kMaxConditionEstimate)) {
        std::ostringstream msg;
        msg << "Lippmann-Schwinger system is singular or ill-conditioned (condition estimate " << cond << ")";
        throw NumericalError(msg.str(), cond);
    }
    return lu.solve(e_inc_s);
}

MatC select_rows(const MatC &a, const std::vector<int> &rows) {
    MatC out(rows.size(), a.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        out.row(i) = a.row(rows[i]);
    return out;
}

MatC select_cols(const MatC &a, const std::vector<int> &cols) {
    MatC out(a.rows(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j)
        out.col(j) = a.col(cols[j]);
    return out;
}

MatC select_block(const MatC &a, const std::vector<int> &rows, const std::vector<int> &cols) {
    MatC out(rows.size(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (std::size_t i = 0; i < rows.size(); ++i)
            out(i, j) = a(rows[i], cols[j]);
    return out;
}

VecC select(const VecC &v, const std::vector<int> &idx) {
    VecC out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        out[i] = v[idx[i]];
    return out;
}

} // namespace

MatC ls_total_field(const MatC &green, const VecC &chi, const MatC &e_inc) {
    if (green.rows() != green.cols() || green.rows() != chi.size() || e_inc.rows() != chi.size())
        throw ConfigError("ls_total_field: inconsistent shapes");
    require_finite(chi);
    const auto s = support_of(chi);
    if (s.empty())
        return e_inc;
    const VecC chi_s = select(chi, s);
    const MatC e_s = solve_support_system(select_block(green, s, s), chi_s, select_rows(e_inc, s));
    return e_inc + select_cols(green, s) * (chi_s.asDiagonal() * e_s);
}

MatC scattering_operator(const MatC &green, const VecC &chi) {
    const Eigen::Index m = chi.size();
    if (green.rows() != m || green.cols() != m)
        throw ConfigError("scattering_operator: inconsistent shapes");
    require_finite(chi);
    const auto s = support_of(chi);
    MatC x = MatC::Zero(m, m);
    if (s.empty())
        return x;
    // Rows S of (I - G diag chi)^{-1} are (I - G_SS diag chi_S)^{-1} P_S, where P_S selects
    // the support columns.
    const VecC chi_s = select(chi, s);
    MatC id_s = MatC::Zero(static_cast<Eigen::Index>(s.size()), m);
    for (std::size_t i = 0; i < s.size(); ++i)
        id_s(i, s[i]) = 1.0;
    const MatC rows = solve_support_system(select_block(green, s, s), chi_s, id_s);
    for (std::size_t i = 0; i < s.size(); ++i)
        x.row(s[i]) = chi_s[i] * rows.row(i);
    return x;
}

ChannelSet build_channels(const ScenarioConfig &config, const GridGeometry &grid, GreenStorage storage) {
    config.validate();
    ChannelSet cs;
    cs.grid = grid;
    cs.arrays = build_arrays(config);
    cs.omega_c = 2.0 * kPi * config.f_c;
    cs.carriers.resize(config.n_subcarriers);
    for (int k = 0; k < config.n_subcarriers; ++k) {
        auto &c = cs.carriers[k];
        c.index = k;
        c.frequency = config.subcarrier_frequency(k);
        c.omega = 2.0 * kPi * c.frequency;
        c.wavenumber = wavenumber(c.frequency);
        check_discretization(c.wavenumber, grid.equivalent_radius);
        auto ops = radiation_operators(grid, cs.arrays, c.wavenumber);
        c.h1 = std::move(ops.h1);
        c.h2 = std::move(ops.h2);
        if (storage == GreenStorage::Dense)
            c.green = green_matrix(grid, c.wavenumber);
    }
    return cs;
}

MatC total_field(const ChannelSet &channels, int k, const VecC &chi, const MatC &e_inc) {
    const auto &c = channels.carriers.at(k);
    if (c.green.size() > 0)
        return ls_total_field(c.green, chi, e_inc);
    if (chi.size() != channels.pixels() || e_inc.rows() != chi.size())
        throw ConfigError("total_field: inconsistent shapes");
    require_finite(chi);
    const auto s = support_of(chi);
    if (s.empty())
        return e_inc;
    std::vector<int> all(channels.pixels());
    for (int i = 0; i < channels.pixels(); ++i)
        all[i] = i;
    const VecC chi_s = select(chi, s);
    const MatC g_cols = green_block(channels.grid, c.wavenumber, all, s);
    const MatC e_s = solve_support_system(select_rows(g_cols, s), chi_s, select_rows(e_inc, s));
    return e_inc + g_cols * (chi_s.asDiagonal() * e_s);
}

MatC noiseless_pilots(const ChannelSet &channels, int k, const VecC &chi, const MatC &w) {
    const auto &c = channels.carriers.at(k);
    if (w.rows() != channels.n_tx())
        throw ConfigError("noiseless_pilots: beamformer must have N_t rows");
    if (chi.size() != channels.pixels())
        throw ConfigError("noiseless_pilots: contrast length must equal M");
    require_finite(chi);
    const auto s = support_of(chi);
    if (s.empty())
        return MatC::Zero(channels.n_rx(), w.cols());
    const VecC chi_s = select(chi, s);
    const MatC e_inc_s = select_rows(c.h1, s) * w;
    const MatC g_ss = c.green.size() > 0 ? select_block(c.green, s, s) : green_block(channels.grid, c.wavenumber, s, s);
    const MatC e_s = solve_support_system(g_ss, chi_s, e_inc_s);
    return select_cols(c.h2, s) * (chi_s.asDiagonal() * e_s);
}

VecC PilotObservation::vectorized() const { return y.reshaped(); }

VecR PilotObservation::stacked_real() const {
    const VecC v = vectorized();
    VecR z(2 * v.size());
    z.head(v.size()) = v.real();
    z.tail(v.size()) = v.imag();
    return z;
}

VecR ObservationSet::stacked() const {
    Eigen::Index n = 0;
    for (const auto &c : carriers)
        n += 2 * c.y.size();
    VecR z(n);
    Eigen::Index off = 0;
    for (const auto &c : carriers) {
        const VecR zk = c.stacked_real();
        z.segment(off, zk.size()) = zk;
        off += zk.size();
    }
    return z;
}

double ObservationSet::noise_norm() const {
    double e = 0.0;
    for (const auto &c : carriers)
        e += static_cast<double>(c.y.size()) * c.noise_variance;
    return std::sqrt(e);
}

ObservationSet noiseless_observation(const ChannelSet &channels, const ContrastMap &truth,
                                     const std::vector<MatC> &beamformers) {
    truth.validate();
    if (truth.size() != channels.pixels())
        throw ConfigError("observation: truth map does not match the channel grid");
    if (static_cast<int>(beamformers.size()) != channels.n_subcarriers())
        throw ConfigError("observation: need one beamformer per subcarrier");
    ObservationSet obs;
    obs.carriers.resize(channels.n_subcarriers());
    for (int k = 0; k < channels.n_subcarriers(); ++k) {
        auto &o = obs.carriers[k];
        o.y = noiseless_pilots(channels, k, truth.contrast(channels.carriers[k].omega), beamformers[k]);
        o.signal_power = o.y.squaredNorm() / static_cast<double>(o.y.size());
    }
    return obs;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
    // splitmix64 over (master, counter).
    std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (counter + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

ObservationSet add_noise(const ObservationSet &clean, double snr_db, std::uint64_t seed, double noise_variance) {
    ObservationSet obs = clean;
    if (std::isinf(snr_db) && snr_db > 0 && !(noise_variance > 0.0))
        return obs;
    for (std::size_t k = 0; k < obs.carriers.size(); ++k) {
        auto &o = obs.carriers[k];
        double var = noise_variance;
        if (!(var > 0.0)) {
            if (!(o.signal_power > 0.0))
                throw NumericalError("observation: zero signal power with finite SNR on subcarrier " +
                                     std::to_string(k + 1));
            var = o.signal_power / std::pow(10.0, snr_db / 10.0);
        }
        o.noise_variance = var;
        std::mt19937_64 rng(derive_seed(seed, k));
        std::normal_distribution<double> normal(0.0, std::sqrt(var / 2.0));
        for (Eigen::Index j = 0; j < o.y.cols(); ++j)
            for (Eigen::Index i = 0; i < o.y.rows(); ++i) {
                const double re = normal(rng);
                const double im = normal(rng);
                o.y(i, j) += cplx(re, im);
            }
    }
    return obs;
}

ObservationSet synthesize_observation(const ChannelSet &channels, const ContrastMap &truth,
                                      const std::vector<MatC> &beamformers, double snr_db, std::uint64_t seed) {
    return add_noise(noiseless_observation(channels, truth, beamformers), snr_db, seed);
}

void write_observation_csv(const std::string &dir, const ObservationSet &obs) {
    std::filesystem::create_directories(dir);
    std::ofstream meta(std::filesystem::path(dir) / "noise.csv");
    meta << "k,noise_variance,signal_power\n" << std::setprecision(17);
    for (std::size_t k = 0; k < obs.carriers.size(); ++k) {
        const auto &o = obs.carriers[k];
        meta << k + 1 << ',' << o.noise_variance << ',' << o.signal_power << '\n';
        std::ofstream out(std::filesystem::path(dir) / ("y_" + std::to_string(k + 1) + ".csv"));
        if (!out)
            throw ConfigError("cannot write observation files into '" + dir + "'");
        out << "rx,pilot,re,im\n" << std::setprecision(17);
        for (Eigen::Index i = 0; i < o.y.cols(); ++i)
            for (Eigen::Index p = 0; p < o.y.rows(); ++p)
                out << p << ',' << i << ',' << o.y(p, i).real() << ',' << o.y(p, i).imag() << '\n';
    }
}

ObservationSet read_observation_csv(const std::string &dir, int n_subcarriers) {
    ObservationSet obs;
    obs.carriers.resize(n_subcarriers);
    std::string line;
    for (int k = 0; k < n_subcarriers; ++k) {
        const auto path = std::filesystem::path(dir) / ("y_" + std::to_string(k + 1) + ".csv");
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open '" + path.string() + "'");
        std::getline(in, line);
        std::vector<std::tuple<int, int, double, double>> rows;
        int n_rx = 0, n_pilots = 0;
        while (std::getline(in, line)) {
            if (line.empty())
                continue;
            int p = 0, i = 0;
            double re = 0, im = 0;
            char c1, c2, c3;
            std::istringstream ss(line);
            if (!(ss >> p >> c1 >> i >> c2 >> re >> c3 >> im))
                throw ConfigError("'" + path.string() + "': malformed row '" + line + "'");
            rows.emplace_back(p, i, re, im);
            n_rx = std::max(n_rx, p + 1);
            n_pilots = std::max(n_pilots, i + 1);
        }
        auto &o = obs.carriers[k];
        o.y = MatC::Zero(n_rx, n_pilots);
        for (const auto &[p, i, re, im] : rows)
            o.y(p, i) = cplx(re, im);
    }
    std::ifstream meta(std::filesystem::path(dir) / "noise.csv");
    if (meta) {
        std::getline(meta, line);
        while (std::getline(meta, line)) {
            int k = 0;
            double var = 0, pw = 0;
            char c1, c2;
            std::istringstream ss(line);
            if (ss >> k >> c1 >> var >> c2 >> pw && k >= 1 && k <= n_subcarriers) {
                obs.carriers[k - 1].noise_variance = var;
                obs.carriers[k - 1].signal_power = pw;
            }
        }
    }
    return obs;
}

} // namespace emsense
