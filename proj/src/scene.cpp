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

#include "emsense/scene.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace emsense {

void ScenarioConfig::validate() const {
    auto require = [](bool ok, const std::string &msg) {
        if (!ok)
            throw ConfigError("scenario: " + msg);
    };
    require(n_tx >= 1, "n_tx must be >= 1");
    require(n_rx >= 1, "n_rx must be >= 1");
    require(n_pilots >= 1, "n_pilots must be >= 1");
    require(n_subcarriers >= 1, "n_subcarriers must be >= 1");
    require(std::isfinite(f_c) && f_c > 0.0, "f_c must be positive");
    require(std::isfinite(delta_f) && delta_f >= 0.0, "delta_f must be nonnegative");
    require(f_c - (n_subcarriers - 1) * delta_f / 2.0 > 0.0, "lowest subcarrier frequency must be positive");
    require(grid_side >= 2, "grid_side must be >= 2");
    require(domain_extent.side() > 0.0, "domain_extent must have positive side length");
    require(std::abs((domain_extent.y_max - domain_extent.y_min) - domain_extent.side()) <=
                1e-12 * domain_extent.side(),
            "domain_extent must be square");
    require(std::isfinite(array_spacing_wavelengths) && array_spacing_wavelengths > 0.0,
            "array_spacing_wavelengths must be positive");
    require(std::isfinite(power_budget) && power_budget > 0.0, "power_budget must be positive");
    require(!std::isnan(snr_db) && snr_db != -std::numeric_limits<double>::infinity(), "snr_db must be a number or +inf");
    require(forward_oversample >= 1, "forward_oversample must be >= 1");
}

double ScenarioConfig::subcarrier_frequency(int k) const {
    const int kk = k + 1;
    return f_c + (2.0 * kk - n_subcarriers - 1.0) * delta_f / 2.0;
}

std::vector<double> ScenarioConfig::subcarrier_frequencies() const {
    std::vector<double> f(n_subcarriers);
    for (int k = 0; k < n_subcarriers; ++k)
        f[k] = subcarrier_frequency(k);
    return f;
}

GridGeometry build_grid(const DomainExtent &extent, int grid_side) {
    if (grid_side < 2)
        throw ConfigError("grid: grid_side must be >= 2");
    if (!(extent.side() > 0.0))
        throw ConfigError("grid: domain must have positive side length");
    GridGeometry g;
    g.side = grid_side;
    g.extent = extent;
    const double h = extent.side() / grid_side;
    g.centers.resize(static_cast<std::size_t>(grid_side) * grid_side);
    for (int iy = 0; iy < grid_side; ++iy)
        for (int ix = 0; ix < grid_side; ++ix)
            g.centers[g.index(ix, iy)] = {extent.x_min + (ix + 0.5) * h, extent.y_min + (iy + 0.5) * h};
    g.cell_area = h * h;
    g.equivalent_radius = std::sqrt(g.cell_area / kPi);
    return g;
}

GridGeometry build_grid(const ScenarioConfig &config) {
    config.validate();
    return build_grid(config.domain_extent, config.grid_side);
}

// Values are invented but chosen to be mutually distinguishable: permittivities are
// spread over [2, 10] and the loss per unit contrast varies from record to record.
std::vector<MaterialRecord> material_database() {
    return {
        {"plexiglass-like", 2.0, 0.005},
        {"wood-like", 2.6, 0.080},
        {"plaster-like", 3.2, 0.020},
        {"glass-like", 4.0, 0.150},
        {"brick-like", 4.8, 0.040},
        {"concrete-like", 5.6, 0.250},
        {"marble-like", 6.6, 0.080},
        {"ceramic-like", 7.6, 0.400},
        {"granite-like", 8.8, 0.150},
        {"wet-soil-like", 10.0, 0.500},
    };
}

void validate_database(const std::vector<MaterialRecord> &db) {
    if (db.empty())
        throw ConfigError("materials: database is empty");
    std::set<std::string> names;
    for (const auto &m : db) {
        if (!(m.eps_r >= 1.0) || !std::isfinite(m.eps_r))
            throw ConfigError("materials: eps_r of '" + m.name + "' must be >= 1");
        if (!(m.sigma >= 0.0) || !std::isfinite(m.sigma))
            throw ConfigError("materials: sigma of '" + m.name + "' must be >= 0");
        if (!names.insert(m.name).second)
            throw ConfigError("materials: duplicate name '" + m.name + "'");
    }
}

std::optional<MaterialRecord> find_material(const std::vector<MaterialRecord> &db, const std::string &name) {
    for (const auto &m : db)
        if (m.name == name)
            return m;
    return std::nullopt;
}

ContrastMap ContrastMap::air(int grid_side) {
    ContrastMap c;
    c.grid_side = grid_side;
    const int m = grid_side * grid_side;
    c.eps_r = VecR::Ones(m);
    c.sigma = VecR::Zero(m);
    return c;
}

void ContrastMap::validate() const {
    if (eps_r.size() != static_cast<Eigen::Index>(grid_side) * grid_side || sigma.size() != eps_r.size())
        throw ConfigError("contrast map: vector lengths do not match grid_side^2");
    for (Eigen::Index m = 0; m < eps_r.size(); ++m) {
        if (!(eps_r[m] >= 1.0) || !std::isfinite(eps_r[m]))
            throw ConfigError("contrast map: eps_r[" + std::to_string(m) + "] < 1");
        if (!(sigma[m] >= 0.0) || !std::isfinite(sigma[m]))
            throw ConfigError("contrast map: sigma[" + std::to_string(m) + "] < 0");
    }
}

std::vector<int> ContrastMap::support() const {
    std::vector<int> idx;
    for (Eigen::Index m = 0; m < eps_r.size(); ++m)
        if (eps_r[m] != 1.0 || sigma[m] != 0.0)
            idx.push_back(static_cast<int>(m));
    return idx;
}

VecC ContrastMap::contrast(double omega) const {
    VecC chi(eps_r.size());
    for (Eigen::Index m = 0; m < eps_r.size(); ++m)
        chi[m] = cplx(eps_r[m] - 1.0, sigma[m] / (kVacuumPermittivity * omega));
    return chi;
}

PhantomShape parse_phantom_shape(const std::string &name) {
    if (name == "T" || name == "t")
        return PhantomShape::T;
    if (name == "rect")
        return PhantomShape::Rect;
    if (name == "disk")
        return PhantomShape::Disk;
    if (name == "custom-mask" || name == "mask")
        return PhantomShape::Mask;
    throw ConfigError("phantom: unknown shape '" + name + "'");
}

std::string to_string(PhantomShape shape) {
    switch (shape) {
    case PhantomShape::T:
        return "T";
    case PhantomShape::Rect:
        return "rect";
    case PhantomShape::Disk:
        return "disk";
    case PhantomShape::Mask:
        return "custom-mask";
    }
    return "?";
}

namespace {

// The T occupies a bar [3/16, 13/16] x [10/16, 12/16] and a stem [7/16, 9/16] x [3/16, 10/16]
// of the domain in normalized coordinates. Edges sit on multiples of 1/16 so any
// grid whose side is a multiple of 16 samples the shape exactly.
bool inside_t(double u, double v) {
    const bool bar = u > 3.0 / 16 && u < 13.0 / 16 && v > 10.0 / 16 && v < 12.0 / 16;
    const bool stem = u > 7.0 / 16 && u < 9.0 / 16 && v > 3.0 / 16 && v < 10.0 / 16;
    return bar || stem;
}

} // namespace

std::vector<std::uint8_t> phantom_mask(const PhantomSpec &spec, const GridGeometry &grid) {
    std::vector<std::uint8_t> mask(grid.size(), 0);
    const auto &ext = grid.extent;
    for (int m = 0; m < grid.size(); ++m) {
        const Point2 &c = grid.centers[m];
        const double u = (c.x - ext.x_min) / ext.side();
        const double v = (c.y - ext.y_min) / ext.side();
        bool in = false;
        switch (spec.shape) {
        case PhantomShape::T:
            in = inside_t(u, v);
            break;
        case PhantomShape::Rect:
            in = c.x > spec.x0 && c.x < spec.x1 && c.y > spec.y0 && c.y < spec.y1;
            break;
        case PhantomShape::Disk:
            in = distance(c, spec.disk_center) <= spec.disk_radius;
            break;
        case PhantomShape::Mask: {
            if (spec.mask_side <= 0 ||
                spec.mask.size() != static_cast<std::size_t>(spec.mask_side) * spec.mask_side)
                throw ConfigError("phantom: custom mask must have mask_side^2 entries");
            const int ix = std::min(spec.mask_side - 1, static_cast<int>(u * spec.mask_side));
            const int iy = std::min(spec.mask_side - 1, static_cast<int>(v * spec.mask_side));
            in = spec.mask[static_cast<std::size_t>(iy) * spec.mask_side + ix] != 0;
            break;
        }
        }
        mask[m] = in ? 1 : 0;
    }
    return mask;
}

ContrastMap make_phantom(const PhantomSpec &spec, const MaterialRecord &material, const GridGeometry &grid) {
    if (!(material.eps_r >= 1.0) || !(material.sigma >= 0.0))
        throw ConfigError("phantom: material '" + material.name + "' is not physical");
    const auto mask = phantom_mask(spec, grid);
    ContrastMap c = ContrastMap::air(grid.side);
    int count = 0;
    for (int m = 0; m < grid.size(); ++m) {
        if (mask[m]) {
            c.eps_r[m] = material.eps_r;
            c.sigma[m] = material.sigma;
            ++count;
        }
    }
    if (count == 0)
        throw ConfigError("phantom: mask selects no pixel of the grid");
    return c;
}

std::vector<Point2> uniform_linear_array(const Point2 &center, int count, double spacing) {
    std::vector<Point2> p(count);
    for (int n = 0; n < count; ++n)
        p[n] = {center.x, center.y + (n - 0.5 * (count - 1)) * spacing};
    return p;
}

ArrayGeometry build_arrays(const ScenarioConfig &config) {
    const double spacing = config.array_spacing_wavelengths * config.center_wavelength();
    return {uniform_linear_array(config.tx_center, config.n_tx, spacing),
            uniform_linear_array(config.rx_center, config.n_rx, spacing)};
}

void write_contrast_csv(const std::string &path, const ContrastMap &map) {
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot open '" + path + "' for writing");
    out << "ix,iy,eps_r,sigma\n";
    out << std::setprecision(17);
    for (int iy = 0; iy < map.grid_side; ++iy)
        for (int ix = 0; ix < map.grid_side; ++ix) {
            const int m = iy * map.grid_side + ix;
            out << ix << ',' << iy << ',' << map.eps_r[m] << ',' << map.sigma[m] << '\n';
        }
}

ContrastMap read_contrast_csv(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open '" + path + "'");
    std::string line;
    std::getline(in, line);
    if (line.rfind("ix,iy,eps_r,sigma", 0) != 0)
        throw ConfigError("'" + path + "': expected header ix,iy,eps_r,sigma");
    struct Row {
        int ix, iy;
        double eps, sig;
    };
    std::vector<Row> rows;
    int side = 0;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::stringstream ss(line);
        std::string a, b, c, d;
        std::getline(ss, a, ',');
        std::getline(ss, b, ',');
        std::getline(ss, c, ',');
        std::getline(ss, d, ',');
        try {
            rows.push_back({std::stoi(a), std::stoi(b), std::stod(c), std::stod(d)});
        } catch (const std::exception &) {
            throw ConfigError("'" + path + "': malformed row '" + line + "'");
        }
        side = std::max({side, rows.back().ix + 1, rows.back().iy + 1});
    }
    if (rows.size() != static_cast<std::size_t>(side) * side)
        throw ConfigError("'" + path + "': row count is not a square grid");
    ContrastMap map = ContrastMap::air(side);
    for (const auto &r : rows) {
        const int m = r.iy * side + r.ix;
        map.eps_r[m] = r.eps;
        map.sigma[m] = r.sig;
    }
    return map;
}

} // namespace emsense
