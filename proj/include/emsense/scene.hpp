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

#ifndef EMSENSE_SCENE_HPP
#define EMSENSE_SCENE_HPP

#include "emsense/types.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace emsense {

// Axis-aligned square bounds of the sensing domain D [m].
struct DomainExtent {
    double x_min = -1.0;
    double x_max = 1.0;
    double y_min = -1.0;
    double y_max = 1.0;

    double side() const { return x_max - x_min; }
    Point2 center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
    bool contains(const Point2 &p) const { return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max; }
};

struct ScenarioConfig {
    int n_tx = 64;
    int n_rx = 8;
    int n_pilots = 16;
    int n_subcarriers = 16;
    double f_c = 30e9;      // [Hz]
    double delta_f = 200e3; // [Hz]
    Point2 tx_center{10.0, 0.0};
    Point2 rx_center{-20.0, -20.0};
    double array_spacing_wavelengths = 0.5;
    DomainExtent domain_extent;
    int grid_side = 16;
    double power_budget = 1.0;
    double snr_db = 30.0; // +inf disables receiver noise
    std::uint64_t rng_seed = 1;
    int forward_oversample = 1;

    // Throws ConfigError on the first violated invariant.
    void validate() const;

    bool noiseless() const { return std::isinf(snr_db) && snr_db > 0; }
    double center_wavelength() const { return kSpeedOfLight / f_c; }
    // k is zero-based: f_k = f_c + (2(k+1) - K - 1) * delta_f / 2.
    double subcarrier_frequency(int k) const;
    std::vector<double> subcarrier_frequencies() const;
    // Transmitter to domain-center distance d.
    double target_distance() const { return distance(tx_center, domain_extent.center()); }
};

struct GridGeometry {
    int side = 0;
    DomainExtent extent;
    std::vector<Point2> centers; // row-major: m = iy * side + ix
    double cell_area = 0.0;
    double equivalent_radius = 0.0; // radius of the disk with area cell_area

    int size() const { return static_cast<int>(centers.size()); }
    double pitch() const { return extent.side() / side; }
    int index(int ix, int iy) const { return iy * side + ix; }
};

GridGeometry build_grid(const DomainExtent &extent, int grid_side);
GridGeometry build_grid(const ScenarioConfig &config);

struct MaterialRecord {
    std::string name;
    double eps_r = 1.0; // relative permittivity, >= 1
    double sigma = 0.0; // conductivity [S/m], >= 0
};

// Ten target materials with well separated (eps_r, sigma). Air is not listed.
// Versioned: changing any value requires bumping kMaterialDatabaseVersion.
constexpr int kMaterialDatabaseVersion = 1;
std::vector<MaterialRecord> material_database();
void validate_database(const std::vector<MaterialRecord> &db);
std::optional<MaterialRecord> find_material(const std::vector<MaterialRecord> &db, const std::string &name);

// Per-pixel relative permittivity and conductivity on the grid.
struct ContrastMap {
    int grid_side = 0;
    VecR eps_r;
    VecR sigma;

    static ContrastMap air(int grid_side);

    int size() const { return static_cast<int>(eps_r.size()); }
    void validate() const;
    // Indices where the pixel differs from air.
    std::vector<int> support() const;
    // chi = eps_r - 1 + j sigma / (eps0 omega).
    VecC contrast(double omega) const;
};

enum class PhantomShape { T, Rect, Disk, Mask };

PhantomShape parse_phantom_shape(const std::string &name);
std::string to_string(PhantomShape shape);

// Geometry is given in absolute coordinates so the same phantom can be sampled on
// grids of different resolution. A pixel is inside when its center is inside.
struct PhantomSpec {
    PhantomShape shape = PhantomShape::T;
    std::string material = "concrete-like";
    // Rect: [x0, x1] x [y0, y1] in meters.
    double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
    // Disk.
    Point2 disk_center{};
    double disk_radius = 0.0;
    // Mask: row-major on its own mask_side grid, resampled by nearest pixel.
    int mask_side = 0;
    std::vector<std::uint8_t> mask;
};

// Boolean occupancy on the grid (no material attached).
std::vector<std::uint8_t> phantom_mask(const PhantomSpec &spec, const GridGeometry &grid);
ContrastMap make_phantom(const PhantomSpec &spec, const MaterialRecord &material, const GridGeometry &grid);

// Antenna positions of a uniform linear array parallel to the y axis.
std::vector<Point2> uniform_linear_array(const Point2 &center, int count, double spacing);

struct ArrayGeometry {
    std::vector<Point2> tx;
    std::vector<Point2> rx;
};
ArrayGeometry build_arrays(const ScenarioConfig &config);

// CSV with header ix,iy,eps_r,sigma (full double precision, round-trips exactly).
void write_contrast_csv(const std::string &path, const ContrastMap &map);
ContrastMap read_contrast_csv(const std::string &path);

} // namespace emsense

#endif
