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

#ifndef EMSENSE_CLASSIFY_HPP
#define EMSENSE_CLASSIFY_HPP

#include "emsense/scene.hpp"
#include "emsense/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace emsense {

using Matrix2 = Eigen::Matrix2d;
using Vector2 = Eigen::Vector2d;

enum class PixelLabel : std::uint8_t { Air = 0, Target = 1 };

struct ClusterResult {
    std::vector<PixelLabel> labels;
    Vector2 centroid_air{1.0, 0.0};
    Vector2 centroid_target{0.0, 0.0};
    bool has_target = false;
    Matrix2 whitening = Matrix2::Identity();
    std::vector<double> objective; // within-cluster sum of squares per iteration, whitened
    int iterations = 0;
};

// (cov + 1e-8 * trace/2 * I)^(-1/2) of the sample covariance.
Matrix2 whitening_transform(const std::vector<Vector2> &points);

// Two-cluster K-means in whitened coordinates. Initialization is deterministic (one centroid
// at (1, 0), the other at the point farthest from it), so the seed does not change the result.
ClusterResult whitened_kmeans2(const std::vector<Vector2> &points, std::uint64_t rng_seed = 0);

std::vector<Vector2> property_points(const ContrastMap &map);

struct MaterialMatch {
    bool no_target = false;
    int index = -1;
    std::string name = "no-target";
    double distance = 0.0;
};

// Nearest record in whitened distance; ties go to the lowest index.
MaterialMatch classify_material(const Vector2 &centroid, const std::vector<MaterialRecord> &database,
                                const Matrix2 &whitening);
MaterialMatch classify_material(const ClusterResult &clusters, const std::vector<MaterialRecord> &database);

void write_clusters_csv(const std::string &path, const ClusterResult &clusters, int grid_side);

} // namespace emsense

#endif
