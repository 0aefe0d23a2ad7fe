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

#include "emsense/classify.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <fstream>
#include <limits>

namespace emsense {

Matrix2 whitening_transform(const std::vector<Vector2> &points) {
    if (points.size() < 2) {
        throw ConfigError("whitening needs at least two points");
    }
    Vector2 mean = Vector2::Zero();
    for (const auto &p : points) {
        mean += p;
    }
    mean /= static_cast<double>(points.size());
    Matrix2 cov = Matrix2::Zero();
    for (const auto &p : points) {
        const Vector2 d = p - mean;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(points.size() - 1);
    cov += 1e-8 * (cov.trace() / 2.0) * Matrix2::Identity();
    if (cov.trace() <= 0.0) {
        return Matrix2::Identity();
    }
    Eigen::SelfAdjointEigenSolver<Matrix2> eig(cov);
    return eig.operatorInverseSqrt();
}

namespace {

double objective_value(const std::vector<Vector2> &w, const std::vector<PixelLabel> &labels, const Vector2 c[2]) {
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        total += (w[i] - c[static_cast<int>(labels[i])]).squaredNorm();
    }
    return total;
}

} // namespace

ClusterResult whitened_kmeans2(const std::vector<Vector2> &points, std::uint64_t /*rng_seed*/) {
    if (points.size() < 2) {
        throw ConfigError("K-means needs at least two points");
    }
    ClusterResult out;
    out.labels.assign(points.size(), PixelLabel::Air);
    const bool constant = std::all_of(points.begin(), points.end(), [&](const Vector2 &p) { return p == points[0]; });
    if (constant) {
        out.centroid_air = points[0];
        return out;
    }
    out.whitening = whitening_transform(points);
    std::vector<Vector2> w(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        w[i] = out.whitening * points[i];
    }
    const Vector2 air_ref = out.whitening * Vector2(1.0, 0.0);

    Vector2 c[2];
    c[0] = air_ref;
    std::size_t far = 0;
    for (std::size_t i = 1; i < w.size(); ++i) {
        if ((w[i] - air_ref).squaredNorm() > (w[far] - air_ref).squaredNorm()) {
            far = i;
        }
    }
    c[1] = w[far];

    const std::size_t max_iter = 4 * points.size() + 16;
    for (std::size_t it = 0; it < max_iter; ++it) {
        bool changed = false;
        for (std::size_t i = 0; i < w.size(); ++i) {
            const PixelLabel lbl = (w[i] - c[1]).squaredNorm() < (w[i] - c[0]).squaredNorm() ? PixelLabel::Target
                                                                                              : PixelLabel::Air;
            changed = changed || lbl != out.labels[i];
            out.labels[i] = lbl;
        }
        if (!changed && it > 0) {
            break;
        }
        Vector2 sum[2] = {Vector2::Zero(), Vector2::Zero()};
        int count[2] = {0, 0};
        for (std::size_t i = 0; i < w.size(); ++i) {
            const int l = static_cast<int>(out.labels[i]);
            sum[l] += w[i];
            ++count[l];
        }
        for (int l = 0; l < 2; ++l) {
            if (count[l] > 0) {
                c[l] = sum[l] / count[l];
            }
        }
        out.objective.push_back(objective_value(w, out.labels, c));
        out.iterations = static_cast<int>(it) + 1;
    }

    int count[2] = {0, 0};
    for (auto l : out.labels) {
        ++count[static_cast<int>(l)];
    }
    // Label the cluster nearer (1, 0) as air.
    if (count[0] > 0 && count[1] > 0 && (c[1] - air_ref).squaredNorm() < (c[0] - air_ref).squaredNorm()) {
        std::swap(c[0], c[1]);
        for (auto &l : out.labels) {
            l = l == PixelLabel::Air ? PixelLabel::Target : PixelLabel::Air;
        }
        std::swap(count[0], count[1]);
    }
    const Matrix2 unwhiten = out.whitening.inverse();
    if (count[0] == 0) {
        // Everything collapsed onto the second seed: treat the lone cluster as air.
        for (auto &l : out.labels) {
            l = PixelLabel::Air;
        }
        out.centroid_air = unwhiten * c[1];
        return out;
    }
    out.centroid_air = unwhiten * c[0];
    if (count[1] > 0) {
        out.centroid_target = unwhiten * c[1];
        out.has_target = true;
    }
    return out;
}

std::vector<Vector2> property_points(const ContrastMap &map) {
    std::vector<Vector2> points(map.size());
    for (int i = 0; i < map.size(); ++i) {
        points[i] = Vector2(map.eps_r[i], map.sigma[i]);
    }
    return points;
}

MaterialMatch classify_material(const Vector2 &centroid, const std::vector<MaterialRecord> &database,
                                const Matrix2 &whitening) {
    if (database.empty()) {
        throw ConfigError("material database is empty");
    }
    MaterialMatch best;
    best.distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < database.size(); ++i) {
        const Vector2 rec(database[i].eps_r, database[i].sigma);
        const double d = (whitening * (centroid - rec)).norm();
        if (d < best.distance) {
            best.distance = d;
            best.index = static_cast<int>(i);
            best.name = database[i].name;
        }
    }
    return best;
}

MaterialMatch classify_material(const ClusterResult &clusters, const std::vector<MaterialRecord> &database) {
    if (!clusters.has_target) {
        MaterialMatch none;
        none.no_target = true;
        return none;
    }
    return classify_material(clusters.centroid_target, database, clusters.whitening);
}

void write_clusters_csv(const std::string &path, const ClusterResult &clusters, int grid_side) {
    if (static_cast<long>(clusters.labels.size()) != static_cast<long>(grid_side) * grid_side) {
        throw ConfigError("cluster labels do not match the grid");
    }
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot open " + path + " for writing");
    }
    out << "ix,iy,label\n";
    for (int iy = 0; iy < grid_side; ++iy) {
        for (int ix = 0; ix < grid_side; ++ix) {
            const PixelLabel l = clusters.labels[iy * grid_side + ix];
            out << ix << ',' << iy << ',' << (l == PixelLabel::Air ? "air" : "target") << '\n';
        }
    }
}

} // namespace emsense
