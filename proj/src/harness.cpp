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

#include "emsense/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace emsense {

namespace fs = std::filesystem;

namespace {

const std::string kNoTarget = "none";

std::string format_double(double v) {
    std::ostringstream ss;
    ss << std::setprecision(17) << v;
    return ss.str();
}

} // namespace

Pipeline::Pipeline(const Config &config, ReconstructOptions options) : config_(config), options_(options) {
    config_.scenario.validate();
    validate_database(config_.materials);
    inversion_ = build_channels(config_.scenario, build_grid(config_.scenario), GreenStorage::Dense);
    designs_ = beamformer_for_all_subcarriers(inversion_, config_.scenario.n_pilots, config_.scenario.power_budget);
    beamformers_ = transmit_matrices(designs_);
}

const ChannelSet &Pipeline::forward_channels() const {
    if (config_.scenario.forward_oversample == 1) {
        return inversion_;
    }
    if (!forward_) {
        const GridGeometry fine =
            build_grid(config_.scenario.domain_extent, config_.scenario.grid_side * config_.scenario.forward_oversample);
        forward_ = std::make_unique<ChannelSet>(build_channels(config_.scenario, fine, GreenStorage::OnDemand));
    }
    return *forward_;
}

double Pipeline::coherence() const {
    if (!coherence_) {
        coherence_ = mutual_coherence_from_gram(born_initial_system(inversion_, beamformers_).gram());
    }
    return *coherence_;
}

double Pipeline::edof() const { return emsense::edof(inversion_.carriers[inversion_.carriers.size() / 2].h1); }

ContrastMap Pipeline::truth_on(const std::string &material, const GridGeometry &grid) const {
    if (material == kNoTarget) {
        return ContrastMap::air(grid.side);
    }
    const auto rec = find_material(config_.materials, material);
    if (!rec) {
        throw ConfigError("unknown material '" + material + "'");
    }
    return make_phantom(config_.phantom, *rec, grid);
}

ContrastMap Pipeline::truth(const std::string &material) const { return truth_on(material, inversion_.grid); }

const ObservationSet &Pipeline::clean_observation(const std::string &material) {
    auto it = clean_.find(material);
    if (it == clean_.end()) {
        const ChannelSet &fwd = forward_channels();
        // The same beamformers drive both grids; they are designed on the inversion grid.
        ObservationSet obs = noiseless_observation(fwd, truth_on(material, fwd.grid), beamformers_);
        it = clean_.emplace(material, std::move(obs)).first;
    }
    return it->second;
}

ObservationSet Pipeline::observation(const std::string &material, std::uint64_t seed, std::optional<double> snr_db) {
    const double snr = snr_db.value_or(config_.scenario.snr_db);
    const ObservationSet &clean = clean_observation(material);
    if (std::isinf(snr) && snr > 0) {
        return clean;
    }
    return add_noise(clean, snr, seed);
}

double Pipeline::discrepancy(const ObservationSet &obs, bool noiseless) const {
    return noiseless ? kNoiselessDiscrepancy * obs.stacked().norm() : obs.noise_norm();
}

PipelineResult Pipeline::run(const std::string &material, std::uint64_t seed, std::optional<double> snr_db) {
    const double snr = snr_db.value_or(config_.scenario.snr_db);
    const bool noiseless = std::isinf(snr) && snr > 0;
    return run_observation(material, observation(material, seed, snr), noiseless, seed);
}

PipelineResult Pipeline::run_observation(const std::string &material, const ObservationSet &obs, bool noiseless,
                                         std::uint64_t seed) {
    PipelineResult r;
    r.seed = seed;
    r.true_material = material;
    r.truth = truth(material);
    r.reconstruction = iterative_reconstruct(inversion_, beamformers_, obs, discrepancy(obs, noiseless), options_,
                                             &r.truth);
    r.estimate = r.reconstruction.map;
    r.nmse_db = nmse_db(r.truth, r.estimate, inversion_.omega_c);
    r.mu = coherence();
    r.edof = edof();
    r.clusters = whitened_kmeans2(property_points(r.estimate), seed);
    r.match = classify_material(r.clusters, config_.materials);
    r.correct = r.match.no_target ? material == kNoTarget : r.match.name == material;
    return r;
}

PipelineResult run_pipeline(const Config &config, std::uint64_t seed) {
    Pipeline p(config);
    return p.run(config.phantom.material, seed);
}

void write_classification_csv(const std::string &path, const std::vector<PipelineResult> &results) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot open " + path + " for writing");
    }
    out << "seed,true_material,predicted,distance,correct\n" << std::setprecision(17);
    for (const auto &r : results) {
        out << r.seed << ',' << r.true_material << ',' << r.match.name << ',' << r.match.distance << ','
            << (r.correct ? 1 : 0) << '\n';
    }
}

void write_pgm(const std::string &path, const VecR &values, int side, double lo, double hi) {
    if (values.size() != static_cast<Eigen::Index>(side) * side) {
        throw ConfigError("heatmap size does not match the grid");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot open " + path + " for writing");
    }
    out << "P5\n" << side << ' ' << side << "\n255\n";
    const double span = hi > lo ? hi - lo : 1.0;
    for (int iy = side - 1; iy >= 0; --iy) {
        for (int ix = 0; ix < side; ++ix) {
            const double t = std::clamp((values[iy * side + ix] - lo) / span, 0.0, 1.0);
            out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * t))));
        }
    }
}

void write_heatmaps(const std::string &dir, const std::string &prefix, const ContrastMap &map,
                    const ContrastMap &scale_reference) {
    const double eps_hi = std::max(scale_reference.eps_r.maxCoeff(), map.eps_r.maxCoeff());
    const double sig_hi = std::max(scale_reference.sigma.maxCoeff(), map.sigma.maxCoeff());
    write_pgm((fs::path(dir) / (prefix + "_eps_r.pgm")).string(), map.eps_r, map.grid_side, 1.0, eps_hi);
    write_pgm((fs::path(dir) / (prefix + "_sigma.pgm")).string(), map.sigma, map.grid_side, 0.0, sig_hi);
}

void write_pipeline_outputs(const std::string &dir, const PipelineResult &result, double /*omega_c*/,
                            bool heatmaps) {
    fs::create_directories(dir);
    const fs::path d(dir);
    write_contrast_csv((d / "truth.csv").string(), result.truth);
    write_contrast_csv((d / "rpcd.csv").string(), result.estimate);
    write_solver_trace_csv((d / "solver_trace.csv").string(), result.reconstruction);
    write_clusters_csv((d / "clusters.csv").string(), result.clusters, result.estimate.grid_side);
    write_classification_csv((d / "classification.csv").string(), {result});
    if (heatmaps) {
        write_heatmaps(dir, "truth", result.truth, result.truth);
        write_heatmaps(dir, "rpcd", result.estimate, result.truth);
    }
}

SweepAxis parse_sweep_axis(const std::string &name) {
    if (name == "snr")
        return SweepAxis::Snr;
    if (name == "subcarriers")
        return SweepAxis::Subcarriers;
    if (name == "distance")
        return SweepAxis::Distance;
    throw ConfigError("unknown sweep axis '" + name + "' (expected snr, subcarriers or distance)");
}

std::string to_string(SweepAxis axis) {
    switch (axis) {
    case SweepAxis::Snr:
        return "snr";
    case SweepAxis::Subcarriers:
        return "subcarriers";
    case SweepAxis::Distance:
        return "distance";
    }
    return "snr";
}

void ExperimentSpec::validate() const {
    if (values.empty())
        throw ConfigError("experiment: axis values must be nonempty");
    if (trials < 1)
        throw ConfigError("experiment: trials must be >= 1");
    if (axis == SweepAxis::Subcarriers)
        for (double v : values)
            if (v < 1 || v != std::floor(v))
                throw ConfigError("experiment: subcarrier counts must be positive integers");
    if (axis == SweepAxis::Distance)
        for (double v : values)
            if (!(v > 0))
                throw ConfigError("experiment: distances must be positive");
}

ExperimentSpec parse_experiment(const std::string &json_text) {
    using nlohmann::json;
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error &e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    ExperimentSpec spec;
    if (!root.contains("experiment")) {
        throw ConfigError("config has no 'experiment' object");
    }
    const json &e = root.at("experiment");
    try {
        spec.axis = parse_sweep_axis(e.at("axis").get<std::string>());
        spec.values = e.at("values").get<std::vector<double>>();
        if (e.contains("trials"))
            spec.trials = e.at("trials").get<int>();
        if (e.contains("emit_heatmaps"))
            spec.emit_heatmaps = e.at("emit_heatmaps").get<bool>();
        if (e.contains("materials"))
            spec.materials = e.at("materials").get<std::vector<std::string>>();
    } catch (const json::exception &ex) {
        throw ConfigError(std::string("experiment: ") + ex.what());
    }
    spec.validate();
    return spec;
}

Config apply_axis(const Config &base, SweepAxis axis, double value) {
    Config c = base;
    switch (axis) {
    case SweepAxis::Snr:
        c.scenario.snr_db = value;
        break;
    case SweepAxis::Subcarriers:
        if (value != std::floor(value) || !(value >= 0.0) || value > 1e6)
            throw ConfigError("subcarrier count must be a nonnegative integer, got " + std::to_string(value));
        c.scenario.n_subcarriers = static_cast<int>(value);
        break;
    case SweepAxis::Distance: {
        // Move the transmitter along its current bearing from the domain center.
        const Point2 center = c.scenario.domain_extent.center();
        const double dx = c.scenario.tx_center.x - center.x;
        const double dy = c.scenario.tx_center.y - center.y;
        const double r = std::hypot(dx, dy);
        if (r == 0.0)
            throw ConfigError("distance sweep needs the transmitter away from the domain center");
        c.scenario.tx_center = {center.x + value * dx / r, center.y + value * dy / r};
        break;
    }
    }
    c.scenario.validate();
    return c;
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t axis_index, int trial) {
    return derive_seed(master, (static_cast<std::uint64_t>(axis_index) << 32) | static_cast<std::uint32_t>(trial));
}

std::vector<SweepRow> run_sweep(const Config &config, const ExperimentSpec &spec, std::uint64_t master_seed,
                                const ReconstructOptions &options) {
    spec.validate();
    std::vector<SweepRow> rows;
    std::unique_ptr<Pipeline> shared;
    for (std::size_t a = 0; a < spec.values.size(); ++a) {
        const double value = spec.values[a];
        std::unique_ptr<Pipeline> local;
        std::string setup_error;
        Pipeline *pipeline = nullptr;
        try {
            if (spec.axis == SweepAxis::Snr) {
                // SNR does not change channels or beamformers.
                if (!shared)
                    shared = std::make_unique<Pipeline>(config, options);
                pipeline = shared.get();
            } else {
                local = std::make_unique<Pipeline>(apply_axis(config, spec.axis, value), options);
                pipeline = local.get();
            }
        } catch (const std::exception &e) {
            setup_error = e.what();
        }
        for (int t = 0; t < spec.trials; ++t) {
            SweepRow row;
            row.axis_value = value;
            row.trial = t;
            row.seed = trial_seed(master_seed, a, t);
            row.true_material =
                spec.materials.empty() ? config.phantom.material : spec.materials[t % spec.materials.size()];
            if (!pipeline) {
                row.error = setup_error;
                rows.push_back(row);
                continue;
            }
            try {
                const std::optional<double> snr =
                    spec.axis == SweepAxis::Snr ? std::optional<double>(value) : std::nullopt;
                const PipelineResult r = pipeline->run(row.true_material, row.seed, snr);
                row.nmse_db = r.nmse_db;
                row.mu = r.mu;
                row.edof = r.edof;
                row.predicted_material = r.match.name;
                row.correct = r.correct;
                if (spec.emit_heatmaps && !spec.out_dir.empty()) {
                    const std::string stem = "a" + std::to_string(a) + "_t" + std::to_string(t);
                    fs::create_directories(spec.out_dir);
                    write_heatmaps(spec.out_dir, stem, r.estimate, r.truth);
                }
            } catch (const std::exception &e) {
                row.error = e.what();
            }
            rows.push_back(row);
        }
    }
    return rows;
}

void write_sweep_csv(const std::string &path, const std::vector<SweepRow> &rows) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot open " + path + " for writing");
    }
    out << "axis_value,trial,seed,nmse_db,mu,edof,predicted_material,correct,error\n";
    for (const auto &r : rows) {
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out << format_double(r.axis_value) << ',' << r.trial << ',' << r.seed << ',';
        if (r.error.empty()) {
            out << format_double(r.nmse_db) << ',' << format_double(r.mu) << ',' << format_double(r.edof) << ','
                << r.predicted_material << ',' << (r.correct ? 1 : 0) << ",\n";
        } else {
            out << ",,,,0," << err << '\n';
        }
    }
}

} // namespace emsense
