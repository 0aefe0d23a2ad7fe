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

#ifndef EMSENSE_HARNESS_HPP
#define EMSENSE_HARNESS_HPP

#include "emsense/beamform.hpp"
#include "emsense/classify.hpp"
#include "emsense/config_json.hpp"
#include "emsense/emfwd.hpp"
#include "emsense/invert.hpp"
#include "emsense/scene.hpp"
#include "emsense/sensing.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace emsense {

// Discrepancy level used when the receiver is noiseless, relative to ||z~||.
constexpr double kNoiselessDiscrepancy = 1e-6;

struct PipelineResult {
    std::uint64_t seed = 0;
    std::string true_material;
    ContrastMap truth;    // on the inversion grid
    ContrastMap estimate;
    Reconstruction reconstruction;
    double nmse_db = 0.0;
    double mu = 0.0;
    double edof = 0.0;
    ClusterResult clusters;
    MaterialMatch match;
    bool correct = false;
};

// Per-scenario state shared by every trial: channels on both grids, beamformers, the
// Born sensing system and the noiseless observations per material. Only the receiver
// noise changes from one seed to the next.
class Pipeline {
  public:
    explicit Pipeline(const Config &config, ReconstructOptions options = {});

    const Config &config() const { return config_; }
    const ChannelSet &channels() const { return inversion_; }
    const ChannelSet &forward_channels() const;
    const std::vector<BeamformDesign> &designs() const { return designs_; }
    const std::vector<MatC> &beamformers() const { return beamformers_; }

    // Mutual coherence of the Born stacked matrix with the designed beamformers.
    double coherence() const;
    // EDOF of H1 at the central subcarrier.
    double edof() const;

    // Ground truth on the inversion grid; "none" gives an empty (all-air) domain.
    ContrastMap truth(const std::string &material) const;
    const ObservationSet &clean_observation(const std::string &material);
    ObservationSet observation(const std::string &material, std::uint64_t seed, std::optional<double> snr_db = {});
    double discrepancy(const ObservationSet &obs, bool noiseless) const;

    PipelineResult run(const std::string &material, std::uint64_t seed, std::optional<double> snr_db = {});
    PipelineResult run_observation(const std::string &material, const ObservationSet &obs, bool noiseless,
                                   std::uint64_t seed);

  private:
    ContrastMap truth_on(const std::string &material, const GridGeometry &grid) const;

    Config config_;
    ReconstructOptions options_;
    ChannelSet inversion_;
    mutable std::unique_ptr<ChannelSet> forward_;
    std::vector<BeamformDesign> designs_;
    std::vector<MatC> beamformers_;
    mutable std::optional<double> coherence_;
    std::map<std::string, ObservationSet> clean_;
};

// One end-to-end run with the config's phantom material and SNR.
PipelineResult run_pipeline(const Config &config, std::uint64_t seed);

// Artifacts of a single run: rpcd.csv, truth.csv, solver_trace.csv, clusters.csv,
// classification.csv and optional PGM heatmaps.
void write_pipeline_outputs(const std::string &dir, const PipelineResult &result, double omega_c, bool heatmaps);
void write_classification_csv(const std::string &path, const std::vector<PipelineResult> &results);

// 8-bit binary graymap, top row = largest iy; values mapped linearly from [lo, hi].
void write_pgm(const std::string &path, const VecR &values, int side, double lo, double hi);
void write_heatmaps(const std::string &dir, const std::string &prefix, const ContrastMap &map,
                    const ContrastMap &scale_reference);

enum class SweepAxis { Snr, Subcarriers, Distance };
SweepAxis parse_sweep_axis(const std::string &name);
std::string to_string(SweepAxis axis);

struct ExperimentSpec {
    SweepAxis axis = SweepAxis::Snr;
    std::vector<double> values;
    int trials = 1;
    std::string out_dir;
    bool emit_heatmaps = false;
    // Trial t uses materials[t % size]; empty means the phantom material.
    std::vector<std::string> materials;

    void validate() const;
};

// Optional "experiment" object of a config file.
ExperimentSpec parse_experiment(const std::string &json_text);

struct SweepRow {
    double axis_value = 0.0;
    int trial = 0;
    std::uint64_t seed = 0;
    double nmse_db = 0.0;
    double mu = 0.0;
    double edof = 0.0;
    std::string true_material;
    std::string predicted_material;
    bool correct = false;
    std::string error; // empty on success
};

// Scenario for one axis value.
Config apply_axis(const Config &base, SweepAxis axis, double value);
// Seed of trial t at axis index a: counter-based split of the master seed.
std::uint64_t trial_seed(std::uint64_t master, std::size_t axis_index, int trial);

std::vector<SweepRow> run_sweep(const Config &config, const ExperimentSpec &spec, std::uint64_t master_seed,
                                const ReconstructOptions &options = {});
void write_sweep_csv(const std::string &path, const std::vector<SweepRow> &rows);

} // namespace emsense

#endif
