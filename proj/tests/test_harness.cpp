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

#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace emsense;

namespace {

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string &name) {
    const fs::path p = fs::temp_directory_path() / ("emsense_test_harness_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

nlohmann::json small_json() {
    auto j = nlohmann::json::parse(slurp(fs::path(EMSENSE_SOURCE_DIR) / "configs/desk.json"));
    j["scenario"]["n_tx"] = 16;
    j["scenario"]["n_rx"] = 4;
    j["scenario"]["n_pilots"] = 4;
    j["scenario"]["n_subcarriers"] = 2;
    j["scenario"]["grid_side"] = 8;
    j["scenario"]["forward_oversample"] = 1;
    return j;
}

fs::path write_json(const fs::path &dir, const nlohmann::json &j) {
    const fs::path p = dir / "cfg.json";
    std::ofstream(p) << j.dump(2);
    return p;
}

int run_cli(const std::string &args) {
    const std::string cmd = std::string(EMSENSE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

Config small_config() { return parse_config(small_json().dump()); }

} // namespace

TEST_CASE("CLI exit codes") {
    const fs::path dir = scratch("exit");
    CHECK(run_cli("") == 2);
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("simulate --config " + (dir / "missing.json").string()) == 2);
    {
        std::ofstream(dir / "broken.json") << "{ \"scenario\": ";
        CHECK(run_cli("simulate --config " + (dir / "broken.json").string()) == 2);
    }
    {
        auto j = small_json();
        j["scenario"]["unexpected"] = 1;
        CHECK(run_cli("simulate --config " + write_json(dir, j).string() + " --out " + dir.string()) == 2);
    }
    {
        auto j = small_json();
        j["scenario"]["grid_side"] = 2; // cells too large electrically
        CHECK(run_cli("simulate --config " + write_json(dir, j).string() + " --out " + dir.string()) == 2);
    }
    {
        auto j = small_json();
        j["materials"] = {{{"name", "vacuum"}, {"eps_r", 1.0}, {"sigma", 0.0}}};
        j["phantom"]["material"] = "vacuum";
        // Finite SNR with no scattered signal has no defined noise power.
        CHECK(run_cli("simulate --config " + write_json(dir, j).string() + " --out " + dir.string()) == 3);
    }
    CHECK(run_cli("simulate --config " + write_json(dir, small_json()).string() + " --oversample 0") == 2);
}

TEST_CASE("CLI verbs write their artifacts") {
    const fs::path dir = scratch("verbs");
    const std::string cfg = write_json(dir, small_json()).string();
    const std::string out = (dir / "out").string();
    REQUIRE(run_cli("simulate --config " + cfg + " --out " + out) == 0);
    CHECK(fs::exists(dir / "out/y_1.csv"));
    CHECK(fs::exists(dir / "out/y_2.csv"));
    CHECK(fs::exists(dir / "out/truth.csv"));
    CHECK(slurp(dir / "out/y_1.csv").rfind("rx,pilot,re,im\n", 0) == 0);

    REQUIRE(run_cli("design-beams --config " + cfg + " --out " + out) == 0);
    const std::string beam = slurp(dir / "out/beamform.csv");
    CHECK(beam.rfind("k,gram_error,mu_born_designed,mu_born_random\n", 0) == 0);
    CHECK(std::count(beam.begin(), beam.end(), '\n') == 3);
    CHECK(fs::exists(dir / "out/w_2.bin"));

    REQUIRE(run_cli("reconstruct --config " + cfg + " --out " + out) == 0);
    CHECK(slurp(dir / "out/rpcd.csv").rfind("ix,iy,eps_r,sigma\n", 0) == 0);
    CHECK(slurp(dir / "out/solver_trace.csv").rfind("outer_iter,tau,residual,mixed_norm,nmse_vs_truth_if_known\n", 0) == 0);
    CHECK(fs::exists(dir / "out/rpcd_eps_r.pgm"));

    REQUIRE(run_cli("classify --config " + cfg + " --out " + out + " --trials 2") == 0);
    const std::string cls = slurp(dir / "out/classification.csv");
    CHECK(cls.rfind("seed,true_material,predicted,distance,correct\n", 0) == 0);
    CHECK(std::count(cls.begin(), cls.end(), '\n') == 3);
    CHECK(slurp(dir / "out/clusters.csv").rfind("ix,iy,label\n", 0) == 0);

    REQUIRE(run_cli("diagnose --config " + cfg + " --out " + out) == 0);
    CHECK(slurp(dir / "out/coherence.csv").rfind("K,d,mu\n", 0) == 0);
    CHECK(slurp(dir / "out/edof.csv").rfind("M,d,edof\n", 0) == 0);

    CHECK(run_cli("sweep --config " + cfg + " --out " + out) == 2); // no experiment object
}

TEST_CASE("config JSON round trip and validation") {
    Config c = small_config();
    c.scenario.snr_db = std::numeric_limits<double>::infinity();
    c.phantom.shape = PhantomShape::Disk;
    c.phantom.disk_center = {0.001, -0.002};
    c.phantom.disk_radius = 0.004;
    const Config back = parse_config(dump_config(c));
    CHECK(dump_config(back) == dump_config(c));
    CHECK(back.scenario.noiseless());
    CHECK(back.scenario.n_tx == 16);
    CHECK(back.phantom.disk_radius == 0.004);
    CHECK(back.materials.size() == c.materials.size());

    auto j = small_json();
    j["phantom"]["material"] = "unobtainium";
    CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);
    j = small_json();
    j["scenario"]["n_rx"] = 0;
    CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);
    j = small_json();
    j["scenario"]["snr_db"] = "inf";
    CHECK(parse_config(j.dump()).scenario.noiseless());
    CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigError);
}

TEST_CASE("no-noise, no-target pipeline") {
    Config c = small_config();
    c.scenario.snr_db = std::numeric_limits<double>::infinity();
    Pipeline p(c);
    const PipelineResult r = p.run("none", 3);
    CHECK(r.nmse_db == kNmseFloorDb);
    CHECK(r.match.name == "no-target");
    CHECK(r.match.no_target);
    CHECK_FALSE(r.clusters.has_target);
}

TEST_CASE("pipeline outputs are deterministic at seed 7") {
    const Config c = load_config(std::string(EMSENSE_SOURCE_DIR) + "/configs/desk.json");
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    write_pipeline_outputs(a.string(), run_pipeline(c, 7), 2.0 * kPi * c.scenario.f_c, false);
    write_pipeline_outputs(b.string(), run_pipeline(c, 7), 2.0 * kPi * c.scenario.f_c, false);
    CHECK(slurp(a / "rpcd.csv").size() > 0);
    CHECK(slurp(a / "rpcd.csv") == slurp(b / "rpcd.csv"));
    CHECK(slurp(a / "solver_trace.csv") == slurp(b / "solver_trace.csv"));
}

TEST_CASE("higher SNR does not worsen NMSE on the desk fixture") {
    const Config c = load_config(std::string(EMSENSE_SOURCE_DIR) + "/configs/desk.json");
    Pipeline p(c);
    const double n30 = p.run(c.phantom.material, 11, 30.0).nmse_db;
    const double n10 = p.run(c.phantom.material, 11, 10.0).nmse_db;
    MESSAGE("NMSE at 30 dB " << n30 << ", at 10 dB " << n10);
    CHECK(n30 <= n10);
}

TEST_CASE("experiment parsing") {
    auto j = small_json();
    j["experiment"] = {{"axis", "distance"}, {"values", {0.1, 0.2}}, {"trials", 3}, {"emit_heatmaps", true}};
    const ExperimentSpec e = parse_experiment(j.dump());
    CHECK(e.axis == SweepAxis::Distance);
    CHECK(e.values.size() == 2);
    CHECK(e.trials == 3);
    CHECK(e.emit_heatmaps);
    j["experiment"]["values"] = nlohmann::json::array();
    CHECK_THROWS_AS(parse_experiment(j.dump()), ConfigError);
    j["experiment"]["values"] = {1.0};
    j["experiment"]["trials"] = 0;
    CHECK_THROWS_AS(parse_experiment(j.dump()), ConfigError);
    j["experiment"]["trials"] = 1;
    j["experiment"]["axis"] = "bandwidth";
    CHECK_THROWS_AS(parse_experiment(j.dump()), ConfigError);
    CHECK(parse_sweep_axis(to_string(SweepAxis::Subcarriers)) == SweepAxis::Subcarriers);
}

TEST_CASE("axis application") {
    const Config c = small_config();
    const Config d = apply_axis(c, SweepAxis::Distance, 0.4);
    CHECK(d.scenario.target_distance() == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(d.scenario.tx_center.y == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(apply_axis(c, SweepAxis::Subcarriers, 64).scenario.n_subcarriers == 64);
    CHECK(apply_axis(c, SweepAxis::Snr, 0).scenario.snr_db == 0.0);
    CHECK_THROWS_AS(apply_axis(c, SweepAxis::Subcarriers, 2.5), ConfigError);
}

TEST_CASE("trial seeds are distinct and reproducible") {
    std::set<std::uint64_t> seen;
    for (std::size_t a = 0; a < 4; ++a)
        for (int t = 0; t < 50; ++t)
            seen.insert(trial_seed(9, a, t));
    CHECK(seen.size() == 200);
    CHECK(trial_seed(9, 1, 2) == trial_seed(9, 1, 2));
    CHECK(trial_seed(9, 1, 2) != trial_seed(10, 1, 2));
}

TEST_CASE("sweep rows and crash isolation") {
    const Config c = small_config();
    ExperimentSpec one;
    one.axis = SweepAxis::Snr;
    one.values = {20.0};
    one.trials = 1;
    const auto rows = run_sweep(c, one, 5);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].error.empty());
    CHECK(rows[0].seed == trial_seed(5, 0, 0));

    ExperimentSpec invalid;
    invalid.axis = SweepAxis::Subcarriers;
    invalid.values = {2.0, 0.0};
    CHECK_THROWS_AS(run_sweep(c, invalid, 5), ConfigError);

    // 5 mm puts the transmitter inside the 2 cm domain: that point fails, the others run.
    ExperimentSpec mixed;
    mixed.axis = SweepAxis::Distance;
    mixed.values = {0.1, 0.005, 0.2};
    mixed.trials = 2;
    const auto m = run_sweep(c, mixed, 5);
    REQUIRE(m.size() == 6);
    CHECK(m[0].error.empty());
    CHECK(m[1].error.empty());
    CHECK_FALSE(m[2].error.empty());
    CHECK_FALSE(m[3].error.empty());
    CHECK(m[4].error.empty());
    CHECK(m[5].error.empty());
    for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK(m[i].trial == static_cast<int>(i % 2));
        CHECK(m[i].axis_value == mixed.values[i / 2]);
    }
    const fs::path dir = scratch("sweep");
    write_sweep_csv((dir / "sweep.csv").string(), m);
    const std::string csv = slurp(dir / "sweep.csv");
    CHECK(csv.rfind("axis_value,trial,seed,nmse_db,mu,edof,predicted_material,correct", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
}

TEST_CASE("heatmap images") {
    const fs::path dir = scratch("pgm");
    VecR v(4);
    v << 0.0, 1.0, 2.0, 4.0;
    write_pgm((dir / "a.pgm").string(), v, 2, 0.0, 4.0);
    const std::string img = slurp(dir / "a.pgm");
    const std::string header = "P5\n2 2\n255\n";
    REQUIRE(img.size() == header.size() + 4);
    CHECK(img.substr(0, header.size()) == header);
    // Top row of the image is the largest iy.
    CHECK(static_cast<unsigned char>(img[header.size() + 0]) == 128);
    CHECK(static_cast<unsigned char>(img[header.size() + 1]) == 255);
    CHECK(static_cast<unsigned char>(img[header.size() + 2]) == 0);
    CHECK(static_cast<unsigned char>(img[header.size() + 3]) == 64);
}
