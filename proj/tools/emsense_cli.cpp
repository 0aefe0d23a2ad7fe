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
#include "emsense/matrix_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace emsense;

namespace {

struct Options {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    bool no_noise = false;
    std::optional<int> oversample;
    std::optional<int> trials;
};

std::string read_text(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Config resolved_config(const Options &o) {
    Config c = o.config_path.empty() ? Config{} : parse_config(read_text(o.config_path));
    if (o.seed)
        c.scenario.rng_seed = *o.seed;
    if (o.no_noise)
        c.scenario.snr_db = std::numeric_limits<double>::infinity();
    if (o.oversample)
        c.scenario.forward_oversample = *o.oversample;
    c.scenario.validate();
    return c;
}

void save_config(const Options &o, const Config &c) {
    fs::create_directories(o.out_dir);
    std::ofstream((fs::path(o.out_dir) / "config.json").string()) << dump_config(c) << '\n';
}

int cmd_simulate(const Options &o) {
    const Config c = resolved_config(o);
    save_config(o, c);
    Pipeline p(c);
    const ObservationSet obs = p.observation(c.phantom.material, c.scenario.rng_seed);
    write_observation_csv(o.out_dir, obs);
    write_contrast_csv((fs::path(o.out_dir) / "truth.csv").string(), p.truth(c.phantom.material));
    std::cout << "wrote " << obs.carriers.size() << " subcarrier observations to " << o.out_dir << '\n';
    return 0;
}

int cmd_design_beams(const Options &o) {
    const Config c = resolved_config(o);
    save_config(o, c);
    Pipeline p(c);
    const ChannelSet &ch = p.channels();
    const std::vector<VecC> zero(ch.carriers.size(), VecC::Zero(ch.pixels()));
    std::ofstream out((fs::path(o.out_dir) / "beamform.csv").string());
    out << "k,gram_error,mu_born_designed,mu_born_random\n" << std::setprecision(17);
    const double share = c.scenario.power_budget / c.scenario.n_subcarriers;
    for (int k = 0; k < ch.n_subcarriers(); ++k) {
        const MatC random =
            random_beamformer(ch.n_tx(), c.scenario.n_pilots, share, derive_seed(c.scenario.rng_seed, k));
        const double mu_designed = mutual_coherence(sensing_matrix(ch, k, p.beamformers()[k], zero[k]));
        const double mu_random = mutual_coherence(sensing_matrix(ch, k, random, zero[k]));
        out << k + 1 << ',' << p.designs()[k].gram_error << ',' << mu_designed << ',' << mu_random << '\n';
        write_matrix((fs::path(o.out_dir) / ("w_" + std::to_string(k + 1) + ".bin")).string(), p.beamformers()[k]);
    }
    std::cout << "designed " << ch.n_subcarriers() << " beamformers into " << o.out_dir << '\n';
    return 0;
}

// Observation from a previous `simulate` into the same directory, otherwise a fresh one.
ObservationSet load_or_simulate(const Options &o, const Config &c, Pipeline &p) {
    if (fs::exists(fs::path(o.out_dir) / "noise.csv"))
        return read_observation_csv(o.out_dir, c.scenario.n_subcarriers);
    ObservationSet obs = p.observation(c.phantom.material, c.scenario.rng_seed);
    write_observation_csv(o.out_dir, obs);
    return obs;
}

int cmd_reconstruct(const Options &o) {
    const Config c = resolved_config(o);
    save_config(o, c);
    Pipeline p(c);
    const ObservationSet obs = load_or_simulate(o, c, p);
    const PipelineResult r = p.run_observation(c.phantom.material, obs, c.scenario.noiseless(), c.scenario.rng_seed);
    write_pipeline_outputs(o.out_dir, r, p.channels().omega_c, true);
    std::cout << "nmse_db " << r.nmse_db << (r.reconstruction.converged ? "" : " (outer loop not converged)") << '\n';
    return 0;
}

int cmd_classify(const Options &o) {
    const Config c = resolved_config(o);
    save_config(o, c);
    Pipeline p(c);
    const int trials = o.trials.value_or(1);
    std::vector<PipelineResult> results;
    int correct = 0;
    for (int t = 0; t < trials; ++t) {
        const std::uint64_t seed = trials == 1 ? c.scenario.rng_seed : derive_seed(c.scenario.rng_seed, t);
        results.push_back(p.run(c.phantom.material, seed));
        correct += results.back().correct ? 1 : 0;
    }
    write_classification_csv((fs::path(o.out_dir) / "classification.csv").string(), results);
    write_clusters_csv((fs::path(o.out_dir) / "clusters.csv").string(), results.back().clusters,
                       c.scenario.grid_side);
    write_contrast_csv((fs::path(o.out_dir) / "rpcd.csv").string(), results.back().estimate);
    std::cout << "accuracy " << correct << '/' << trials << '\n';
    return 0;
}

int cmd_sweep(const Options &o) {
    if (o.config_path.empty())
        throw ConfigError("sweep needs --config with an 'experiment' object");
    const Config c = resolved_config(o);
    ExperimentSpec spec = parse_experiment(read_text(o.config_path));
    if (o.trials)
        spec.trials = *o.trials;
    spec.out_dir = o.out_dir;
    fs::create_directories(o.out_dir);
    const auto rows = run_sweep(c, spec, c.scenario.rng_seed);
    write_sweep_csv((fs::path(o.out_dir) / "sweep.csv").string(), rows);
    std::size_t failed = 0;
    for (const auto &r : rows)
        failed += r.error.empty() ? 0 : 1;
    std::cout << rows.size() << " rows (" << failed << " failed) written to " << o.out_dir << "/sweep.csv\n";
    return 0;
}

std::vector<double> diagnose_list(const nlohmann::json &e, const char *key, double fallback) {
    if (e.contains(key))
        return e.at(key).get<std::vector<double>>();
    return {fallback};
}

int cmd_diagnose(const Options &o) {
    const Config c = resolved_config(o);
    save_config(o, c);
    nlohmann::json d = nlohmann::json::object();
    if (!o.config_path.empty()) {
        const auto root = nlohmann::json::parse(read_text(o.config_path));
        if (root.contains("experiment") && root["experiment"].contains("diagnose"))
            d = root["experiment"]["diagnose"];
    }
    const auto ks = diagnose_list(d, "subcarriers", c.scenario.n_subcarriers);
    const auto ds = diagnose_list(d, "distances", c.scenario.target_distance());
    const auto sides = diagnose_list(d, "grid_sides", c.scenario.grid_side);

    std::ofstream coh((fs::path(o.out_dir) / "coherence.csv").string());
    coh << "K,d,mu\n" << std::setprecision(17);
    for (double dist : ds) {
        const Config cd = apply_axis(c, SweepAxis::Distance, dist);
        for (double k : ks) {
            Pipeline p(apply_axis(cd, SweepAxis::Subcarriers, k));
            coh << static_cast<int>(k) << ',' << dist << ',' << p.coherence() << '\n';
        }
    }
    std::ofstream ed((fs::path(o.out_dir) / "edof.csv").string());
    ed << "M,d,edof\n" << std::setprecision(17);
    for (double dist : ds) {
        for (double side : sides) {
            Config cs = apply_axis(c, SweepAxis::Distance, dist);
            cs.scenario.grid_side = static_cast<int>(side);
            cs.scenario.n_subcarriers = 1;
            const GridGeometry grid = build_grid(cs.scenario);
            const auto ops = radiation_operators(grid, build_arrays(cs.scenario), wavenumber(cs.scenario.f_c));
            ed << grid.size() << ',' << dist << ',' << edof(ops.h1) << '\n';
        }
    }
    std::cout << "wrote coherence.csv and edof.csv to " << o.out_dir << '\n';
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"emsense: electromagnetic property sensing with OFDM pilot signals"};
    app.require_subcommand(1);
    Options o;
    auto add_common = [&](CLI::App *sub) {
        sub->add_option("--config", o.config_path, "JSON config with scenario, materials, phantom");
        sub->add_option("--out", o.out_dir, "output directory");
        sub->add_option("--seed", o.seed, "master seed (overrides scenario.rng_seed)");
        sub->add_flag("--no-noise", o.no_noise, "disable receiver noise");
        sub->add_option("--oversample", o.oversample, "forward grid oversampling factor")->check(CLI::PositiveNumber);
        sub->add_option("--trials", o.trials, "trials per sweep point")->check(CLI::PositiveNumber);
    };
    struct Verb {
        const char *name;
        const char *help;
        int (*run)(const Options &);
    };
    const Verb verbs[] = {
        {"simulate", "synthesize pilot observations", cmd_simulate},
        {"design-beams", "design coherence-minimizing beamformers", cmd_design_beams},
        {"reconstruct", "reconstruct the permittivity/conductivity map", cmd_reconstruct},
        {"classify", "reconstruct and classify the target material", cmd_classify},
        {"sweep", "run an SNR, subcarrier or distance sweep", cmd_sweep},
        {"diagnose", "mutual coherence and EDOF diagnostics", cmd_diagnose},
    };
    int (*selected)(const Options &) = nullptr;
    for (const auto &v : verbs) {
        CLI::App *sub = app.add_subcommand(v.name, v.help);
        add_common(sub);
        sub->callback([&selected, fn = v.run] { selected = fn; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    try {
        return selected(o);
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError &e) {
        std::cerr << "numerical failure: " << e.what() << " (condition estimate " << e.condition_estimate() << ")\n";
        return 3;
    } catch (const nlohmann::json::exception &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    }
}
