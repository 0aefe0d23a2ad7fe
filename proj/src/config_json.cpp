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

#include "emsense/config_json.hpp"

#include <json.hpp>

#include <fstream>
#include <limits>
#include <sstream>

namespace emsense {

using nlohmann::json;

namespace {

template <typename T> void read_if(const json &j, const char *key, T &out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception &e) {
            throw ConfigError(std::string("invalid value for '") + key + "': " + e.what());
        }
    }
}

Point2 read_point(const json &j, const char *key, Point2 fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    const json &v = j.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw ConfigError(std::string("'") + key + "' must be a [x, y] pair");
    }
    return {v[0].get<double>(), v[1].get<double>()};
}

void check_keys(const json &j, const char *where, std::initializer_list<const char *> allowed) {
    if (!j.is_object()) {
        throw ConfigError(std::string("'") + where + "' must be an object");
    }
    for (const auto &item : j.items()) {
        bool known = false;
        for (const char *a : allowed) {
            known = known || item.key() == a;
        }
        if (!known) {
            throw ConfigError(std::string("unknown key '") + item.key() + "' in '" + where + "'");
        }
    }
}

ScenarioConfig parse_scenario(const json &j) {
    check_keys(j, "scenario",
               {"n_tx", "n_rx", "n_pilots", "n_subcarriers", "f_c", "delta_f", "tx_center", "rx_center",
                "array_spacing_wavelengths", "domain_extent", "grid_side", "power_budget", "snr_db", "rng_seed",
                "forward_oversample"});
    ScenarioConfig s;
    read_if(j, "n_tx", s.n_tx);
    read_if(j, "n_rx", s.n_rx);
    read_if(j, "n_pilots", s.n_pilots);
    read_if(j, "n_subcarriers", s.n_subcarriers);
    read_if(j, "f_c", s.f_c);
    read_if(j, "delta_f", s.delta_f);
    s.tx_center = read_point(j, "tx_center", s.tx_center);
    s.rx_center = read_point(j, "rx_center", s.rx_center);
    read_if(j, "array_spacing_wavelengths", s.array_spacing_wavelengths);
    if (j.contains("domain_extent")) {
        const json &d = j.at("domain_extent");
        check_keys(d, "domain_extent", {"x_min", "x_max", "y_min", "y_max"});
        read_if(d, "x_min", s.domain_extent.x_min);
        read_if(d, "x_max", s.domain_extent.x_max);
        read_if(d, "y_min", s.domain_extent.y_min);
        read_if(d, "y_max", s.domain_extent.y_max);
    }
    read_if(j, "grid_side", s.grid_side);
    read_if(j, "power_budget", s.power_budget);
    if (j.contains("snr_db")) {
        const json &v = j.at("snr_db");
        if (v.is_null() || (v.is_string() && v.get<std::string>() == "inf")) {
            s.snr_db = std::numeric_limits<double>::infinity();
        } else if (v.is_number()) {
            s.snr_db = v.get<double>();
        } else {
            throw ConfigError("'snr_db' must be a number, \"inf\" or null");
        }
    }
    read_if(j, "rng_seed", s.rng_seed);
    read_if(j, "forward_oversample", s.forward_oversample);
    return s;
}

PhantomSpec parse_phantom(const json &j) {
    check_keys(j, "phantom", {"shape", "material", "rect", "disk_center", "disk_radius", "mask_side", "mask"});
    PhantomSpec p;
    if (j.contains("shape")) {
        p.shape = parse_phantom_shape(j.at("shape").get<std::string>());
    }
    read_if(j, "material", p.material);
    if (j.contains("rect")) {
        const json &r = j.at("rect");
        if (!r.is_array() || r.size() != 4) {
            throw ConfigError("'rect' must be [x0, x1, y0, y1]");
        }
        p.x0 = r[0].get<double>();
        p.x1 = r[1].get<double>();
        p.y0 = r[2].get<double>();
        p.y1 = r[3].get<double>();
    }
    p.disk_center = read_point(j, "disk_center", p.disk_center);
    read_if(j, "disk_radius", p.disk_radius);
    read_if(j, "mask_side", p.mask_side);
    if (j.contains("mask")) {
        for (const auto &v : j.at("mask")) {
            p.mask.push_back(static_cast<std::uint8_t>(v.get<int>() != 0));
        }
    }
    return p;
}

} // namespace

Config parse_config(const std::string &json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error &e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    check_keys(root, "<root>", {"scenario", "materials", "phantom", "experiment"});
    Config config;
    if (root.contains("scenario")) {
        config.scenario = parse_scenario(root.at("scenario"));
    }
    if (root.contains("materials")) {
        const json &m = root.at("materials");
        if (!m.is_array()) {
            throw ConfigError("'materials' must be an array");
        }
        config.materials.clear();
        for (const auto &rec : m) {
            check_keys(rec, "materials[]", {"name", "eps_r", "sigma"});
            MaterialRecord r;
            read_if(rec, "name", r.name);
            read_if(rec, "eps_r", r.eps_r);
            read_if(rec, "sigma", r.sigma);
            config.materials.push_back(r);
        }
    }
    if (root.contains("phantom")) {
        config.phantom = parse_phantom(root.at("phantom"));
    }
    config.scenario.validate();
    validate_database(config.materials);
    if (!find_material(config.materials, config.phantom.material)) {
        throw ConfigError("phantom material '" + config.phantom.material + "' is not in the material list");
    }
    return config;
}

Config load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file " + path);
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string dump_config(const Config &config) {
    const ScenarioConfig &s = config.scenario;
    json scenario = {
        {"n_tx", s.n_tx},
        {"n_rx", s.n_rx},
        {"n_pilots", s.n_pilots},
        {"n_subcarriers", s.n_subcarriers},
        {"f_c", s.f_c},
        {"delta_f", s.delta_f},
        {"tx_center", {s.tx_center.x, s.tx_center.y}},
        {"rx_center", {s.rx_center.x, s.rx_center.y}},
        {"array_spacing_wavelengths", s.array_spacing_wavelengths},
        {"domain_extent",
         {{"x_min", s.domain_extent.x_min},
          {"x_max", s.domain_extent.x_max},
          {"y_min", s.domain_extent.y_min},
          {"y_max", s.domain_extent.y_max}}},
        {"grid_side", s.grid_side},
        {"power_budget", s.power_budget},
        {"rng_seed", s.rng_seed},
        {"forward_oversample", s.forward_oversample},
    };
    scenario["snr_db"] = std::isfinite(s.snr_db) ? json(s.snr_db) : json("inf");
    json materials = json::array();
    for (const auto &m : config.materials) {
        materials.push_back({{"name", m.name}, {"eps_r", m.eps_r}, {"sigma", m.sigma}});
    }
    const PhantomSpec &p = config.phantom;
    json phantom = {{"shape", to_string(p.shape)}, {"material", p.material}};
    if (p.shape == PhantomShape::Rect) {
        phantom["rect"] = {p.x0, p.x1, p.y0, p.y1};
    } else if (p.shape == PhantomShape::Disk) {
        phantom["disk_center"] = {p.disk_center.x, p.disk_center.y};
        phantom["disk_radius"] = p.disk_radius;
    } else if (p.shape == PhantomShape::Mask) {
        phantom["mask_side"] = p.mask_side;
        json mask = json::array();
        for (auto v : p.mask) {
            mask.push_back(static_cast<int>(v));
        }
        phantom["mask"] = mask;
    }
    return json({{"scenario", scenario}, {"materials", materials}, {"phantom", phantom}}).dump(2);
}

} // namespace emsense
