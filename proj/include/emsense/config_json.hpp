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

#ifndef EMSENSE_CONFIG_JSON_HPP
#define EMSENSE_CONFIG_JSON_HPP

#include "emsense/scene.hpp"

#include <string>
#include <vector>

namespace emsense {

// Parsed configuration file: {"scenario": {...}, "materials": [...], "phantom": {...}}.
// An optional "experiment" object is read separately by the sweep harness.
// Missing keys keep their defaults; "materials" defaults to material_database().
// snr_db accepts a number, "inf", or null (both meaning noiseless).
struct Config {
    ScenarioConfig scenario;
    std::vector<MaterialRecord> materials = material_database();
    PhantomSpec phantom;
};

Config parse_config(const std::string &json_text);
Config load_config(const std::string &path);
std::string dump_config(const Config &config);

} // namespace emsense

#endif
