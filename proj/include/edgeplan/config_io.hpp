// Copyright 2026 The edgeplan Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#ifndef EDGEPLAN_CONFIG_IO_HPP_
#define EDGEPLAN_CONFIG_IO_HPP_

#include <filesystem>
#include <string>

#include <json.hpp>

#include "edgeplan/core_model.hpp"

namespace edgeplan {

// Tag written into every artifact this project emits.
inline constexpr const char* kFormatTag = "edgeplan/1";

// Config schema (JSON):
//   devices[].{name, gflops, mem_gb, bandwidth_mbps, busy_power_mw,
//              idle_power_mw, flops_cap_g}
//   central
//   transformer.{layers, dim, heads, mlp_dim, seq_len, classes, bytes_per_param}
// Units are converted on load: GFLOPS -> FLOPs/ms, GB -> bytes (1e9),
// Mb/s -> bits/ms, GFLOPs -> FLOPs.
DeviceFleet fleet_from_json(const nlohmann::json& j);
TransformerConfig transformer_from_json(const nlohmann::json& j);
nlohmann::json fleet_to_json(const DeviceFleet& fleet);
nlohmann::json transformer_to_json(const TransformerConfig& base);

DeviceFleet load_fleet(const std::filesystem::path& path);
TransformerConfig load_transformer(const std::filesystem::path& path);

nlohmann::json policy_to_json(const DecompositionPolicy& policy);
DecompositionPolicy policy_from_json(const nlohmann::json& j);

void save_policy(const std::filesystem::path& path, const DecompositionPolicy& policy);
DecompositionPolicy load_policy(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

// Shortest decimal representation that round-trips a double.
std::string format_double(double v);

}  // namespace edgeplan

#endif  // EDGEPLAN_CONFIG_IO_HPP_
