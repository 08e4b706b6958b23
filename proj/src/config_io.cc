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

#include "edgeplan/config_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace edgeplan {

using nlohmann::json;

namespace {

template <typename T>
T get_field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

DeviceFleet fleet_from_json(const json& j) {
  if (!j.contains("devices") || !j["devices"].is_array()) {
    throw ConfigError("config: 'devices' must be an array");
  }
  DeviceFleet fleet;
  for (const auto& d : j["devices"]) {
    DeviceSpec spec;
    spec.name = get_field<std::string>(d, "name", "device");
    const std::string where = "device '" + spec.name + "'";
    spec.compute_flops_per_ms = get_field<double>(d, "gflops", where) * 1e6;
    spec.memory_bytes = get_field<double>(d, "mem_gb", where) * 1e9;
    spec.bandwidth_bits_per_ms = get_field<double>(d, "bandwidth_mbps", where) * 1e3;
    spec.busy_power_mw = get_field<double>(d, "busy_power_mw", where);
    spec.idle_power_mw = get_field<double>(d, "idle_power_mw", where);
    spec.flops_cap = get_field<double>(d, "flops_cap_g", where) * 1e9;
    fleet.devices.push_back(std::move(spec));
  }
  const auto central = get_field<long long>(j, "central", "config");
  if (central < 0) throw ConfigError("config: 'central' must be a device index");
  fleet.central_index = static_cast<std::size_t>(central);
  try {
    fleet.validate();
  } catch (const InvalidConfig& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return fleet;
}

TransformerConfig transformer_from_json(const json& j) {
  if (!j.contains("transformer")) throw ConfigError("config: missing 'transformer' section");
  const auto& t = j["transformer"];
  TransformerConfig base;
  base.layers = get_field<std::int64_t>(t, "layers", "transformer");
  base.embed_dim = get_field<std::int64_t>(t, "dim", "transformer");
  base.heads = get_field<std::int64_t>(t, "heads", "transformer");
  base.mlp_dim = get_field<std::int64_t>(t, "mlp_dim", "transformer");
  base.seq_len = get_field<std::int64_t>(t, "seq_len", "transformer");
  base.num_classes = get_field<std::int64_t>(t, "classes", "transformer");
  base.bytes_per_param = get_field<std::int64_t>(t, "bytes_per_param", "transformer");
  try {
    base.validate();
  } catch (const InvalidConfig& e) {
    throw ConfigError(std::string("transformer: ") + e.what());
  }
  return base;
}

json fleet_to_json(const DeviceFleet& fleet) {
  json devices = json::array();
  for (const auto& d : fleet.devices) {
    devices.push_back({{"name", d.name},
                       {"gflops", d.compute_flops_per_ms / 1e6},
                       {"mem_gb", d.memory_bytes / 1e9},
                       {"bandwidth_mbps", d.bandwidth_bits_per_ms / 1e3},
                       {"busy_power_mw", d.busy_power_mw},
                       {"idle_power_mw", d.idle_power_mw},
                       {"flops_cap_g", d.flops_cap / 1e9}});
  }
  return {{"devices", devices}, {"central", fleet.central_index}};
}

json transformer_to_json(const TransformerConfig& base) {
  return {{"transformer",
           {{"layers", base.layers},
            {"dim", base.embed_dim},
            {"heads", base.heads},
            {"mlp_dim", base.mlp_dim},
            {"seq_len", base.seq_len},
            {"classes", base.num_classes},
            {"bytes_per_param", base.bytes_per_param}}}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

DeviceFleet load_fleet(const std::filesystem::path& path) {
  return fleet_from_json(read_json_file(path));
}

TransformerConfig load_transformer(const std::filesystem::path& path) {
  return transformer_from_json(read_json_file(path));
}

json policy_to_json(const DecompositionPolicy& policy) {
  json subs = json::array();
  for (const auto& sm : policy.sub_models) {
    subs.push_back({{"layers", sm.layers},
                    {"embed_dim", sm.embed_dim},
                    {"heads", sm.heads_per_layer},
                    {"mlp_dims", sm.mlp_dims}});
  }
  return {{"format", kFormatTag}, {"sub_models", subs}};
}

DecompositionPolicy policy_from_json(const json& j) {
  if (!j.contains("format") || j["format"] != kFormatTag) {
    throw FormatError("policy file has a missing or unsupported format tag");
  }
  DecompositionPolicy policy;
  for (const auto& s : j.at("sub_models")) {
    SubModelConfig sm;
    sm.layers = get_field<std::int64_t>(s, "layers", "sub_model");
    sm.embed_dim = get_field<std::int64_t>(s, "embed_dim", "sub_model");
    sm.heads_per_layer = get_field<std::vector<std::int64_t>>(s, "heads", "sub_model");
    sm.mlp_dims = get_field<std::vector<std::int64_t>>(s, "mlp_dims", "sub_model");
    sm.validate();
    policy.sub_models.push_back(std::move(sm));
  }
  return policy;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw MissingArtifact("cannot write " + path.string());
  out << text;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_policy(const std::filesystem::path& path, const DecompositionPolicy& policy) {
  write_text_file(path, policy_to_json(policy).dump(2) + "\n");
}

DecompositionPolicy load_policy(const std::filesystem::path& path) {
  return policy_from_json(read_json_file(path));
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace edgeplan
