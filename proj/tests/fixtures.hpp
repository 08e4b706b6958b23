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

#ifndef EDGEPLAN_TESTS_FIXTURES_HPP_
#define EDGEPLAN_TESTS_FIXTURES_HPP_

#include <limits>
#include <string>

#include "edgeplan/config_io.hpp"
#include "edgeplan/core_model.hpp"

namespace edgeplan::testing {

inline std::string source_path(const std::string& rel) { return std::string(EDGEPLAN_SOURCE_DIR) + "/" + rel; }

inline DeviceFleet example_fleet() { return load_fleet(source_path("configs/example_fleet.json")); }

inline TransformerConfig deit_base() { return TransformerConfig{}; }

inline DeviceSpec unbounded_device(const std::string& name = "big") {
  DeviceSpec d;
  d.name = name;
  d.compute_flops_per_ms = 1e9;
  d.memory_bytes = 1e18;
  d.flops_cap = 1e18;
  d.bandwidth_bits_per_ms = 1e6;
  d.busy_power_mw = 10000;
  d.idle_power_mw = 1000;
  return d;
}

inline TransformerConfig unit_transformer() {
  TransformerConfig t;
  t.layers = 1;
  t.embed_dim = 1;
  t.heads = 1;
  t.mlp_dim = 1;
  t.seq_len = 1;
  t.num_classes = 1;
  t.bytes_per_param = 4;
  return t;
}

}  // namespace edgeplan::testing

#endif  // EDGEPLAN_TESTS_FIXTURES_HPP_
