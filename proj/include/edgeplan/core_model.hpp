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

#ifndef EDGEPLAN_CORE_MODEL_HPP_
#define EDGEPLAN_CORE_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "edgeplan/errors.hpp"

namespace edgeplan {

// Architecture of the large transformer being decomposed. Sequence length is
// shared by every sub-model.
struct TransformerConfig {
  std::int64_t layers = 12;
  std::int64_t embed_dim = 768;
  std::int64_t heads = 12;
  std::int64_t mlp_dim = 3072;
  std::int64_t seq_len = 197;
  std::int64_t num_classes = 1000;
  std::int64_t bytes_per_param = 4;

  std::int64_t head_dim() const { return embed_dim / heads; }

  // Throws InvalidConfig unless every field is positive and heads divides
  // embed_dim.
  void validate() const;
};

// One device's sub-model. heads_per_layer and mlp_dims hold one entry per
// retained layer.
struct SubModelConfig {
  std::int64_t layers = 1;
  std::int64_t embed_dim = 1;
  std::vector<std::int64_t> heads_per_layer{1};
  std::vector<std::int64_t> mlp_dims{1};

  void validate() const;

  double mean_heads() const;
  double mean_mlp_dim() const;
  std::int64_t max_mlp_dim() const;

  // Same h and D on every layer.
  static SubModelConfig uniform(std::int64_t layers, std::int64_t embed_dim,
                                std::int64_t heads, std::int64_t mlp_dim);

  friend bool operator==(const SubModelConfig&, const SubModelConfig&) = default;
};

// The full base transformer expressed as a sub-model.
SubModelConfig full_model(const TransformerConfig& base);

// The smallest representable sub-model: one layer, one head, one neuron,
// embedding width of a single head.
SubModelConfig minimal_model(const TransformerConfig& base);

struct DecompositionPolicy {
  std::vector<SubModelConfig> sub_models;

  std::size_t size() const { return sub_models.size(); }
  friend bool operator==(const DecompositionPolicy&,
                         const DecompositionPolicy&) = default;
};

struct DeviceSpec {
  std::string name;
  double compute_flops_per_ms = 1.0;  // g_n
  double memory_bytes = 1.0;          // Phi_n
  double flops_cap = 1.0;             // Omega_n
  double bandwidth_bits_per_ms = 1.0; // r_n, link to the central node
  double busy_power_mw = 1.0;
  double idle_power_mw = 1.0;

  void validate() const;
};

struct DeviceFleet {
  std::vector<DeviceSpec> devices;
  std::size_t central_index = 0;

  std::size_t size() const { return devices.size(); }
  const DeviceSpec& central() const { return devices.at(central_index); }
  void validate() const;
};

enum class Constraint { kC1, kC2, kC3, kC4, kC5, kC6 };

std::string to_string(Constraint c);

struct Violation {
  Constraint constraint;
  // Sub-model/device index for per-device constraints; layer index for C3/C4;
  // unused (0) for C2.
  std::size_t index;
  double measured;
  double bound;
};

struct ConstraintReport {
  bool satisfied = true;
  std::vector<Violation> violations;
  // Shape combinations that are representable but inconsistent, e.g. a
  // sub-model whose attention width h_k * d_h exceeds its embedding width.
  std::vector<std::string> warnings;

  std::string summary() const;
};

class InfeasiblePolicy : public Error {
 public:
  InfeasiblePolicy(const std::string& what, ConstraintReport report)
      : Error("InfeasiblePolicy", what), report_(std::move(report)) {}
  const ConstraintReport& report() const { return report_; }

 private:
  ConstraintReport report_;
};

// Floating point operations of one forward pass; a multiply-accumulate counts
// as two. Head width is fixed at base.head_dim().
double flops(const SubModelConfig& cfg, const TransformerConfig& base);

// Parameter bytes plus peak activation bytes.
double memory(const SubModelConfig& cfg, const TransformerConfig& base);

// Parameter count only (memory() without the activation term, in elements).
double parameter_count(const SubModelConfig& cfg, const TransformerConfig& base);

// Checks C1..C6 and lists every violation. Throws MismatchedFleet when the
// policy and fleet sizes differ.
ConstraintReport validate_policy(const DecompositionPolicy& policy,
                                 const TransformerConfig& base,
                                 const DeviceFleet& fleet);

// C1..C4 only; needs no fleet.
ConstraintReport validate_structure(const DecompositionPolicy& policy,
                                    const TransformerConfig& base);

inline constexpr int kMaxSampleAttempts = 10000;

// Draws a random feasible policy. Per-sub-model budgets for embedding units,
// heads and MLP neurons are drawn as random shares of the base model, then
// shrunk until C5/C6 hold on the target device.
DecompositionPolicy sample_policy(const TransformerConfig& base,
                                  const DeviceFleet& fleet, std::mt19937_64& rng);
DecompositionPolicy sample_policy(const TransformerConfig& base,
                                  const DeviceFleet& fleet, std::uint64_t seed);

// Shrinks an arbitrary (possibly infeasible) policy until it satisfies C1..C6.
// Returns nullopt when no repair is found within kMaxSampleAttempts steps.
std::optional<DecompositionPolicy> repair_policy(DecompositionPolicy policy,
                                                 const TransformerConfig& base,
                                                 const DeviceFleet& fleet);

// Throws InfeasibleFleet when the minimal policy is not feasible.
void check_fleet_feasible(const TransformerConfig& base, const DeviceFleet& fleet);

// Per-layer importance scores. heads[k][j] ranks head j of layer k, neurons[k][j]
// ranks MLP neuron j of layer k. Higher is more important.
struct ImportanceScores {
  std::vector<std::vector<double>> heads;
  std::vector<std::vector<double>> neurons;
};

struct LayerSpec {
  std::int64_t layer_index = 0;
  std::vector<std::int64_t> head_indices;
  std::vector<std::int64_t> neuron_indices;
};

struct SubModelSpec {
  // Contiguous prefix [embed_offset, embed_offset + embed_width) of the base
  // embedding.
  std::int64_t embed_offset = 0;
  std::int64_t embed_width = 0;
  std::vector<LayerSpec> layers;
};

// Maps each sub-model onto concrete slices of the base architecture: the first
// l_n layers, the h_n[k] most important heads and D_n[k] most important
// neurons of each layer (index order when no scores are given).
std::vector<SubModelSpec> decompose(const TransformerConfig& base,
                                    const DecompositionPolicy& policy,
                                    const std::optional<ImportanceScores>& importance = std::nullopt);

}  // namespace edgeplan

#endif  // EDGEPLAN_CORE_MODEL_HPP_
