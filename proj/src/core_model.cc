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

#include "edgeplan/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace edgeplan {

namespace {

std::string field_error(const std::string& what, std::int64_t v) {
  std::ostringstream os;
  os << what << " must be >= 1 (got " << v << ")";
  return os.str();
}

void require_positive(const std::string& what, std::int64_t v) {
  if (v < 1) throw InvalidConfig(field_error(what, v));
}

void require_positive(const std::string& what, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InvalidConfig(what + " must be a positive finite number");
  }
}

}  // namespace

void TransformerConfig::validate() const {
  require_positive("layers", layers);
  require_positive("embed_dim", embed_dim);
  require_positive("heads", heads);
  require_positive("mlp_dim", mlp_dim);
  require_positive("seq_len", seq_len);
  require_positive("num_classes", num_classes);
  require_positive("bytes_per_param", bytes_per_param);
  if (embed_dim % heads != 0) {
    throw InvalidConfig("embed_dim must be divisible by heads");
  }
}

void SubModelConfig::validate() const {
  require_positive("sub-model layers", layers);
  require_positive("sub-model embed_dim", embed_dim);
  if (heads_per_layer.size() != static_cast<std::size_t>(layers) ||
      mlp_dims.size() != static_cast<std::size_t>(layers)) {
    throw InvalidConfig("per-layer head and MLP vectors must have one entry per layer");
  }
  for (auto h : heads_per_layer) require_positive("heads_per_layer entry", h);
  for (auto d : mlp_dims) require_positive("mlp_dims entry", d);
}

double SubModelConfig::mean_heads() const {
  return static_cast<double>(std::accumulate(heads_per_layer.begin(), heads_per_layer.end(),
                                             std::int64_t{0})) /
         static_cast<double>(heads_per_layer.size());
}

double SubModelConfig::mean_mlp_dim() const {
  return static_cast<double>(std::accumulate(mlp_dims.begin(), mlp_dims.end(), std::int64_t{0})) /
         static_cast<double>(mlp_dims.size());
}

std::int64_t SubModelConfig::max_mlp_dim() const {
  return *std::max_element(mlp_dims.begin(), mlp_dims.end());
}

SubModelConfig SubModelConfig::uniform(std::int64_t layers, std::int64_t embed_dim,
                                       std::int64_t heads, std::int64_t mlp_dim) {
  SubModelConfig cfg;
  cfg.layers = layers;
  cfg.embed_dim = embed_dim;
  cfg.heads_per_layer.assign(static_cast<std::size_t>(std::max<std::int64_t>(layers, 0)), heads);
  cfg.mlp_dims.assign(static_cast<std::size_t>(std::max<std::int64_t>(layers, 0)), mlp_dim);
  return cfg;
}

SubModelConfig full_model(const TransformerConfig& base) {
  return SubModelConfig::uniform(base.layers, base.embed_dim, base.heads, base.mlp_dim);
}

SubModelConfig minimal_model(const TransformerConfig& base) {
  return SubModelConfig::uniform(1, base.head_dim(), 1, 1);
}

void DeviceSpec::validate() const {
  require_positive(name + ".compute", compute_flops_per_ms);
  require_positive(name + ".memory", memory_bytes);
  require_positive(name + ".flops_cap", flops_cap);
  require_positive(name + ".bandwidth", bandwidth_bits_per_ms);
  require_positive(name + ".busy_power", busy_power_mw);
  require_positive(name + ".idle_power", idle_power_mw);
}

void DeviceFleet::validate() const {
  if (devices.empty()) throw InvalidConfig("fleet has no devices");
  if (central_index >= devices.size()) throw InvalidConfig("central index out of range");
  for (const auto& d : devices) d.validate();
}

std::string to_string(Constraint c) {
  switch (c) {
    case Constraint::kC1: return "C1";
    case Constraint::kC2: return "C2";
    case Constraint::kC3: return "C3";
    case Constraint::kC4: return "C4";
    case Constraint::kC5: return "C5";
    case Constraint::kC6: return "C6";
  }
  return "?";
}

std::string ConstraintReport::summary() const {
  if (satisfied) return "feasible";
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    const auto& v = violations[i];
    if (i) os << "; ";
    os << to_string(v.constraint) << "[" << v.index << "] " << v.measured << " > " << v.bound;
  }
  return os.str();
}

double flops(const SubModelConfig& cfg, const TransformerConfig& base) {
  const double s = static_cast<double>(base.seq_len);
  const double d = static_cast<double>(cfg.embed_dim);
  const double dh = static_cast<double>(base.head_dim());
  double total = 0.0;
  for (std::size_t k = 0; k < cfg.heads_per_layer.size(); ++k) {
    const double attn = static_cast<double>(cfg.heads_per_layer[k]) * dh;
    const double mlp = static_cast<double>(cfg.mlp_dims[k]);
    total += 6.0 * s * d * attn      // Q, K, V projections
             + 2.0 * s * attn * d    // output projection
             + 4.0 * s * s * attn    // scores and weighted values
             + 4.0 * s * d * mlp;    // two MLP matmuls
  }
  return total;
}

double parameter_count(const SubModelConfig& cfg, const TransformerConfig& base) {
  const double d = static_cast<double>(cfg.embed_dim);
  const double dh = static_cast<double>(base.head_dim());
  double params = 0.0;
  for (std::size_t k = 0; k < cfg.heads_per_layer.size(); ++k) {
    const double attn = static_cast<double>(cfg.heads_per_layer[k]) * dh;
    params += 4.0 * d * attn + 2.0 * d * static_cast<double>(cfg.mlp_dims[k]) + 4.0 * d;
  }
  params += d * static_cast<double>(base.seq_len + 1);
  params += d * static_cast<double>(base.num_classes);
  return params;
}

double memory(const SubModelConfig& cfg, const TransformerConfig& base) {
  const double bpp = static_cast<double>(base.bytes_per_param);
  const double widest = static_cast<double>(std::max(cfg.embed_dim, cfg.max_mlp_dim()));
  const double activations = 4.0 * static_cast<double>(base.seq_len) * widest * bpp;
  return bpp * parameter_count(cfg, base) + activations;
}

ConstraintReport validate_structure(const DecompositionPolicy& policy,
                                    const TransformerConfig& base) {
  ConstraintReport report;
  auto add = [&report](Constraint c, std::size_t idx, double measured, double bound) {
    report.violations.push_back({c, idx, measured, bound});
  };

  std::int64_t deepest = 0;
  std::int64_t embed_sum = 0;
  const auto dh = base.head_dim();
  for (std::size_t n = 0; n < policy.size(); ++n) {
    const auto& sm = policy.sub_models[n];
    sm.validate();
    if (sm.layers > base.layers) {
      add(Constraint::kC1, n, static_cast<double>(sm.layers), static_cast<double>(base.layers));
    }
    deepest = std::max(deepest, sm.layers);
    embed_sum += sm.embed_dim;
    for (std::size_t k = 0; k < sm.heads_per_layer.size(); ++k) {
      if (sm.heads_per_layer[k] * dh > sm.embed_dim) {
        std::ostringstream os;
        os << "sub-model " << n << " layer " << k << ": attention width "
           << sm.heads_per_layer[k] * dh << " exceeds embedding width " << sm.embed_dim;
        report.warnings.push_back(os.str());
      }
    }
  }
  if (embed_sum > base.embed_dim) {
    add(Constraint::kC2, 0, static_cast<double>(embed_sum), static_cast<double>(base.embed_dim));
  }
  for (std::int64_t k = 0; k < deepest; ++k) {
    std::int64_t heads = 0;
    std::int64_t neurons = 0;
    for (const auto& sm : policy.sub_models) {
      if (sm.layers > k) {
        heads += sm.heads_per_layer[static_cast<std::size_t>(k)];
        neurons += sm.mlp_dims[static_cast<std::size_t>(k)];
      }
    }
    const auto layer = static_cast<std::size_t>(k);
    if (heads > base.heads) {
      add(Constraint::kC3, layer, static_cast<double>(heads), static_cast<double>(base.heads));
    }
    if (neurons > base.mlp_dim) {
      add(Constraint::kC4, layer, static_cast<double>(neurons), static_cast<double>(base.mlp_dim));
    }
  }
  report.satisfied = report.violations.empty();
  return report;
}

ConstraintReport validate_policy(const DecompositionPolicy& policy,
                                 const TransformerConfig& base,
                                 const DeviceFleet& fleet) {
  if (policy.size() != fleet.size()) {
    throw MismatchedFleet("policy has " + std::to_string(policy.size()) +
                          " sub-models but the fleet has " + std::to_string(fleet.size()) +
                          " devices");
  }
  ConstraintReport report = validate_structure(policy, base);
  for (std::size_t n = 0; n < policy.size(); ++n) {
    const auto& sm = policy.sub_models[n];
    const auto& dev = fleet.devices[n];
    const double w = flops(sm, base);
    if (w > dev.flops_cap) report.violations.push_back({Constraint::kC5, n, w, dev.flops_cap});
    const double m = memory(sm, base);
    if (m > dev.memory_bytes) {
      report.violations.push_back({Constraint::kC6, n, m, dev.memory_bytes});
    }
  }
  report.satisfied = report.violations.empty();
  return report;
}

namespace {

bool fits_device(const SubModelConfig& sm, const TransformerConfig& base, const DeviceSpec& dev) {
  return flops(sm, base) <= dev.flops_cap && memory(sm, base) <= dev.memory_bytes;
}

std::int64_t shrink_value(std::int64_t v, double factor) {
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(static_cast<double>(v) * factor)));
}

// Reduces entries of `values` (ignoring those marked inactive) until their sum
// is at most `bound`, always taking from the current largest entry.
bool reduce_sum(std::vector<std::int64_t*>& values, std::int64_t bound) {
  std::int64_t sum = 0;
  for (auto* v : values) sum += *v;
  while (sum > bound) {
    auto it = std::max_element(values.begin(), values.end(),
                               [](const auto* a, const auto* b) { return *a < *b; });
    const std::int64_t take = std::min(sum - bound, **it - 1);
    if (take <= 0) return false;
    **it -= take;
    sum -= take;
  }
  return true;
}

// Random split of `total` units into `n` positive budgets whose sum is at
// most `total`.
std::vector<std::int64_t> draw_budgets(std::int64_t total, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> share(0.1, 1.0);
  std::uniform_real_distribution<double> fill(0.1, 1.0);
  std::vector<double> s(n);
  for (auto& x : s) x = share(rng);
  const double norm = std::accumulate(s.begin(), s.end(), 0.0);
  const double f = fill(rng);
  std::vector<std::int64_t> out(n);
  std::vector<std::int64_t*> refs;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::floor(f * static_cast<double>(total) * s[i] / norm)));
    refs.push_back(&out[i]);
  }
  reduce_sum(refs, total);
  return out;
}

std::int64_t uniform_int(std::int64_t lo, std::int64_t hi, std::mt19937_64& rng) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

}  // namespace

void check_fleet_feasible(const TransformerConfig& base, const DeviceFleet& fleet) {
  base.validate();
  fleet.validate();
  const auto n = static_cast<std::int64_t>(fleet.size());
  if (n > base.heads || n > base.mlp_dim) {
    throw InfeasibleFleet("fleet of " + std::to_string(n) +
                          " devices exceeds the number of heads or MLP neurons of the base model");
  }
  const auto smallest = minimal_model(base);
  for (const auto& dev : fleet.devices) {
    if (!fits_device(smallest, base, dev)) {
      throw InfeasibleFleet("device '" + dev.name + "' cannot host the minimal sub-model");
    }
  }
}

DecompositionPolicy sample_policy(const TransformerConfig& base, const DeviceFleet& fleet,
                                  std::mt19937_64& rng) {
  check_fleet_feasible(base, fleet);
  const std::size_t n = fleet.size();
  const auto dh = base.head_dim();

  const auto embed_units = draw_budgets(base.heads, n, rng);
  const auto head_budget = draw_budgets(base.heads, n, rng);
  const auto mlp_budget = draw_budgets(base.mlp_dim, n, rng);

  DecompositionPolicy policy;
  int attempts = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::int64_t layers = uniform_int(1, base.layers, rng);
    std::int64_t units = embed_units[i];
    SubModelConfig sm;
    auto rebuild_layers = [&](std::int64_t count) {
      sm.layers = count;
      sm.heads_per_layer.resize(static_cast<std::size_t>(count));
      sm.mlp_dims.resize(static_cast<std::size_t>(count));
    };
    sm.embed_dim = units * dh;
    rebuild_layers(layers);
    for (std::int64_t k = 0; k < layers; ++k) {
      const auto hb = head_budget[i];
      const auto mb = mlp_budget[i];
      sm.heads_per_layer[static_cast<std::size_t>(k)] = uniform_int((hb + 1) / 2, hb, rng);
      sm.mlp_dims[static_cast<std::size_t>(k)] = uniform_int((mb + 1) / 2, mb, rng);
    }

    std::bernoulli_distribution shrink_depth(0.5);
    while (!fits_device(sm, base, fleet.devices[i])) {
      if (++attempts > kMaxSampleAttempts) {
        throw InfeasibleFleet("no feasible policy found within the sampling budget");
      }
      const bool widths_minimal =
          units == 1 &&
          std::all_of(sm.heads_per_layer.begin(), sm.heads_per_layer.end(),
                      [](auto v) { return v == 1; }) &&
          std::all_of(sm.mlp_dims.begin(), sm.mlp_dims.end(), [](auto v) { return v == 1; });
      if (sm.layers > 1 && (widths_minimal || shrink_depth(rng))) {
        rebuild_layers(sm.layers - 1);
      } else {
        units = shrink_value(units, 0.85);
        sm.embed_dim = units * dh;
        for (auto& h : sm.heads_per_layer) h = shrink_value(h, 0.85);
        for (auto& m : sm.mlp_dims) m = shrink_value(m, 0.85);
      }
    }
    policy.sub_models.push_back(std::move(sm));
  }
  return policy;
}

DecompositionPolicy sample_policy(const TransformerConfig& base, const DeviceFleet& fleet,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_policy(base, fleet, rng);
}

std::optional<DecompositionPolicy> repair_policy(DecompositionPolicy policy,
                                                 const TransformerConfig& base,
                                                 const DeviceFleet& fleet) {
  if (policy.size() != fleet.size()) {
    throw MismatchedFleet("policy and fleet sizes differ");
  }
  for (auto& sm : policy.sub_models) {
    sm.layers = std::clamp<std::int64_t>(sm.layers, 1, base.layers);
    const auto l = static_cast<std::size_t>(sm.layers);
    const std::int64_t h_fill = sm.heads_per_layer.empty() ? 1 : sm.heads_per_layer.back();
    const std::int64_t m_fill = sm.mlp_dims.empty() ? 1 : sm.mlp_dims.back();
    sm.heads_per_layer.resize(l, h_fill);
    sm.mlp_dims.resize(l, m_fill);
    sm.embed_dim = std::clamp<std::int64_t>(sm.embed_dim, 1, base.embed_dim);
    for (auto& h : sm.heads_per_layer) h = std::clamp<std::int64_t>(h, 1, base.heads);
    for (auto& m : sm.mlp_dims) m = std::clamp<std::int64_t>(m, 1, base.mlp_dim);
  }

  std::vector<std::int64_t*> dims;
  for (auto& sm : policy.sub_models) dims.push_back(&sm.embed_dim);
  if (!reduce_sum(dims, base.embed_dim)) return std::nullopt;

  for (std::int64_t k = 0; k < base.layers; ++k) {
    std::vector<std::int64_t*> heads;
    std::vector<std::int64_t*> neurons;
    for (auto& sm : policy.sub_models) {
      if (sm.layers > k) {
        heads.push_back(&sm.heads_per_layer[static_cast<std::size_t>(k)]);
        neurons.push_back(&sm.mlp_dims[static_cast<std::size_t>(k)]);
      }
    }
    if (!reduce_sum(heads, base.heads) || !reduce_sum(neurons, base.mlp_dim)) return std::nullopt;
  }

  int steps = 0;
  for (std::size_t n = 0; n < policy.size(); ++n) {
    auto& sm = policy.sub_models[n];
    while (!fits_device(sm, base, fleet.devices[n])) {
      if (++steps > kMaxSampleAttempts) return std::nullopt;
      const bool widths_minimal =
          sm.embed_dim == 1 &&
          std::all_of(sm.heads_per_layer.begin(), sm.heads_per_layer.end(),
                      [](auto v) { return v == 1; }) &&
          std::all_of(sm.mlp_dims.begin(), sm.mlp_dims.end(), [](auto v) { return v == 1; });
      if (widths_minimal) {
        if (sm.layers == 1) return std::nullopt;
        --sm.layers;
        sm.heads_per_layer.pop_back();
        sm.mlp_dims.pop_back();
        continue;
      }
      sm.embed_dim = shrink_value(sm.embed_dim, 0.9);
      for (auto& h : sm.heads_per_layer) h = shrink_value(h, 0.9);
      for (auto& m : sm.mlp_dims) m = shrink_value(m, 0.9);
    }
  }
  if (!validate_policy(policy, base, fleet).satisfied) return std::nullopt;
  return policy;
}

namespace {

std::vector<std::int64_t> top_indices(std::int64_t keep, std::int64_t total,
                                      const std::vector<double>* scores) {
  std::vector<std::int64_t> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), std::int64_t{0});
  if (scores != nullptr) {
    if (scores->size() != idx.size()) {
      throw InvalidConfig("importance score vector has the wrong length");
    }
    std::stable_sort(idx.begin(), idx.end(), [scores](auto a, auto b) {
      return (*scores)[static_cast<std::size_t>(a)] > (*scores)[static_cast<std::size_t>(b)];
    });
  }
  idx.resize(static_cast<std::size_t>(keep));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

std::vector<SubModelSpec> decompose(const TransformerConfig& base,
                                    const DecompositionPolicy& policy,
                                    const std::optional<ImportanceScores>& importance) {
  base.validate();
  auto report = validate_structure(policy, base);
  if (!report.satisfied) {
    throw InfeasiblePolicy("cannot decompose an infeasible policy: " + report.summary(),
                           std::move(report));
  }
  std::vector<SubModelSpec> specs;
  specs.reserve(policy.size());
  for (const auto& sm : policy.sub_models) {
    SubModelSpec spec;
    spec.embed_offset = 0;
    spec.embed_width = sm.embed_dim;
    for (std::int64_t k = 0; k < sm.layers; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      const std::vector<double>* head_scores = nullptr;
      const std::vector<double>* neuron_scores = nullptr;
      if (importance && ks < importance->heads.size()) head_scores = &importance->heads[ks];
      if (importance && ks < importance->neurons.size()) neuron_scores = &importance->neurons[ks];
      LayerSpec layer;
      layer.layer_index = k;
      layer.head_indices = top_indices(sm.heads_per_layer[ks], base.heads, head_scores);
      layer.neuron_indices = top_indices(sm.mlp_dims[ks], base.mlp_dim, neuron_scores);
      spec.layers.push_back(std::move(layer));
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

}  // namespace edgeplan
