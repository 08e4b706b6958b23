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

#include "edgeplan/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "edgeplan/config_io.hpp"

namespace edgeplan {

PredictorLatencyModel::PredictorLatencyModel(const DeviceFleet& fleet,
                                             const std::map<std::string, PredictorModel>& predictors) {
  for (const auto& dev : fleet.devices) {
    auto it = predictors.find(dev.name);
    if (it == predictors.end()) throw MissingArtifact("no latency predictor for device '" + dev.name + "'");
    by_device_.push_back(it->second);
  }
}

double PredictorLatencyModel::phase1_ms(std::size_t device, const SubModelConfig& cfg) const {
  return phase1_latency(cfg, by_device_.at(device));
}

ProfileLatencyModel::ProfileLatencyModel(DeviceFleet fleet, TransformerConfig base, ProfileParams params)
    : fleet_(std::move(fleet)), base_(base), params_(params) {}

double ProfileLatencyModel::phase1_ms(std::size_t device, const SubModelConfig& cfg) const {
  return synth_profile_mean(fleet_.devices.at(device), cfg, base_, params_);
}

double phase1_latency(const SubModelConfig& cfg, const PredictorModel& model) {
  return predict_latency(model, ArchFeatures::of(cfg));
}

double phase2_latency(double feature_bits, double bits_per_ms) { return feature_bits / bits_per_ms; }

double feature_bits(const TransformerConfig& base, const SubModelConfig& cfg, const LatencyParams& params) {
  return static_cast<double>(base.seq_len) * static_cast<double>(cfg.embed_dim) * params.bits_per_value;
}

double phase3_latency(double seq_len, double central_dim, double aggregate_dim, double flops_per_ms) {
  return 2.0 * seq_len * central_dim * aggregate_dim / flops_per_ms;
}

LatencyBreakdown latency_breakdown(const DecompositionPolicy& policy, const TransformerConfig& base,
                                   const DeviceFleet& fleet, const LatencyModel& latency,
                                   const LatencyParams& params) {
  auto report = validate_policy(policy, base, fleet);
  if (!report.satisfied) {
    throw InfeasiblePolicy("policy violates constraints: " + report.summary(), std::move(report));
  }
  LatencyBreakdown out;
  const std::size_t n = policy.size();
  out.compute_ms.resize(n);
  out.transmit_ms.resize(n);
  double slowest = 0.0;
  double aggregate_dim = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& sm = policy.sub_models[i];
    out.compute_ms[i] = latency.phase1_ms(i, sm);
    out.transmit_ms[i] = i == fleet.central_index
                             ? 0.0
                             : phase2_latency(feature_bits(base, sm, params),
                                              fleet.devices[i].bandwidth_bits_per_ms);
    slowest = std::max(slowest, out.compute_ms[i] + out.transmit_ms[i]);
    aggregate_dim += static_cast<double>(sm.embed_dim);
  }
  const auto& central_model = policy.sub_models[fleet.central_index];
  out.aggregate_ms = phase3_latency(static_cast<double>(base.seq_len),
                                    static_cast<double>(central_model.embed_dim), aggregate_dim,
                                    fleet.central().compute_flops_per_ms);
  out.end_to_end_ms = slowest + out.aggregate_ms;
  return out;
}

double end_to_end_latency(const DecompositionPolicy& policy, const TransformerConfig& base,
                          const DeviceFleet& fleet, const LatencyModel& latency,
                          const LatencyParams& params) {
  return latency_breakdown(policy, base, fleet, latency, params).end_to_end_ms;
}

std::vector<double> SyntheticDegradation::sub_model_losses(const DecompositionPolicy& policy,
                                                           const TransformerConfig& base) const {
  const double full = flops(full_model(base), base);
  double embed_sum = 0.0;
  for (const auto& sm : policy.sub_models) embed_sum += static_cast<double>(sm.embed_dim);
  const double coverage =
      params_.gamma * std::max(0.0, 1.0 - embed_sum / static_cast<double>(base.embed_dim));
  std::vector<double> out;
  out.reserve(policy.size());
  for (const auto& sm : policy.sub_models) {
    const double deficit = std::max(0.0, 1.0 - flops(sm, base) / full);
    out.push_back(params_.alpha * std::pow(deficit, params_.beta) + coverage);
  }
  return out;
}

double degradation(const DecompositionPolicy& policy, const TransformerConfig& base,
                   const DegradationOracle& oracle) {
  const auto losses = oracle.sub_model_losses(policy, base);
  if (losses.empty()) return 0.0;
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
}

ObjectiveValue objective(const DecompositionPolicy& policy, const TransformerConfig& base,
                         const DeviceFleet& fleet, const LatencyModel& latency,
                         const DegradationOracle& oracle, double delta, const LatencyParams& params) {
  if (delta < 0.0) throw InvalidConfig("delta must be non-negative");
  ObjectiveValue v;
  v.delta = delta;
  v.latency_ms = end_to_end_latency(policy, base, fleet, latency, params);
  v.degradation = degradation(policy, base, oracle);
  v.psi = v.degradation + delta * v.latency_ms;
  return v;
}

std::string run_log_to_csv(const std::vector<EvaluationRecord>& log) {
  std::ostringstream os;
  os << "# format: " << kFormatTag << "\n";
  os << "iteration,encoding,L_val,T_ms,delta,psi,best_psi\n";
  for (const auto& r : log) {
    os << r.iteration << ',';
    for (std::size_t i = 0; i < r.encoding.size(); ++i) {
      if (i) os << ';';
      os << format_double(r.encoding[i]);
    }
    os << ',' << format_double(r.value.degradation) << ',' << format_double(r.value.latency_ms) << ','
       << format_double(r.value.delta) << ',' << format_double(r.value.psi) << ','
       << format_double(r.best_psi) << '\n';
  }
  return os.str();
}

std::vector<EvaluationRecord> run_log_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  bool tag = false;
  bool header = false;
  std::vector<EvaluationRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      tag = tag || line.find(kFormatTag) != std::string::npos;
      continue;
    }
    if (!header) {
      if (line != "iteration,encoding,L_val,T_ms,delta,psi,best_psi") throw FormatError("unexpected run log header");
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw FormatError("run log row must have 7 fields");
    EvaluationRecord r;
    r.iteration = static_cast<std::size_t>(std::stoull(cells[0]));
    std::istringstream es(cells[1]);
    std::string e;
    while (std::getline(es, e, ';')) r.encoding.push_back(std::stod(e));
    r.value.degradation = std::stod(cells[2]);
    r.value.latency_ms = std::stod(cells[3]);
    r.value.delta = std::stod(cells[4]);
    r.value.psi = std::stod(cells[5]);
    r.best_psi = std::stod(cells[6]);
    out.push_back(std::move(r));
  }
  if (!tag) throw FormatError("run log is missing the format tag");
  return out;
}

}  // namespace edgeplan
