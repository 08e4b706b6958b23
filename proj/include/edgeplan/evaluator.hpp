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

#ifndef EDGEPLAN_EVALUATOR_HPP_
#define EDGEPLAN_EVALUATOR_HPP_

#include <map>
#include <string>
#include <vector>

#include "edgeplan/core_model.hpp"
#include "edgeplan/latency_oracle.hpp"

namespace edgeplan {

// Phase-1 (backbone) latency of a sub-model on a given device of the fleet.
class LatencyModel {
 public:
  virtual ~LatencyModel() = default;
  virtual double phase1_ms(std::size_t device, const SubModelConfig& cfg) const = 0;
};

// One trained predictor per device, looked up by device name.
class PredictorLatencyModel final : public LatencyModel {
 public:
  // Throws MissingArtifact if some device of the fleet has no predictor.
  PredictorLatencyModel(const DeviceFleet& fleet, const std::map<std::string, PredictorModel>& predictors);
  double phase1_ms(std::size_t device, const SubModelConfig& cfg) const override;

 private:
  std::vector<PredictorModel> by_device_;
};

// Noise-free synthetic profile; useful when no predictor has been trained.
class ProfileLatencyModel final : public LatencyModel {
 public:
  ProfileLatencyModel(DeviceFleet fleet, TransformerConfig base, ProfileParams params = {});
  double phase1_ms(std::size_t device, const SubModelConfig& cfg) const override;

 private:
  DeviceFleet fleet_;
  TransformerConfig base_;
  ProfileParams params_;
};

struct LatencyParams {
  double bits_per_value = 32.0;
};

double phase1_latency(const SubModelConfig& cfg, const PredictorModel& model);

// |X_n| / r_n.
double phase2_latency(double feature_bits, double bits_per_ms);

// Size of the final-layer feature a sub-model ships to the central node.
double feature_bits(const TransformerConfig& base, const SubModelConfig& cfg,
                    const LatencyParams& params = {});

// 2 * S * d_i * d_agg / g.
double phase3_latency(double seq_len, double central_dim, double aggregate_dim,
                      double flops_per_ms);

struct LatencyBreakdown {
  std::vector<double> compute_ms;   // t1 per device
  std::vector<double> transmit_ms;  // t2 per device; zero for the central node
  double aggregate_ms = 0.0;        // t3
  double end_to_end_ms = 0.0;
};

// max_n (t1_n + t2_n) + t3. Throws InfeasiblePolicy.
LatencyBreakdown latency_breakdown(const DecompositionPolicy& policy, const TransformerConfig& base,
                                   const DeviceFleet& fleet, const LatencyModel& latency,
                                   const LatencyParams& params = {});

double end_to_end_latency(const DecompositionPolicy& policy, const TransformerConfig& base,
                          const DeviceFleet& fleet, const LatencyModel& latency,
                          const LatencyParams& params = {});

// Maps a policy onto per-sub-model validation losses (all >= 0).
class DegradationOracle {
 public:
  virtual ~DegradationOracle() = default;
  virtual std::vector<double> sub_model_losses(const DecompositionPolicy& policy,
                                               const TransformerConfig& base) const = 0;
};

// Capacity-based surrogate:
//   loss_n = alpha * (1 - flops(C_n)/flops(full))^beta + gamma * max(0, 1 - sum d / d)
class SyntheticDegradation final : public DegradationOracle {
 public:
  struct Params {
    double alpha = 2.0;
    double beta = 1.5;
    double gamma = 0.5;
  };
  SyntheticDegradation() = default;
  explicit SyntheticDegradation(Params p) : params_(p) {}

  std::vector<double> sub_model_losses(const DecompositionPolicy& policy,
                                       const TransformerConfig& base) const override;

 private:
  Params params_{};
};

// Mean of the oracle's per-sub-model losses.
double degradation(const DecompositionPolicy& policy, const TransformerConfig& base,
                   const DegradationOracle& oracle);

inline constexpr double kDefaultDelta = 0.005;

struct ObjectiveValue {
  double degradation = 0.0;
  double latency_ms = 0.0;
  double psi = 0.0;
  double delta = kDefaultDelta;
};

// psi = degradation + delta * latency. Throws InfeasiblePolicy carrying the
// constraint report when the policy violates C1..C6.
ObjectiveValue objective(const DecompositionPolicy& policy, const TransformerConfig& base,
                         const DeviceFleet& fleet, const LatencyModel& latency,
                         const DegradationOracle& oracle, double delta,
                         const LatencyParams& params = {});

// One row of the search log. `iteration` doubles as the logical timestamp so
// logs are reproducible byte for byte.
struct EvaluationRecord {
  std::size_t iteration = 0;
  std::vector<double> encoding;
  ObjectiveValue value;
  double best_psi = 0.0;
};

// CSV: iteration,encoding,L_val,T_ms,delta,psi,best_psi (encoding is ';'-joined).
std::string run_log_to_csv(const std::vector<EvaluationRecord>& log);
std::vector<EvaluationRecord> run_log_from_csv(const std::string& text);

}  // namespace edgeplan

#endif  // EDGEPLAN_EVALUATOR_HPP_
