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

#ifndef EDGEPLAN_BO_ENGINE_HPP_
#define EDGEPLAN_BO_ENGINE_HPP_

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "edgeplan/core_model.hpp"
#include "edgeplan/evaluator.hpp"

namespace edgeplan {

// Fixed-length embedding of a policy: (l_n/L, d_n/d, mean h_n/h, mean D_n/D)
// for every sub-model, concatenated.
using EncodedPolicy = Eigen::VectorXd;

EncodedPolicy encode_policy(const DecompositionPolicy& policy, const TransformerConfig& base);

// Inverse of encode_policy for constant-per-layer policies; every component is
// rounded to the nearest integer and clamped into the base model's range.
DecompositionPolicy decode_policy(const EncodedPolicy& x, const TransformerConfig& base);

// Matern covariance with smoothness 3/2: (1 + sqrt(3) r) exp(-sqrt(3) r),
// r = ||x1 - x2|| / length_scale.
double matern_kernel(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2, double length_scale = 1.0);

struct GPOptions {
  double noise_variance = 1e-4;
  double length_scale = 1.0;
  // Fit on standardised observations; predictions are mapped back.
  bool standardize = true;
};

struct GPPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

// Immutable GP posterior over encoded policies; zero prior mean.
class GPState {
 public:
  explicit GPState(GPOptions options = {}) : options_(options) {}

  std::size_t size() const { return inputs_.size(); }
  bool empty() const { return inputs_.empty(); }
  const GPOptions& options() const { return options_; }
  const std::vector<Eigen::VectorXd>& inputs() const { return inputs_; }
  const std::vector<double>& observations() const { return observations_; }
  // Diagonal jitter that was needed on top of the noise variance.
  double jitter() const { return jitter_; }
  // Index of the smallest observation.
  std::size_t best_index() const;

 private:
  friend GPState gp_fit(GPOptions, std::vector<Eigen::VectorXd>, std::vector<double>);
  friend GPPrediction gp_predict(const GPState&, const Eigen::VectorXd&);

  GPOptions options_;
  std::vector<Eigen::VectorXd> inputs_;
  std::vector<double> observations_;
  double y_offset_ = 0.0;
  double y_scale_ = 1.0;
  double jitter_ = 0.0;
  Eigen::MatrixXd chol_lower_;
  Eigen::VectorXd alpha_;
};

// Refactorises K + sigma^2 I over all observations. On Cholesky failure a
// diagonal jitter ladder 1e-8 .. 1e-4 is tried before NumericalFailure.
GPState gp_fit(GPOptions options, std::vector<Eigen::VectorXd> xs, std::vector<double> ys);

// Returns a new posterior with (x, y) appended; `state` is left untouched.
GPState gp_update(const GPState& state, const Eigen::VectorXd& x, double y);

// Throws EmptyState when no observation has been added.
GPPrediction gp_predict(const GPState& state, const Eigen::VectorXd& x);

// Expected improvement below `best` for a minimisation problem.
double expected_improvement(double mean, double sigma, double best);

struct ProposalOptions {
  std::size_t pool_size = 256;
  std::size_t perturbations = 32;
  double perturbation_sigma = 0.1;
};

// Index of the candidate with the largest EI; ties go to the lexicographically
// smallest encoding. `scores`, when given, receives every candidate's EI.
std::size_t select_by_ei(const GPState& state, const std::vector<EncodedPolicy>& candidates,
                         std::vector<double>* scores = nullptr);

// Scores random feasible policies plus perturbations of the incumbent and
// returns the EI maximiser.
DecompositionPolicy propose_next(const GPState& state, const TransformerConfig& base,
                                 const DeviceFleet& fleet, const ProposalOptions& options,
                                 std::mt19937_64& rng);

struct SearchOptions {
  std::size_t initial_policies = 10;  // r
  std::size_t iterations = 40;        // I_s
  double delta = kDefaultDelta;
  std::uint64_t seed = 0;
  GPOptions gp{};
  ProposalOptions proposal{};
  LatencyParams latency{};
};

struct SearchResult {
  DecompositionPolicy best;
  ObjectiveValue best_value;
  std::vector<DecompositionPolicy> evaluated;
  std::vector<EvaluationRecord> log;
};

SearchResult debo_search(const TransformerConfig& base, const DeviceFleet& fleet,
                         const LatencyModel& latency, const DegradationOracle& oracle,
                         const SearchOptions& options);

// Baseline: `draws` independent samples from the same seeded sampler stream
// debo_search uses for its initial design.
SearchResult random_search(const TransformerConfig& base, const DeviceFleet& fleet,
                           const LatencyModel& latency, const DegradationOracle& oracle,
                           std::size_t draws, double delta, std::uint64_t seed,
                           const LatencyParams& params = {});

}  // namespace edgeplan

#endif  // EDGEPLAN_BO_ENGINE_HPP_
