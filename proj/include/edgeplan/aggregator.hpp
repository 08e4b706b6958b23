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

#ifndef EDGEPLAN_AGGREGATOR_HPP_
#define EDGEPLAN_AGGREGATOR_HPP_

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "edgeplan/booster.hpp"

namespace edgeplan {

// Central-node fusion: Pool(Concat(X_1..X_N) W + b) followed by a linear task
// head. Each X_n is S x d_n (one row per token).
struct AggregationModule {
  Eigen::MatrixXd w;       // d_agg x d_i
  Eigen::VectorXd b;       // d_i
  Eigen::MatrixXd head_w;  // R x d_i
  Eigen::VectorXd head_b;  // R

  Eigen::Index aggregate_dim() const { return w.rows(); }
  Eigen::Index central_dim() const { return w.cols(); }

  static AggregationModule init(Eigen::Index aggregate_dim, Eigen::Index central_dim, int classes,
                                std::mt19937_64& rng);
};

// Throws ShapeMismatch unless every input has the same token count and the
// widths add up to the module's d_agg.
Eigen::VectorXd aggregate(const std::vector<Eigen::MatrixXd>& features, const AggregationModule& module);

Eigen::VectorXd aggregate_logits(const std::vector<Eigen::MatrixXd>& features, const AggregationModule& module);

// Per-sample features of the toy substrate: sub-model n's hidden activations
// as a single-token 1 x width matrix.
std::vector<Eigen::MatrixXd> toy_features(const std::vector<ToyClassifier>& sub_models,
                                          const Eigen::MatrixXd& x, Eigen::Index column);

// Full-batch gradient descent on the cross entropy of the aggregated logits;
// the sub-models stay frozen. `loss_history`, when given, receives the
// training loss before each epoch and after the last.
AggregationModule train_aggregator(AggregationModule module, const std::vector<ToyClassifier>& sub_models,
                                   const ToyDataset& data, std::size_t epochs, double learning_rate,
                                   std::vector<double>* loss_history = nullptr);

double aggregator_accuracy(const AggregationModule& module, const std::vector<ToyClassifier>& sub_models,
                           const Eigen::MatrixXd& x, const std::vector<int>& y);

// Mean of the members' softmax probabilities. Throws EmptyEnsemble.
Eigen::VectorXd ensemble_average(const std::vector<Eigen::VectorXd>& logits);

// Most frequent class; ties go to the lowest class index. Throws EmptyEnsemble.
int ensemble_majority(const std::vector<int>& predictions);

double ensemble_average_accuracy(const std::vector<ToyClassifier>& sub_models, const Eigen::MatrixXd& x,
                                 const std::vector<int>& y);
double ensemble_majority_accuracy(const std::vector<ToyClassifier>& sub_models, const Eigen::MatrixXd& x,
                                  const std::vector<int>& y);

}  // namespace edgeplan

#endif  // EDGEPLAN_AGGREGATOR_HPP_
