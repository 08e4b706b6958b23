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

#ifndef EDGEPLAN_BOOSTER_HPP_
#define EDGEPLAN_BOOSTER_HPP_

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "edgeplan/evaluator.hpp"

namespace edgeplan {

// Labelled samples stored column-wise (one column per sample).
struct ToyDataset {
  Eigen::MatrixXd train_x;
  std::vector<int> train_y;
  Eigen::MatrixXd val_x;
  std::vector<int> val_y;
  int num_classes = 0;

  std::size_t train_size() const { return train_y.size(); }
};

struct ClusterOptions {
  std::size_t samples = 600;
  int classes = 3;
  double radius = 2.0;  // cluster centres sit on a circle
  double stddev = 1.0;
  double val_fraction = 0.2;
};

// 2-D isotropic Gaussian clusters, one per class, shuffled then split.
ToyDataset make_gaussian_clusters(const ClusterOptions& options, std::uint64_t seed);

// affine -> ReLU -> affine classifier; the hidden activations double as the
// features a device ships for aggregation.
struct ToyClassifier {
  Eigen::MatrixXd w1;  // H x p
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // R x H
  Eigen::VectorXd b2;

  std::size_t width() const { return static_cast<std::size_t>(b1.size()); }
  int num_classes() const { return static_cast<int>(b2.size()); }

  Eigen::MatrixXd hidden(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd logits(const Eigen::MatrixXd& x) const;
  std::vector<int> predict(const Eigen::MatrixXd& x) const;

  // Keeps the first `width` hidden units.
  ToyClassifier slice(std::size_t width) const;

  static ToyClassifier init(std::size_t inputs, std::size_t width, int classes, std::mt19937_64& rng);
};

struct ClassifierGradients {
  Eigen::MatrixXd w1, w2;
  Eigen::VectorXd b1, b2;
};

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// -log softmax(logits)[target], stabilised by max subtraction.
double cross_entropy(const Eigen::VectorXd& logits, int target);

int argmax(const Eigen::VectorXd& v);

// (w / 2) * [CE(student, y) + CE(student, y_t)], y_t = argmax(teacher).
double distill_loss(const Eigen::VectorXd& student_logits, int label,
                    const Eigen::VectorXd& teacher_logits, double weight);

// Gradient of distill_loss with respect to the student logits.
Eigen::VectorXd distill_loss_gradient(const Eigen::VectorXd& student_logits, int label,
                                      const Eigen::VectorXd& teacher_logits, double weight);

// Batch objective sum_i (w_i / 2) [CE(s_i, y_i) + CE(s_i, t_i)] and, when
// `grads` is given, its gradient with respect to the classifier parameters.
// Passing teacher_hard == labels gives plain weighted cross entropy.
double weighted_distill_objective(const ToyClassifier& student, const Eigen::MatrixXd& x,
                                  const std::vector<int>& labels,
                                  const std::vector<int>& teacher_hard,
                                  const Eigen::VectorXd& weights, ClassifierGradients* grads);

// Uniform 1/M sample weights.
Eigen::VectorXd init_weights(std::size_t m);

// w_i <- w_i * exp[(1/M - 1) * loss_i], then renormalised to sum to one.
// flip_sign uses exp[(1 - 1/M) * loss_i] instead (classical boosting direction).
Eigen::VectorXd update_weights(const Eigen::VectorXd& weights, const Eigen::VectorXd& losses,
                               bool flip_sign = false);

double weight_entropy(const Eigen::VectorXd& weights);

double accuracy(const ToyClassifier& model, const Eigen::MatrixXd& x, const std::vector<int>& y);
double mean_cross_entropy(const ToyClassifier& model, const Eigen::MatrixXd& x, const std::vector<int>& y);

// Full-batch gradient descent on mean cross entropy. Zero epochs returns the
// seeded initial weights.
ToyClassifier train_teacher(const ToyDataset& data, std::size_t width, std::size_t epochs,
                            double learning_rate, std::uint64_t seed);

// Plain hard-label baseline for the same starting point (uniform weights).
ToyClassifier train_hard_labels(ToyClassifier model, const ToyDataset& data, std::size_t epochs,
                                double learning_rate);

struct CalibrationOptions {
  std::size_t epochs = 300;
  double learning_rate = 0.5;
  bool flip_sign = false;
};

struct CalibrationStep {
  std::size_t width = 0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  // Entropy of the sample weights this sub-model was trained under.
  double weight_entropy = 0.0;
};

struct CalibrationResult {
  std::vector<ToyClassifier> models;
  std::vector<CalibrationStep> steps;
  // weights[j] was used to calibrate model j; weights.back() is the final update.
  std::vector<Eigen::VectorXd> weights;

  std::vector<double> val_losses() const;
  double mean_val_loss() const;
};

// Sequentially distils each sub-model from the teacher under the current
// sample weights, then reweights samples from that sub-model's per-sample
// (unweighted) distillation losses.
CalibrationResult calibrate_sequence(const ToyClassifier& teacher, std::vector<ToyClassifier> sub_models,
                                     const ToyDataset& data, const CalibrationOptions& options);

std::string calibration_report_csv(const CalibrationResult& result);

// Degradation oracle backed by real (toy) validation losses: every sub-model
// becomes a slice of the teacher whose hidden width is proportional to its
// embedding share, and is calibrated with calibrate_sequence.
class ToyDegradationOracle final : public DegradationOracle {
 public:
  ToyDegradationOracle(ToyClassifier teacher, ToyDataset data, CalibrationOptions options);

  std::vector<std::size_t> widths_for(const DecompositionPolicy& policy, const TransformerConfig& base) const;
  std::vector<double> sub_model_losses(const DecompositionPolicy& policy,
                                       const TransformerConfig& base) const override;

  const ToyClassifier& teacher() const { return teacher_; }
  const ToyDataset& data() const { return data_; }
  const CalibrationOptions& options() const { return options_; }

 private:
  ToyClassifier teacher_;
  ToyDataset data_;
  CalibrationOptions options_;
};

}  // namespace edgeplan

#endif  // EDGEPLAN_BOOSTER_HPP_
