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

#ifndef EDGEPLAN_LATENCY_ORACLE_HPP_
#define EDGEPLAN_LATENCY_ORACLE_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "edgeplan/core_model.hpp"

namespace edgeplan {

// Predictor input: depth, embedding width, mean heads and mean MLP width.
struct ArchFeatures {
  double layers = 1.0;
  double embed_dim = 1.0;
  double mean_heads = 1.0;
  double mean_mlp_dim = 1.0;

  static ArchFeatures of(const SubModelConfig& cfg);
  std::array<double, 4> as_array() const { return {layers, embed_dim, mean_heads, mean_mlp_dim}; }
};

struct LatencySample {
  ArchFeatures features;
  std::string device;
  double latency_ms = 0.0;
};

struct ProfileParams {
  double membw_factor = 50.0;      // effective memory bandwidth = factor * g_n bytes/ms
  double layer_overhead_ms = 0.2;  // kernel launch cost per layer
  double noise_sigma = 0.03;       // log-normal multiplicative noise; 0 disables
};

// Synthetic stand-in for on-device measurement:
//   flops/g + memory/(membw_factor * g) + overhead * l, times exp(sigma * z).
double synth_profile(const DeviceSpec& device, const SubModelConfig& cfg,
                     const TransformerConfig& base, std::uint64_t seed,
                     const ProfileParams& params = {});

// Noise-free variant (seed irrelevant).
double synth_profile_mean(const DeviceSpec& device, const SubModelConfig& cfg,
                          const TransformerConfig& base, const ProfileParams& params = {});

// Draws n sub-models over the device's feasible space and profiles each.
// Propagates InfeasibleFleet from the sampler.
std::vector<LatencySample> collect_dataset(const DeviceSpec& device,
                                           const TransformerConfig& base, std::size_t n,
                                           std::uint64_t seed,
                                           const ProfileParams& params = {});

// Three-layer MLP 4 -> H -> H -> 1 with ReLU activations, wrapped in z-score
// normalisation of inputs and target.
struct PredictorModel {
  Eigen::MatrixXd w1;  // H x 4
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // H x H
  Eigen::VectorXd b2;
  Eigen::MatrixXd w3;  // 1 x H
  Eigen::VectorXd b3;
  std::array<double, 4> feature_mean{};
  std::array<double, 4> feature_scale{1.0, 1.0, 1.0, 1.0};
  double target_mean = 0.0;
  double target_scale = 1.0;
  // Inputs and target pass through log() before standardisation.
  bool log_space = false;

  std::size_t hidden() const { return static_cast<std::size_t>(b1.size()); }
  void check_shapes() const;

  // Raw network output in normalised target units; x has one column per sample.
  Eigen::RowVectorXd forward(const Eigen::MatrixXd& x) const;

  static PredictorModel init(std::size_t hidden, std::mt19937_64& rng);
};

struct MlpGradients {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;
};

// Mean squared error (1/B) sum (f(x) - y)^2 over the columns of x, in
// normalised units, with analytic gradients.
double mse_loss_and_gradients(const PredictorModel& model, const Eigen::MatrixXd& x,
                              const Eigen::RowVectorXd& y, MlpGradients* grads);

struct TrainOptions {
  std::size_t hidden = 600;
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double holdout_fraction = 0.2;
  bool log_space = false;
  std::uint64_t seed = 0;
};

struct TrainResult {
  PredictorModel model;
  double train_rmse_ms = 0.0;
  double heldout_rmse_ms = 0.0;
  double heldout_mean_latency_ms = 0.0;
  // Full-training-set loss (normalised units) after each epoch; entry 0 is the
  // loss before the first update.
  std::vector<double> epoch_losses;
};

// Mini-batch gradient descent on MSE. Throws DegenerateData when a feature
// has zero variance or the dataset is smaller than 100 samples.
TrainResult train_predictor(const std::vector<LatencySample>& data, const TrainOptions& options);

// Deterministic forward pass in milliseconds, clamped to >= 0.01 ms.
double predict_latency(const PredictorModel& model, const ArchFeatures& features);

inline constexpr double kMinPredictedLatencyMs = 0.01;

// CSV with header `l,d,h_bar,D_bar,device,latency_ms`.
std::string dataset_to_csv(const std::vector<LatencySample>& data);
std::vector<LatencySample> dataset_from_csv(const std::string& text);

// Versioned text serialisation; round-trips bit-exactly.
std::string predictor_to_text(const PredictorModel& model);
PredictorModel predictor_from_text(const std::string& text);

}  // namespace edgeplan

#endif  // EDGEPLAN_LATENCY_ORACLE_HPP_
