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

#include "edgeplan/aggregator.hpp"

#include <cmath>
#include <map>

namespace edgeplan {

AggregationModule AggregationModule::init(Eigen::Index aggregate_dim, Eigen::Index central_dim, int classes,
                                          std::mt19937_64& rng) {
  std::normal_distribution<double> fuse(0.0, std::sqrt(1.0 / static_cast<double>(aggregate_dim)));
  std::normal_distribution<double> head(0.0, std::sqrt(1.0 / static_cast<double>(central_dim)));
  AggregationModule m;
  m.w.resize(aggregate_dim, central_dim);
  for (Eigen::Index j = 0; j < central_dim; ++j)
    for (Eigen::Index i = 0; i < aggregate_dim; ++i) m.w(i, j) = fuse(rng);
  m.b = Eigen::VectorXd::Zero(central_dim);
  m.head_w.resize(classes, central_dim);
  for (Eigen::Index j = 0; j < central_dim; ++j)
    for (Eigen::Index i = 0; i < classes; ++i) m.head_w(i, j) = head(rng);
  m.head_b = Eigen::VectorXd::Zero(classes);
  return m;
}

Eigen::VectorXd aggregate(const std::vector<Eigen::MatrixXd>& features, const AggregationModule& module) {
  if (features.empty()) throw ShapeMismatch("no features to aggregate");
  const Eigen::Index tokens = features.front().rows();
  Eigen::Index width = 0;
  for (const auto& f : features) {
    if (f.rows() != tokens) throw ShapeMismatch("features disagree on the token count");
    width += f.cols();
  }
  if (width != module.aggregate_dim()) throw ShapeMismatch("feature widths do not add up to d_agg");
  if (tokens == 0) throw ShapeMismatch("features have no tokens");

  Eigen::MatrixXd concat(tokens, width);
  Eigen::Index offset = 0;
  for (const auto& f : features) {
    concat.middleCols(offset, f.cols()) = f;
    offset += f.cols();
  }
  const Eigen::MatrixXd fused = (concat * module.w).rowwise() + module.b.transpose();
  return fused.colwise().mean().transpose();
}

Eigen::VectorXd aggregate_logits(const std::vector<Eigen::MatrixXd>& features, const AggregationModule& module) {
  return module.head_w * aggregate(features, module) + module.head_b;
}

std::vector<Eigen::MatrixXd> toy_features(const std::vector<ToyClassifier>& sub_models,
                                          const Eigen::MatrixXd& x, Eigen::Index column) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(sub_models.size());
  for (const auto& m : sub_models) out.push_back(m.hidden(x.col(column)).transpose());
  return out;
}

namespace {

// d_agg x B stack of every sub-model's hidden activations.
Eigen::MatrixXd stacked_features(const std::vector<ToyClassifier>& sub_models, const Eigen::MatrixXd& x) {
  Eigen::Index width = 0;
  for (const auto& m : sub_models) width += static_cast<Eigen::Index>(m.width());
  Eigen::MatrixXd out(width, x.cols());
  Eigen::Index offset = 0;
  for (const auto& m : sub_models) {
    const auto w = static_cast<Eigen::Index>(m.width());
    out.middleRows(offset, w) = m.hidden(x);
    offset += w;
  }
  return out;
}

double batch_loss(const AggregationModule& m, const Eigen::MatrixXd& feats, const std::vector<int>& y,
                  Eigen::MatrixXd* dlogits, Eigen::MatrixXd* fused) {
  const Eigen::MatrixXd z = (m.w.transpose() * feats).colwise() + m.b;
  const Eigen::MatrixXd logits = (m.head_w * z).colwise() + m.head_b;
  const double n = static_cast<double>(feats.cols());
  double loss = 0.0;
  if (dlogits != nullptr) dlogits->resize(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const auto label = y[static_cast<std::size_t>(c)];
    loss += cross_entropy(logits.col(c), label);
    if (dlogits != nullptr) {
      Eigen::VectorXd g = softmax(logits.col(c));
      g(label) -= 1.0;
      dlogits->col(c) = g / n;
    }
  }
  if (fused != nullptr) *fused = z;
  return loss / n;
}

}  // namespace

AggregationModule train_aggregator(AggregationModule module, const std::vector<ToyClassifier>& sub_models,
                                   const ToyDataset& data, std::size_t epochs, double learning_rate,
                                   std::vector<double>* loss_history) {
  const Eigen::MatrixXd feats = stacked_features(sub_models, data.train_x);
  if (feats.rows() != module.aggregate_dim()) throw ShapeMismatch("sub-model widths do not add up to d_agg");
  if (loss_history != nullptr) loss_history->clear();
  Eigen::MatrixXd dlogits;
  Eigen::MatrixXd fused;
  for (std::size_t e = 0; e < epochs; ++e) {
    const double loss = batch_loss(module, feats, data.train_y, &dlogits, &fused);
    if (loss_history != nullptr) loss_history->push_back(loss);
    const Eigen::MatrixXd g_head_w = dlogits * fused.transpose();
    const Eigen::VectorXd g_head_b = dlogits.rowwise().sum();
    const Eigen::MatrixXd dz = module.head_w.transpose() * dlogits;
    const Eigen::MatrixXd g_w = feats * dz.transpose();
    const Eigen::VectorXd g_b = dz.rowwise().sum();
    module.head_w -= learning_rate * g_head_w;
    module.head_b -= learning_rate * g_head_b;
    module.w -= learning_rate * g_w;
    module.b -= learning_rate * g_b;
  }
  if (loss_history != nullptr) {
    loss_history->push_back(batch_loss(module, feats, data.train_y, nullptr, nullptr));
  }
  return module;
}

double aggregator_accuracy(const AggregationModule& module, const std::vector<ToyClassifier>& sub_models,
                           const Eigen::MatrixXd& x, const std::vector<int>& y) {
  if (y.empty()) return 0.0;
  const Eigen::MatrixXd feats = stacked_features(sub_models, x);
  const Eigen::MatrixXd logits =
      (module.head_w * ((module.w.transpose() * feats).colwise() + module.b)).colwise() + module.head_b;
  std::size_t hits = 0;
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    hits += argmax(logits.col(c)) == y[static_cast<std::size_t>(c)] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

Eigen::VectorXd ensemble_average(const std::vector<Eigen::VectorXd>& logits) {
  if (logits.empty()) throw EmptyEnsemble("ensemble_average needs at least one member");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(logits.front().size());
  for (const auto& l : logits) {
    if (l.size() != acc.size()) throw ShapeMismatch("ensemble members disagree on the class count");
    acc += softmax(l);
  }
  return acc / static_cast<double>(logits.size());
}

int ensemble_majority(const std::vector<int>& predictions) {
  if (predictions.empty()) throw EmptyEnsemble("ensemble_majority needs at least one vote");
  std::map<int, std::size_t> votes;
  for (int p : predictions) ++votes[p];
  int best = votes.begin()->first;
  std::size_t count = votes.begin()->second;
  for (const auto& [cls, n] : votes) {
    if (n > count) {
      best = cls;
      count = n;
    }
  }
  return best;
}

double ensemble_average_accuracy(const std::vector<ToyClassifier>& sub_models, const Eigen::MatrixXd& x,
                                 const std::vector<int>& y) {
  if (y.empty()) return 0.0;
  std::vector<Eigen::MatrixXd> member_logits;
  for (const auto& m : sub_models) member_logits.push_back(m.logits(x));
  std::size_t hits = 0;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    std::vector<Eigen::VectorXd> cols;
    for (const auto& l : member_logits) cols.push_back(l.col(c));
    hits += argmax(ensemble_average(cols)) == y[static_cast<std::size_t>(c)] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

double ensemble_majority_accuracy(const std::vector<ToyClassifier>& sub_models, const Eigen::MatrixXd& x,
                                  const std::vector<int>& y) {
  if (y.empty()) return 0.0;
  std::vector<std::vector<int>> preds;
  for (const auto& m : sub_models) preds.push_back(m.predict(x));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    std::vector<int> votes;
    for (const auto& p : preds) votes.push_back(p[i]);
    hits += ensemble_majority(votes) == y[i] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

}  // namespace edgeplan
