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

#include "edgeplan/booster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "edgeplan/config_io.hpp"

namespace edgeplan {

ToyDataset make_gaussian_clusters(const ClusterOptions& opt, std::uint64_t seed) {
  if (opt.classes < 1 || opt.samples < static_cast<std::size_t>(opt.classes)) {
    throw InvalidConfig("cluster data needs at least one sample per class");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, opt.stddev);
  std::vector<std::size_t> order(opt.samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  Eigen::MatrixXd x(2, static_cast<Eigen::Index>(opt.samples));
  std::vector<int> y(opt.samples);
  for (std::size_t i = 0; i < opt.samples; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(opt.classes));
    const double angle = 2.0 * M_PI * label / opt.classes;
    const auto col = static_cast<Eigen::Index>(order[i]);
    x(0, col) = opt.radius * std::cos(angle) + noise(rng);
    x(1, col) = opt.radius * std::sin(angle) + noise(rng);
    y[order[i]] = label;
  }

  const auto n_val = static_cast<std::size_t>(std::floor(opt.val_fraction * static_cast<double>(opt.samples)));
  const auto n_train = opt.samples - n_val;
  ToyDataset data;
  data.num_classes = opt.classes;
  data.train_x = x.leftCols(static_cast<Eigen::Index>(n_train));
  data.val_x = x.rightCols(static_cast<Eigen::Index>(n_val));
  data.train_y.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n_train));
  data.val_y.assign(y.begin() + static_cast<std::ptrdiff_t>(n_train), y.end());
  return data;
}

Eigen::MatrixXd ToyClassifier::hidden(const Eigen::MatrixXd& x) const {
  return ((w1 * x).colwise() + b1).cwiseMax(0.0);
}

Eigen::MatrixXd ToyClassifier::logits(const Eigen::MatrixXd& x) const {
  return (w2 * hidden(x)).colwise() + b2;
}

std::vector<int> ToyClassifier::predict(const Eigen::MatrixXd& x) const {
  const Eigen::MatrixXd z = logits(x);
  std::vector<int> out(static_cast<std::size_t>(z.cols()));
  for (Eigen::Index c = 0; c < z.cols(); ++c) out[static_cast<std::size_t>(c)] = argmax(z.col(c));
  return out;
}

ToyClassifier ToyClassifier::slice(std::size_t w) const {
  if (w == 0 || w > width()) throw InvalidConfig("slice width must be in [1, teacher width]");
  const auto k = static_cast<Eigen::Index>(w);
  ToyClassifier out;
  out.w1 = w1.topRows(k);
  out.b1 = b1.head(k);
  out.w2 = w2.leftCols(k);
  out.b2 = b2;
  return out;
}

ToyClassifier ToyClassifier::init(std::size_t inputs, std::size_t width, int classes, std::mt19937_64& rng) {
  const auto h = static_cast<Eigen::Index>(width);
  const auto p = static_cast<Eigen::Index>(inputs);
  std::normal_distribution<double> first(0.0, std::sqrt(2.0 / static_cast<double>(inputs)));
  std::normal_distribution<double> second(0.0, std::sqrt(1.0 / static_cast<double>(width)));
  ToyClassifier m;
  m.w1.resize(h, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < h; ++i) m.w1(i, j) = first(rng);
  m.b1 = Eigen::VectorXd::Constant(h, 0.1);
  m.w2.resize(classes, h);
  for (Eigen::Index j = 0; j < h; ++j)
    for (Eigen::Index i = 0; i < classes; ++i) m.w2(i, j) = second(rng);
  m.b2 = Eigen::VectorXd::Zero(classes);
  return m;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const Eigen::ArrayXd e = (logits.array() - logits.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

double cross_entropy(const Eigen::VectorXd& logits, int target) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return lse - logits(target);
}

int argmax(const Eigen::VectorXd& v) {
  Eigen::Index i = 0;
  v.maxCoeff(&i);
  return static_cast<int>(i);
}

double distill_loss(const Eigen::VectorXd& student_logits, int label,
                    const Eigen::VectorXd& teacher_logits, double weight) {
  const int hard = argmax(teacher_logits);
  return 0.5 * weight * (cross_entropy(student_logits, label) + cross_entropy(student_logits, hard));
}

Eigen::VectorXd distill_loss_gradient(const Eigen::VectorXd& student_logits, int label,
                                      const Eigen::VectorXd& teacher_logits, double weight) {
  Eigen::VectorXd g = softmax(student_logits);
  g(label) -= 0.5;
  g(argmax(teacher_logits)) -= 0.5;
  return weight * g;
}

double weighted_distill_objective(const ToyClassifier& s, const Eigen::MatrixXd& x,
                                  const std::vector<int>& labels, const std::vector<int>& teacher_hard,
                                  const Eigen::VectorXd& weights, ClassifierGradients* grads) {
  const Eigen::MatrixXd z1 = (s.w1 * x).colwise() + s.b1;
  const Eigen::MatrixXd a1 = z1.cwiseMax(0.0);
  const Eigen::MatrixXd z2 = (s.w2 * a1).colwise() + s.b2;
  Eigen::MatrixXd dz2(z2.rows(), z2.cols());
  double loss = 0.0;
  for (Eigen::Index c = 0; c < z2.cols(); ++c) {
    const auto i = static_cast<std::size_t>(c);
    const Eigen::VectorXd col = z2.col(c);
    const double w = weights(c);
    loss += 0.5 * w * (cross_entropy(col, labels[i]) + cross_entropy(col, teacher_hard[i]));
    Eigen::VectorXd g = softmax(col);
    g(labels[i]) -= 0.5;
    g(teacher_hard[i]) -= 0.5;
    dz2.col(c) = w * g;
  }
  if (grads != nullptr) {
    grads->w2 = dz2 * a1.transpose();
    grads->b2 = dz2.rowwise().sum();
    const Eigen::MatrixXd dz1 = (s.w2.transpose() * dz2).cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
    grads->w1 = dz1 * x.transpose();
    grads->b1 = dz1.rowwise().sum();
  }
  return loss;
}

Eigen::VectorXd init_weights(std::size_t m) {
  if (m == 0) throw InvalidConfig("sample count must be >= 1");
  return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m), 1.0 / static_cast<double>(m));
}

Eigen::VectorXd update_weights(const Eigen::VectorXd& weights, const Eigen::VectorXd& losses, bool flip_sign) {
  if (weights.size() != losses.size()) throw ShapeMismatch("weights and losses differ in length");
  const double m = static_cast<double>(weights.size());
  const double rate = flip_sign ? (1.0 - 1.0 / m) : (1.0 / m - 1.0);
  // Factors are computed relative to the smallest loss so the exponent never
  // underflows; the shift cancels in the normalisation.
  const double shift = flip_sign ? losses.maxCoeff() : losses.minCoeff();
  Eigen::VectorXd out = weights.array() * (rate * (losses.array() - shift)).exp();
  const double total = out.sum();
  if (!(total > 0.0) || !std::isfinite(total)) throw NumericalFailure("sample weights collapsed");
  out /= total;
  return out;
}

double weight_entropy(const Eigen::VectorXd& weights) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights(i) > 0.0) h -= weights(i) * std::log(weights(i));
  }
  return h;
}

double accuracy(const ToyClassifier& model, const Eigen::MatrixXd& x, const std::vector<int>& y) {
  if (y.empty()) return 0.0;
  const auto pred = model.predict(x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hits += pred[i] == y[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

double mean_cross_entropy(const ToyClassifier& model, const Eigen::MatrixXd& x, const std::vector<int>& y) {
  if (y.empty()) return 0.0;
  const Eigen::MatrixXd z = model.logits(x);
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += cross_entropy(z.col(static_cast<Eigen::Index>(i)), y[i]);
  return acc / static_cast<double>(y.size());
}

namespace {

void descend(ToyClassifier& model, const ToyDataset& data, const std::vector<int>& targets,
             const Eigen::VectorXd& weights, std::size_t epochs, double lr) {
  ClassifierGradients g;
  for (std::size_t e = 0; e < epochs; ++e) {
    weighted_distill_objective(model, data.train_x, data.train_y, targets, weights, &g);
    model.w1 -= lr * g.w1;
    model.b1 -= lr * g.b1;
    model.w2 -= lr * g.w2;
    model.b2 -= lr * g.b2;
  }
}

}  // namespace

ToyClassifier train_teacher(const ToyDataset& data, std::size_t width, std::size_t epochs,
                            double learning_rate, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto model = ToyClassifier::init(static_cast<std::size_t>(data.train_x.rows()), width, data.num_classes, rng);
  descend(model, data, data.train_y, init_weights(data.train_size()), epochs, learning_rate);
  return model;
}

ToyClassifier train_hard_labels(ToyClassifier model, const ToyDataset& data, std::size_t epochs,
                                double learning_rate) {
  descend(model, data, data.train_y, init_weights(data.train_size()), epochs, learning_rate);
  return model;
}

std::vector<double> CalibrationResult::val_losses() const {
  std::vector<double> out;
  for (const auto& s : steps) out.push_back(s.val_loss);
  return out;
}

double CalibrationResult::mean_val_loss() const {
  if (steps.empty()) return 0.0;
  const auto v = val_losses();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

CalibrationResult calibrate_sequence(const ToyClassifier& teacher, std::vector<ToyClassifier> sub_models,
                                     const ToyDataset& data, const CalibrationOptions& options) {
  if (sub_models.empty()) throw InvalidConfig("calibration needs at least one sub-model");
  const auto teacher_hard = teacher.predict(data.train_x);
  Eigen::VectorXd weights = init_weights(data.train_size());
  const Eigen::VectorXd unit = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(data.train_size()));

  CalibrationResult result;
  for (auto& model : sub_models) {
    result.weights.push_back(weights);
    descend(model, data, teacher_hard, weights, options.epochs, options.learning_rate);

    const Eigen::MatrixXd z = model.logits(data.train_x);
    Eigen::VectorXd losses(z.cols());
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      const auto i = static_cast<std::size_t>(c);
      losses(c) = 0.5 * (cross_entropy(z.col(c), data.train_y[i]) + cross_entropy(z.col(c), teacher_hard[i]));
    }
    CalibrationStep step;
    step.width = model.width();
    step.val_loss = mean_cross_entropy(model, data.val_x, data.val_y);
    step.val_accuracy = accuracy(model, data.val_x, data.val_y);
    step.weight_entropy = weight_entropy(weights);
    result.steps.push_back(step);

    weights = update_weights(weights, losses, options.flip_sign);
  }
  result.weights.push_back(weights);
  result.models = std::move(sub_models);
  return result;
}

std::string calibration_report_csv(const CalibrationResult& result) {
  std::ostringstream os;
  os << "# format: " << kFormatTag << "\n";
  os << "sub_model,width,val_loss,val_accuracy,weight_entropy\n";
  for (std::size_t j = 0; j < result.steps.size(); ++j) {
    const auto& s = result.steps[j];
    os << j << ',' << s.width << ',' << format_double(s.val_loss) << ',' << format_double(s.val_accuracy)
       << ',' << format_double(s.weight_entropy) << '\n';
  }
  return os.str();
}

ToyDegradationOracle::ToyDegradationOracle(ToyClassifier teacher, ToyDataset data, CalibrationOptions options)
    : teacher_(std::move(teacher)), data_(std::move(data)), options_(options) {}

std::vector<std::size_t> ToyDegradationOracle::widths_for(const DecompositionPolicy& policy,
                                                          const TransformerConfig& base) const {
  const double full = static_cast<double>(teacher_.width());
  std::vector<std::size_t> out;
  for (const auto& sm : policy.sub_models) {
    const double share = static_cast<double>(sm.embed_dim) / static_cast<double>(base.embed_dim);
    const auto w = static_cast<std::size_t>(std::llround(full * share));
    out.push_back(std::clamp<std::size_t>(w, 2, teacher_.width()));
  }
  return out;
}

std::vector<double> ToyDegradationOracle::sub_model_losses(const DecompositionPolicy& policy,
                                                           const TransformerConfig& base) const {
  std::vector<ToyClassifier> subs;
  for (auto w : widths_for(policy, base)) subs.push_back(teacher_.slice(w));
  return calibrate_sequence(teacher_, std::move(subs), data_, options_).val_losses();
}

}  // namespace edgeplan
