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

#include "edgeplan/latency_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "edgeplan/config_io.hpp"

namespace edgeplan {

ArchFeatures ArchFeatures::of(const SubModelConfig& cfg) {
  return {static_cast<double>(cfg.layers), static_cast<double>(cfg.embed_dim), cfg.mean_heads(),
          cfg.mean_mlp_dim()};
}

double synth_profile_mean(const DeviceSpec& device, const SubModelConfig& cfg,
                          const TransformerConfig& base, const ProfileParams& params) {
  const double g = device.compute_flops_per_ms;
  return flops(cfg, base) / g + memory(cfg, base) / (params.membw_factor * g) +
         params.layer_overhead_ms * static_cast<double>(cfg.layers);
}

double synth_profile(const DeviceSpec& device, const SubModelConfig& cfg,
                     const TransformerConfig& base, std::uint64_t seed,
                     const ProfileParams& params) {
  cfg.validate();
  const double mean = synth_profile_mean(device, cfg, base, params);
  if (params.noise_sigma <= 0.0) return mean;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  return mean * std::exp(params.noise_sigma * z(rng));
}

std::vector<LatencySample> collect_dataset(const DeviceSpec& device,
                                           const TransformerConfig& base, std::size_t n,
                                           std::uint64_t seed, const ProfileParams& params) {
  if (n == 0) throw InvalidConfig("dataset size must be >= 1");
  DeviceFleet single;
  single.devices.push_back(device);
  std::mt19937_64 rng(seed);
  std::vector<LatencySample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto policy = sample_policy(base, single, rng);
    const auto& cfg = policy.sub_models.front();
    out.push_back({ArchFeatures::of(cfg), device.name, synth_profile(device, cfg, base, rng(), params)});
  }
  return out;
}

void PredictorModel::check_shapes() const {
  const auto h = b1.size();
  if (w1.rows() != h || w1.cols() != 4 || w2.rows() != h || w2.cols() != h || b2.size() != h ||
      w3.rows() != 1 || w3.cols() != h || b3.size() != 1) {
    throw FormatError("predictor weight shapes are inconsistent");
  }
  for (double v : feature_scale) {
    if (!std::isfinite(v) || v <= 0.0) throw FormatError("bad feature normalisation constant");
  }
  if (!std::isfinite(target_mean) || !std::isfinite(target_scale) || target_scale <= 0.0) {
    throw FormatError("bad target normalisation constant");
  }
}

PredictorModel PredictorModel::init(std::size_t hidden, std::mt19937_64& rng) {
  const auto h = static_cast<Eigen::Index>(hidden);
  PredictorModel m;
  auto he = [&rng](Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(cols)));
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) w(i, j) = dist(rng);
    return w;
  };
  m.w1 = he(h, 4);
  m.b1 = Eigen::VectorXd::Zero(h);
  m.w2 = he(h, h);
  m.b2 = Eigen::VectorXd::Zero(h);
  m.w3 = he(1, h);
  m.b3 = Eigen::VectorXd::Zero(1);
  return m;
}

Eigen::RowVectorXd PredictorModel::forward(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd a1 = ((w1 * x).colwise() + b1).cwiseMax(0.0);
  Eigen::MatrixXd a2 = ((w2 * a1).colwise() + b2).cwiseMax(0.0);
  return (w3 * a2).array() + b3(0);
}

double mse_loss_and_gradients(const PredictorModel& m, const Eigen::MatrixXd& x,
                              const Eigen::RowVectorXd& y, MlpGradients* grads) {
  const double batch = static_cast<double>(x.cols());
  Eigen::MatrixXd z1 = (m.w1 * x).colwise() + m.b1;
  Eigen::MatrixXd a1 = z1.cwiseMax(0.0);
  Eigen::MatrixXd z2 = (m.w2 * a1).colwise() + m.b2;
  Eigen::MatrixXd a2 = z2.cwiseMax(0.0);
  Eigen::RowVectorXd out = (m.w3 * a2).array() + m.b3(0);
  Eigen::RowVectorXd err = out - y;
  const double loss = err.squaredNorm() / batch;
  if (grads == nullptr) return loss;

  Eigen::RowVectorXd dout = (2.0 / batch) * err;
  grads->w3 = dout * a2.transpose();
  grads->b3 = Eigen::VectorXd::Constant(1, dout.sum());
  Eigen::MatrixXd dz2 = (m.w3.transpose() * dout).cwiseProduct((z2.array() > 0.0).cast<double>().matrix());
  grads->w2 = dz2 * a1.transpose();
  grads->b2 = dz2.rowwise().sum();
  Eigen::MatrixXd dz1 = (m.w2.transpose() * dz2).cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
  grads->w1 = dz1 * x.transpose();
  grads->b1 = dz1.rowwise().sum();
  return loss;
}

namespace {

double feature_transform(double v, bool log_space) { return log_space ? std::log(v) : v; }

Eigen::Vector4d normalise(const PredictorModel& m, const ArchFeatures& f) {
  const auto raw = f.as_array();
  Eigen::Vector4d x;
  for (int i = 0; i < 4; ++i) {
    x(i) = (feature_transform(raw[static_cast<std::size_t>(i)], m.log_space) -
            m.feature_mean[static_cast<std::size_t>(i)]) /
           m.feature_scale[static_cast<std::size_t>(i)];
  }
  return x;
}

double rmse_ms(const PredictorModel& m, const std::vector<LatencySample>& data,
               const std::vector<std::size_t>& idx) {
  if (idx.empty()) return 0.0;
  double acc = 0.0;
  for (auto i : idx) {
    const double e = predict_latency(m, data[i].features) - data[i].latency_ms;
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(idx.size()));
}

}  // namespace

TrainResult train_predictor(const std::vector<LatencySample>& data, const TrainOptions& opt) {
  if (data.size() < 100) throw DegenerateData("latency predictor needs at least 100 samples");
  if (opt.hidden == 0 || opt.batch_size == 0) throw InvalidConfig("hidden and batch size must be >= 1");
  for (const auto& s : data) {
    if (!(s.latency_ms > 0.0)) throw DegenerateData("latency samples must be positive");
  }

  std::mt19937_64 rng(opt.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto holdout = static_cast<std::size_t>(std::floor(opt.holdout_fraction * static_cast<double>(data.size())));
  std::vector<std::size_t> test_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(holdout));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(holdout), order.end());

  PredictorModel model = PredictorModel::init(opt.hidden, rng);
  model.log_space = opt.log_space;

  const auto n_train = static_cast<Eigen::Index>(train_idx.size());
  Eigen::MatrixXd raw_x(4, n_train);
  Eigen::RowVectorXd raw_y(n_train);
  for (Eigen::Index c = 0; c < n_train; ++c) {
    const auto& s = data[train_idx[static_cast<std::size_t>(c)]];
    const auto f = s.features.as_array();
    for (int i = 0; i < 4; ++i) raw_x(i, c) = feature_transform(f[static_cast<std::size_t>(i)], opt.log_space);
    raw_y(c) = feature_transform(s.latency_ms, opt.log_space);
  }
  for (int i = 0; i < 4; ++i) {
    const double mean = raw_x.row(i).mean();
    const double var = (raw_x.row(i).array() - mean).square().mean();
    if (!(var > 0.0)) {
      throw DegenerateData("feature " + std::to_string(i) + " has zero variance");
    }
    model.feature_mean[static_cast<std::size_t>(i)] = mean;
    model.feature_scale[static_cast<std::size_t>(i)] = std::sqrt(var);
  }
  model.target_mean = raw_y.mean();
  const double y_var = (raw_y.array() - model.target_mean).square().mean();
  model.target_scale = y_var > 0.0 ? std::sqrt(y_var) : 1.0;
  if (!(y_var > 0.0)) {
    // Constant target: a zero output layer predicts the mean exactly and
    // receives zero gradient.
    model.w3.setZero();
    model.b3.setZero();
  }

  Eigen::MatrixXd x(4, n_train);
  for (int i = 0; i < 4; ++i) {
    x.row(i) = (raw_x.row(i).array() - model.feature_mean[static_cast<std::size_t>(i)]) /
               model.feature_scale[static_cast<std::size_t>(i)];
  }
  Eigen::RowVectorXd y = (raw_y.array() - model.target_mean) / model.target_scale;

  TrainResult result;
  result.epoch_losses.push_back(mse_loss_and_gradients(model, x, y, nullptr));
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n_train));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  MlpGradients g;
  const auto batch = static_cast<Eigen::Index>(opt.batch_size);
  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), rng);
    for (Eigen::Index start = 0; start < n_train; start += batch) {
      const Eigen::Index len = std::min(batch, n_train - start);
      Eigen::MatrixXd bx(4, len);
      Eigen::RowVectorXd by(len);
      for (Eigen::Index c = 0; c < len; ++c) {
        bx.col(c) = x.col(perm[static_cast<std::size_t>(start + c)]);
        by(c) = y(perm[static_cast<std::size_t>(start + c)]);
      }
      mse_loss_and_gradients(model, bx, by, &g);
      model.w1 -= opt.learning_rate * g.w1;
      model.b1 -= opt.learning_rate * g.b1;
      model.w2 -= opt.learning_rate * g.w2;
      model.b2 -= opt.learning_rate * g.b2;
      model.w3 -= opt.learning_rate * g.w3;
      model.b3 -= opt.learning_rate * g.b3;
    }
    result.epoch_losses.push_back(mse_loss_and_gradients(model, x, y, nullptr));
  }

  result.train_rmse_ms = rmse_ms(model, data, train_idx);
  result.heldout_rmse_ms = rmse_ms(model, data, test_idx);
  if (!test_idx.empty()) {
    double acc = 0.0;
    for (auto i : test_idx) acc += data[i].latency_ms;
    result.heldout_mean_latency_ms = acc / static_cast<double>(test_idx.size());
  }
  result.model = std::move(model);
  return result;
}

double predict_latency(const PredictorModel& model, const ArchFeatures& features) {
  const Eigen::Vector4d x = normalise(model, features);
  const double z = model.forward(x)(0);
  double out = z * model.target_scale + model.target_mean;
  if (model.log_space) out = std::exp(out);
  if (!std::isfinite(out) || out < kMinPredictedLatencyMs) return kMinPredictedLatencyMs;
  return out;
}

std::string dataset_to_csv(const std::vector<LatencySample>& data) {
  std::ostringstream os;
  os << "# format: " << kFormatTag << "\n";
  os << "l,d,h_bar,D_bar,device,latency_ms\n";
  for (const auto& s : data) {
    os << format_double(s.features.layers) << ',' << format_double(s.features.embed_dim) << ','
       << format_double(s.features.mean_heads) << ',' << format_double(s.features.mean_mlp_dim)
       << ',' << s.device << ',' << format_double(s.latency_ms) << '\n';
  }
  return os.str();
}

std::vector<LatencySample> dataset_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  bool tag_seen = false;
  std::vector<LatencySample> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.find(kFormatTag) != std::string::npos) tag_seen = true;
      continue;
    }
    if (!header_seen) {
      if (line != "l,d,h_bar,D_bar,device,latency_ms") throw FormatError("unexpected dataset header");
      header_seen = true;
      continue;
    }
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw FormatError("dataset row must have 6 fields: " + line);
    LatencySample s;
    s.features = {std::stod(cells[0]), std::stod(cells[1]), std::stod(cells[2]), std::stod(cells[3])};
    s.device = cells[4];
    s.latency_ms = std::stod(cells[5]);
    out.push_back(std::move(s));
  }
  if (!tag_seen) throw FormatError("dataset is missing the format tag");
  return out;
}

namespace {

void write_matrix(std::ostringstream& os, const char* name, const Eigen::MatrixXd& m) {
  os << name << ' ' << m.rows() << ' ' << m.cols();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << ' ' << format_double(m(i, j));
  os << '\n';
}

Eigen::MatrixXd read_matrix(std::istringstream& in, const char* name) {
  std::string key;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  if (!(in >> key >> rows >> cols) || key != name || rows < 0 || cols < 0) {
    throw FormatError(std::string("predictor file: expected matrix ") + name);
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      std::string tok;
      if (!(in >> tok)) throw FormatError("predictor file truncated");
      m(i, j) = std::stod(tok);
    }
  }
  return m;
}

}  // namespace

std::string predictor_to_text(const PredictorModel& m) {
  std::ostringstream os;
  os << kFormatTag << " predictor\n";
  os << "log_space " << (m.log_space ? 1 : 0) << '\n';
  os << "feature_mean";
  for (double v : m.feature_mean) os << ' ' << format_double(v);
  os << "\nfeature_scale";
  for (double v : m.feature_scale) os << ' ' << format_double(v);
  os << "\ntarget " << format_double(m.target_mean) << ' ' << format_double(m.target_scale) << '\n';
  write_matrix(os, "w1", m.w1);
  write_matrix(os, "b1", m.b1);
  write_matrix(os, "w2", m.w2);
  write_matrix(os, "b2", m.b2);
  write_matrix(os, "w3", m.w3);
  write_matrix(os, "b3", m.b3);
  return os.str();
}

PredictorModel predictor_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  std::string kind;
  if (!(in >> tag >> kind) || tag != kFormatTag || kind != "predictor") {
    throw FormatError("predictor file has a missing or unsupported format tag");
  }
  PredictorModel m;
  std::string key;
  int log_flag = 0;
  if (!(in >> key >> log_flag) || key != "log_space") throw FormatError("predictor file: log_space");
  m.log_space = log_flag != 0;
  auto read_array = [&in](const char* name, std::array<double, 4>& arr) {
    std::string k;
    if (!(in >> k) || k != name) throw FormatError(std::string("predictor file: expected ") + name);
    for (auto& v : arr) {
      std::string tok;
      if (!(in >> tok)) throw FormatError("predictor file truncated");
      v = std::stod(tok);
    }
  };
  read_array("feature_mean", m.feature_mean);
  read_array("feature_scale", m.feature_scale);
  std::string mean_tok;
  std::string scale_tok;
  if (!(in >> key >> mean_tok >> scale_tok) || key != "target") throw FormatError("predictor file: target");
  m.target_mean = std::stod(mean_tok);
  m.target_scale = std::stod(scale_tok);
  m.w1 = read_matrix(in, "w1");
  m.b1 = read_matrix(in, "b1");
  m.w2 = read_matrix(in, "w2");
  m.b2 = read_matrix(in, "b2");
  m.w3 = read_matrix(in, "w3");
  m.b3 = read_matrix(in, "b3");
  m.check_shapes();
  return m;
}

}  // namespace edgeplan
