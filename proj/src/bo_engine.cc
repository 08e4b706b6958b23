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

#include "edgeplan/bo_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace edgeplan {

EncodedPolicy encode_policy(const DecompositionPolicy& policy, const TransformerConfig& base) {
  EncodedPolicy x(static_cast<Eigen::Index>(4 * policy.size()));
  Eigen::Index i = 0;
  for (const auto& sm : policy.sub_models) {
    x(i++) = static_cast<double>(sm.layers) / static_cast<double>(base.layers);
    x(i++) = static_cast<double>(sm.embed_dim) / static_cast<double>(base.embed_dim);
    x(i++) = sm.mean_heads() / static_cast<double>(base.heads);
    x(i++) = sm.mean_mlp_dim() / static_cast<double>(base.mlp_dim);
  }
  return x;
}

DecompositionPolicy decode_policy(const EncodedPolicy& x, const TransformerConfig& base) {
  if (x.size() % 4 != 0) throw InvalidConfig("encoded policy length must be a multiple of 4");
  auto to_int = [](double v, std::int64_t hi) {
    const auto r = static_cast<std::int64_t>(std::llround(std::clamp(v, 0.0, 1.0) * static_cast<double>(hi)));
    return std::clamp<std::int64_t>(r, 1, hi);
  };
  DecompositionPolicy policy;
  for (Eigen::Index n = 0; n < x.size() / 4; ++n) {
    policy.sub_models.push_back(SubModelConfig::uniform(
        to_int(x(4 * n), base.layers), to_int(x(4 * n + 1), base.embed_dim),
        to_int(x(4 * n + 2), base.heads), to_int(x(4 * n + 3), base.mlp_dim)));
  }
  return policy;
}

double matern_kernel(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2, double length_scale) {
  if (x1.size() != x2.size()) throw ShapeMismatch("kernel inputs have different lengths");
  const double r = std::sqrt(3.0) * (x1 - x2).norm() / length_scale;
  return (1.0 + r) * std::exp(-r);
}

std::size_t GPState::best_index() const {
  if (observations_.empty()) throw EmptyState("GP has no observations");
  return static_cast<std::size_t>(
      std::min_element(observations_.begin(), observations_.end()) - observations_.begin());
}

GPState gp_fit(GPOptions options, std::vector<Eigen::VectorXd> xs, std::vector<double> ys) {
  if (xs.size() != ys.size()) throw ShapeMismatch("GP inputs and observations differ in length");
  GPState state(options);
  state.inputs_ = std::move(xs);
  state.observations_ = std::move(ys);
  const auto n = static_cast<Eigen::Index>(state.inputs_.size());
  if (n == 0) return state;

  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = state.observations_[static_cast<std::size_t>(i)];
  if (options.standardize) {
    state.y_offset_ = y.mean();
    const double var = (y.array() - state.y_offset_).square().mean();
    state.y_scale_ = (n >= 2 && var > 0.0) ? std::sqrt(var) : 1.0;
  }
  const Eigen::VectorXd target = (y.array() - state.y_offset_) / state.y_scale_;

  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double k = matern_kernel(state.inputs_[static_cast<std::size_t>(i)],
                                     state.inputs_[static_cast<std::size_t>(j)], options.length_scale);
      gram(i, j) = k;
      gram(j, i) = k;
    }
  }
  gram.diagonal().array() += options.noise_variance;

  static constexpr double kJitterLadder[] = {0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4};
  for (double jitter : kJitterLadder) {
    Eigen::MatrixXd a = gram;
    a.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) continue;
    Eigen::MatrixXd lower = llt.matrixL();
    if ((lower.diagonal().array() <= 0.0).any() || !lower.allFinite()) continue;
    state.jitter_ = jitter;
    state.chol_lower_ = std::move(lower);
    state.alpha_ = llt.solve(target);
    return state;
  }
  throw NumericalFailure("Gram matrix is not positive definite even with 1e-4 jitter");
}

GPState gp_update(const GPState& state, const Eigen::VectorXd& x, double y) {
  if (!state.empty() && state.inputs().front().size() != x.size()) {
    throw ShapeMismatch("encoded policy length differs from earlier observations");
  }
  auto xs = state.inputs();
  auto ys = state.observations();
  xs.push_back(x);
  ys.push_back(y);
  return gp_fit(state.options(), std::move(xs), std::move(ys));
}

GPPrediction gp_predict(const GPState& state, const Eigen::VectorXd& x) {
  if (state.empty()) throw EmptyState("cannot predict from an empty GP");
  const auto n = static_cast<Eigen::Index>(state.size());
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i) = matern_kernel(x, state.inputs_[static_cast<std::size_t>(i)], state.options_.length_scale);
  }
  const Eigen::VectorXd v = state.chol_lower_.triangularView<Eigen::Lower>().solve(k);
  GPPrediction p;
  p.mean = state.y_offset_ + state.y_scale_ * k.dot(state.alpha_);
  const double prior = matern_kernel(x, x, state.options_.length_scale);
  p.variance = std::max(0.0, state.y_scale_ * state.y_scale_ * (prior - v.squaredNorm()));
  return p;
}

double expected_improvement(double mean, double sigma, double best) {
  const double gap = best - mean;
  if (!(sigma > 0.0)) return std::max(gap, 0.0);
  const double z = gap / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  return std::max(0.0, gap * cdf + sigma * pdf);
}

std::size_t select_by_ei(const GPState& state, const std::vector<EncodedPolicy>& candidates,
                         std::vector<double>* scores) {
  if (candidates.empty()) throw InvalidConfig("candidate pool is empty");
  const double best = state.observations()[state.best_index()];
  std::vector<double> ei(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto p = gp_predict(state, candidates[i]);
    ei[i] = expected_improvement(p.mean, std::sqrt(p.variance), best);
  }
  std::size_t arg = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (ei[i] > ei[arg]) {
      arg = i;
    } else if (ei[i] == ei[arg] &&
               std::lexicographical_compare(candidates[i].begin(), candidates[i].end(),
                                            candidates[arg].begin(), candidates[arg].end())) {
      arg = i;
    }
  }
  if (scores != nullptr) *scores = std::move(ei);
  return arg;
}

DecompositionPolicy propose_next(const GPState& state, const TransformerConfig& base,
                                 const DeviceFleet& fleet, const ProposalOptions& options,
                                 std::mt19937_64& rng) {
  if (state.empty()) throw EmptyState("propose_next needs at least one observation");
  std::vector<DecompositionPolicy> pool;
  pool.reserve(options.pool_size + options.perturbations);
  for (std::size_t i = 0; i < options.pool_size; ++i) pool.push_back(sample_policy(base, fleet, rng));

  const auto& incumbent = state.inputs()[state.best_index()];
  std::normal_distribution<double> noise(0.0, options.perturbation_sigma);
  const auto dh = base.head_dim();
  for (std::size_t i = 0; i < options.perturbations; ++i) {
    EncodedPolicy x = incumbent;
    for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = std::clamp(x(j) + noise(rng), 0.0, 1.0);
    auto candidate = decode_policy(x, base);
    for (auto& sm : candidate.sub_models) {
      const auto units = std::max<std::int64_t>(1, (sm.embed_dim + dh / 2) / dh);
      sm.embed_dim = units * dh;
    }
    if (auto repaired = repair_policy(std::move(candidate), base, fleet)) {
      pool.push_back(std::move(*repaired));
    }
  }
  if (pool.empty()) throw InvalidConfig("proposal pool is empty");

  std::vector<EncodedPolicy> encoded;
  encoded.reserve(pool.size());
  for (const auto& p : pool) encoded.push_back(encode_policy(p, base));
  return pool[select_by_ei(state, encoded)];
}

namespace {

void record(SearchResult& result, const DecompositionPolicy& policy, const ObjectiveValue& value,
            const TransformerConfig& base) {
  const bool improved = result.log.empty() || value.psi < result.best_value.psi;
  if (improved) {
    result.best = policy;
    result.best_value = value;
  }
  EvaluationRecord rec;
  rec.iteration = result.log.size();
  rec.encoding.resize(static_cast<std::size_t>(4 * policy.size()));
  const auto x = encode_policy(policy, base);
  std::copy(x.begin(), x.end(), rec.encoding.begin());
  rec.value = value;
  rec.best_psi = result.best_value.psi;
  result.log.push_back(std::move(rec));
  result.evaluated.push_back(policy);
}

}  // namespace

SearchResult debo_search(const TransformerConfig& base, const DeviceFleet& fleet,
                         const LatencyModel& latency, const DegradationOracle& oracle,
                         const SearchOptions& options) {
  if (options.initial_policies < 2) throw InvalidConfig("debo_search needs at least 2 initial policies");
  check_fleet_feasible(base, fleet);

  SearchResult result;
  std::mt19937_64 sampler(options.seed);
  std::vector<Eigen::VectorXd> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < options.initial_policies; ++i) {
    const auto policy = sample_policy(base, fleet, sampler);
    const auto value = objective(policy, base, fleet, latency, oracle, options.delta, options.latency);
    record(result, policy, value, base);
    xs.push_back(encode_policy(policy, base));
    ys.push_back(value.psi);
  }
  GPState gp = gp_fit(options.gp, std::move(xs), std::move(ys));

  std::mt19937_64 proposer(options.seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t it = 0; it < options.iterations; ++it) {
    const auto policy = propose_next(gp, base, fleet, options.proposal, proposer);
    const auto value = objective(policy, base, fleet, latency, oracle, options.delta, options.latency);
    record(result, policy, value, base);
    gp = gp_update(gp, encode_policy(policy, base), value.psi);
  }
  return result;
}

SearchResult random_search(const TransformerConfig& base, const DeviceFleet& fleet,
                           const LatencyModel& latency, const DegradationOracle& oracle,
                           std::size_t draws, double delta, std::uint64_t seed,
                           const LatencyParams& params) {
  if (draws == 0) throw InvalidConfig("random search needs at least one draw");
  SearchResult result;
  std::mt19937_64 sampler(seed);
  for (std::size_t i = 0; i < draws; ++i) {
    const auto policy = sample_policy(base, fleet, sampler);
    record(result, policy, objective(policy, base, fleet, latency, oracle, delta, params), base);
  }
  return result;
}

}  // namespace edgeplan
