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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "edgeplan/booster.hpp"
#include "edgeplan/errors.hpp"
#include "edgeplan/evaluator.hpp"

namespace edgeplan {
namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

TEST(Weights, InitialisedUniform) {
  const auto w = init_weights(4);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_EQ(w(i), 0.25);
  EXPECT_NEAR(init_weights(7).sum(), 1.0, 1e-15);
  EXPECT_EQ(init_weights(1)(0), 1.0);
}

TEST(Weights, EqualLossesLeaveWeightsUnchanged) {
  const auto w = vec({0.1, 0.2, 0.3, 0.4});
  const auto same = update_weights(w, vec({0.7, 0.7, 0.7, 0.7}));
  const auto zero = update_weights(w, vec({0.0, 0.0, 0.0, 0.0}));
  for (Eigen::Index i = 0; i < 4; ++i) {
    EXPECT_NEAR(same(i), w(i), 1e-15);
    EXPECT_NEAR(zero(i), w(i), 1e-15);
  }
}

TEST(Weights, TwoSampleWorkedExample) {
  const auto w = update_weights(init_weights(2), vec({0.0, 1.0}));
  const double f = std::exp(-0.5);  // (1/M - 1) * 1 with M = 2
  EXPECT_NEAR(w(0), 1.0 / (1.0 + f), 1e-12);
  EXPECT_NEAR(w(1), f / (1.0 + f), 1e-12);
  EXPECT_NEAR(w(0), 0.6225, 1e-4);
  EXPECT_NEAR(w(1), 0.3775, 1e-4);
}

TEST(Weights, RandomUpdatesStayOnTheSimplex) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> loss(0.0, 20.0);
  Eigen::VectorXd w = init_weights(50);
  for (int it = 0; it < 1000; ++it) {
    Eigen::VectorXd l(50);
    for (Eigen::Index i = 0; i < 50; ++i) l(i) = loss(rng);
    const Eigen::VectorXd next = update_weights(w, l, it % 2 == 1);
    EXPECT_GT(next.minCoeff(), 0.0);
    EXPECT_TRUE(next.allFinite());
    EXPECT_NEAR(next.sum(), 1.0, 1e-12);
    w = next;
  }
}

TEST(Weights, HigherLossIsDownWeighted) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.05, 1.0), loss(0.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd w(6), l(6);
    for (Eigen::Index i = 0; i < 6; ++i) {
      w(i) = u(rng);
      l(i) = loss(rng);
    }
    w /= w.sum();
    const auto next = update_weights(w, l);
    const auto flipped = update_weights(w, l, true);
    for (Eigen::Index i = 0; i < 6; ++i) {
      for (Eigen::Index j = 0; j < 6; ++j) {
        if (l(i) > l(j)) {
          EXPECT_LT(next(i) / next(j), w(i) / w(j));
          EXPECT_GT(flipped(i) / flipped(j), w(i) / w(j));
        }
      }
    }
  }
}

TEST(Weights, LengthMismatch) { EXPECT_THROW(update_weights(init_weights(3), vec({1.0, 2.0})), ShapeMismatch); }

TEST(Weights, EntropyOfUniform) { EXPECT_NEAR(weight_entropy(init_weights(8)), std::log(8.0), 1e-12); }

TEST(Distillation, UniformLogitsTwoClasses) {
  EXPECT_NEAR(distill_loss(vec({0.0, 0.0}), 0, vec({2.0, -1.0}), 1.0), std::log(2.0), 1e-9);
  EXPECT_NEAR(distill_loss(vec({0.0, 0.0}), 0, vec({2.0, -1.0}), 1.0), 0.6931, 1e-4);
}

TEST(Distillation, ConfidentCorrectStudent) {
  EXPECT_NEAR(distill_loss(vec({50.0, 0.0, 0.0}), 0, vec({3.0, 1.0, 0.0}), 1.0), 0.0, 1e-12);
}

TEST(Distillation, LabelAndTeacherDisagree) {
  // Student uniform over 3 classes: each CE term is ln 3 regardless of target.
  EXPECT_NEAR(distill_loss(vec({1.0, 1.0, 1.0}), 0, vec({0.0, 4.0, 0.0}), 1.0), std::log(3.0), 1e-12);
  // Confident on the label but the teacher says class 1: only the teacher term counts.
  const double half = 0.5 * -std::log(std::exp(0.0) / (std::exp(30.0) + 2.0));
  EXPECT_NEAR(distill_loss(vec({30.0, 0.0, 0.0}), 0, vec({0.0, 4.0, 0.0}), 1.0), half, 1e-9);
}

TEST(Distillation, LinearInWeight) {
  const auto s = vec({0.3, -1.2, 0.8});
  const auto t = vec({1.0, 0.0, 2.0});
  EXPECT_NEAR(distill_loss(s, 1, t, 2.0), 2.0 * distill_loss(s, 1, t, 1.0), 1e-12);
}

TEST(Distillation, ShiftInvariant) {
  const auto s = vec({0.3, -1.2, 0.8});
  const auto t = vec({1.0, 0.0, 2.0});
  const Eigen::VectorXd shifted = s.array() + 123.0;
  EXPECT_NEAR(distill_loss(shifted, 1, t, 0.7), distill_loss(s, 1, t, 0.7), 1e-10);
}

TEST(Distillation, StableForHugeLogits) {
  EXPECT_TRUE(std::isfinite(distill_loss(vec({1e4, -1e4, 0.0}), 1, vec({0.0, 1.0, 0.0}), 1.0)));
}

TEST(Distillation, LogitGradientMatchesCentralDifferences) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01(0.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd s(4), t(4);
    for (Eigen::Index i = 0; i < 4; ++i) {
      s(i) = n01(rng);
      t(i) = n01(rng);
    }
    const int y = trial % 4;
    const double w = 0.3 + 0.01 * trial;
    const auto g = distill_loss_gradient(s, y, t, w);
    for (Eigen::Index i = 0; i < 4; ++i) {
      const double eps = 1e-6;
      Eigen::VectorXd up = s, down = s;
      up(i) += eps;
      down(i) -= eps;
      const double numeric = (distill_loss(up, y, t, w) - distill_loss(down, y, t, w)) / (2 * eps);
      const double scale = std::max({std::abs(numeric), std::abs(g(i)), 1e-6});
      EXPECT_LE(std::abs(numeric - g(i)) / scale, 1e-4);
    }
  }
}

TEST(Distillation, ParameterGradientMatchesCentralDifferences) {
  std::mt19937_64 rng(4);
  auto model = ToyClassifier::init(2, 6, 3, rng);
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::MatrixXd x(2, 15);
  std::vector<int> y(15), t(15);
  Eigen::VectorXd w(15);
  for (Eigen::Index c = 0; c < 15; ++c) {
    x(0, c) = n01(rng);
    x(1, c) = n01(rng);
    y[static_cast<std::size_t>(c)] = static_cast<int>(c % 3);
    t[static_cast<std::size_t>(c)] = static_cast<int>((c + 1) % 3);
    w(c) = 0.5 + 0.1 * static_cast<double>(c % 4);
  }
  ClassifierGradients g;
  weighted_distill_objective(model, x, y, t, w, &g);
  auto check = [&](auto& param, const auto& grad) {
    for (Eigen::Index i = 0; i < param.size(); ++i) {
      const double eps = 1e-6;
      const double keep = param.data()[i];
      param.data()[i] = keep + eps;
      const double up = weighted_distill_objective(model, x, y, t, w, nullptr);
      param.data()[i] = keep - eps;
      const double down = weighted_distill_objective(model, x, y, t, w, nullptr);
      param.data()[i] = keep;
      const double numeric = (up - down) / (2 * eps);
      const double scale = std::max({std::abs(numeric), std::abs(grad.data()[i]), 1e-6});
      EXPECT_LE(std::abs(numeric - grad.data()[i]) / scale, 1e-4);
    }
  };
  check(model.w1, g.w1);
  check(model.b1, g.b1);
  check(model.w2, g.w2);
  check(model.b2, g.b2);
}

TEST(Distillation, BatchObjectiveIsSumOfPerSampleLosses) {
  std::mt19937_64 rng(5);
  const auto model = ToyClassifier::init(2, 5, 3, rng);
  const auto data = make_gaussian_clusters(ClusterOptions{30, 3, 2.0, 1.0, 0.2}, 1);
  const auto teacher_hard = model.predict(data.train_x);
  Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(data.train_size()), 0.1, 2.0);
  const Eigen::MatrixXd z = model.logits(data.train_x);
  double sum = 0.0;
  for (std::size_t i = 0; i < data.train_size(); ++i) {
    Eigen::VectorXd teacher = Eigen::VectorXd::Zero(3);
    teacher(teacher_hard[i]) = 1.0;
    sum += distill_loss(z.col(static_cast<Eigen::Index>(i)), data.train_y[i], teacher, w(static_cast<Eigen::Index>(i)));
  }
  EXPECT_NEAR(weighted_distill_objective(model, data.train_x, data.train_y, teacher_hard, w, nullptr), sum, 1e-10);
}

TEST(Teacher, SeparableBlobs) {
  ClusterOptions opt;
  opt.classes = 2;
  opt.radius = 3.0;
  opt.stddev = 0.6;
  const auto data = make_gaussian_clusters(opt, 7);
  const auto teacher = train_teacher(data, 64, 300, 0.5, 1);
  EXPECT_GE(accuracy(teacher, data.val_x, data.val_y), 0.95);
}

TEST(Teacher, DeterministicAndZeroEpochs) {
  const auto data = make_gaussian_clusters(ClusterOptions{}, 2);
  const auto a = train_teacher(data, 16, 20, 0.5, 9);
  const auto b = train_teacher(data, 16, 20, 0.5, 9);
  EXPECT_EQ(a.w1, b.w1);
  EXPECT_EQ(a.w2, b.w2);
  std::mt19937_64 rng(9);
  const auto init = ToyClassifier::init(2, 16, 3, rng);
  const auto none = train_teacher(data, 16, 0, 0.5, 9);
  EXPECT_EQ(none.w1, init.w1);
  EXPECT_EQ(none.b2, init.b2);
}

TEST(Teacher, SliceKeepsLeadingUnits) {
  std::mt19937_64 rng(1);
  const auto m = ToyClassifier::init(2, 10, 3, rng);
  const auto s = m.slice(4);
  EXPECT_EQ(s.width(), 4u);
  EXPECT_EQ(s.w1, m.w1.topRows(4));
  EXPECT_EQ(s.w2, m.w2.leftCols(4));
  EXPECT_EQ(s.b2, m.b2);
}

TEST(Calibration, SingleModelIsUniformWeightDistillation) {
  const auto data = make_gaussian_clusters(ClusterOptions{}, 3);
  const auto teacher = train_teacher(data, 32, 200, 0.5, 3);
  CalibrationOptions opt;
  opt.epochs = 40;
  const auto cal = calibrate_sequence(teacher, {teacher.slice(8)}, data, opt);

  auto student = teacher.slice(8);
  const auto hard = teacher.predict(data.train_x);
  const auto w = init_weights(data.train_size());
  ClassifierGradients g;
  for (std::size_t e = 0; e < opt.epochs; ++e) {
    weighted_distill_objective(student, data.train_x, data.train_y, hard, w, &g);
    student.w1 -= opt.learning_rate * g.w1;
    student.b1 -= opt.learning_rate * g.b1;
    student.w2 -= opt.learning_rate * g.w2;
    student.b2 -= opt.learning_rate * g.b2;
  }
  EXPECT_EQ(cal.weights.front(), w);
  EXPECT_EQ(cal.models[0].w1, student.w1);
  EXPECT_EQ(cal.models[0].w2, student.w2);
}

TEST(Calibration, WeightsStayOnTheSimplex) {
  const auto data = make_gaussian_clusters(ClusterOptions{}, 4);
  const auto teacher = train_teacher(data, 64, 200, 0.5, 4);
  const auto cal = calibrate_sequence(teacher, {teacher.slice(8), teacher.slice(16), teacher.slice(24)}, data,
                                      CalibrationOptions{});
  ASSERT_EQ(cal.weights.size(), 4u);
  for (const auto& w : cal.weights) {
    EXPECT_GT(w.minCoeff(), 0.0);
    EXPECT_NEAR(w.sum(), 1.0, 1e-12);
  }
  ASSERT_EQ(cal.steps.size(), 3u);
  EXPECT_EQ(cal.steps[2].width, 24u);
  const auto csv = calibration_report_csv(cal);
  EXPECT_EQ(csv.rfind("# format: edgeplan/1\n", 0), 0u);
}

TEST(Calibration, BeatsHardLabelTrainingOnMostSeeds) {
  const std::size_t widths[] = {8, 16, 24};
  int wins[3] = {0, 0, 0};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto data = make_gaussian_clusters(ClusterOptions{}, 1000 + seed);
    const auto teacher = train_teacher(data, 64, 600, 0.5, 2000 + seed);
    std::vector<ToyClassifier> subs;
    for (auto w : widths) subs.push_back(teacher.slice(w));
    const CalibrationOptions opt;
    const auto cal = calibrate_sequence(teacher, subs, data, opt);
    for (std::size_t j = 0; j < 3; ++j) {
      const auto hard = train_hard_labels(subs[j], data, opt.epochs, opt.learning_rate);
      wins[j] += accuracy(cal.models[j], data.val_x, data.val_y) >= accuracy(hard, data.val_x, data.val_y) ? 1 : 0;
    }
  }
  for (int j = 0; j < 3; ++j) EXPECT_GE(wins[j], 6) << "sub-model " << j;
}

TEST(Calibration, ToyOracleMatchesCalibrationReport) {
  const auto data = make_gaussian_clusters(ClusterOptions{}, 5);
  const auto teacher = train_teacher(data, 64, 200, 0.5, 5);
  CalibrationOptions opt;
  opt.epochs = 50;
  const ToyDegradationOracle oracle(teacher, data, opt);
  TransformerConfig base;
  const DecompositionPolicy policy{{SubModelConfig::uniform(4, 96, 2, 512), SubModelConfig::uniform(4, 192, 3, 512),
                                    SubModelConfig::uniform(4, 288, 4, 512)}};
  const auto widths = oracle.widths_for(policy, base);
  EXPECT_EQ(widths, (std::vector<std::size_t>{8, 16, 24}));
  std::vector<ToyClassifier> subs;
  for (auto w : widths) subs.push_back(teacher.slice(w));
  const auto cal = calibrate_sequence(teacher, subs, data, opt);
  EXPECT_EQ(oracle.sub_model_losses(policy, base), cal.val_losses());
  EXPECT_DOUBLE_EQ(degradation(policy, base, oracle), cal.mean_val_loss());
}

TEST(Data, ClustersAreBalancedAndSplit) {
  const auto data = make_gaussian_clusters(ClusterOptions{}, 6);
  EXPECT_EQ(data.train_size(), 480u);
  EXPECT_EQ(data.val_y.size(), 120u);
  std::vector<int> counts(3, 0);
  for (int y : data.train_y) counts[static_cast<std::size_t>(y)]++;
  for (int y : data.val_y) counts[static_cast<std::size_t>(y)]++;
  for (int c : counts) EXPECT_EQ(c, 200);
}

}  // namespace
}  // namespace edgeplan
