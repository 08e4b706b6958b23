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

#include <exception>
#include <functional>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "edgeplan/errors.hpp"
#include "edgeplan/pipeline.hpp"

namespace {

std::string escape(std::string s) {
  for (auto& c : s) {
    if (c == '\n' || c == ',') c = ' ';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edgeplan: decompose a transformer across edge devices"};
  app.require_subcommand(1);

  edgeplan::RunConfig cfg;
  std::string mode;
  std::string policy;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--fleet", cfg.fleet, "fleet config (JSON)")->required();
    sub->add_option("--transformer", cfg.transformer, "transformer config (JSON)")->required();
    sub->add_option("--out", cfg.out, "output directory")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "random seed")->required();
  };
  auto training = [&](CLI::App* sub) {
    sub->add_option("--samples", cfg.samples, "profiled samples per device")->capture_default_str();
    sub->add_option("--hidden", cfg.hidden, "predictor hidden width")->capture_default_str();
    sub->add_option("--epochs", cfg.epochs, "predictor training epochs")->capture_default_str();
    sub->add_option("--lr", cfg.learning_rate, "predictor learning rate")->capture_default_str();
  };
  auto search = [&](CLI::App* sub) {
    sub->add_option("--r", cfg.r, "initial random policies")->capture_default_str();
    sub->add_option("--iters", cfg.iters, "search iterations")->capture_default_str();
    sub->add_option("--delta", cfg.delta, "latency weight in the objective")->capture_default_str();
    sub->add_option("--pool", cfg.pool, "random candidates per proposal")->capture_default_str();
  };
  auto downstream = [&](CLI::App* sub) {
    sub->add_option("--policy", policy, "policy file (default <out>/policy.json)");
    sub->add_option("--mode", mode, "aggregate-edge, pipe-edge, distri-edge or single-edge");
    sub->add_option("--boost-epochs", cfg.boost_epochs, "toy calibration epochs")->capture_default_str();
    sub->add_option("--teacher-width", cfg.teacher_width, "toy teacher hidden width")->capture_default_str();
  };

  std::function<void()> action;
  auto add = [&](const std::string& name, const std::string& help, auto fn, bool train, bool bo, bool down) {
    auto* sub = app.add_subcommand(name, help);
    common(sub);
    if (train) training(sub);
    if (bo) search(sub);
    if (down) downstream(sub);
    sub->callback([&action, fn] { action = [fn] { fn(); }; });
  };
  auto run = [&](edgeplan::RunConfig c, auto cmd) {
    if (!mode.empty()) c.mode = mode;
    if (!policy.empty()) c.policy = policy;
    std::cout << cmd(c).string() << '\n';
  };

  add("profile", "collect latency samples per device", [&] { run(cfg, edgeplan::cmd_profile); }, true, false, false);
  add("train-predictor", "fit per-device latency predictors", [&] { run(cfg, edgeplan::cmd_train_predictor); },
      true, false, false);
  add("optimize", "search for a decomposition policy", [&] { run(cfg, edgeplan::cmd_optimize); }, false, true,
      false);
  add("simulate", "simulate the scheduling modes", [&] { run(cfg, edgeplan::cmd_simulate); }, false, false, true);
  add("boost", "calibrate toy sub-models and the aggregator", [&] { run(cfg, edgeplan::cmd_boost); }, false,
      false, true);
  add("report", "consolidate run artifacts", [&] { run(cfg, edgeplan::cmd_report); }, false, false, true);
  add("all", "run every stage in order", [&] { run(cfg, edgeplan::cmd_all); }, true, true, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    if (action) action();
  } catch (const edgeplan::Error& e) {
    std::cerr << "error," << e.code() << ',' << escape(e.what()) << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error,Internal," << escape(e.what()) << '\n';
    return 3;
  }
  return 0;
}
