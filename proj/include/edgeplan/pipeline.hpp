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

#ifndef EDGEPLAN_PIPELINE_HPP_
#define EDGEPLAN_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace edgeplan {

// Inputs shared by the CLI commands. Paths are resolved relative to the
// working directory; artifacts go under `out`.
struct RunConfig {
  std::filesystem::path fleet;
  std::filesystem::path transformer;
  std::filesystem::path out = "run";
  std::uint64_t seed = 0;

  // profile / train-predictor
  std::size_t samples = 5000;
  std::size_t hidden = 64;
  std::size_t epochs = 150;
  double learning_rate = 3e-2;

  // optimize
  std::size_t r = 10;
  std::size_t iters = 40;
  double delta = 0.005;
  std::size_t pool = 256;

  // simulate / boost
  std::optional<std::string> mode;
  std::optional<std::filesystem::path> policy;
  std::size_t boost_epochs = 300;
  std::size_t teacher_width = 64;

  void validate() const;  // throws ConfigError
};

// Each command writes its artifacts and returns the main output path.
std::filesystem::path cmd_profile(const RunConfig& config);
std::filesystem::path cmd_train_predictor(const RunConfig& config);
std::filesystem::path cmd_optimize(const RunConfig& config);
std::filesystem::path cmd_simulate(const RunConfig& config);
std::filesystem::path cmd_boost(const RunConfig& config);
std::filesystem::path cmd_report(const RunConfig& config);

// profile -> train-predictor -> optimize -> simulate -> boost -> report.
std::filesystem::path cmd_all(const RunConfig& config);

}  // namespace edgeplan

#endif  // EDGEPLAN_PIPELINE_HPP_
