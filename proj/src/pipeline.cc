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

#include "edgeplan/pipeline.hpp"

#include <cctype>
#include <map>
#include <random>
#include <sstream>
#include <vector>

#include "edgeplan/aggregator.hpp"
#include "edgeplan/bo_engine.hpp"
#include "edgeplan/booster.hpp"
#include "edgeplan/config_io.hpp"
#include "edgeplan/errors.hpp"
#include "edgeplan/evaluator.hpp"
#include "edgeplan/latency_oracle.hpp"
#include "edgeplan/simulator.hpp"

namespace edgeplan {

namespace fs = std::filesystem;

void RunConfig::validate() const {
  if (fleet.empty()) throw ConfigError("--fleet is required");
  if (transformer.empty()) throw ConfigError("--transformer is required");
  if (!fs::exists(fleet)) throw MissingArtifact("fleet config not found: " + fleet.string());
  if (!fs::exists(transformer)) throw MissingArtifact("transformer config not found: " + transformer.string());
  if (samples < 100) throw ConfigError("--samples must be at least 100");
  if (hidden == 0) throw ConfigError("--hidden must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("--lr must be positive");
  if (r < 2) throw ConfigError("--r must be at least 2");
  if (!(delta >= 0.0)) throw ConfigError("--delta must be non-negative");
  if (pool == 0) throw ConfigError("--pool must be positive");
  if (teacher_width < 2) throw ConfigError("--teacher-width must be at least 2");
  if (mode) mode_from_string(*mode);
}

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string file_stem(const std::string& name) {
  std::string out;
  for (char c : name) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return out;
}

fs::path profile_path(const RunConfig& c, const DeviceSpec& d) {
  return c.out / "profile" / (file_stem(d.name) + ".csv");
}
fs::path predictor_path(const RunConfig& c, const DeviceSpec& d) {
  return c.out / "predictors" / (file_stem(d.name) + ".txt");
}
fs::path policy_path(const RunConfig& c) { return c.policy ? *c.policy : c.out / "policy.json"; }

std::string format_header() { return std::string("# format: ") + kFormatTag + "\n"; }

void require_tag(const fs::path& path, const std::string& text) {
  if (text.rfind(format_header(), 0) != 0) {
    throw FormatError(path.string() + ": missing or mismatched format tag (want " + kFormatTag + ")");
  }
}

struct Inputs {
  DeviceFleet fleet;
  TransformerConfig base;
};

Inputs load_inputs(const RunConfig& c) {
  c.validate();
  Inputs in{load_fleet(c.fleet), load_transformer(c.transformer)};
  check_fleet_feasible(in.base, in.fleet);
  return in;
}

std::map<std::string, PredictorModel> load_predictors(const RunConfig& c, const DeviceFleet& fleet) {
  std::map<std::string, PredictorModel> out;
  for (const auto& d : fleet.devices) {
    const auto path = predictor_path(c, d);
    if (!fs::exists(path)) throw MissingArtifact("no predictor for '" + d.name + "' (run train-predictor)");
    out.emplace(d.name, predictor_from_text(read_text_file(path)));
  }
  return out;
}

ToyDataset boost_data(const RunConfig& c) { return make_gaussian_clusters(ClusterOptions{}, derive_seed(c.seed, 40)); }

}  // namespace

fs::path cmd_profile(const RunConfig& c) {
  const auto in = load_inputs(c);
  for (std::size_t i = 0; i < in.fleet.size(); ++i) {
    const auto& d = in.fleet.devices[i];
    const auto data = collect_dataset(d, in.base, c.samples, derive_seed(c.seed, 10 + i));
    write_text_file(profile_path(c, d), dataset_to_csv(data));
  }
  return c.out / "profile";
}

fs::path cmd_train_predictor(const RunConfig& c) {
  const auto in = load_inputs(c);
  std::ostringstream report;
  report << format_header() << "device,samples,train_rmse_ms,heldout_rmse_ms,heldout_mean_ms,relative_rmse\n";
  for (std::size_t i = 0; i < in.fleet.size(); ++i) {
    const auto& d = in.fleet.devices[i];
    const auto path = profile_path(c, d);
    if (!fs::exists(path)) throw MissingArtifact("no profile for '" + d.name + "' (run profile)");
    const auto data = dataset_from_csv(read_text_file(path));
    TrainOptions opt;
    opt.hidden = c.hidden;
    opt.epochs = c.epochs;
    opt.learning_rate = c.learning_rate;
    opt.log_space = true;
    opt.seed = derive_seed(c.seed, 20 + i);
    const auto res = train_predictor(data, opt);
    write_text_file(predictor_path(c, d), predictor_to_text(res.model));
    report << d.name << ',' << data.size() << ',' << format_double(res.train_rmse_ms) << ','
           << format_double(res.heldout_rmse_ms) << ',' << format_double(res.heldout_mean_latency_ms) << ','
           << format_double(res.heldout_rmse_ms / res.heldout_mean_latency_ms) << '\n';
  }
  const auto out = c.out / "predictor_report.csv";
  write_text_file(out, report.str());
  return out;
}

fs::path cmd_optimize(const RunConfig& c) {
  const auto in = load_inputs(c);
  const PredictorLatencyModel latency(in.fleet, load_predictors(c, in.fleet));
  const SyntheticDegradation oracle;
  SearchOptions opt;
  opt.initial_policies = c.r;
  opt.iterations = c.iters;
  opt.delta = c.delta;
  opt.seed = derive_seed(c.seed, 30);
  opt.proposal.pool_size = c.pool;
  const auto res = debo_search(in.base, in.fleet, latency, oracle, opt);
  const auto report = validate_policy(res.best, in.base, in.fleet);
  if (!report.satisfied) throw InfeasiblePolicy("search returned an infeasible policy", report);
  save_policy(c.out / "policy.json", res.best);
  write_text_file(c.out / "bo_log.csv", run_log_to_csv(res.log));
  return c.out / "policy.json";
}

fs::path cmd_simulate(const RunConfig& c) {
  const auto in = load_inputs(c);
  const auto policy = load_policy(policy_path(c));
  const PredictorLatencyModel latency(in.fleet, load_predictors(c, in.fleet));
  const auto workload = workload_from_policy(in.base, policy, in.fleet, latency);
  std::vector<SimReport> reports;
  if (c.mode) {
    reports.push_back(simulate(workload, in.fleet, mode_from_string(*c.mode)));
  } else {
    reports = compare_modes(workload, in.fleet);
  }
  const auto dir = c.out / "simulation";
  for (const auto& r : reports) write_text_file(dir / ("timeline_" + to_string(r.mode) + ".csv"), timeline_to_csv(r));
  write_text_file(dir / "summary.csv", summary_to_csv(reports, in.fleet));
  return dir / "summary.csv";
}

fs::path cmd_boost(const RunConfig& c) {
  const auto in = load_inputs(c);
  const auto policy = load_policy(policy_path(c));
  const auto data = boost_data(c);
  const auto teacher = train_teacher(data, c.teacher_width, 2 * c.boost_epochs, 0.5, derive_seed(c.seed, 41));
  CalibrationOptions opt;
  opt.epochs = c.boost_epochs;
  const ToyDegradationOracle oracle(teacher, data, opt);
  std::vector<ToyClassifier> subs;
  for (auto w : oracle.widths_for(policy, in.base)) subs.push_back(teacher.slice(w));
  const auto cal = calibrate_sequence(teacher, subs, data, opt);

  const auto dir = c.out / "boost";
  write_text_file(dir / "calibration.csv", calibration_report_csv(cal));

  std::mt19937_64 rng(derive_seed(c.seed, 42));
  Eigen::Index d_agg = 0;
  for (const auto& m : cal.models) d_agg += static_cast<Eigen::Index>(m.width());
  const auto central = static_cast<Eigen::Index>(cal.models[in.fleet.central_index].width());
  auto module = AggregationModule::init(d_agg, central, data.num_classes, rng);
  module = train_aggregator(std::move(module), cal.models, data, c.boost_epochs, 0.1);

  std::ostringstream os;
  os << format_header() << "method,val_accuracy\n";
  for (std::size_t i = 0; i < cal.models.size(); ++i) {
    os << "sub_model_" << i << ',' << format_double(accuracy(cal.models[i], data.val_x, data.val_y)) << '\n';
  }
  os << "teacher," << format_double(accuracy(teacher, data.val_x, data.val_y)) << '\n';
  os << "average," << format_double(ensemble_average_accuracy(cal.models, data.val_x, data.val_y)) << '\n';
  os << "majority," << format_double(ensemble_majority_accuracy(cal.models, data.val_x, data.val_y)) << '\n';
  os << "aggregate," << format_double(aggregator_accuracy(module, cal.models, data.val_x, data.val_y)) << '\n';
  write_text_file(dir / "aggregation.csv", os.str());
  return dir / "calibration.csv";
}

fs::path cmd_report(const RunConfig& c) {
  const auto in = load_inputs(c);
  const std::vector<fs::path> tagged = {c.out / "predictor_report.csv", c.out / "bo_log.csv",
                                        c.out / "simulation" / "summary.csv", c.out / "boost" / "calibration.csv",
                                        c.out / "boost" / "aggregation.csv"};
  std::map<fs::path, std::string> text;
  for (const auto& p : tagged) {
    if (!fs::exists(p)) throw MissingArtifact("missing artifact " + p.string());
    text[p] = read_text_file(p);
    require_tag(p, text[p]);
  }
  const auto policy = load_policy(policy_path(c));
  const PredictorLatencyModel latency(in.fleet, load_predictors(c, in.fleet));
  const auto value = objective(policy, in.base, in.fleet, latency, SyntheticDegradation{}, c.delta);

  auto body = [](const std::string& t) { return t.substr(t.find('\n') + 1); };
  std::ostringstream os;
  os << format_header() << "section,key,value\n";
  os << "policy,sub_models," << policy.size() << '\n';
  os << "policy,end_to_end_ms," << format_double(value.latency_ms) << '\n';
  os << "policy,degradation," << format_double(value.degradation) << '\n';
  os << "policy,psi," << format_double(value.psi) << '\n';
  const auto log = run_log_from_csv(text[c.out / "bo_log.csv"]);
  for (const auto& rec : log) os << "psi_trajectory," << rec.iteration << ',' << format_double(rec.best_psi) << '\n';
  write_text_file(c.out / "report.csv", os.str());

  std::ostringstream traj;
  traj << format_header() << "iteration,psi,best_psi\n";
  for (const auto& rec : log) {
    traj << rec.iteration << ',' << format_double(rec.value.psi) << ',' << format_double(rec.best_psi) << '\n';
  }
  write_text_file(c.out / "psi_trajectory.csv", traj.str());

  std::ostringstream modes;
  modes << body(text[c.out / "simulation" / "summary.csv"]);
  write_text_file(c.out / "mode_comparison.csv", format_header() + modes.str());
  return c.out / "report.csv";
}

fs::path cmd_all(const RunConfig& c) {
  cmd_profile(c);
  cmd_train_predictor(c);
  cmd_optimize(c);
  cmd_simulate(c);
  cmd_boost(c);
  return cmd_report(c);
}

}  // namespace edgeplan
