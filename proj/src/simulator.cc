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

#include "edgeplan/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

#include "edgeplan/config_io.hpp"
#include "edgeplan/errors.hpp"

namespace edgeplan {

std::string to_string(ScheduleMode mode) {
  switch (mode) {
    case ScheduleMode::kAggregateEdge: return "aggregate-edge";
    case ScheduleMode::kPipeEdge: return "pipe-edge";
    case ScheduleMode::kDistriEdge: return "distri-edge";
    case ScheduleMode::kSingleEdge: return "single-edge";
  }
  return "unknown";
}

ScheduleMode mode_from_string(const std::string& name) {
  for (auto m : kAllModes) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown schedule mode '" + name + "'");
}

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::kCompute: return "compute";
    case Phase::kTransmit: return "transmit";
    case Phase::kAggregate: return "aggregate";
    case Phase::kIdle: return "idle";
  }
  return "unknown";
}

void Workload::validate(const DeviceFleet& fleet) const {
  const std::size_t n = fleet.size();
  if (n == 0) throw InvalidWorkload("empty fleet");
  if (fleet.central_index >= n) throw InvalidWorkload("central index outside the fleet");
  if (compute_ms.size() != n) throw InvalidWorkload("compute_ms needs one entry per device");
  if (transfer_bits.size() != n) throw InvalidWorkload("transfer_bits needs one entry per device");
  auto bad = [](double v) { return !std::isfinite(v) || v < 0.0; };
  for (std::size_t i = 0; i < n; ++i) {
    if (bad(compute_ms[i])) throw InvalidWorkload("compute_ms must be finite and non-negative");
    if (bad(transfer_bits[i])) throw InvalidWorkload("transfer_bits must be finite and non-negative");
  }
  if (bad(aggregate_ms) || bad(single_ms) || bad(sync_bits_per_layer)) {
    throw InvalidWorkload("workload times and sizes must be finite and non-negative");
  }
  if (layers == 0) throw InvalidWorkload("layers must be positive");
  if (single_device >= n) throw InvalidWorkload("single_device outside the fleet");
}

namespace {

struct Task {
  std::size_t owner = 0;
  std::size_t resource = 0;
  Phase phase = Phase::kCompute;
  double duration = 0.0;
  std::vector<std::size_t> deps;
  double start = 0.0;
  double end = 0.0;
  bool done = false;
};

// Deterministic list scheduler over a task DAG. Each resource serves one task
// at a time; among eligible tasks the one ready first (then lowest id) goes next.
class TaskGraph {
 public:
  explicit TaskGraph(std::size_t resources) : free_at_(resources, 0.0) {}

  std::size_t add(std::size_t owner, std::size_t resource, Phase phase, double duration,
                  std::vector<std::size_t> deps = {}) {
    Task t;
    t.owner = owner;
    t.resource = resource;
    t.phase = phase;
    t.duration = duration;
    t.deps = std::move(deps);
    tasks_.push_back(std::move(t));
    return tasks_.size() - 1;
  }

  void run() {
    std::size_t remaining = tasks_.size();
    while (remaining > 0) {
      std::size_t pick = tasks_.size();
      double pick_ready = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < tasks_.size(); ++i) {
        const Task& t = tasks_[i];
        if (t.done) continue;
        double ready = 0.0;
        bool eligible = true;
        for (auto d : t.deps) {
          if (!tasks_[d].done) {
            eligible = false;
            break;
          }
          ready = std::max(ready, tasks_[d].end);
        }
        if (eligible && ready < pick_ready) {
          pick = i;
          pick_ready = ready;
        }
      }
      if (pick == tasks_.size()) throw InvalidWorkload("task graph has a cycle");
      Task& t = tasks_[pick];
      t.start = std::max(pick_ready, free_at_[t.resource]);
      t.end = t.start + t.duration;
      free_at_[t.resource] = t.end;
      t.done = true;
      --remaining;
    }
  }

  const std::vector<Task>& tasks() const { return tasks_; }

 private:
  std::vector<Task> tasks_;
  std::vector<double> free_at_;
};

double union_length(std::vector<std::pair<double, double>> iv) {
  std::sort(iv.begin(), iv.end());
  double total = 0.0;
  double cur_s = 0.0;
  double cur_e = -1.0;
  bool open = false;
  for (const auto& [s, e] : iv) {
    if (e <= s) continue;
    if (!open || s > cur_e) {
      if (open) total += cur_e - cur_s;
      cur_s = s;
      cur_e = e;
      open = true;
    } else {
      cur_e = std::max(cur_e, e);
    }
  }
  if (open) total += cur_e - cur_s;
  return total;
}

std::vector<std::size_t> non_central(const DeviceFleet& fleet) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    if (i != fleet.central_index) out.push_back(i);
  }
  return out;
}

void build_aggregate_edge(TaskGraph& g, const Workload& w, const DeviceFleet& fleet, std::size_t ingress) {
  const std::size_t c = fleet.central_index;
  std::vector<std::size_t> arrivals;
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    const auto comp = g.add(i, i, Phase::kCompute, w.compute_ms[i]);
    if (i == c) {
      arrivals.push_back(comp);
      continue;
    }
    const double t2 = phase2_latency(w.transfer_bits[i], fleet.devices[i].bandwidth_bits_per_ms);
    arrivals.push_back(g.add(i, ingress == 0 ? i : ingress, Phase::kTransmit, t2, {comp}));
  }
  g.add(c, c, Phase::kAggregate, w.aggregate_ms, arrivals);
}

void build_pipe_edge(TaskGraph& g, const Workload& w, const DeviceFleet& fleet) {
  std::vector<std::size_t> order = non_central(fleet);
  order.push_back(fleet.central_index);
  std::vector<std::size_t> prev;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t dev = order[k];
    const auto comp = g.add(dev, dev, Phase::kCompute, w.compute_ms[dev], prev);
    if (k + 1 < order.size()) {
      const double t = phase2_latency(w.transfer_bits[dev], fleet.devices[dev].bandwidth_bits_per_ms);
      prev = {g.add(dev, dev, Phase::kTransmit, t, {comp})};
    } else {
      g.add(dev, dev, Phase::kAggregate, w.aggregate_ms, {comp});
    }
  }
}

void build_distri_edge(TaskGraph& g, const Workload& w, const DeviceFleet& fleet, std::size_t ingress) {
  const std::size_t c = fleet.central_index;
  const auto others = non_central(fleet);
  double broadcast = 0.0;
  for (auto i : others) {
    broadcast = std::max(broadcast, phase2_latency(w.sync_bits_per_layer, fleet.devices[i].bandwidth_bits_per_ms));
  }
  const double rounds = static_cast<double>(w.layers);
  std::vector<std::size_t> barrier;
  for (std::size_t r = 0; r < w.layers; ++r) {
    std::vector<std::size_t> gathered;
    for (std::size_t i = 0; i < fleet.size(); ++i) {
      const auto comp = g.add(i, i, Phase::kCompute, w.compute_ms[i] / rounds, barrier);
      if (i == c) {
        gathered.push_back(comp);
      } else {
        const double t = phase2_latency(w.sync_bits_per_layer, fleet.devices[i].bandwidth_bits_per_ms);
        gathered.push_back(g.add(i, ingress == 0 ? i : ingress, Phase::kTransmit, t, {comp}));
      }
    }
    barrier = {g.add(c, c, Phase::kTransmit, broadcast, gathered)};
  }
  g.add(c, c, Phase::kAggregate, w.aggregate_ms, barrier);
}

}  // namespace

SimReport simulate(const Workload& workload, const DeviceFleet& fleet, ScheduleMode mode, const SimParams& params) {
  workload.validate(fleet);
  const std::size_t n = fleet.size();
  // Resource ids: 0..n-1 are the devices, n is the shared ingress. Id 0 as an
  // ingress argument means "dedicated links".
  TaskGraph graph(n + 1);
  const std::size_t ingress = params.serialize_ingress ? n : 0;
  switch (mode) {
    case ScheduleMode::kAggregateEdge: build_aggregate_edge(graph, workload, fleet, ingress); break;
    case ScheduleMode::kPipeEdge: build_pipe_edge(graph, workload, fleet); break;
    case ScheduleMode::kDistriEdge: build_distri_edge(graph, workload, fleet, ingress); break;
    case ScheduleMode::kSingleEdge:
      graph.add(workload.single_device, workload.single_device, Phase::kCompute, workload.single_ms);
      break;
  }
  graph.run();

  SimReport rep;
  rep.mode = mode;
  rep.busy_ms.assign(n, 0.0);
  rep.idle_ms.assign(n, 0.0);
  rep.transmit_ms.assign(n, 0.0);
  rep.participating.assign(n, mode != ScheduleMode::kSingleEdge);
  if (mode == ScheduleMode::kSingleEdge) rep.participating[workload.single_device] = true;

  std::vector<std::vector<TimelineEvent>> per_device(n);
  std::vector<std::pair<double, double>> busy_iv;
  std::vector<std::pair<double, double>> wire_iv;
  for (const auto& t : graph.tasks()) {
    rep.end_to_end_ms = std::max(rep.end_to_end_ms, t.end);
    if (t.duration <= 0.0) continue;
    per_device[t.owner].push_back({t.owner, t.phase, t.start, t.end});
    if (t.phase == Phase::kTransmit) {
      rep.transmit_ms[t.owner] += t.duration;
      wire_iv.emplace_back(t.start, t.end);
    } else {
      rep.busy_ms[t.owner] += t.duration;
      busy_iv.emplace_back(t.start, t.end);
    }
  }

  const double end = rep.end_to_end_ms;
  double idle_total = 0.0;
  double device_time = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!rep.participating[i]) continue;
    auto& ev = per_device[i];
    std::sort(ev.begin(), ev.end(), [](const TimelineEvent& a, const TimelineEvent& b) { return a.start_ms < b.start_ms; });
    double cursor = 0.0;
    for (const auto& e : ev) {
      if (e.start_ms > cursor) rep.timeline.push_back({i, Phase::kIdle, cursor, e.start_ms});
      rep.timeline.push_back(e);
      cursor = e.end_ms;
    }
    if (end > cursor) rep.timeline.push_back({i, Phase::kIdle, cursor, end});
    rep.idle_ms[i] = end - rep.busy_ms[i];
    idle_total += rep.idle_ms[i];
    device_time += end;
  }
  if (end > 0.0) {
    std::vector<std::pair<double, double>> all = busy_iv;
    all.insert(all.end(), wire_iv.begin(), wire_iv.end());
    const double wire_only = union_length(all) - union_length(busy_iv);
    rep.transmission_fraction = std::clamp(wire_only / end, 0.0, 1.0);
  }
  rep.idle_share = device_time > 0.0 ? idle_total / device_time : 0.0;
  rep.total_energy_mj = energy(rep, fleet, &rep.energy_mj);
  return rep;
}

double energy(const SimReport& report, const DeviceFleet& fleet, std::vector<double>* per_device) {
  const std::size_t n = std::min(fleet.size(), report.busy_ms.size());
  std::vector<double> mj(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& d = fleet.devices[i];
    mj[i] = (report.busy_ms[i] * d.busy_power_mw + report.idle_ms[i] * d.idle_power_mw) * 1e-3;
    total += mj[i];
  }
  if (per_device != nullptr) *per_device = std::move(mj);
  return total;
}

std::vector<SimReport> compare_modes(const Workload& workload, const DeviceFleet& fleet, const SimParams& params) {
  std::vector<SimReport> out;
  for (auto m : kAllModes) out.push_back(simulate(workload, fleet, m, params));
  return out;
}

Workload workload_from_policy(const TransformerConfig& base, const DecompositionPolicy& policy,
                              const DeviceFleet& fleet, const LatencyModel& latency,
                              const WorkloadOptions& options) {
  const auto br = latency_breakdown(policy, base, fleet, latency, options.latency);
  Workload w;
  w.compute_ms = br.compute_ms;
  for (const auto& cfg : policy.sub_models) w.transfer_bits.push_back(feature_bits(base, cfg, options.latency));
  w.aggregate_ms = br.aggregate_ms;
  w.layers = static_cast<std::size_t>(base.layers);
  w.sync_bits_per_layer =
      static_cast<double>(base.seq_len) * static_cast<double>(base.embed_dim) * options.latency.bits_per_value;
  if (options.single_device) {
    w.single_device = *options.single_device;
  } else {
    for (std::size_t i = 1; i < fleet.size(); ++i) {
      if (fleet.devices[i].compute_flops_per_ms < fleet.devices[w.single_device].compute_flops_per_ms) {
        w.single_device = i;
      }
    }
  }
  w.single_ms = latency.phase1_ms(w.single_device, full_model(base));
  return w;
}

std::string timeline_to_csv(const SimReport& report) {
  std::ostringstream os;
  os << "# format: " << kFormatTag << "\n";
  os << "device,phase,start_ms,end_ms\n";
  for (const auto& e : report.timeline) {
    os << e.device << ',' << to_string(e.phase) << ',' << format_double(e.start_ms) << ','
       << format_double(e.end_ms) << '\n';
  }
  return os.str();
}

std::string summary_to_csv(const std::vector<SimReport>& reports, const DeviceFleet& fleet) {
  std::ostringstream os;
  os << "# format: " << kFormatTag << "\n";
  os << "mode,device,busy_ms,idle_ms,transmit_ms,energy_mj,end_to_end_ms,transmission_fraction,idle_share\n";
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.busy_ms.size(); ++i) {
      if (!r.participating[i]) continue;
      os << to_string(r.mode) << ',' << fleet.devices[i].name << ',' << format_double(r.busy_ms[i]) << ','
         << format_double(r.idle_ms[i]) << ',' << format_double(r.transmit_ms[i]) << ','
         << format_double(r.energy_mj[i]) << ',' << format_double(r.end_to_end_ms) << ','
         << format_double(r.transmission_fraction) << ',' << format_double(r.idle_share) << '\n';
    }
    os << to_string(r.mode) << ",total,,,," << format_double(r.total_energy_mj) << ','
       << format_double(r.end_to_end_ms) << ',' << format_double(r.transmission_fraction) << ','
       << format_double(r.idle_share) << '\n';
  }
  return os.str();
}

}  // namespace edgeplan
