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

#ifndef EDGEPLAN_SIMULATOR_HPP_
#define EDGEPLAN_SIMULATOR_HPP_

#include <optional>
#include <string>
#include <vector>

#include "edgeplan/core_model.hpp"
#include "edgeplan/evaluator.hpp"

namespace edgeplan {

enum class ScheduleMode { kAggregateEdge, kPipeEdge, kDistriEdge, kSingleEdge };

inline constexpr ScheduleMode kAllModes[] = {ScheduleMode::kAggregateEdge, ScheduleMode::kPipeEdge,
                                             ScheduleMode::kDistriEdge, ScheduleMode::kSingleEdge};

std::string to_string(ScheduleMode mode);
// Accepts "aggregate-edge", "pipe-edge", "distri-edge", "single-edge".
ScheduleMode mode_from_string(const std::string& name);

enum class Phase { kCompute, kTransmit, kAggregate, kIdle };
std::string to_string(Phase phase);

struct TimelineEvent {
  std::size_t device = 0;
  Phase phase = Phase::kIdle;
  double start_ms = 0.0;
  double end_ms = 0.0;
};

// Everything the scheduler needs; one entry per fleet device.
struct Workload {
  std::vector<double> compute_ms;
  std::vector<double> transfer_bits;   // output features shipped by each device
  double aggregate_ms = 0.0;           // central fusion step
  std::size_t layers = 1;              // distri-edge sync rounds
  double sync_bits_per_layer = 0.0;    // distri-edge, per device and round
  std::size_t single_device = 0;       // single-edge host
  double single_ms = 0.0;              // single-edge compute time

  void validate(const DeviceFleet& fleet) const;  // throws InvalidWorkload
};

struct SimParams {
  // Uploads to the central node share one ingress and are served in arrival order.
  bool serialize_ingress = false;
};

struct SimReport {
  ScheduleMode mode = ScheduleMode::kAggregateEdge;
  double end_to_end_ms = 0.0;
  // Per device. busy counts compute and aggregation; idle = end - busy, so it
  // includes time spent only transmitting. Devices outside the schedule
  // (single-edge) report zeros and participating = false.
  std::vector<double> busy_ms;
  std::vector<double> idle_ms;
  std::vector<double> transmit_ms;
  std::vector<bool> participating;
  std::vector<double> energy_mj;
  double total_energy_mj = 0.0;
  // Wall-clock share where something is on the wire and no processor is busy.
  double transmission_fraction = 0.0;
  // Summed idle over summed device-time of the participants.
  double idle_share = 0.0;
  std::vector<TimelineEvent> timeline;  // tiles [0, end] per participant
};

SimReport simulate(const Workload& workload, const DeviceFleet& fleet, ScheduleMode mode,
                   const SimParams& params = {});

// busy * busy_power + idle * idle_power per device, mW*ms -> mJ. Returns the
// total; per-device values go to `per_device` when given.
double energy(const SimReport& report, const DeviceFleet& fleet, std::vector<double>* per_device = nullptr);

std::vector<SimReport> compare_modes(const Workload& workload, const DeviceFleet& fleet,
                                     const SimParams& params = {});

struct WorkloadOptions {
  LatencyParams latency;
  std::optional<std::size_t> single_device;  // defaults to the slowest device
};

// Builds a workload from a decomposition policy: per-device compute from the
// latency model, feature sizes, central aggregation cost, one sync round per
// base layer of S*d values, and the full model on the single-edge host.
Workload workload_from_policy(const TransformerConfig& base, const DecompositionPolicy& policy,
                              const DeviceFleet& fleet, const LatencyModel& latency,
                              const WorkloadOptions& options = {});

std::string timeline_to_csv(const SimReport& report);
std::string summary_to_csv(const std::vector<SimReport>& reports, const DeviceFleet& fleet);

}  // namespace edgeplan

#endif  // EDGEPLAN_SIMULATOR_HPP_
