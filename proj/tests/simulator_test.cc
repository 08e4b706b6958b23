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

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "edgeplan/errors.hpp"
#include "edgeplan/simulator.hpp"
#include "fixtures.hpp"

namespace edgeplan {
namespace {

using testing::deit_base;
using testing::example_fleet;
using testing::unbounded_device;

DeviceFleet uniform_fleet(std::size_t n, double bits_per_ms = 1000.0) {
  DeviceFleet f;
  for (std::size_t i = 0; i < n; ++i) {
    auto d = unbounded_device("d" + std::to_string(i));
    d.bandwidth_bits_per_ms = bits_per_ms;
    d.busy_power_mw = 10000;
    d.idle_power_mw = 1000;
    f.devices.push_back(d);
  }
  f.central_index = n - 1;
  return f;
}

Workload simple_workload(std::vector<double> compute, std::vector<double> bits, double aggregate) {
  Workload w;
  w.compute_ms = std::move(compute);
  w.transfer_bits = std::move(bits);
  w.aggregate_ms = aggregate;
  w.layers = 12;
  w.single_device = 0;
  w.single_ms = 100.0;
  return w;
}

// Every participant's events tile [0, end] without gaps or overlap, and the
// phase totals agree with the report.
void expect_tiling(const SimReport& r) {
  for (std::size_t dev = 0; dev < r.busy_ms.size(); ++dev) {
    std::vector<TimelineEvent> ev;
    for (const auto& e : r.timeline) {
      if (e.device == dev) ev.push_back(e);
    }
    if (!r.participating[dev]) {
      EXPECT_TRUE(ev.empty());
      continue;
    }
    ASSERT_FALSE(ev.empty());
    std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) { return a.start_ms < b.start_ms; });
    EXPECT_EQ(ev.front().start_ms, 0.0);
    EXPECT_EQ(ev.back().end_ms, r.end_to_end_ms);
    double busy = 0.0;
    double other = 0.0;
    double transmit = 0.0;
    for (std::size_t i = 0; i < ev.size(); ++i) {
      EXPECT_GE(ev[i].end_ms, ev[i].start_ms);
      if (i > 0) EXPECT_EQ(ev[i].start_ms, ev[i - 1].end_ms);
      const double len = ev[i].end_ms - ev[i].start_ms;
      if (ev[i].phase == Phase::kCompute || ev[i].phase == Phase::kAggregate) {
        busy += len;
      } else {
        other += len;
      }
      if (ev[i].phase == Phase::kTransmit) transmit += len;
    }
    EXPECT_NEAR(busy, r.busy_ms[dev], 1e-9);
    EXPECT_NEAR(other, r.idle_ms[dev], 1e-9);
    EXPECT_NEAR(transmit, r.transmit_ms[dev], 1e-9);
    EXPECT_DOUBLE_EQ(r.busy_ms[dev] + r.idle_ms[dev], r.end_to_end_ms);
  }
  EXPECT_GE(r.transmission_fraction, 0.0);
  EXPECT_LE(r.transmission_fraction, 1.0);
}

double idle_before(const SimReport& r, std::size_t dev, double t) {
  double total = 0.0;
  for (const auto& e : r.timeline) {
    if (e.device == dev && e.phase == Phase::kIdle) total += std::max(0.0, std::min(e.end_ms, t) - e.start_ms);
  }
  return total;
}

TEST(AggregateEdge, TwoDeviceWorkedExample) {
  auto fleet = uniform_fleet(2, 1000.0);
  // Device 0: 8 ms compute + 2000 bits at 1000 bits/ms; device 1 is central.
  const auto w = simple_workload({8.0, 30.0}, {2000.0, 5000.0}, 5.0);
  const auto r = simulate(w, fleet, ScheduleMode::kAggregateEdge);
  EXPECT_DOUBLE_EQ(r.end_to_end_ms, 35.0);
  EXPECT_DOUBLE_EQ(idle_before(r, 0, 30.0), 20.0);
  EXPECT_DOUBLE_EQ(r.transmit_ms[0], 2.0);
  EXPECT_DOUBLE_EQ(r.transmit_ms[1], 0.0);
  EXPECT_DOUBLE_EQ(r.busy_ms[1], 35.0);
  expect_tiling(r);
}

TEST(AggregateEdge, MatchesClosedFormOnPolicies) {
  const auto base = deit_base();
  const auto fleet = example_fleet();
  const ProfileLatencyModel latency(fleet, base);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto policy = sample_policy(base, fleet, seed);
    const auto w = workload_from_policy(base, policy, fleet, latency);
    const auto r = simulate(w, fleet, ScheduleMode::kAggregateEdge);
    EXPECT_NEAR(r.end_to_end_ms, end_to_end_latency(policy, base, fleet, latency), 1e-9);
    expect_tiling(r);
  }
}

TEST(AggregateEdge, SerialisedIngressIsNeverFaster) {
  const auto fleet = uniform_fleet(4, 100.0);
  const auto w = simple_workload({5.0, 5.0, 5.0, 5.0}, {1000.0, 1000.0, 1000.0, 0.0}, 1.0);
  SimParams serial;
  serial.serialize_ingress = true;
  const auto dedicated = simulate(w, fleet, ScheduleMode::kAggregateEdge);
  const auto shared = simulate(w, fleet, ScheduleMode::kAggregateEdge, serial);
  EXPECT_DOUBLE_EQ(dedicated.end_to_end_ms, 5.0 + 10.0 + 1.0);
  EXPECT_DOUBLE_EQ(shared.end_to_end_ms, 5.0 + 30.0 + 1.0);
  expect_tiling(shared);
}

TEST(SingleEdge, NoIdleNoTransmission) {
  const auto fleet = uniform_fleet(3);
  auto w = simple_workload({1.0, 2.0, 3.0}, {1.0, 1.0, 1.0}, 1.0);
  w.single_device = 1;
  const auto r = simulate(w, fleet, ScheduleMode::kSingleEdge);
  EXPECT_DOUBLE_EQ(r.end_to_end_ms, 100.0);
  EXPECT_EQ(r.idle_share, 0.0);
  EXPECT_EQ(r.transmission_fraction, 0.0);
  EXPECT_FALSE(r.participating[0]);
  EXPECT_TRUE(r.participating[1]);
  expect_tiling(r);
}

TEST(PipeEdge, EqualSegmentsIdleTwoThirds) {
  const auto fleet = uniform_fleet(3);
  const auto w = simple_workload({100.0, 100.0, 100.0}, {0.0, 0.0, 0.0}, 0.0);
  const auto r = simulate(w, fleet, ScheduleMode::kPipeEdge);
  EXPECT_DOUBLE_EQ(r.end_to_end_ms, 300.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(r.idle_ms[i], 200.0);
  EXPECT_NEAR(r.idle_share, 2.0 / 3.0, 1e-12);
  expect_tiling(r);
}

TEST(PipeEdge, SegmentsRunInOrder) {
  auto fleet = uniform_fleet(3);
  fleet.central_index = 1;
  const auto w = simple_workload({10.0, 20.0, 30.0}, {1000.0, 0.0, 2000.0}, 4.0);
  const auto r = simulate(w, fleet, ScheduleMode::kPipeEdge);
  // Order: device 0, device 2, then the central device 1.
  EXPECT_DOUBLE_EQ(r.end_to_end_ms, 10.0 + 1.0 + 30.0 + 2.0 + 20.0 + 4.0);
  expect_tiling(r);
}

TEST(Modes, AggregateBeatsPipeOnRandomWorkloads) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ms(0.1, 50.0), bits(1.0, 5000.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 4);
    auto fleet = uniform_fleet(n, 100.0 + trial);
    fleet.central_index = static_cast<std::size_t>(trial) % n;
    Workload w;
    for (std::size_t i = 0; i < n; ++i) {
      w.compute_ms.push_back(ms(rng));
      w.transfer_bits.push_back(bits(rng));
    }
    w.aggregate_ms = ms(rng);
    const auto agg = simulate(w, fleet, ScheduleMode::kAggregateEdge);
    const auto pipe = simulate(w, fleet, ScheduleMode::kPipeEdge);
    EXPECT_LT(agg.end_to_end_ms, pipe.end_to_end_ms);
    expect_tiling(agg);
    expect_tiling(pipe);
  }
}

TEST(Modes, SingleDeviceFleetModesCoincide) {
  const auto fleet = uniform_fleet(1);
  auto w = simple_workload({40.0}, {1000.0}, 2.0);
  w.single_ms = 42.0;
  const auto reports = compare_modes(w, fleet);
  ASSERT_EQ(reports.size(), 4u);
  for (const auto& r : reports) {
    EXPECT_NEAR(r.end_to_end_ms, 42.0, 1e-12) << to_string(r.mode);
    expect_tiling(r);
  }
}

TEST(Modes, DistriEdgeIsTransmissionBound) {
  const auto fleet = uniform_fleet(3, 2000.0);
  auto w = simple_workload({60.0, 60.0, 60.0}, {197.0 * 256 * 32, 197.0 * 256 * 32, 0.0}, 2.0);
  w.sync_bits_per_layer = 197.0 * 768 * 32;
  w.layers = 12;
  const auto distri = simulate(w, fleet, ScheduleMode::kDistriEdge);
  const auto agg = simulate(w, fleet, ScheduleMode::kAggregateEdge);
  EXPECT_GT(distri.transmission_fraction, agg.transmission_fraction);
  EXPECT_GT(distri.transmission_fraction, 0.4);
  expect_tiling(distri);
}

TEST(Modes, InvariantUnderRelabelingNonCentralDevices) {
  auto fleet = example_fleet();
  const auto w = simple_workload({12.0, 7.0, 9.0}, {4000.0, 9000.0, 100.0}, 1.5);
  auto swapped_fleet = fleet;
  std::swap(swapped_fleet.devices[0], swapped_fleet.devices[1]);
  auto sw = w;
  std::swap(sw.compute_ms[0], sw.compute_ms[1]);
  std::swap(sw.transfer_bits[0], sw.transfer_bits[1]);
  for (auto mode : {ScheduleMode::kAggregateEdge, ScheduleMode::kPipeEdge, ScheduleMode::kDistriEdge}) {
    const auto a = simulate(w, fleet, mode);
    const auto b = simulate(sw, swapped_fleet, mode);
    EXPECT_NEAR(a.end_to_end_ms, b.end_to_end_ms, 1e-9) << to_string(mode);
    EXPECT_NEAR(a.total_energy_mj, b.total_energy_mj, 1e-9);
    EXPECT_NEAR(a.busy_ms[0], b.busy_ms[1], 1e-9);
    EXPECT_NEAR(a.idle_ms[0], b.idle_ms[1], 1e-9);
    EXPECT_NEAR(a.transmit_ms[1], b.transmit_ms[0], 1e-9);
    EXPECT_NEAR(a.idle_share, b.idle_share, 1e-12);
  }
}

TEST(Energy, BusyOnlyArithmetic) {
  SimReport r;
  r.busy_ms = {100.0};
  r.idle_ms = {0.0};
  DeviceFleet f;
  f.devices = {unbounded_device()};
  f.devices[0].busy_power_mw = 10000.0;
  EXPECT_DOUBLE_EQ(energy(r, f), 1000.0);
}

TEST(Energy, IdleDeviceContributesIdlePowerOnly) {
  const auto fleet = uniform_fleet(2);
  auto w = simple_workload({0.0, 50.0}, {0.0, 0.0}, 0.0);
  const auto r = simulate(w, fleet, ScheduleMode::kAggregateEdge);
  EXPECT_DOUBLE_EQ(r.energy_mj[0], fleet.devices[0].idle_power_mw * r.end_to_end_ms * 1e-3);
}

TEST(Energy, AdditiveAndLinearInPower) {
  const auto fleet = example_fleet();
  const auto w = simple_workload({12.0, 7.0, 9.0}, {4000.0, 9000.0, 100.0}, 1.5);
  const auto r = simulate(w, fleet, ScheduleMode::kPipeEdge);
  std::vector<double> per;
  const double total = energy(r, fleet, &per);
  EXPECT_NEAR(total, per[0] + per[1] + per[2], 1e-12);
  auto doubled = fleet;
  for (auto& d : doubled.devices) {
    d.busy_power_mw *= 2.0;
    d.idle_power_mw *= 2.0;
  }
  EXPECT_NEAR(energy(r, doubled), 2.0 * total, 1e-9);
}

TEST(Energy, ParallelBeatsPipelineWithEqualPowers) {
  const auto fleet = uniform_fleet(3);
  const auto w = simple_workload({100.0, 100.0, 100.0}, {1000.0, 1000.0, 0.0}, 5.0);
  EXPECT_LT(simulate(w, fleet, ScheduleMode::kAggregateEdge).total_energy_mj,
            simulate(w, fleet, ScheduleMode::kPipeEdge).total_energy_mj);
}

TEST(Workload, Validation) {
  const auto fleet = uniform_fleet(2);
  auto w = simple_workload({1.0, 1.0}, {1.0, 1.0}, 1.0);
  EXPECT_NO_THROW(w.validate(fleet));
  auto bad = w;
  bad.compute_ms.pop_back();
  EXPECT_THROW(simulate(bad, fleet, ScheduleMode::kAggregateEdge), InvalidWorkload);
  bad = w;
  bad.transfer_bits[0] = -1.0;
  EXPECT_THROW(simulate(bad, fleet, ScheduleMode::kPipeEdge), InvalidWorkload);
  bad = w;
  bad.layers = 0;
  EXPECT_THROW(simulate(bad, fleet, ScheduleMode::kDistriEdge), InvalidWorkload);
  bad = w;
  bad.single_device = 5;
  EXPECT_THROW(simulate(bad, fleet, ScheduleMode::kSingleEdge), InvalidWorkload);
}

TEST(Workload, FromPolicy) {
  const auto base = deit_base();
  const auto fleet = example_fleet();
  const ProfileLatencyModel latency(fleet, base);
  const auto policy = sample_policy(base, fleet, 3);
  const auto w = workload_from_policy(base, policy, fleet, latency);
  EXPECT_EQ(w.single_device, 0u);  // the slowest device
  EXPECT_EQ(w.layers, 12u);
  EXPECT_DOUBLE_EQ(w.sync_bits_per_layer, 197.0 * 768 * 32);
  EXPECT_DOUBLE_EQ(w.single_ms, latency.phase1_ms(0, full_model(base)));
  EXPECT_DOUBLE_EQ(w.transfer_bits[1], feature_bits(base, policy.sub_models[1]));
}

TEST(Export, TimelineCsv) {
  const auto fleet = uniform_fleet(2);
  const auto r = simulate(simple_workload({8.0, 30.0}, {2000.0, 0.0}, 5.0), fleet, ScheduleMode::kAggregateEdge);
  const auto csv = timeline_to_csv(r);
  EXPECT_EQ(csv.rfind("# format: edgeplan/1\ndevice,phase,start_ms,end_ms\n", 0), 0u);
  EXPECT_NE(csv.find("0,transmit,8,10\n"), std::string::npos);
  EXPECT_NE(csv.find("1,aggregate,30,35\n"), std::string::npos);
}

TEST(Modes, NamesRoundTrip) {
  for (auto m : kAllModes) EXPECT_EQ(mode_from_string(to_string(m)), m);
  EXPECT_THROW(mode_from_string("ring-edge"), ConfigError);
}

}  // namespace
}  // namespace edgeplan
