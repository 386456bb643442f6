#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "meshmetrics/harness.hpp"
#include "test_support.hpp"

namespace mm = meshmetrics;
using mm::Errc;
using mm::MetricId;
using mm::NodeId;

namespace {

mm::Scenario chain_scenario(std::size_t hops, double loss = 0.0) {
  mm::Scenario s;
  for (std::uint32_t i = 0; i <= hops; ++i) s.topology.nodes.emplace_back(i);
  for (std::uint32_t i = 0; i < hops; ++i) {
    s.topology.links.push_back({NodeId(i), NodeId(i + 1), {}});
    mm::LinkTruth t;
    t.loss = mm::BernoulliLoss{loss, 0.0};
    s.truths.push_back(t);
  }
  s.flow.source = NodeId(0);
  s.flow.destination = NodeId(static_cast<std::uint32_t>(hops));
  s.flow.packets = 500;
  s.measurement.duration_s = 20;
  return s;
}

}  // namespace

TEST(ReplayFlow, PerfectSingleHop) {
  auto s = chain_scenario(1);
  auto topo = mm::build_topology(s.topology);
  auto r = mm::replay_flow(topo, s.truths, mm::Path{{0}}, s.flow, 1);
  EXPECT_EQ(r.availability, 1.0);
  ASSERT_EQ(r.ant_per_link.size(), 1u);
  EXPECT_EQ(r.ant_per_link[0].ant, 1.0);
  EXPECT_EQ(r.delivered, r.offered);
  EXPECT_REL(r.throughput_bps, 1e6, 1e-12);
}

TEST(ReplayFlow, TruncatedGeometricRetries) {
  auto s = chain_scenario(1, 0.5);
  s.flow.packets = 10000;
  auto topo = mm::build_topology(s.topology);
  auto r = mm::replay_flow(topo, s.truths, mm::Path{{0}}, s.flow, 2024);
  EXPECT_NEAR(r.availability, 1 - std::pow(0.5, 8), 0.01);
  // Attempts per packet follow a geometric law truncated at 8: E = (1 - 0.5^8) / 0.5.
  EXPECT_NEAR(r.ant_per_link[0].ant, (1 - std::pow(0.5, 8)) / 0.5, 0.05);
}

TEST(ReplayFlow, TwoPerfectHopsSumToTwo) {
  auto s = chain_scenario(2);
  auto topo = mm::build_topology(s.topology);
  auto r = mm::replay_flow(topo, s.truths, mm::Path{{0, 1}}, s.flow, 1);
  EXPECT_EQ(r.total_ant(), 2.0);
  EXPECT_EQ(r.mean_ant(), 1.0);
  // Both hops contend on one channel, so each runs at half rate.
  EXPECT_REL(r.throughput_bps, 0.25e6, 1e-12);
}

TEST(ReplayFlow, RejectsBadRoutes) {
  auto s = chain_scenario(2);
  auto topo = mm::build_topology(s.topology);
  EXPECT_ERRC(mm::replay_flow(topo, s.truths, mm::Path{{1, 0}}, s.flow, 1), Errc::InvalidRoute);
  EXPECT_ERRC(mm::replay_flow(topo, s.truths, mm::Path{{0}}, s.flow, 1), Errc::InvalidRoute);
  EXPECT_ERRC(mm::replay_flow(topo, s.truths, mm::Path{}, s.flow, 1), Errc::InvalidRoute);
}

TEST(ReplayFlow, AckLossCountsAgainstTheAttempt) {
  auto s = chain_scenario(1);
  s.truths[0].loss = mm::BernoulliLoss{0.0, 1.0};
  auto topo = mm::build_topology(s.topology);
  auto r = mm::replay_flow(topo, s.truths, mm::Path{{0}}, s.flow, 1);
  EXPECT_EQ(r.delivered, 0u);
  EXPECT_EQ(r.ant_per_link[0].ant, 8.0);
}

TEST(RunScenario, SinglePerfectLinkEveryMetric) {
  auto s = chain_scenario(1);
  for (auto id : mm::kAllMetrics) s.metrics.push_back({id, {}});
  auto report = mm::run_scenario(s);
  ASSERT_EQ(report.outcomes.size(), std::size(mm::kAllMetrics));
  for (const auto& o : report.outcomes) {
    ASSERT_TRUE(o.ok()) << mm::metric_name(o.spec.id) << ": " << o.message;
    EXPECT_EQ(o.flow->availability, 1.0);
    EXPECT_EQ(o.flow->mean_ant(), 1.0);
  }
  auto table = mm::compare_metrics(report);
  for (const auto& row : table.rows) {
    EXPECT_EQ(row.route, table.rows.front().route);
    EXPECT_EQ(row.availability, 1.0);
    EXPECT_EQ(row.mean_ant, table.rows.front().mean_ant);
    EXPECT_EQ(row.throughput_bps, table.rows.front().throughput_bps);
  }
  EXPECT_EQ(table.rows.front().metric, "hop_count");
}

TEST(RunScenario, DeterministicPerSeed) {
  auto s = chain_scenario(3, 0.2);
  s.metrics = {{MetricId::ETX, {}}, {MetricId::mETX, {}}, {MetricId::WCETT, {}}};
  auto a = mm::run_scenario(s);
  auto b = mm::run_scenario(s);
  ASSERT_EQ(a.estimates, b.estimates);
  for (std::size_t i = 0; i < a.outcomes.size(); ++i) EXPECT_EQ(a.outcomes[i].flow, b.outcomes[i].flow);
  s.seed = 2;
  auto c = mm::run_scenario(s);
  EXPECT_NE(a.estimates, c.estimates);
}

TEST(RunScenario, NoRouteIsRecordedNotThrown) {
  auto s = chain_scenario(1);
  s.topology.nodes.emplace_back(5);
  s.flow.destination = NodeId(5);
  s.metrics = {{MetricId::ETX, {}}};
  auto report = mm::run_scenario(s);
  ASSERT_FALSE(report.outcomes[0].ok());
  EXPECT_EQ(report.outcomes[0].error, Errc::NoRoute);
  auto table = mm::compare_metrics(report);
  EXPECT_FALSE(table.rows[1].route.has_value());
  EXPECT_EQ(table.rows[1].error, "NoRoute");
}

TEST(RunScenario, InvalidScenarioIsFatal) {
  auto s = chain_scenario(1);
  s.truths.clear();
  EXPECT_ERRC(mm::run_scenario(s), Errc::InvariantViolation);
  s = chain_scenario(1);
  s.flow.destination = s.flow.source;
  EXPECT_ERRC(mm::run_scenario(s), Errc::InvariantViolation);
}

TEST(RunScenario, MultiRateChainFavoursMtm) {
  mm::Scenario s;
  for (std::uint32_t i = 0; i < 4; ++i) s.topology.nodes.emplace_back(i);
  for (std::uint32_t i = 0; i < 3; ++i) s.topology.links.push_back({NodeId(i), NodeId(i + 1), {}, 11e6});
  s.topology.links.push_back({NodeId(0), NodeId(3), {}, 1e6});
  s.truths.assign(4, mm::LinkTruth{});
  s.flow = {NodeId(0), NodeId(3), 300, 8192, 1.0};
  s.measurement.duration_s = 20;
  s.metrics = {{MetricId::MTM, {}}};
  auto table = mm::compare_metrics(mm::run_scenario(s));
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(table.rows[0].hops, 1u);
  EXPECT_EQ(table.rows[1].hops, 3u);
  EXPECT_GT(table.rows[1].throughput_bps, table.rows[0].throughput_bps);
}

TEST(RunReplicates, OrderedAndIndependentOfThreadCount) {
  auto s = chain_scenario(2, 0.3);
  s.metrics = {{MetricId::ETX, {}}};
  auto serial = mm::run_replicates(s, 5, 1);
  auto parallel = mm::run_replicates(s, 5, 4);
  ASSERT_EQ(serial.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(serial[i].scenario.seed, mm::derive_seed(s.seed, {i}));
    EXPECT_EQ(serial[i].estimates, parallel[i].estimates);
    EXPECT_EQ(serial[i].outcomes[0].flow, parallel[i].outcomes[0].flow);
  }
}
