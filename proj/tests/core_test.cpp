#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "meshmetrics/core.hpp"
#include "test_support.hpp"

namespace mm = meshmetrics;
using mm::ChannelId;
using mm::Errc;
using mm::Link;
using mm::NodeId;

namespace {

Link L(std::uint32_t a, std::uint32_t b, std::uint32_t ch = 0) {
  return Link{NodeId(a), NodeId(b), ChannelId(ch)};
}

mm::TopologySpec spec_of(std::vector<std::uint32_t> nodes, std::vector<Link> links,
                         std::uint32_t k = 1, std::uint32_t h = 1) {
  mm::TopologySpec s;
  for (auto n : nodes) s.nodes.emplace_back(n);
  s.links = std::move(links);
  s.channel_count = k;
  s.interference_range_hops = h;
  return s;
}

}  // namespace

TEST(BuildTopology, MinimalTwoNodeLink) {
  auto topo = mm::build_topology(spec_of({0, 1}, {L(0, 1)}));
  EXPECT_EQ(topo.link_count(), 1u);
  EXPECT_EQ(topo.node_count(), 2u);
  EXPECT_EQ(topo.hop_distance(NodeId(0), NodeId(1)), 1u);
}

TEST(BuildTopology, RejectsMalformedSpecs) {
  EXPECT_ERRC(mm::build_topology(spec_of({0, 1}, {L(0, 9)})), Errc::DanglingEndpoint);
  EXPECT_ERRC(mm::build_topology(spec_of({0, 1}, {L(0, 1), L(0, 1)})), Errc::DuplicateLink);
  EXPECT_ERRC(mm::build_topology(spec_of({0, 0}, {})), Errc::DuplicateNode);
  EXPECT_ERRC(mm::build_topology(spec_of({0, 1}, {L(0, 1, 1)})), Errc::ChannelOutOfRange);
  EXPECT_ERRC(mm::build_topology(spec_of({0, 1}, {L(0, 0)})), Errc::InvalidLink);
  auto bad_rate = L(0, 1);
  bad_rate.nominal_rate_bps = 0;
  EXPECT_ERRC(mm::build_topology(spec_of({0, 1}, {bad_rate})), Errc::InvalidLink);
  EXPECT_ERRC(mm::build_topology(spec_of({0, 1}, {}, 0)), Errc::InvalidArgument);
}

TEST(BuildTopology, SameEndpointsOnDifferentChannelsAreDistinct) {
  auto topo = mm::build_topology(spec_of({0, 1}, {L(0, 1, 0), L(0, 1, 1)}, 2));
  EXPECT_EQ(topo.link_count(), 2u);
  EXPECT_EQ(topo.find_link(NodeId(0), NodeId(1), ChannelId(1)), std::optional<mm::LinkId>(1));
  EXPECT_FALSE(topo.find_link(NodeId(1), NodeId(0), ChannelId(0)).has_value());
}

TEST(BuildTopology, HopDistanceIgnoresDirectionAndReportsUnreachable) {
  auto topo = mm::build_topology(spec_of({0, 1, 2, 5}, {L(0, 1), L(2, 1)}));
  EXPECT_EQ(topo.hop_distance(NodeId(0), NodeId(2)), 2u);
  EXPECT_EQ(topo.hop_distance(NodeId(2), NodeId(0)), 2u);
  EXPECT_EQ(topo.hop_distance(NodeId(0), NodeId(5)), mm::Topology::kUnreachable);
  EXPECT_ERRC(topo.index_of(NodeId(7)), Errc::UnknownNode);
  EXPECT_ERRC(topo.link(3), Errc::UnknownLink);
}

TEST(InterferenceSet, IsolatedLinkContainsOnlyItself) {
  auto topo = mm::build_topology(spec_of({0, 1, 2, 3}, {L(0, 1), L(2, 3)}));
  EXPECT_EQ(mm::interference_set(topo, 0), (std::vector<mm::LinkId>{0}));
  EXPECT_EQ(mm::interference_set(topo, L(2, 3)), (std::vector<mm::LinkId>{1}));
  EXPECT_ERRC(mm::interference_set(topo, L(1, 0)), Errc::UnknownLink);
}

TEST(InterferenceSet, ChainSingleChannelMatchesBruteForce) {
  auto topo = mm::build_topology(spec_of({0, 1, 2, 3}, {L(0, 1), L(1, 2), L(2, 3)}));
  EXPECT_EQ(mm::interference_set(topo, 1), (std::vector<mm::LinkId>{0, 1, 2}));
  for (mm::LinkId id = 0; id < 3; ++id) {
    EXPECT_EQ(mm::interference_set(topo, id), mmtest::brute_interference_set(topo, id)) << id;
  }
}

TEST(InterferenceSet, ChannelFilterOnChain) {
  auto topo = mm::build_topology(spec_of({0, 1, 2, 3}, {L(0, 1, 0), L(1, 2, 1), L(2, 3, 0)}, 2));
  EXPECT_EQ(mm::interference_set(topo, 0), (std::vector<mm::LinkId>{0, 2}));
  EXPECT_EQ(mm::interference_set(topo, 1), (std::vector<mm::LinkId>{1}));
}

TEST(InterferenceSet, InterferingNodesExcludeOwnEndpoints) {
  auto topo = mm::build_topology(spec_of({0, 1, 2, 3}, {L(0, 1), L(1, 2), L(2, 3)}));
  EXPECT_EQ(mm::interfering_nodes(topo, 0), (std::vector<NodeId>{NodeId(2), NodeId(3)}));
  EXPECT_EQ(mm::interfering_nodes(topo, 1), (std::vector<NodeId>{NodeId(0), NodeId(3)}));
}

TEST(ValidatePath, AcceptsContiguousSimplePath) {
  auto topo = mm::build_topology(spec_of({0, 1, 2, 3}, {L(0, 1), L(1, 2), L(2, 3), L(1, 0)}));
  const std::vector<Link> links{L(0, 1), L(1, 2)};
  auto path = mm::make_path(topo, links);
  EXPECT_EQ(path.links, (std::vector<mm::LinkId>{0, 1}));
  EXPECT_EQ(mm::path_nodes(topo, path), (std::vector<NodeId>{NodeId(0), NodeId(1), NodeId(2)}));
}

TEST(ValidatePath, RejectsBrokenPaths) {
  auto topo = mm::build_topology(spec_of({0, 1, 2, 3}, {L(0, 1), L(1, 2), L(2, 3), L(1, 0)}));
  EXPECT_ERRC(mm::validate_path(topo, mm::Path{{0, 2}}), Errc::Discontiguous);
  EXPECT_ERRC(mm::validate_path(topo, mm::Path{{0, 3}}), Errc::RepeatedNode);
  EXPECT_ERRC(mm::validate_path(topo, mm::Path{}), Errc::EmptyPath);
  EXPECT_ERRC(mm::validate_path(topo, mm::Path{{9}}), Errc::UnknownLink);
  const std::vector<Link> absent{L(3, 2)};
  EXPECT_ERRC(mm::make_path(topo, absent), Errc::UnknownLink);
}

TEST(MetricIdentity, NamesRoundTripAndDirectionsAreFixed) {
  for (auto id : mm::kAllMetrics) EXPECT_EQ(mm::parse_metric(mm::metric_name(id)), id);
  EXPECT_ERRC(mm::parse_metric("bogus"), Errc::UnknownMetric);
  EXPECT_EQ(mm::metric_direction(mm::MetricId::EDR), mm::Direction::Maximize);
  EXPECT_EQ(mm::metric_direction(mm::MetricId::ETP), mm::Direction::Maximize);
  EXPECT_EQ(mm::metric_direction(mm::MetricId::ETX), mm::Direction::Minimize);
}

TEST(MetricIdentity, ValueComparisonFollowsDirection) {
  const mm::MetricValue a(mm::MetricId::ETX, 1.5), b(mm::MetricId::ETX, 2.0);
  EXPECT_TRUE(a.better_than(b));
  const mm::MetricValue c(mm::MetricId::ETP, 1.5), d(mm::MetricId::ETP, 2.0);
  EXPECT_TRUE(d.better_than(c));
  EXPECT_ERRC(mm::MetricValue(mm::MetricId::ETX, -1.0), Errc::InvalidArgument);
  EXPECT_ERRC(mm::MetricValue(mm::MetricId::ETX, std::nan("")), Errc::InvalidArgument);
}

TEST(ErrorModel, MessageCarriesCodeName) {
  try {
    mm::fail(Errc::NoRoute, "0 -> 2");
  } catch (const mm::Error& e) {
    EXPECT_EQ(e.code(), Errc::NoRoute);
    EXPECT_STREQ(e.what(), "NoRoute: 0 -> 2");
  }
}

TEST(Phy, CoherentBerOracle) {
  EXPECT_DOUBLE_EQ(mm::coherent_bit_error_rate(0.0), 0.5);
  EXPECT_NEAR(mm::coherent_bit_error_rate(4.0), 0.5 * std::erfc(2.0), 1e-18);
  EXPECT_NEAR(mm::frame_success_probability(4.0, 10),
              std::pow(1 - 0.5 * std::erfc(2.0), 10), 1e-15);
  EXPECT_DOUBLE_EQ(mm::db_to_linear(10.0), 10.0);
}
