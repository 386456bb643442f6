#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "meshmetrics/routing.hpp"
#include "test_support.hpp"

namespace mm = meshmetrics;
using mm::ChannelId;
using mm::Errc;
using mm::Link;
using mm::MetricId;
using mm::NodeId;

namespace {

Link L(std::uint32_t a, std::uint32_t b, std::uint32_t ch = 0) {
  return Link{NodeId(a), NodeId(b), ChannelId(ch)};
}

mm::Topology topo_of(std::uint32_t n, std::vector<Link> links, std::uint32_t k = 1) {
  mm::TopologySpec s;
  for (std::uint32_t i = 0; i < n; ++i) s.nodes.emplace_back(i);
  s.links = std::move(links);
  s.channel_count = k;
  return mm::build_topology(s);
}

mm::LinkEstimate est(double d_f = 1.0, double d_r = 1.0, double bandwidth = 1e6) {
  mm::LinkEstimate e;
  e.d_f = d_f;
  e.d_r = d_r;
  e.bandwidth_bps = bandwidth;
  e.snr = e.sinr = 100.0;
  e.snir_samples.assign(10, 100.0);
  return e;
}

/// 3x3 grid, bidirectional links, ETX drawn from [1, 3].
std::pair<mm::Topology, mm::LinkCosts> grid(std::uint64_t seed) {
  std::vector<Link> links;
  auto id = [](int r, int c) { return static_cast<std::uint32_t>(3 * r + c); };
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      if (c + 1 < 3) {
        links.push_back(L(id(r, c), id(r, c + 1)));
        links.push_back(L(id(r, c + 1), id(r, c)));
      }
      if (r + 1 < 3) {
        links.push_back(L(id(r, c), id(r + 1, c)));
        links.push_back(L(id(r + 1, c), id(r, c)));
      }
    }
  }
  auto topo = topo_of(9, links);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(1.0, 3.0);
  mm::LinkCosts costs(topo.link_count());
  for (auto& c : costs) c = u(rng);
  return {std::move(topo), std::move(costs)};
}

double path_sum(const mm::Path& p, const mm::LinkCosts& c) {
  double s = 0;
  for (auto id : p.links) s += *c[id];
  return s;
}

}  // namespace

TEST(ShortestPathAdditive, ChainTriangleAndUnreachable) {
  auto chain = topo_of(3, {L(0, 1), L(1, 2)});
  auto r = mm::shortest_path_additive(chain, {1.0, 1.0}, NodeId(0), NodeId(2));
  EXPECT_EQ(r.path.hops(), 2u);
  EXPECT_DOUBLE_EQ(r.cost, 2.0);

  auto tri = topo_of(3, {L(0, 2), L(0, 1), L(1, 2)});
  r = mm::shortest_path_additive(tri, {3.0, 1.0, 1.0}, NodeId(0), NodeId(2));
  EXPECT_EQ(r.path.links, (std::vector<mm::LinkId>{1, 2}));
  EXPECT_DOUBLE_EQ(r.cost, 2.0);

  EXPECT_ERRC(mm::shortest_path_additive(chain, {1.0, 1.0}, NodeId(2), NodeId(0)), Errc::NoRoute);
  EXPECT_ERRC(mm::shortest_path_additive(chain, {1.0, std::nullopt}, NodeId(0), NodeId(2)),
              Errc::NoRoute);
  EXPECT_ERRC(mm::shortest_path_additive(chain, {1.0, -1.0}, NodeId(0), NodeId(2)),
              Errc::InvalidArgument);
}

TEST(ShortestPathAdditive, TiesPreferFewerHopsThenSmallerNodes) {
  auto g = topo_of(4, {L(0, 3), L(0, 2), L(2, 3), L(0, 1), L(1, 3)});
  auto r = mm::shortest_path_additive(g, {2.0, 1.0, 1.0, 1.0, 1.0}, NodeId(0), NodeId(3));
  EXPECT_EQ(r.path.links, (std::vector<mm::LinkId>{0}));
  r = mm::shortest_path_additive(g, {2.5, 1.0, 1.0, 1.0, 1.0}, NodeId(0), NodeId(3));
  EXPECT_EQ(r.path.links, (std::vector<mm::LinkId>{3, 4}));
}

TEST(BestPathExhaustive, SinglePathAndChannelDiversity) {
  auto chain = topo_of(3, {L(0, 1), L(1, 2)});
  auto sum = [&](const mm::Path& p) -> std::optional<double> { return double(p.hops()); };
  auto r = mm::best_path_exhaustive(chain, NodeId(0), NodeId(2), 4, sum, mm::Direction::Minimize);
  EXPECT_EQ(r.path.links, (std::vector<mm::LinkId>{0, 1}));

  // Same-channel route through node 1, channel-diverse route through node 2.
  auto g = topo_of(4, {L(0, 1, 0), L(1, 3, 0), L(0, 2, 0), L(2, 3, 1)}, 2);
  const std::vector<double> ett{2e-3, 3e-3, 2e-3, 3e-3};
  auto wcett = [&](double beta) {
    return [&, beta](const mm::Path& p) -> std::optional<double> {
      std::vector<mm::ChannelHop> hops;
      for (auto id : p.links) hops.push_back({ett[id], g.link(id).channel});
      return mm::wcett(hops, 2, beta).value();
    };
  };
  r = mm::best_path_exhaustive(g, NodeId(0), NodeId(3), 4, wcett(0.9), mm::Direction::Minimize);
  EXPECT_EQ(r.path.links, (std::vector<mm::LinkId>{2, 3}));
  EXPECT_REL(r.cost, 3.2e-3, 1e-9);
  r = mm::best_path_exhaustive(g, NodeId(0), NodeId(3), 4, wcett(0.0), mm::Direction::Minimize);
  EXPECT_EQ(r.path.links, (std::vector<mm::LinkId>{0, 1}));
}

TEST(BestPathExhaustive, BudgetAndMaximize) {
  auto big = mmtest::random_topology(1, 13, 20);
  auto one = [](const mm::Path&) -> std::optional<double> { return 1.0; };
  EXPECT_ERRC(mm::best_path_exhaustive(big, NodeId(0), NodeId(1), 4, one, mm::Direction::Minimize),
              Errc::SearchBudgetExceeded);
  auto g = topo_of(3, {L(0, 2), L(0, 1), L(1, 2)});
  auto hops = [](const mm::Path& p) -> std::optional<double> { return double(p.hops()); };
  auto r = mm::best_path_exhaustive(g, NodeId(0), NodeId(2), 4, hops, mm::Direction::Maximize);
  EXPECT_EQ(r.path.hops(), 2u);
  r = mm::best_path_exhaustive(g, NodeId(0), NodeId(2), 1, hops, mm::Direction::Maximize);
  EXPECT_EQ(r.path.hops(), 1u);
}

TEST(BestPathRecursive, WorkedExamples) {
  auto single = topo_of(2, {L(0, 1)});
  auto r = mm::best_path_recursive(single, {0.2}, {}, NodeId(0), NodeId(1));
  EXPECT_REL(r.cost, 1.25, 1e-12);

  auto two = topo_of(3, {L(0, 2), L(0, 1), L(1, 2)});
  r = mm::best_path_recursive(two, {0.6, 0.2, 0.2}, {}, NodeId(0), NodeId(2));
  EXPECT_EQ(r.path.links, (std::vector<mm::LinkId>{0}));
  EXPECT_REL(r.cost, 2.5, 1e-12);
  r = mm::best_path_recursive(two, {0.7, 0.2, 0.2}, {}, NodeId(0), NodeId(2));
  EXPECT_REL(r.cost, 2.8125, 1e-12);
}

TEST(EtxDistanceTable, ChainAndDisconnected) {
  auto chain = topo_of(4, {L(0, 1), L(1, 0), L(1, 2), L(2, 1)});
  auto table = mm::etx_distance_table(chain, {1.0, 1.0, 1.0, 1.0});
  EXPECT_EQ(table.distance(NodeId(0), NodeId(2)), std::optional<double>(2.0));
  EXPECT_EQ(table.distance(NodeId(2), NodeId(0)), std::optional<double>(2.0));
  EXPECT_FALSE(table.distance(NodeId(0), NodeId(3)).has_value());
  EXPECT_EQ(table.distance(NodeId(3), NodeId(3)), std::optional<double>(0.0));
}

TEST(EtxDistanceTable, GridMatchesBruteForce) {
  auto [topo, costs] = grid(11);
  auto table = mm::etx_distance_table(topo, costs);
  for (auto a : topo.nodes()) {
    for (auto b : topo.nodes()) {
      if (a == b) continue;
      double best = INFINITY;
      for (const auto& p : mmtest::all_simple_paths(topo, a, b)) best = std::min(best, path_sum(p, costs));
      ASSERT_TRUE(table.distance(a, b).has_value());
      EXPECT_REL(*table.distance(a, b), best, 1e-12);
    }
  }
}

TEST(GreedyForward, ChainAndGrid) {
  auto chain = topo_of(3, {L(0, 1), L(1, 2)});
  const mm::LinkCosts unit{1.0, 1.0};
  auto table = mm::etx_distance_table(chain, unit);
  auto p = mm::greedy_forward(chain, table, unit, NodeId(0), NodeId(2));
  EXPECT_EQ(p.links, (std::vector<mm::LinkId>{0, 1}));

  auto [topo, costs] = grid(11);
  auto gt = mm::etx_distance_table(topo, costs);
  for (auto d : topo.nodes()) {
    if (d == NodeId(0)) continue;
    p = mm::greedy_forward(topo, gt, costs, NodeId(0), d);
    EXPECT_REL(path_sum(p, costs), *gt.distance(NodeId(0), d), 1e-12);
  }
}

TEST(GreedyForward, OtherComponentAndLocalMinimum) {
  auto split = topo_of(4, {L(0, 1), L(2, 3)});
  const mm::LinkCosts unit{1.0, 1.0};
  auto table = mm::etx_distance_table(split, unit);
  EXPECT_ERRC(mm::greedy_forward(split, table, unit, NodeId(0), NodeId(3)), Errc::NoRoute);

  // A hand-made table claiming node 1 is farther than node 0.
  auto chain = topo_of(3, {L(0, 1), L(1, 2)});
  mm::DistanceTable bogus;
  bogus.set(NodeId(0), NodeId(2), 1.0);
  bogus.set(NodeId(1), NodeId(2), 5.0);
  EXPECT_ERRC(mm::greedy_forward(chain, bogus, unit, NodeId(0), NodeId(2)), Errc::LocalMinimum);
}

TEST(SelectRoute, EtxOnChain) {
  auto chain = topo_of(3, {L(0, 1), L(1, 2)});
  std::vector<mm::LinkEstimate> e{est(), est()};
  mm::RoutingContext ctx(chain, e);
  auto sel = mm::select_route(ctx, {NodeId(0), NodeId(2), MetricId::ETX, {}});
  EXPECT_EQ(sel.path.hops(), 2u);
  EXPECT_DOUBLE_EQ(sel.value.value(), 2.0);
}

TEST(SelectRoute, EntPrunesInadmissibleLink) {
  auto g = topo_of(3, {L(0, 2), L(0, 1), L(1, 2)});
  std::vector<mm::LinkEstimate> e{est(), est(), est()};
  e[0].mu = std::log(10.0);
  e[1].mu = e[2].mu = 0.1;
  mm::RoutingContext ctx(g, e);
  mm::MetricConfig cfg;
  EXPECT_FALSE(mm::ent(e[0].mu, 0, cfg).admissible);
  auto sel = mm::select_route(ctx, {NodeId(0), NodeId(2), MetricId::ENT, cfg});
  EXPECT_EQ(sel.path.links, (std::vector<mm::LinkId>{1, 2}));
  EXPECT_REL(sel.value.value(), 2 * std::exp(0.1), 1e-12);
  // Without pruning the direct link would win on hop count.
  EXPECT_EQ(mm::select_route(ctx, {NodeId(0), NodeId(2), MetricId::HopCount, cfg}).path.hops(), 1u);
}

TEST(SelectRoute, UnknownMetricAndBadConfig) {
  auto chain = topo_of(2, {L(0, 1)});
  std::vector<mm::LinkEstimate> e{est()};
  mm::RoutingContext ctx(chain, e);
  EXPECT_ERRC(mm::select_route(ctx, {NodeId(0), NodeId(1), static_cast<MetricId>(999), {}}),
              Errc::UnknownMetric);
  mm::MetricConfig bad;
  bad.beta = 1.5;
  EXPECT_ERRC(mm::select_route(ctx, {NodeId(0), NodeId(1), MetricId::WCETT, bad}),
              Errc::InvariantViolation);
}

TEST(SelectRoute, DeadLinksAreRemoved) {
  auto g = topo_of(3, {L(0, 2), L(0, 1), L(1, 2)});
  std::vector<mm::LinkEstimate> e{est(0.0, 1.0), est(), est()};
  mm::RoutingContext ctx(g, e);
  for (auto id : mm::kAllMetrics) {
    auto sel = mm::select_route(ctx, {NodeId(0), NodeId(2), id, {}});
    EXPECT_EQ(sel.path.links, (std::vector<mm::LinkId>{1, 2})) << mm::metric_name(id);
  }
  std::vector<mm::LinkEstimate> none{est(0.0, 1.0), est(), est(1.0, 0.0)};
  mm::RoutingContext dead(g, none);
  EXPECT_ERRC(mm::select_route(dead, {NodeId(0), NodeId(2), MetricId::ETX, {}}), Errc::NoRoute);
}

TEST(SelectRoute, WcettPrefersChannelDiversity) {
  // Bandwidths give ETT 2 ms and 3 ms for 8192-bit frames.
  auto g = topo_of(4, {L(0, 1, 0), L(1, 3, 0), L(0, 2, 0), L(2, 3, 1)}, 2);
  std::vector<mm::LinkEstimate> e{est(1, 1, 8192 / 2e-3), est(1, 1, 8192 / 3e-3),
                                  est(1, 1, 8192 / 2e-3), est(1, 1, 8192 / 3e-3)};
  mm::RoutingContext ctx(g, e);
  mm::MetricConfig cfg;
  for (double beta : {0.5, 0.7, 1.0}) {
    cfg.beta = beta;
    auto sel = mm::select_route(ctx, {NodeId(0), NodeId(3), MetricId::WCETT, cfg});
    EXPECT_EQ(sel.path.links, (std::vector<mm::LinkId>{2, 3})) << beta;
  }
  cfg.beta = 0.0;
  auto sel = mm::select_route(ctx, {NodeId(0), NodeId(3), MetricId::WCETT, cfg});
  EXPECT_EQ(sel.path.links, (std::vector<mm::LinkId>{0, 1}));
}

TEST(SelectRoute, EnergyCostUsesLinkEnergies) {
  auto g = topo_of(3, {L(0, 2), L(0, 1), L(1, 2)});
  std::vector<mm::LinkEstimate> e{est(), est(), est()};
  mm::RoutingContext cheap_relay(g, e, {5.0, 1.0, 1.0});
  auto sel = mm::select_route(cheap_relay, {NodeId(0), NodeId(2), MetricId::EnergyCost, {}});
  EXPECT_EQ(sel.path.links, (std::vector<mm::LinkId>{1, 2}));
  EXPECT_DOUBLE_EQ(sel.value.value(), 2.0);
  sel = mm::select_route(cheap_relay, {NodeId(0), NodeId(2), MetricId::METX, {}});
  EXPECT_EQ(sel.path.links, (std::vector<mm::LinkId>{0}));
}

TEST(SelectRoute, EdrAndEtpMaximize) {
  // Direct slow link versus a two-hop fast path sharing one contention domain.
  auto g = topo_of(3, {L(0, 2), L(0, 1), L(1, 2)});
  std::vector<mm::LinkEstimate> e{est(1, 1, 1e6), est(1, 1, 11e6), est(1, 1, 11e6)};
  mm::TopologySpec s = mmtest::spec_from(g);
  s.links[0].nominal_rate_bps = 1e6;
  s.links[1].nominal_rate_bps = s.links[2].nominal_rate_bps = 11e6;
  auto topo = mm::build_topology(s);
  mm::RoutingContext ctx(topo, e);
  auto etp = mm::select_route(ctx, {NodeId(0), NodeId(2), MetricId::ETP, {}});
  EXPECT_EQ(etp.path.links, (std::vector<mm::LinkId>{1, 2}));
  EXPECT_REL(etp.value.value(), 5.5e6, 1e-12);
  auto edr = mm::select_route(ctx, {NodeId(0), NodeId(2), MetricId::EDR, {}});
  EXPECT_EQ(edr.path.links, (std::vector<mm::LinkId>{1, 2}));
}
