#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "meshmetrics/core.hpp"
#include "meshmetrics/error.hpp"
#include "meshmetrics/linksim.hpp"
#include "meshmetrics/metrics.hpp"

namespace meshmetrics {

/// Per-link cost indexed by LinkId; nullopt marks a pruned link.
using LinkCosts = std::vector<std::optional<double>>;

struct Route {
  Path path;
  double cost = 0.0;
};

namespace detail {

struct Label {
  double cost = 0.0;
  std::vector<NodeId> nodes;
  std::vector<LinkId> links;

  std::size_t hops() const noexcept { return links.size(); }
};

/// Route preference: metric value under `dir`, then fewer hops, then the
/// lexicographically smaller node sequence.
inline bool preferred(double cost_a, const std::vector<NodeId>& nodes_a, double cost_b,
                      const std::vector<NodeId>& nodes_b, Direction dir) {
  if (cost_a != cost_b) return dir == Direction::Minimize ? cost_a < cost_b : cost_a > cost_b;
  if (nodes_a.size() != nodes_b.size()) return nodes_a.size() < nodes_b.size();
  return nodes_a < nodes_b;
}

inline bool preferred(const Label& a, const Label& b) {
  return preferred(a.cost, a.nodes, b.cost, b.nodes, Direction::Minimize);
}

/// Label-setting search from `source`. `extend(prefix_cost, link)` must be
/// non-decreasing in prefix_cost and never below it; nullopt skips the link.
template <typename Extend>
std::vector<std::optional<Label>> label_setting(const Topology& topo, NodeId source,
                                                Extend&& extend) {
  const std::size_t n = topo.node_count();
  std::vector<std::optional<Label>> best(n);
  std::vector<bool> done(n, false);
  best[topo.index_of(source)] = Label{0.0, {source}, {}};

  for (;;) {
    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < n; ++i) {
      if (done[i] || !best[i]) continue;
      if (!pick || preferred(*best[i], *best[*pick])) pick = i;
    }
    if (!pick) break;
    done[*pick] = true;
    const Label& current = *best[*pick];
    for (LinkId id : topo.out_links(topo.nodes()[*pick])) {
      const Link& l = topo.links()[id];
      const std::size_t v = topo.index_of(l.to);
      if (done[v]) continue;
      std::optional<double> cost = extend(current.cost, id);
      if (!cost) continue;
      Label candidate{*cost, current.nodes, current.links};
      candidate.nodes.push_back(l.to);
      candidate.links.push_back(id);
      if (!best[v] || preferred(candidate, *best[v])) best[v] = std::move(candidate);
    }
  }
  return best;
}

inline void check_endpoints(const Topology& topo, NodeId source, NodeId destination) {
  require(topo.contains(source), Errc::UnknownNode, "source " + std::to_string(source.value));
  require(topo.contains(destination), Errc::UnknownNode,
          "destination " + std::to_string(destination.value));
  require(source != destination, Errc::InvalidArgument, "source equals destination");
}

inline Route finish(const Topology& topo, const std::vector<std::optional<Label>>& labels,
                    NodeId source, NodeId destination) {
  const auto& label = labels[topo.index_of(destination)];
  require(label.has_value(), Errc::NoRoute,
          std::to_string(source.value) + " -> " + std::to_string(destination.value));
  return Route{Path{label->links}, label->cost};
}

}  // namespace detail

/// Minimum-sum route. Costs must be finite and non-negative; pruned links are skipped.
inline Route shortest_path_additive(const Topology& topo, const LinkCosts& costs,
                                    NodeId source, NodeId destination) {
  detail::check_endpoints(topo, source, destination);
  require(costs.size() == topo.link_count(), Errc::InvalidArgument, "one cost per link");
  for (const auto& c : costs) {
    require(!c || (std::isfinite(*c) && *c >= 0), Errc::InvalidArgument,
            "link costs must be finite and non-negative");
  }
  auto labels = detail::label_setting(
      topo, source, [&](double prefix, LinkId id) -> std::optional<double> {
        if (!costs[id]) return std::nullopt;
        return prefix + *costs[id];
      });
  return detail::finish(topo, labels, source, destination);
}

/// Evaluates a complete path; nullopt rejects it.
using PathEvaluator = std::function<std::optional<double>(const Path&)>;

inline constexpr std::size_t kExhaustiveMaxNodes = 12;
inline constexpr std::uint32_t kExhaustiveMaxHops = 10;
inline constexpr std::size_t kExhaustiveMaxPaths = 5'000'000;

/// Enumerates every simple path of at most `max_hops` links and keeps the best
/// under `direction`.
inline Route best_path_exhaustive(const Topology& topo, NodeId source, NodeId destination,
                                  std::uint32_t max_hops, const PathEvaluator& evaluate,
                                  Direction direction) {
  detail::check_endpoints(topo, source, destination);
  require(max_hops >= 1, Errc::InvalidArgument, "max_hops must be at least 1");
  require(topo.node_count() <= kExhaustiveMaxNodes && max_hops <= kExhaustiveMaxHops,
          Errc::SearchBudgetExceeded,
          "exhaustive search limited to " + std::to_string(kExhaustiveMaxNodes) + " nodes and " +
              std::to_string(kExhaustiveMaxHops) + " hops");

  std::optional<Route> best;
  std::vector<NodeId> best_nodes;
  std::vector<bool> on_path(topo.node_count(), false);
  std::vector<NodeId> nodes{source};
  Path path;
  std::size_t visited = 0;

  std::function<void(NodeId)> walk = [&](NodeId u) {
    on_path[topo.index_of(u)] = true;
    for (LinkId id : topo.out_links(u)) {
      const NodeId v = topo.links()[id].to;
      if (on_path[topo.index_of(v)]) continue;
      path.links.push_back(id);
      nodes.push_back(v);
      require(++visited <= kExhaustiveMaxPaths, Errc::SearchBudgetExceeded,
              "more than " + std::to_string(kExhaustiveMaxPaths) + " partial paths");
      if (v == destination) {
        if (auto value = evaluate(path)) {
          if (!best || detail::preferred(*value, nodes, best->cost, best_nodes, direction)) {
            best = Route{path, *value};
            best_nodes = nodes;
          }
        }
      } else if (path.hops() < max_hops) {
        walk(v);
      }
      path.links.pop_back();
      nodes.pop_back();
    }
    on_path[topo.index_of(u)] = false;
  };
  walk(source);

  require(best.has_value(), Errc::NoRoute,
          std::to_string(source.value) + " -> " + std::to_string(destination.value));
  return *best;
}

/// Minimum expected energy route under C(s, v) = (C(s, u) + W(u, v)) / (1 - p(u, v)).
/// With unit energies this minimises the multicast ETX of the path.
inline Route best_path_recursive(const Topology& topo, const LinkCosts& error_rates,
                                 std::span<const double> energies, NodeId source,
                                 NodeId destination) {
  detail::check_endpoints(topo, source, destination);
  require(error_rates.size() == topo.link_count(), Errc::InvalidArgument,
          "one error rate per link");
  require(energies.empty() || energies.size() == topo.link_count(), Errc::InvalidArgument,
          "one energy per link");
  auto labels = detail::label_setting(
      topo, source, [&](double prefix, LinkId id) -> std::optional<double> {
        if (!error_rates[id] || *error_rates[id] >= 1.0) return std::nullopt;
        const double energy = energies.empty() ? 1.0 : energies[id];
        return extend_energy_cost(prefix, {*error_rates[id], energy});
      });
  return detail::finish(topo, labels, source, destination);
}

/// All-pairs minimum path ETX ("ETX distance"). Absent entries mean disconnected.
class DistanceTable {
 public:
  std::optional<double> distance(NodeId from, NodeId to) const {
    if (from == to) return 0.0;
    auto it = table_.find({from, to});
    if (it == table_.end()) return std::nullopt;
    return it->second;
  }

  void set(NodeId from, NodeId to, double delta) { table_[{from, to}] = delta; }
  std::size_t size() const noexcept { return table_.size(); }

 private:
  std::map<std::pair<NodeId, NodeId>, double> table_;
};

inline DistanceTable etx_distance_table(const Topology& topo, const LinkCosts& link_etx) {
  require(link_etx.size() == topo.link_count(), Errc::InvalidArgument, "one ETX per link");
  DistanceTable table;
  for (NodeId source : topo.nodes()) {
    auto labels = detail::label_setting(
        topo, source, [&](double prefix, LinkId id) -> std::optional<double> {
          if (!link_etx[id]) return std::nullopt;
          return prefix + *link_etx[id];
        });
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] && topo.nodes()[i] != source) table.set(source, topo.nodes()[i], labels[i]->cost);
    }
  }
  return table;
}

enum class GreedyRule {
  LinkPlusDistance,  ///< next hop minimises ETX(u, v) + delta(v, d)
  NeighborDistance,  ///< next hop minimises delta(v, d)
};

/// Hop-by-hop forwarding on ETX distances. Every hop must strictly reduce the
/// distance to the destination.
inline Path greedy_forward(const Topology& topo, const DistanceTable& table,
                           const LinkCosts& link_etx, NodeId source, NodeId destination,
                           GreedyRule rule = GreedyRule::LinkPlusDistance) {
  detail::check_endpoints(topo, source, destination);
  require(link_etx.size() == topo.link_count(), Errc::InvalidArgument, "one ETX per link");
  require(table.distance(source, destination).has_value(), Errc::NoRoute,
          std::to_string(source.value) + " -> " + std::to_string(destination.value));

  Path path;
  NodeId u = source;
  while (u != destination) {
    const double here = *table.distance(u, destination);
    std::optional<LinkId> next;
    double next_score = 0.0;
    for (LinkId id : topo.out_links(u)) {
      if (!link_etx[id]) continue;
      const NodeId v = topo.links()[id].to;
      auto remaining = table.distance(v, destination);
      if (!remaining) continue;
      const double score =
          rule == GreedyRule::LinkPlusDistance ? *link_etx[id] + *remaining : *remaining;
      const bool better = !next || score < next_score ||
                          (score == next_score && v < topo.links()[*next].to);
      if (better) {
        next = id;
        next_score = score;
      }
    }
    require(next.has_value(), Errc::LocalMinimum, "no usable neighbour");
    const NodeId v = topo.links()[*next].to;
    require(*table.distance(v, destination) < here, Errc::LocalMinimum,
            "no neighbour of " + std::to_string(u.value) + " is closer to the destination");
    path.links.push_back(*next);
    u = v;
  }
  return path;
}

// ---------------------------------------------------------------------------
// Metric-driven route selection

struct RouteRequest {
  NodeId source;
  NodeId destination;
  MetricId metric = MetricId::ETX;
  MetricConfig config;
};

struct RouteSelection {
  Path path;
  MetricValue value;
};

/// Measurements and side information shared by all route computations over one
/// topology. Interference sets are computed once.
class RoutingContext {
 public:
  /// `energies` and `contention_degrees` are per link; empty means unit energy and a
  /// static contention degree of min(1, offered_load) respectively.
  RoutingContext(const Topology& topo, std::span<const LinkEstimate> estimates,
                 std::vector<double> energies = {}, std::vector<double> contention_degrees = {},
                 double offered_load = 1.0)
      : topo_(topo),
        estimates_(estimates.begin(), estimates.end()),
        energies_(std::move(energies)),
        tcd_(std::move(contention_degrees)),
        offered_load_(offered_load) {
    require(estimates_.size() == topo.link_count(), Errc::InvalidArgument,
            "estimates must cover every link");
    require(energies_.empty() || energies_.size() == topo.link_count(), Errc::InvalidArgument,
            "one energy per link");
    require(tcd_.empty() || tcd_.size() == topo.link_count(), Errc::InvalidArgument,
            "one contention degree per link");
    require(offered_load >= 0, Errc::InvalidArgument, "offered load must be non-negative");
    interference_.reserve(topo.link_count());
    for (LinkId id = 0; id < topo.link_count(); ++id) {
      interference_.push_back(interference_set(topo, id));
    }
  }

  const Topology& topology() const noexcept { return topo_; }
  const LinkEstimate& estimate(LinkId id) const { return estimates_.at(id); }
  const std::vector<LinkId>& interference(LinkId id) const { return interference_.at(id); }

  /// Links with zero delivery in either direction are removed from routing.
  bool live(LinkId id) const {
    const auto& e = estimate(id);
    return e.d_f > 0 && e.d_r > 0;
  }

  double link_etx(LinkId id) const { return etx(estimate(id).d_f, estimate(id).d_r).value(); }

  double link_ett(LinkId id, const MetricConfig& c) const {
    return ett(link_etx(id), c.packet_bits, estimate(id).bandwidth_bps).value();
  }

  double energy(LinkId id) const { return energies_.empty() ? 1.0 : energies_[id]; }

  double contention_degree(LinkId id) const {
    return tcd_.empty() ? std::min(1.0, offered_load_) : tcd_[id];
  }

  LinkCosts etx_costs() const {
    LinkCosts costs(topo_.link_count());
    for (LinkId id = 0; id < topo_.link_count(); ++id) {
      if (live(id)) costs[id] = link_etx(id);
    }
    return costs;
  }

  /// Cost of a link under an additive metric; nullopt when the link is pruned.
  std::optional<double> additive_cost(MetricId metric, const MetricConfig& c, LinkId id) const {
    if (!live(id)) return std::nullopt;
    const LinkEstimate& e = estimate(id);
    const Link& l = topo_.link(id);
    switch (metric) {
      case MetricId::HopCount: return 1.0;
      case MetricId::ETX:
      case MetricId::ETXDistance: return link_etx(id);
      case MetricId::mETX: return modified_etx(e.mu, e.sigma2).value();
      case MetricId::ENT: {
        const EntResult r = ent(e.mu, e.sigma2, c);
        if (!r.admissible) return std::nullopt;
        return r.value.value();
      }
      case MetricId::ETT: return link_ett(id, c);
      case MetricId::iAWARE: return iaware(link_ett(id, c), e.snr, e.sinr).value();
      case MetricId::DBETX:
        try {
          return dbetx(e.snir_samples, c.packet_bits, c.max_retry).value();
        } catch (const Error& err) {
          if (err.code() == Errc::FullOutage) return std::nullopt;
          throw;
        }
      case MetricId::MTM:
        return medium_time({l.overhead_s, e.bandwidth_bps, e.d_f * e.d_r}, c.packet_bits);
      case MetricId::EstdTT: return estd_tt(link_etx(id), e.bandwidth_bps, c.fixed_packet_bits).value();
      case MetricId::EETT: {
        double total = 0.0;
        for (LinkId other : interference(id)) {
          if (live(other)) total += link_ett(other, c);
        }
        return total;
      }
      default: break;
    }
    fail(Errc::UnknownMetric, std::string(metric_name(metric)) + " is not additive");
  }

  /// Value of `metric` on a complete path; nullopt when the path uses a pruned link.
  std::optional<MetricValue> path_value(MetricId metric, const MetricConfig& c,
                                        const Path& path) const {
    if (path.empty()) fail(Errc::EmptyPath, "path has no links");
    for (LinkId id : path.links) {
      if (!live(id)) return std::nullopt;
    }
    switch (metric) {
      case MetricId::HopCount:
      case MetricId::ETX:
      case MetricId::ETXDistance:
      case MetricId::mETX:
      case MetricId::ENT:
      case MetricId::ETT:
      case MetricId::iAWARE:
      case MetricId::DBETX:
      case MetricId::MTM:
      case MetricId::EstdTT:
      case MetricId::EETT: {
        double total = 0.0;
        for (LinkId id : path.links) {
          auto cost = additive_cost(metric, c, id);
          if (!cost) return std::nullopt;
          total += *cost;
        }
        return MetricValue(metric, total);
      }
      case MetricId::WCETT:
      case MetricId::MCR: {
        std::vector<ChannelHop> hops;
        for (LinkId id : path.links) hops.push_back({link_ett(id, c), topo_.link(id).channel});
        if (metric == MetricId::WCETT) return wcett(hops, topo_.channel_count(), c.beta);
        return mcr(hops, topo_.channel_count(), c.beta, c.switching_delay_s, c.interface_usage);
      }
      case MetricId::MIC: {
        std::optional<double> min_ett;
        for (LinkId id = 0; id < topo_.link_count(); ++id) {
          if (!live(id)) continue;
          const double t = link_ett(id, c);
          if (!min_ett || t < *min_ett) min_ett = t;
        }
        std::vector<MicHop> hops;
        for (LinkId id : path.links) {
          hops.push_back({link_ett(id, c), estimate(id).interferer_count, topo_.link(id).channel});
        }
        return mic(hops, topo_.node_count(), *min_ett, c.w1, c.w2);
      }
      case MetricId::EDR: {
        std::optional<MetricValue> worst;
        for (LinkId id : path.links) {
          std::vector<double> degrees;
          for (LinkId other : path.links) {
            if (contends(id, other)) degrees.push_back(contention_degree(other));
          }
          MetricValue v = edr(topo_.link(id).nominal_rate_bps, link_ett(id, c), degrees);
          if (!worst || v.value() < worst->value()) worst = v;
        }
        return worst;
      }
      case MetricId::ETP: {
        std::vector<EtpHop> hops;
        for (std::size_t i = 0; i < path.hops(); ++i) {
          const LinkId id = path.links[i];
          EtpHop hop{topo_.link(id).nominal_rate_bps, estimate(id).d_f, estimate(id).d_r, {}};
          for (std::size_t j = 0; j < path.hops(); ++j) {
            if (contends(id, path.links[j])) hop.contenders.push_back(j);
          }
          hops.push_back(std::move(hop));
        }
        return etp(hops).path;
      }
      case MetricId::METX: {
        std::vector<double> rates;
        for (LinkId id : path.links) rates.push_back(1.0 - estimate(id).d_f * estimate(id).d_r);
        return multicast_etx(rates);
      }
      case MetricId::EnergyCost: {
        std::vector<EnergyHop> hops;
        for (LinkId id : path.links) {
          hops.push_back({1.0 - estimate(id).d_f * estimate(id).d_r, energy(id)});
        }
        return energy_cost(hops);
      }
    }
    fail(Errc::UnknownMetric, "metric id " + std::to_string(static_cast<int>(metric)));
  }

  /// True when `other` lies in the interference set of `id`.
  bool contends(LinkId id, LinkId other) const {
    const auto& set = interference(id);
    return std::binary_search(set.begin(), set.end(), other);
  }

 private:
  const Topology& topo_;
  std::vector<LinkEstimate> estimates_;
  std::vector<double> energies_;
  std::vector<double> tcd_;
  double offered_load_;
  std::vector<std::vector<LinkId>> interference_;
};

enum class SearchKind { Additive, Exhaustive, Recursive, Greedy };

constexpr SearchKind search_kind(MetricId metric) {
  switch (metric) {
    case MetricId::WCETT:
    case MetricId::MCR:
    case MetricId::ETP:
    case MetricId::EDR:
    case MetricId::MIC:
    case MetricId::EETT: return SearchKind::Exhaustive;
    case MetricId::METX:
    case MetricId::EnergyCost: return SearchKind::Recursive;
    case MetricId::ETXDistance: return SearchKind::Greedy;
    default: return SearchKind::Additive;
  }
}

inline RouteSelection select_route(const RoutingContext& ctx, const RouteRequest& request) {
  const Topology& topo = ctx.topology();
  validate_config(request.config);
  bool known = false;
  for (MetricId id : kAllMetrics) known = known || id == request.metric;
  require(known, Errc::UnknownMetric,
          "metric id " + std::to_string(static_cast<int>(request.metric)));
  detail::check_endpoints(topo, request.source, request.destination);

  Path path;
  switch (search_kind(request.metric)) {
    case SearchKind::Additive: {
      LinkCosts costs(topo.link_count());
      for (LinkId id = 0; id < topo.link_count(); ++id) {
        costs[id] = ctx.additive_cost(request.metric, request.config, id);
      }
      path = shortest_path_additive(topo, costs, request.source, request.destination).path;
      break;
    }
    case SearchKind::Exhaustive: {
      auto evaluate = [&](const Path& p) -> std::optional<double> {
        auto v = ctx.path_value(request.metric, request.config, p);
        if (!v) return std::nullopt;
        return v->value();
      };
      path = best_path_exhaustive(topo, request.source, request.destination,
                                  request.config.max_hops, evaluate,
                                  metric_direction(request.metric))
                 .path;
      break;
    }
    case SearchKind::Recursive: {
      LinkCosts rates(topo.link_count());
      std::vector<double> energies(topo.link_count(), 1.0);
      for (LinkId id = 0; id < topo.link_count(); ++id) {
        if (ctx.live(id)) rates[id] = 1.0 - ctx.estimate(id).d_f * ctx.estimate(id).d_r;
        if (request.metric == MetricId::EnergyCost) energies[id] = ctx.energy(id);
      }
      path = best_path_recursive(topo, rates, energies, request.source, request.destination).path;
      break;
    }
    case SearchKind::Greedy: {
      const LinkCosts costs = ctx.etx_costs();
      const DistanceTable table = etx_distance_table(topo, costs);
      path = greedy_forward(topo, table, costs, request.source, request.destination);
      break;
    }
  }
  validate_path(topo, path);
  auto value = ctx.path_value(request.metric, request.config, path);
  require(value.has_value(), Errc::NoRoute, "selected path has no metric value");
  return {std::move(path), *value};
}

}  // namespace meshmetrics
