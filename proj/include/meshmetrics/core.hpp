#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "meshmetrics/error.hpp"

namespace meshmetrics {

/// Small strongly-typed integer identifier.
template <typename Tag>
struct StrongId {
  std::uint32_t value = 0;

  constexpr StrongId() = default;
  constexpr explicit StrongId(std::uint32_t v) : value(v) {}

  friend constexpr auto operator<=>(StrongId, StrongId) = default;
};

using NodeId = StrongId<struct NodeTag>;
using ChannelId = StrongId<struct ChannelTag>;

/// Index of a link inside its Topology.
using LinkId = std::size_t;

/// Directed radio link.
struct Link {
  NodeId from;
  NodeId to;
  ChannelId channel;
  double nominal_rate_bps = 1e6;
  double overhead_s = 0.0;  ///< fixed MAC/PHY cost per frame

  friend bool operator==(const Link&, const Link&) = default;
};

struct TopologySpec {
  std::vector<NodeId> nodes;
  std::vector<Link> links;
  std::uint32_t channel_count = 1;
  std::uint32_t interference_range_hops = 1;
};

/// Ordered sequence of links, source to destination.
struct Path {
  std::vector<LinkId> links;

  bool empty() const noexcept { return links.empty(); }
  std::size_t hops() const noexcept { return links.size(); }

  friend bool operator==(const Path&, const Path&) = default;
};

class Topology;
Topology build_topology(const TopologySpec& spec);

/// Validated, immutable network graph. Hop distances between all node pairs
/// (undirected, ignoring channels) are computed once at construction.
class Topology {
 public:
  static constexpr std::uint32_t kUnreachable = std::numeric_limits<std::uint32_t>::max();

  const std::vector<NodeId>& nodes() const noexcept { return nodes_; }
  const std::vector<Link>& links() const noexcept { return links_; }
  const Link& link(LinkId id) const {
    require(id < links_.size(), Errc::UnknownLink, "link id " + std::to_string(id));
    return links_[id];
  }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t link_count() const noexcept { return links_.size(); }
  std::uint32_t channel_count() const noexcept { return channel_count_; }
  std::uint32_t interference_range_hops() const noexcept { return range_hops_; }

  bool contains(NodeId node) const noexcept { return index_of_(node).has_value(); }

  std::size_t index_of(NodeId node) const {
    auto idx = index_of_(node);
    require(idx.has_value(), Errc::UnknownNode, "node " + std::to_string(node.value));
    return *idx;
  }

  std::optional<LinkId> find_link(NodeId from, NodeId to, ChannelId channel) const noexcept {
    for (LinkId id = 0; id < links_.size(); ++id) {
      const Link& l = links_[id];
      if (l.from == from && l.to == to && l.channel == channel) return id;
    }
    return std::nullopt;
  }

  /// Links leaving `node`, in link-id order.
  const std::vector<LinkId>& out_links(NodeId node) const { return out_[index_of(node)]; }

  /// Undirected hop distance ignoring channels; kUnreachable when disconnected.
  std::uint32_t hop_distance(NodeId a, NodeId b) const {
    return hops_[index_of(a) * nodes_.size() + index_of(b)];
  }

 private:
  friend Topology build_topology(const TopologySpec& spec);

  std::optional<std::size_t> index_of_(NodeId node) const noexcept {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), node);
    if (it == nodes_.end() || *it != node) return std::nullopt;
    return static_cast<std::size_t>(it - nodes_.begin());
  }

  std::vector<NodeId> nodes_;
  std::vector<Link> links_;
  std::uint32_t channel_count_ = 1;
  std::uint32_t range_hops_ = 1;
  std::vector<std::vector<LinkId>> out_;
  std::vector<std::uint32_t> hops_;
};

inline Topology build_topology(const TopologySpec& spec) {
  require(spec.channel_count >= 1, Errc::InvalidArgument, "channel_count must be at least 1");
  Topology topo;
  topo.nodes_ = spec.nodes;
  std::sort(topo.nodes_.begin(), topo.nodes_.end());
  auto dup = std::adjacent_find(topo.nodes_.begin(), topo.nodes_.end());
  require(dup == topo.nodes_.end(), Errc::DuplicateNode,
          dup == topo.nodes_.end() ? "" : "node " + std::to_string(dup->value));
  topo.channel_count_ = spec.channel_count;
  topo.range_hops_ = spec.interference_range_hops;

  std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> seen;
  for (const Link& l : spec.links) {
    const std::string name =
        std::to_string(l.from.value) + "->" + std::to_string(l.to.value) + " ch" +
        std::to_string(l.channel.value);
    require(topo.contains(l.from) && topo.contains(l.to), Errc::DanglingEndpoint, name);
    require(l.from != l.to, Errc::InvalidLink, name + ": self loop");
    require(l.channel.value < spec.channel_count, Errc::ChannelOutOfRange, name);
    require(std::isfinite(l.nominal_rate_bps) && l.nominal_rate_bps > 0, Errc::InvalidLink,
            name + ": nominal rate must be positive");
    require(std::isfinite(l.overhead_s) && l.overhead_s >= 0, Errc::InvalidLink,
            name + ": overhead must be non-negative");
    require(seen.emplace(l.from.value, l.to.value, l.channel.value).second, Errc::DuplicateLink,
            name);
    topo.links_.push_back(l);
  }

  const std::size_t n = topo.nodes_.size();
  topo.out_.assign(n, {});
  std::vector<std::vector<std::size_t>> adjacent(n);
  for (LinkId id = 0; id < topo.links_.size(); ++id) {
    const std::size_t a = topo.index_of(topo.links_[id].from);
    const std::size_t b = topo.index_of(topo.links_[id].to);
    topo.out_[a].push_back(id);
    adjacent[a].push_back(b);
    adjacent[b].push_back(a);
  }

  topo.hops_.assign(n * n, Topology::kUnreachable);
  for (std::size_t src = 0; src < n; ++src) {
    std::uint32_t* row = topo.hops_.data() + src * n;
    std::queue<std::size_t> frontier;
    row[src] = 0;
    frontier.push(src);
    while (!frontier.empty()) {
      const std::size_t u = frontier.front();
      frontier.pop();
      for (std::size_t v : adjacent[u]) {
        if (row[v] == Topology::kUnreachable) {
          row[v] = row[u] + 1;
          frontier.push(v);
        }
      }
    }
  }
  return topo;
}

/// Links on the same channel as `link` whose nearer endpoint lies within the
/// topology's interference range (in hops) of either endpoint of `link`.
/// The result is sorted and always contains `link` itself.
inline std::vector<LinkId> interference_set(const Topology& topo, LinkId link) {
  const Link& self = topo.link(link);
  const std::uint32_t range = topo.interference_range_hops();
  std::vector<LinkId> result;
  for (LinkId other = 0; other < topo.link_count(); ++other) {
    if (other == link) {
      result.push_back(other);
      continue;
    }
    const Link& l = topo.links()[other];
    if (l.channel != self.channel) continue;
    const std::uint32_t nearest = std::min({topo.hop_distance(l.from, self.from),
                                            topo.hop_distance(l.from, self.to),
                                            topo.hop_distance(l.to, self.from),
                                            topo.hop_distance(l.to, self.to)});
    if (nearest <= range) result.push_back(other);
  }
  return result;
}

inline std::vector<LinkId> interference_set(const Topology& topo, const Link& link) {
  auto id = topo.find_link(link.from, link.to, link.channel);
  require(id.has_value(), Errc::UnknownLink,
          std::to_string(link.from.value) + "->" + std::to_string(link.to.value));
  return interference_set(topo, *id);
}

/// Distinct nodes, other than the link's own endpoints, that terminate a link
/// in the interference set. Sorted.
inline std::vector<NodeId> interfering_nodes(const Topology& topo, LinkId link) {
  const Link& self = topo.link(link);
  std::vector<NodeId> nodes;
  for (LinkId other : interference_set(topo, link)) {
    for (NodeId n : {topo.links()[other].from, topo.links()[other].to}) {
      if (n != self.from && n != self.to) nodes.push_back(n);
    }
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

/// Node sequence visited by a path (hops + 1 entries). Assumes contiguity.
inline std::vector<NodeId> path_nodes(const Topology& topo, const Path& path) {
  std::vector<NodeId> seq;
  if (path.empty()) return seq;
  seq.reserve(path.hops() + 1);
  seq.push_back(topo.link(path.links.front()).from);
  for (LinkId id : path.links) seq.push_back(topo.link(id).to);
  return seq;
}

/// Checks membership, contiguity and simplicity; throws on the first violation.
inline void validate_path(const Topology& topo, const Path& path) {
  require(!path.empty(), Errc::EmptyPath, "path has no links");
  for (LinkId id : path.links) {
    require(id < topo.link_count(), Errc::UnknownLink, "link id " + std::to_string(id));
  }
  for (std::size_t i = 1; i < path.hops(); ++i) {
    const Link& prev = topo.links()[path.links[i - 1]];
    const Link& next = topo.links()[path.links[i]];
    require(prev.to == next.from, Errc::Discontiguous,
            "hop " + std::to_string(i - 1) + " ends at " + std::to_string(prev.to.value) +
                " but hop " + std::to_string(i) + " starts at " +
                std::to_string(next.from.value));
  }
  auto seq = path_nodes(topo, path);
  std::sort(seq.begin(), seq.end());
  auto dup = std::adjacent_find(seq.begin(), seq.end());
  require(dup == seq.end(), Errc::RepeatedNode,
          dup == seq.end() ? "" : "node " + std::to_string(dup->value));
}

/// Resolves explicit links to ids, then validates. Unknown links throw UnknownLink.
inline Path make_path(const Topology& topo, std::span<const Link> links) {
  Path path;
  for (const Link& l : links) {
    auto id = topo.find_link(l.from, l.to, l.channel);
    require(id.has_value(), Errc::UnknownLink,
            std::to_string(l.from.value) + "->" + std::to_string(l.to.value));
    path.links.push_back(*id);
  }
  validate_path(topo, path);
  return path;
}

// ---------------------------------------------------------------------------
// Metric identity

enum class MetricId {
  HopCount,
  ETX,
  mETX,
  ENT,
  ETT,
  WCETT,
  MIC,
  iAWARE,
  DBETX,
  EETT,
  EDR,
  ETP,
  MCR,
  MTM,
  EstdTT,
  ETXDistance,
  METX,
  EnergyCost,
};

inline constexpr MetricId kAllMetrics[] = {
    MetricId::HopCount, MetricId::ETX,   MetricId::mETX,        MetricId::ENT,
    MetricId::ETT,      MetricId::WCETT, MetricId::MIC,         MetricId::iAWARE,
    MetricId::DBETX,    MetricId::EETT,  MetricId::EDR,         MetricId::ETP,
    MetricId::MCR,      MetricId::MTM,   MetricId::EstdTT,      MetricId::ETXDistance,
    MetricId::METX,     MetricId::EnergyCost,
};

constexpr std::string_view metric_name(MetricId id) noexcept {
  switch (id) {
    case MetricId::HopCount: return "hop_count";
    case MetricId::ETX: return "etx";
    case MetricId::mETX: return "metx";
    case MetricId::ENT: return "ent";
    case MetricId::ETT: return "ett";
    case MetricId::WCETT: return "wcett";
    case MetricId::MIC: return "mic";
    case MetricId::iAWARE: return "iaware";
    case MetricId::DBETX: return "dbetx";
    case MetricId::EETT: return "eett";
    case MetricId::EDR: return "edr";
    case MetricId::ETP: return "etp";
    case MetricId::MCR: return "mcr";
    case MetricId::MTM: return "mtm";
    case MetricId::EstdTT: return "estdtt";
    case MetricId::ETXDistance: return "etx_distance";
    case MetricId::METX: return "multicast_etx";
    case MetricId::EnergyCost: return "energy_cost";
  }
  return "unknown";
}

inline MetricId parse_metric(std::string_view name) {
  for (MetricId id : kAllMetrics) {
    if (metric_name(id) == name) return id;
  }
  fail(Errc::UnknownMetric, std::string(name));
}

enum class Direction { Minimize, Maximize };

constexpr Direction metric_direction(MetricId id) noexcept {
  return (id == MetricId::EDR || id == MetricId::ETP) ? Direction::Maximize
                                                       : Direction::Minimize;
}

/// Scalar metric result. Construction enforces finite, non-negative values and
/// the metric's fixed optimization direction.
class MetricValue {
 public:
  MetricValue(MetricId id, double value) : id_(id), value_(value) {
    require(std::isfinite(value) && value >= 0, Errc::InvalidArgument,
            std::string(metric_name(id)) + " value must be finite and non-negative");
  }

  MetricId id() const noexcept { return id_; }
  double value() const noexcept { return value_; }
  Direction direction() const noexcept { return metric_direction(id_); }

  /// True when this value is strictly preferable to `other` under the direction.
  bool better_than(const MetricValue& other) const noexcept {
    return direction() == Direction::Minimize ? value_ < other.value_ : value_ > other.value_;
  }

  friend bool operator==(const MetricValue&, const MetricValue&) = default;

 private:
  MetricId id_;
  double value_;
};

/// Bit error rate of coherent binary signalling at linear SNIR.
inline double coherent_bit_error_rate(double snir) {
  return 0.5 * std::erfc(std::sqrt(std::max(snir, 0.0)));
}

/// Success probability of a `bits`-long frame at linear SNIR.
inline double frame_success_probability(double snir, std::uint32_t bits) {
  return std::pow(1.0 - coherent_bit_error_rate(snir), static_cast<double>(bits));
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace meshmetrics
