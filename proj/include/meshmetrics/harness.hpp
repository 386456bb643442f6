#pragma once

#include <algorithm>
#include <cstdint>
#include <future>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "meshmetrics/core.hpp"
#include "meshmetrics/error.hpp"
#include "meshmetrics/linksim.hpp"
#include "meshmetrics/metrics.hpp"
#include "meshmetrics/random.hpp"
#include "meshmetrics/routing.hpp"

namespace meshmetrics {

struct FlowSpec {
  NodeId source;
  NodeId destination;
  std::uint32_t packets = 1000;
  std::uint32_t packet_bits = 8192;
  double offered_load = 1.0;

  friend bool operator==(const FlowSpec&, const FlowSpec&) = default;
};

struct MetricSpec {
  MetricId id = MetricId::ETX;
  MetricConfig config;

  friend bool operator==(const MetricSpec&, const MetricSpec&) = default;
};

struct Scenario {
  TopologySpec topology;
  std::vector<LinkTruth> truths;  ///< one per link, same order
  std::vector<double> energies;   ///< per-link transmission energy; empty means unit
  MeasurementConfig measurement;
  std::vector<MetricSpec> metrics;
  FlowSpec flow;
  std::uint64_t seed = 1;
};

inline bool operator==(const TopologySpec& a, const TopologySpec& b) {
  return a.nodes == b.nodes && a.links == b.links && a.channel_count == b.channel_count &&
         a.interference_range_hops == b.interference_range_hops;
}

inline bool operator==(const Scenario& a, const Scenario& b) {
  return a.topology == b.topology && a.truths == b.truths && a.energies == b.energies &&
         a.measurement == b.measurement && a.metrics == b.metrics && a.flow == b.flow &&
         a.seed == b.seed;
}

/// Frame size of a link-layer acknowledgement.
inline constexpr std::uint32_t kAckBits = 112;

/// Throws InvariantViolation (or the core error) when the scenario is unusable.
inline Topology validate_scenario(const Scenario& s) {
  Topology topo = build_topology(s.topology);
  require(s.truths.size() == topo.link_count(), Errc::InvariantViolation,
          "need one link truth per link");
  for (const LinkTruth& t : s.truths) validate_truth(t);
  require(s.energies.empty() || s.energies.size() == topo.link_count(),
          Errc::InvariantViolation, "need one energy per link");
  for (double e : s.energies) {
    require(std::isfinite(e) && e >= 0, Errc::InvariantViolation, "energy must be >= 0");
  }
  require(s.measurement.window_s >= 1, Errc::InvariantViolation, "window_s must be >= 1");
  require(s.measurement.duration_s >= s.measurement.window_s, Errc::InvariantViolation,
          "duration_s must be >= window_s");
  require(s.measurement.duration_s >= 2, Errc::InvariantViolation, "duration_s must be >= 2");
  require(s.measurement.probe_bits >= 1 && s.measurement.sinr_samples >= 1 &&
              s.measurement.pair_samples >= 1 && s.measurement.large_packet_bits > 0 &&
              s.measurement.pair_jitter_s >= 0,
          Errc::InvariantViolation, "measurement parameters must be positive");
  for (const MetricSpec& m : s.metrics) validate_config(m.config);
  require(topo.contains(s.flow.source), Errc::InvariantViolation, "flow source not in topology");
  require(topo.contains(s.flow.destination), Errc::InvariantViolation,
          "flow destination not in topology");
  require(s.flow.source != s.flow.destination, Errc::InvariantViolation,
          "flow source equals destination");
  require(s.flow.packets >= 1, Errc::InvariantViolation, "flow needs at least one packet");
  require(s.flow.packet_bits >= 1, Errc::InvariantViolation, "packet_bits must be >= 1");
  require(std::isfinite(s.flow.offered_load) && s.flow.offered_load >= 0,
          Errc::InvariantViolation, "offered_load must be non-negative");
  return topo;
}

struct LinkAnt {
  LinkId link = 0;
  double ant = 0.0;  ///< transmission attempts per packet that entered the link

  friend bool operator==(const LinkAnt&, const LinkAnt&) = default;
};

struct FlowResult {
  std::uint64_t delivered = 0;
  std::uint64_t offered = 0;
  double availability = 0.0;
  std::vector<LinkAnt> ant_per_link;  ///< route order; links no packet reached are omitted
  double throughput_bps = 0.0;
  double busy_time_s = 0.0;
  Path route;

  double mean_ant() const {
    if (ant_per_link.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& a : ant_per_link) sum += a.ant;
    return sum / static_cast<double>(ant_per_link.size());
  }

  double total_ant() const {
    double sum = 0.0;
    for (const auto& a : ant_per_link) sum += a.ant;
    return sum;
  }

  friend bool operator==(const FlowResult&, const FlowResult&) = default;
};

/// Pushes the flow's packets along `route`. Each hop retries up to the link's
/// max_retry, and an attempt succeeds when both the data frame and its ACK
/// survive. Draws are keyed by (seed, link, packet, attempt), so routes sharing a
/// link see the same channel and the same random numbers.
inline FlowResult replay_flow(const Topology& topo, std::span<const LinkTruth> truths,
                              const Path& route, const FlowSpec& flow, std::uint64_t seed) {
  try {
    validate_path(topo, route);
  } catch (const Error& e) {
    fail(Errc::InvalidRoute, e.what());
  }
  require(truths.size() == topo.link_count(), Errc::InvalidArgument,
          "one truth per link required");
  const auto nodes = path_nodes(topo, route);
  require(nodes.front() == flow.source && nodes.back() == flow.destination,
          Errc::InvalidRoute, "route does not join the flow endpoints");
  require(flow.packet_bits >= 1, Errc::InvalidArgument, "packet_bits must be >= 1");

  struct Hop {
    LinkId link;
    std::uint32_t max_retry;
    double interference;
    double attempt_time_s;
    ChannelTrace forward;
    ChannelTrace reverse;
    std::uint64_t attempts = 0;
    std::uint64_t entered = 0;
  };
  std::vector<Hop> hops;
  hops.reserve(route.hops());
  for (LinkId id : route.links) {
    const LinkTruth& truth = truths[id];
    validate_truth(truth);
    const auto& is = interference_set(topo, id);
    const auto sharing = std::count_if(route.links.begin(), route.links.end(), [&](LinkId o) {
      return std::binary_search(is.begin(), is.end(), o);
    });
    const Link& l = topo.link(id);
    const double effective_rate = l.nominal_rate_bps / static_cast<double>(sharing);
    hops.push_back(Hop{id, truth.max_retry, interference_level(topo, truths, id),
                       flow.packet_bits / effective_rate + l.overhead_s,
                       ChannelTrace(truth, seed, id, false), ChannelTrace(truth, seed, id, true)});
  }

  FlowResult result;
  result.route = route;
  result.offered = flow.packets;
  for (std::uint64_t packet = 0; packet < flow.packets; ++packet) {
    bool alive = true;
    for (Hop& hop : hops) {
      ++hop.entered;
      const std::uint64_t stride = hop.max_retry + 1ULL;
      bool sent = false;
      for (std::uint64_t attempt = 0; attempt < stride && !sent; ++attempt) {
        const std::uint64_t slot = packet * stride + attempt;
        const double p = hop.forward.frame_success(slot, flow.packet_bits, hop.interference) *
                         hop.reverse.frame_success(slot, kAckBits, hop.interference);
        ++hop.attempts;
        result.busy_time_s += hop.attempt_time_s;
        sent = counter_uniform(seed, {hop.link, packet, attempt}) < p;
      }
      if (!sent) {
        alive = false;
        break;
      }
    }
    if (alive) ++result.delivered;
  }

  result.availability = static_cast<double>(result.delivered) / result.offered;
  for (const Hop& hop : hops) {
    if (hop.entered == 0) continue;
    result.ant_per_link.push_back(
        {hop.link, static_cast<double>(hop.attempts) / static_cast<double>(hop.entered)});
  }
  result.throughput_bps = result.busy_time_s > 0
                              ? static_cast<double>(result.delivered) * flow.packet_bits /
                                    result.busy_time_s
                              : 0.0;
  return result;
}

/// One metric's outcome in a scenario: either a route with its replay, or an error.
struct MetricOutcome {
  MetricSpec spec;
  std::optional<RouteSelection> selection;
  std::optional<FlowResult> flow;
  std::optional<Errc> error;
  std::string message;

  bool ok() const noexcept { return selection.has_value(); }
};

struct ScenarioReport {
  Scenario scenario;                    ///< configuration echo
  std::vector<LinkEstimate> estimates;  ///< one per link
  std::vector<MetricOutcome> outcomes;  ///< one per requested metric, in request order
  MetricOutcome baseline;               ///< minimum hop count reference
};

namespace detail {

inline MetricOutcome run_metric(const Topology& topo, const RoutingContext& ctx,
                                const Scenario& s, const MetricSpec& spec,
                                std::uint64_t replay_seed) {
  MetricOutcome out{spec, std::nullopt, std::nullopt, std::nullopt, {}};
  try {
    RouteSelection sel =
        select_route(ctx, RouteRequest{s.flow.source, s.flow.destination, spec.id, spec.config});
    out.flow = replay_flow(topo, s.truths, sel.path, s.flow, replay_seed);
    out.selection = std::move(sel);
  } catch (const Error& e) {
    out.error = e.code();
    out.message = e.what();
  }
  return out;
}

}  // namespace detail

inline ScenarioReport run_scenario(const Scenario& s) {
  const Topology topo = validate_scenario(s);
  ScenarioReport report;
  report.scenario = s;
  report.estimates = measure_all(topo, s.truths, s.measurement,
                                 derive_seed(s.seed, {static_cast<std::uint64_t>(Stream::Measurement)}));
  const RoutingContext ctx(topo, report.estimates, s.energies, {}, s.flow.offered_load);
  const std::uint64_t replay_seed =
      derive_seed(s.seed, {static_cast<std::uint64_t>(Stream::Replay)});
  for (const MetricSpec& spec : s.metrics) {
    report.outcomes.push_back(detail::run_metric(topo, ctx, s, spec, replay_seed));
  }
  report.baseline = detail::run_metric(topo, ctx, s, MetricSpec{MetricId::HopCount, {}}, replay_seed);
  return report;
}

/// Runs `count` replicates of a scenario, replicate i seeded from (seed, i).
/// Results are ordered by replicate index regardless of scheduling.
inline std::vector<ScenarioReport> run_replicates(const Scenario& s, std::size_t count,
                                                  unsigned threads = 0) {
  validate_scenario(s);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  std::vector<ScenarioReport> reports(count);
  auto run_one = [&](std::size_t i) {
    Scenario replica = s;
    replica.seed = derive_seed(s.seed, {i});
    reports[i] = run_scenario(replica);
  };
  for (std::size_t start = 0; start < count; start += threads) {
    std::vector<std::future<void>> batch;
    for (std::size_t i = start; i < std::min(count, start + threads); ++i) {
      batch.push_back(std::async(std::launch::async, run_one, i));
    }
    for (auto& f : batch) f.get();
  }
  return reports;
}

struct ComparisonRow {
  std::string metric;
  std::optional<std::vector<NodeId>> route;  ///< nullopt marks NoRoute
  std::size_t hops = 0;
  double metric_value = 0.0;
  double availability = 0.0;
  double mean_ant = 0.0;
  double throughput_bps = 0.0;
  std::string error;

  friend bool operator==(const ComparisonRow&, const ComparisonRow&) = default;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
};

inline ComparisonRow comparison_row(const Topology& topo, const MetricOutcome& outcome) {
  ComparisonRow row;
  row.metric = std::string(metric_name(outcome.spec.id));
  if (!outcome.ok() || !outcome.flow) {
    row.error = outcome.error ? std::string(errc_name(*outcome.error)) : "NoRoute";
    return row;
  }
  row.route = path_nodes(topo, outcome.selection->path);
  row.hops = outcome.selection->path.hops();
  row.metric_value = outcome.selection->value.value();
  row.availability = outcome.flow->availability;
  row.mean_ant = outcome.flow->mean_ant();
  row.throughput_bps = outcome.flow->throughput_bps;
  return row;
}

/// Per-metric rows for the report's outcomes, in request order.
inline std::vector<ComparisonRow> report_rows(const ScenarioReport& report) {
  const Topology topo = build_topology(report.scenario.topology);
  std::vector<ComparisonRow> rows;
  for (const auto& o : report.outcomes) rows.push_back(comparison_row(topo, o));
  return rows;
}

/// Baseline minimum-hop-count row first, then one row per requested metric.
inline ComparisonTable compare_metrics(const ScenarioReport& report) {
  const Topology topo = build_topology(report.scenario.topology);
  ComparisonTable table;
  const bool hop_count_requested =
      std::any_of(report.outcomes.begin(), report.outcomes.end(),
                  [](const MetricOutcome& o) { return o.spec.id == MetricId::HopCount; });
  if (!hop_count_requested) table.rows.push_back(comparison_row(topo, report.baseline));
  for (const auto& o : report.outcomes) table.rows.push_back(comparison_row(topo, o));
  return table;
}

}  // namespace meshmetrics
