#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "meshmetrics/core.hpp"
#include "meshmetrics/error.hpp"
#include "meshmetrics/harness.hpp"
#include "meshmetrics/linksim.hpp"
#include "meshmetrics/metrics.hpp"

// Scenario files and report serialization. Scenario files are JSON with units in
// the field names; reports are JSON or CSV with 6 significant digits.

namespace meshmetrics {

using Json = nlohmann::ordered_json;

enum class ReportFormat { Json, Csv };

inline ReportFormat parse_format(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  fail(Errc::InvalidArgument, "unknown format '" + std::string(name) + "'");
}

/// Shortest "%.6g"-style rendering, independent of the C locale.
inline std::string format_number(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 6);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

/// Value rounded to 6 significant digits, for JSON output.
inline double round6(double value) {
  if (!std::isfinite(value)) return value;
  return std::stod(format_number(value));
}

// ---------------------------------------------------------------------------
// Scenario parsing

namespace detail {

class SchemaReader {
 public:
  SchemaReader(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
    require(node_.is_object(), Errc::SchemaError, where() + " must be an object");
  }

  template <typename T>
  T required(const char* key) const {
    require(node_.contains(key), Errc::SchemaError, "missing field " + field(key));
    return get<T>(key);
  }

  template <typename T>
  T optional(const char* key, T fallback) const {
    if (!node_.contains(key)) return fallback;
    return get<T>(key);
  }

  bool has(const char* key) const { return node_.contains(key); }
  const Json& at(const char* key) const { return node_.at(key); }
  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  /// Rejects keys outside `allowed`; misspelled unit-suffixed fields fail loudly.
  void only(std::initializer_list<const char*> allowed) const {
    std::set<std::string> keys(allowed.begin(), allowed.end());
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      require(keys.count(it.key()) == 1, Errc::SchemaError, "unknown field " + field(it.key().c_str()));
    }
  }

 private:
  std::string where() const { return path_.empty() ? "document" : path_; }

  template <typename T>
  T get(const char* key) const {
    const Json& v = node_.at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        require(v.is_number(), Errc::SchemaError, field(key) + " must be a number");
      } else if constexpr (std::is_integral_v<T>) {
        require(v.is_number_unsigned() &&
                    v.get<std::uint64_t>() <= std::numeric_limits<T>::max(),
                Errc::SchemaError, field(key) + " must be a non-negative integer in range");
      } else if constexpr (std::is_same_v<T, std::string>) {
        require(v.is_string(), Errc::SchemaError, field(key) + " must be a string");
      }
      return v.get<T>();
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::SchemaError, field(key) + ": " + e.what());
    }
  }

  const Json& node_;
  std::string path_;
};

inline LossModel parse_loss(const Json& node, const std::string& path) {
  SchemaReader r(node, path);
  const auto model = r.optional<std::string>("model", "bernoulli");
  if (model == "bernoulli") {
    r.only({"model", "p_forward", "p_reverse"});
    return BernoulliLoss{r.optional("p_forward", 0.0), r.optional("p_reverse", 0.0)};
  }
  if (model == "gilbert_elliott") {
    r.only({"model", "p_good", "p_bad", "p_good_to_bad", "p_bad_to_good"});
    GilbertElliottLoss ge;
    ge.p_good = r.optional("p_good", ge.p_good);
    ge.p_bad = r.optional("p_bad", ge.p_bad);
    ge.p_good_to_bad = r.optional("p_good_to_bad", ge.p_good_to_bad);
    ge.p_bad_to_good = r.optional("p_bad_to_good", ge.p_bad_to_good);
    return ge;
  }
  if (model == "fading") {
    r.only({"model", "mean_snr_db", "sigma_db", "coherence_slots"});
    FadingSnr f;
    f.mean_snr_db = r.optional("mean_snr_db", f.mean_snr_db);
    f.sigma_db = r.optional("sigma_db", f.sigma_db);
    f.coherence_slots = r.optional("coherence_slots", f.coherence_slots);
    return f;
  }
  fail(Errc::SchemaError, r.field("model") + ": unknown loss model '" + model + "'");
}

inline MetricConfig parse_metric_config(const Json& node, const std::string& path) {
  SchemaReader r(node, path);
  r.only({"beta", "w1", "w2", "max_retry", "loss_target_pal", "retrans_threshold_m",
          "packet_bits", "fixed_packet_bits", "switching_delay_s", "interface_usage",
          "max_hops"});
  MetricConfig c;
  c.beta = r.optional("beta", c.beta);
  c.w1 = r.optional("w1", c.w1);
  c.w2 = r.optional("w2", c.w2);
  c.max_retry = r.optional("max_retry", c.max_retry);
  c.loss_target_pal = r.optional("loss_target_pal", c.loss_target_pal);
  c.retrans_threshold_m = r.optional("retrans_threshold_m", c.retrans_threshold_m);
  c.packet_bits = r.optional("packet_bits", c.packet_bits);
  c.fixed_packet_bits = r.optional("fixed_packet_bits", c.fixed_packet_bits);
  c.switching_delay_s = r.optional("switching_delay_s", c.switching_delay_s);
  if (r.has("interface_usage")) {
    const Json& usage = r.at("interface_usage");
    require(usage.is_array(), Errc::SchemaError, r.field("interface_usage") + " must be an array");
    for (const auto& u : usage) {
      require(u.is_number(), Errc::SchemaError, r.field("interface_usage") + " must hold numbers");
      c.interface_usage.push_back(u.get<double>());
    }
  }
  c.max_hops = r.optional("max_hops", c.max_hops);
  return c;
}

inline const Json& array_field(const SchemaReader& r, const char* key) {
  require(r.has(key), Errc::SchemaError, "missing field " + r.field(key));
  const Json& v = r.at(key);
  require(v.is_array(), Errc::SchemaError, r.field(key) + " must be an array");
  return v;
}

}  // namespace detail

/// Builds and validates a Scenario from a parsed JSON document.
inline Scenario scenario_from_json(const Json& doc) {
  using detail::SchemaReader;
  SchemaReader root(doc, "");
  root.only({"nodes", "channels", "interference_range_hops", "links", "measurement", "metrics",
             "flow", "seed"});
  Scenario s;

  for (const auto& n : detail::array_field(root, "nodes")) {
    require(n.is_number_unsigned() && n.get<std::uint64_t>() <= 0xffffffffu, Errc::SchemaError,
            "nodes must hold non-negative 32-bit integers");
    s.topology.nodes.emplace_back(n.get<std::uint32_t>());
  }
  s.topology.channel_count = root.optional<std::uint32_t>("channels", 1);
  s.topology.interference_range_hops = root.optional<std::uint32_t>("interference_range_hops", 1);

  const Json& links = detail::array_field(root, "links");
  bool any_energy = false;
  for (std::size_t i = 0; i < links.size(); ++i) {
    any_energy = any_energy || (links[i].is_object() && links[i].contains("energy"));
  }
  for (std::size_t i = 0; i < links.size(); ++i) {
    SchemaReader r(links[i], "links[" + std::to_string(i) + "]");
    r.only({"from", "to", "channel", "rate_bps", "overhead_s", "loss", "tau", "max_retry",
            "snr_db", "interference_power", "energy"});
    Link l;
    l.from = NodeId(r.required<std::uint32_t>("from"));
    l.to = NodeId(r.required<std::uint32_t>("to"));
    l.channel = ChannelId(r.optional<std::uint32_t>("channel", 0));
    l.nominal_rate_bps = r.required<double>("rate_bps");
    l.overhead_s = r.optional("overhead_s", 0.0);
    s.topology.links.push_back(l);

    LinkTruth t;
    if (r.has("loss")) t.loss = detail::parse_loss(r.at("loss"), r.field("loss"));
    t.traffic_rate_tau = r.optional("tau", t.traffic_rate_tau);
    t.max_retry = r.optional("max_retry", t.max_retry);
    t.snr_db = r.optional("snr_db", t.snr_db);
    t.interference_power = r.optional("interference_power", t.interference_power);
    s.truths.push_back(t);
    if (any_energy) s.energies.push_back(r.optional("energy", 1.0));
  }

  if (root.has("measurement")) {
    SchemaReader m(root.at("measurement"), "measurement");
    m.only({"duration_s", "window_s", "probe_bits", "sinr_samples", "pair_samples",
            "large_packet_bits", "pair_jitter_s"});
    auto& c = s.measurement;
    c.duration_s = m.optional("duration_s", c.duration_s);
    c.window_s = m.optional("window_s", c.window_s);
    c.probe_bits = m.optional("probe_bits", c.probe_bits);
    c.sinr_samples = m.optional("sinr_samples", c.sinr_samples);
    c.pair_samples = m.optional("pair_samples", c.pair_samples);
    c.large_packet_bits = m.optional("large_packet_bits", c.large_packet_bits);
    c.pair_jitter_s = m.optional("pair_jitter_s", c.pair_jitter_s);
  }

  if (root.has("metrics")) {
    const Json& metrics = detail::array_field(root, "metrics");
    for (std::size_t i = 0; i < metrics.size(); ++i) {
      const std::string path = "metrics[" + std::to_string(i) + "]";
      MetricSpec spec;
      try {
        if (metrics[i].is_string()) {
          spec.id = parse_metric(metrics[i].get<std::string>());
        } else {
          SchemaReader r(metrics[i], path);
          r.only({"id", "config"});
          spec.id = parse_metric(r.required<std::string>("id"));
          if (r.has("config")) spec.config = detail::parse_metric_config(r.at("config"), path + ".config");
        }
      } catch (const Error& e) {
        if (e.code() != Errc::UnknownMetric) throw;
        fail(Errc::SchemaError, path + ".id: " + e.what());
      }
      s.metrics.push_back(spec);
    }
  } else {
    for (MetricId id : kAllMetrics) {
      if (id != MetricId::HopCount) s.metrics.push_back({id, {}});
    }
  }

  require(root.has("flow"), Errc::SchemaError, "missing field flow");
  SchemaReader f(root.at("flow"), "flow");
  f.only({"src", "dst", "packets", "packet_bits", "offered_load"});
  s.flow.source = NodeId(f.required<std::uint32_t>("src"));
  s.flow.destination = NodeId(f.required<std::uint32_t>("dst"));
  s.flow.packets = f.optional("packets", s.flow.packets);
  s.flow.packet_bits = f.optional("packet_bits", s.flow.packet_bits);
  s.flow.offered_load = f.optional("offered_load", s.flow.offered_load);

  s.seed = root.optional<std::uint64_t>("seed", s.seed);

  try {
    validate_scenario(s);
  } catch (const Error& e) {
    if (e.code() == Errc::InvariantViolation) throw;
    fail(Errc::InvariantViolation, e.what());
  }
  return s;
}

inline Scenario parse_scenario_text(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t offset = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n');
    fail(Errc::SchemaError, "line " + std::to_string(line) + ": " + e.what());
  }
  return scenario_from_json(doc);
}

inline Scenario parse_scenario_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::FileNotFound, path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_scenario_text(text);
}

// ---------------------------------------------------------------------------
// Scenario serialization (full precision, so parsing it back is lossless)

inline Json loss_to_json(const LossModel& loss) {
  Json j;
  if (const auto* b = std::get_if<BernoulliLoss>(&loss)) {
    j["model"] = "bernoulli";
    j["p_forward"] = b->p_forward;
    j["p_reverse"] = b->p_reverse;
  } else if (const auto* ge = std::get_if<GilbertElliottLoss>(&loss)) {
    j["model"] = "gilbert_elliott";
    j["p_good"] = ge->p_good;
    j["p_bad"] = ge->p_bad;
    j["p_good_to_bad"] = ge->p_good_to_bad;
    j["p_bad_to_good"] = ge->p_bad_to_good;
  } else {
    const auto& f = std::get<FadingSnr>(loss);
    j["model"] = "fading";
    j["mean_snr_db"] = f.mean_snr_db;
    j["sigma_db"] = f.sigma_db;
    j["coherence_slots"] = f.coherence_slots;
  }
  return j;
}

inline Json metric_config_to_json(const MetricConfig& c) {
  Json j;
  j["beta"] = c.beta;
  j["w1"] = c.w1;
  j["w2"] = c.w2;
  j["max_retry"] = c.max_retry;
  j["loss_target_pal"] = c.loss_target_pal;
  j["retrans_threshold_m"] = c.retrans_threshold_m;
  j["packet_bits"] = c.packet_bits;
  j["fixed_packet_bits"] = c.fixed_packet_bits;
  j["switching_delay_s"] = c.switching_delay_s;
  j["interface_usage"] = c.interface_usage;
  j["max_hops"] = c.max_hops;
  return j;
}

inline Json scenario_to_json(const Scenario& s) {
  Json j;
  Json nodes = Json::array();
  for (NodeId n : s.topology.nodes) nodes.push_back(n.value);
  j["nodes"] = nodes;
  j["channels"] = s.topology.channel_count;
  j["interference_range_hops"] = s.topology.interference_range_hops;
  Json links = Json::array();
  for (std::size_t i = 0; i < s.topology.links.size(); ++i) {
    const Link& l = s.topology.links[i];
    const LinkTruth& t = s.truths.at(i);
    Json lj;
    lj["from"] = l.from.value;
    lj["to"] = l.to.value;
    lj["channel"] = l.channel.value;
    lj["rate_bps"] = l.nominal_rate_bps;
    lj["overhead_s"] = l.overhead_s;
    lj["loss"] = loss_to_json(t.loss);
    lj["tau"] = t.traffic_rate_tau;
    lj["max_retry"] = t.max_retry;
    lj["snr_db"] = t.snr_db;
    lj["interference_power"] = t.interference_power;
    if (!s.energies.empty()) lj["energy"] = s.energies.at(i);
    links.push_back(lj);
  }
  j["links"] = links;
  const auto& m = s.measurement;
  j["measurement"] = {{"duration_s", m.duration_s},     {"window_s", m.window_s},
                      {"probe_bits", m.probe_bits},     {"sinr_samples", m.sinr_samples},
                      {"pair_samples", m.pair_samples}, {"large_packet_bits", m.large_packet_bits},
                      {"pair_jitter_s", m.pair_jitter_s}};
  Json metrics = Json::array();
  for (const auto& spec : s.metrics) {
    metrics.push_back({{"id", std::string(metric_name(spec.id))},
                       {"config", metric_config_to_json(spec.config)}});
  }
  j["metrics"] = metrics;
  j["flow"] = {{"src", s.flow.source.value},
               {"dst", s.flow.destination.value},
               {"packets", s.flow.packets},
               {"packet_bits", s.flow.packet_bits},
               {"offered_load", s.flow.offered_load}};
  j["seed"] = s.seed;
  return j;
}

// ---------------------------------------------------------------------------
// Reports

inline constexpr std::string_view kCsvHeader =
    "metric,route,hops,metric_value,availability,mean_ant,throughput_bps";

inline std::string route_string(const std::vector<NodeId>& nodes) {
  std::string out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i) out += '>';
    out += std::to_string(nodes[i].value);
  }
  return out;
}

inline std::string rows_to_csv(const std::vector<ComparisonRow>& rows) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += r.metric;
    out += ',';
    if (!r.route) {
      out += "NoRoute,0,,,,\n";
      continue;
    }
    out += route_string(*r.route) + ',' + std::to_string(r.hops) + ',' +
           format_number(r.metric_value) + ',' + format_number(r.availability) + ',' +
           format_number(r.mean_ant) + ',' + format_number(r.throughput_bps) + '\n';
  }
  return out;
}

inline Json row_to_json(const ComparisonRow& r) {
  Json j;
  j["metric"] = r.metric;
  if (!r.route) {
    j["route"] = nullptr;
    j["error"] = r.error;
    return j;
  }
  Json route = Json::array();
  for (NodeId n : *r.route) route.push_back(n.value);
  j["route"] = route;
  j["hops"] = r.hops;
  j["metric_value"] = round6(r.metric_value);
  j["availability"] = round6(r.availability);
  j["mean_ant"] = round6(r.mean_ant);
  j["throughput_bps"] = round6(r.throughput_bps);
  return j;
}

inline Json estimate_to_json(LinkId id, const Link& link, const LinkEstimate& e) {
  Json j;
  j["link"] = id;
  j["from"] = link.from.value;
  j["to"] = link.to.value;
  j["channel"] = link.channel.value;
  j["d_f"] = round6(e.d_f);
  j["d_r"] = round6(e.d_r);
  j["mu"] = round6(e.mu);
  j["sigma2"] = round6(e.sigma2);
  j["bandwidth_bps"] = round6(e.bandwidth_bps);
  j["snr"] = round6(e.snr);
  j["sinr"] = round6(e.sinr);
  j["interferer_count"] = e.interferer_count;
  Json tau = Json::array();
  for (const auto& n : e.neighbor_tau) tau.push_back({{"node", n.node.value}, {"tau", round6(n.tau)}});
  j["neighbor_tau"] = tau;
  j["snir_samples_n"] = e.snir_samples.size();
  return j;
}

inline Json outcome_to_json(const Topology& topo, const MetricOutcome& o) {
  Json j = row_to_json(comparison_row(topo, o));
  if (o.flow) {
    j["delivered"] = o.flow->delivered;
    j["offered"] = o.flow->offered;
    Json ant = Json::array();
    for (const auto& a : o.flow->ant_per_link) ant.push_back({{"link", a.link}, {"ant", round6(a.ant)}});
    j["ant_per_link"] = ant;
  }
  return j;
}

inline Json report_to_json(const ScenarioReport& report) {
  const Topology topo = build_topology(report.scenario.topology);
  Json j;
  j["scenario_echo"] = scenario_to_json(report.scenario);
  Json estimates = Json::array();
  for (LinkId id = 0; id < report.estimates.size(); ++id) {
    estimates.push_back(estimate_to_json(id, topo.link(id), report.estimates[id]));
  }
  j["link_estimates"] = estimates;
  Json rows = Json::array();
  for (const auto& o : report.outcomes) rows.push_back(outcome_to_json(topo, o));
  j["rows"] = rows;
  j["baseline"] = outcome_to_json(topo, report.baseline);
  return j;
}

inline std::string render_report(const ScenarioReport& report, ReportFormat format) {
  if (format == ReportFormat::Csv) return rows_to_csv(report_rows(report));
  return report_to_json(report).dump(2) + "\n";
}

inline std::string render_comparison(const ComparisonTable& table, ReportFormat format) {
  if (format == ReportFormat::Csv) return rows_to_csv(table.rows);
  Json rows = Json::array();
  for (const auto& r : table.rows) rows.push_back(row_to_json(r));
  Json j;
  j["rows"] = rows;
  return j.dump(2) + "\n";
}

inline void write_text(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), Errc::IoError, "cannot open " + path + " for writing");
  out << text;
  out.flush();
  require(out.good(), Errc::IoError, "failed writing " + path);
}

inline void write_report(const ScenarioReport& report, ReportFormat format,
                         const std::string& path) {
  write_text(render_report(report, format), path);
}

}  // namespace meshmetrics
