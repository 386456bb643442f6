#pragma once

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "meshmetrics/core.hpp"
#include "meshmetrics/error.hpp"
#include "meshmetrics/harness.hpp"
#include "meshmetrics/linksim.hpp"
#include "meshmetrics/metrics.hpp"
#include "meshmetrics/routing.hpp"
#include "meshmetrics/scenario_io.hpp"

namespace meshmetrics {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNoRoute = 3;
inline constexpr int kExitIo = 4;

inline int exit_code_for(Errc code) {
  switch (code) {
    case Errc::NoRoute:
    case Errc::LocalMinimum:
      return kExitNoRoute;
    case Errc::IoError:
      return kExitIo;
    default:
      return kExitInput;
  }
}

struct CommandLine {
  std::string subcommand;  ///< eval, route, simulate or compare
  std::string scenario_path;
  std::string output_path;  ///< empty means standard output
  ReportFormat format = ReportFormat::Json;
  std::optional<std::uint64_t> seed;
  std::vector<MetricId> metrics;  ///< empty keeps the scenario's list
  std::string eval_metric;
  std::vector<std::string> eval_params;  ///< key=value
};

/// Raised for malformed invocations; maps to kExitUsage.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses argv. Returns an exit code instead when parsing ends the run (--help
/// or a usage error, already reported on the streams).
inline std::variant<CommandLine, int> parse_command_line(int argc, const char* const* argv,
                                                         std::ostream& out, std::ostream& err) {
  CLI::App app{"Wireless mesh routing metric evaluator", "meshroute"};
  app.require_subcommand(1, 1);
  CommandLine cmd;
  std::string format = "json";
  std::vector<std::string> metric_names;
  std::uint64_t seed = 0;
  std::vector<std::string> set_params;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", cmd.scenario_path, "Scenario file (JSON)")->required();
    sub->add_option("--out", cmd.output_path, "Output file; standard output when omitted");
    sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--seed", seed, "Override the scenario seed");
    sub->add_option("--metrics", metric_names, "Comma-separated metric names")->delimiter(',');
  };

  auto* eval = app.add_subcommand("eval", "Evaluate one metric from inline link parameters");
  eval->add_option("metric", cmd.eval_metric, "Metric name")->required();
  eval->add_option("params", cmd.eval_params, "key=value parameters");
  eval->add_option("--set", set_params, "key=value parameter")->take_all();
  add_common(app.add_subcommand("route", "Print the selected route per metric"));
  add_common(app.add_subcommand("simulate", "Measure, route and replay; write the report"));
  add_common(app.add_subcommand("compare", "Write the per-metric comparison table"));

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  cmd.subcommand = app.get_subcommands().front()->get_name();
  auto* sub = app.get_subcommands().front();
  if (sub->get_name() != "eval" && sub->count("--seed") > 0) cmd.seed = seed;
  cmd.eval_params.insert(cmd.eval_params.end(), set_params.begin(), set_params.end());
  try {
    cmd.format = parse_format(format);
    for (const auto& name : metric_names) cmd.metrics.push_back(parse_metric(name));
  } catch (const Error& e) {
    err << "meshroute: " << e.what() << "\n";
    return kExitUsage;
  }
  return cmd;
}

namespace detail {

class EvalParams {
 public:
  explicit EvalParams(const std::vector<std::string>& tokens) {
    for (const auto& t : tokens) {
      const auto eq = t.find('=');
      if (eq == std::string::npos || eq == 0) throw UsageError("expected key=value, got '" + t + "'");
      values_[t.substr(0, eq)] = t.substr(eq + 1);
    }
  }

  double number(const std::string& key) const { return parse(key, raw(key)); }

  double number(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(raw(key));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse(key, item));
    if (out.empty()) throw UsageError("parameter " + key + " is empty");
    return out;
  }

  std::vector<double> list(const std::string& key, std::size_t n, double fill) const {
    if (!has(key)) return std::vector<double>(n, fill);
    auto out = list(key);
    if (out.size() != n) throw UsageError("parameter " + key + " needs " + std::to_string(n) + " entries");
    return out;
  }

  bool has(const std::string& key) const {
    used_.insert(key);
    return values_.count(key) > 0;
  }

  void check_all_used() const {
    for (const auto& [k, v] : values_) {
      if (used_.count(k) == 0) throw UsageError("unknown parameter '" + k + "'");
    }
  }

 private:
  const std::string& raw(const std::string& key) const {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("missing parameter " + key);
    return it->second;
  }

  static double parse(const std::string& key, const std::string& text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    auto [end, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || end != last) {
      throw UsageError("parameter " + key + ": '" + text + "' is not a number");
    }
    return v;
  }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

inline std::uint32_t as_count(double v, const char* name) {
  if (!(v >= 0) || v != std::floor(v) || v > 4e9) {
    throw UsageError(std::string(name) + " must be a non-negative integer");
  }
  return static_cast<std::uint32_t>(v);
}

inline std::vector<ChannelHop> channel_hops(const EvalParams& p) {
  const auto etts = p.list("ett");
  const auto channels = p.list("channel", etts.size(), 0.0);
  std::vector<ChannelHop> hops;
  for (std::size_t i = 0; i < etts.size(); ++i) {
    hops.push_back({etts[i], ChannelId(as_count(channels[i], "channel"))});
  }
  return hops;
}

inline std::uint32_t channel_count(const EvalParams& p, const std::vector<ChannelHop>& hops) {
  std::uint32_t highest = 0;
  for (const auto& h : hops) highest = std::max(highest, h.channel.value);
  return as_count(p.number("channels", highest + 1.0), "channels");
}

inline MetricValue evaluate_inline(MetricId id, const EvalParams& p) {
  switch (id) {
    case MetricId::HopCount:
      return {id, static_cast<double>(as_count(p.number("hops"), "hops"))};
    case MetricId::ETX:
      return etx(p.number("d_f"), p.number("d_r"));
    case MetricId::mETX:
      return modified_etx(p.number("mu"), p.number("sigma2"));
    case MetricId::ENT: {
      MetricConfig c;
      c.loss_target_pal = p.number("pal", c.loss_target_pal);
      c.retrans_threshold_m = p.number("m", c.retrans_threshold_m);
      if (p.has("gain")) {
        return ent_with_gain(p.number("mu"), p.number("sigma2"), p.number("gain"),
                             c.retrans_threshold_m).value;
      }
      return ent(p.number("mu"), p.number("sigma2"), c).value;
    }
    case MetricId::ETT:
      return ett(p.number("etx"), p.number("packet_bits"), p.number("bandwidth_bps"));
    case MetricId::iAWARE:
      return iaware(p.number("ett"), p.number("snr"), p.number("sinr"));
    case MetricId::EstdTT:
      return estd_tt(p.number("etx"), p.number("rate_bps"), p.number("packet_bits", 12000.0));
    case MetricId::MTM: {
      const auto rates = p.list("rate_bps");
      const auto overhead = p.list("overhead_s", rates.size(), 0.0);
      const auto reliability = p.list("reliability", rates.size(), 1.0);
      std::vector<MediumTimeHop> hops;
      for (std::size_t i = 0; i < rates.size(); ++i) hops.push_back({overhead[i], rates[i], reliability[i]});
      return mtm(hops, p.number("packet_bits"));
    }
    case MetricId::DBETX: {
      const auto max_retry = as_count(p.number("max_retry", 7.0), "max_retry");
      if (p.has("success")) return dbetx_from_success(p.list("success"), max_retry);
      return dbetx(p.list("snir"), as_count(p.number("packet_bits", 8192.0), "packet_bits"),
                   max_retry);
    }
    case MetricId::WCETT: {
      const auto hops = channel_hops(p);
      return wcett(hops, channel_count(p, hops), p.number("beta", 0.5));
    }
    case MetricId::MCR: {
      const auto hops = channel_hops(p);
      const auto k = channel_count(p, hops);
      const auto usage = p.has("usage") ? p.list("usage") : std::vector<double>{};
      return mcr(hops, k, p.number("beta", 0.5), p.number("switching_delay_s", 80e-6), usage);
    }
    case MetricId::MIC: {
      const auto etts = p.list("ett");
      const auto interferers = p.list("interferers", etts.size(), 1.0);
      const auto channels = p.list("channel", etts.size(), 0.0);
      std::vector<MicHop> hops;
      for (std::size_t i = 0; i < etts.size(); ++i) {
        hops.push_back({etts[i], as_count(interferers[i], "interferers"),
                        ChannelId(as_count(channels[i], "channel"))});
      }
      return mic(hops, as_count(p.number("nodes"), "nodes"), p.number("min_ett"),
                 p.number("w1", 0.0), p.number("w2", 1.0));
    }
    case MetricId::EETT: {
      const auto etts = p.list("ett");
      std::vector<LinkEtt> set;
      for (std::size_t i = 0; i < etts.size(); ++i) set.push_back({i, etts[i]});
      return eett(0, set);
    }
    case MetricId::EDR:
      return edr(p.number("rate_bps"), p.number("ett"), p.list("tcd"));
    case MetricId::ETP: {
      const auto rates = p.list("rate_bps");
      const auto d_f = p.list("d_f", rates.size(), 1.0);
      const auto d_r = p.list("d_r", rates.size(), 1.0);
      const bool shared = p.number("contend", 1.0) != 0.0;
      std::vector<EtpHop> hops;
      for (std::size_t i = 0; i < rates.size(); ++i) {
        EtpHop h{rates[i], d_f[i], d_r[i], {}};
        if (shared) {
          for (std::size_t j = 0; j < rates.size(); ++j) h.contenders.push_back(j);
        }
        hops.push_back(std::move(h));
      }
      return etp(hops).path;
    }
    case MetricId::METX:
      return multicast_etx(p.list("p"));
    case MetricId::EnergyCost: {
      const auto errors = p.list("p");
      const auto energies = p.list("energy", errors.size(), 1.0);
      std::vector<EnergyHop> hops;
      for (std::size_t i = 0; i < errors.size(); ++i) hops.push_back({errors[i], energies[i]});
      return energy_cost(hops);
    }
    case MetricId::ETXDistance:
      throw UsageError("etx_distance is a network-wide metric; use route or simulate");
  }
  throw UsageError("unsupported metric");
}

inline Scenario load_for_command(const CommandLine& cmd) {
  Scenario s = parse_scenario_file(cmd.scenario_path);
  if (cmd.seed) s.seed = *cmd.seed;
  if (!cmd.metrics.empty()) {
    std::vector<MetricSpec> chosen;
    for (MetricId id : cmd.metrics) {
      auto it = std::find_if(s.metrics.begin(), s.metrics.end(),
                             [id](const MetricSpec& m) { return m.id == id; });
      chosen.push_back(it != s.metrics.end() ? *it : MetricSpec{id, {}});
    }
    s.metrics = std::move(chosen);
  }
  return s;
}

inline void emit(const CommandLine& cmd, const std::string& text, std::ostream& out) {
  if (cmd.output_path.empty()) {
    out << text;
  } else {
    write_text(text, cmd.output_path);
  }
}

inline int route_command(const CommandLine& cmd, std::ostream& out, std::ostream& err) {
  const Scenario s = load_for_command(cmd);
  const Topology topo = validate_scenario(s);
  const auto estimates = measure_all(
      topo, s.truths, s.measurement,
      derive_seed(s.seed, {static_cast<std::uint64_t>(Stream::Measurement)}));
  const RoutingContext ctx(topo, estimates, s.energies, {}, s.flow.offered_load);
  std::string text;
  int status = kExitOk;
  for (const MetricSpec& spec : s.metrics) {
    const std::string name(metric_name(spec.id));
    try {
      const RouteSelection sel =
          select_route(ctx, RouteRequest{s.flow.source, s.flow.destination, spec.id, spec.config});
      text += name + " " + route_string(path_nodes(topo, sel.path)) + " " +
              format_number(sel.value.value()) + "\n";
    } catch (const Error& e) {
      const int code = exit_code_for(e.code());
      text += name + " " + (code == kExitNoRoute ? "no route" : "error") + "\n";
      err << "meshroute: " << name << ": " << (code == kExitNoRoute ? "no route: " : "")
          << e.what() << "\n";
      status = std::max(status, code == kExitNoRoute ? kExitNoRoute : kExitInput);
    }
  }
  emit(cmd, text, out);
  return status;
}

inline int report_command(const CommandLine& cmd, std::ostream& out, std::ostream& err) {
  const Scenario s = load_for_command(cmd);
  const ScenarioReport report = run_scenario(s);
  if (cmd.subcommand == "simulate") {
    emit(cmd, render_report(report, cmd.format), out);
  } else {
    emit(cmd, render_comparison(compare_metrics(report), cmd.format), out);
  }
  for (const auto& o : report.outcomes) {
    if (!o.ok()) err << "meshroute: " << metric_name(o.spec.id) << ": " << o.message << "\n";
  }
  if (!report.baseline.ok() && report.baseline.error == Errc::NoRoute) {
    err << "meshroute: no route between flow endpoints\n";
    return kExitNoRoute;
  }
  return kExitOk;
}

}  // namespace detail

inline int execute(const CommandLine& cmd, std::ostream& out, std::ostream& err) {
  try {
    if (cmd.subcommand == "eval") {
      const detail::EvalParams params(cmd.eval_params);
      const MetricId id = parse_metric(cmd.eval_metric);
      const MetricValue v = detail::evaluate_inline(id, params);
      params.check_all_used();
      detail::emit(cmd, format_number(v.value()) + "\n", out);
      return kExitOk;
    }
    if (cmd.subcommand == "route") return detail::route_command(cmd, out, err);
    if (cmd.subcommand == "simulate" || cmd.subcommand == "compare") {
      return detail::report_command(cmd, out, err);
    }
    throw UsageError("unknown subcommand '" + cmd.subcommand + "'");
  } catch (const UsageError& e) {
    err << "meshroute: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    if (e.code() == Errc::UnknownMetric) {
      err << "meshroute: " << e.what() << "\n";
      return kExitUsage;
    }
    err << "meshroute: " << e.what() << "\n";
    return exit_code_for(e.code());
  }
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  auto parsed = parse_command_line(argc, argv, out, err);
  if (const int* code = std::get_if<int>(&parsed)) return *code;
  return execute(std::get<CommandLine>(parsed), out, err);
}

}  // namespace meshmetrics
