#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "meshmetrics/core.hpp"
#include "meshmetrics/error.hpp"

// Link- and path-level evaluators for the ETX family. Every function here is
// pure: results depend only on the arguments.

namespace meshmetrics {

struct MetricConfig {
  double beta = 0.5;                  ///< WCETT / MCR channel-diversity weight, [0, 1]
  double w1 = 0.0;                    ///< MIC switching cost, channel changes
  double w2 = 1.0;                    ///< MIC switching cost, channel repeats
  std::uint32_t max_retry = 7;        ///< DBETX
  double loss_target_pal = 0.1;       ///< ENT higher-layer loss target, (0, 1]
  double retrans_threshold_m = 7.0;   ///< ENT retransmission threshold, > 1
  std::uint32_t packet_bits = 8192;   ///< data frame size for ETT / MTM / DBETX
  std::uint32_t fixed_packet_bits = 12000;  ///< EstdTT constant packet
  double switching_delay_s = 80e-6;   ///< MCR
  std::vector<double> interface_usage;  ///< MCR, per channel; empty means uniform
  std::uint32_t max_hops = 8;         ///< enumeration bound for end-to-end metrics

  friend bool operator==(const MetricConfig&, const MetricConfig&) = default;
};

inline void validate_config(const MetricConfig& c) {
  require(std::isfinite(c.beta) && c.beta >= 0 && c.beta <= 1, Errc::InvariantViolation,
          "beta must lie in [0, 1]");
  require(c.w1 >= 0 && c.w1 < c.w2, Errc::InvariantViolation, "require 0 <= w1 < w2");
  require(c.max_retry >= 1, Errc::InvariantViolation, "max_retry must be at least 1");
  require(c.loss_target_pal > 0 && c.loss_target_pal <= 1, Errc::InvariantViolation,
          "loss_target_pal must lie in (0, 1]");
  require(c.retrans_threshold_m > 1, Errc::InvariantViolation,
          "retrans_threshold_m must exceed 1");
  require(c.packet_bits >= 1 && c.fixed_packet_bits >= 1, Errc::InvariantViolation,
          "packet sizes must be positive");
  require(std::isfinite(c.switching_delay_s) && c.switching_delay_s >= 0,
          Errc::InvariantViolation, "switching_delay_s must be non-negative");
  for (double u : c.interface_usage) {
    require(u >= 0 && u <= 1, Errc::InvariantViolation, "interface_usage must lie in [0, 1]");
  }
  require(c.max_hops >= 1, Errc::InvariantViolation, "max_hops must be at least 1");
}

namespace detail {

inline void check_ratio(double d, const char* name) {
  require(std::isfinite(d) && d >= 0 && d <= 1, Errc::InvalidArgument,
          std::string(name) + " must lie in [0, 1]");
}

inline void check_positive(double v, Errc code, const char* name) {
  require(std::isfinite(v) && v > 0, code, std::string(name) + " must be positive");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Loss-based link metrics

inline MetricValue etx(double d_f, double d_r) {
  detail::check_ratio(d_f, "d_f");
  detail::check_ratio(d_r, "d_r");
  require(d_f > 0 && d_r > 0, Errc::DeadLink, "zero delivery ratio");
  return {MetricId::ETX, 1.0 / (d_f * d_r)};
}

inline MetricValue modified_etx(double mu, double sigma2) {
  require(std::isfinite(sigma2) && sigma2 >= 0, Errc::NegativeVariance, "sigma2 < 0");
  return {MetricId::mETX, std::exp(mu + sigma2 / 2)};
}

/// G = -ln(P_al) / ln(M).
inline double temporal_diversity_gain(double loss_target_pal, double retrans_threshold_m) {
  require(retrans_threshold_m > 1, Errc::BadThreshold, "M must exceed 1");
  require(loss_target_pal > 0 && loss_target_pal <= 1, Errc::BadThreshold,
          "P_al must lie in (0, 1]");
  return -std::log(loss_target_pal) / std::log(retrans_threshold_m);
}

struct EntResult {
  MetricValue value;
  bool admissible;
  double gain;
};

/// ENT with an explicit diversity gain. A link is admissible when
/// mu + 2 G sigma2 <= ln M.
inline EntResult ent_with_gain(double mu, double sigma2, double gain,
                               double retrans_threshold_m) {
  require(std::isfinite(sigma2) && sigma2 >= 0, Errc::NegativeVariance, "sigma2 < 0");
  require(std::isfinite(gain) && gain >= 0, Errc::BadThreshold, "G must be non-negative");
  require(retrans_threshold_m > 1, Errc::BadThreshold, "M must exceed 1");
  const double exponent = mu + 2.0 * gain * sigma2;
  return {MetricValue(MetricId::ENT, std::exp(exponent)),
          exponent <= std::log(retrans_threshold_m), gain};
}

inline EntResult ent(double mu, double sigma2, const MetricConfig& config) {
  const double gain = temporal_diversity_gain(config.loss_target_pal, config.retrans_threshold_m);
  return ent_with_gain(mu, sigma2, gain, config.retrans_threshold_m);
}

// ---------------------------------------------------------------------------
// Time-based link metrics

/// Seconds to deliver one `packet_bits` frame over a link of `bandwidth_bps`.
inline MetricValue ett(double etx_value, double packet_bits, double bandwidth_bps) {
  require(std::isfinite(etx_value) && etx_value >= 1, Errc::InvalidArgument, "ETX must be >= 1");
  require(packet_bits >= 1, Errc::InvalidArgument, "packet size must be at least 1 bit");
  require(std::isfinite(bandwidth_bps) && bandwidth_bps > 0, Errc::ZeroBandwidth,
          "bandwidth must be positive");
  return {MetricId::ETT, etx_value * packet_bits / bandwidth_bps};
}

/// ETT weighted by the interference ratio SINR/SNR.
inline MetricValue iaware(double ett_value, double snr, double sinr) {
  detail::check_positive(ett_value, Errc::InvalidArgument, "ETT");
  require(std::isfinite(snr) && std::isfinite(sinr) && sinr > 0 && snr > 0 && sinr <= snr,
          Errc::BadRatio, "require 0 < SINR <= SNR");
  const double ratio = sinr / snr;
  return {MetricId::iAWARE, ett_value / ratio};
}

/// ETX scaled by the airtime of a fixed-size frame (1500 bytes by default).
inline MetricValue estd_tt(double etx_value, double rate_bps, double packet_bits = 12000.0) {
  require(std::isfinite(etx_value) && etx_value >= 1, Errc::InvalidArgument, "ETX must be >= 1");
  require(std::isfinite(rate_bps) && rate_bps > 0, Errc::ZeroRate, "rate must be positive");
  return {MetricId::EstdTT, etx_value * packet_bits / rate_bps};
}

struct MediumTimeHop {
  double overhead_s = 0.0;
  double rate_bps = 1e6;
  double reliability = 1.0;
};

/// Medium occupancy of one frame on one link, inflated by its reliability.
inline double medium_time(const MediumTimeHop& hop, double packet_bits) {
  require(std::isfinite(hop.overhead_s) && hop.overhead_s >= 0, Errc::InvalidArgument,
          "overhead must be non-negative");
  require(std::isfinite(hop.rate_bps) && hop.rate_bps > 0, Errc::ZeroRate,
          "rate must be positive");
  detail::check_ratio(hop.reliability, "reliability");
  require(hop.reliability > 0, Errc::DeadLink, "zero reliability");
  return (hop.overhead_s + packet_bits / hop.rate_bps) / hop.reliability;
}

inline MetricValue mtm(std::span<const MediumTimeHop> hops, double packet_bits) {
  require(!hops.empty(), Errc::EmptyPath, "MTM of an empty path");
  double total = 0.0;
  for (const auto& hop : hops) total += medium_time(hop, packet_bits);
  return {MetricId::MTM, total};
}

// ---------------------------------------------------------------------------
// Fading-aware

/// DBETX from per-sample frame success probabilities.
inline MetricValue dbetx_from_success(std::span<const double> success,
                                      std::uint32_t max_retry) {
  require(!success.empty(), Errc::NoSamples, "DBETX needs at least one sample");
  require(max_retry >= 1, Errc::InvalidArgument, "max_retry must be at least 1");
  const double limit = 1.0 / max_retry;
  double ant_sum = 0.0;
  std::size_t outages = 0;
  for (double p : success) {
    detail::check_ratio(p, "success probability");
    ant_sum += p > limit ? 1.0 / p : 1.0 / limit;
    if (p < limit) ++outages;
  }
  require(outages < success.size(), Errc::FullOutage, "every sample is in MAC outage");
  const double n = static_cast<double>(success.size());
  const double expected_ant = ant_sum / n;
  const double outage = static_cast<double>(outages) / n;
  return {MetricId::DBETX, expected_ant / (1.0 - outage)};
}

/// DBETX over linear SNIR samples, mapped through the coherent binary BER curve.
inline MetricValue dbetx(std::span<const double> snir_samples, std::uint32_t packet_bits,
                         std::uint32_t max_retry) {
  require(!snir_samples.empty(), Errc::NoSamples, "DBETX needs at least one sample");
  require(packet_bits >= 1, Errc::InvalidArgument, "packet size must be at least 1 bit");
  std::vector<double> success;
  success.reserve(snir_samples.size());
  for (double x : snir_samples) {
    require(std::isfinite(x) && x >= 0, Errc::InvalidArgument, "SNIR must be non-negative");
    success.push_back(frame_success_probability(x, packet_bits));
  }
  return dbetx_from_success(success, max_retry);
}

// ---------------------------------------------------------------------------
// Interference- and channel-aware

/// Per-hop ETT with the hop's channel.
struct ChannelHop {
  double ett = 0.0;
  ChannelId channel;
};

namespace detail {

inline std::vector<double> per_channel_sums(std::span<const ChannelHop> hops,
                                            std::uint32_t channel_count) {
  require(channel_count >= 1, Errc::InvalidArgument, "channel_count must be at least 1");
  std::vector<double> sums(channel_count, 0.0);
  for (const auto& hop : hops) {
    require(hop.channel.value < channel_count, Errc::ChannelOutOfRange,
            "channel " + std::to_string(hop.channel.value));
    require(std::isfinite(hop.ett) && hop.ett >= 0, Errc::InvalidArgument,
            "ETT must be non-negative");
    sums[hop.channel.value] += hop.ett;
  }
  return sums;
}

inline void check_beta(double beta) {
  require(std::isfinite(beta) && beta >= 0 && beta <= 1, Errc::InvariantViolation,
          "beta must lie in [0, 1]");
}

}  // namespace detail

/// (1 - beta) * sum ETT + beta * max over channels of the per-channel ETT sum.
inline MetricValue wcett(std::span<const ChannelHop> hops, std::uint32_t channel_count,
                         double beta) {
  require(!hops.empty(), Errc::EmptyPath, "WCETT of an empty path");
  detail::check_beta(beta);
  const auto sums = detail::per_channel_sums(hops, channel_count);
  double total = 0.0;
  for (const auto& hop : hops) total += hop.ett;
  const double busiest = *std::max_element(sums.begin(), sums.end());
  return {MetricId::WCETT, (1.0 - beta) * total + beta * busiest};
}

/// Switching cost of landing on `channel`: probability the switchable interface
/// sits elsewhere, times the switching delay. Empty usage means uniform usage.
inline double switching_cost(ChannelId channel, std::uint32_t channel_count,
                             std::span<const double> interface_usage,
                             double switching_delay_s) {
  require(std::isfinite(switching_delay_s) && switching_delay_s >= 0, Errc::InvalidArgument,
          "switching delay must be non-negative");
  double elsewhere = 0.0;
  if (interface_usage.empty()) {
    elsewhere = static_cast<double>(channel_count - 1) / channel_count;
  } else {
    require(interface_usage.size() == channel_count, Errc::InvalidArgument,
            "interface_usage needs one entry per channel");
    for (std::uint32_t i = 0; i < channel_count; ++i) {
      require(interface_usage[i] >= 0 && interface_usage[i] <= 1, Errc::InvalidArgument,
              "interface usage must lie in [0, 1]");
      if (i != channel.value) elsewhere += interface_usage[i];
    }
  }
  return elsewhere * switching_delay_s;
}

inline MetricValue mcr(std::span<const ChannelHop> hops, std::uint32_t channel_count,
                       double beta, double switching_delay_s,
                       std::span<const double> interface_usage) {
  require(!hops.empty(), Errc::EmptyPath, "MCR of an empty path");
  detail::check_beta(beta);
  const auto sums = detail::per_channel_sums(hops, channel_count);
  double total = 0.0;
  for (const auto& hop : hops) {
    total += hop.ett + switching_cost(hop.channel, channel_count, interface_usage,
                                      switching_delay_s);
  }
  const double busiest = *std::max_element(sums.begin(), sums.end());
  return {MetricId::MCR, (1.0 - beta) * total + beta * busiest};
}

struct MicHop {
  double ett = 0.0;
  std::size_t interferers = 0;  ///< N_l
  ChannelId channel;
};

/// Resource usage normalised by N * min ETT, plus a switching cost at each
/// intermediate node: w1 when its inbound and outbound channels differ, w2 otherwise.
inline MetricValue mic(std::span<const MicHop> hops, std::size_t network_size,
                       double min_ett_network, double w1, double w2) {
  require(!hops.empty(), Errc::EmptyPath, "MIC of an empty path");
  require(network_size >= 2, Errc::BadScale, "network needs at least two nodes");
  require(std::isfinite(min_ett_network) && min_ett_network > 0, Errc::BadScale,
          "min ETT must be positive");
  require(w1 >= 0 && w1 < w2, Errc::InvalidArgument, "require 0 <= w1 < w2");
  double usage = 0.0;
  for (const auto& hop : hops) {
    require(std::isfinite(hop.ett) && hop.ett >= 0, Errc::InvalidArgument,
            "ETT must be non-negative");
    usage += hop.ett * static_cast<double>(hop.interferers);
  }
  double switching = 0.0;
  for (std::size_t i = 1; i < hops.size(); ++i) {
    switching += hops[i - 1].channel != hops[i].channel ? w1 : w2;
  }
  return {MetricId::MIC,
          usage / (static_cast<double>(network_size) * min_ett_network) + switching};
}

struct LinkEtt {
  LinkId link = 0;
  double ett = 0.0;
};

/// Sum of ETT over a link's interference set, which must contain the link itself.
inline MetricValue eett(LinkId self, std::span<const LinkEtt> interference_set) {
  const bool has_self = std::any_of(interference_set.begin(), interference_set.end(),
                                    [self](const LinkEtt& e) { return e.link == self; });
  require(has_self, Errc::MissingSelf, "interference set omits link " + std::to_string(self));
  double total = 0.0;
  for (const auto& e : interference_set) {
    require(std::isfinite(e.ett) && e.ett >= 0, Errc::InvalidArgument,
            "ETT must be non-negative");
    total += e.ett;
  }
  return {MetricId::EETT, total};
}

/// Nominal rate discounted by ETT and the summed contention degrees of
/// contending links. Note the units: bits/s divided by seconds.
inline MetricValue edr(double nominal_rate_bps, double ett_value,
                       std::span<const double> contention_degrees) {
  detail::check_positive(nominal_rate_bps, Errc::ZeroRate, "nominal rate");
  detail::check_positive(ett_value, Errc::InvalidArgument, "ETT");
  double total = 0.0;
  for (double tcd : contention_degrees) {
    detail::check_ratio(tcd, "TCD");
    total += tcd;
  }
  require(total > 0, Errc::ZeroContention, "contention degrees sum to zero");
  return {MetricId::EDR, nominal_rate_bps / (ett_value * total)};
}

struct EtpHop {
  double rate_bps = 1e6;
  double d_f = 1.0;
  double d_r = 1.0;
  std::vector<std::size_t> contenders;  ///< indices of path hops contending with this one
};

struct EtpResult {
  std::vector<double> per_link;  ///< expected throughput of each hop, bits/s
  MetricValue path;              ///< bottleneck throughput
};

/// Expected throughput: each hop gets the time-shared bandwidth of its contention
/// domain on the path, scaled by its delivery probability; the path value is the
/// bottleneck hop.
inline EtpResult etp(std::span<const EtpHop> hops) {
  require(!hops.empty(), Errc::EmptyPath, "ETP of an empty path");
  std::vector<double> per_link;
  per_link.reserve(hops.size());
  for (std::size_t i = 0; i < hops.size(); ++i) {
    const EtpHop& hop = hops[i];
    detail::check_ratio(hop.d_f, "d_f");
    detail::check_ratio(hop.d_r, "d_r");
    require(hop.d_f > 0 && hop.d_r > 0, Errc::DeadLink, "zero delivery ratio");
    std::vector<std::size_t> domain = hop.contenders;
    domain.push_back(i);
    std::sort(domain.begin(), domain.end());
    domain.erase(std::unique(domain.begin(), domain.end()), domain.end());
    double inverse_rates = 0.0;
    for (std::size_t j : domain) {
      require(j < hops.size(), Errc::InvalidArgument, "contender index out of range");
      detail::check_positive(hops[j].rate_bps, Errc::ZeroRate, "rate");
      inverse_rates += 1.0 / hops[j].rate_bps;
    }
    const double shared = 1.0 / inverse_rates;
    per_link.push_back(hop.d_f * hop.d_r * shared);
  }
  const double bottleneck = *std::min_element(per_link.begin(), per_link.end());
  return {std::move(per_link), MetricValue(MetricId::ETP, bottleneck)};
}

// ---------------------------------------------------------------------------
// Energy / multicast

/// Total transmissions by all nodes of a path (error rates ordered source to
/// destination) so that the destination receives one packet.
inline MetricValue multicast_etx(std::span<const double> error_rates) {
  require(!error_rates.empty(), Errc::EmptyPath, "METX of an empty path");
  for (double p : error_rates) {
    require(std::isfinite(p) && p >= 0 && p <= 1, Errc::InvalidArgument,
            "error rate must lie in [0, 1]");
    require(p < 1, Errc::DeadLink, "error rate 1");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < error_rates.size(); ++i) {
    double delivered = 1.0;
    for (std::size_t j = i; j < error_rates.size(); ++j) delivered *= 1.0 - error_rates[j];
    total += 1.0 / delivered;
  }
  return {MetricId::METX, total};
}

struct EnergyHop {
  double error_rate = 0.0;
  double energy = 1.0;
};

/// One step of the recursive expected-energy cost: extend a path of cost
/// `prefix_cost` by a hop.
inline double extend_energy_cost(double prefix_cost, const EnergyHop& hop) {
  require(std::isfinite(hop.error_rate) && hop.error_rate >= 0 && hop.error_rate <= 1,
          Errc::InvalidArgument, "error rate must lie in [0, 1]");
  require(hop.error_rate < 1, Errc::DeadLink, "error rate 1");
  require(std::isfinite(hop.energy) && hop.energy >= 0, Errc::InvalidArgument,
          "energy must be non-negative");
  return (prefix_cost + hop.energy) / (1.0 - hop.error_rate);
}

inline MetricValue energy_cost(std::span<const EnergyHop> hops) {
  require(!hops.empty(), Errc::EmptyPath, "energy cost of an empty path");
  double cost = 0.0;
  for (const auto& hop : hops) cost = extend_energy_cost(cost, hop);
  return {MetricId::EnergyCost, cost};
}

}  // namespace meshmetrics
