#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "meshmetrics/core.hpp"
#include "meshmetrics/error.hpp"
#include "meshmetrics/random.hpp"

namespace meshmetrics {

// ---------------------------------------------------------------------------
// Ground truth

/// Independent frame loss, one probability per direction.
struct BernoulliLoss {
  double p_forward = 0.0;
  double p_reverse = 0.0;

  friend bool operator==(const BernoulliLoss&, const BernoulliLoss&) = default;
};

/// Two-state Markov loss process, one independent chain per direction.
/// Transition probabilities are per slot.
struct GilbertElliottLoss {
  double p_good = 0.0;  ///< frame loss probability in the good state
  double p_bad = 1.0;   ///< frame loss probability in the bad state
  double p_good_to_bad = 0.1;
  double p_bad_to_good = 0.1;

  friend bool operator==(const GilbertElliottLoss&, const GilbertElliottLoss&) = default;

  double stationary_bad() const noexcept {
    const double total = p_good_to_bad + p_bad_to_good;
    return total > 0 ? p_good_to_bad / total : 0.0;
  }
  double mean_loss() const noexcept {
    const double bad = stationary_bad();
    return (1.0 - bad) * p_good + bad * p_bad;
  }
};

/// Log-normal shadow fading: slot SNR in dB follows a stationary AR(1) process.
/// The channel is reciprocal, so both directions see the same SNR trace.
struct FadingSnr {
  double mean_snr_db = 20.0;
  double sigma_db = 0.0;
  double coherence_slots = 1.0;

  friend bool operator==(const FadingSnr&, const FadingSnr&) = default;
};

using LossModel = std::variant<BernoulliLoss, GilbertElliottLoss, FadingSnr>;

/// Ground-truth description of one directed link (and its reverse direction,
/// which carries probes and ACKs).
struct LinkTruth {
  LossModel loss = BernoulliLoss{};
  std::uint32_t max_retry = 7;
  double traffic_rate_tau = 0.0;    ///< fraction of time the transmitter is active
  double snr_db = 20.0;             ///< received signal level for non-fading models
  double interference_power = 1.0;  ///< power the transmitter projects onto neighbours, /noise

  friend bool operator==(const LinkTruth&, const LinkTruth&) = default;
};

inline void validate_truth(const LinkTruth& truth) {
  auto probability = [](double p, const char* name) {
    require(std::isfinite(p) && p >= 0.0 && p <= 1.0, Errc::InvalidArgument,
            std::string(name) + " must lie in [0, 1]");
  };
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, BernoulliLoss>) {
          probability(m.p_forward, "p_forward");
          probability(m.p_reverse, "p_reverse");
        } else if constexpr (std::is_same_v<M, GilbertElliottLoss>) {
          probability(m.p_good, "p_good");
          probability(m.p_bad, "p_bad");
          probability(m.p_good_to_bad, "p_good_to_bad");
          probability(m.p_bad_to_good, "p_bad_to_good");
        } else {
          require(std::isfinite(m.mean_snr_db), Errc::InvalidArgument, "mean_snr_db");
          require(std::isfinite(m.sigma_db) && m.sigma_db >= 0, Errc::InvalidArgument,
                  "sigma_db must be non-negative");
          require(std::isfinite(m.coherence_slots) && m.coherence_slots >= 1,
                  Errc::InvalidArgument, "coherence_slots must be at least 1");
        }
      },
      truth.loss);
  require(truth.max_retry >= 1, Errc::InvalidArgument, "max_retry must be at least 1");
  probability(truth.traffic_rate_tau, "tau");
  require(std::isfinite(truth.snr_db), Errc::InvalidArgument, "snr_db");
  require(std::isfinite(truth.interference_power) && truth.interference_power >= 0,
          Errc::InvalidArgument, "interference_power must be non-negative");
}

inline bool is_fading(const LinkTruth& truth) noexcept {
  return std::holds_alternative<FadingSnr>(truth.loss);
}

/// Per-slot channel state of one link direction, generated lazily and cached so
/// any slot can be queried in any order with identical results.
class ChannelTrace {
 public:
  ChannelTrace(const LinkTruth& truth, std::uint64_t seed, LinkId link, bool reverse)
      : loss_(truth.loss),
        signal_(db_to_linear(truth.snr_db)),
        reverse_(reverse),
        rng_(make_rng(seed, link,
                      // a fading channel is reciprocal: both directions share one trace
                      (reverse && !std::holds_alternative<FadingSnr>(truth.loss))
                          ? Stream::ChannelReverse
                          : Stream::ChannelForward)) {}

  /// Linear received SNR at `slot` (before interference).
  double signal(std::uint64_t slot) {
    if (const auto* f = std::get_if<FadingSnr>(&loss_)) return db_to_linear(fading_db(*f, slot));
    return signal_;
  }

  /// Probability that a `bits`-long frame in this direction survives `slot`.
  double frame_success(std::uint64_t slot, std::uint32_t bits, double interference) {
    if (const auto* f = std::get_if<FadingSnr>(&loss_)) {
      return frame_success_probability(db_to_linear(fading_db(*f, slot)) / (1.0 + interference),
                                       bits);
    }
    return 1.0 - frame_loss(slot);
  }

  /// Per-bit error rate seen by a `bits`-long frame at `slot`. Frame-level loss
  /// models spread their loss uniformly over the bits of the frame.
  double bit_error_rate(std::uint64_t slot, std::uint32_t bits, double interference) {
    if (const auto* f = std::get_if<FadingSnr>(&loss_)) {
      return coherent_bit_error_rate(db_to_linear(fading_db(*f, slot)) / (1.0 + interference));
    }
    const double q = frame_loss(slot);
    return 1.0 - std::pow(1.0 - q, 1.0 / static_cast<double>(bits));
  }

 private:
  double frame_loss(std::uint64_t slot) {
    if (const auto* b = std::get_if<BernoulliLoss>(&loss_)) {
      return reverse_ ? b->p_reverse : b->p_forward;
    }
    const auto& ge = std::get<GilbertElliottLoss>(loss_);
    return bad_state(ge, slot) ? ge.p_bad : ge.p_good;
  }

  bool bad_state(const GilbertElliottLoss& ge, std::uint64_t slot) {
    if (states_.empty()) {
      std::bernoulli_distribution start(ge.stationary_bad());
      states_.push_back(start(rng_) ? 1 : 0);
    }
    while (states_.size() <= slot) {
      const bool bad = states_.back() != 0;
      std::bernoulli_distribution flip(bad ? ge.p_bad_to_good : ge.p_good_to_bad);
      states_.push_back(flip(rng_) ? !bad : bad);
    }
    return states_[slot] != 0;
  }

  double fading_db(const FadingSnr& f, std::uint64_t slot) {
    if (db_.empty()) {
      db_.push_back(f.mean_snr_db + f.sigma_db * normal_(rng_));
    }
    const double a = std::exp(-1.0 / f.coherence_slots);
    const double innovation = f.sigma_db * std::sqrt(1.0 - a * a);
    while (db_.size() <= slot) {
      db_.push_back(f.mean_snr_db + a * (db_.back() - f.mean_snr_db) + innovation * normal_(rng_));
    }
    return db_[slot];
  }

  LossModel loss_;
  double signal_;
  bool reverse_;
  Rng rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::vector<char> states_;
  std::vector<double> db_;
};

// ---------------------------------------------------------------------------
// Measurement

struct ProbeRecord {
  std::uint64_t slot = 0;
  bool forward_received = false;  ///< forward probe decoded without error
  bool reverse_received = false;  ///< reverse probe decoded without error
  bool detected = true;           ///< forward probe synchronised, erred_bits is meaningful
  std::uint32_t erred_bits = 0;   ///< bit errors in the forward probe

  friend bool operator==(const ProbeRecord&, const ProbeRecord&) = default;
};

struct ProbeRun {
  std::vector<ProbeRecord> records;
  double d_f = 0.0;
  double d_r = 0.0;
};

/// Sends one broadcast probe per second in each direction for `duration_s`
/// seconds. Delivery ratios are taken over the final `window_s` probes.
/// `interference` is the mean interfering power (relative to noise) and only
/// affects SNR-driven channels.
inline ProbeRun simulate_probes(const LinkTruth& truth, std::uint32_t duration_s,
                                std::uint32_t window_s, std::uint32_t probe_bits,
                                std::uint64_t seed, LinkId link_key = 0,
                                double interference = 0.0) {
  require(window_s >= 1, Errc::EmptyWindow, "window must hold at least one probe");
  require(duration_s >= window_s, Errc::InvalidArgument, "duration shorter than window");
  require(probe_bits >= 1, Errc::InvalidArgument, "probe_bits must be at least 1");
  validate_truth(truth);

  ChannelTrace forward(truth, seed, link_key, false);
  ChannelTrace reverse(truth, seed, link_key, true);
  Rng fwd_bits = make_rng(seed, link_key, Stream::ProbeForward);
  Rng rev_bits = make_rng(seed, link_key, Stream::ProbeReverse);

  // Returns (detected, erred bits).
  auto send = [&](ChannelTrace& trace, Rng& rng, std::uint64_t slot) {
    const double ber = trace.bit_error_rate(slot, probe_bits, interference);
    if (!(ber < 0.5)) return std::pair<bool, std::uint32_t>{false, 0u};
    std::binomial_distribution<std::uint32_t> errors(probe_bits, ber);
    return std::pair<bool, std::uint32_t>{true, errors(rng)};
  };

  ProbeRun run;
  run.records.reserve(duration_s);
  for (std::uint64_t slot = 0; slot < duration_s; ++slot) {
    ProbeRecord rec;
    rec.slot = slot;
    auto [detected, erred] = send(forward, fwd_bits, slot);
    rec.detected = detected;
    rec.erred_bits = erred;
    rec.forward_received = detected && erred == 0;
    auto [rdetected, rerred] = send(reverse, rev_bits, slot);
    rec.reverse_received = rdetected && rerred == 0;
    run.records.push_back(rec);
  }

  const auto window = std::span(run.records).last(window_s);
  const auto fwd = std::count_if(window.begin(), window.end(),
                                 [](const ProbeRecord& r) { return r.forward_received; });
  const auto rev = std::count_if(window.begin(), window.end(),
                                 [](const ProbeRecord& r) { return r.reverse_received; });
  run.d_f = static_cast<double>(fwd) / window_s;
  run.d_r = static_cast<double>(rev) / window_s;
  return run;
}

struct BitStats {
  double mu = 0.0;      ///< mean of -ln(per-probe success), nats
  double sigma2 = 0.0;  ///< population variance of the same, nats^2

  friend bool operator==(const BitStats&, const BitStats&) = default;
};

inline constexpr double kUndetectedBitErrorRate = 0.5;
inline constexpr double kSuccessFloor = 1e-6;

/// Per-probe log-transmission statistics from bit error counts. Undetected
/// probes count as an uninformative channel.
inline BitStats estimate_bit_stats(std::span<const ProbeRecord> records,
                                   std::uint32_t probe_bits) {
  require(records.size() >= 2, Errc::TooFewRecords, "need at least two probe records");
  require(probe_bits >= 1, Errc::InvalidArgument, "probe_bits must be at least 1");
  std::vector<double> x;
  x.reserve(records.size());
  for (const ProbeRecord& r : records) {
    require(r.erred_bits <= probe_bits, Errc::InvalidArgument, "erred_bits exceeds probe_bits");
    const double ber = r.detected ? static_cast<double>(r.erred_bits) / probe_bits
                                  : kUndetectedBitErrorRate;
    const double success =
        std::max(std::pow(1.0 - ber, static_cast<double>(probe_bits)), kSuccessFloor);
    x.push_back(-std::log(success));
  }
  // Shifted by the first sample so identical samples give exactly zero variance.
  const double n = static_cast<double>(x.size());
  const double shift = x.front();
  double sum = 0.0;
  for (double v : x) sum += v - shift;
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : x) ss += (v - shift - mean) * (v - shift - mean);
  return {shift + mean, ss / n};
}

/// Link bandwidth from packet-pair inter-arrival gaps: large packet size over
/// the minimum observed gap.
inline double packet_pair_bandwidth(std::span<const double> inter_arrival_s,
                                    double large_packet_bits) {
  require(!inter_arrival_s.empty(), Errc::NoSamples, "no packet-pair samples");
  for (double gap : inter_arrival_s) {
    require(std::isfinite(gap) && gap > 0, Errc::NonPositiveDelay,
            "inter-arrival gaps must be positive");
  }
  require(large_packet_bits > 0, Errc::InvalidArgument, "large packet size must be positive");
  return large_packet_bits / *std::min_element(inter_arrival_s.begin(), inter_arrival_s.end());
}

/// Inter-arrival gaps of simulated packet pairs: serialization of the large packet
/// plus exponential queueing jitter.
inline std::vector<double> simulate_packet_pairs(double rate_bps, double large_packet_bits,
                                                 std::uint32_t samples, double jitter_mean_s,
                                                 std::uint64_t seed, LinkId link_key = 0) {
  require(rate_bps > 0, Errc::ZeroRate, "rate must be positive");
  require(jitter_mean_s >= 0, Errc::InvalidArgument, "jitter must be non-negative");
  Rng rng = make_rng(seed, link_key, Stream::PacketPair);
  std::exponential_distribution<double> jitter(jitter_mean_s > 0 ? 1.0 / jitter_mean_s : 1.0);
  std::vector<double> gaps;
  gaps.reserve(samples);
  for (std::uint32_t i = 0; i < samples; ++i) {
    gaps.push_back(large_packet_bits / rate_bps + (jitter_mean_s > 0 ? jitter(rng) : 0.0));
  }
  return gaps;
}

struct NeighborActivity {
  NodeId node;
  double tau = 0.0;

  friend bool operator==(const NeighborActivity&, const NeighborActivity&) = default;
};

/// Fraction of time `node` occupies the channel: its links' activity, capped at 1.
inline double node_activity(const Topology& topo, std::span<const LinkTruth> truths,
                            NodeId node) {
  double tau = 0.0;
  for (LinkId id : topo.out_links(node)) tau += truths[id].traffic_rate_tau;
  return std::min(tau, 1.0);
}

/// Strongest power `node` projects onto its neighbours, relative to noise.
inline double node_interference_power(const Topology& topo, std::span<const LinkTruth> truths,
                                      NodeId node) {
  double power = 0.0;
  for (LinkId id : topo.out_links(node)) power = std::max(power, truths[id].interference_power);
  return power;
}

/// Activity-weighted interfering power at `link`'s endpoints, relative to noise.
inline double interference_level(const Topology& topo, std::span<const LinkTruth> truths,
                                 LinkId link) {
  double total = 0.0;
  for (NodeId w : interfering_nodes(topo, link)) {
    total += node_activity(topo, truths, w) * node_interference_power(topo, truths, w);
  }
  return total;
}

struct SinrSample {
  double snr = 0.0;
  double sinr = 0.0;
  std::vector<double> snir_samples;
  std::vector<NeighborActivity> neighbor_tau;
  std::size_t interferer_count = 0;
};

inline SinrSample sample_sinr(const Topology& topo, std::span<const LinkTruth> truths,
                              LinkId link, std::uint32_t samples_n, std::uint64_t seed) {
  require(link < topo.link_count(), Errc::UnknownLink, "link id " + std::to_string(link));
  require(truths.size() == topo.link_count(), Errc::InvalidArgument,
          "one truth per link required");
  require(samples_n >= 1, Errc::NoSamples, "samples_n must be at least 1");

  SinrSample out;
  double interference = 0.0;
  for (NodeId w : interfering_nodes(topo, link)) {
    const double tau = node_activity(topo, truths, w);
    out.neighbor_tau.push_back({w, tau});
    interference += tau * node_interference_power(topo, truths, w);
  }
  out.interferer_count = out.neighbor_tau.size();

  ChannelTrace trace(truths[link], seed, link, false);
  out.snir_samples.reserve(samples_n);
  double signal_sum = 0.0;
  for (std::uint64_t slot = 0; slot < samples_n; ++slot) {
    const double s = trace.signal(slot);
    signal_sum += s;
    out.snir_samples.push_back(s / (1.0 + interference));
  }
  out.snr = signal_sum / samples_n;
  out.sinr = out.snr / (1.0 + interference);
  return out;
}

struct MeasurementConfig {
  std::uint32_t duration_s = 100;
  std::uint32_t window_s = 10;
  std::uint32_t probe_bits = 1024;
  std::uint32_t sinr_samples = 100;
  std::uint32_t pair_samples = 10;
  double large_packet_bits = 12000.0;
  double pair_jitter_s = 50e-6;

  friend bool operator==(const MeasurementConfig&, const MeasurementConfig&) = default;
};

/// Everything a node knows about one of its links after measuring it.
struct LinkEstimate {
  double d_f = 0.0;
  double d_r = 0.0;
  double mu = 0.0;
  double sigma2 = 0.0;
  double bandwidth_bps = 0.0;
  double snr = 0.0;
  double sinr = 0.0;
  std::size_t interferer_count = 0;
  std::vector<NeighborActivity> neighbor_tau;
  std::vector<double> snir_samples;

  friend bool operator==(const LinkEstimate&, const LinkEstimate&) = default;
};

inline LinkEstimate measure_link(const Topology& topo, std::span<const LinkTruth> truths,
                                 LinkId link, const MeasurementConfig& config,
                                 std::uint64_t seed) {
  require(link < topo.link_count(), Errc::UnknownLink, "link id " + std::to_string(link));
  require(truths.size() == topo.link_count(), Errc::InvalidArgument,
          "one truth per link required");
  const LinkTruth& truth = truths[link];
  validate_truth(truth);

  const double interference = interference_level(topo, truths, link);
  const ProbeRun probes = simulate_probes(truth, config.duration_s, config.window_s,
                                          config.probe_bits, seed, link, interference);
  const BitStats bits = estimate_bit_stats(
      std::span(probes.records)
          .last(std::min<std::size_t>(probes.records.size(), std::max<std::uint32_t>(config.window_s, 2))),
      config.probe_bits);
  const auto gaps =
      simulate_packet_pairs(topo.link(link).nominal_rate_bps, config.large_packet_bits,
                            std::max<std::uint32_t>(config.pair_samples, 1),
                            config.pair_jitter_s, seed, link);
  SinrSample sinr = sample_sinr(topo, truths, link, config.sinr_samples, seed);

  LinkEstimate est;
  est.d_f = probes.d_f;
  est.d_r = probes.d_r;
  est.mu = bits.mu;
  est.sigma2 = bits.sigma2;
  est.bandwidth_bps = packet_pair_bandwidth(gaps, config.large_packet_bits);
  est.snr = sinr.snr;
  est.sinr = sinr.sinr;
  est.interferer_count = sinr.interferer_count;
  est.neighbor_tau = std::move(sinr.neighbor_tau);
  est.snir_samples = std::move(sinr.snir_samples);
  return est;
}

/// Measures every link of the topology; link `i` uses a stream derived from (seed, i).
inline std::vector<LinkEstimate> measure_all(const Topology& topo,
                                             std::span<const LinkTruth> truths,
                                             const MeasurementConfig& config,
                                             std::uint64_t seed) {
  std::vector<LinkEstimate> out;
  out.reserve(topo.link_count());
  for (LinkId id = 0; id < topo.link_count(); ++id) {
    out.push_back(measure_link(topo, truths, id, config, seed));
  }
  return out;
}

}  // namespace meshmetrics
