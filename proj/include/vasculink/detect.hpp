#pragma once

// Sampling-time strategies, symbol-duration rule, the adaptive
// decision-feedback detector for OOK over the Poisson channel, and the
// Monte Carlo SER harness.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "vasculink/channel.hpp"
#include "vasculink/error.hpp"
#include "vasculink/metrics.hpp"
#include "vasculink/parallel.hpp"
#include "vasculink/random.hpp"

namespace vasculink {

enum class SamplingStrategy { global_peak, strongest_path_peak, mean_excess_delay };

inline std::string_view to_string(SamplingStrategy s) {
  switch (s) {
    case SamplingStrategy::global_peak: return "global-peak";
    case SamplingStrategy::strongest_path_peak: return "strongest-path";
    case SamplingStrategy::mean_excess_delay: return "mean-delay";
  }
  return "strongest-path";
}

inline SamplingStrategy parse_strategy(std::string_view name) {
  if (name == "global-peak") return SamplingStrategy::global_peak;
  if (name == "strongest-path") return SamplingStrategy::strongest_path_peak;
  if (name == "mean-delay") return SamplingStrategy::mean_excess_delay;
  throw ModelError(detail::concat("unknown sampling strategy '", name, "'"));
}

/// Positive root of t^2 + 3 theta t - mu^2 = 0, i.e. the mode of the path
/// flux. Written as 2 mu^2 / (3 theta + sqrt(9 theta^2 + 4 mu^2)), which is
/// stable for any theta >= 0 and equals mu at theta = 0.
inline double path_peak_time(double mean, double scale) {
  return 2.0 * mean * mean / (3.0 * scale + std::sqrt(9.0 * scale * scale + 4.0 * mean * mean));
}

inline double path_peak_time(const TxRxPath& p) { return path_peak_time(p.mean, p.scale); }

/// Index of the path whose weighted flux gamma_g j_g peaks highest.
inline std::size_t strongest_path(const ChannelModel& model) {
  if (model.paths().empty()) throw ModelError("empty path ensemble");
  std::size_t best = 0;
  double best_value = -1.0;
  for (std::size_t g = 0; g < model.paths().size(); ++g) {
    const TxRxPath& p = model.paths()[g];
    const double v = p.fraction * path_flux(p, path_peak_time(p));
    if (v > best_value) {
      best_value = v;
      best = g;
    }
  }
  return best;
}

/// argmax_t h(t): 512-point scan of [min t_peak, max (mu + 3 sigma)], then
/// golden-section refinement inside the bracket around the best scan point.
inline double global_peak_time(const ChannelModel& model) {
  if (model.paths().empty()) throw ModelError("empty path ensemble");
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& p : model.paths()) {
    lo = std::min(lo, path_peak_time(p));
    hi = std::max(hi, p.mean + 3.0 * std::sqrt(p.mean * p.scale));
  }
  constexpr std::size_t scan = 512;
  const double step = (hi - lo) / static_cast<double>(scan - 1);
  std::size_t best = 0;
  double best_value = -1.0;
  for (std::size_t i = 0; i < scan; ++i) {
    const double v = cir(model, lo + step * static_cast<double>(i));
    if (!std::isfinite(v)) throw ModelError("non-finite impulse response during peak search");
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  double a = lo + step * static_cast<double>(best > 0 ? best - 1 : 0);
  double b = lo + step * static_cast<double>(std::min(best + 1, scan - 1));
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = cir(model, c), fd = cir(model, d);
  for (int it = 0; it < 200 && (b - a) > 1e-13 * std::max(1.0, std::abs(b)); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = cir(model, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = cir(model, d);
    }
  }
  const double t = 0.5 * (a + b);
  if (!std::isfinite(cir(model, t))) throw ModelError("peak search failed");
  return t;
}

inline double resolve_sampling_time(SamplingStrategy strategy, const ChannelModel& model,
                                    const MultipathMetrics& metrics) {
  switch (strategy) {
    case SamplingStrategy::global_peak: return global_peak_time(model);
    case SamplingStrategy::strongest_path_peak:
      return path_peak_time(model.paths()[strongest_path(model)]);
    case SamplingStrategy::mean_excess_delay: return metrics.mean_excess_delay;
  }
  return metrics.mean_excess_delay;
}

/// T_s = c * tau_RMS.
inline double min_symbol_duration(double rms_delay_spread, double factor) {
  if (!(factor > 0.0)) throw ModelError("symbol-duration factor must be positive");
  return factor * rms_delay_spread;
}

/// psi = d0 / ln(1 + d0 / lambda); decide 1 iff r > psi. With no ISI and no
/// noise (lambda = 0) the ML rule is "decide 1 iff r >= 1", encoded as 0.5.
inline double decision_threshold(double d0, double isi_plus_noise) {
  if (!(d0 > 0.0)) throw ModelError("channel tap zero at sampling time");
  if (isi_plus_noise < 0.0) throw ModelError("ISI-plus-noise rate must be non-negative");
  if (isi_plus_noise == 0.0) return 0.5;
  return d0 / std::log1p(d0 / isi_plus_noise);
}

/// Largest per-molecule observation probability rx_gain * gamma_g * max_t j_g,
/// for judging the rare-event (Poisson) approximation.
inline double max_observation_probability(const ChannelModel& model) {
  double best = 0.0;
  for (const auto& p : model.paths())
    best = std::max(best, model.rx_gain * p.fraction * path_flux(p, path_peak_time(p)));
  return best;
}

struct LinkConfig {
  double symbol_duration = 1.0;    // T_s, s
  std::size_t memory = 2;          // detector memory L
  double molecules_per_one = 1e4;  // N
  double background = 500.0;       // mean noise count per sample
  SamplingStrategy strategy = SamplingStrategy::strongest_path_peak;
  std::uint64_t symbol_count = 1000000;
  std::uint64_t seed = 0;
  bool genie_aided = false;
  bool record_thresholds = false;
};

struct LinkResult {
  double ser = 0.0;
  std::uint64_t errors = 0;
  std::uint64_t symbol_count = 0;
  double ci_low = 0.0;  // 95% Wilson interval
  double ci_high = 0.0;
  double resolved_sampling_time = 0.0;
  double psi_mean = 0.0;
  std::size_t generation_memory = 0;
  std::vector<double> decision_threshold_trace;
};

/// Received samples use the full physical memory so ISI is never truncated:
/// L_gen = max(L, ceil((E[T] + 8 tau_RMS) / T_s) + 1).
inline std::size_t generation_memory(const MultipathMetrics& metrics, double symbol_duration,
                                     std::size_t memory) {
  const double span = metrics.mean_excess_delay + 8.0 * metrics.rms_delay_spread;
  const auto needed = static_cast<std::size_t>(std::ceil(span / symbol_duration)) + 1;
  return std::max(memory, needed);
}

inline std::pair<double, double> wilson_interval(std::uint64_t errors, std::uint64_t trials) {
  if (trials == 0) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(errors) / n;
  const double denom = 1.0 + z * z / n;
  const double centre = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

/// Simulates an equiprobable i.i.d. OOK stream through the Poisson channel and
/// detects it with the adaptive threshold, feeding back either past decisions
/// or (genie) the true symbols. The first L_gen symbols are warm-up.
inline LinkResult run_link(const ChannelModel& model, const MultipathMetrics& metrics,
                           const LinkConfig& config) {
  if (!(config.symbol_duration > 0.0)) throw ModelError("symbol duration must be positive");
  if (config.memory < 1) throw ModelError("detector memory must be at least 1");
  if (config.symbol_count < 1) throw ModelError("symbol count must be at least 1");
  if (config.background < 0.0) throw ModelError("background must be non-negative");

  ChannelModel scaled = model;
  scaled.released_molecules = config.molecules_per_one;

  LinkResult result;
  result.resolved_sampling_time = resolve_sampling_time(config.strategy, model, metrics);
  const std::size_t l_gen = generation_memory(metrics, config.symbol_duration, config.memory);
  result.generation_memory = l_gen;
  const std::vector<double> taps =
      expected_taps(scaled, config.symbol_duration, result.resolved_sampling_time, l_gen);
  const double d0 = taps[0];
  if (!(d0 > 0.0)) throw ModelError("channel tap zero at sampling time");

  const std::uint64_t total = l_gen + config.symbol_count;
  std::vector<std::uint8_t> sent(total), decided(total);
  Xoshiro256 rng(config.seed);
  double psi_sum = 0.0;
  if (config.record_thresholds) result.decision_threshold_trace.reserve(config.symbol_count);

  for (std::uint64_t k = 0; k < total; ++k) {
    sent[k] = static_cast<std::uint8_t>(rng() >> 63);
    double rate = config.background;
    for (std::size_t l = 0; l < l_gen && l <= k; ++l)
      if (sent[k - l]) rate += taps[l];
    const std::uint64_t r = sample_poisson(rate, rng);

    const auto& feedback = config.genie_aided ? sent : decided;
    double isi = config.background;
    for (std::size_t l = 1; l < config.memory && l <= k; ++l)
      if (feedback[k - l]) isi += taps[l];
    const double psi = decision_threshold(d0, isi);
    decided[k] = static_cast<double>(r) > psi ? 1 : 0;

    if (k >= l_gen) {
      if (decided[k] != sent[k]) ++result.errors;
      psi_sum += psi;
      if (config.record_thresholds) result.decision_threshold_trace.push_back(psi);
    }
  }
  result.symbol_count = config.symbol_count;
  result.ser = static_cast<double>(result.errors) / static_cast<double>(config.symbol_count);
  std::tie(result.ci_low, result.ci_high) = wilson_interval(result.errors, config.symbol_count);
  result.psi_mean = psi_sum / static_cast<double>(config.symbol_count);
  return result;
}

/// Seed of sweep point `index`; a fixed base seed pairs DF and genie runs.
inline std::uint64_t sweep_seed(std::uint64_t seed, std::uint64_t index) {
  return Xoshiro256::stream(seed, index)();
}

/// run_link for each molecule count, in parallel across points. Point i uses
/// sweep_seed(base.seed, i).
inline std::vector<LinkResult> ser_sweep(const ChannelModel& model, const MultipathMetrics& metrics,
                                         const LinkConfig& base, std::span<const double> molecules,
                                         unsigned threads = 1) {
  std::vector<LinkResult> results(molecules.size());
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < molecules.size(); i += stride) {
      LinkConfig config = base;
      config.molecules_per_one = molecules[i];
      config.seed = sweep_seed(base.seed, i);
      results[i] = run_link(model, metrics, config);
    }
  };
  parallel_strided(std::min<std::size_t>(std::max(1u, threads), molecules.size()), work);
  return results;
}

}  // namespace vasculink
