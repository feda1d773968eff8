#pragma once

// Closed-form path flux, channel impulse response and the Poisson
// observation model of the transparent counting receiver.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vasculink/error.hpp"
#include "vasculink/flow.hpp"
#include "vasculink/network.hpp"
#include "vasculink/paths.hpp"

namespace vasculink {

/// Inverse-Gaussian first-passage density with the given mean and scale
/// (variance / mean), evaluated in log space. Zero for t <= 0.
inline double path_flux(double mean, double scale, double t) {
  if (!(t > 0.0)) return 0.0;
  const double dt = t - mean;
  const double log_value = std::log(mean) - 0.5 * std::log(2.0 * std::numbers::pi * scale) -
                           1.5 * std::log(t) - dt * dt / (2.0 * scale * t);
  return std::exp(log_value);
}

inline double path_flux(const TxRxPath& path, double t) { return path_flux(path.mean, path.scale, t); }

/// Paths plus receiver geometry: everything needed to evaluate h(t) and H(f).
struct ChannelModel {
  PathEnsemble ensemble;
  double rx_gain = 0.0;             // s, l_Rx / u_b
  double released_molecules = 1.0;  // N
  double background = 0.0;          // expected noise count per sample

  const std::vector<TxRxPath>& paths() const noexcept { return ensemble.paths; }
};

inline ChannelModel make_channel(const VesselNetwork& network, const FlowSolution& flow,
                                 const TxRxPlacement& placement, PathEnsemble ensemble,
                                 double background = 0.0) {
  if (background < 0.0) throw ModelError("background count must be non-negative");
  const std::size_t rx = network.pipe_index(placement.rx_pipe);
  ChannelModel model;
  model.ensemble = std::move(ensemble);
  model.rx_gain = placement.rx_length / flow.velocity[rx];
  model.released_molecules = static_cast<double>(placement.released_molecules);
  model.background = background;
  return model;
}

/// Copy of `model` restricted to path `g`, keeping its fraction.
inline ChannelModel single_path_model(const ChannelModel& model, std::size_t g) {
  ChannelModel sub = model;
  TxRxPath path = model.ensemble.paths.at(g);
  sub.ensemble.paths = {path};
  sub.ensemble.reach_probability = path.fraction;
  sub.ensemble.weights = {1.0};
  return sub;
}

/// Weighted contribution rx_gain * gamma_g * j_g(t) of every path.
inline std::vector<double> path_contributions(const ChannelModel& model, double t) {
  std::vector<double> out;
  out.reserve(model.paths().size());
  for (const auto& p : model.paths()) out.push_back(model.rx_gain * p.fraction * path_flux(p, t));
  return out;
}

/// Channel impulse response h(t) in 1/m.
inline double cir(const ChannelModel& model, double t) {
  double sum = 0.0;
  for (const auto& p : model.paths()) sum += p.fraction * path_flux(p, t);
  return model.rx_gain * sum;
}

/// d[l] = N h(l T_s + t_s), l = 0..L-1.
inline std::vector<double> expected_taps(const ChannelModel& model, double symbol_duration,
                                         double sampling_time, std::size_t memory) {
  if (!(symbol_duration > 0.0)) throw ModelError("symbol duration must be positive");
  if (memory < 1) throw ModelError("channel memory must be at least 1");
  std::vector<double> taps(memory);
  for (std::size_t l = 0; l < memory; ++l)
    taps[l] = model.released_molecules *
              cir(model, static_cast<double>(l) * symbol_duration + sampling_time);
  return taps;
}

/// Poisson rate sum_l d[l] s[k-l] + n; `window[l]` holds s[k-l].
inline double observation_rate(std::span<const double> taps, std::span<const std::uint8_t> window,
                               double background) {
  if (taps.size() != window.size()) throw ModelError("symbol window length must equal tap count");
  double rate = background;
  for (std::size_t l = 0; l < taps.size(); ++l)
    if (window[l]) rate += taps[l];
  return rate;
}

template <class Rng>
std::uint64_t sample_poisson(double rate, Rng& rng) {
  if (!(rate > 0.0)) return 0;
  std::poisson_distribution<std::uint64_t> dist(rate);
  return dist(rng);
}

/// One received sample r[k] ~ Pois(sum_l d[l] s[k-l] + n).
template <class Rng>
std::uint64_t sample_observation(std::span<const double> taps, std::span<const std::uint8_t> window,
                                 double background, Rng& rng) {
  return sample_poisson(observation_rate(taps, window, background), rng);
}

/// Model-validity notes for a configured channel. Thresholds are heuristics.
inline std::vector<std::string> channel_warnings(const VesselNetwork& network,
                                                 const FlowSolution& flow,
                                                 const TxRxPlacement& placement,
                                                 const ChannelModel& model) {
  std::vector<std::string> warnings;
  std::vector<bool> flagged(network.pipe_count(), false);
  for (const auto& path : model.paths()) {
    for (std::size_t p : path.pipes) {
      if (flagged[p]) continue;
      const double peclet =
          flow.velocity[p] * network.pipe(p).length / flow.effective_diffusion[p];
      if (peclet < 10.0) {
        flagged[p] = true;
        warnings.push_back(detail::concat("pipe '", network.pipe(p).id, "': u*l/D_eff = ", peclet,
                                          " < 10 (heuristic threshold), weak advection dominance"));
      }
    }
  }
  const Pipe& rx = network.pipe(network.pipe_index(placement.rx_pipe));
  if (placement.rx_length > 0.1 * rx.length)
    warnings.push_back(detail::concat("rx length ", placement.rx_length, " exceeds 0.1 of pipe '",
                                      rx.id, "' (heuristic bound for the uniform-concentration gain)"));
  if (model.ensemble.same_pipe)
    warnings.push_back("tx and rx share one pipe; moments use the z_Rx - z_Tx reduction");
  return warnings;
}

}  // namespace vasculink
