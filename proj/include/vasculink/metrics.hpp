#pragma once

// Multipath metrics of the network first-passage time T: delay profile,
// mean excess delay, RMS delay spread and coherence bandwidth.

#include <cmath>
#include <numbers>

#include "vasculink/channel.hpp"
#include "vasculink/error.hpp"
#include "vasculink/paths.hpp"

namespace vasculink {

struct MultipathMetrics {
  double mean_excess_delay = 0.0;    // s, E[T]
  double rms_delay_spread = 0.0;     // s, tau_RMS
  double diffusion_spread_sq = 0.0;  // s^2, sum w mu theta
  double multipath_spread_sq = 0.0;  // s^2, weighted variance of the path means
  double coherence_bandwidth = 0.0;  // Hz
};

/// f_T(t) = sum_g w_g j_g(t); integrates to one.
inline double pdp(const PathEnsemble& ensemble, double t) {
  double sum = 0.0;
  for (std::size_t g = 0; g < ensemble.size(); ++g)
    sum += ensemble.weights[g] * path_flux(ensemble.paths[g], t);
  return sum;
}

inline double mean_excess_delay(const PathEnsemble& ensemble) {
  if (ensemble.size() == 0) throw ModelError("empty path ensemble");
  double mean = 0.0;
  for (std::size_t g = 0; g < ensemble.size(); ++g)
    mean += ensemble.weights[g] * ensemble.paths[g].mean;
  return mean;
}

inline double coherence_bandwidth(double rms_delay_spread) {
  if (!(rms_delay_spread > 0.0)) throw ModelError("coherence bandwidth needs tau_RMS > 0");
  return 1.0 / (2.0 * std::numbers::pi * rms_delay_spread);
}

/// E[T], tau_RMS and both variance components. The multipath term is
/// accumulated as sum w (mu - E[T])^2 so it never goes negative.
inline MultipathMetrics multipath_metrics(const PathEnsemble& ensemble) {
  MultipathMetrics m;
  m.mean_excess_delay = mean_excess_delay(ensemble);
  for (std::size_t g = 0; g < ensemble.size(); ++g) {
    const TxRxPath& p = ensemble.paths[g];
    const double w = ensemble.weights[g];
    const double dev = p.mean - m.mean_excess_delay;
    m.diffusion_spread_sq += w * p.mean * p.scale;
    m.multipath_spread_sq += w * dev * dev;
  }
  m.rms_delay_spread = std::sqrt(m.diffusion_spread_sq + m.multipath_spread_sq);
  m.coherence_bandwidth =
      m.rms_delay_spread > 0.0 ? coherence_bandwidth(m.rms_delay_spread) : 0.0;
  return m;
}

}  // namespace vasculink
