#pragma once

// Frequency response of the channel in closed form, unwrapped phase, group
// delay, and a rectangle-rule FFT of the sampled impulse response for
// cross-checking.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include <fftw3.h>

#include "vasculink/channel.hpp"
#include "vasculink/error.hpp"
#include "vasculink/metrics.hpp"

namespace vasculink {

using complex = std::complex<double>;

/// exp((mu/theta)(1 - sqrt(1 + j 4 pi theta f))) on the principal branch.
/// Rewritten as exp(-j 4 pi mu f / (1 + sqrt(1 + j 4 pi theta f))), which has
/// no cancellation near f = 0 and stays finite as theta -> 0.
inline complex path_response(double mean, double scale, double f) {
  const complex root = std::sqrt(complex(1.0, 4.0 * std::numbers::pi * scale * f));
  return std::exp(complex(0.0, -4.0 * std::numbers::pi * mean * f) / (1.0 + root));
}

/// Phase of path_response without wrapping: the imaginary part of the exponent.
inline double path_phase(double mean, double scale, double f) {
  const complex root = std::sqrt(complex(1.0, 4.0 * std::numbers::pi * scale * f));
  return (complex(0.0, -4.0 * std::numbers::pi * mean * f) / (1.0 + root)).imag();
}

/// H(f) in s/m.
inline complex frequency_response(const ChannelModel& model, double f) {
  complex sum = 0.0;
  for (const auto& p : model.paths()) sum += p.fraction * path_response(p.mean, p.scale, f);
  return model.rx_gain * sum;
}

/// Weighted per-path terms rx_gain * gamma_g * H_g(f).
inline std::vector<complex> path_responses(const ChannelModel& model, double f) {
  std::vector<complex> out;
  out.reserve(model.paths().size());
  for (const auto& p : model.paths())
    out.push_back(model.rx_gain * p.fraction * path_response(p.mean, p.scale, f));
  return out;
}

/// `samples` equally spaced frequencies on [0, f_max].
inline std::vector<double> linear_grid(double f_max, std::size_t samples) {
  if (samples < 2) throw ModelError("frequency grid needs at least two samples");
  if (!(f_max > 0.0)) throw ModelError("f_max must be positive");
  std::vector<double> grid(samples);
  for (std::size_t k = 0; k < samples; ++k)
    grid[k] = f_max * static_cast<double>(k) / static_cast<double>(samples - 1);
  return grid;
}

/// Continuous phase of H on an ascending grid starting at 0. Every step is
/// resolved through the interval midpoint; a step of pi or more means the
/// grid is too coarse to unwrap reliably and is rejected.
inline std::vector<double> phase_unwrapped(const ChannelModel& model, std::span<const double> grid) {
  if (grid.empty()) return {};
  if (grid.front() != 0.0) throw ModelError("phase unwrapping needs a grid starting at f = 0");
  std::vector<double> phase(grid.size());
  phase[0] = std::arg(frequency_response(model, 0.0));
  complex prev = frequency_response(model, grid[0]);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k] > grid[k - 1])) throw ModelError("frequency grid must be strictly ascending");
    const complex mid = frequency_response(model, 0.5 * (grid[k - 1] + grid[k]));
    const complex cur = frequency_response(model, grid[k]);
    const double step = std::arg(mid * std::conj(prev)) + std::arg(cur * std::conj(mid));
    if (std::abs(step) >= std::numbers::pi)
      throw ModelError(detail::concat("phase jump of ", step, " rad between ", grid[k - 1],
                                      " Hz and ", grid[k], " Hz; use a finer frequency grid"));
    phase[k] = phase[k - 1] + step;
    prev = cur;
  }
  return phase;
}

/// tau_g = -(1/2pi) d phi / df by second-order finite differences
/// (three-point central inside, three-point one-sided at the ends).
inline std::vector<double> group_delay_from_phase(std::span<const double> grid,
                                                  std::span<const double> phase) {
  const std::size_t n = grid.size();
  if (phase.size() != n) throw ModelError("phase and grid sizes differ");
  if (n < 3) throw ModelError("group delay needs at least three grid points");
  std::vector<double> tau(n);
  // Derivative at x[i] from the parabola through points (a, b, c).
  auto derivative = [&](std::size_t a, std::size_t b, std::size_t c, std::size_t at) {
    const double xa = grid[a], xb = grid[b], xc = grid[c], x = grid[at];
    return phase[a] * ((x - xb) + (x - xc)) / ((xa - xb) * (xa - xc)) +
           phase[b] * ((x - xa) + (x - xc)) / ((xb - xa) * (xb - xc)) +
           phase[c] * ((x - xa) + (x - xb)) / ((xc - xa) * (xc - xb));
  };
  tau[0] = derivative(0, 1, 2, 0);
  for (std::size_t k = 1; k + 1 < n; ++k) tau[k] = derivative(k - 1, k, k + 1, k);
  tau[n - 1] = derivative(n - 3, n - 2, n - 1, n - 1);
  for (double& t : tau) t *= -1.0 / (2.0 * std::numbers::pi);
  return tau;
}

inline std::vector<double> group_delay(const ChannelModel& model, std::span<const double> grid) {
  const auto phase = phase_unwrapped(model, grid);
  return group_delay_from_phase(grid, phase);
}

struct SpectrumSample {
  double frequency = 0.0;  // Hz
  complex response;        // s/m
  double magnitude = 0.0;
  double phase = 0.0;        // rad, unwrapped
  double group_delay = 0.0;  // s
};

inline std::vector<SpectrumSample> spectrum(const ChannelModel& model, std::span<const double> grid) {
  const auto phase = phase_unwrapped(model, grid);
  const auto tau = group_delay_from_phase(grid, phase);
  std::vector<SpectrumSample> out(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const complex h = frequency_response(model, grid[k]);
    out[k] = {grid[k], h, std::abs(h), phase[k], tau[k]};
  }
  return out;
}

/// Rectangle-rule transform of h(t) sampled at n*dt, n = 0..samples-1,
/// dt = window/samples. Bin k sits at k/window Hz for k = 0..samples/2.
struct NumericalSpectrum {
  double bin_spacing = 0.0;  // Hz
  std::vector<complex> response;

  double frequency(std::size_t k) const { return bin_spacing * static_cast<double>(k); }
};

inline NumericalSpectrum numerical_response(const ChannelModel& model, double window,
                                            std::size_t samples) {
  if (!(window > 0.0)) throw ModelError("FFT window must be positive");
  if (samples < 2) throw ModelError("FFT needs at least two samples");
  const double dt = window / static_cast<double>(samples);
  const std::size_t bins = samples / 2 + 1;

  double* in = fftw_alloc_real(samples);
  fftw_complex* out = fftw_alloc_complex(bins);
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(samples), in, out, FFTW_ESTIMATE);
  for (std::size_t n = 0; n < samples; ++n) in[n] = cir(model, static_cast<double>(n) * dt);
  fftw_execute(plan);

  NumericalSpectrum result;
  result.bin_spacing = 1.0 / window;
  result.response.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) result.response[k] = dt * complex(out[k][0], out[k][1]);

  fftw_destroy_plan(plan);
  fftw_free(out);
  fftw_free(in);
  return result;
}

/// Time support for the FFT cross-check: [0, E[T] + 8 tau_RMS], widened if
/// needed so every path is covered to 10 of its own standard deviations.
inline double default_fft_window(const ChannelModel& model, const MultipathMetrics& metrics) {
  double window = metrics.mean_excess_delay + 8.0 * metrics.rms_delay_spread;
  for (const auto& p : model.paths())
    window = std::max(window, p.mean + 10.0 * std::sqrt(p.variance));
  return window;
}

/// At least 2^16 samples and at least 64 per narrowest path standard deviation.
inline std::size_t default_fft_samples(const ChannelModel& model, double window) {
  double narrowest = window;
  for (const auto& p : model.paths()) narrowest = std::min(narrowest, std::sqrt(p.variance));
  const double needed = 64.0 * window / narrowest;
  std::size_t samples = std::size_t{1} << 16;
  while (static_cast<double>(samples) < needed && samples < (std::size_t{1} << 26)) samples <<= 1;
  return samples;
}

}  // namespace vasculink
