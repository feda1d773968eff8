#pragma once

// Monte Carlo particle oracle at the first-passage-time level: every pipe
// crossing draws an inverse-Gaussian FPT, bifurcations route by flow split,
// and the particle is recorded when it crosses the Rx centre.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "vasculink/error.hpp"
#include "vasculink/flow.hpp"
#include "vasculink/metrics.hpp"
#include "vasculink/network.hpp"
#include "vasculink/parallel.hpp"
#include "vasculink/paths.hpp"
#include "vasculink/random.hpp"

namespace vasculink {

/// Inverse-Gaussian variate IG(mean, shape) by the Michael-Schucany-Haas
/// transformation. The smaller root is written as mean / (1 + q + sqrt(q(q+2)))
/// with q = mean * nu^2 / (2 shape), which avoids cancellation for large q.
template <class Rng>
double sample_inverse_gaussian(double mean, double shape, Rng& rng) {
  std::normal_distribution<double> normal;
  const double nu = normal(rng);
  const double q = mean * nu * nu / (2.0 * shape);
  const double x = mean / (1.0 + q + std::sqrt(q * (q + 2.0)));
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return u <= mean / (mean + x) ? x : mean * mean / x;
}

/// FPT across `length` metres of a pipe: IG with mean l/u and variance
/// 2 D_eff l / u^3. Zero for zero length.
template <class Rng>
double sample_pipe_fpt(double length, double velocity, double eff_diffusion, Rng& rng) {
  if (!(length > 0.0)) return 0.0;
  const double mean = length / velocity;
  const double variance = 2.0 * eff_diffusion * length / (velocity * velocity * velocity);
  return sample_inverse_gaussian(mean, mean * mean * mean / variance, rng);
}

struct ParticleTrace {
  std::vector<std::size_t> path_pipes;
  double network_fpt = 0.0;  // s, sum of the per-pipe draws
  bool reached_rx = false;
};

/// Routes single particles through a solved network.
class ParticleSimulator {
 public:
  ParticleSimulator(const VesselNetwork& network, const FlowSolution& flow,
                    const TxRxPlacement& placement, std::size_t hop_cap = 0)
      : network_(&network),
        flow_(&flow),
        tx_(network.pipe_index(placement.tx_pipe)),
        rx_(network.pipe_index(placement.rx_pipe)),
        tx_position_(placement.tx_position),
        rx_position_(placement.rx_position),
        hop_cap_(hop_cap ? hop_cap : 10 * network.pipe_count()) {
    cumulative_.resize(network.node_count());
    for (std::size_t n = 0; n < network.node_count(); ++n) {
      const auto outs = network.out_pipes(n);
      double total = 0.0;
      for (std::size_t p : outs) total += flow.flow_rate[p];
      double acc = 0.0;
      for (std::size_t p : outs) {
        acc += flow.flow_rate[p] / total;
        cumulative_[n].push_back(acc);
      }
      if (!cumulative_[n].empty()) cumulative_[n].back() = 1.0;
    }
  }

  template <class Rng>
  ParticleTrace trace(Rng& rng) const {
    ParticleTrace t;
    run(rng, t.path_pipes, t.network_fpt, t.reached_rx);
    return t;
  }

  /// Runs one particle, writing its pipes into `path` (cleared first).
  template <class Rng>
  void run(Rng& rng, std::vector<std::size_t>& path, double& fpt, bool& reached) const {
    path.clear();
    path.push_back(tx_);
    fpt = 0.0;
    reached = false;
    const Pipe& tx_pipe = network_->pipe(tx_);
    if (tx_ == rx_ && rx_position_ > tx_position_) {
      fpt = draw(tx_, rx_position_ - tx_position_, rng);
      reached = true;
      return;
    }
    fpt = draw(tx_, tx_pipe.length - tx_position_, rng);
    std::size_t pipe = tx_;
    for (std::size_t hops = 1;; ++hops) {
      if (hops > hop_cap_) throw ModelError("particle exceeded the hop-count cap");
      const std::size_t node = network_->target(pipe);
      const auto outs = network_->out_pipes(node);
      if (outs.empty()) return;  // left through an outlet
      std::size_t choice = 0;
      if (outs.size() > 1) {
        const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const auto& cum = cumulative_[node];
        choice = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
        choice = std::min(choice, outs.size() - 1);
      }
      pipe = outs[choice];
      path.push_back(pipe);
      if (pipe == rx_) {
        fpt += draw(pipe, rx_position_, rng);
        reached = true;
        return;
      }
      fpt += draw(pipe, network_->pipe(pipe).length, rng);
    }
  }

 private:
  template <class Rng>
  double draw(std::size_t pipe, double distance, Rng& rng) const {
    return sample_pipe_fpt(distance, flow_->velocity[pipe], flow_->effective_diffusion[pipe], rng);
  }

  const VesselNetwork* network_;
  const FlowSolution* flow_;
  std::size_t tx_, rx_;
  double tx_position_, rx_position_;
  std::size_t hop_cap_;
  std::vector<std::vector<double>> cumulative_;
};

/// Aggregated outcome of a particle run.
struct SimulationSummary {
  std::uint64_t particles = 0;
  std::uint64_t reached = 0;
  std::vector<double> arrival_times;  // FPTs of the particles that reached the Rx
  std::map<std::vector<std::size_t>, std::uint64_t> path_counts;  // reached particles only

  double reach_fraction() const {
    return particles ? static_cast<double>(reached) / static_cast<double>(particles) : 0.0;
  }

  double mean() const {
    double s = 0.0;
    for (double t : arrival_times) s += t;
    return arrival_times.empty() ? 0.0 : s / static_cast<double>(arrival_times.size());
  }

  double stddev() const {
    if (arrival_times.size() < 2) return 0.0;
    const double m = mean();
    double s = 0.0;
    for (double t : arrival_times) s += (t - m) * (t - m);
    return std::sqrt(s / static_cast<double>(arrival_times.size() - 1));
  }
};

/// Particles are processed in fixed chunks, each with its own stream
/// Xoshiro256::stream(seed, chunk). Merging happens in chunk order, so the
/// result does not depend on the number of worker threads.
inline SimulationSummary simulate_particles(const VesselNetwork& network, const FlowSolution& flow,
                                            const TxRxPlacement& placement, std::uint64_t count,
                                            std::uint64_t seed, unsigned threads = 1) {
  if (count < 1) throw ModelError("particle count must be at least 1");
  constexpr std::uint64_t chunk_size = 1u << 14;
  const std::uint64_t chunks = (count + chunk_size - 1) / chunk_size;
  const ParticleSimulator sim(network, flow, placement);

  std::vector<SimulationSummary> partial(chunks);
  auto work = [&](std::uint64_t first, std::uint64_t stride) {
    std::vector<std::size_t> path;
    for (std::uint64_t c = first; c < chunks; c += stride) {
      Xoshiro256 rng = Xoshiro256::stream(seed, c);
      const std::uint64_t n = std::min(chunk_size, count - c * chunk_size);
      SimulationSummary& out = partial[c];
      out.particles = n;
      for (std::uint64_t i = 0; i < n; ++i) {
        double fpt = 0.0;
        bool reached = false;
        sim.run(rng, path, fpt, reached);
        if (reached) {
          ++out.reached;
          out.arrival_times.push_back(fpt);
          ++out.path_counts[path];
        }
      }
    }
  };

  parallel_strided(std::min<std::uint64_t>(std::max(1u, threads), chunks), work);

  SimulationSummary total;
  for (auto& part : partial) {
    total.particles += part.particles;
    total.reached += part.reached;
    total.arrival_times.insert(total.arrival_times.end(), part.arrival_times.begin(),
                               part.arrival_times.end());
    for (const auto& [key, n] : part.path_counts) total.path_counts[key] += n;
  }
  return total;
}

/// Integral of f_T over [a, b] by adaptive Gauss-Kronrod.
inline double pdp_probability(const PathEnsemble& ensemble, double a, double b) {
  if (!(b > a)) return 0.0;
  auto f = [&](double t) { return pdp(ensemble, t); };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, 1e-12);
}

struct HistogramBin {
  double lower = 0.0;
  double upper = 0.0;
  std::uint64_t observed = 0;
  double expected = 0.0;
};

struct GoodnessOfFit {
  std::vector<HistogramBin> bins;  // after merging sparse bins
  double statistic = 0.0;
  std::size_t degrees_of_freedom = 0;
  double p_value = 0.0;
};

/// Pearson chi-square test of FPT samples against f_T. Starts from
/// `initial_bins` equal-width bins over the bulk of the distribution plus
/// two tail bins, then merges neighbours until every expected count is >= 5.
inline GoodnessOfFit chi_square_vs_pdp(const PathEnsemble& ensemble, std::span<const double> times,
                                       std::size_t initial_bins = 200) {
  if (times.empty()) throw ModelError("no samples for the goodness-of-fit test");
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& p : ensemble.paths) {
    const double sd = std::sqrt(p.variance);
    lo = std::min(lo, std::max(0.0, p.mean - 6.0 * sd));
    hi = std::max(hi, p.mean + 10.0 * sd);
  }
  const double n = static_cast<double>(times.size());
  const double width = (hi - lo) / static_cast<double>(initial_bins);

  std::vector<HistogramBin> raw;
  raw.push_back({0.0, lo, 0, 0.0});
  for (std::size_t k = 0; k < initial_bins; ++k)
    raw.push_back({lo + width * static_cast<double>(k), lo + width * static_cast<double>(k + 1), 0, 0.0});
  raw.push_back({hi, std::numeric_limits<double>::infinity(), 0, 0.0});

  double inner = 0.0;
  for (std::size_t k = 0; k + 1 < raw.size(); ++k) {
    raw[k].expected = pdp_probability(ensemble, raw[k].lower, raw[k].upper);
    inner += raw[k].expected;
  }
  raw.back().expected = std::max(0.0, 1.0 - inner);
  for (auto& b : raw) b.expected *= n;

  for (double t : times) {
    std::size_t k;
    if (t < lo) k = 0;
    else if (t >= hi) k = raw.size() - 1;
    else k = 1 + std::min(initial_bins - 1, static_cast<std::size_t>((t - lo) / width));
    ++raw[k].observed;
  }

  GoodnessOfFit fit;
  HistogramBin acc{raw.front().lower, raw.front().lower, 0, 0.0};
  for (const auto& b : raw) {
    acc.upper = b.upper;
    acc.observed += b.observed;
    acc.expected += b.expected;
    if (acc.expected >= 5.0) {
      fit.bins.push_back(acc);
      acc = {b.upper, b.upper, 0, 0.0};
    }
  }
  if (acc.expected > 0.0 || acc.observed > 0) {
    if (fit.bins.empty()) {
      fit.bins.push_back(acc);
    } else {
      fit.bins.back().upper = acc.upper;
      fit.bins.back().observed += acc.observed;
      fit.bins.back().expected += acc.expected;
    }
  }

  for (const auto& b : fit.bins) {
    const double d = static_cast<double>(b.observed) - b.expected;
    fit.statistic += d * d / b.expected;
  }
  fit.degrees_of_freedom = fit.bins.size() > 1 ? fit.bins.size() - 1 : 1;
  const boost::math::chi_squared_distribution<double> chi2(static_cast<double>(fit.degrees_of_freedom));
  fit.p_value = boost::math::cdf(boost::math::complement(chi2, fit.statistic));
  return fit;
}

}  // namespace vasculink
