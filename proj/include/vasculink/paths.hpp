#pragma once

// Tx->Rx path enumeration, flow-split path fractions and inverse-Gaussian
// moment parameters per path.

#include <algorithm>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "vasculink/error.hpp"
#include "vasculink/flow.hpp"
#include "vasculink/network.hpp"

namespace vasculink {

struct PathMoments {
  double mean = 0.0;      // s
  double variance = 0.0;  // s^2
  double scale = 0.0;     // s, variance / mean

  friend bool operator==(const PathMoments&, const PathMoments&) = default;
};

/// One directed Tx->Rx path.
struct TxRxPath {
  std::vector<std::size_t> pipes;  // indices into VesselNetwork::pipes()
  std::vector<std::string> pipe_ids;
  std::vector<std::string> bifurcation_node_ids;  // excludes the start and end nodes
  double fraction = 1.0;                          // gamma, molecule fraction
  double mean = 0.0;
  double variance = 0.0;
  double scale = 0.0;

  PathMoments moments() const { return {mean, variance, scale}; }

  /// Path with given fraction and moments and no topology; handy for
  /// working with synthetic ensembles.
  static TxRxPath synthetic(double fraction, double mean, double scale) {
    TxRxPath p;
    p.fraction = fraction;
    p.mean = mean;
    p.scale = scale;
    p.variance = mean * scale;
    return p;
  }
};

struct PathEnsemble {
  std::vector<TxRxPath> paths;     // ascending mean
  double reach_probability = 0.0;  // chi
  std::vector<double> weights;     // gamma / chi
  bool same_pipe = false;          // Tx and Rx share one pipe

  std::size_t size() const noexcept { return paths.size(); }
};

/// Builds chi and the normalized weights for a list of paths.
inline PathEnsemble make_ensemble(std::vector<TxRxPath> paths) {
  if (paths.empty()) throw ModelError("no Tx->Rx path exists");
  PathEnsemble e;
  e.paths = std::move(paths);
  for (const auto& p : e.paths) e.reach_probability += p.fraction;
  e.weights.reserve(e.paths.size());
  for (const auto& p : e.paths) e.weights.push_back(p.fraction / e.reach_probability);
  return e;
}

/// Mean z/u and variance 2 D z / u^3 of the first-passage time over a
/// distance z inside one pipe.
inline PathMoments pipe_moments(double distance, double velocity, double eff_diffusion) {
  const double mean = distance / velocity;
  const double variance = 2.0 * eff_diffusion * distance / (velocity * velocity * velocity);
  return {mean, variance, mean > 0.0 ? variance / mean : 0.0};
}

/// Product of the flow splits at every bifurcation strictly inside the path.
inline double path_fraction(std::span<const std::size_t> pipes, const FlowSolution& flow,
                            const VesselNetwork& network) {
  double gamma = 1.0;
  for (std::size_t k = 1; k < pipes.size(); ++k) {
    const std::size_t node = network.source(pipes[k]);
    const auto outs = network.out_pipes(node);
    if (outs.size() < 2) continue;
    double total = 0.0;
    for (std::size_t p : outs) total += flow.flow_rate[p];
    gamma *= flow.flow_rate[pipes[k]] / total;
  }
  return gamma;
}

/// Path mean, variance and scale: residual of the Tx pipe past z_Tx, the
/// Rx pipe up to z_Rx, and every interior pipe in full.
inline PathMoments path_moments(std::span<const std::size_t> pipes, const VesselNetwork& network,
                                const FlowSolution& flow, const TxRxPlacement& placement) {
  if (pipes.empty()) throw ModelError("empty path");
  PathMoments total;
  auto add = [&](std::size_t p, double distance) {
    const PathMoments m = pipe_moments(distance, flow.velocity[p], flow.effective_diffusion[p]);
    total.mean += m.mean;
    total.variance += m.variance;
  };
  if (pipes.size() == 1) {
    add(pipes.front(), placement.rx_position - placement.tx_position);
  } else {
    add(pipes.front(), network.pipe(pipes.front()).length - placement.tx_position);
    for (std::size_t k = 1; k + 1 < pipes.size(); ++k) add(pipes[k], network.pipe(pipes[k]).length);
    add(pipes.back(), placement.rx_position);
  }
  if (!(total.mean > 0.0) || !(total.variance > 0.0))
    throw ModelError("degenerate Tx->Rx path with zero transit time");
  total.scale = total.variance / total.mean;
  return total;
}

struct EnumerationOptions {
  std::size_t max_paths = 10000;
};

/// All directed paths from the Tx pipe to the Rx pipe, sorted by mean.
inline PathEnsemble enumerate_paths(const VesselNetwork& network, const FlowSolution& flow,
                                    const TxRxPlacement& placement,
                                    const EnumerationOptions& options = {}) {
  const std::size_t tx = network.pipe_index(placement.tx_pipe);
  const std::size_t rx = network.pipe_index(placement.rx_pipe);

  std::vector<std::vector<std::size_t>> found;
  bool same_pipe = false;
  if (tx == rx) {
    // In a DAG a path cannot re-enter the Tx pipe, so Rx must lie downstream.
    if (placement.rx_position > placement.tx_position) found.push_back({tx});
    same_pipe = true;
  } else {
    const std::size_t goal = network.source(rx);
    std::vector<std::size_t> stack_path{tx};
    // Iterative DFS over (pipe, next out-edge index).
    std::vector<std::size_t> cursor{0};
    while (!stack_path.empty()) {
      const std::size_t node = network.target(stack_path.back());
      if (node == goal && cursor.back() == 0) {
        auto path = stack_path;
        path.push_back(rx);
        found.push_back(std::move(path));
        if (found.size() > options.max_paths)
          throw ModelError(detail::concat("path enumeration exceeded the cap of ",
                                          options.max_paths, " paths"));
      }
      const auto outs = network.out_pipes(node);
      // The goal node cannot be revisited downstream of itself in a DAG.
      if (node == goal || cursor.back() >= outs.size()) {
        stack_path.pop_back();
        cursor.pop_back();
        continue;
      }
      const std::size_t next = outs[cursor.back()++];
      stack_path.push_back(next);
      cursor.push_back(0);
    }
  }
  if (found.empty()) throw ModelError("no Tx->Rx path exists");

  std::vector<TxRxPath> paths;
  paths.reserve(found.size());
  for (auto& pipes : found) {
    TxRxPath path;
    for (std::size_t p : pipes) path.pipe_ids.push_back(network.pipe(p).id);
    for (std::size_t k = 1; k < pipes.size(); ++k) {
      const std::size_t node = network.source(pipes[k]);
      if (network.out_pipes(node).size() > 1) path.bifurcation_node_ids.push_back(network.node(node).id);
    }
    path.fraction = path_fraction(pipes, flow, network);
    const PathMoments m = path_moments(pipes, network, flow, placement);
    path.mean = m.mean;
    path.variance = m.variance;
    path.scale = m.scale;
    path.pipes = std::move(pipes);
    paths.push_back(std::move(path));
  }
  std::sort(paths.begin(), paths.end(), [](const TxRxPath& a, const TxRxPath& b) {
    if (a.mean != b.mean) return a.mean < b.mean;
    return a.pipe_ids < b.pipe_ids;
  });

  PathEnsemble ensemble = make_ensemble(std::move(paths));
  ensemble.same_pipe = same_pipe;
  return ensemble;
}

}  // namespace vasculink
