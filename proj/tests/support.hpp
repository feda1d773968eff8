#pragma once

// Helpers shared by the test files: fixture loading, small hand-built
// networks, and oracles written independently of the library code.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "vasculink.hpp"

namespace vt {

using namespace vasculink;

inline std::filesystem::path fixture_path(const std::string& name) {
  return std::filesystem::path(VASCULINK_FIXTURE_DIR) / name;
}

inline const std::vector<std::string>& fixture_names() {
  static const std::vector<std::string> names{"single_pipe.json", "diamond.json",
                                              "diamond_leak.json", "three_path.json",
                                              "two_path_asymmetric.json", "mesh5.json"};
  return names;
}

struct Setup {
  NetworkDocument doc;
  FlowSolution flow;
  ChannelModel model;
  MultipathMetrics metrics;
};

inline Setup setup(const std::string& fixture) {
  NetworkDocument doc = load_network(fixture_path(fixture));
  FlowSolution flow = solve_flow(doc.network);
  PathEnsemble ensemble = enumerate_paths(doc.network, flow, doc.placement);
  ChannelModel model = make_channel(doc.network, flow, doc.placement, std::move(ensemble));
  MultipathMetrics metrics = multipath_metrics(model.ensemble);
  return {std::move(doc), std::move(flow), std::move(model), metrics};
}

inline Pipe pipe(std::string id, std::string from, std::string to, double length, double radius) {
  return Pipe{std::move(id), std::move(from), std::move(to), length, radius};
}

inline Node inlet(std::string id, double q) { return Node{std::move(id), NodeRole::inlet(q)}; }
inline Node outlet(std::string id) { return Node{std::move(id), NodeRole::outlet()}; }
inline Node connecting(std::string id) { return Node{std::move(id), NodeRole::connecting()}; }

/// in -> s, two parallel branches s -> m, m -> out.
inline VesselNetwork parallel_pair(double q, double l1, double l2, double r1 = 1e-3,
                                   double r2 = 1e-3, double viscosity = 1.0) {
  return VesselNetwork({inlet("in", q), connecting("s"), connecting("m"), outlet("out")},
                       {pipe("feed", "in", "s", 0.1, 1e-3), pipe("b1", "s", "m", l1, r1),
                        pipe("b2", "s", "m", l2, r2), pipe("drain", "m", "out", 0.1, 1e-3)},
                       1.46e-7, viscosity);
}

/// Inverse-Gaussian density written from scratch in linear space.
inline double ig_density(double mean, double scale, double t) {
  if (t <= 0.0) return 0.0;
  const double d = t - mean;
  const double decay = std::exp(-d * d / (2.0 * scale * t));
  if (decay == 0.0) return 0.0;
  return mean / std::sqrt(2.0 * std::numbers::pi * scale * t * t * t) * decay;
}

/// Inverse-Gaussian CDF with mean m and shape m^2 / scale, via the
/// standard normal-CDF expression.
inline double ig_cdf(double mean, double scale, double t) {
  if (t <= 0.0) return 0.0;
  const double shape = mean * mean / scale;
  const double a = std::sqrt(shape / t);
  auto phi = [](double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); };
  return phi(a * (t / mean - 1.0)) + std::exp(2.0 * shape / mean) * phi(-a * (t / mean + 1.0));
}

/// Integral over [0, inf) of f, split at the given breakpoints so that
/// sharply peaked integrands are resolved.
inline double integrate_half_line(const std::function<double(double)>& f,
                                  std::vector<double> breaks) {
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::remove_if(breaks.begin(), breaks.end(), [](double b) { return !(b > 0.0); }),
               breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  boost::math::quadrature::tanh_sinh<double> finite;
  boost::math::quadrature::exp_sinh<double> tail;
  double total = 0.0, a = 0.0;
  for (double b : breaks) {
    total += finite.integrate(f, a, b, 1e-13);
    a = b;
  }
  total += tail.integrate(f, a, std::numeric_limits<double>::infinity(), 1e-13);
  return total;
}

/// Breakpoints mu +- k sigma for every path, for use with integrate_half_line.
inline std::vector<double> path_breaks(const PathEnsemble& e) {
  std::vector<double> b;
  for (const auto& p : e.paths) {
    const double s = std::sqrt(p.variance);
    for (double k : {-6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0, 12.0}) b.push_back(p.mean + k * s);
  }
  return b;
}

/// All pipe sequences from the Tx pipe to the Rx pipe, by plain recursion
/// over the pipe list (no adjacency structures from the library).
inline std::vector<std::vector<std::string>> brute_force_paths(const VesselNetwork& net,
                                                               const std::string& tx,
                                                               const std::string& rx) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> current{tx};
  std::function<void(const std::string&)> walk = [&](const std::string& pipe_id) {
    if (pipe_id == rx && current.size() > 1) {
      out.push_back(current);
      return;
    }
    std::string head;
    for (const Pipe& p : net.pipes())
      if (p.id == pipe_id) head = p.target;
    for (const Pipe& p : net.pipes()) {
      if (p.source != head) continue;
      current.push_back(p.id);
      walk(p.id);
      current.pop_back();
    }
  };
  walk(tx);
  return out;
}

}  // namespace vt
