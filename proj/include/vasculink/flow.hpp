#pragma once

// Steady hydraulic solve by nodal analysis on the Hagen-Poiseuille resistive
// circuit, plus the Aris-Taylor effective diffusion of each pipe.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "vasculink/error.hpp"
#include "vasculink/network.hpp"

namespace vasculink {

/// Per-pipe and per-node results of the hydraulic solve, indexed like
/// VesselNetwork::pipes() / nodes().
struct FlowSolution {
  std::vector<double> flow_rate;            // m^3/s
  std::vector<double> velocity;             // m/s, cross-section average
  std::vector<double> effective_diffusion;  // m^2/s
  std::vector<double> node_pressure;        // Pa, outlets at 0
};

/// Aris-Taylor dispersion: r^2 u^2 / (48 D) + D.
inline double effective_diffusion(double radius, double velocity, double diffusion) {
  if (!(diffusion > 0.0)) throw ModelError("molecular diffusion must be positive");
  if (velocity < 0.0) throw ModelError("velocity must be non-negative");
  return radius * radius * velocity * velocity / (48.0 * diffusion) + diffusion;
}

inline double effective_diffusion(const Pipe& pipe, double velocity, double diffusion) {
  return effective_diffusion(pipe.radius, velocity, diffusion);
}

/// Hagen-Poiseuille conductance pi r^4 / (8 eta l).
inline double pipe_conductance(const Pipe& pipe, double viscosity) {
  const double r2 = pipe.radius * pipe.radius;
  return std::numbers::pi * r2 * r2 / (8.0 * viscosity * pipe.length);
}

/// Solves Kirchhoff's current law with inlet nodes as flow sources and
/// outlet nodes clamped to zero pressure.
inline FlowSolution solve_flow(const VesselNetwork& network) {
  const std::size_t n_nodes = network.node_count();
  const std::size_t n_pipes = network.pipe_count();

  std::vector<double> conductance(n_pipes);
  for (std::size_t p = 0; p < n_pipes; ++p)
    conductance[p] = pipe_conductance(network.pipe(p), network.viscosity());
  // Equilibrate: the flow field is invariant under a common conductance scale.
  const double g_scale = *std::max_element(conductance.begin(), conductance.end());

  constexpr std::size_t fixed = static_cast<std::size_t>(-1);
  std::vector<std::size_t> unknown(n_nodes, fixed);
  std::size_t n_unknowns = 0;
  for (std::size_t n = 0; n < n_nodes; ++n)
    if (network.node(n).role.kind != NodeKind::outlet) unknown[n] = n_unknowns++;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(4 * n_pipes);
  for (std::size_t p = 0; p < n_pipes; ++p) {
    const double g = conductance[p] / g_scale;
    const std::size_t a = unknown[network.source(p)];
    const std::size_t b = unknown[network.target(p)];
    if (a != fixed) triplets.emplace_back(static_cast<int>(a), static_cast<int>(a), g);
    if (b != fixed) triplets.emplace_back(static_cast<int>(b), static_cast<int>(b), g);
    if (a != fixed && b != fixed) {
      triplets.emplace_back(static_cast<int>(a), static_cast<int>(b), -g);
      triplets.emplace_back(static_cast<int>(b), static_cast<int>(a), -g);
    }
  }
  const auto dim = static_cast<Eigen::Index>(n_unknowns);
  Eigen::SparseMatrix<double> system(dim, dim);
  system.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::VectorXd injection = Eigen::VectorXd::Zero(dim);
  for (std::size_t n = 0; n < n_nodes; ++n)
    if (network.node(n).role.kind == NodeKind::inlet)
      injection[static_cast<Eigen::Index>(unknown[n])] = network.node(n).role.flow_rate;

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(system);
  if (solver.info() != Eigen::Success)
    throw ModelError("hydraulic system is singular (a component has no outlet)");
  Eigen::VectorXd scaled_pressure = solver.solve(injection);
  // One step of iterative refinement.
  const Eigen::VectorXd residual = injection - system * scaled_pressure;
  scaled_pressure += solver.solve(residual);
  if (solver.info() != Eigen::Success || !scaled_pressure.allFinite())
    throw ModelError("hydraulic system is singular (a component has no outlet)");

  FlowSolution sol;
  sol.node_pressure.assign(n_nodes, 0.0);
  std::vector<double> scaled(n_nodes, 0.0);
  for (std::size_t n = 0; n < n_nodes; ++n) {
    if (unknown[n] != fixed) {
      scaled[n] = scaled_pressure[static_cast<Eigen::Index>(unknown[n])];
      sol.node_pressure[n] = scaled[n] / g_scale;
    }
  }

  sol.flow_rate.resize(n_pipes);
  sol.velocity.resize(n_pipes);
  sol.effective_diffusion.resize(n_pipes);
  for (std::size_t p = 0; p < n_pipes; ++p) {
    const Pipe& pipe = network.pipe(p);
    const double q =
        conductance[p] / g_scale * (scaled[network.source(p)] - scaled[network.target(p)]);
    if (!(q > 0.0))
      throw ModelError(detail::concat("pipe '", pipe.id,
                                      "': edge direction inconsistent with flow (Q = ", q, ")"));
    sol.flow_rate[p] = q;
    sol.velocity[p] = q / (std::numbers::pi * pipe.radius * pipe.radius);
    sol.effective_diffusion[p] = effective_diffusion(pipe, sol.velocity[p], network.diffusion());
  }
  return sol;
}

/// Largest Kirchhoff imbalance over all non-outlet nodes together with the
/// global inlet/outlet balance, in m^3/s.
inline double kirchhoff_residual(const VesselNetwork& network, const FlowSolution& flow) {
  double worst = 0.0;
  double outlet_total = 0.0;
  for (std::size_t n = 0; n < network.node_count(); ++n) {
    double balance = 0.0;
    for (std::size_t p : network.in_pipes(n)) balance += flow.flow_rate[p];
    const NodeRole& role = network.node(n).role;
    if (role.kind == NodeKind::outlet) {
      outlet_total += balance;
      continue;
    }
    if (role.kind == NodeKind::inlet) balance += role.flow_rate;
    for (std::size_t p : network.out_pipes(n)) balance -= flow.flow_rate[p];
    worst = std::max(worst, std::abs(balance));
  }
  return std::max(worst, std::abs(network.total_inflow() - outlet_total));
}

}  // namespace vasculink
