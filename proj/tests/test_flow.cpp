#include <gtest/gtest.h>

#include "support.hpp"

using namespace vt;

TEST(Flow, SinglePipeVelocity) {
  const VesselNetwork net({inlet("in", 1e-8), outlet("out")}, {pipe("p", "in", "out", 0.1, 1e-3)}, 1.46e-7);
  const auto flow = solve_flow(net);
  EXPECT_NEAR(flow.flow_rate[0], 1e-8, 1e-20);
  EXPECT_NEAR(flow.velocity[0], 3.1831e-3, 1e-7);
  EXPECT_NEAR(flow.velocity[0], 1e-8 / (std::numbers::pi * 1e-6), 1e-15);
}

TEST(Flow, SymmetricSplitHalves) {
  const auto flow = solve_flow(parallel_pair(1e-8, 0.2, 0.2));
  EXPECT_NEAR(flow.flow_rate[1], 5e-9, 1e-20);
  EXPECT_NEAR(flow.flow_rate[2], 5e-9, 1e-20);
}

TEST(Flow, ParallelThreeToOne) {
  const auto flow = solve_flow(parallel_pair(1e-8, 0.1, 0.3));
  EXPECT_NEAR(flow.flow_rate[1], 7.5e-9, 1e-20);
  EXPECT_NEAR(flow.flow_rate[2], 2.5e-9, 1e-20);
}

TEST(Flow, RadiusEntersToTheFourthPower) {
  // Equal length, radius ratio 2 -> conductance ratio 16.
  const auto flow = solve_flow(parallel_pair(1.7e-8, 0.1, 0.1, 2e-3, 1e-3));
  EXPECT_NEAR(flow.flow_rate[1] / flow.flow_rate[2], 16.0, 1e-12);
}

TEST(Flow, EffectiveDiffusion) {
  EXPECT_DOUBLE_EQ(effective_diffusion(1e-3, 0.0, 1.46e-7), 1.46e-7);
  EXPECT_NEAR(effective_diffusion(1e-3, 1e-2, 1.46e-7), (1e-6 * 1e-4) / (48.0 * 1.46e-7) + 1.46e-7, 1e-20);
  EXPECT_NEAR(effective_diffusion(1e-3, 1e-2, 1.46e-7), 1.4415e-5, 1e-9);
  const double d = 1.46e-7;
  const double base = effective_diffusion(1e-3, 1e-2, d) - d;
  const double doubled = effective_diffusion(1e-3, 2e-2, d) - d;
  EXPECT_NEAR(doubled, 4.0 * base, 1e-15);
  EXPECT_THROW(effective_diffusion(1e-3, 1e-2, 0.0), ModelError);
}

TEST(Flow, KirchhoffResidualOnFixtures) {
  for (const auto& name : fixture_names()) {
    const auto doc = load_network(fixture_path(name));
    const auto flow = solve_flow(doc.network);
    double max_inflow = 0.0;
    for (const auto& n : doc.network.nodes()) max_inflow = std::max(max_inflow, n.role.flow_rate);
    EXPECT_LT(kirchhoff_residual(doc.network, flow), 1e-12 * max_inflow) << name;
  }
}

TEST(Flow, IndependentNodeBalance) {
  // Balance recomputed directly from the pipe list.
  for (const auto& name : fixture_names()) {
    const auto doc = load_network(fixture_path(name));
    const auto flow = solve_flow(doc.network);
    const auto& net = doc.network;
    for (const Node& node : net.nodes()) {
      double balance = node.role.kind == NodeKind::inlet ? node.role.flow_rate : 0.0;
      for (std::size_t p = 0; p < net.pipe_count(); ++p) {
        if (net.pipe(p).target == node.id) balance += flow.flow_rate[p];
        if (net.pipe(p).source == node.id) balance -= flow.flow_rate[p];
      }
      if (node.role.kind != NodeKind::outlet) EXPECT_NEAR(balance, 0.0, 1e-12 * net.total_inflow()) << name;
    }
  }
}

TEST(Flow, ViscosityInvariance) {
  for (const auto& name : fixture_names()) {
    const auto doc = load_network(fixture_path(name));
    const auto& net = doc.network;
    const VesselNetwork thick(net.nodes(), net.pipes(), net.diffusion(), 10.0 * net.viscosity());
    const auto a = solve_flow(net);
    const auto b = solve_flow(thick);
    for (std::size_t p = 0; p < net.pipe_count(); ++p)
      EXPECT_NEAR(a.flow_rate[p], b.flow_rate[p], 1e-13 * net.total_inflow()) << name;
  }
}

TEST(Flow, BifurcationFractionsSumToOne) {
  for (const auto& name : fixture_names()) {
    const auto doc = load_network(fixture_path(name));
    const auto flow = solve_flow(doc.network);
    for (std::size_t n = 0; n < doc.network.node_count(); ++n) {
      if (!doc.network.is_bifurcation(n)) continue;
      double total = 0.0;
      for (std::size_t p : doc.network.out_pipes(n)) total += flow.flow_rate[p];
      double sum = 0.0;
      for (std::size_t p : doc.network.out_pipes(n)) {
        const double f = flow.flow_rate[p] / total;
        EXPECT_GT(f, 0.0);
        EXPECT_LT(f, 1.0);
        sum += f;
      }
      EXPECT_NEAR(sum, 1.0, 1e-15) << name;
    }
  }
}

TEST(Flow, ReversedPipeRejected) {
  // A strong inlet at b pushes flow backwards through the pipe a -> b.
  const VesselNetwork net({inlet("i1", 1e-9), inlet("i2", 1e-6), connecting("a"), connecting("b"),
                           outlet("o1"), outlet("o2")},
                          {pipe("p1", "i1", "a", 0.1, 1e-3), pipe("p2", "i2", "b", 0.1, 1e-3),
                           pipe("ab", "a", "b", 0.1, 1e-3), pipe("ao", "a", "o1", 0.1, 1e-3),
                           pipe("bo", "b", "o2", 0.1, 1e-3)},
                          1e-9);
  try {
    solve_flow(net);
    FAIL() << "expected a flow-direction error";
  } catch (const ModelError& e) {
    EXPECT_NE(std::string(e.what()).find("'ab'"), std::string::npos) << e.what();
  }
}
