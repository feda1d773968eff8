#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace vt;

namespace {

ChannelModel synthetic_model(std::vector<TxRxPath> paths, double rx_gain = 1.0) {
  ChannelModel m;
  m.ensemble = make_ensemble(std::move(paths));
  m.rx_gain = rx_gain;
  return m;
}

/// Analytic phase derivative of one path:
/// d/df of -(mu/theta) Im sqrt(1 + j 4 pi theta f) = -(mu/theta) Im(j 2 pi theta / sqrt(...)).
double analytic_group_delay(double mean, double scale, double f) {
  const complex root = std::sqrt(complex(1.0, 4.0 * std::numbers::pi * scale * f));
  const double dphi = -(mean / scale) * (complex(0.0, 2.0 * std::numbers::pi * scale) / root).imag();
  return -dphi / (2.0 * std::numbers::pi);
}

}  // namespace

TEST(Spectrum, DcValueIsGainTimesChi) {
  for (const auto& name : fixture_names()) {
    const auto s = setup(name);
    const complex h0 = frequency_response(s.model, 0.0);
    EXPECT_DOUBLE_EQ(h0.imag(), 0.0) << name;
    EXPECT_NEAR(h0.real(), s.model.rx_gain * s.model.ensemble.reach_probability, 1e-15 * h0.real()) << name;
  }
}

TEST(Spectrum, MatchesTextbookFormOnPrincipalBranch) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double mean = 1.0 + 10.0 * u(rng), scale = 0.05 + u(rng), f = 2.0 * u(rng);
    const complex ref = std::exp((mean / scale) * (1.0 - std::sqrt(complex(1.0, 4.0 * std::numbers::pi * scale * f))));
    const complex got = path_response(mean, scale, f);
    EXPECT_NEAR(std::abs(got - ref), 0.0, 1e-10 * std::abs(ref) + 1e-300);
  }
}

TEST(Spectrum, ZeroScaleIsPureDelay) {
  const complex h = path_response(3.0, 0.0, 0.25);
  EXPECT_NEAR(h.real(), std::cos(2.0 * std::numbers::pi * 0.75), 1e-15);
  EXPECT_NEAR(h.imag(), -std::sin(2.0 * std::numbers::pi * 0.75), 1e-15);
}

TEST(Spectrum, ConjugateSymmetry) {
  const auto s = setup("three_path.json");
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    const double f = u(rng);
    const complex a = frequency_response(s.model, f), b = frequency_response(s.model, -f);
    EXPECT_NEAR(a.real(), b.real(), 1e-15 * std::abs(a) + 1e-300);
    EXPECT_NEAR(a.imag(), -b.imag(), 1e-15 * std::abs(a) + 1e-300);
  }
}

TEST(Spectrum, PassiveEverywhere) {
  for (const auto& name : fixture_names()) {
    const auto s = setup(name);
    const double h0 = std::abs(frequency_response(s.model, 0.0));
    for (double f : linear_grid(50.0 * s.metrics.coherence_bandwidth, 2001))
      EXPECT_LE(std::abs(frequency_response(s.model, f)), h0 * (1.0 + 1e-15)) << name;
  }
}

TEST(Spectrum, SinglePathMagnitudeIsMonotone) {
  const auto s = setup("single_pipe.json");
  double prev = std::abs(frequency_response(s.model, 0.0));
  for (double f : linear_grid(40.0, 4000)) {
    const double m = std::abs(frequency_response(s.model, f));
    EXPECT_LE(m, prev * (1.0 + 1e-15));
    prev = m;
  }
}

TEST(Spectrum, PerPathMagnitudeFormula) {
  const auto s = setup("diamond.json");
  for (std::size_t g = 0; g < s.model.paths().size(); ++g) {
    const auto sub = single_path_model(s.model, g);
    const auto& p = s.model.paths()[g];
    for (double f : {0.0, 0.05, 0.3, 1.0}) {
      const double expect = s.model.rx_gain * p.fraction *
                            std::exp((p.mean / p.scale) *
                                     (1.0 - std::sqrt(complex(1.0, 4.0 * std::numbers::pi * p.scale * f)).real()));
      EXPECT_NEAR(std::abs(frequency_response(sub, f)), expect, 1e-12 * expect + 1e-300);
    }
  }
}

TEST(Spectrum, PhaseStartsAtZeroAndDecreases) {
  const auto s = setup("single_pipe.json");
  const auto grid = linear_grid(5.0, 2001);
  const auto phase = phase_unwrapped(s.model, grid);
  EXPECT_DOUBLE_EQ(phase[0], 0.0);
  for (std::size_t k = 1; k < phase.size(); ++k) EXPECT_LT(phase[k], phase[k - 1]);
  const auto& p = s.model.paths()[0];
  for (std::size_t k = 0; k < grid.size(); k += 100) {
    const double expect =
        -(p.mean / p.scale) * std::sqrt(complex(1.0, 4.0 * std::numbers::pi * p.scale * grid[k])).imag();
    EXPECT_NEAR(phase[k], expect, 1e-9 * std::max(1.0, std::abs(expect)));
  }
}

TEST(Spectrum, LaterPathPhaseFallsFaster) {
  const auto s = setup("diamond.json");
  const auto grid = linear_grid(0.5, 501);
  const auto early = phase_unwrapped(single_path_model(s.model, 0), grid);
  const auto late = phase_unwrapped(single_path_model(s.model, 1), grid);
  for (std::size_t k = 1; k < grid.size(); ++k) EXPECT_LT(late[k], early[k]);
}

TEST(Spectrum, CoarseGridRejected) {
  const auto s = setup("diamond.json");
  const std::vector<double> coarse{0.0, 0.5, 1.0};
  EXPECT_THROW(phase_unwrapped(s.model, coarse), ModelError);
  const std::vector<double> offset{0.1, 0.2};
  EXPECT_THROW(phase_unwrapped(s.model, offset), ModelError);
  const std::vector<double> unordered{0.0, 0.2, 0.1};
  EXPECT_THROW(phase_unwrapped(s.model, unordered), ModelError);
}

TEST(Spectrum, GroupDelayAtZeroIsMeanDelay) {
  for (const auto& name : fixture_names()) {
    const auto s = setup(name);
    const auto grid = linear_grid(50.0 * s.metrics.coherence_bandwidth, 4096);
    const auto tau = group_delay(s.model, grid);
    EXPECT_NEAR(tau[0], s.metrics.mean_excess_delay, 1e-3 * s.metrics.mean_excess_delay) << name;
    for (std::size_t g = 0; g < s.model.paths().size(); ++g) {
      const auto tg = group_delay(single_path_model(s.model, g), grid);
      EXPECT_NEAR(tg[0], s.model.paths()[g].mean, 1e-3 * s.model.paths()[g].mean) << name;
    }
  }
}

TEST(Spectrum, GroupDelayMatchesAnalyticDerivative) {
  const auto s = setup("single_pipe.json");
  const auto& p = s.model.paths()[0];
  const auto grid = linear_grid(10.0, 4001);
  const auto tau = group_delay(s.model, grid);
  for (std::size_t k = 0; k < grid.size(); k += 50) {
    const double expect = analytic_group_delay(p.mean, p.scale, grid[k]);
    EXPECT_NEAR(tau[k], expect, 1e-4 * expect) << "f = " << grid[k];
  }
}

TEST(Spectrum, GroupDelayOnNonUniformGrid) {
  // Second-order differences are exact for quadratics on any spacing.
  const std::vector<double> grid{0.0, 0.1, 0.25, 0.3, 0.7, 1.0};
  std::vector<double> phase;
  for (double f : grid) phase.push_back(2.0 - 3.0 * f + 0.5 * f * f);
  const auto tau = group_delay_from_phase(grid, phase);
  for (std::size_t k = 0; k < grid.size(); ++k)
    EXPECT_NEAR(tau[k], -(-3.0 + grid[k]) / (2.0 * std::numbers::pi), 1e-13);
}

TEST(Spectrum, FftMatchesAnalytic) {
  for (const auto& name : {"diamond.json", "single_pipe.json"}) {
    const auto s = setup(name);
    const double window = default_fft_window(s.model, s.metrics);
    const auto num = numerical_response(s.model, window, default_fft_samples(s.model, window));
    const double h0 = std::abs(frequency_response(s.model, 0.0));
    std::size_t checked = 0;
    for (std::size_t k = 0; k < num.response.size(); ++k) {
      const double mag = std::abs(frequency_response(s.model, num.frequency(k)));
      if (mag <= 1e-3 * h0) continue;
      ++checked;
      EXPECT_NEAR(std::abs(num.response[k]), mag, 1e-2 * mag) << name << " bin " << k;
    }
    EXPECT_GT(checked, 10u) << name;
  }
}

TEST(Spectrum, SampleRecordsAreConsistent) {
  const auto s = setup("three_path.json");
  const auto grid = linear_grid(1.0, 1001);
  const auto samples = spectrum(s.model, grid);
  ASSERT_EQ(samples.size(), grid.size());
  for (const auto& x : samples) {
    EXPECT_DOUBLE_EQ(x.magnitude, std::abs(x.response));
    EXPECT_NEAR(std::remainder(x.phase - std::arg(x.response), 2.0 * std::numbers::pi), 0.0, 1e-9);
  }
}

TEST(Spectrum, SyntheticGroupDelayWithZeroScale) {
  // Pure delays: the phase is linear and tau_g is constant.
  const auto m = synthetic_model({TxRxPath::synthetic(1.0, 2.0, 0.0)});
  const auto tau = group_delay(m, linear_grid(0.2, 101));
  for (double t : tau) EXPECT_NEAR(t, 2.0, 1e-10);
}
