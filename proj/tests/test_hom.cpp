#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "nli/analysis.hpp"
#include "nli/counting.hpp"
#include "nli/modal.hpp"

using namespace nli;

namespace {

DetectorSpec eff(double eta) {
  DetectorSpec d;
  d.efficiency = eta;
  return d;
}

HomSetup single_pair_setup(double mu, double eta_h, double eta_a, double eta_b) {
  HomSetup s;
  s.source1.mean_pairs_per_pulse = mu;
  s.source2.mean_pairs_per_pulse = mu;
  s.herald1 = eff(eta_h);
  s.herald2 = eff(eta_h);
  s.out_a = eff(eta_a);
  s.out_b = eff(eta_b);
  s.max_pairs = 1;
  return s;
}

}  // namespace

TEST(BeamSplitter, KnownFockOutputs) {
  const auto d11 = beam_splitter_fock_distribution(1, 1);
  ASSERT_EQ(d11.size(), 3u);
  EXPECT_NEAR(d11[0], 0.5, 1e-14);
  EXPECT_NEAR(d11[1], 0.0, 1e-14);
  EXPECT_NEAR(d11[2], 0.5, 1e-14);

  const auto d20 = beam_splitter_fock_distribution(2, 0);
  EXPECT_NEAR(d20[0], 0.25, 1e-14);
  EXPECT_NEAR(d20[1], 0.5, 1e-14);
  EXPECT_NEAR(d20[2], 0.25, 1e-14);

  const auto d22 = beam_splitter_fock_distribution(2, 2);
  EXPECT_NEAR(d22[0], 3.0 / 8, 1e-14);
  EXPECT_NEAR(d22[1], 0.0, 1e-14);
  EXPECT_NEAR(d22[2], 1.0 / 4, 1e-14);
  EXPECT_NEAR(d22[3], 0.0, 1e-14);
  EXPECT_NEAR(d22[4], 3.0 / 8, 1e-14);

  EXPECT_THROW(beam_splitter_fock_distribution(-1, 2), ConfigError);
}

TEST(BeamSplitter, DistributionsNormalizedAndMirrorSymmetric) {
  for (int a = 0; a <= 5; ++a) {
    for (int b = 0; b <= 5; ++b) {
      const auto d = beam_splitter_fock_distribution(a, b);
      EXPECT_NEAR(std::accumulate(d.begin(), d.end(), 0.0), 1.0, 1e-12);
      const auto m = beam_splitter_fock_distribution(b, a);
      for (std::size_t k = 0; k < d.size(); ++k) EXPECT_NEAR(d[k], m[d.size() - 1 - k], 1e-12);
      // Equal inputs never produce odd output numbers.
      if (a == b)
        for (std::size_t k = 1; k < d.size(); k += 2) EXPECT_NEAR(d[k], 0.0, 1e-12);
    }
  }
}

TEST(HomFourfold, SinglePairClosedForm) {
  const double mu = 0.05, eh = 0.3, ea = 0.6, eb = 0.4;
  const HomSetup s = single_pair_setup(mu, eh, ea, eb);
  const double p1 = mu / (1 + 2 * mu);
  for (double xi : {0.0, 0.3, 1.0}) {
    const double expected = p1 * p1 * eh * eh * ea * eb * (1 - xi) / 2;
    EXPECT_NEAR(hom_fourfold_probability(s, xi), expected, 1e-15) << "xi=" << xi;
  }
  EXPECT_THROW(hom_fourfold_probability(s, 1.5), ConfigError);
}

TEST(HomFourfold, VisibilityEqualsOverlapWithoutMultipairs) {
  const HomSetup s = single_pair_setup(0.05, 0.3, 0.6, 0.4);
  for (double xi : {0.2, 0.7, 1.0}) EXPECT_NEAR(model_visibility(s, xi), xi, 1e-12);
}

TEST(HomFourfold, MultipairsLowerVisibility) {
  HomSetup s = single_pair_setup(0.1, 0.3, 0.5, 0.5);
  s.max_pairs = 3;
  const double v = model_visibility(s, 1.0);
  EXPECT_LT(v, 1.0);
  EXPECT_GT(v, 0.5);
  s.source1.mean_pairs_per_pulse = s.source2.mean_pairs_per_pulse = 0.01;
  EXPECT_GT(model_visibility(s, 1.0), v);
}

TEST(HomFourfold, ProbabilityDecreasesWithOverlap) {
  HomSetup s = single_pair_setup(0.1, 0.2, 0.5, 0.5);
  s.max_pairs = 2;
  s.source1.raman_signal_mean = 0.01;
  s.source2.raman_idler_mean = 0.02;
  double last = 1;
  for (double xi : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const double p = hom_fourfold_probability(s, xi);
    EXPECT_LT(p, last);
    last = p;
  }
}

TEST(HomSimulation, BinomialDrawsAroundExpectation) {
  HomSetup s = single_pair_setup(0.1, 0.3, 0.5, 0.5);
  s.max_pairs = 2;
  const std::vector<double> delays{-5e-12, 0.0, 5e-12};
  const auto overlaps = gaussian_overlap_profile(delays, 0.9, 2e-12);
  EXPECT_NEAR(overlaps[1], 0.9, 1e-15);
  EXPECT_NEAR(overlaps[0], 0.9 * std::exp(-25.0 / 8), 1e-12);
  const std::uint64_t n = 100'000'000;
  const auto pts = simulate_hom(s, delays, overlaps, n, 4);
  ASSERT_EQ(pts.size(), 3u);
  for (const HomPoint& p : pts) {
    const double mean = double(n) * p.expected_probability;
    EXPECT_LT(std::abs(double(p.fourfold) - mean), 5 * std::sqrt(mean));
    EXPECT_EQ(p.n_pulses, n);
  }
  EXPECT_LT(pts[1].fourfold, pts[0].fourfold);
  const auto again = simulate_hom(s, delays, overlaps, n, 4);
  EXPECT_EQ(again[2].fourfold, pts[2].fourfold);
  EXPECT_THROW(simulate_hom(s, delays, {0.5}, n, 4), ConfigError);
}

TEST(HomSimulation, DirectMonteCarloMatchesEnumeration) {
  HomSetup s = single_pair_setup(0.2, 0.5, 0.5, 0.5);
  s.max_pairs = 2;
  s.source1.schmidt_weights = two_mode_weights(1.1);
  s.source1.h_s = 0.9;
  s.source1.raman_signal_mean = 0.02;
  s.source2.raman_idler_mean = 0.03;
  s.out_a.dark_count_probability = 1e-3;
  RunOptions run;
  run.n_pulses = 3'000'000;
  run.seed = 12;
  const auto pts = simulate_hom_direct(s, {0.0, 1e-11}, {1.0, 0.0}, run);
  for (const HomPoint& p : pts) {
    const double mean = double(p.n_pulses) * p.expected_probability;
    EXPECT_GT(mean, 300);
    EXPECT_LT(std::abs(double(p.fourfold) - mean), 5 * std::sqrt(mean)) << "delay " << p.delay;
  }
}

TEST(HomSetup, Validation) {
  HomSetup s = single_pair_setup(0.1, 0.1, 0.1, 0.1);
  s.max_pairs = 0;
  EXPECT_THROW(s.validate(), ConfigError);
  s.max_pairs = 2;
  s.out_b.efficiency = -0.1;
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_THROW(gaussian_overlap_profile({0.0}, 1.2, 1e-12), ConfigError);
  EXPECT_THROW(gaussian_overlap_profile({0.0}, 0.5, 0.0), ConfigError);
}
