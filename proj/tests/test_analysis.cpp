#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nli/analysis.hpp"

using namespace nli;

namespace {

std::vector<PowerCount> exact_quadratic(double s1, double s2, const std::vector<double>& powers) {
  std::vector<PowerCount> out;
  for (double p : powers) out.push_back({p, s1 * p + s2 * p * p});
  return out;
}

std::vector<ScanPoint> dip(double c0, double v, double w, int points, double span) {
  std::vector<ScanPoint> out;
  for (int k = 0; k < points; ++k) {
    const double t = -span + 2 * span * k / (points - 1);
    out.push_back({t, c0 * (1 - v * std::exp(-t * t / (2 * w * w)))});
  }
  return out;
}

}  // namespace

TEST(PowerFit, RecoversExactQuadratic) {
  const auto data = exact_quadratic(3e3, 4e8, {10e-6, 20e-6, 30e-6, 50e-6, 70e-6});
  const QuadraticFit f = fit_singles_power(data);
  EXPECT_NEAR(f.s1 / 3e3, 1.0, 1e-9);
  EXPECT_NEAR(f.s2 / 4e8, 1.0, 1e-9);
  EXPECT_LT(f.residual_norm, 1e-6);
  const double p = 40e-6;
  EXPECT_NEAR(raman_fraction(f, p), 3e3 * p / (3e3 * p + 4e8 * p * p), 1e-9);
}

TEST(PowerFit, ScaleEquivariance) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<PowerCount> data;
  for (double p : {1.0, 2.0, 3.0, 4.0, 6.0}) data.push_back({p, 50 * p + 20 * p * p + 3 * noise(rng)});
  const QuadraticFit base = fit_singles_power(data);
  // Rescaling power by a maps (s1, s2) → (s1/a, s2/a²).
  auto scaled = data;
  for (auto& d : scaled) d.power *= 1e-6;
  const QuadraticFit f = fit_singles_power(scaled);
  EXPECT_NEAR(f.s1 * 1e-6 / base.s1, 1.0, 1e-8);
  EXPECT_NEAR(f.s2 * 1e-12 / base.s2, 1.0, 1e-8);
  EXPECT_NEAR(raman_fraction(f, 3e-6), raman_fraction(base, 3.0), 1e-10);
}

TEST(PowerFit, RejectsDegenerateInput) {
  EXPECT_THROW(fit_singles_power(exact_quadratic(1, 1, {1, 2})), ConfigError);
  EXPECT_THROW(fit_singles_power(exact_quadratic(1, 1, {1, 1, 2, 2})), ConfigError);
  EXPECT_THROW(fit_singles_power({{1, 1}, {2, NAN}, {3, 1}}), ConfigError);
  QuadraticFit zero;
  EXPECT_THROW(raman_fraction(zero, 1.0), NumericalError);
}

TEST(Coincidences, TrueCoincidenceSubtractsAccidentals) {
  const TrueCoincidence t = true_coincidence(1000, 100);
  EXPECT_DOUBLE_EQ(t.value, 900);
  EXPECT_DOUBLE_EQ(t.sigma, std::sqrt(1100.0));
  EXPECT_FALSE(t.negative);
  const TrueCoincidence n = true_coincidence(10, 20);
  EXPECT_TRUE(n.negative);
  EXPECT_DOUBLE_EQ(n.value, -10);
  EXPECT_THROW(true_coincidence(-1, 0), ConfigError);
}

TEST(Coincidences, HeraldingEstimate) {
  const HeraldingEstimate h = heralding_from_counts(450, 0.5, 1000, 10, 20);
  EXPECT_DOUBLE_EQ(h.value, 0.9);
  EXPECT_NEAR(h.sigma, 0.9 * std::hypot(10.0 / 450, 20.0 / 1000), 1e-15);
  EXPECT_FALSE(h.unphysical);
  EXPECT_TRUE(heralding_from_counts(600, 0.5, 1000).unphysical);
  EXPECT_THROW(heralding_from_counts(1, 0.0, 1), NumericalError);
  EXPECT_THROW(heralding_from_counts(1, 0.5, 0), NumericalError);
}

TEST(G2Estimators, RatioValuesAndInvariance) {
  const Estimate g = g2_from_hbt(1e6, 2e4, 3e4, 12);
  EXPECT_NEAR(g.value, 1e6 * 12 / (2e4 * 3e4), 1e-15);
  EXPECT_GT(g.sigma, 0);
  // The relative error is dominated by 1/√N₁₂₃.
  EXPECT_NEAR(g.sigma / g.value, 1 / std::sqrt(12.0), 0.02);
  // Scaling every count scales the error by 1/√k and leaves the value alone.
  const Estimate g4 = g2_from_hbt(4e6, 8e4, 12e4, 48);
  EXPECT_NEAR(g4.value, g.value, 1e-15);
  EXPECT_NEAR(g4.sigma, g.sigma / 2, 1e-3 * g.sigma);
  HbtCounts c{1000000, 20000, 30000, 12, 0, 0, 0};
  EXPECT_DOUBLE_EQ(g2_from_hbt(c).value, g.value);
  EXPECT_DOUBLE_EQ(g2_unheralded(100, 10, 20, 4).value, 2.0);
  EXPECT_GT(g2_from_hbt(1e6, 2e4, 3e4, 0).sigma, 0);
  EXPECT_THROW(g2_from_hbt(1e6, 0, 3e4, 0), NumericalError);
  EXPECT_THROW(g2_from_hbt(1e3, 2e4, 3e4, 1), ConfigError);
  EXPECT_THROW(g2_unheralded(100, 10, 20, 11), ConfigError);
}

TEST(RamanCorrection, InvertsMixingModel) {
  for (double gf : {0.0, 0.1, 0.5, 1.96}) {
    for (double r : {0.0, 0.05, 0.087, 0.3}) {
      const double measured_p = gf * (1 - r) * (1 - r) + r * r + 2 * r * (1 - r);
      EXPECT_NEAR(raman_correct_g2s(measured_p, r), gf, 1e-12);
      const double measured_t = gf * (1 - r) * (1 - r) + 2 * r * r + 2 * r * (1 - r);
      EXPECT_NEAR(raman_correct_g2s(measured_t, r, RamanMode::thermal), gf, 1e-12);
    }
  }
  EXPECT_DOUBLE_EQ(raman_correct_g2s(1.7, 0.0), 1.7);
  // Poissonian background pulls a thermal field towards 1, so the correction raises it.
  EXPECT_GT(raman_correct_g2s(1.8, 0.1), 1.8);
  EXPECT_THROW(raman_correct_g2s(1.8, 1.0), ConfigError);
  EXPECT_THROW(raman_correct_g2s(1.8, -0.1), ConfigError);
}

TEST(RamanCorrection, WithRamanFractionSetsBandShare) {
  SourceModel s;
  s.mean_pairs_per_pulse = 0.02;
  s.h_s = 0.9;
  s.h_i = 0.8;
  for (double f : {0.0, 0.087, 0.5}) {
    const SourceModel r = with_raman_fraction(s, f);
    EXPECT_NEAR(r.raman_signal_mean / (r.raman_signal_mean + s.fwm_signal_mean()), f, 1e-14);
    EXPECT_NEAR(r.raman_idler_mean / (r.raman_idler_mean + s.fwm_idler_mean()), f, 1e-14);
  }
  EXPECT_THROW(with_raman_fraction(s, 1.0), ConfigError);
}

TEST(LiveTime, InvertsNonParalyzableModel) {
  for (double p : {1e-4, 1e-3, 5e-3}) {
    for (std::int64_t d : {0, 10, 368}) {
      const double observed = p / (1 + p * double(d));
      EXPECT_NEAR(live_time_corrected_rate(observed * 1e6, 1e6, d), p, 1e-15);
    }
  }
  EXPECT_THROW(live_time_corrected_rate(1, 0, 1), ConfigError);
  EXPECT_THROW(live_time_corrected_rate(1, 1, -1), ConfigError);
  EXPECT_THROW(live_time_corrected_rate(0.5e6, 1e6, 2), NumericalError);
}

TEST(HomFit, RecoversNoiselessDip) {
  for (double v : {0.3, 0.75, 0.95}) {
    const VisibilityReport r = fit_hom_dip(dip(500, v, 2e-12, 17, 16e-12));
    EXPECT_NEAR(r.v_raw, v, 1e-6);
    EXPECT_NEAR(r.dip_width / 2e-12, 1.0, 1e-6);
    EXPECT_NEAR(r.baseline, 500, 1e-3);
    EXPECT_EQ(r.v_multipair_corrected, r.v_raw);
  }
}

TEST(HomFit, NoisyDipWithinQuotedErrors) {
  std::mt19937_64 rng(9);
  int inside = 0;
  const int trials = 40;
  for (int k = 0; k < trials; ++k) {
    auto scan = dip(2000, 0.8, 2e-12, 17, 16e-12);
    for (auto& p : scan) p.counts = double(std::poisson_distribution<long>(p.counts)(rng));
    const VisibilityReport r = fit_hom_dip(scan);
    inside += std::abs(r.v_raw - 0.8) < 2 * r.v_raw_sigma;
  }
  // ~95% expected; allow a generous margin.
  EXPECT_GE(inside, 32);
}

TEST(HomFit, RejectsBadScans) {
  EXPECT_THROW(fit_hom_dip(dip(100, 0.5, 1e-12, 4, 5e-12)), ConfigError);
  std::vector<ScanPoint> flat(6, ScanPoint{1e-12, 10});
  EXPECT_THROW(fit_hom_dip(flat), ConfigError);
  std::vector<ScanPoint> empty = dip(0, 0.5, 1e-12, 9, 5e-12);
  EXPECT_THROW(fit_hom_dip(empty), NumericalError);
}

TEST(VisibilityCorrection, IdentityWithoutBackgroundOrMultipairs) {
  VisibilityReport raw;
  raw.v_raw = 0.82;
  raw.v_raw_sigma = 0.01;
  MultipairConfig mp;
  mp.setup.source1.mean_pairs_per_pulse = mp.setup.source2.mean_pairs_per_pulse = 0.01;
  mp.setup.max_pairs = 1;
  const VisibilityReport out = correct_visibility(raw, {0.0, 0.0}, mp);
  EXPECT_DOUBLE_EQ(out.v_raman_corrected, 0.82);
  EXPECT_DOUBLE_EQ(out.v_multipair_corrected, 0.82);
  EXPECT_DOUBLE_EQ(out.background_floor, 0.0);
  EXPECT_THROW(correct_visibility(raw, {1.0, 0.0}, mp), ConfigError);
}

TEST(VisibilityCorrection, ChainRecoversIdealVisibility) {
  // Forward model: Raman background and multi-pairs degrade an ideal overlap ξ;
  // the correction chain maps the degraded visibility back close to ξ.
  MultipairConfig mp;
  for (SourceModel* s : {&mp.setup.source1, &mp.setup.source2}) {
    s->mean_pairs_per_pulse = 0.03;
    s->h_s = 0.91;
    s->h_i = 0.9;
  }
  DetectorSpec d;
  d.efficiency = 0.15;
  mp.setup.herald1 = mp.setup.herald2 = mp.setup.out_a = mp.setup.out_b = d;
  mp.setup.max_pairs = 3;
  const double xi = 0.96, fraction = 0.09;
  mp.overlap_peak = xi;
  HomSetup noisy = mp.setup;
  noisy.source1 = with_raman_fraction(noisy.source1, fraction);
  noisy.source2 = with_raman_fraction(noisy.source2, fraction);
  VisibilityReport raw;
  raw.v_raw = model_visibility(noisy, xi);
  raw.v_raw_sigma = 0.01;
  const VisibilityReport out = correct_visibility(raw, {fraction, fraction}, mp);
  EXPECT_LT(raw.v_raw, out.v_raman_corrected);
  EXPECT_GT(out.multipair_shift, 0);
  EXPECT_NEAR(out.v_multipair_corrected, xi, 0.01);
}
