#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nli/modal.hpp"

using namespace nli;

namespace {

const FrequencyGrid& small_grid() {
  static const FrequencyGrid g = FrequencyGrid::from_wavelengths(1540e-9, 1557e-9, 160);
  return g;
}

double grid_center(const FrequencyGrid& g) {
  return 0.5 * (g.signal_omega()(0) + g.signal_omega()(g.signal_size() - 1));
}

}  // namespace

TEST(Schmidt, SeparableStateIsPure) {
  const auto& g = small_grid();
  const double wc = grid_center(g);
  const SchmidtResult s =
      schmidt_decompose(separable_gaussian_jsf(g, wc + 1e12, wc - 2e12, 0.9e12, 1.4e12));
  EXPECT_NEAR(s.mode_number, 1.0, 1e-6);
  EXPECT_NEAR(s.weights(0), 1.0, 1e-9);
  EXPECT_EQ(s.kept_modes(), 1);
}

TEST(Schmidt, DoubleGaussianMatchesMehlerSpectrum) {
  const auto& g = small_grid();
  const double wc = grid_center(g);
  const double a = 1.0 / (2.0 * 1e12 * 1e12);
  for (double ratio : {0.5, 0.2, 3.0}) {
    const double b = a * ratio;
    const SchmidtResult s = schmidt_decompose(double_gaussian_jsf(g, wc, wc, a, b));
    // Closed form written out here: K = (a+b)/(2√(ab)), λ_k = (1−q²)q^{2k}.
    const double k_exact = (a + b) / (2.0 * std::sqrt(a * b));
    EXPECT_NEAR(s.mode_number / k_exact, 1.0, 0.01) << "b/a=" << ratio;
    const double q = (std::sqrt(a) - std::sqrt(b)) / (std::sqrt(a) + std::sqrt(b));
    for (int k = 0; k < 4; ++k)
      EXPECT_NEAR(s.weights(k), (1 - q * q) * std::pow(q * q, k), 1e-6) << "k=" << k;
    EXPECT_NEAR(gaussian_schmidt_number(a, b), k_exact, 1e-12 * k_exact);
  }
}

TEST(Schmidt, WeightsSortedAndNormalized) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXcd m(12, 9);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = {n(rng), n(rng)};
    const SchmidtResult s = schmidt_decompose(m);
    EXPECT_NEAR(s.weights.sum(), 1.0, 1e-12);
    for (Eigen::Index k = 1; k < s.weights.size(); ++k) EXPECT_LE(s.weights(k), s.weights(k - 1));
    EXPECT_NEAR(s.purity * s.mode_number, 1.0, 1e-15);
    EXPECT_GE(s.mode_number, 1.0);
    EXPECT_LE(s.mode_number, 9.0 + 1e-12);
  }
}

TEST(Schmidt, TruncationKeepsRequestedWeight) {
  const auto& g = small_grid();
  const double wc = grid_center(g);
  const SchmidtResult s =
      schmidt_decompose(double_gaussian_jsf(g, wc, wc, 1.0 / (2e24), 0.1 / (2e24)));
  const double kept = s.weights.head(s.kept_modes()).sum();
  EXPECT_GE(kept, 1.0 - kSchmidtTruncation);
  EXPECT_LT(s.weights.head(s.kept_modes() - 1).sum(), 1.0 - kSchmidtTruncation);
}

TEST(Schmidt, ZeroNormRejected) {
  EXPECT_THROW(schmidt_decompose(Eigen::MatrixXcd::Zero(4, 4)), NumericalError);
}

TEST(Schmidt, ModesReconstructAmplitude) {
  const auto& g = small_grid();
  const double wc = grid_center(g);
  const Jsf jsf = double_gaussian_jsf(g, wc, wc, 1.0 / 2e24, 0.3 / 2e24);
  const SchmidtResult s = schmidt_decompose(jsf);
  Eigen::MatrixXcd rebuilt = Eigen::MatrixXcd::Zero(jsf.amplitude.rows(), jsf.amplitude.cols());
  for (Eigen::Index k = 0; k < s.kept_modes(); ++k)
    rebuilt += std::sqrt(s.weights(k)) * s.signal_modes.col(k) * s.idler_modes.col(k).transpose();
  const Eigen::MatrixXcd unit = jsf.amplitude / jsf.amplitude.norm();
  EXPECT_LT((rebuilt - unit).norm(), 2e-3);
}

TEST(SchmidtFromWeights, TwoModeWeightsHitTarget) {
  for (double m : {1.0, 1.04, 1.3, 2.0}) {
    const SchmidtResult s = schmidt_from_weights(two_mode_weights(m));
    EXPECT_NEAR(s.mode_number, m, 1e-12);
  }
  EXPECT_THROW(two_mode_weights(0.9), ConfigError);
  EXPECT_THROW(schmidt_from_weights({}), ConfigError);
  EXPECT_THROW(schmidt_from_weights({1.0, -0.1}), ConfigError);
}

TEST(Heralding, FullBandsGiveUnity) {
  const auto& g = small_grid();
  const double wc = grid_center(g);
  const Jsf jsf = double_gaussian_jsf(g, wc, wc, 1.0 / 2e24, 0.3 / 2e24);
  const HeraldingReport h =
      heralding_efficiencies(jsf, FilterSpec::centered(1548.5e-9, 1548.5e-9, 40e-9));
  EXPECT_NEAR(h.h_s_spectral, 1.0, 1e-12);
  EXPECT_NEAR(h.h_i_spectral, 1.0, 1e-12);
  EXPECT_NEAR(h.pair_pass_probability, 1.0, 1e-12);
}

TEST(Heralding, HalfSignalMarginal) {
  // Separable JSI symmetric about a grid-cell boundary: a signal band that
  // covers exactly one half of the signal marginal.
  const FrequencyGrid g = FrequencyGrid::from_wavelengths(1540e-9, 1557e-9, 160);
  const double mid = 0.5 * (g.signal_omega()(79) + g.signal_omega()(80));
  const Jsf jsf = separable_gaussian_jsf(g, mid, mid, 1e12, 1e12);
  const double edge = omega_to_wavelength(mid);
  const double far = 1557e-9 + 1e-9;
  FilterSpec f;
  f.signal_center = 0.5 * (edge + far);
  f.signal_bandwidth = far - edge;
  f.idler_center = 1548.5e-9;
  f.idler_bandwidth = 40e-9;
  const HeraldingReport h = heralding_efficiencies(jsf, f);
  EXPECT_NEAR(h.h_i_spectral, 1.0, 1e-12);
  EXPECT_NEAR(h.h_s_spectral, 0.5, 1e-9);
  EXPECT_LE(h.pair_pass_probability,
            std::min(h.signal_pass_probability, h.idler_pass_probability) + 1e-15);
}

TEST(Heralding, MonotoneInHeraldedBandWidth) {
  const Jsf jsf = compute_jsf(FrequencyGrid::from_wavelengths(1535e-9, 1562e-9, 256),
                              NliConfig::reference_design());
  double last = 0;
  for (double bw : {0.5e-9, 1.0e-9, 1.5e-9, 2.5e-9, 4e-9}) {
    FilterSpec f = FilterSpec::centered(1553.65e-9, 1543.98e-9, 1.5e-9);
    f.signal_bandwidth = bw;
    const double hs = heralding_efficiencies(jsf, f).h_s_spectral;
    EXPECT_GE(hs, last - 1e-12);
    last = hs;
  }
}

TEST(Heralding, BandWithoutMassRejected) {
  const auto& g = small_grid();
  const double wc = grid_center(g);
  const Jsf jsf = separable_gaussian_jsf(g, wc, wc, 1e11, 1e11);
  EXPECT_THROW(heralding_efficiencies(jsf, FilterSpec::centered(1600e-9, 1600e-9, 1e-9)),
               NumericalError);
}

TEST(HomVisibility, IdenticalSourcesGivePurity) {
  const auto& g = small_grid();
  const double wc = grid_center(g);
  for (double ratio : {1.0, 0.5, 0.25}) {
    const SchmidtResult s =
        schmidt_decompose(double_gaussian_jsf(g, wc, wc, 1.0 / 2e24, ratio / 2e24));
    EXPECT_NEAR(predicted_hom_visibility(s, s, 0.0), s.purity, 1e-9);
  }
}

TEST(HomVisibility, PureSourceUnityAndDecaysWithDelay) {
  const auto& g = small_grid();
  const double wc = grid_center(g);
  const SchmidtResult s = schmidt_decompose(separable_gaussian_jsf(g, wc, wc, 1e12, 1e12));
  EXPECT_NEAR(predicted_hom_visibility(s, s, 0.0), 1.0, 1e-9);
  // Gaussian amplitude with rms intensity width σ: overlap exp(−σ²τ²).
  const double tau = 1e-12;
  EXPECT_NEAR(predicted_hom_visibility(s, s, tau), std::exp(-1e24 * tau * tau), 1e-6);
  EXPECT_LT(predicted_hom_visibility(s, s, 20e-12), 0.01);
}

TEST(HomVisibility, RejectsDifferentGrids) {
  const auto& g = small_grid();
  const double wc = grid_center(g);
  const SchmidtResult a = schmidt_decompose(separable_gaussian_jsf(g, wc, wc, 1e12, 1e12));
  const FrequencyGrid other = FrequencyGrid::from_wavelengths(1540e-9, 1557e-9, 120);
  const SchmidtResult b = schmidt_decompose(separable_gaussian_jsf(other, wc, wc, 1e12, 1e12));
  EXPECT_THROW(predicted_hom_visibility(a, b, 0.0), ConfigError);
}

TEST(G2Predictions, FormulaValues) {
  EXPECT_DOUBLE_EQ(g2_heralded_prediction(0.0, 0.9, 0.9, 1.04), 0.0);
  const double g = g2_heralded_prediction(0.043, 0.912, 0.905, 1.04);
  EXPECT_NEAR(g, 2 * 0.043 / (0.912 * 0.905) * (1 + 1 / 1.04), 1e-15);
  EXPECT_NEAR(g, 0.204, 0.001);
  EXPECT_NEAR(g2_heralded_prediction(0.086, 0.912, 0.905, 1.04), 2 * g, 1e-14);
  EXPECT_THROW(g2_heralded_prediction(0.04, 0.0, 0.9, 1.0), ConfigError);

  EXPECT_DOUBLE_EQ(g2_unheralded_prediction(1.0), 2.0);
  EXPECT_NEAR(g2_unheralded_prediction(1.04), 1.9615, 1e-4);
  EXPECT_NEAR(g2_unheralded_prediction(1e9), 1.0, 1e-8);
  EXPECT_THROW(g2_unheralded_prediction(0.99), ConfigError);
}
