#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "nli/counting.hpp"
#include "nli/error.hpp"

namespace nli {

struct PowerCount {
  double power = 0;   // average pump power, W
  double counts = 0;  // per pulse, or per second, or raw; units carry into s1, s2
};

// N = s1·P + s2·P², no intercept.
struct QuadraticFit {
  double s1 = 0;
  double s2 = 0;
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
  double residual_norm = 0;

  double linear_term(double power) const { return s1 * power; }
  double quadratic_term(double power) const { return s2 * power * power; }
  double s1_sigma() const { return std::sqrt(covariance(0, 0)); }
  double s2_sigma() const { return std::sqrt(covariance(1, 1)); }
};

// Weighted least squares with Poisson weights 1/max(N, 1).
QuadraticFit fit_singles_power(const std::vector<PowerCount>& data);

// Linear-term share s1·P/(s1·P + s2·P²) at the given power.
double raman_fraction(const QuadraticFit& fit, double power);

struct Estimate {
  double value = 0;
  double sigma = 0;
};

struct TrueCoincidence {
  double value = 0;
  double sigma = 0;
  bool negative = false;  // flagged, never clamped
};

TrueCoincidence true_coincidence(double c_same, double c_adjacent);

struct HeraldingEstimate {
  double value = 0;
  double sigma = 0;
  bool unphysical = false;  // value > 1
};

// h = C^T / (η·N′). Uncertainties are optional relative inputs.
HeraldingEstimate heralding_from_counts(double c_true, double eta, double n_fwm,
                                        double c_true_sigma = 0, double n_fwm_sigma = 0);

// g² = N₁₂₃·N_i/(N₁₂·N₁₃) with multinomial error propagation.
Estimate g2_from_hbt(double n_herald, double n_12, double n_13, double n_123);
Estimate g2_from_hbt(const HbtCounts& counts);

// Unheralded g² = n·N_ab/(N_a·N_b) of the split arm.
Estimate g2_unheralded(double n_pulses, double n_a, double n_b, double n_ab);

enum class RamanMode { poissonian, thermal };

// Inverts g_meas = [g_F(1−r)² + g_R r² + 2r(1−r)] for g_F, with g_R = 1 or 2.
double raman_correct_g2s(double g2_measured, double raman_fraction,
                         RamanMode mode = RamanMode::poissonian);

// Non-paralyzable gated dead time: click probability per live gate recovered
// from the observed click fraction.
double live_time_corrected_rate(double counts, double n_pulses, std::int64_t dead_gates);

struct ScanPoint {
  double delay = 0;  // s
  double counts = 0;
};

std::vector<ScanPoint> to_scan(const std::vector<HomPoint>& points);

struct VisibilityReport {
  double v_raw = 0;
  double v_raw_sigma = 0;
  double v_raman_corrected = 0;
  double v_raman_corrected_sigma = 0;
  double v_multipair_corrected = 0;
  double v_multipair_corrected_sigma = 0;
  double dip_width = 0;  // rms width w, s
  double dip_width_sigma = 0;
  double baseline = 0;
  double baseline_sigma = 0;
  // Diagnostics of the correction chain.
  double background_floor = 0;
  double multipair_shift = 0;
  int fit_iterations = 0;
};

// Fits C(τ) = C∞·(1 − V·exp(−τ²/(2w²))) by Levenberg–Marquardt with Poisson
// weights. All three stages of the report are set to the raw values.
VisibilityReport fit_hom_dip(const std::vector<ScanPoint>& scan);

// Expected-value model of the operating point used by the correction chain.
struct MultipairConfig {
  HomSetup setup;
  double overlap_peak = 1.0;  // ξ(0)
  bool enabled = true;
};

// Raman stage: V_R = V_raw/(1 − f_bg), where f_bg is the τ-independent share of
// the fourfold floor carried by Raman photons for the given per-source Raman
// share of in-band photons. Multi-pair stage: adds V(1 pair) − V(max_pairs).
VisibilityReport correct_visibility(const VisibilityReport& raw,
                                    const std::array<double, 2>& raman_background_fraction,
                                    const MultipairConfig& multipair);

// Visibility 1 − P(ξ)/P(0) of the enumerated fourfold model.
double model_visibility(const HomSetup& setup, double overlap_peak);

// Source with Raman means set so Raman photons form `fraction` of each band.
SourceModel with_raman_fraction(SourceModel source, double fraction);

}  // namespace nli
