#pragma once

#include <vector>

#include <Eigen/Dense>

#include "nli/spectral.hpp"

namespace nli {

struct SchmidtResult {
  // Descending, Σ = 1. Full spectrum (every singular value of the grid matrix).
  Eigen::VectorXd weights;
  double purity = 1.0;       // Σλ²
  double mode_number = 1.0;  // 1/purity
  // Leading modes (columns), kept until cumulative weight ≥ 1 − 1e-6.
  // Discrete orthonormal vectors on the grid axes.
  Eigen::MatrixXcd signal_modes;
  Eigen::MatrixXcd idler_modes;
  Eigen::VectorXd signal_omega;
  Eigen::VectorXd idler_omega;

  Eigen::Index kept_modes() const { return signal_modes.cols(); }
};

inline constexpr double kSchmidtTruncation = 1e-6;

// Schmidt decomposition of any dense amplitude matrix (rows = signal).
// Mode vectors are returned for the leading modes only.
template <typename Derived>
SchmidtResult schmidt_decompose(const Eigen::MatrixBase<Derived>& amplitude) {
  using Matrix = Eigen::MatrixXcd;
  const Matrix a = amplitude.template cast<std::complex<double>>();
  const double total = a.squaredNorm();
  if (!(total > 0) || !std::isfinite(total))
    throw NumericalError("schmidt_decompose: amplitude has zero norm");
  Eigen::BDCSVD<Matrix> svd(a / std::sqrt(total), Eigen::ComputeThinU | Eigen::ComputeThinV);

  SchmidtResult out;
  out.weights = svd.singularValues().cwiseAbs2();
  out.weights /= out.weights.sum();
  out.purity = out.weights.squaredNorm();
  out.mode_number = 1.0 / out.purity;

  Eigen::Index keep = 0;
  double cumulative = 0;
  while (keep < out.weights.size() && cumulative < 1.0 - kSchmidtTruncation)
    cumulative += out.weights(keep++);
  keep = std::max<Eigen::Index>(keep, 1);
  out.signal_modes = svd.matrixU().leftCols(keep);
  out.idler_modes = svd.matrixV().leftCols(keep).conjugate();
  return out;
}

SchmidtResult schmidt_decompose(const Jsf& jsf);

// Schmidt structure from a reduced set of weights, with no mode functions.
SchmidtResult schmidt_from_weights(std::vector<double> weights);

// Two-mode weights (1-p, p) whose purity equals 1/mode_number.
std::vector<double> two_mode_weights(double mode_number);

// Closed-form Schmidt number of F ∝ exp(-a u² - b v²): (a+b)/(2√(ab)).
double gaussian_schmidt_number(double a, double b);

// Mehler-kernel Schmidt weights λ_k = (1−q²) q^{2k}, q = (√a−√b)/(√a+√b).
std::vector<double> gaussian_schmidt_weights(double a, double b, int count);

struct HeraldingReport {
  double h_s_spectral = 0;  // P(both in band) / P(idler in band)
  double h_i_spectral = 0;  // P(both in band) / P(signal in band)
  double pair_pass_probability = 0;
  double signal_pass_probability = 0;
  double idler_pass_probability = 0;
};

// Geometric band masses of |F|² (filter transmission and extinction ignored).
HeraldingReport heralding_efficiencies(const Jsf& jsf_unfiltered, const FilterSpec& filter);

// Tr[ρ_a ρ_b(τ)] for heralded states ρ = Σλ_k|φ_k⟩⟨φ_k|, with source b's
// modes delayed by τ (seconds) through the phase e^{iωτ}.
double predicted_hom_visibility(const SchmidtResult& a, const SchmidtResult& b, double delay);

// 2R_c/(h_s h_i) · (1 + 1/M)
double g2_heralded_prediction(double pairs_per_pulse, double h_s, double h_i, double mode_number);

// 1 + 1/M
double g2_unheralded_prediction(double mode_number);

}  // namespace nli
