#include "nli/modal.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace nli {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::VectorXd;

SchmidtResult schmidt_decompose(const Jsf& jsf) {
  SchmidtResult out = schmidt_decompose(jsf.amplitude);
  out.signal_omega = jsf.grid.signal_omega();
  out.idler_omega = jsf.grid.idler_omega();
  return out;
}

SchmidtResult schmidt_from_weights(std::vector<double> weights) {
  if (weights.empty()) throw ConfigError("schmidt_from_weights: empty weight list");
  for (double w : weights)
    if (!(w >= 0)) throw ConfigError("schmidt_from_weights: weights must be non-negative");
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0)) throw ConfigError("schmidt_from_weights: weights sum to zero");
  std::sort(weights.begin(), weights.end(), std::greater<>());
  SchmidtResult out;
  out.weights = Eigen::Map<VectorXd>(weights.data(), Index(weights.size())) / total;
  out.purity = out.weights.squaredNorm();
  out.mode_number = 1.0 / out.purity;
  return out;
}

std::vector<double> two_mode_weights(double mode_number) {
  if (!(mode_number >= 1.0) || mode_number > 2.0)
    throw ConfigError("two_mode_weights: mode number must lie in [1, 2]");
  // (1-p)² + p² = 1/M
  const double purity = 1.0 / mode_number;
  const double p = 0.5 * (1.0 - std::sqrt(std::max(0.0, 2.0 * purity - 1.0)));
  return {1.0 - p, p};
}

double gaussian_schmidt_number(double a, double b) {
  if (!(a > 0) || !(b > 0)) throw ConfigError("gaussian_schmidt_number: a, b must be positive");
  return (a + b) / (2.0 * std::sqrt(a * b));
}

std::vector<double> gaussian_schmidt_weights(double a, double b, int count) {
  const double q = (std::sqrt(a) - std::sqrt(b)) / (std::sqrt(a) + std::sqrt(b));
  std::vector<double> out;
  out.reserve(std::size_t(std::max(count, 0)));
  double q2k = 1.0;
  for (int k = 0; k < count; ++k) {
    out.push_back((1.0 - q * q) * q2k);
    q2k *= q * q;
  }
  return out;
}

HeraldingReport heralding_efficiencies(const Jsf& jsf, const FilterSpec& filter) {
  filter.validate();
  const auto& g = jsf.grid;
  const VectorXd ws = band_coverage(g.signal_omega(), filter.signal_center, filter.signal_bandwidth);
  const VectorXd wi = band_coverage(g.idler_omega(), filter.idler_center, filter.idler_bandwidth);
  const Eigen::MatrixXd intensity = jsf.intensity();
  const double total = intensity.sum();
  if (!(total > 0)) throw NumericalError("heralding_efficiencies: spectrum has zero norm");

  const double both = ws.dot(intensity * wi);
  const double idler = (intensity * wi).sum();
  const double signal = (ws.transpose() * intensity).sum();
  if (!(idler > 0) || !(signal > 0))
    throw NumericalError("heralding_efficiencies: no spectral mass in a heralding band");

  HeraldingReport r;
  r.h_s_spectral = std::clamp(both / idler, 0.0, 1.0);
  r.h_i_spectral = std::clamp(both / signal, 0.0, 1.0);
  r.pair_pass_probability = both / total;
  r.signal_pass_probability = signal / total;
  r.idler_pass_probability = idler / total;
  return r;
}

double predicted_hom_visibility(const SchmidtResult& a, const SchmidtResult& b, double delay) {
  if (a.kept_modes() == 0 || b.kept_modes() == 0)
    throw ConfigError("predicted_hom_visibility: Schmidt results carry no mode functions");
  if (a.signal_omega.size() != b.signal_omega.size() || a.signal_omega != b.signal_omega)
    throw ConfigError("predicted_hom_visibility: sources live on different grids");

  const VectorXd& w = a.signal_omega;
  const double w0 = 0.5 * (w(0) + w(w.size() - 1));
  const Eigen::VectorXcd phase =
      (w.array() - w0).unaryExpr([delay](double d) { return std::polar(1.0, d * delay); });
  const MatrixXcd delayed = phase.asDiagonal() * b.signal_modes;
  const Eigen::MatrixXd overlap = (a.signal_modes.adjoint() * delayed).cwiseAbs2();

  const VectorXd la = a.weights.head(a.kept_modes());
  const VectorXd lb = b.weights.head(b.kept_modes());
  return std::clamp(la.dot(overlap * lb), 0.0, 1.0);
}

double g2_heralded_prediction(double pairs_per_pulse, double h_s, double h_i, double mode_number) {
  if (!(h_s * h_i > 0)) throw ConfigError("g2_heralded_prediction: zero heralding product");
  if (!(mode_number >= 1.0)) throw ConfigError("g2_heralded_prediction: mode number must be >= 1");
  if (!(pairs_per_pulse >= 0)) throw ConfigError("g2_heralded_prediction: negative pair rate");
  return 2.0 * pairs_per_pulse / (h_s * h_i) * (1.0 + 1.0 / mode_number);
}

double g2_unheralded_prediction(double mode_number) {
  if (!(mode_number >= 1.0)) throw ConfigError("g2_unheralded_prediction: mode number must be >= 1");
  return 1.0 + 1.0 / mode_number;
}

}  // namespace nli
