#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nli/error.hpp"
#include "nli/units.hpp"

namespace nli {

// How the pump FWHM maps onto σ_p in the envelope exp[-ν₊²/(4σ_p²)].
//  fwm_field:     envelope is the self-convolution of a Gaussian pump field whose
//                 intensity spectrum has the given FWHM, σ_p = Δω/(2√ln2).
//  intensity_std: σ_p is the standard deviation of a Gaussian intensity
//                 spectrum with the given FWHM, σ_p = Δω/(2√(2 ln2)).
enum class SigmaConvention { fwm_field, intensity_std };

// approximate: θ from the linear medium only. exact: θ = (ΔkL + Δφ_DM)/2.
enum class ThetaMode { approximate, exact };

std::string to_string(SigmaConvention c);
std::string to_string(ThetaMode m);
SigmaConvention sigma_convention_from_string(const std::string& s);
ThetaMode theta_mode_from_string(const std::string& s);

struct PumpSpec {
  double center_wavelength = 0;  // m
  double fwhm_bandwidth = 0;     // m, intensity FWHM of the pump spectrum
  double peak_power = 0;         // W
  double average_power = 0;      // W
  double repetition_rate = 0;    // Hz
  SigmaConvention sigma_convention = SigmaConvention::fwm_field;

  void validate() const;
  double center_omega() const { return wavelength_to_omega(center_wavelength); }
  // σ_p in rad/s
  double sigma() const;
};

struct DsfSpec {
  double length = 0;                      // m
  double zero_dispersion_wavelength = 0;  // m
  double dispersion_slope = 0;            // s/m^3
  double nonlinear_coefficient = 0;       // 1/(W m)

  void validate() const;
};

struct SmfSpec {
  double length = 0;      // m
  double dispersion = 0;  // s/m^2

  void validate() const;
};

struct NliConfig {
  int stages = 3;
  DsfSpec dsf;
  SmfSpec smf;
  PumpSpec pump;
  ThetaMode theta_mode = ThetaMode::approximate;

  void validate() const;

  // Three-stage DSF/SMF interferometer with 1 nm pump and 20 m spacers.
  static NliConfig reference_design();
};

// Signal × idler angular-frequency axes, each uniformly spaced and increasing.
class FrequencyGrid {
 public:
  FrequencyGrid(Eigen::VectorXd signal_omega, Eigen::VectorXd idler_omega);

  // Both axes span [min_wavelength, max_wavelength] with `points` samples
  // uniform in ω.
  static FrequencyGrid from_wavelengths(double min_wavelength, double max_wavelength,
                                        Eigen::Index points);
  static FrequencyGrid from_wavelengths(double signal_min, double signal_max,
                                        Eigen::Index signal_points, double idler_min,
                                        double idler_max, Eigen::Index idler_points);
  // 512 × 512 over 1535–1562 nm.
  static FrequencyGrid reference_grid();

  const Eigen::VectorXd& signal_omega() const { return signal_omega_; }
  const Eigen::VectorXd& idler_omega() const { return idler_omega_; }
  Eigen::VectorXd signal_wavelength() const;
  Eigen::VectorXd idler_wavelength() const;
  double signal_step() const { return signal_step_; }
  double idler_step() const { return idler_step_; }
  Eigen::Index signal_size() const { return signal_omega_.size(); }
  Eigen::Index idler_size() const { return idler_omega_.size(); }
  double cell_area() const { return signal_step_ * idler_step_; }

  // Grid with twice the sample density over the same span.
  FrequencyGrid refined(int factor = 2) const;

  bool operator==(const FrequencyGrid& other) const;

 private:
  Eigen::VectorXd signal_omega_;
  Eigen::VectorXd idler_omega_;
  double signal_step_ = 0;
  double idler_step_ = 0;
};

// sin(x)/x with sinc(0) = 1.
template <typename Scalar>
Scalar sinc(Scalar x) {
  using std::abs;
  using std::sin;
  if (abs(x) < Scalar(1e-6)) {
    const Scalar x2 = x * x;
    return Scalar(1) - x2 / Scalar(6) + x2 * x2 / Scalar(120);
  }
  return sin(x) / x;
}

// Multi-stage interference factor H(θ) = e^{j(N-1)θ} sin(Nθ)/sin(θ).
// Near the poles of 1/sin θ the equivalent geometric sum Σ_{n<N} e^{j2nθ}
// is evaluated instead.
template <typename Scalar>
std::complex<Scalar> interference_factor(Scalar theta, int stages) {
  if (stages < 1) throw ConfigError("interference_factor: stage count must be >= 1");
  using std::sin;
  const Scalar s = sin(theta);
  if (std::abs(s) < Scalar(1e-8)) {
    std::complex<Scalar> sum(0, 0);
    for (int n = 0; n < stages; ++n) sum += std::polar(Scalar(1), Scalar(2 * n) * theta);
    return sum;
  }
  return std::polar(sin(Scalar(stages) * theta) / s, Scalar(stages - 1) * theta);
}

// exp[-(ω_s+ω_i-2ω_p0)²/(4σ_p²)]
double pump_envelope(double omega_s, double omega_i, const PumpSpec& pump);

// k⁽²⁾ = λ_p0²/(2πc) · D_slope · (λ_p0 − λ₀), in s²/m.
double second_order_dispersion(const DsfSpec& dsf, const PumpSpec& pump);

// Δk = k⁽²⁾/4 (ω_s−ω_i)² − 2γP_p, in rad/m.
double delta_k(double omega_s, double omega_i, const DsfSpec& dsf, const PumpSpec& pump);

// Phase accumulated by one linear spacer, Δφ_DM/2 = λ_p0² D L_DM (ω_s−ω_i)²/(16πc).
double spacer_phase(double omega_s, double omega_i, const SmfSpec& smf, const PumpSpec& pump);

double theta(double omega_s, double omega_i, const NliConfig& config);

// Unnormalized amplitude at one frequency pair.
std::complex<double> jsf_amplitude(double omega_s, double omega_i, const NliConfig& config);

struct JsfDiagnostics {
  // Fraction of the total |F|² (integrated over the whole plane) that falls
  // on the grid. NaN when not computed.
  double captured_fraction = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> warnings;
};

// Discretized joint spectral amplitude. Rows index the signal axis.
struct Jsf {
  FrequencyGrid grid;
  Eigen::MatrixXcd amplitude;
  // Factor that was applied to the raw closed-form amplitude to normalize it.
  double normalization = 1.0;
  JsfDiagnostics diagnostics;

  // Σ|F|² Δω_s Δω_i
  double norm_squared() const;
  Eigen::MatrixXd intensity() const { return amplitude.cwiseAbs2(); }
};

Jsf compute_jsf(const FrequencyGrid& grid, const NliConfig& config);

// Normalized F ∝ exp(-a u² - b v²) with u = δω_s+δω_i and v = δω_s−δω_i
// measured from (signal_center, idler_center), in rad/s.
Jsf double_gaussian_jsf(const FrequencyGrid& grid, double signal_center, double idler_center,
                        double a, double b);

// Normalized outer product of two Gaussian marginals (rms widths in rad/s).
Jsf separable_gaussian_jsf(const FrequencyGrid& grid, double signal_center, double idler_center,
                           double signal_width, double idler_width);

// Rectangular dual-band filter.
struct FilterSpec {
  double signal_center = 0;     // m
  double signal_bandwidth = 0;  // m
  double idler_center = 0;      // m
  double idler_bandwidth = 0;   // m
  double in_band_transmission = 1.0;
  double out_of_band_extinction_db = 110.0;  // power ratio; +inf for a hard stop

  void validate() const;
  static FilterSpec centered(double signal_center, double idler_center, double bandwidth);
};

// Fraction of each grid cell (width = axis step, centred on the sample) lying
// inside the band [center − bw/2, center + bw/2] in wavelength.
Eigen::VectorXd band_coverage(const Eigen::VectorXd& omega_axis, double center_wavelength,
                              double bandwidth);

// Per-axis power transmission including partial-cell coverage.
Eigen::VectorXd band_transmission(const Eigen::VectorXd& omega_axis, double center_wavelength,
                                  double bandwidth, double in_band, double extinction_db);

// Not renormalized: the result's norm² is the pair pass probability.
Jsf apply_filter(const Jsf& jsf, const FilterSpec& filter);

}  // namespace nli
