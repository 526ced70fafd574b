#include "nli/spectral.hpp"

#include <algorithm>
#include <sstream>

namespace nli {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::VectorXd;

std::string to_string(SigmaConvention c) {
  return c == SigmaConvention::fwm_field ? "fwm_field" : "intensity_std";
}

std::string to_string(ThetaMode m) { return m == ThetaMode::approximate ? "approximate" : "exact"; }

SigmaConvention sigma_convention_from_string(const std::string& s) {
  if (s == "fwm_field") return SigmaConvention::fwm_field;
  if (s == "intensity_std") return SigmaConvention::intensity_std;
  throw ConfigError("unknown sigma convention '" + s + "'");
}

ThetaMode theta_mode_from_string(const std::string& s) {
  if (s == "approximate") return ThetaMode::approximate;
  if (s == "exact") return ThetaMode::exact;
  throw ConfigError("unknown theta mode '" + s + "'");
}

void PumpSpec::validate() const {
  if (!(center_wavelength > 0) || !(fwhm_bandwidth > 0) || !(peak_power > 0) ||
      !(average_power > 0) || !(repetition_rate > 0))
    throw ConfigError("pump: all fields must be positive");
  if (fwhm_bandwidth / center_wavelength > 0.05)
    throw ConfigError("pump: bandwidth exceeds 5% of the center wavelength");
}

double PumpSpec::sigma() const {
  const double fwhm_omega =
      2.0 * kPi * kSpeedOfLight * fwhm_bandwidth / (center_wavelength * center_wavelength);
  switch (sigma_convention) {
    case SigmaConvention::fwm_field:
      return fwhm_omega / (2.0 * std::sqrt(std::log(2.0)));
    case SigmaConvention::intensity_std:
      return fwhm_omega / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  }
  return fwhm_omega;
}

void DsfSpec::validate() const {
  if (!(length > 0) || !(zero_dispersion_wavelength > 0) || !(dispersion_slope > 0) ||
      !(nonlinear_coefficient > 0))
    throw ConfigError("dsf: all fields must be positive");
}

void SmfSpec::validate() const {
  if (!(length >= 0)) throw ConfigError("smf: length must be non-negative");
  if (dispersion == 0 || !std::isfinite(dispersion))
    throw ConfigError("smf: dispersion must be finite and non-zero");
}

void NliConfig::validate() const {
  if (stages < 1) throw ConfigError("nli: stage count must be >= 1");
  dsf.validate();
  smf.validate();
  pump.validate();
}

NliConfig NliConfig::reference_design() {
  using namespace units;
  NliConfig c;
  c.stages = 3;
  c.dsf.length = 150.0_m;
  c.dsf.zero_dispersion_wavelength = 1548.5_nm;
  c.dsf.dispersion_slope = dispersion_slope_from_lab(0.075);
  c.dsf.nonlinear_coefficient = gamma_from_lab(2.0);
  c.smf.length = 20.0_m;
  c.smf.dispersion = dispersion_from_lab(17.0);
  c.pump.center_wavelength = 1548.8_nm;
  c.pump.fwhm_bandwidth = 1.0_nm;
  c.pump.peak_power = 0.35_W;
  c.pump.average_power = 50.0_uW;
  c.pump.repetition_rate = 36.8_MHz;
  c.theta_mode = ThetaMode::approximate;
  return c;
}

// --- FrequencyGrid ---------------------------------------------------------

namespace {

double checked_step(const VectorXd& axis, const char* name) {
  if (axis.size() < 2) throw ConfigError(std::string("grid: ") + name + " axis needs >= 2 points");
  const double step = (axis(axis.size() - 1) - axis(0)) / double(axis.size() - 1);
  if (!(step > 0)) throw ConfigError(std::string("grid: ") + name + " axis must be increasing");
  for (Index k = 1; k < axis.size(); ++k) {
    const double d = axis(k) - axis(k - 1);
    if (!(d > 0) || std::abs(d - step) > 1e-9 * step)
      throw ConfigError(std::string("grid: ") + name + " axis must be uniformly spaced");
  }
  return step;
}

VectorXd omega_axis(double min_wavelength, double max_wavelength, Index points) {
  if (!(min_wavelength > 0) || !(max_wavelength > min_wavelength))
    throw ConfigError("grid: wavelength span must be positive and increasing");
  if (points < 2) throw ConfigError("grid: needs >= 2 points per axis");
  return VectorXd::LinSpaced(points, wavelength_to_omega(max_wavelength),
                             wavelength_to_omega(min_wavelength));
}

VectorXd to_wavelength(const VectorXd& omega) {
  return omega.unaryExpr([](double w) { return omega_to_wavelength(w); });
}

}  // namespace

FrequencyGrid::FrequencyGrid(VectorXd signal_omega, VectorXd idler_omega)
    : signal_omega_(std::move(signal_omega)), idler_omega_(std::move(idler_omega)) {
  signal_step_ = checked_step(signal_omega_, "signal");
  idler_step_ = checked_step(idler_omega_, "idler");
}

FrequencyGrid FrequencyGrid::from_wavelengths(double min_wavelength, double max_wavelength,
                                              Index points) {
  return from_wavelengths(min_wavelength, max_wavelength, points, min_wavelength, max_wavelength,
                          points);
}

FrequencyGrid FrequencyGrid::from_wavelengths(double signal_min, double signal_max,
                                              Index signal_points, double idler_min,
                                              double idler_max, Index idler_points) {
  return FrequencyGrid(omega_axis(signal_min, signal_max, signal_points),
                       omega_axis(idler_min, idler_max, idler_points));
}

FrequencyGrid FrequencyGrid::reference_grid() {
  using namespace units;
  return from_wavelengths(1535.0_nm, 1562.0_nm, 512);
}

VectorXd FrequencyGrid::signal_wavelength() const { return to_wavelength(signal_omega_); }
VectorXd FrequencyGrid::idler_wavelength() const { return to_wavelength(idler_omega_); }

FrequencyGrid FrequencyGrid::refined(int factor) const {
  if (factor < 1) throw ConfigError("grid: refinement factor must be >= 1");
  auto refine = [factor](const VectorXd& axis) {
    const Index n = (axis.size() - 1) * factor + 1;
    return VectorXd::LinSpaced(n, axis(0), axis(axis.size() - 1));
  };
  return FrequencyGrid(refine(signal_omega_), refine(idler_omega_));
}

bool FrequencyGrid::operator==(const FrequencyGrid& other) const {
  return signal_omega_.size() == other.signal_omega_.size() &&
         idler_omega_.size() == other.idler_omega_.size() &&
         signal_omega_ == other.signal_omega_ && idler_omega_ == other.idler_omega_;
}

// --- interferometer factors ---------------------------------------------

double pump_envelope(double omega_s, double omega_i, const PumpSpec& pump) {
  pump.validate();
  const double nu = omega_s + omega_i - 2.0 * pump.center_omega();
  const double sigma = pump.sigma();
  return std::exp(-nu * nu / (4.0 * sigma * sigma));
}

double second_order_dispersion(const DsfSpec& dsf, const PumpSpec& pump) {
  const double lp = pump.center_wavelength;
  return lp * lp / (2.0 * kPi * kSpeedOfLight) * dsf.dispersion_slope *
         (lp - dsf.zero_dispersion_wavelength);
}

double delta_k(double omega_s, double omega_i, const DsfSpec& dsf, const PumpSpec& pump) {
  const double detuning = omega_s - omega_i;
  return second_order_dispersion(dsf, pump) / 4.0 * detuning * detuning -
         2.0 * dsf.nonlinear_coefficient * pump.peak_power;
}

double spacer_phase(double omega_s, double omega_i, const SmfSpec& smf, const PumpSpec& pump) {
  const double lp = pump.center_wavelength;
  const double detuning = omega_s - omega_i;
  return lp * lp * smf.dispersion * smf.length * detuning * detuning /
         (16.0 * kPi * kSpeedOfLight);
}

double theta(double omega_s, double omega_i, const NliConfig& config) {
  double value = spacer_phase(omega_s, omega_i, config.smf, config.pump);
  if (config.theta_mode == ThetaMode::exact)
    value += 0.5 * delta_k(omega_s, omega_i, config.dsf, config.pump) * config.dsf.length;
  return value;
}

namespace {

// Unnormalized amplitude.
std::complex<double> raw_amplitude(double omega_s, double omega_i, const NliConfig& c,
                                   double omega_p, double sigma, double k2) {
  const double nu = omega_s + omega_i - 2.0 * omega_p;
  const double detuning = omega_s - omega_i;
  const double dk =
      k2 / 4.0 * detuning * detuning - 2.0 * c.dsf.nonlinear_coefficient * c.pump.peak_power;
  double th = spacer_phase(omega_s, omega_i, c.smf, c.pump);
  if (c.theta_mode == ThetaMode::exact) th += 0.5 * dk * c.dsf.length;
  return std::exp(-nu * nu / (4.0 * sigma * sigma)) * sinc(0.5 * dk * c.dsf.length) *
         interference_factor(th, c.stages);
}

// ∫∫|F|² over the whole plane. In (u = ω_s+ω_i−2ω_p, v = ω_s−ω_i) the
// amplitude factorizes into env(u)·g(v), and dω_s dω_i = du dv / 2.
double total_raw_mass(const NliConfig& c, double sigma, double k2) {
  const double envelope_integral = sigma * std::sqrt(2.0 * kPi);
  const double gp = 2.0 * c.dsf.nonlinear_coefficient * c.pump.peak_power;
  // Integrate g² over v ≥ 0 until the sinc argument reaches ~400π.
  const double target_x = 400.0 * kPi;
  const double omega_p = c.pump.center_omega();
  double v_max = omega_p;
  if (k2 != 0.0) {
    const double v2 = (2.0 * target_x / c.dsf.length + gp) * 4.0 / std::abs(k2);
    v_max = std::min(std::sqrt(v2), omega_p);
  }
  const Index n = Index(1) << 22;
  const double h = v_max / double(n);
  auto g2 = [&](double v) {
    const double dk = k2 / 4.0 * v * v - gp;
    double th = c.smf.length > 0 ? spacer_phase(v, 0.0, c.smf, c.pump) : 0.0;
    if (c.theta_mode == ThetaMode::exact) th += 0.5 * dk * c.dsf.length;
    const double s = sinc(0.5 * dk * c.dsf.length);
    return s * s * std::norm(interference_factor(th, c.stages));
  };
  // Simpson on [0, v_max], even panel count.
  double sum = g2(0.0) + g2(v_max);
  for (Index k = 1; k < n; ++k) sum += (k % 2 ? 4.0 : 2.0) * g2(double(k) * h);
  double line = sum * h / 3.0;
  // Analytic 1/x² tail beyond v_max: |H|² ≤ N², sinc² ≤ 1/x², x ≈ k2 L v²/8.
  if (k2 != 0.0 && v_max < omega_p) {
    const double a = std::abs(k2) * c.dsf.length / 8.0;
    line += double(c.stages * c.stages) / (3.0 * a * a * v_max * v_max * v_max);
  }
  return 0.5 * envelope_integral * 2.0 * line;
}

}  // namespace

std::complex<double> jsf_amplitude(double omega_s, double omega_i, const NliConfig& config) {
  config.validate();
  return raw_amplitude(omega_s, omega_i, config, config.pump.center_omega(), config.pump.sigma(),
                       second_order_dispersion(config.dsf, config.pump));
}

double Jsf::norm_squared() const { return amplitude.squaredNorm() * grid.cell_area(); }

Jsf compute_jsf(const FrequencyGrid& grid, const NliConfig& config) {
  config.validate();
  const double omega_p = config.pump.center_omega();
  const double sigma = config.pump.sigma();
  const double k2 = second_order_dispersion(config.dsf, config.pump);
  const auto& ws = grid.signal_omega();
  const auto& wi = grid.idler_omega();

  MatrixXcd amp(ws.size(), wi.size());
  for (Index j = 0; j < wi.size(); ++j)
    for (Index i = 0; i < ws.size(); ++i)
      amp(i, j) = raw_amplitude(ws(i), wi(j), config, omega_p, sigma, k2);

  const double raw_mass = amp.squaredNorm() * grid.cell_area();
  if (!(raw_mass > 0)) throw NumericalError("compute_jsf: amplitude vanishes on the grid");

  Jsf out{grid, std::move(amp), 1.0 / std::sqrt(raw_mass), {}};
  out.amplitude *= out.normalization;

  const double total = total_raw_mass(config, sigma, k2);
  out.diagnostics.captured_fraction = std::min(1.0, raw_mass / total);
  if (out.diagnostics.captured_fraction < 0.99) {
    std::ostringstream msg;
    msg << "grid captures only " << out.diagnostics.captured_fraction * 100.0
        << "% of the |F|^2 mass (phase-matching band extends beyond the grid)";
    out.diagnostics.warnings.push_back(msg.str());
  }
  return out;
}

namespace {

Jsf normalized(const FrequencyGrid& grid, MatrixXcd amp) {
  const double mass = amp.squaredNorm() * grid.cell_area();
  if (!(mass > 0)) throw NumericalError("test spectrum vanishes on the grid");
  const double scale = 1.0 / std::sqrt(mass);
  amp *= scale;
  Jsf out{grid, std::move(amp), scale, {}};
  return out;
}

}  // namespace

Jsf double_gaussian_jsf(const FrequencyGrid& grid, double signal_center, double idler_center,
                        double a, double b) {
  if (!(a > 0) || !(b > 0)) throw ConfigError("double_gaussian_jsf: a and b must be positive");
  const auto& ws = grid.signal_omega();
  const auto& wi = grid.idler_omega();
  MatrixXcd amp(ws.size(), wi.size());
  for (Index j = 0; j < wi.size(); ++j)
    for (Index i = 0; i < ws.size(); ++i) {
      const double ds = ws(i) - signal_center;
      const double di = wi(j) - idler_center;
      const double u = ds + di;
      const double v = ds - di;
      amp(i, j) = std::exp(-a * u * u - b * v * v);
    }
  return normalized(grid, std::move(amp));
}

Jsf separable_gaussian_jsf(const FrequencyGrid& grid, double signal_center, double idler_center,
                           double signal_width, double idler_width) {
  const VectorXd fs = (grid.signal_omega().array() - signal_center)
                          .unaryExpr([&](double d) {
                            return std::exp(-d * d / (4.0 * signal_width * signal_width));
                          })
                          .matrix();
  const VectorXd fi = (grid.idler_omega().array() - idler_center)
                          .unaryExpr([&](double d) {
                            return std::exp(-d * d / (4.0 * idler_width * idler_width));
                          })
                          .matrix();
  return normalized(grid, (fs * fi.transpose()).cast<std::complex<double>>());
}

// --- Filters ---------------------------------------------------------------

void FilterSpec::validate() const {
  if (!(signal_center > 0) || !(idler_center > 0))
    throw ConfigError("filter: band centers must be positive");
  if (!(signal_bandwidth > 0) || !(idler_bandwidth > 0))
    throw ConfigError("filter: bandwidths must be positive");
  if (!(in_band_transmission > 0) || in_band_transmission > 1)
    throw ConfigError("filter: in-band transmission must lie in (0, 1]");
  if (!(out_of_band_extinction_db >= 0))
    throw ConfigError("filter: extinction must be non-negative dB");
}

FilterSpec FilterSpec::centered(double signal_center, double idler_center, double bandwidth) {
  FilterSpec f;
  f.signal_center = signal_center;
  f.idler_center = idler_center;
  f.signal_bandwidth = bandwidth;
  f.idler_bandwidth = bandwidth;
  return f;
}

VectorXd band_coverage(const VectorXd& omega_axis, double center_wavelength, double bandwidth) {
  const double step = omega_axis.size() > 1
                          ? (omega_axis(omega_axis.size() - 1) - omega_axis(0)) /
                                double(omega_axis.size() - 1)
                          : 0.0;
  const double lo = wavelength_to_omega(center_wavelength + 0.5 * bandwidth);
  const double hi = wavelength_to_omega(center_wavelength - 0.5 * bandwidth);
  VectorXd out(omega_axis.size());
  for (Index k = 0; k < omega_axis.size(); ++k) {
    const double a = omega_axis(k) - 0.5 * step;
    const double b = omega_axis(k) + 0.5 * step;
    const double overlap = std::max(0.0, std::min(b, hi) - std::max(a, lo));
    out(k) = step > 0 ? std::min(1.0, overlap / step) : 0.0;
  }
  return out;
}

VectorXd band_transmission(const VectorXd& omega_axis, double center_wavelength,
                           double bandwidth, double in_band, double extinction_db) {
  const double leak = std::isinf(extinction_db) ? 0.0 : std::pow(10.0, -extinction_db / 10.0);
  const VectorXd cover = band_coverage(omega_axis, center_wavelength, bandwidth);
  return (cover.array() * in_band + (1.0 - cover.array()) * leak).matrix();
}

Jsf apply_filter(const Jsf& jsf, const FilterSpec& filter) {
  filter.validate();
  const auto& g = jsf.grid;
  const VectorXd cs = band_coverage(g.signal_omega(), filter.signal_center, filter.signal_bandwidth);
  const VectorXd ci = band_coverage(g.idler_omega(), filter.idler_center, filter.idler_bandwidth);
  if (cs.sum() <= 0 || ci.sum() <= 0)
    throw ConfigError("apply_filter: filter band does not overlap the grid");

  const VectorXd ts =
      band_transmission(g.signal_omega(), filter.signal_center, filter.signal_bandwidth,
                        filter.in_band_transmission, filter.out_of_band_extinction_db)
          .cwiseSqrt();
  const VectorXd ti =
      band_transmission(g.idler_omega(), filter.idler_center, filter.idler_bandwidth,
                        filter.in_band_transmission, filter.out_of_band_extinction_db)
          .cwiseSqrt();
  Jsf out = jsf;
  out.amplitude = (ts.asDiagonal() * jsf.amplitude * ti.asDiagonal()).eval();
  return out;
}

}  // namespace nli
