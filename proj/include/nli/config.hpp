#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nli/counting.hpp"
#include "nli/design.hpp"
#include "nli/spectral.hpp"

namespace nli {

// Every job reads the same flat `key = value` file. `[section]` headers
// prefix the keys that follow; `#` starts a comment. Values are numbers,
// words, or comma-separated lists. Unknown keys are rejected.
struct JobConfig {
  // Lab units, converted to SI by nli().
  int nli_stages = 3;
  ThetaMode theta_mode = ThetaMode::approximate;
  SigmaConvention sigma_convention = SigmaConvention::fwm_field;
  double pump_center_nm = 1548.8;
  double pump_fwhm_nm = 1.0;
  double pump_peak_power_w = 0.35;
  double pump_average_power_uw = 50.0;
  double pump_repetition_mhz = 36.8;
  double dsf_length_m = 150.0;
  double dsf_zdw_nm = 1548.5;
  double dsf_slope_ps_per_nm2_km = 0.075;
  double dsf_gamma_per_w_km = 2.0;
  double smf_length_m = 20.0;
  double smf_dispersion_ps_per_nm_km = 17.0;

  double grid_min_nm = 1535.0;
  double grid_max_nm = 1562.0;
  int grid_points = 512;

  // Filter passbands; also the centres used by the heralding report.
  double filter_signal_center_nm = 1553.7;
  double filter_idler_center_nm = 1543.8;
  double filter_bandwidth_nm = 1.5;
  double filter_extinction_db = 110.0;
  double filter_transmission = 1.0;

  double island_threshold = kDefaultIslandThreshold;

  // Source at the operating point (average power nli.pump.average_power).
  double source_brightness = 0.039;  // pairs/pulse with both photons in band
  double source_mode_number = 1.04;
  double source_h_s = 0.912;
  double source_h_i = 0.905;
  double source_signal_transmission = 1.0 / 3.0;
  double source_idler_transmission = 1.0 / 3.0;
  double source_raman_fraction = 0.087;  // Raman share of in-band photons
  RamanStatistics source_raman_statistics = RamanStatistics::poisson;

  double detector_efficiency = 0.15;
  double detector_dark_count_probability = 1e-6;  // per gate
  double detector_dead_time_us = 10.0;

  std::vector<double> sweep_powers_uw{10, 20, 30, 40, 50, 60, 70};

  std::vector<double> design_pump_fwhm_nm{0.7, 1.0};
  std::vector<double> design_smf_length_m{11.0, 20.0};
  std::vector<int> design_stages{2, 3, 4};
  std::vector<double> design_bandwidths_nm{1.0, 1.5, 2.0};

  std::vector<double> hom_delays_ps{-10, -8, -6, -5, -4, -3, -2, -1, 0, 1, 2, 3, 4, 5, 6, 8, 10};
  double hom_dip_width_ps = 2.0;  // rms width of ξ(τ)
  std::uint64_t hom_pulses = 1'000'000'000'000ULL;
  int hom_max_pairs = 2;

  std::uint64_t run_pulses = 10'000'000;
  std::uint64_t run_seed = 1;
  int run_threads = 1;

  // Parses `text` on top of the current values.
  void apply(const std::string& text, const std::string& origin = "<config>");
  void set(const std::string& key, const std::string& value);
  void validate() const;

  // Every key with its resolved value, in a stable order.
  std::vector<std::pair<std::string, std::string>> resolved() const;
  static std::vector<std::string> known_keys();

  NliConfig nli() const;
  DetectorSpec detector() const;  // gated at the pump repetition rate
  FrequencyGrid grid() const;
  FilterSpec filter() const;
  SourceModel source() const;  // at the operating power
  double operating_power() const { return pump_average_power_uw * 1e-6; }
  PowerScaling power_scaling() const;
  RunOptions run() const;
};

JobConfig load_config(const std::string& path);

// Exact decimal text of a double ("%.17g"), parseable back to the same value.
std::string format_double(double v);

}  // namespace nli
