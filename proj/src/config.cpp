#include "nli/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "nli/analysis.hpp"
#include "nli/modal.hpp"

namespace nli {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  return v;
}

std::int64_t parse_integer(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  // Accept 1e7-style literals as long as they are exact integers.
  const double v = parse_double(key, t);
  if (v != std::floor(v) || std::abs(v) > 9.007199254740992e15)
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  return static_cast<std::int64_t>(v);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Field {
  std::string key;
  std::function<std::string(const JobConfig&)> get;
  std::function<void(JobConfig&, const std::string&)> set;
};

Field real(std::string key, double JobConfig::*member) {
  return {key, [member](const JobConfig& c) { return format_double(c.*member); },
          [member, key](JobConfig& c, const std::string& v) { c.*member = parse_double(key, v); }};
}

Field integer(std::string key, int JobConfig::*member) {
  return {key, [member](const JobConfig& c) { return std::to_string(c.*member); },
          [member, key](JobConfig& c, const std::string& v) {
            const auto n = parse_integer(key, v);
            if (n < std::numeric_limits<int>::min() || n > std::numeric_limits<int>::max())
              throw ConfigError(key + ": value out of range");
            c.*member = static_cast<int>(n);
          }};
}

Field count(std::string key, std::uint64_t JobConfig::*member) {
  return {key, [member](const JobConfig& c) { return std::to_string(c.*member); },
          [member, key](JobConfig& c, const std::string& v) {
            const auto n = parse_integer(key, v);
            if (n < 0) throw ConfigError(key + ": must be non-negative");
            c.*member = static_cast<std::uint64_t>(n);
          }};
}

Field reals(std::string key, std::vector<double> JobConfig::*member) {
  return {key,
          [member](const JobConfig& c) {
            std::string out;
            for (double v : c.*member) out += (out.empty() ? "" : ", ") + format_double(v);
            return out;
          },
          [member, key](JobConfig& c, const std::string& v) {
            std::vector<double> values;
            for (const auto& item : split_list(v)) values.push_back(parse_double(key, item));
            c.*member = std::move(values);
          }};
}

Field integers(std::string key, std::vector<int> JobConfig::*member) {
  return {key,
          [member](const JobConfig& c) {
            std::string out;
            for (int v : c.*member) out += (out.empty() ? "" : ", ") + std::to_string(v);
            return out;
          },
          [member, key](JobConfig& c, const std::string& v) {
            std::vector<int> values;
            for (const auto& item : split_list(v))
              values.push_back(static_cast<int>(parse_integer(key, item)));
            c.*member = std::move(values);
          }};
}

template <typename Enum, typename ToString, typename FromString>
Field word(std::string key, Enum JobConfig::*member, ToString to, FromString from) {
  return {key, [member, to](const JobConfig& c) { return to(c.*member); },
          [member, from, key](JobConfig& c, const std::string& v) {
            try {
              c.*member = from(trim(v));
            } catch (const ConfigError& e) {
              throw ConfigError(key + ": " + e.what());
            }
          }};
}

const std::vector<Field>& registry() {
  static const std::vector<Field> fields = [] {
    using C = JobConfig;
    auto theta_to = [](ThetaMode m) { return to_string(m); };
    auto sigma_to = [](SigmaConvention s) { return to_string(s); };
    auto raman_to = [](RamanStatistics s) { return to_string(s); };
    return std::vector<Field>{
        integer("nli.stages", &C::nli_stages),
        word("nli.theta_mode", &C::theta_mode, theta_to, theta_mode_from_string),
        word("nli.sigma_convention", &C::sigma_convention, sigma_to,
             sigma_convention_from_string),
        real("pump.center_nm", &C::pump_center_nm),
        real("pump.fwhm_nm", &C::pump_fwhm_nm),
        real("pump.peak_power_w", &C::pump_peak_power_w),
        real("pump.average_power_uw", &C::pump_average_power_uw),
        real("pump.repetition_mhz", &C::pump_repetition_mhz),
        real("dsf.length_m", &C::dsf_length_m),
        real("dsf.zdw_nm", &C::dsf_zdw_nm),
        real("dsf.slope_ps_per_nm2_km", &C::dsf_slope_ps_per_nm2_km),
        real("dsf.gamma_per_w_km", &C::dsf_gamma_per_w_km),
        real("smf.length_m", &C::smf_length_m),
        real("smf.dispersion_ps_per_nm_km", &C::smf_dispersion_ps_per_nm_km),
        real("grid.min_nm", &C::grid_min_nm),
        real("grid.max_nm", &C::grid_max_nm),
        integer("grid.points", &C::grid_points),
        real("filter.signal_center_nm", &C::filter_signal_center_nm),
        real("filter.idler_center_nm", &C::filter_idler_center_nm),
        real("filter.bandwidth_nm", &C::filter_bandwidth_nm),
        real("filter.extinction_db", &C::filter_extinction_db),
        real("filter.transmission", &C::filter_transmission),
        real("islands.threshold", &C::island_threshold),
        real("source.brightness", &C::source_brightness),
        real("source.mode_number", &C::source_mode_number),
        real("source.h_s", &C::source_h_s),
        real("source.h_i", &C::source_h_i),
        real("source.signal_transmission", &C::source_signal_transmission),
        real("source.idler_transmission", &C::source_idler_transmission),
        real("source.raman_fraction", &C::source_raman_fraction),
        word("source.raman_statistics", &C::source_raman_statistics, raman_to,
             raman_statistics_from_string),
        real("detector.efficiency", &C::detector_efficiency),
        real("detector.dark_count_probability", &C::detector_dark_count_probability),
        real("detector.dead_time_us", &C::detector_dead_time_us),
        reals("sweep.powers_uw", &C::sweep_powers_uw),
        reals("design.pump_fwhm_nm", &C::design_pump_fwhm_nm),
        reals("design.smf_length_m", &C::design_smf_length_m),
        integers("design.stages", &C::design_stages),
        reals("design.bandwidths_nm", &C::design_bandwidths_nm),
        reals("hom.delays_ps", &C::hom_delays_ps),
        real("hom.dip_width_ps", &C::hom_dip_width_ps),
        count("hom.pulses", &C::hom_pulses),
        integer("hom.max_pairs", &C::hom_max_pairs),
        count("run.pulses", &C::run_pulses),
        count("run.seed", &C::run_seed),
        integer("run.threads", &C::run_threads),
    };
  }();
  return fields;
}

const Field& find_field(const std::string& key) {
  const auto& fields = registry();
  const auto it = std::find_if(fields.begin(), fields.end(),
                               [&](const Field& f) { return f.key == key; });
  if (it == fields.end()) throw ConfigError("unknown config key '" + key + "'");
  return *it;
}

}  // namespace

void JobConfig::set(const std::string& key, const std::string& value) {
  find_field(key).set(*this, value);
}

void JobConfig::apply(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto where = origin + ":" + std::to_string(line_number) + ": ";
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(where + "empty key");
    if (!section.empty()) key = section + "." + key;
    try {
      set(key, trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
}

std::vector<std::pair<std::string, std::string>> JobConfig::resolved() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : registry()) out.emplace_back(f.key, f.get(*this));
  return out;
}

std::vector<std::string> JobConfig::known_keys() {
  std::vector<std::string> out;
  for (const auto& f : registry()) out.push_back(f.key);
  return out;
}

NliConfig JobConfig::nli() const {
  NliConfig c;
  c.stages = nli_stages;
  c.theta_mode = theta_mode;
  c.pump.center_wavelength = pump_center_nm * 1e-9;
  c.pump.fwhm_bandwidth = pump_fwhm_nm * 1e-9;
  c.pump.peak_power = pump_peak_power_w;
  c.pump.average_power = pump_average_power_uw * 1e-6;
  c.pump.repetition_rate = pump_repetition_mhz * 1e6;
  c.pump.sigma_convention = sigma_convention;
  c.dsf.length = dsf_length_m;
  c.dsf.zero_dispersion_wavelength = dsf_zdw_nm * 1e-9;
  c.dsf.dispersion_slope = dispersion_slope_from_lab(dsf_slope_ps_per_nm2_km);
  c.dsf.nonlinear_coefficient = gamma_from_lab(dsf_gamma_per_w_km);
  c.smf.length = smf_length_m;
  c.smf.dispersion = dispersion_from_lab(smf_dispersion_ps_per_nm_km);
  return c;
}

DetectorSpec JobConfig::detector() const {
  DetectorSpec d;
  d.efficiency = detector_efficiency;
  d.dark_count_probability = detector_dark_count_probability;
  d.dead_time = detector_dead_time_us * 1e-6;
  d.gate_rate = pump_repetition_mhz * 1e6;
  return d;
}

FrequencyGrid JobConfig::grid() const {
  return FrequencyGrid::from_wavelengths(grid_min_nm * 1e-9, grid_max_nm * 1e-9, grid_points);
}

FilterSpec JobConfig::filter() const {
  FilterSpec f = FilterSpec::centered(filter_signal_center_nm * 1e-9,
                                      filter_idler_center_nm * 1e-9, filter_bandwidth_nm * 1e-9);
  f.in_band_transmission = filter_transmission;
  f.out_of_band_extinction_db = filter_extinction_db;
  return f;
}

SourceModel JobConfig::source() const {
  SourceModel s;
  s.schmidt_weights = two_mode_weights(source_mode_number);
  s.h_s = source_h_s;
  s.h_i = source_h_i;
  s.signal_transmission = source_signal_transmission;
  s.idler_transmission = source_idler_transmission;
  s.raman_statistics = source_raman_statistics;
  s.mean_pairs_per_pulse = s.mean_pairs_for_brightness(source_brightness);
  s = with_raman_fraction(s, source_raman_fraction);
  s.validate();
  return s;
}

PowerScaling JobConfig::power_scaling() const {
  const SourceModel s = source();
  const double p = operating_power();
  return {s.mean_pairs_per_pulse / (p * p), s.raman_signal_mean / p, s.raman_idler_mean / p};
}

RunOptions JobConfig::run() const {
  RunOptions r;
  r.n_pulses = run_pulses;
  r.seed = run_seed;
  r.threads = run_threads;
  return r;
}

void JobConfig::validate() const {
  nli().validate();
  grid();
  filter().validate();
  if (!(island_threshold > 0) || !(island_threshold < 1))
    throw ConfigError("islands.threshold must lie in (0, 1)");
  if (!(source_brightness > 0)) throw ConfigError("source.brightness must be positive");
  source();
  detector().validate();
  if (sweep_powers_uw.empty()) throw ConfigError("sweep.powers_uw must not be empty");
  for (double p : sweep_powers_uw)
    if (!(p > 0)) throw ConfigError("sweep.powers_uw entries must be positive");
  if (hom_delays_ps.empty()) throw ConfigError("hom.delays_ps must not be empty");
  if (!(hom_dip_width_ps > 0)) throw ConfigError("hom.dip_width_ps must be positive");
  if (hom_max_pairs < 1) throw ConfigError("hom.max_pairs must be >= 1");
  if (hom_pulses == 0) throw ConfigError("hom.pulses must be positive");
  if (run_pulses == 0) throw ConfigError("run.pulses must be positive");
  if (run_threads < 1) throw ConfigError("run.threads must be >= 1");
  DesignRanges ranges{design_pump_fwhm_nm, design_smf_length_m, design_stages,
                      design_bandwidths_nm};
  ranges.validate();
}

JobConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  JobConfig c;
  c.apply(buffer.str(), path);
  c.validate();
  return c;
}

}  // namespace nli
