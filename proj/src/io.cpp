#include "nli/io.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace nli {

namespace fs = std::filesystem;

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  out.flush();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(line);
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

double to_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw IoError("malformed number '" + s + "'");
  return v;
}

std::uint64_t to_count(const std::string& s) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    throw IoError("malformed count '" + s + "'");
  }
  if (used != s.size()) throw IoError("malformed count '" + s + "'");
  return v;
}

template <typename Fn>
std::string grid_table(const FrequencyGrid& grid, Fn cell) {
  const Eigen::VectorXd ls = grid.signal_wavelength();
  const Eigen::VectorXd li = grid.idler_wavelength();
  std::string out = "signal_nm\\idler_nm";
  for (Eigen::Index j = 0; j < li.size(); ++j) out += "," + format_double(to_nm(li(j)));
  out += "\n";
  for (Eigen::Index i = 0; i < ls.size(); ++i) {
    out += format_double(to_nm(ls(i)));
    for (Eigen::Index j = 0; j < li.size(); ++j) out += "," + cell(i, j);
    out += "\n";
  }
  return out;
}

Json detector_json(const DetectorSpec& d) {
  return {{"efficiency", d.efficiency},
          {"dark_count_probability", d.dark_count_probability},
          {"dead_time_s", d.dead_time},
          {"gate_rate_hz", d.gate_rate}};
}

DetectorSpec detector_from_json(const Json& j) {
  DetectorSpec d;
  d.efficiency = j.at("efficiency").get<double>();
  d.dark_count_probability = j.at("dark_count_probability").get<double>();
  d.dead_time = j.at("dead_time_s").get<double>();
  d.gate_rate = j.at("gate_rate_hz").get<double>();
  return d;
}

Json score_json(const IslandScore& s) {
  return {{"bandwidth_nm", s.bandwidth_nm}, {"mode_number", s.mode_number},
          {"h_s", s.h_s},                   {"h_i", s.h_i},
          {"captured_mass", s.captured_mass}, {"figure_of_merit", s.figure_of_merit()}};
}

}  // namespace

std::string jsi_csv(const Jsf& jsf) {
  const Eigen::MatrixXd jsi = jsf.intensity();
  return grid_table(jsf.grid, [&](Eigen::Index i, Eigen::Index j) { return format_double(jsi(i, j)); });
}

JsiTable parse_jsi_csv(const std::string& text) {
  const auto rows = lines_of(text);
  if (rows.size() < 2) throw IoError("JSI CSV needs a header and at least one row");
  const auto header = split(rows[0], ',');
  if (header.size() < 2) throw IoError("JSI CSV header has no idler columns");
  JsiTable t;
  const auto ni = Eigen::Index(header.size() - 1);
  const auto ns = Eigen::Index(rows.size() - 1);
  t.idler_nm.resize(ni);
  t.signal_nm.resize(ns);
  t.intensity.resize(ns, ni);
  for (Eigen::Index j = 0; j < ni; ++j) t.idler_nm(j) = to_double(header[std::size_t(j) + 1]);
  for (Eigen::Index i = 0; i < ns; ++i) {
    const auto cells = split(rows[std::size_t(i) + 1], ',');
    if (Eigen::Index(cells.size()) != ni + 1) throw IoError("JSI CSV row has the wrong width");
    t.signal_nm(i) = to_double(cells[0]);
    for (Eigen::Index j = 0; j < ni; ++j) t.intensity(i, j) = to_double(cells[std::size_t(j) + 1]);
  }
  return t;
}

Json config_json(const JobConfig& config) {
  Json j = Json::object();
  for (const auto& [key, value] : config.resolved()) j[key] = value;
  return j;
}

Json jsf_metadata(const Jsf& jsf, const JobConfig& config) {
  const auto& g = jsf.grid;
  Json warnings = Json::array();
  for (const auto& w : jsf.diagnostics.warnings) warnings.push_back(w);
  Json captured = std::isfinite(jsf.diagnostics.captured_fraction)
                      ? Json(jsf.diagnostics.captured_fraction)
                      : Json(nullptr);
  return {{"grid",
           {{"signal_points", g.signal_size()},
            {"idler_points", g.idler_size()},
            {"signal_omega_min", g.signal_omega()(0)},
            {"signal_omega_max", g.signal_omega()(g.signal_size() - 1)},
            {"idler_omega_min", g.idler_omega()(0)},
            {"idler_omega_max", g.idler_omega()(g.idler_size() - 1)}}},
          {"normalization", jsf.normalization},
          {"norm_squared", jsf.norm_squared()},
          {"captured_fraction", captured},
          {"warnings", warnings},
          {"config", config_json(config)}};
}

Json schmidt_json(const SchmidtResult& result, std::size_t max_weights) {
  Json weights = Json::array();
  for (Eigen::Index k = 0; k < result.weights.size() && std::size_t(k) < max_weights; ++k)
    weights.push_back(result.weights(k));
  return {{"mode_number", result.mode_number},
          {"purity", result.purity},
          {"kept_modes", result.kept_modes()},
          {"weights", weights}};
}

Json heralding_json(const HeraldingReport& r) {
  return {{"h_s", r.h_s_spectral},
          {"h_i", r.h_i_spectral},
          {"pair_pass_probability", r.pair_pass_probability},
          {"signal_pass_probability", r.signal_pass_probability},
          {"idler_pass_probability", r.idler_pass_probability}};
}

Json counts_to_json(const CountsRecord& r) {
  Json j = {{"n_pulses", r.n_pulses},
            {"singles_signal", r.singles_signal},
            {"singles_idler", r.singles_idler},
            {"coincidences_same_pulse", r.coincidences_same_pulse},
            {"coincidences_adjacent_pulse", r.coincidences_adjacent_pulse},
            {"average_power_w", r.average_power},
            {"signal_detector", detector_json(r.signal_detector)},
            {"idler_detector", detector_json(r.idler_detector)}};
  if (r.hbt) {
    const auto& h = *r.hbt;
    j["hbt"] = {{"herald", h.herald}, {"herald_a", h.herald_a}, {"herald_b", h.herald_b},
                {"herald_ab", h.herald_ab}, {"a", h.a}, {"b", h.b}, {"ab", h.ab}};
  }
  Json hom = Json::array();
  for (const auto& p : r.fourfold)
    hom.push_back({{"delay_s", p.delay},
                   {"fourfold", p.fourfold},
                   {"n_pulses", p.n_pulses},
                   {"expected_probability", p.expected_probability}});
  j["fourfold"] = hom;
  return j;
}

CountsRecord counts_from_json(const Json& j) {
  try {
    CountsRecord r;
    r.n_pulses = j.at("n_pulses").get<std::uint64_t>();
    r.singles_signal = j.at("singles_signal").get<std::uint64_t>();
    r.singles_idler = j.at("singles_idler").get<std::uint64_t>();
    r.coincidences_same_pulse = j.at("coincidences_same_pulse").get<std::uint64_t>();
    r.coincidences_adjacent_pulse = j.at("coincidences_adjacent_pulse").get<std::uint64_t>();
    r.average_power = j.value("average_power_w", 0.0);
    if (j.contains("signal_detector")) r.signal_detector = detector_from_json(j["signal_detector"]);
    if (j.contains("idler_detector")) r.idler_detector = detector_from_json(j["idler_detector"]);
    if (j.contains("hbt")) {
      const auto& h = j["hbt"];
      r.hbt = HbtCounts{h.at("herald").get<std::uint64_t>(), h.at("herald_a").get<std::uint64_t>(),
                        h.at("herald_b").get<std::uint64_t>(), h.at("herald_ab").get<std::uint64_t>(),
                        h.at("a").get<std::uint64_t>(),      h.at("b").get<std::uint64_t>(),
                        h.at("ab").get<std::uint64_t>()};
    }
    if (j.contains("fourfold"))
      for (const auto& p : j["fourfold"])
        r.fourfold.push_back({p.at("delay_s").get<double>(), p.at("fourfold").get<std::uint64_t>(),
                              p.at("n_pulses").get<std::uint64_t>(),
                              p.value("expected_probability", 0.0)});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed counts record: ") + e.what());
  }
}

std::string hom_csv(const std::vector<HomPoint>& points) {
  std::string out = "delay_s,fourfold,n_pulses\n";
  for (const auto& p : points)
    out += format_double(p.delay) + "," + std::to_string(p.fourfold) + "," +
           std::to_string(p.n_pulses) + "\n";
  return out;
}

std::vector<HomPoint> parse_hom_csv(const std::string& text) {
  const auto rows = lines_of(text);
  if (rows.empty() || rows[0].rfind("delay_s", 0) != 0) throw IoError("HOM CSV lacks its header");
  std::vector<HomPoint> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto cells = split(rows[r], ',');
    if (cells.size() != 3) throw IoError("HOM CSV row needs delay_s,fourfold,n_pulses");
    HomPoint p;
    p.delay = to_double(cells[0]);
    p.fourfold = to_count(cells[1]);
    p.n_pulses = to_count(cells[2]);
    out.push_back(p);
  }
  return out;
}

std::string island_mask_csv(const IslandSegmentation& seg, const FrequencyGrid& grid) {
  return grid_table(grid, [&](Eigen::Index i, Eigen::Index j) { return std::to_string(seg.labels(i, j)); });
}

Json island_json(const IslandReport& is) {
  Json j = {{"index", is.index},
            {"label", is.label},
            {"centroid_signal_nm", is.centroid_signal_nm},
            {"centroid_idler_nm", is.centroid_idler_nm},
            {"detuning_rad_s", is.detuning},
            {"extent_signal_nm", is.extent_signal_nm},
            {"extent_idler_nm", is.extent_idler_nm},
            {"roundness", is.roundness},
            {"island_mass", is.island_mass},
            {"peak", is.peak},
            {"cells", is.cells}};
  if (is.best) j["best"] = score_json(*is.best);
  if (!is.candidates.empty()) {
    Json c = Json::array();
    for (const auto& s : is.candidates) c.push_back(score_json(s));
    j["candidates"] = c;
  }
  return j;
}

std::string design_csv(const std::vector<DesignPoint>& points) {
  std::string out =
      "pump_fwhm_nm,smf_length_m,stages,island_index,signal_center_nm,idler_center_nm,"
      "bandwidth_nm,mode_number,h_s,h_i,captured_mass,roundness,composite\n";
  for (const auto& p : points) {
    const IslandScore s = p.score.value_or(IslandScore{});
    out += format_double(p.pump_fwhm_nm) + "," + format_double(p.smf_length_m) + "," +
           std::to_string(p.stages) + "," + std::to_string(p.island.index) + "," +
           format_double(p.island.centroid_signal_nm) + "," +
           format_double(p.island.centroid_idler_nm) + "," + format_double(s.bandwidth_nm) + "," +
           format_double(s.mode_number) + "," + format_double(s.h_s) + "," + format_double(s.h_i) +
           "," + format_double(s.captured_mass) + "," + format_double(p.island.roundness) + "," +
           format_double(p.composite) + "\n";
  }
  return out;
}

Json design_json(const std::vector<DesignPoint>& points) {
  Json rows = Json::array();
  for (const auto& p : points) {
    Json row = {{"pump_fwhm_nm", p.pump_fwhm_nm},
                {"smf_length_m", p.smf_length_m},
                {"stages", p.stages},
                {"island", island_json(p.island)},
                {"composite", p.composite}};
    if (p.score) row["score"] = score_json(*p.score);
    rows.push_back(row);
  }
  return rows;
}

Json fit_json(const QuadraticFit& fit) {
  return {{"s1", fit.s1},
          {"s2", fit.s2},
          {"s1_sigma", fit.s1_sigma()},
          {"s2_sigma", fit.s2_sigma()},
          {"covariance_s1_s2", fit.covariance(0, 1)},
          {"residual_norm", fit.residual_norm}};
}

Json visibility_json(const VisibilityReport& r) {
  return {{"v_raw", r.v_raw},
          {"v_raw_sigma", r.v_raw_sigma},
          {"v_raman_corrected", r.v_raman_corrected},
          {"v_raman_corrected_sigma", r.v_raman_corrected_sigma},
          {"v_multipair_corrected", r.v_multipair_corrected},
          {"v_multipair_corrected_sigma", r.v_multipair_corrected_sigma},
          {"dip_width_s", r.dip_width},
          {"dip_width_sigma_s", r.dip_width_sigma},
          {"baseline", r.baseline},
          {"baseline_sigma", r.baseline_sigma},
          {"background_floor", r.background_floor},
          {"multipair_shift", r.multipair_shift},
          {"fit_iterations", r.fit_iterations}};
}

OutputDir::OutputDir(fs::path root, std::string command)
    : root_(std::move(root)), command_(std::move(command)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec || !fs::is_directory(root_))
    throw IoError("cannot create output directory '" + root_.string() + "'");
  const fs::path probe = root_ / ".write_probe";
  write_text_file(probe, "");
  fs::remove(probe, ec);
}

void OutputDir::write(const std::string& name, const std::string& content) {
  write_text_file(root_ / name, content);
  files_.push_back(name);
}

void OutputDir::write_json(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }

void OutputDir::finish(const JobConfig& config) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
  Json manifest = {{"command", command_},
                   {"files", files_},
                   {"config", config_json(config)},
                   {"timestamp", stamp}};
  write_text_file(root_ / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace nli
