#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nli/analysis.hpp"
#include "nli/config.hpp"
#include "nli/counting.hpp"
#include "nli/design.hpp"
#include "nli/io.hpp"
#include "nli/modal.hpp"
#include "nli/reproduce.hpp"
#include "nli/spectral.hpp"

namespace fs = std::filesystem;
using namespace nli;

namespace {

enum ExitCode { kOk = 0, kCheckFailed = 1, kConfigError = 2, kIoError = 3 };

struct GlobalOptions {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  int threads = 0;
};

struct AnalyzeInputs {
  std::string sweep;
  std::string counts;
  std::string hbt;
  std::string hom;
};

JobConfig resolve_config(const GlobalOptions& g, CLI::App& app) {
  JobConfig c;
  if (!g.config_path.empty()) c.apply(read_text_file(g.config_path), g.config_path);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (app.count("--seed")) c.run_seed = g.seed;
  if (app.count("--threads")) c.run_threads = g.threads;
  c.validate();
  return c;
}

fs::path job_directory(const GlobalOptions& g, const std::string& command) {
  if (!g.out_dir.empty()) return g.out_dir;
  const char* env = std::getenv("NLI_OUT_DIR");
  return fs::path(env && *env ? env : "nli_out") / command;
}

IslandReport scored_roundest(const Jsf& jsf, const JobConfig& c) {
  return score_island(jsf, roundest_island(detect_islands(jsf, c.island_threshold)),
                      c.design_bandwidths_nm);
}

void cmd_jsi(const JobConfig& c, OutputDir& out) {
  const Jsf jsf = compute_jsf(c.grid(), c.nli());
  out.write("jsi.csv", jsi_csv(jsf));
  out.write_json("jsi.json", jsf_metadata(jsf, c));
  for (const auto& w : jsf.diagnostics.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "JSI " << jsf.grid.signal_size() << "x" << jsf.grid.idler_size() << " written to "
            << out.path().string() << "\n";
}

void cmd_schmidt(const JobConfig& c, OutputDir& out) {
  const Jsf jsf = compute_jsf(c.grid(), c.nli());
  const FilterSpec filter = c.filter();
  const Jsf filtered = apply_filter(jsf, filter);
  const SchmidtResult s = schmidt_decompose(filtered);
  const HeraldingReport h = heralding_efficiencies(jsf, filter);
  Json report = {{"filtered", schmidt_json(s)},
                 {"heralding", heralding_json(h)},
                 {"predicted_visibility", predicted_hom_visibility(s, s, 0.0)},
                 {"g2_heralded_prediction",
                  g2_heralded_prediction(c.source_brightness, h.h_s_spectral, h.h_i_spectral,
                                         s.mode_number)},
                 {"g2_unheralded_prediction", g2_unheralded_prediction(s.mode_number)},
                 {"config", config_json(c)}};
  out.write_json("schmidt.json", report);

  std::string modes = "signal_nm";
  for (Eigen::Index k = 0; k < std::min<Eigen::Index>(s.kept_modes(), 4); ++k)
    modes += ",mode" + std::to_string(k) + "_abs";
  modes += "\n";
  const Eigen::VectorXd ls = jsf.grid.signal_wavelength();
  for (Eigen::Index i = 0; i < ls.size(); ++i) {
    modes += format_double(to_nm(ls(i)));
    for (Eigen::Index k = 0; k < std::min<Eigen::Index>(s.kept_modes(), 4); ++k)
      modes += "," + format_double(std::abs(s.signal_modes(i, k)));
    modes += "\n";
  }
  out.write("signal_modes.csv", modes);
  std::cout << "M = " << format_double(s.mode_number) << ", h_s = " << h.h_s_spectral
            << ", h_i = " << h.h_i_spectral << "\n";
}

void cmd_islands(const JobConfig& c, OutputDir& out) {
  const Jsf jsf = compute_jsf(c.grid(), c.nli());
  const IslandSegmentation seg = segment_islands(jsf.intensity(), jsf.grid, c.island_threshold);
  Json list = Json::array();
  for (const auto& is : seg.islands) list.push_back(island_json(is));
  Json report = {{"islands", list}, {"config", config_json(c)}};
  bool has_round = false;
  for (const auto& is : seg.islands) has_round |= !is.degenerate();
  if (has_round) report["roundest"] = island_json(scored_roundest(jsf, c));
  out.write_json("islands.json", report);
  out.write("island_mask.csv", island_mask_csv(seg, jsf.grid));
  std::cout << seg.islands.size() << " islands\n";
  for (const auto& is : seg.islands)
    std::cout << "  m=" << is.index << " (" << is.centroid_signal_nm << ", "
              << is.centroid_idler_nm << ") nm roundness " << is.roundness << "\n";
}

void cmd_design(const JobConfig& c, OutputDir& out) {
  DesignRanges ranges{c.design_pump_fwhm_nm, c.design_smf_length_m, c.design_stages,
                      c.design_bandwidths_nm, c.nli(), c.grid(), c.island_threshold};
  const auto points = sweep_design(ranges, c.run_threads);
  out.write("design.csv", design_csv(points));
  out.write_json("design.json", {{"points", design_json(points)}, {"config", config_json(c)}});
  if (!points.empty()) {
    const auto& best = points.front();
    std::cout << "best: pump " << best.pump_fwhm_nm << " nm, SMF " << best.smf_length_m
              << " m, N=" << best.stages << ", island m=" << best.island.index
              << ", composite " << best.composite << "\n";
  }
}

void cmd_simulate(const JobConfig& c, OutputDir& out) {
  const DetectorSpec det = c.detector();
  const CountsRecord rec = simulate_coincidence_run(c.source(), det, det, c.run());
  out.write_json("counts.json", counts_to_json(rec));

  std::vector<double> powers;
  for (double p : c.sweep_powers_uw) powers.push_back(p * 1e-6);
  const auto sweep = simulate_power_sweep(c.source(), c.power_scaling(), powers, det, det, c.run());
  Json arr = Json::array();
  for (const auto& p : sweep) arr.push_back(counts_to_json(p.counts));
  out.write_json("power_sweep.json", arr);
  std::cout << "C^c = " << rec.coincidences_same_pulse
            << ", C^acc = " << rec.coincidences_adjacent_pulse << " over " << rec.n_pulses
            << " pulses\n";
}

void cmd_hbt(const JobConfig& c, OutputDir& out) {
  const DetectorSpec det = c.detector();
  const CountsRecord rec = simulate_hbt(c.source(), det, det, det, c.run());
  out.write_json("hbt_counts.json", counts_to_json(rec));
  const Estimate g = g2_from_hbt(*rec.hbt);
  std::cout << "heralded g2 = " << g.value << " +- " << g.sigma << "\n";
}

HomSetup hom_setup(const JobConfig& c) {
  DetectorSpec det = c.detector();
  const SourceModel s = c.source();
  return {s, s, det, det, det, det, c.hom_max_pairs};
}

std::vector<double> hom_delays(const JobConfig& c) {
  std::vector<double> d;
  for (double ps : c.hom_delays_ps) d.push_back(ps * 1e-12);
  return d;
}

void cmd_hom(const JobConfig& c, OutputDir& out) {
  const auto delays = hom_delays(c);
  const auto overlaps = gaussian_overlap_profile(delays, 1.0 / c.source_mode_number,
                                                 c.hom_dip_width_ps * 1e-12);
  const auto scan = simulate_hom(hom_setup(c), delays, overlaps, c.hom_pulses, c.run_seed);
  out.write("hom.csv", hom_csv(scan));
  const VisibilityReport fit = fit_hom_dip(to_scan(scan));
  std::cout << "raw V = " << fit.v_raw << " +- " << fit.v_raw_sigma << "\n";
}

std::vector<PowerCount> singles_vs_power(const Json& sweep, bool signal) {
  std::vector<PowerCount> out;
  for (const auto& item : sweep) {
    const CountsRecord r = counts_from_json(item);
    const double n = double(r.n_pulses);
    const DetectorSpec& d = signal ? r.signal_detector : r.idler_detector;
    const double raw = double(signal ? r.singles_signal : r.singles_idler);
    out.push_back({r.average_power, n * live_time_corrected_rate(raw, n, d.dead_gates())});
  }
  return out;
}

int cmd_analyze(const JobConfig& c, const AnalyzeInputs& in, OutputDir& out) {
  if (in.sweep.empty() && in.counts.empty() && in.hbt.empty() && in.hom.empty())
    throw ConfigError("analyze: give at least one of --sweep, --counts, --hbt, --hom");
  Json report = {{"config", config_json(c)}};
  std::array<double, 2> fractions{c.source_raman_fraction, c.source_raman_fraction};
  std::optional<QuadraticFit> fit_s, fit_i;
  double sweep_pulses = 0;

  if (!in.sweep.empty()) {
    const Json sweep = Json::parse(read_text_file(in.sweep));
    if (!sweep.is_array() || sweep.empty()) throw IoError("analyze: sweep file has no points");
    sweep_pulses = double(counts_from_json(sweep.front()).n_pulses);
    for (const auto& item : sweep)
      if (double(counts_from_json(item).n_pulses) != sweep_pulses)
        throw IoError("analyze: sweep points must share one pulse count");
    fit_s = fit_singles_power(singles_vs_power(sweep, true));
    fit_i = fit_singles_power(singles_vs_power(sweep, false));
    fractions = {raman_fraction(*fit_s, c.operating_power()),
                 raman_fraction(*fit_i, c.operating_power())};
    report["power_fit"] = {{"signal", fit_json(*fit_s)},
                           {"idler", fit_json(*fit_i)},
                           {"raman_fraction_signal", fractions[0]},
                           {"raman_fraction_idler", fractions[1]}};
  }
  report["raman_fractions_used"] = {fractions[0], fractions[1]};

  if (!in.counts.empty()) {
    const CountsRecord r = counts_from_json(Json::parse(read_text_file(in.counts)));
    const double n = double(r.n_pulses);
    const TrueCoincidence ct =
        true_coincidence(double(r.coincidences_same_pulse), double(r.coincidences_adjacent_pulse));
    // FWM share of each singles channel, from the fit if present.
    auto fwm = [&](const std::optional<QuadraticFit>& fit, double singles, double share) {
      if (fit && r.average_power > 0) return fit->quadratic_term(r.average_power) / sweep_pulses * n;
      return singles * (1.0 - share);
    };
    const double n_fwm_i = fwm(fit_i, double(r.singles_idler), fractions[1]);
    const double n_fwm_s = fwm(fit_s, double(r.singles_signal), fractions[0]);
    const HeraldingEstimate h_s =
        heralding_from_counts(ct.value, r.signal_detector.efficiency, n_fwm_i, ct.sigma);
    const HeraldingEstimate h_i =
        heralding_from_counts(ct.value, r.idler_detector.efficiency, n_fwm_s, ct.sigma);
    report["coincidences"] = {{"true", ct.value},
                              {"true_sigma", ct.sigma},
                              {"negative", ct.negative},
                              {"h_s", h_s.value},
                              {"h_s_sigma", h_s.sigma},
                              {"h_s_unphysical", h_s.unphysical},
                              {"h_i", h_i.value},
                              {"h_i_sigma", h_i.sigma},
                              {"h_i_unphysical", h_i.unphysical}};
  }

  if (!in.hbt.empty()) {
    const CountsRecord r = counts_from_json(Json::parse(read_text_file(in.hbt)));
    if (!r.hbt) throw IoError("analyze: '" + in.hbt + "' has no HBT counts");
    const Estimate g = g2_from_hbt(*r.hbt);
    const Estimate gs = g2_unheralded(double(r.n_pulses), double(r.hbt->a), double(r.hbt->b),
                                      double(r.hbt->ab));
    const double corrected = raman_correct_g2s(gs.value, fractions[0]);
    report["hbt"] = {{"g2_heralded", g.value},
                     {"g2_heralded_sigma", g.sigma},
                     {"g2_unheralded", gs.value},
                     {"g2_unheralded_sigma", gs.sigma},
                     {"g2_unheralded_raman_corrected", corrected},
                     {"mode_number", corrected > 1 ? Json(1.0 / (corrected - 1.0)) : Json(nullptr)}};
  }

  if (!in.hom.empty()) {
    const auto scan = parse_hom_csv(read_text_file(in.hom));
    const VisibilityReport raw = fit_hom_dip(to_scan(scan));
    const VisibilityReport chain = correct_visibility(
        raw, fractions, MultipairConfig{hom_setup(c), 1.0 / c.source_mode_number});
    report["hom"] = visibility_json(chain);
  }
  out.write_json("analysis.json", report);
  std::cout << report.dump(2) << "\n";
  return kOk;
}

int cmd_reproduce(const JobConfig& c, OutputDir& out) {
  const auto results = run_acceptance(c);
  bool all = true;
  for (const auto& r : results) {
    std::cout << format_check(r) << "\n";
    all = all && r.pass;
  }
  out.write_json("reproduce.json", {{"checks", checks_json(results)}, {"config", config_json(c)}});
  std::cout << (all ? "all checks passed" : "some checks failed") << "\n";
  return all ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Design and verification toolkit for multi-stage fiber nonlinear interferometers"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config_path, "key = value configuration file");
  app.add_option("--out", g.out_dir, "output directory (default: $NLI_OUT_DIR/<command>)");
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--set", g.overrides, "override one config key, key=value");

  AnalyzeInputs inputs;
  std::vector<std::pair<std::string, CLI::App*>> commands;
  for (const char* name : {"jsi", "schmidt", "islands", "design", "simulate", "hbt", "hom",
                           "analyze", "reproduce"})
    commands.emplace_back(name, app.add_subcommand(name)->fallthrough());
  commands[0].second->description("joint spectral intensity map and metadata");
  commands[1].second->description("Schmidt spectrum and heralding of the filtered spectrum");
  commands[2].second->description("island segmentation and roundest-island scores");
  commands[3].second->description("sweep pump bandwidth, SMF length and stage count");
  commands[4].second->description("coincidence run and singles power sweep");
  commands[5].second->description("heralded HBT run");
  commands[6].second->description("two-source HOM delay scan");
  commands[7].second->description("reduce simulated or measured counts to a report");
  commands[8].second->description("run every acceptance check");
  CLI::App* analyze = commands[7].second;
  analyze->add_option("--sweep", inputs.sweep, "power sweep JSON");
  analyze->add_option("--counts", inputs.counts, "coincidence counts JSON");
  analyze->add_option("--hbt", inputs.hbt, "HBT counts JSON");
  analyze->add_option("--hom", inputs.hom, "HOM scan CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  std::string command;
  for (const auto& [name, sub] : commands)
    if (sub->parsed()) command = name;

  try {
    const JobConfig config = resolve_config(g, app);
    OutputDir out(job_directory(g, command), command);
    int code = kOk;
    if (command == "jsi") cmd_jsi(config, out);
    else if (command == "schmidt") cmd_schmidt(config, out);
    else if (command == "islands") cmd_islands(config, out);
    else if (command == "design") cmd_design(config, out);
    else if (command == "simulate") cmd_simulate(config, out);
    else if (command == "hbt") cmd_hbt(config, out);
    else if (command == "hom") cmd_hom(config, out);
    else if (command == "analyze") code = cmd_analyze(config, inputs, out);
    else if (command == "reproduce") code = cmd_reproduce(config, out);
    out.finish(config);
    return code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCheckFailed;
  }
}
