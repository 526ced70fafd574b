#include <gtest/gtest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "nli/config.hpp"
#include "nli/io.hpp"

using namespace nli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nli_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Config, DefaultsValidate) {
  const JobConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.nli().stages, 3);
  EXPECT_NEAR(c.nli().pump.center_wavelength, 1548.8e-9, 1e-20);
  EXPECT_EQ(c.detector().dead_gates(), 368);
  EXPECT_NEAR(c.source().brightness(), 0.039, 1e-12);
}

TEST(Config, SectionsCommentsAndLists) {
  JobConfig c;
  c.apply(R"(
# leading comment
[nli]
stages = 4   # trailing comment
theta_mode = exact
[pump]
fwhm_nm = 0.7
[sweep]
powers_uw = 5, 15 ,25
[run]
pulses = 2e6
seed = 42
)");
  EXPECT_EQ(c.nli_stages, 4);
  EXPECT_EQ(c.theta_mode, ThetaMode::exact);
  EXPECT_DOUBLE_EQ(c.pump_fwhm_nm, 0.7);
  EXPECT_EQ(c.sweep_powers_uw, (std::vector<double>{5, 15, 25}));
  EXPECT_EQ(c.run_pulses, 2'000'000u);
  EXPECT_EQ(c.run_seed, 42u);
  EXPECT_EQ(c.run().n_pulses, 2'000'000u);
}

TEST(Config, FullyQualifiedKeysAndSet) {
  JobConfig c;
  c.apply("smf.length_m = 11\n");
  EXPECT_DOUBLE_EQ(c.smf_length_m, 11);
  c.set("detector.efficiency", "0.2");
  EXPECT_DOUBLE_EQ(c.detector_efficiency, 0.2);
}

TEST(Config, ErrorsCarryLocation) {
  JobConfig c;
  try {
    c.apply("[pump]\nfwhm_nm = 1\nbogus = 3\n", "job.cfg");
    FAIL() << "unknown key accepted";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("job.cfg:3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(c.apply("no equals sign here\n"), ConfigError);
  EXPECT_THROW(c.apply("[unterminated\n"), ConfigError);
  EXPECT_THROW(c.set("pump.fwhm_nm", "wide"), ConfigError);
  EXPECT_THROW(c.set("nli.stages", "2.5"), ConfigError);
  EXPECT_THROW(c.set("source.raman_statistics", "gaussian"), ConfigError);
}

TEST(Config, ValidationRejectsUnphysicalValues) {
  JobConfig c;
  c.detector_efficiency = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = JobConfig{};
  c.grid_min_nm = 1570;
  EXPECT_THROW(c.validate(), ConfigError);
  c = JobConfig{};
  c.source_mode_number = 0.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = JobConfig{};
  c.design_stages = {};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, ResolvedRoundTrip) {
  JobConfig a;
  a.set("pump.fwhm_nm", "0.7123456789012345");
  a.set("hom.delays_ps", "-3,0,3");
  a.set("source.raman_statistics", "thermal");
  std::string text;
  for (const auto& [k, v] : a.resolved()) text += k + " = " + v + "\n";
  JobConfig b;
  b.apply(text);
  EXPECT_EQ(a.resolved(), b.resolved());
  EXPECT_EQ(b.pump_fwhm_nm, a.pump_fwhm_nm);
  EXPECT_EQ(a.resolved().size(), JobConfig::known_keys().size());
}

TEST(Config, FormatDoubleIsExact) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 36.8e6, -2.5})
    EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(Config, LoadConfigReportsMissingFile) {
  EXPECT_THROW(load_config("/nonexistent/dir/job.cfg"), IoError);
  const fs::path dir = scratch("load");
  fs::create_directories(dir);
  write_text_file(dir / "job.cfg", "[nli]\nstages = 2\n");
  EXPECT_EQ(load_config((dir / "job.cfg").string()).nli_stages, 2);
  fs::remove_all(dir);
}

TEST(JsiCsv, RoundTrip) {
  const FrequencyGrid g = FrequencyGrid::from_wavelengths(1540e-9, 1557e-9, 24);
  const double wc = 0.5 * (g.signal_omega()(0) + g.signal_omega()(23));
  const Jsf jsf = separable_gaussian_jsf(g, wc, wc, 1e12, 2e12);
  const JsiTable t = parse_jsi_csv(jsi_csv(jsf));
  ASSERT_EQ(t.intensity.rows(), 24);
  ASSERT_EQ(t.intensity.cols(), 24);
  const Eigen::MatrixXd expected = jsf.amplitude.cwiseAbs2();
  EXPECT_LT((t.intensity - expected).cwiseAbs().maxCoeff(), 1e-12 * expected.maxCoeff());
  EXPECT_NEAR(t.signal_nm(0), g.signal_wavelength()(0) * 1e9, 1e-9);
  EXPECT_THROW(parse_jsi_csv("a,b\n1,2,3\n"), IoError);
}

TEST(CountsJson, RoundTrip) {
  CountsRecord r;
  r.n_pulses = 123456789;
  r.singles_signal = 1000;
  r.singles_idler = 900;
  r.coincidences_same_pulse = 300;
  r.coincidences_adjacent_pulse = 7;
  r.hbt = HbtCounts{10, 20, 30, 40, 50, 60, 70};
  r.fourfold = {{-1e-12, 5, 1000, 0.004}, {0.0, 1, 1000, 0.001}};
  r.average_power = 2.5e-5;
  r.signal_detector = DetectorSpec::gated_spd();
  r.idler_detector.efficiency = 0.05;
  const CountsRecord b = counts_from_json(Json::parse(counts_to_json(r).dump()));
  EXPECT_EQ(b.n_pulses, r.n_pulses);
  EXPECT_EQ(b.coincidences_adjacent_pulse, 7u);
  ASSERT_TRUE(b.hbt.has_value());
  EXPECT_EQ(b.hbt->herald_ab, 40u);
  EXPECT_EQ(b.hbt->ab, 70u);
  ASSERT_EQ(b.fourfold.size(), 2u);
  EXPECT_EQ(b.fourfold[0].delay, -1e-12);
  EXPECT_EQ(b.fourfold[1].expected_probability, 0.001);
  EXPECT_EQ(b.average_power, 2.5e-5);
  EXPECT_EQ(b.signal_detector.dead_time, 10e-6);
  EXPECT_EQ(b.idler_detector.efficiency, 0.05);
}

TEST(HomCsv, RoundTrip) {
  const std::vector<HomPoint> pts{{-2e-12, 10, 100, 0}, {0.0, 3, 100, 0}, {2e-12, 11, 100, 0}};
  const auto back = parse_hom_csv(hom_csv(pts));
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(back[k].delay, pts[k].delay);
    EXPECT_EQ(back[k].fourfold, pts[k].fourfold);
    EXPECT_EQ(back[k].n_pulses, pts[k].n_pulses);
  }
  EXPECT_THROW(parse_hom_csv("delay_s,fourfold,n_pulses\nx,1,2\n"), IoError);
}

TEST(OutputDir, WritesFilesAndManifest) {
  const fs::path dir = scratch("out");
  {
    OutputDir out(dir, "jsi");
    out.write("a.txt", "hello\n");
    out.write_json("b.json", Json{{"k", 1}});
    out.finish(JobConfig{});
  }
  EXPECT_EQ(read_text_file(dir / "a.txt"), "hello\n");
  const Json m = Json::parse(read_text_file(dir / "manifest.json"));
  EXPECT_EQ(m["command"], "jsi");
  EXPECT_EQ(m["files"].size(), 2u);
  EXPECT_TRUE(m.contains("timestamp"));
  EXPECT_EQ(m["config"]["nli.stages"], "3");
  fs::remove_all(dir);
}

TEST(OutputDir, UnwritableRootRaisesIoError) {
  const fs::path dir = scratch("blocked");
  fs::create_directories(dir);
  write_text_file(dir / "file", "x");
  EXPECT_THROW(OutputDir(dir / "file" / "sub", "jsi"), IoError);
  EXPECT_THROW(read_text_file(dir / "missing"), IoError);
  fs::remove_all(dir);
}
