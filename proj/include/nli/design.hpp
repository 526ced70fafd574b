#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nli/modal.hpp"
#include "nli/spectral.hpp"

namespace nli {

inline constexpr double kDefaultIslandThreshold = 0.15;

struct IslandScore {
  double bandwidth_nm = 0;
  double mode_number = 0;
  double h_s = 0;
  double h_i = 0;
  double captured_mass = 0;  // P(both photons in band), the brightness proxy
  double figure_of_merit() const { return h_s * h_i / mode_number; }
};

struct IslandReport {
  // 0 for the degenerate island straddling ω_s = ω_i; off-diagonal islands
  // are numbered 1, 2, ... outwards, mirror images sharing the same index.
  int index = 0;
  int label = 0;  // 1-based component label in the segmentation mask
  double centroid_signal_nm = 0;
  double centroid_idler_nm = 0;
  double detuning = 0;  // intensity-weighted ω_s − ω_i, rad/s
  double extent_signal_nm = 0;  // half-max extent along the wavelength axes
  double extent_idler_nm = 0;
  double roundness = 0;  // half-max extent ratio along the principal axes
  double island_mass = 0;
  double peak = 0;
  Eigen::Index cells = 0;
  // Filled by score_island: the best candidate and every candidate tried.
  std::optional<IslandScore> best;
  std::vector<IslandScore> candidates;

  bool degenerate() const { return index == 0; }
};

struct IslandSegmentation {
  Eigen::MatrixXi labels;  // 0 outside every island
  std::vector<IslandReport> islands;
};

// Connected components (8-connectivity) of jsi ≥ threshold·max, ordered by
// |detuning| and then by detuning sign (negative first).
IslandSegmentation segment_islands(const Eigen::MatrixXd& jsi, const FrequencyGrid& grid,
                                   double threshold_fraction = kDefaultIslandThreshold);

std::vector<IslandReport> detect_islands(const Eigen::MatrixXd& jsi, const FrequencyGrid& grid,
                                         double threshold_fraction = kDefaultIslandThreshold);
std::vector<IslandReport> detect_islands(const Jsf& jsf,
                                         double threshold_fraction = kDefaultIslandThreshold);

// Off-diagonal island with the largest roundness. Mirror ties go to the island
// whose signal wavelength is longer.
const IslandReport& roundest_island(const std::vector<IslandReport>& islands);

// Rectangular hard-stop filters of each bandwidth centred on the island
// centroid; keeps the bandwidth with the largest h_s·h_i/M.
IslandScore evaluate_filter(const Jsf& jsf, const FilterSpec& filter);
IslandReport score_island(const Jsf& jsf, IslandReport island,
                          const std::vector<double>& bandwidths_nm);

// Mean JSI along ω_s + ω_i = 2ω_p between the half-maximum edges of main
// islands m and m+1, relative to the brighter of the two peaks.
double island_contrast(const NliConfig& config, int m = 1);

struct DesignRanges {
  std::vector<double> pump_fwhm_nm;
  std::vector<double> smf_length_m;
  std::vector<int> stages;
  std::vector<double> bandwidths_nm;
  NliConfig base = NliConfig::reference_design();
  FrequencyGrid grid = FrequencyGrid::reference_grid();
  double threshold = kDefaultIslandThreshold;

  void validate() const;
};

struct DesignPoint {
  double pump_fwhm_nm = 0;
  double smf_length_m = 0;
  int stages = 0;
  FilterSpec filter;
  IslandReport island;
  std::optional<IslandScore> score;
  // h_s·h_i·captured_mass/M; zero when no off-diagonal island exists.
  double composite = 0;
};

// Exhaustive sweep, sorted by composite score (descending) and then by the
// sweep parameters, independent of evaluation order.
std::vector<DesignPoint> sweep_design(const DesignRanges& ranges, int threads = 1);

}  // namespace nli
