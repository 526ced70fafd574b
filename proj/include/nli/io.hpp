#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "nli/analysis.hpp"
#include "nli/config.hpp"
#include "nli/counting.hpp"
#include "nli/design.hpp"
#include "nli/modal.hpp"
#include "nli/spectral.hpp"

namespace nli {

using Json = nlohmann::ordered_json;

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

// |F|² table: header row holds idler wavelengths (nm), first column the
// signal wavelengths (nm). Rows follow the grid's signal axis.
std::string jsi_csv(const Jsf& jsf);

struct JsiTable {
  Eigen::VectorXd signal_nm;
  Eigen::VectorXd idler_nm;
  Eigen::MatrixXd intensity;
};
JsiTable parse_jsi_csv(const std::string& text);

Json config_json(const JobConfig& config);
Json jsf_metadata(const Jsf& jsf, const JobConfig& config);
Json schmidt_json(const SchmidtResult& result, std::size_t max_weights = 64);
Json heralding_json(const HeraldingReport& report);

Json counts_to_json(const CountsRecord& record);
CountsRecord counts_from_json(const Json& j);

std::string hom_csv(const std::vector<HomPoint>& points);
std::vector<HomPoint> parse_hom_csv(const std::string& text);

// Component label per grid cell, same layout as the JSI CSV.
std::string island_mask_csv(const IslandSegmentation& segmentation, const FrequencyGrid& grid);
Json island_json(const IslandReport& island);

std::string design_csv(const std::vector<DesignPoint>& points);
Json design_json(const std::vector<DesignPoint>& points);

Json fit_json(const QuadraticFit& fit);
Json visibility_json(const VisibilityReport& report);

// One directory per job. Files are written as they are added; finish()
// writes manifest.json, which is the only file carrying a timestamp.
class OutputDir {
 public:
  OutputDir(std::filesystem::path root, std::string command);

  const std::filesystem::path& path() const { return root_; }
  void write(const std::string& name, const std::string& content);
  void write_json(const std::string& name, const Json& j);
  void finish(const JobConfig& config);

 private:
  std::filesystem::path root_;
  std::string command_;
  std::vector<std::string> files_;
};

}  // namespace nli
