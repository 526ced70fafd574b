#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nli/config.hpp"
#include "nli/io.hpp"

namespace nli {

struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;  // one line, human readable
  Json data = Json::object();
  double seconds = 0;
};

// Singles power sweep with known scaling, fitted back. Criteria 6 and 7 take
// their Raman fractions from it.
struct PowerFitContext {
  QuadraticFit signal_fit;
  QuadraticFit idler_fit;
  double raman_fraction_signal = 0;
  double raman_fraction_idler = 0;
};

CheckResult check_interference_identities(std::uint64_t seed);
CheckResult check_island_reproduction(const JobConfig& config);
CheckResult check_round_island_scores(const JobConfig& config);
CheckResult check_schmidt_oracle();
CheckResult check_heralded_g2(const JobConfig& config);
CheckResult check_unheralded_g2(const JobConfig& config, double fitted_raman_fraction);
CheckResult check_hom_closure(const JobConfig& config, const std::array<double, 2>& raman_fractions);
CheckResult check_analysis_closure(const JobConfig& config, PowerFitContext* context = nullptr);
CheckResult check_nli_contrast(const JobConfig& config);

// Every check, ordered by id. The physical defaults come from `config`; the
// seed and thread count are taken from its run section.
std::vector<CheckResult> run_acceptance(const JobConfig& config);

std::string format_check(const CheckResult& r);
Json checks_json(const std::vector<CheckResult>& results);

}  // namespace nli
