#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <random>
#include <vector>

#include "nli/error.hpp"

namespace nli {

enum class RamanStatistics { poisson, thermal };

std::string to_string(RamanStatistics s);
RamanStatistics raman_statistics_from_string(const std::string& s);

// Probabilities that a generated pair has both photons, only the idler, or
// only the signal inside the collection bands. They follow from the
// spectral heralding efficiencies: h_s = p_both/(p_both+p_idler_only) etc.
struct PairCategories {
  double both = 1;
  double idler_only = 0;
  double signal_only = 0;
};

// Stochastic model of one heralded source.
struct SourceModel {
  // Mean number of pairs per pulse with at least one photon in band.
  double mean_pairs_per_pulse = 0;
  std::vector<double> schmidt_weights{1.0};
  double raman_signal_mean = 0;  // photons/pulse in the signal band
  double raman_idler_mean = 0;
  double signal_transmission = 1;  // lumped loss not counted in detector efficiency
  double idler_transmission = 1;
  double h_s = 1;  // spectral heralding efficiencies
  double h_i = 1;
  RamanStatistics raman_statistics = RamanStatistics::poisson;

  void validate() const;
  PairCategories categories() const;
  // Pairs per pulse with both photons in band, R_c.
  double brightness() const;
  // μ such that brightness() == pairs_per_pulse.
  double mean_pairs_for_brightness(double pairs_per_pulse) const;
  // Mean photons per pulse from pairs reaching each band (before loss).
  double fwm_signal_mean() const;
  double fwm_idler_mean() const;
  // Probability that a heralded partner photon reaches the detector input.
  double overall_heralding_signal() const { return h_s * signal_transmission; }
  double overall_heralding_idler() const { return h_i * idler_transmission; }
};

inline constexpr double kMaxMeanPairs = 0.5;

// Gated single-photon detector with threshold response.
struct DetectorSpec {
  double efficiency = 1;
  double dark_count_probability = 0;  // per gate
  double dead_time = 0;               // s
  double gate_rate = 36.8e6;          // Hz

  void validate() const;
  // Dead time quantized to whole gates.
  std::int64_t dead_gates() const;

  // ~15% efficiency, 10 µs dead time, gated at the 36.8 MHz pump rate.
  static DetectorSpec gated_spd();
};

struct HbtCounts {
  std::uint64_t herald = 0;     // N_i
  std::uint64_t herald_a = 0;   // N_12
  std::uint64_t herald_b = 0;   // N_13
  std::uint64_t herald_ab = 0;  // N_123
  std::uint64_t a = 0;          // unheralded split-arm singles
  std::uint64_t b = 0;
  std::uint64_t ab = 0;
};

struct HomPoint {
  double delay = 0;  // s
  std::uint64_t fourfold = 0;
  std::uint64_t n_pulses = 0;
  double expected_probability = 0;  // per pulse
};

struct CountsRecord {
  std::uint64_t n_pulses = 0;
  std::uint64_t singles_signal = 0;
  std::uint64_t singles_idler = 0;
  std::uint64_t coincidences_same_pulse = 0;      // C^c
  std::uint64_t coincidences_adjacent_pulse = 0;  // C^acc, signal at t with idler at t+1
  std::optional<HbtCounts> hbt;
  std::vector<HomPoint> fourfold;

  // Run context needed to reduce the counts.
  double average_power = 0;
  DetectorSpec signal_detector;
  DetectorSpec idler_detector;

  CountsRecord& operator+=(const CountsRecord& other);
};

struct RunOptions {
  std::uint64_t n_pulses = 1'000'000;
  std::uint64_t seed = 1;
  int threads = 1;
};

// Pulses per independent random stream. Results depend on (seed, n_pulses)
// only, never on the thread count.
inline constexpr std::uint64_t kBatchPulses = std::uint64_t(1) << 20;

struct PulseOccupancy {
  std::vector<int> pairs_per_mode;
  int raman_signal = 0;
  int raman_idler = 0;

  int total_pairs() const;
};

// Thermal pair number per Schmidt mode (mean μλ_k), Raman per band.
PulseOccupancy draw_pulse(const SourceModel& source, std::mt19937_64& rng);

// Distribution of the total pair number Σ_k n_k, truncated where the tail
// drops below 1e-16.
std::vector<double> total_pair_distribution(const SourceModel& source);

CountsRecord simulate_coincidence_run(const SourceModel& source, const DetectorSpec& det_s,
                                      const DetectorSpec& det_i, const RunOptions& run);

// μ = c₂P², Raman means = c₁P at each average power.
struct PowerScaling {
  double c2 = 0;         // pairs/pulse per W²
  double c1_signal = 0;  // Raman photons/pulse per W
  double c1_idler = 0;
};

struct PowerPoint {
  double average_power = 0;
  CountsRecord counts;
};

SourceModel scaled_source(const SourceModel& source_template, const PowerScaling& scaling,
                          double average_power);

std::vector<PowerPoint> simulate_power_sweep(const SourceModel& source_template,
                                             const PowerScaling& scaling,
                                             const std::vector<double>& powers,
                                             const DetectorSpec& det_s, const DetectorSpec& det_i,
                                             const RunOptions& run);

// Herald on the idler; signal split 50/50 onto det_a and det_b.
CountsRecord simulate_hbt(const SourceModel& source, const DetectorSpec& det_herald,
                          const DetectorSpec& det_a, const DetectorSpec& det_b,
                          const RunOptions& run);

// --- two-source HOM ---------------------------------------------------------

struct HomSetup {
  SourceModel source1;
  SourceModel source2;
  DetectorSpec herald1;  // idler of source 1
  DetectorSpec herald2;  // idler of source 2
  DetectorSpec out_a;    // beam-splitter outputs
  DetectorSpec out_b;
  int max_pairs = 2;  // per source per pulse

  void validate() const;
};

// Output distribution of |a, b⟩ on a 50/50 beam splitter: P(k photons in port A).
std::vector<double> beam_splitter_fock_distribution(int a, int b);

// Expected fourfold probability per pulse for mode overlap ξ, by exact
// enumeration of photon numbers and routings.
double hom_fourfold_probability(const HomSetup& setup, double overlap);

// Fourfold counts per delay. The per-pulse probability is computed by
// enumeration and the counts drawn as Binomial(n_pulses, p).
std::vector<HomPoint> simulate_hom(const HomSetup& setup, const std::vector<double>& delays,
                                   const std::vector<double>& overlaps, std::uint64_t n_pulses,
                                   std::uint64_t seed);

// Pulse-by-pulse Monte Carlo of the same model (slow; cross-check route).
std::vector<HomPoint> simulate_hom_direct(const HomSetup& setup, const std::vector<double>& delays,
                                          const std::vector<double>& overlaps,
                                          const RunOptions& run);

// ξ(τ) = peak · exp(−τ²/(2w²)).
std::vector<double> gaussian_overlap_profile(const std::vector<double>& delays, double peak,
                                             double width);

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace nli
