#pragma once

// Internal helpers shared by the counting simulators.

#include <algorithm>
#include <array>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "nli/counting.hpp"

namespace nli::detail {

inline double uniform01(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

// Probability mass function of a thermal (geometric) law with the given mean.
inline double thermal_pmf(double mean, int n) {
  return std::pow(mean, n) / std::pow(1.0 + mean, n + 1);
}

inline double poisson_pmf(double mean, int n) {
  return std::exp(-mean + n * std::log(mean > 0 ? mean : 1.0) - std::lgamma(n + 1.0)) *
         (mean > 0 || n == 0 ? 1.0 : 0.0);
}

// Inverse-CDF sampler over {0, 1, ..., n}.
class DiscreteTable {
 public:
  DiscreteTable() = default;
  explicit DiscreteTable(const std::vector<double>& pmf) {
    cdf_.reserve(pmf.size());
    double acc = 0;
    for (double p : pmf) cdf_.push_back(acc += p);
    if (!cdf_.empty()) total_ = cdf_.back();
  }
  int sample(double u) const {
    const double x = u * total_;
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), x);
    return int(std::min<std::ptrdiff_t>(it - cdf_.begin(), std::ptrdiff_t(cdf_.size()) - 1));
  }

 private:
  std::vector<double> cdf_;
  double total_ = 1.0;
};

std::vector<double> raman_distribution(double mean, RamanStatistics stats);

struct PulseContent {
  int pairs = 0;
  int raman_signal = 0;
  int raman_idler = 0;
};

// Draws (total pairs, Raman signal, Raman idler) for one pulse. Empty pulses
// cost one uniform; non-empty ones are drawn from the law conditioned on at
// least one photon, one component at a time.
class PulseSampler {
 public:
  explicit PulseSampler(const SourceModel& source);

  bool sample(std::mt19937_64& rng, PulseContent& out) const {
    if (uniform01(rng) < p_empty_) return false;
    out.pairs = pairs_given_any_.sample(uniform01(rng));
    if (out.pairs > 0) {
      out.raman_signal = raman_signal_.sample(uniform01(rng));
      out.raman_idler = raman_idler_.sample(uniform01(rng));
      return true;
    }
    out.raman_signal = raman_signal_given_any_.sample(uniform01(rng));
    out.raman_idler = out.raman_signal > 0 ? raman_idler_.sample(uniform01(rng))
                                           : raman_idler_positive_.sample(uniform01(rng));
    return true;
  }

 private:
  DiscreteTable raman_signal_;
  DiscreteTable raman_idler_;
  DiscreteTable pairs_given_any_;          // pairs, given the pulse is not empty
  DiscreteTable raman_signal_given_any_;   // given no pairs and some Raman photon
  DiscreteTable raman_idler_positive_;     // given at least one idler Raman photon
  double p_empty_ = 1.0;
};

// Splits n pairs into (both, idler-only, signal-only).
struct CategoryCounts {
  int both = 0;
  int idler_only = 0;
  int signal_only = 0;
};

inline CategoryCounts split_pairs(int n, const PairCategories& c, std::mt19937_64& rng) {
  CategoryCounts out;
  for (int k = 0; k < n; ++k) {
    const double u = uniform01(rng);
    if (u < c.both)
      ++out.both;
    else if (u < c.both + c.idler_only)
      ++out.idler_only;
    else
      ++out.signal_only;
  }
  return out;
}

inline int thin(int n, double keep, std::mt19937_64& rng) {
  int out = 0;
  for (int k = 0; k < n; ++k) out += uniform01(rng) < keep;
  return out;
}

// Gated threshold detector with dead time and Bernoulli dark counts.
class GatedDetector {
 public:
  GatedDetector(const DetectorSpec& spec, double photon_probability, std::mt19937_64& rng)
      : miss_(1.0 - photon_probability),
        dark_(spec.dark_count_probability),
        dead_gates_(std::uint64_t(spec.dead_gates())) {
    double miss = 1.0;
    for (double& p : detect_) {
      p = 1.0 - miss;
      miss *= miss_;
    }
    next_dark_ = draw_dark_gap(rng);
  }

  // Returns whether the detector clicks on gate t (t strictly increasing).
  bool gate(std::uint64_t t, int photons, std::mt19937_64& rng) {
    bool dark_now = false;
    if (t == next_dark_) {
      dark_now = true;
      next_dark_ = t + 1 + draw_dark_gap(rng);
    }
    if (t < next_live_) return false;
    bool click = dark_now;
    if (!click && photons > 0) {
      const double p = photons < kCached ? detect_[std::size_t(photons)]
                                         : 1.0 - std::pow(miss_, photons);
      click = uniform01(rng) < p;
    }
    if (click) next_live_ = t + 1 + dead_gates_;
    return click;
  }

 private:
  std::uint64_t draw_dark_gap(std::mt19937_64& rng) const {
    if (dark_ <= 0) return std::numeric_limits<std::uint64_t>::max() / 2;
    if (dark_ >= 1) return 0;
    const double u = 1.0 - uniform01(rng);
    return std::uint64_t(std::floor(std::log(u) / std::log1p(-dark_)));
  }

  static constexpr int kCached = 16;
  double miss_;
  std::array<double, kCached> detect_{};  // 1 − miss^k
  double dark_;
  std::uint64_t dead_gates_;
  std::uint64_t next_live_ = 0;
  std::uint64_t next_dark_ = 0;
};

// Splits [0, n_pulses) into fixed-size batches, runs `fn(batch, first, count)`
// on up to `threads` workers and sums the records in batch order.
template <typename Fn>
CountsRecord run_batches(std::uint64_t n_pulses, int threads, Fn&& fn) {
  const std::uint64_t n_batches = (n_pulses + kBatchPulses - 1) / kBatchPulses;
  std::vector<CountsRecord> parts(n_batches);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::uint64_t b = next++; b < n_batches; b = next++) {
      try {
        const std::uint64_t first = b * kBatchPulses;
        parts[b] = fn(b, first, std::min(kBatchPulses, n_pulses - first));
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int workers = int(std::clamp<std::uint64_t>(std::uint64_t(std::max(threads, 1)), 1,
                                                    std::max<std::uint64_t>(n_batches, 1)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < workers; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  CountsRecord total;
  for (const auto& p : parts) total += p;
  return total;
}

}  // namespace nli::detail
