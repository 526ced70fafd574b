#pragma once

// Exact click probabilities for threshold detectors without dead time.
// Pairs are a sum of independent thermal modes, each pair is categorised
// independently and every photon is detected independently, so the
// probability that a set of detectors stays silent is a generating-function
// evaluation. Joint click probabilities follow by inclusion-exclusion.

#include <cmath>
#include <initializer_list>
#include <vector>

#include "nli/counting.hpp"

namespace oracle {

struct Channels {
  nli::SourceModel source;
  // Per-detector probability that one signal photon (resp. idler photon) clicks it.
  std::vector<double> signal_hit;
  std::vector<double> idler_hit;
  std::vector<double> dark;

  double raman_factor(double mean, double miss) const {
    const double x = mean * (1 - miss);
    return source.raman_statistics == nli::RamanStatistics::poisson ? std::exp(-x)
                                                                    : 1 / (1 + x);
  }

  double silent(const std::vector<int>& set) const {
    double qs = 1, qi = 1, d = 1;
    for (int j : set) {
      qs -= signal_hit[std::size_t(j)];
      qi -= idler_hit[std::size_t(j)];
      d *= 1 - dark[std::size_t(j)];
    }
    const nli::PairCategories c = source.categories();
    const double z = c.both * qs * qi + c.idler_only * qi + c.signal_only * qs;
    double g = 1;
    for (double w : source.schmidt_weights)
      g /= 1 + source.mean_pairs_per_pulse * w * (1 - z);
    return d * g * raman_factor(source.raman_signal_mean, qs) *
           raman_factor(source.raman_idler_mean, qi);
  }

  double click(std::initializer_list<int> detectors) const {
    const std::vector<int> all(detectors);
    double p = 0;
    const unsigned n = unsigned(all.size());
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      std::vector<int> subset;
      for (unsigned k = 0; k < n; ++k)
        if (mask & (1u << k)) subset.push_back(all[k]);
      p += (subset.size() % 2 ? -1.0 : 1.0) * silent(subset);
    }
    return p;
  }
};

// Detector 0 sees the signal, detector 1 the idler.
inline Channels coincidence_channels(const nli::SourceModel& s, const nli::DetectorSpec& ds,
                                     const nli::DetectorSpec& di) {
  return {s,
          {s.signal_transmission * ds.efficiency, 0.0},
          {0.0, s.idler_transmission * di.efficiency},
          {ds.dark_count_probability, di.dark_count_probability}};
}

// Detector 0 heralds on the idler, 1 and 2 are the split signal arms.
inline Channels hbt_channels(const nli::SourceModel& s, const nli::DetectorSpec& dh,
                             const nli::DetectorSpec& da, const nli::DetectorSpec& db) {
  const double half = 0.5 * s.signal_transmission;
  return {s,
          {0.0, half * da.efficiency, half * db.efficiency},
          {s.idler_transmission * dh.efficiency, 0.0, 0.0},
          {dh.dark_count_probability, da.dark_count_probability, db.dark_count_probability}};
}

inline double heralded_g2(const nli::SourceModel& s, const nli::DetectorSpec& dh,
                          const nli::DetectorSpec& da, const nli::DetectorSpec& db) {
  const Channels ch = hbt_channels(s, dh, da, db);
  return ch.click({0, 1, 2}) * ch.click({0}) / (ch.click({0, 1}) * ch.click({0, 2}));
}

}  // namespace oracle
