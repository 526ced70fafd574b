#include <cmath>
#include <numeric>

#include "nli/counting.hpp"
#include "sampling.hpp"

namespace nli {

namespace {

constexpr double kRamanTail = 1e-12;

double binomial_pmf(int k, int n, double p) {
  if (k < 0 || k > n) return 0.0;
  const double log_c = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
  const double pk = (k == 0) ? 1.0 : std::pow(p, k);
  const double qk = (n - k == 0) ? 1.0 : std::pow(1.0 - p, n - k);
  return std::exp(log_c) * pk * qk;
}

std::vector<double> truncate_tail(std::vector<double> pmf, double tail) {
  double acc = 0;
  for (std::size_t n = 0; n < pmf.size(); ++n) {
    acc += pmf[n];
    if (1.0 - acc < tail) {
      pmf.resize(n + 1);
      break;
    }
  }
  return pmf;
}

double click_probability(int photons, const DetectorSpec& det, double photon_probability) {
  return 1.0 - (1.0 - det.dark_count_probability) * std::pow(1.0 - photon_probability, photons);
}

// Pair-number law cut at max_pairs and renormalized.
std::vector<double> truncated_pairs(const SourceModel& s, int max_pairs) {
  auto dist = total_pair_distribution(s);
  dist.resize(std::min<std::size_t>(dist.size(), std::size_t(max_pairs) + 1), 0.0);
  const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
  for (double& p : dist) p /= total;
  return dist;
}

// w[a][b]: probability that the herald fires and that a FWM and b Raman
// signal photons reach the beam splitter.
using SourceTable = std::vector<std::vector<double>>;

SourceTable herald_weighted_table(const SourceModel& s, const DetectorSpec& herald, int max_pairs) {
  const auto pairs = truncated_pairs(s, max_pairs);
  const PairCategories c = s.categories();
  const auto raman_i =
      truncate_tail(detail::raman_distribution(s.raman_idler_mean, s.raman_statistics), kRamanTail);
  const auto raman_s =
      truncate_tail(detail::raman_distribution(s.raman_signal_mean, s.raman_statistics), kRamanTail);
  const double ph = s.idler_transmission * herald.efficiency;
  const double ts = s.signal_transmission;

  std::vector<double> raman_arriving(raman_s.size(), 0.0);
  for (std::size_t r = 0; r < raman_s.size(); ++r)
    for (std::size_t b = 0; b <= r; ++b)
      raman_arriving[b] += raman_s[r] * binomial_pmf(int(b), int(r), ts);

  auto herald_click = [&](int idler_fwm) {
    double p = 0;
    for (std::size_t r = 0; r < raman_i.size(); ++r)
      p += raman_i[r] * click_probability(idler_fwm + int(r), herald, ph);
    return p;
  };

  SourceTable w(pairs.size(), std::vector<double>(raman_arriving.size(), 0.0));
  for (int n = 0; n < int(pairs.size()); ++n) {
    for (int x = 0; x <= n; ++x) {
      for (int y = 0; x + y <= n; ++y) {
        const int z = n - x - y;
        const double mult = std::exp(std::lgamma(n + 1.0) - std::lgamma(x + 1.0) -
                                     std::lgamma(y + 1.0) - std::lgamma(z + 1.0)) *
                            std::pow(c.both, x) * std::pow(c.idler_only, y) *
                            std::pow(c.signal_only, z);
        if (mult == 0) continue;
        const double base = pairs[std::size_t(n)] * mult * herald_click(x + y);
        for (int a = 0; a <= x + z; ++a) {
          const double pa = base * binomial_pmf(a, x + z, ts);
          for (std::size_t b = 0; b < raman_arriving.size(); ++b) w[std::size_t(a)][b] += pa * raman_arriving[b];
        }
      }
    }
  }
  return w;
}

}  // namespace

void HomSetup::validate() const {
  source1.validate();
  source2.validate();
  herald1.validate();
  herald2.validate();
  out_a.validate();
  out_b.validate();
  if (max_pairs < 1 || max_pairs > 4) throw ConfigError("HOM: max_pairs must lie in [1, 4]");
}

std::vector<double> beam_splitter_fock_distribution(int a, int b) {
  if (a < 0 || b < 0) throw ConfigError("beam_splitter_fock_distribution: negative photon number");
  const int n = a + b;
  std::vector<double> out(std::size_t(n) + 1, 0.0);
  // (x + y)^a (x − y)^b, x and y the output creation operators.
  for (int k = 0; k <= n; ++k) {
    double coeff = 0;
    for (int j = std::max(0, k - b); j <= std::min(a, k); ++j) {
      const int m = k - j;
      const double sign = ((b - m) % 2) ? -1.0 : 1.0;
      coeff += sign * std::exp(std::lgamma(a + 1.0) - std::lgamma(j + 1.0) - std::lgamma(a - j + 1.0) +
                               std::lgamma(b + 1.0) - std::lgamma(m + 1.0) - std::lgamma(b - m + 1.0));
    }
    const double norm = std::exp(std::lgamma(k + 1.0) + std::lgamma(n - k + 1.0) - std::lgamma(a + 1.0) -
                                 std::lgamma(b + 1.0) - n * std::log(2.0));
    out[std::size_t(k)] = coeff * coeff * norm;
  }
  return out;
}

double hom_fourfold_probability(const HomSetup& setup, double overlap) {
  setup.validate();
  if (!(overlap >= 0 && overlap <= 1)) throw ConfigError("HOM: overlap must lie in [0, 1]");
  const auto w1 = herald_weighted_table(setup.source1, setup.herald1, setup.max_pairs);
  const auto w2 = herald_weighted_table(setup.source2, setup.herald2, setup.max_pairs);
  const double ea = setup.out_a.efficiency;
  const double eb = setup.out_b.efficiency;

  auto both_click = [&](int ka, int kb) {
    return click_probability(ka, setup.out_a, ea) * click_probability(kb, setup.out_b, eb);
  };

  double total = 0;
  for (std::size_t a1 = 0; a1 < w1.size(); ++a1) {
    for (std::size_t a2 = 0; a2 < w2.size(); ++a2) {
      const auto fock = beam_splitter_fock_distribution(int(a1), int(a2));
      const int nf = int(a1 + a2);
      for (std::size_t b1 = 0; b1 < w1[a1].size(); ++b1) {
        for (std::size_t b2 = 0; b2 < w2[a2].size(); ++b2) {
          const double weight = w1[a1][b1] * w2[a2][b2];
          if (weight == 0) continue;
          const int nr = int(b1 + b2);
          double routed = 0;
          for (int kf = 0; kf <= nf; ++kf) {
            const double pf = overlap * fock[std::size_t(kf)] +
                              (1.0 - overlap) * binomial_pmf(kf, nf, 0.5);
            if (pf == 0) continue;
            for (int kr = 0; kr <= nr; ++kr)
              routed += pf * binomial_pmf(kr, nr, 0.5) * both_click(kf + kr, nf + nr - kf - kr);
          }
          total += weight * routed;
        }
      }
    }
  }
  return total;
}

std::vector<double> gaussian_overlap_profile(const std::vector<double>& delays, double peak,
                                             double width) {
  if (!(peak >= 0 && peak <= 1)) throw ConfigError("overlap peak must lie in [0, 1]");
  if (!(width > 0)) throw ConfigError("overlap width must be positive");
  std::vector<double> out;
  out.reserve(delays.size());
  for (double t : delays) out.push_back(peak * std::exp(-t * t / (2 * width * width)));
  return out;
}

std::vector<HomPoint> simulate_hom(const HomSetup& setup, const std::vector<double>& delays,
                                   const std::vector<double>& overlaps, std::uint64_t n_pulses,
                                   std::uint64_t seed) {
  if (delays.size() != overlaps.size())
    throw ConfigError("HOM: delays and overlaps differ in length");
  if (n_pulses < 1) throw ConfigError("n_pulses must be at least 1");
  std::vector<HomPoint> out;
  out.reserve(delays.size());
  for (std::size_t k = 0; k < delays.size(); ++k) {
    HomPoint p;
    p.delay = delays[k];
    p.n_pulses = n_pulses;
    p.expected_probability = hom_fourfold_probability(setup, overlaps[k]);
    std::mt19937_64 rng(derive_seed(seed, 0x40e0000ULL + k));
    std::binomial_distribution<std::uint64_t> draw(n_pulses, p.expected_probability);
    p.fourfold = draw(rng);
    out.push_back(p);
  }
  return out;
}

std::vector<HomPoint> simulate_hom_direct(const HomSetup& setup, const std::vector<double>& delays,
                                          const std::vector<double>& overlaps,
                                          const RunOptions& run) {
  setup.validate();
  if (delays.size() != overlaps.size())
    throw ConfigError("HOM: delays and overlaps differ in length");
  if (run.n_pulses < 1) throw ConfigError("n_pulses must be at least 1");

  struct Arm {
    detail::DiscreteTable pairs, raman_s, raman_i;
    PairCategories cat;
    double ts, ph;
  };
  auto make_arm = [&](const SourceModel& s, const DetectorSpec& h) {
    Arm a;
    a.pairs = detail::DiscreteTable(truncated_pairs(s, setup.max_pairs));
    a.raman_s = detail::DiscreteTable(detail::raman_distribution(s.raman_signal_mean, s.raman_statistics));
    a.raman_i = detail::DiscreteTable(detail::raman_distribution(s.raman_idler_mean, s.raman_statistics));
    a.cat = s.categories();
    a.ts = s.signal_transmission;
    a.ph = s.idler_transmission * h.efficiency;
    return a;
  };
  const Arm arm1 = make_arm(setup.source1, setup.herald1);
  const Arm arm2 = make_arm(setup.source2, setup.herald2);

  std::vector<HomPoint> out;
  for (std::size_t k = 0; k < delays.size(); ++k) {
    const double xi = overlaps[k];
    if (!(xi >= 0 && xi <= 1)) throw ConfigError("HOM: overlap must lie in [0, 1]");
    const std::uint64_t stream = derive_seed(run.seed, 0xd1ec7ULL + k);
    CountsRecord rec = detail::run_batches(
        run.n_pulses, run.threads, [&](std::uint64_t batch, std::uint64_t, std::uint64_t count) {
          std::mt19937_64 rng(derive_seed(stream, batch));
          detail::GatedDetector h1(setup.herald1, arm1.ph, rng);
          detail::GatedDetector h2(setup.herald2, arm2.ph, rng);
          detail::GatedDetector da(setup.out_a, setup.out_a.efficiency, rng);
          detail::GatedDetector db(setup.out_b, setup.out_b.efficiency, rng);
          std::uint64_t hits = 0;
          auto emit = [&](const Arm& arm, int& idler, int& fwm, int& raman) {
            const int n = arm.pairs.sample(detail::uniform01(rng));
            const auto split = detail::split_pairs(n, arm.cat, rng);
            idler = split.both + split.idler_only + arm.raman_i.sample(detail::uniform01(rng));
            fwm = detail::thin(split.both + split.signal_only, arm.ts, rng);
            raman = detail::thin(arm.raman_s.sample(detail::uniform01(rng)), arm.ts, rng);
          };
          for (std::uint64_t t = 0; t < count; ++t) {
            int i1, f1, r1, i2, f2, r2;
            emit(arm1, i1, f1, r1);
            emit(arm2, i2, f2, r2);
            int ka = 0;
            if (detail::uniform01(rng) < xi) {
              const detail::DiscreteTable fock(beam_splitter_fock_distribution(f1, f2));
              ka = fock.sample(detail::uniform01(rng));
            } else {
              ka = detail::thin(f1 + f2, 0.5, rng);
            }
            const int kr = detail::thin(r1 + r2, 0.5, rng);
            const int kb = f1 + f2 + r1 + r2 - ka - kr;
            const bool c1 = h1.gate(t, i1, rng);
            const bool c2 = h2.gate(t, i2, rng);
            const bool ca = da.gate(t, ka + kr, rng);
            const bool cb = db.gate(t, kb, rng);
            hits += c1 && c2 && ca && cb;
          }
          CountsRecord r;
          r.n_pulses = count;
          r.fourfold.push_back(HomPoint{0.0, hits, count, 0.0});
          return r;
        });
    HomPoint p = rec.fourfold.front();
    p.delay = delays[k];
    p.expected_probability = hom_fourfold_probability(setup, xi);
    out.push_back(p);
  }
  return out;
}

}  // namespace nli
