#include "nli/counting.hpp"

#include <cmath>
#include <numeric>

#include "sampling.hpp"

namespace nli {

namespace {

constexpr double kTailCutoff = 1e-16;
constexpr int kMaxPhotonNumber = 400;

std::vector<double> truncated_pmf(double mean, bool thermal) {
  std::vector<double> pmf;
  if (!(mean > 0)) return {1.0};
  double acc = 0;
  for (int n = 0; n <= kMaxPhotonNumber; ++n) {
    const double p = thermal ? detail::thermal_pmf(mean, n) : detail::poisson_pmf(mean, n);
    pmf.push_back(p);
    acc += p;
    if (n > mean && 1.0 - acc < kTailCutoff) break;
  }
  return pmf;
}

void check_probability(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(what) + " must lie in [0, 1]");
}

}  // namespace

std::string to_string(RamanStatistics s) {
  return s == RamanStatistics::thermal ? "thermal" : "poisson";
}

RamanStatistics raman_statistics_from_string(const std::string& s) {
  if (s == "poisson") return RamanStatistics::poisson;
  if (s == "thermal") return RamanStatistics::thermal;
  throw ConfigError("unknown Raman statistics '" + s + "' (expected poisson|thermal)");
}

void SourceModel::validate() const {
  if (!(mean_pairs_per_pulse >= 0) || mean_pairs_per_pulse > kMaxMeanPairs)
    throw ConfigError("source: mean pairs per pulse must lie in [0, 0.5]");
  if (schmidt_weights.empty()) throw ConfigError("source: empty Schmidt weight list");
  double total = 0;
  for (double w : schmidt_weights) {
    if (!(w >= 0)) throw ConfigError("source: Schmidt weights must be non-negative");
    total += w;
  }
  if (!(total > 0)) throw ConfigError("source: Schmidt weights sum to zero");
  if (!(raman_signal_mean >= 0) || !(raman_idler_mean >= 0) || !std::isfinite(raman_signal_mean) ||
      !std::isfinite(raman_idler_mean))
    throw ConfigError("source: Raman means must be finite and non-negative");
  check_probability(signal_transmission, "source: signal transmission");
  check_probability(idler_transmission, "source: idler transmission");
  if (!(h_s > 0 && h_s <= 1) || !(h_i > 0 && h_i <= 1))
    throw ConfigError("source: spectral heralding efficiencies must lie in (0, 1]");
}

PairCategories SourceModel::categories() const {
  PairCategories c;
  c.both = 1.0 / (1.0 / h_s + 1.0 / h_i - 1.0);
  c.idler_only = c.both * (1.0 / h_s - 1.0);
  c.signal_only = c.both * (1.0 / h_i - 1.0);
  return c;
}

double SourceModel::brightness() const { return mean_pairs_per_pulse * categories().both; }

double SourceModel::mean_pairs_for_brightness(double pairs_per_pulse) const {
  if (!(pairs_per_pulse >= 0)) throw ConfigError("brightness must be non-negative");
  return pairs_per_pulse / categories().both;
}

double SourceModel::fwm_signal_mean() const {
  const auto c = categories();
  return mean_pairs_per_pulse * (c.both + c.signal_only);
}

double SourceModel::fwm_idler_mean() const {
  const auto c = categories();
  return mean_pairs_per_pulse * (c.both + c.idler_only);
}

void DetectorSpec::validate() const {
  check_probability(efficiency, "detector: efficiency");
  if (!(dark_count_probability >= 0 && dark_count_probability < 1))
    throw ConfigError("detector: dark count probability must lie in [0, 1)");
  if (!(dead_time >= 0) || !std::isfinite(dead_time))
    throw ConfigError("detector: dead time must be non-negative");
  if (!(gate_rate > 0) || !std::isfinite(gate_rate))
    throw ConfigError("detector: gate rate must be positive");
}

std::int64_t DetectorSpec::dead_gates() const { return std::llround(dead_time * gate_rate); }

DetectorSpec DetectorSpec::gated_spd() {
  DetectorSpec d;
  d.efficiency = 0.15;
  d.dark_count_probability = 1e-6;
  d.dead_time = 10e-6;
  d.gate_rate = 36.8e6;
  return d;
}

CountsRecord& CountsRecord::operator+=(const CountsRecord& other) {
  if (n_pulses == 0) {
    average_power = other.average_power;
    signal_detector = other.signal_detector;
    idler_detector = other.idler_detector;
  }
  n_pulses += other.n_pulses;
  singles_signal += other.singles_signal;
  singles_idler += other.singles_idler;
  coincidences_same_pulse += other.coincidences_same_pulse;
  coincidences_adjacent_pulse += other.coincidences_adjacent_pulse;
  if (other.hbt) {
    if (!hbt) hbt = HbtCounts{};
    hbt->herald += other.hbt->herald;
    hbt->herald_a += other.hbt->herald_a;
    hbt->herald_b += other.hbt->herald_b;
    hbt->herald_ab += other.hbt->herald_ab;
    hbt->a += other.hbt->a;
    hbt->b += other.hbt->b;
    hbt->ab += other.hbt->ab;
  }
  if (fourfold.empty()) {
    fourfold = other.fourfold;
  } else if (!other.fourfold.empty()) {
    if (other.fourfold.size() != fourfold.size())
      throw ConfigError("cannot merge HOM scans with different delay sets");
    for (std::size_t k = 0; k < fourfold.size(); ++k) {
      fourfold[k].fourfold += other.fourfold[k].fourfold;
      fourfold[k].n_pulses += other.fourfold[k].n_pulses;
    }
  }
  return *this;
}

int PulseOccupancy::total_pairs() const {
  return std::accumulate(pairs_per_mode.begin(), pairs_per_mode.end(), 0);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(seed) ^ (stream * 0xd1342543de82ef95ULL + 1));
}

std::vector<double> total_pair_distribution(const SourceModel& source) {
  source.validate();
  const double total =
      std::accumulate(source.schmidt_weights.begin(), source.schmidt_weights.end(), 0.0);
  std::vector<double> dist{1.0};
  for (double w : source.schmidt_weights) {
    const double mean = source.mean_pairs_per_pulse * w / total;
    if (!(mean > 0)) continue;
    const auto mode = truncated_pmf(mean, true);
    std::vector<double> next(dist.size() + mode.size() - 1, 0.0);
    for (std::size_t a = 0; a < dist.size(); ++a)
      for (std::size_t b = 0; b < mode.size(); ++b) next[a + b] += dist[a] * mode[b];
    double acc = 0;
    std::size_t keep = next.size();
    for (std::size_t n = 0; n < next.size(); ++n) {
      acc += next[n];
      if (1.0 - acc < kTailCutoff) {
        keep = n + 1;
        break;
      }
    }
    next.resize(keep);
    dist = std::move(next);
  }
  return dist;
}

namespace detail {

std::vector<double> raman_distribution(double mean, RamanStatistics stats) {
  return truncated_pmf(mean, stats == RamanStatistics::thermal);
}

PulseSampler::PulseSampler(const SourceModel& source) {
  const auto pairs = total_pair_distribution(source);
  const auto rs = raman_distribution(source.raman_signal_mean, source.raman_statistics);
  const auto ri = raman_distribution(source.raman_idler_mean, source.raman_statistics);
  raman_signal_ = DiscreteTable(rs);
  raman_idler_ = DiscreteTable(ri);
  const double rs0 = rs.front(), ri0 = ri.front();
  p_empty_ = pairs.front() * rs0 * ri0;
  if (p_empty_ >= 1.0) return;

  auto given_any = pairs;
  given_any.front() *= 1.0 - rs0 * ri0;
  pairs_given_any_ = DiscreteTable(given_any);
  if (rs0 * ri0 < 1.0) {
    auto s = rs;
    s.front() *= 1.0 - ri0;
    raman_signal_given_any_ = DiscreteTable(s);
  }
  if (ri0 < 1.0) {
    auto i = ri;
    i.front() = 0.0;
    raman_idler_positive_ = DiscreteTable(i);
  }
}

}  // namespace detail

PulseOccupancy draw_pulse(const SourceModel& source, std::mt19937_64& rng) {
  source.validate();
  const double total =
      std::accumulate(source.schmidt_weights.begin(), source.schmidt_weights.end(), 0.0);
  PulseOccupancy out;
  out.pairs_per_mode.reserve(source.schmidt_weights.size());
  for (double w : source.schmidt_weights) {
    const double mean = source.mean_pairs_per_pulse * w / total;
    int n = 0;
    if (mean > 0) {
      // Geometric law P(n) = (1-r) r^n with r = mean/(1+mean).
      const double u = 1.0 - detail::uniform01(rng);
      n = int(std::floor(std::log(u) / std::log(mean / (1.0 + mean))));
    }
    out.pairs_per_mode.push_back(n);
  }
  const detail::DiscreteTable rs(
      detail::raman_distribution(source.raman_signal_mean, source.raman_statistics));
  const detail::DiscreteTable ri(
      detail::raman_distribution(source.raman_idler_mean, source.raman_statistics));
  out.raman_signal = rs.sample(detail::uniform01(rng));
  out.raman_idler = ri.sample(detail::uniform01(rng));
  return out;
}

CountsRecord simulate_coincidence_run(const SourceModel& source, const DetectorSpec& det_s,
                                      const DetectorSpec& det_i, const RunOptions& run) {
  source.validate();
  det_s.validate();
  det_i.validate();
  if (run.n_pulses < 1) throw ConfigError("n_pulses must be at least 1");

  const detail::PulseSampler sampler(source);
  const PairCategories cat = source.categories();
  const double ps = source.signal_transmission * det_s.efficiency;
  const double pi = source.idler_transmission * det_i.efficiency;

  CountsRecord total = detail::run_batches(
      run.n_pulses, run.threads, [&](std::uint64_t batch, std::uint64_t, std::uint64_t count) {
        std::mt19937_64 rng(derive_seed(run.seed, batch));
        detail::GatedDetector ds(det_s, ps, rng);
        detail::GatedDetector di(det_i, pi, rng);
        CountsRecord r;
        r.n_pulses = count;
        detail::PulseContent c;
        bool previous_signal = false;
        for (std::uint64_t t = 0; t < count; ++t) {
          int ns = 0, ni = 0;
          if (sampler.sample(rng, c)) {
            const auto split = detail::split_pairs(c.pairs, cat, rng);
            ns = split.both + split.signal_only + c.raman_signal;
            ni = split.both + split.idler_only + c.raman_idler;
          }
          const bool cs = ds.gate(t, ns, rng);
          const bool ci = di.gate(t, ni, rng);
          r.singles_signal += cs;
          r.singles_idler += ci;
          r.coincidences_same_pulse += cs && ci;
          r.coincidences_adjacent_pulse += previous_signal && ci;
          previous_signal = cs;
        }
        return r;
      });
  total.signal_detector = det_s;
  total.idler_detector = det_i;
  return total;
}

SourceModel scaled_source(const SourceModel& source_template, const PowerScaling& scaling,
                          double average_power) {
  if (!(average_power >= 0)) throw ConfigError("average power must be non-negative");
  if (!(scaling.c2 >= 0) || !(scaling.c1_signal >= 0) || !(scaling.c1_idler >= 0))
    throw ConfigError("power scaling coefficients must be non-negative");
  SourceModel s = source_template;
  s.mean_pairs_per_pulse = scaling.c2 * average_power * average_power;
  s.raman_signal_mean = scaling.c1_signal * average_power;
  s.raman_idler_mean = scaling.c1_idler * average_power;
  return s;
}

std::vector<PowerPoint> simulate_power_sweep(const SourceModel& source_template,
                                             const PowerScaling& scaling,
                                             const std::vector<double>& powers,
                                             const DetectorSpec& det_s, const DetectorSpec& det_i,
                                             const RunOptions& run) {
  if (powers.empty()) throw ConfigError("power sweep needs at least one power");
  std::vector<PowerPoint> out;
  out.reserve(powers.size());
  for (std::size_t k = 0; k < powers.size(); ++k) {
    RunOptions point_run = run;
    point_run.seed = derive_seed(run.seed, 0x5157ULL + k);
    PowerPoint p;
    p.average_power = powers[k];
    p.counts = simulate_coincidence_run(scaled_source(source_template, scaling, powers[k]), det_s,
                                        det_i, point_run);
    p.counts.average_power = powers[k];
    out.push_back(std::move(p));
  }
  return out;
}

CountsRecord simulate_hbt(const SourceModel& source, const DetectorSpec& det_herald,
                          const DetectorSpec& det_a, const DetectorSpec& det_b,
                          const RunOptions& run) {
  source.validate();
  det_herald.validate();
  det_a.validate();
  det_b.validate();
  if (run.n_pulses < 1) throw ConfigError("n_pulses must be at least 1");

  const detail::PulseSampler sampler(source);
  const PairCategories cat = source.categories();
  const double ph = source.idler_transmission * det_herald.efficiency;
  const double half = 0.5 * source.signal_transmission;

  CountsRecord total = detail::run_batches(
      run.n_pulses, run.threads, [&](std::uint64_t batch, std::uint64_t, std::uint64_t count) {
        std::mt19937_64 rng(derive_seed(derive_seed(run.seed, 0x4b7ULL), batch));
        detail::GatedDetector dh(det_herald, ph, rng);
        detail::GatedDetector da(det_a, det_a.efficiency, rng);
        detail::GatedDetector db(det_b, det_b.efficiency, rng);
        CountsRecord r;
        r.n_pulses = count;
        HbtCounts h;
        detail::PulseContent c;
        for (std::uint64_t t = 0; t < count; ++t) {
          int ns = 0, ni = 0;
          if (sampler.sample(rng, c)) {
            const auto split = detail::split_pairs(c.pairs, cat, rng);
            ns = split.both + split.signal_only + c.raman_signal;
            ni = split.both + split.idler_only + c.raman_idler;
          }
          int ka = 0, kb = 0;
          for (int k = 0; k < ns; ++k) {
            const double u = detail::uniform01(rng);
            if (u < half)
              ++ka;
            else if (u < 2 * half)
              ++kb;
          }
          const bool ch = dh.gate(t, ni, rng);
          const bool ca = da.gate(t, ka, rng);
          const bool cb = db.gate(t, kb, rng);
          h.herald += ch;
          h.a += ca;
          h.b += cb;
          h.ab += ca && cb;
          h.herald_a += ch && ca;
          h.herald_b += ch && cb;
          h.herald_ab += ch && ca && cb;
          r.singles_idler += ch;
          r.singles_signal += ca || cb;
          r.coincidences_same_pulse += ch && (ca || cb);
        }
        r.hbt = h;
        return r;
      });
  total.signal_detector = det_a;
  total.idler_detector = det_herald;
  if (!total.hbt) total.hbt = HbtCounts{};
  return total;
}

}  // namespace nli
