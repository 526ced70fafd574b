#include "nli/design.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace nli {

using Eigen::Index;
using Eigen::MatrixXd;

namespace {

struct Component {
  std::vector<std::pair<Index, Index>> cells;
  bool below = false;  // has a cell with ω_s < ω_i
  bool above = false;
};

IslandReport describe(const Component& comp, const MatrixXd& jsi, const FrequencyGrid& grid,
                      double total_mass) {
  const Eigen::VectorXd ls = grid.signal_wavelength() * 1e9;
  const Eigen::VectorXd li = grid.idler_wavelength() * 1e9;
  const auto& ws = grid.signal_omega();
  const auto& wi = grid.idler_omega();

  IslandReport r;
  r.cells = Index(comp.cells.size());
  double mass = 0, cs = 0, ci = 0, det = 0;
  for (const auto& [i, j] : comp.cells) {
    const double v = jsi(i, j);
    mass += v;
    cs += v * ls(i);
    ci += v * li(j);
    det += v * (ws(i) - wi(j));
    r.peak = std::max(r.peak, v);
  }
  r.centroid_signal_nm = cs / mass;
  r.centroid_idler_nm = ci / mass;
  r.detuning = det / mass;
  r.island_mass = total_mass > 0 ? mass / total_mass : 0.0;

  // Half-maximum cells of this island, in wavelength coordinates.
  std::vector<Eigen::Vector2d> pts;
  std::vector<double> wts;
  double smin = INFINITY, smax = -INFINITY, imin = INFINITY, imax = -INFINITY;
  for (const auto& [i, j] : comp.cells) {
    if (jsi(i, j) < 0.5 * r.peak) continue;
    pts.emplace_back(ls(i), li(j));
    wts.push_back(jsi(i, j));
    smin = std::min(smin, ls(i));
    smax = std::max(smax, ls(i));
    imin = std::min(imin, li(j));
    imax = std::max(imax, li(j));
  }
  // Local cell sizes in nm, used to give single-cell extents a finite width.
  const double ds = std::abs(ls(0) - ls(ls.size() - 1)) / double(std::max<Index>(ls.size() - 1, 1));
  const double di = std::abs(li(0) - li(li.size() - 1)) / double(std::max<Index>(li.size() - 1, 1));
  r.extent_signal_nm = smax - smin + ds;
  r.extent_idler_nm = imax - imin + di;

  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  double wsum = 0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    mean += wts[k] * pts[k];
    wsum += wts[k];
  }
  mean /= wsum;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const Eigen::Vector2d d = pts[k] - mean;
    cov += wts[k] * d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov / wsum);
  Eigen::Vector2d extent;
  for (int a = 0; a < 2; ++a) {
    const Eigen::Vector2d axis = eig.eigenvectors().col(a);
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& p : pts) {
      const double x = axis.dot(p);
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    extent(a) = hi - lo + std::abs(axis(0)) * ds + std::abs(axis(1)) * di;
  }
  r.roundness = extent.minCoeff() / extent.maxCoeff();
  return r;
}

}  // namespace

IslandSegmentation segment_islands(const MatrixXd& jsi, const FrequencyGrid& grid,
                                   double threshold_fraction) {
  if (!(threshold_fraction > 0 && threshold_fraction < 1))
    throw ConfigError("detect_islands: threshold fraction must lie in (0, 1)");
  if (jsi.rows() != grid.signal_size() || jsi.cols() != grid.idler_size())
    throw ConfigError("detect_islands: JSI shape does not match the grid");

  IslandSegmentation seg;
  seg.labels = Eigen::MatrixXi::Zero(jsi.rows(), jsi.cols());
  const double peak = jsi.size() ? jsi.maxCoeff() : 0.0;
  if (!(peak > 0)) return seg;
  const double cut = threshold_fraction * peak;
  const double total = jsi.sum();
  const auto& ws = grid.signal_omega();
  const auto& wi = grid.idler_omega();

  std::vector<Component> comps;
  Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(jsi.rows(), jsi.cols());
  for (Index j0 = 0; j0 < jsi.cols(); ++j0) {
    for (Index i0 = 0; i0 < jsi.rows(); ++i0) {
      if (seen(i0, j0) || jsi(i0, j0) < cut) continue;
      Component c;
      std::deque<std::pair<Index, Index>> queue{{i0, j0}};
      seen(i0, j0) = 1;
      while (!queue.empty()) {
        const auto [i, j] = queue.front();
        queue.pop_front();
        c.cells.emplace_back(i, j);
        const double d = ws(i) - wi(j);
        c.below |= d < 0;
        c.above |= d > 0;
        for (Index di = -1; di <= 1; ++di)
          for (Index dj = -1; dj <= 1; ++dj) {
            const Index a = i + di, b = j + dj;
            if (a < 0 || b < 0 || a >= jsi.rows() || b >= jsi.cols()) continue;
            if (seen(a, b) || jsi(a, b) < cut) continue;
            seen(a, b) = 1;
            queue.emplace_back(a, b);
          }
      }
      comps.push_back(std::move(c));
    }
  }

  std::vector<IslandReport> reports;
  reports.reserve(comps.size());
  for (std::size_t k = 0; k < comps.size(); ++k) {
    IslandReport r = describe(comps[k], jsi, grid, total);
    r.index = (comps[k].below && comps[k].above) ? 0 : -1;
    r.label = int(k);  // temporary: position in comps
    reports.push_back(r);
  }
  std::stable_sort(reports.begin(), reports.end(), [](const IslandReport& a, const IslandReport& b) {
    const bool da = a.index == 0, db = b.index == 0;
    if (da != db) return da;
    const double aa = std::abs(a.detuning), ab = std::abs(b.detuning);
    if (aa != ab) return aa < ab;
    return a.detuning < b.detuning;
  });
  int below = 0, above = 0;
  for (auto& r : reports)
    if (r.index != 0) r.index = r.detuning < 0 ? ++below : ++above;

  for (std::size_t k = 0; k < reports.size(); ++k) {
    const auto& comp = comps[std::size_t(reports[k].label)];
    reports[k].label = int(k) + 1;
    for (const auto& [i, j] : comp.cells) seg.labels(i, j) = int(k) + 1;
  }
  seg.islands = std::move(reports);
  return seg;
}

std::vector<IslandReport> detect_islands(const MatrixXd& jsi, const FrequencyGrid& grid,
                                         double threshold_fraction) {
  return segment_islands(jsi, grid, threshold_fraction).islands;
}

std::vector<IslandReport> detect_islands(const Jsf& jsf, double threshold_fraction) {
  return detect_islands(jsf.intensity(), jsf.grid, threshold_fraction);
}

const IslandReport& roundest_island(const std::vector<IslandReport>& islands) {
  const IslandReport* best = nullptr;
  for (const auto& r : islands) {
    if (r.degenerate()) continue;
    if (!best || r.roundness > best->roundness + 1e-12 ||
        (std::abs(r.roundness - best->roundness) <= 1e-12 &&
         r.centroid_signal_nm > best->centroid_signal_nm))
      best = &r;
  }
  if (!best) throw NumericalError("no off-diagonal island found");
  return *best;
}

IslandScore evaluate_filter(const Jsf& jsf, const FilterSpec& filter) {
  const HeraldingReport h = heralding_efficiencies(jsf, filter);
  const Jsf filtered = apply_filter(jsf, filter);

  // Hard-stop filters leave exact zeros outside the band; crop them away.
  const Eigen::VectorXd rows = filtered.amplitude.cwiseAbs2().rowwise().sum();
  const Eigen::VectorXd cols = filtered.amplitude.cwiseAbs2().colwise().sum().transpose();
  std::vector<Index> ri, ci;
  for (Index k = 0; k < rows.size(); ++k)
    if (rows(k) > 0) ri.push_back(k);
  for (Index k = 0; k < cols.size(); ++k)
    if (cols(k) > 0) ci.push_back(k);
  if (ri.empty() || ci.empty()) throw ConfigError("filter passes no spectral mass");
  const Eigen::MatrixXcd cropped = filtered.amplitude(ri, ci);

  IslandScore s;
  s.bandwidth_nm = filter.signal_bandwidth * 1e9;
  s.mode_number = schmidt_decompose(cropped).mode_number;
  s.h_s = h.h_s_spectral;
  s.h_i = h.h_i_spectral;
  s.captured_mass = h.pair_pass_probability;
  return s;
}

IslandReport score_island(const Jsf& jsf, IslandReport island,
                          const std::vector<double>& bandwidths_nm) {
  if (bandwidths_nm.empty()) throw ConfigError("score_island: no candidate bandwidths");
  island.candidates.clear();
  island.best.reset();
  for (double bw : bandwidths_nm) {
    if (!(bw > 0)) throw ConfigError("score_island: bandwidths must be positive");
    FilterSpec f = FilterSpec::centered(island.centroid_signal_nm * 1e-9,
                                        island.centroid_idler_nm * 1e-9, bw * 1e-9);
    f.out_of_band_extinction_db = std::numeric_limits<double>::infinity();
    const IslandScore s = evaluate_filter(jsf, f);
    island.candidates.push_back(s);
    if (!island.best || s.figure_of_merit() > island.best->figure_of_merit()) island.best = s;
  }
  return island;
}

double island_contrast(const NliConfig& config, int m) {
  config.validate();
  if (config.stages < 2) throw ConfigError("island_contrast: needs at least two stages");
  if (m < 1) throw ConfigError("island_contrast: island order must be >= 1");
  const double wp = config.pump.center_omega();
  auto th = [&](double v) { return theta(wp + 0.5 * v, wp - 0.5 * v, config); };
  auto jsi = [&](double v) { return std::norm(jsf_amplitude(wp + 0.5 * v, wp - 0.5 * v, config)); };

  auto locate = [&](double target) {
    double lo = 0, hi = 1e12;
    while (th(hi) < target) {
      hi *= 2;
      if (hi > wp) throw NumericalError("island_contrast: island order beyond the optical band");
    }
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      (th(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  const double v1 = locate(m * kPi);
  const double v2 = locate((m + 1) * kPi);
  const double f1 = jsi(v1), f2 = jsi(v2);
  const int steps = 20000;
  const double h = (v2 - v1) / steps;
  int k1 = 0, k2 = steps;
  while (k1 < steps && jsi(v1 + k1 * h) >= 0.5 * f1) ++k1;
  while (k2 > k1 && jsi(v1 + k2 * h) >= 0.5 * f2) --k2;
  if (k2 <= k1) return 1.0;  // islands merge above half maximum
  double sum = 0;
  for (int k = k1; k <= k2; ++k) sum += jsi(v1 + k * h);
  return sum / double(k2 - k1 + 1) / std::max(f1, f2);
}

void DesignRanges::validate() const {
  if (pump_fwhm_nm.empty() || smf_length_m.empty() || stages.empty() || bandwidths_nm.empty())
    throw ConfigError("sweep_design: empty range");
  for (double v : pump_fwhm_nm)
    if (!(v > 0)) throw ConfigError("sweep_design: pump bandwidths must be positive");
  for (double v : smf_length_m)
    if (!(v >= 0)) throw ConfigError("sweep_design: spacer lengths must be non-negative");
  for (int n : stages)
    if (n < 1) throw ConfigError("sweep_design: stage counts must be >= 1");
  for (double v : bandwidths_nm)
    if (!(v > 0)) throw ConfigError("sweep_design: filter bandwidths must be positive");
  if (!(threshold > 0 && threshold < 1)) throw ConfigError("sweep_design: threshold must lie in (0, 1)");
}

std::vector<DesignPoint> sweep_design(const DesignRanges& ranges, int threads) {
  ranges.validate();
  std::vector<DesignPoint> points;
  for (double fwhm : ranges.pump_fwhm_nm)
    for (double len : ranges.smf_length_m)
      for (int n : ranges.stages) {
        DesignPoint p;
        p.pump_fwhm_nm = fwhm;
        p.smf_length_m = len;
        p.stages = n;
        points.push_back(p);
      }

  auto evaluate = [&](DesignPoint& p) {
    NliConfig c = ranges.base;
    c.pump.fwhm_bandwidth = p.pump_fwhm_nm * 1e-9;
    c.smf.length = p.smf_length_m;
    c.stages = p.stages;
    const Jsf jsf = compute_jsf(ranges.grid, c);
    const auto islands = detect_islands(jsf, ranges.threshold);
    if (islands.empty()) return;
    const bool any_off = std::any_of(islands.begin(), islands.end(),
                                     [](const IslandReport& r) { return !r.degenerate(); });
    const IslandReport& chosen =
        any_off ? roundest_island(islands)
                : *std::max_element(islands.begin(), islands.end(),
                                    [](const IslandReport& a, const IslandReport& b) {
                                      return a.island_mass < b.island_mass;
                                    });
    p.island = score_island(jsf, chosen, ranges.bandwidths_nm);
    p.score = p.island.best;
    p.filter = FilterSpec::centered(p.island.centroid_signal_nm * 1e-9,
                                    p.island.centroid_idler_nm * 1e-9, p.score->bandwidth_nm * 1e-9);
    p.filter.out_of_band_extinction_db = std::numeric_limits<double>::infinity();
    p.composite = p.score->h_s * p.score->h_i * p.score->captured_mass / p.score->mode_number;
  };

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < points.size(); k = next++) {
      try {
        evaluate(points[k]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int workers = std::clamp(threads, 1, int(points.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < workers; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::stable_sort(points.begin(), points.end(), [](const DesignPoint& a, const DesignPoint& b) {
    if (a.composite != b.composite) return a.composite > b.composite;
    if (a.pump_fwhm_nm != b.pump_fwhm_nm) return a.pump_fwhm_nm < b.pump_fwhm_nm;
    if (a.smf_length_m != b.smf_length_m) return a.smf_length_m < b.smf_length_m;
    return a.stages < b.stages;
  });
  return points;
}

}  // namespace nli
