#include "nli/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace nli {

QuadraticFit fit_singles_power(const std::vector<PowerCount>& data) {
  std::set<double> distinct;
  for (const auto& d : data) {
    if (!std::isfinite(d.power) || !std::isfinite(d.counts))
      throw ConfigError("fit_singles_power: non-finite input");
    distinct.insert(d.power);
  }
  if (distinct.size() < 3) throw ConfigError("fit_singles_power: need at least 3 distinct powers");

  const Eigen::Index n = Eigen::Index(data.size());
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n), w(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& d = data[std::size_t(k)];
    x(k, 0) = d.power;
    x(k, 1) = d.power * d.power;
    y(k) = d.counts;
    w(k) = 1.0 / std::max(std::abs(d.counts), 1.0);
  }
  const Eigen::Matrix2d normal = x.transpose() * w.asDiagonal() * x;
  Eigen::LDLT<Eigen::Matrix2d> ldlt(normal);
  const double scale = normal.diagonal().cwiseAbs().maxCoeff();
  const double det = normal.determinant();
  if (!(scale > 0) || ldlt.info() != Eigen::Success || !(std::abs(det) > 1e-12 * scale * scale))
    throw NumericalError("fit_singles_power: rank-deficient design (powers must be non-zero and distinct)");

  QuadraticFit fit;
  const Eigen::Vector2d coef = ldlt.solve(x.transpose() * w.asDiagonal() * y);
  fit.s1 = coef(0);
  fit.s2 = coef(1);
  fit.covariance = ldlt.solve(Eigen::Matrix2d::Identity());
  fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose()).eval();
  fit.residual_norm = (y - x * coef).norm();
  return fit;
}

double raman_fraction(const QuadraticFit& fit, double power) {
  const double lin = fit.linear_term(power);
  const double quad = fit.quadratic_term(power);
  if (!(lin + quad > 0)) throw NumericalError("raman_fraction: no counts at this power");
  return std::clamp(lin / (lin + quad), 0.0, 1.0);
}

TrueCoincidence true_coincidence(double c_same, double c_adjacent) {
  if (!(c_same >= 0) || !(c_adjacent >= 0))
    throw ConfigError("true_coincidence: counts must be non-negative");
  TrueCoincidence t;
  t.value = c_same - c_adjacent;
  t.sigma = std::sqrt(c_same + c_adjacent);
  t.negative = t.value < 0;
  return t;
}

HeraldingEstimate heralding_from_counts(double c_true, double eta, double n_fwm, double c_true_sigma,
                                        double n_fwm_sigma) {
  if (!(eta > 0) || !(eta <= 1)) throw NumericalError("heralding_from_counts: efficiency must lie in (0, 1]");
  if (!(n_fwm > 0)) throw NumericalError("heralding_from_counts: zero pair-production counts");
  HeraldingEstimate h;
  h.value = c_true / (eta * n_fwm);
  const double rel_c = c_true != 0 ? c_true_sigma / c_true : 0.0;
  const double rel_n = n_fwm_sigma / n_fwm;
  h.sigma = std::abs(h.value) * std::hypot(rel_c, rel_n);
  h.unphysical = h.value > 1.0;
  return h;
}

namespace {

// Var(log(n·N_ab/(N_a·N_b))) for multinomial cell counts.
double log_ratio_variance(double n, double na, double nb, double nab) {
  const double g_ab = 1.0 / nab - 1.0 / na - 1.0 / nb;
  const double var = nab * g_ab * g_ab + (na - nab) / (na * na) + (nb - nab) / (nb * nb) - 1.0 / n;
  return std::max(var, 0.0);
}

Estimate ratio_estimate(double n, double na, double nb, double nab, const char* who) {
  if (!(na > 0) || !(nb > 0)) throw NumericalError(std::string(who) + ": zero two-fold counts");
  if (!(n > 0) || nab < 0 || nab > std::min(na, nb) || std::max(na, nb) > n)
    throw ConfigError(std::string(who) + ": inconsistent counts");
  Estimate e;
  e.value = n * nab / (na * nb);
  // With no triple events, quote the one-count scale as the uncertainty.
  e.sigma = nab > 0 ? e.value * std::sqrt(log_ratio_variance(n, na, nb, nab)) : n / (na * nb);
  return e;
}

}  // namespace

Estimate g2_from_hbt(double n_herald, double n_12, double n_13, double n_123) {
  return ratio_estimate(n_herald, n_12, n_13, n_123, "g2_from_hbt");
}

Estimate g2_from_hbt(const HbtCounts& c) {
  return g2_from_hbt(double(c.herald), double(c.herald_a), double(c.herald_b), double(c.herald_ab));
}

Estimate g2_unheralded(double n_pulses, double n_a, double n_b, double n_ab) {
  return ratio_estimate(n_pulses, n_a, n_b, n_ab, "g2_unheralded");
}

double raman_correct_g2s(double g2_measured, double fraction, RamanMode mode) {
  if (!(fraction >= 0) || !(fraction < 1))
    throw ConfigError("raman_correct_g2s: Raman fraction must lie in [0, 1)");
  const double g_r = mode == RamanMode::thermal ? 2.0 : 1.0;
  const double f = 1.0 - fraction;
  return (g2_measured - g_r * fraction * fraction - 2.0 * fraction * f) / (f * f);
}

double live_time_corrected_rate(double counts, double n_pulses, std::int64_t dead_gates) {
  if (!(n_pulses > 0)) throw ConfigError("live_time_corrected_rate: n_pulses must be positive");
  if (dead_gates < 0) throw ConfigError("live_time_corrected_rate: negative dead time");
  const double r = counts / n_pulses;
  const double live = 1.0 - r * double(dead_gates);
  if (!(live > 0)) throw NumericalError("live_time_corrected_rate: detector saturated");
  return r / live;
}

std::vector<ScanPoint> to_scan(const std::vector<HomPoint>& points) {
  std::vector<ScanPoint> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back({p.delay, double(p.fourfold)});
  return out;
}

VisibilityReport fit_hom_dip(const std::vector<ScanPoint>& scan) {
  if (scan.size() < 5) throw ConfigError("fit_hom_dip: need at least 5 delay points");
  const Eigen::Index n = Eigen::Index(scan.size());
  Eigen::VectorXd t(n), y(n), wt(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    t(k) = scan[std::size_t(k)].delay;
    y(k) = scan[std::size_t(k)].counts;
    wt(k) = 1.0 / std::max(y(k), 1.0);
  }
  const double span = t.maxCoeff() - t.minCoeff();
  if (!(span > 0)) throw ConfigError("fit_hom_dip: delays do not span an interval");
  // Work in units of the largest |delay| so all parameters are O(1)..O(counts).
  const double time_unit = t.cwiseAbs().maxCoeff();
  t /= time_unit;

  // Initial guess: baseline from the outer fifth of the scan, depth from the
  // minimum, width from the points below half depth.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) order[std::size_t(k)] = k;
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return std::abs(t(a)) > std::abs(t(b)); });
  const std::size_t outer = std::max<std::size_t>(1, order.size() / 5);
  double c0 = 0;
  for (std::size_t k = 0; k < outer; ++k) c0 += y(order[k]);
  c0 /= double(outer);
  if (!(c0 > 0)) throw NumericalError("fit_hom_dip: zero baseline counts");
  Eigen::Index imin;
  y.minCoeff(&imin);
  double v0 = std::clamp(1.0 - y(imin) / c0, 0.05, 1.0);
  double half_width = 0;
  for (Eigen::Index k = 0; k < n; ++k)
    if (y(k) < c0 * (1.0 - 0.5 * v0)) half_width = std::max(half_width, std::abs(t(k) - t(imin)));
  double w0 = half_width > 0 ? half_width / 1.1774 : span / time_unit / 10.0;

  Eigen::Vector3d p(c0, v0, w0);
  auto residuals = [&](const Eigen::Vector3d& q) {
    Eigen::VectorXd r(n);
    for (Eigen::Index k = 0; k < n; ++k)
      r(k) = y(k) - q(0) * (1.0 - q(1) * std::exp(-t(k) * t(k) / (2 * q(2) * q(2))));
    return r;
  };
  auto jacobian = [&](const Eigen::Vector3d& q) {
    Eigen::MatrixXd j(n, 3);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double g = std::exp(-t(k) * t(k) / (2 * q(2) * q(2)));
      j(k, 0) = 1.0 - q(1) * g;
      j(k, 1) = -q(0) * g;
      j(k, 2) = -q(0) * q(1) * g * t(k) * t(k) / (q(2) * q(2) * q(2));
    }
    return j;
  };
  auto cost = [&](const Eigen::Vector3d& q) {
    const Eigen::VectorXd r = residuals(q);
    return r.dot(wt.asDiagonal() * r);
  };

  double lambda = 1e-3;
  double current = cost(p);
  int iter = 0;
  bool converged = false;
  for (; iter < 500; ++iter) {
    const Eigen::MatrixXd j = jacobian(p);
    const Eigen::Matrix3d jtj = j.transpose() * wt.asDiagonal() * j;
    const Eigen::Vector3d g = j.transpose() * wt.asDiagonal() * residuals(p);
    Eigen::Matrix3d a = jtj;
    a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-300);
    const Eigen::Vector3d step = a.ldlt().solve(g);
    Eigen::Vector3d trial = p + step;
    trial(2) = std::abs(trial(2));
    const double next = std::isfinite(trial.sum()) && trial(2) > 0 ? cost(trial) : INFINITY;
    if (next <= current) {
      const double rel = (current - next) / std::max(current, 1e-300);
      const bool small_step = (step.array().abs() <= 1e-10 * (p.array().abs() + 1e-30)).all();
      p = trial;
      current = next;
      lambda = std::max(lambda / 3.0, 1e-12);
      if (rel < 1e-14 || small_step) {
        converged = true;
        break;
      }
    } else {
      lambda *= 4.0;
      if (lambda > 1e12) {
        converged = current < INFINITY;
        break;
      }
    }
  }
  if (!converged || !std::isfinite(p.sum())) {
    std::ostringstream msg;
    msg << "fit_hom_dip: no convergence after " << iter << " iterations (C=" << p(0)
        << ", V=" << p(1) << ", w=" << p(2) * time_unit << " s, cost=" << current << ")";
    throw NumericalError(msg.str());
  }

  const Eigen::MatrixXd j = jacobian(p);
  const Eigen::Matrix3d jtj = j.transpose() * wt.asDiagonal() * j;
  const Eigen::Vector3d d = jtj.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const Eigen::Matrix3d scaled = d.asDiagonal() * jtj * d.asDiagonal();
  const Eigen::Matrix3d cov = d.asDiagonal() * scaled.inverse() * d.asDiagonal();

  VisibilityReport r;
  r.baseline = p(0);
  r.v_raw = p(1);
  r.dip_width = p(2) * time_unit;
  r.baseline_sigma = std::sqrt(std::max(cov(0, 0), 0.0));
  r.v_raw_sigma = std::sqrt(std::max(cov(1, 1), 0.0));
  r.dip_width_sigma = std::sqrt(std::max(cov(2, 2), 0.0)) * time_unit;
  r.v_raman_corrected = r.v_multipair_corrected = r.v_raw;
  r.v_raman_corrected_sigma = r.v_multipair_corrected_sigma = r.v_raw_sigma;
  r.fit_iterations = iter + 1;
  return r;
}

SourceModel with_raman_fraction(SourceModel source, double fraction) {
  if (!(fraction >= 0) || !(fraction < 1)) throw ConfigError("Raman fraction must lie in [0, 1)");
  const double k = fraction / (1.0 - fraction);
  source.raman_signal_mean = k * source.fwm_signal_mean();
  source.raman_idler_mean = k * source.fwm_idler_mean();
  return source;
}

double model_visibility(const HomSetup& setup, double overlap_peak) {
  const double far = hom_fourfold_probability(setup, 0.0);
  if (!(far > 0)) throw NumericalError("model_visibility: zero fourfold probability");
  return 1.0 - hom_fourfold_probability(setup, overlap_peak) / far;
}

VisibilityReport correct_visibility(const VisibilityReport& raw,
                                    const std::array<double, 2>& raman_background_fraction,
                                    const MultipairConfig& multipair) {
  for (double f : raman_background_fraction)
    if (!(f >= 0) || !(f < 1)) throw ConfigError("correct_visibility: Raman fraction must lie in [0, 1)");

  VisibilityReport out = raw;
  HomSetup clean = multipair.setup;
  clean.source1.raman_signal_mean = clean.source1.raman_idler_mean = 0;
  clean.source2.raman_signal_mean = clean.source2.raman_idler_mean = 0;

  const bool any_raman = raman_background_fraction[0] > 0 || raman_background_fraction[1] > 0;
  if (any_raman) {
    HomSetup noisy = clean;
    noisy.source1 = with_raman_fraction(clean.source1, raman_background_fraction[0]);
    noisy.source2 = with_raman_fraction(clean.source2, raman_background_fraction[1]);
    const double floor_noisy = hom_fourfold_probability(noisy, 0.0);
    const double floor_clean = hom_fourfold_probability(clean, 0.0);
    if (!(floor_noisy > 0)) throw NumericalError("correct_visibility: zero fourfold floor");
    out.background_floor = std::clamp(1.0 - floor_clean / floor_noisy, 0.0, 1.0 - 1e-12);
  }
  const double keep = 1.0 - out.background_floor;
  out.v_raman_corrected = std::min(raw.v_raw / keep, 1.0);
  out.v_raman_corrected_sigma = raw.v_raw_sigma / keep;

  if (multipair.enabled && clean.max_pairs > 1) {
    HomSetup single = clean;
    single.max_pairs = 1;
    out.multipair_shift = model_visibility(single, multipair.overlap_peak) -
                          model_visibility(clean, multipair.overlap_peak);
  }
  out.v_multipair_corrected = std::clamp(out.v_raman_corrected + out.multipair_shift, 0.0, 1.0);
  out.v_multipair_corrected_sigma = out.v_raman_corrected_sigma;
  return out;
}

}  // namespace nli
