#pragma once

#include "vskgp/gp.hpp"
#include "vskgp/designs.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

namespace vskgp {

/// Kernel factory parameterized by the length scale; the quantity the fit moves.
using KernelTemplate = std::function<KernelFn(double)>;

inline KernelTemplate stationary_template(RadialFamily family) {
  return [family](double ell) -> KernelFn { return StationaryKernel(family, ell); };
}

inline KernelTemplate vsk_template(RadialFamily family, ScalingMap scaling) {
  return [family, scaling](double ell) -> KernelFn {
    return VskKernel(StationaryKernel(family, ell), scaling);
  };
}

/// Box constraints in log space, with optional per-parameter fixing.
struct HyperBounds {
  double log_ell_lo, log_ell_hi;
  double log_sf_lo, log_sf_hi;
  double log_sn_lo, log_sn_hi;
  std::optional<double> fixed_ell;
  std::optional<double> fixed_sf;
  std::optional<double> fixed_sn;

  /// Scale-aware defaults: ell in [1e-3, 10] x domain diameter, sigma_f in
  /// [1e-3, 1e3] x std(y), sigma_n in [1e-6, 1] x std(y).
  static HyperBounds defaults(const TrainingSet& data) {
    const Vector span = data.points().colwise().maxCoeff() - data.points().colwise().minCoeff();
    const double diam = std::max(span.norm(), 1e-12);
    const Vector& y = data.responses();
    const double sy = std::max(std::sqrt((y.array() - y.mean()).square().mean()), 1e-8);
    HyperBounds b{};
    b.log_ell_lo = std::log(1e-3 * diam);
    b.log_ell_hi = std::log(10.0 * diam);
    b.log_sf_lo = std::log(1e-3 * sy);
    b.log_sf_hi = std::log(1e3 * sy);
    b.log_sn_lo = std::log(1e-6 * sy);
    b.log_sn_hi = std::log(1.0 * sy);
    return b;
  }

  HyperBounds& fix_sigma_n(double value) {
    fixed_sn = value;
    return *this;
  }
  HyperBounds& fix_sigma_f(double value) {
    fixed_sf = value;
    return *this;
  }
  HyperBounds& fix_ell(double value) {
    fixed_ell = value;
    return *this;
  }
};

struct FitResult {
  double ell = 0.0;
  double sigma_f = 0.0;
  double sigma_n = 0.0;
  double nlml = std::numeric_limits<double>::infinity();
  int starts_tried = 0;
  bool converged = false;
};

/// Negative log marginal likelihood
/// 0.5 y^T Sigma^{-1} y + 0.5 log det Sigma + (N/2) log 2pi, Sigma = sigma_f^2 K + sigma_n^2 I.
inline double nlml(const CovarianceModel& model, const TrainingSet& data) {
  const Eigen::Index n = data.size();
  Matrix sigma = (model.sigma_f * model.sigma_f) * gram_matrix(model.kernel, data.points());
  sigma.diagonal().array() += model.sigma_n * model.sigma_n;
  const auto f = factorize_spd(sigma, "nlml");
  const Matrix l = f.llt.matrixL();
  const Vector w = l.triangularView<Eigen::Lower>().solve(data.responses());
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(l(i, i));
  return 0.5 * w.squaredNorm() + logdet + 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

namespace detail {

struct NelderMeadResult {
  Vector best;
  double value = std::numeric_limits<double>::infinity();
  bool converged = false;
};

/// Standard simplex method with reflection/expansion/contraction/shrink; every
/// evaluated point is projected into the box first. Stops when the simplex
/// infinity-diameter drops below `tol` or after `max_iter` iterations.
inline NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& objective,
                                    const Vector& start, const Vector& lo, const Vector& hi,
                                    double initial_step = 0.25, double tol = 1e-8, int max_iter = 500) {
  const Eigen::Index n = start.size();
  const auto clamp = [&](Vector v) {
    for (Eigen::Index i = 0; i < n; ++i) v[i] = std::clamp(v[i], lo[i], hi[i]);
    return v;
  };
  std::vector<Vector> verts;
  std::vector<double> vals;
  verts.push_back(clamp(start));
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector v = start;
    v[i] += initial_step;
    if (v[i] > hi[i]) v[i] = start[i] - initial_step;  // step inward at the boundary
    verts.push_back(clamp(v));
  }
  for (auto& v : verts) vals.push_back(objective(v));

  NelderMeadResult out;
  std::vector<std::size_t> order(verts.size());
  for (int iter = 0; iter < max_iter; ++iter) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });

    double diameter = 0.0;
    for (std::size_t i = 1; i < order.size(); ++i)
      diameter = std::max(diameter, (verts[order[i]] - verts[order[0]]).cwiseAbs().maxCoeff());
    if (diameter < tol) {
      out.converged = true;
      break;
    }

    const std::size_t worst = order.back();
    const std::size_t second_worst = order[order.size() - 2];
    Vector centroid = Vector::Zero(n);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) centroid += verts[order[i]];
    centroid /= static_cast<double>(order.size() - 1);

    const Vector reflected = clamp(centroid + (centroid - verts[worst]));
    const double fr = objective(reflected);
    if (fr < vals[order[0]]) {
      const Vector expanded = clamp(centroid + 2.0 * (centroid - verts[worst]));
      const double fe = objective(expanded);
      if (fe < fr) {
        verts[worst] = expanded;
        vals[worst] = fe;
      } else {
        verts[worst] = reflected;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second_worst]) {
      verts[worst] = reflected;
      vals[worst] = fr;
      continue;
    }
    const Vector contracted = clamp(centroid + 0.5 * (verts[worst] - centroid));
    const double fc = objective(contracted);
    if (fc < vals[worst]) {
      verts[worst] = contracted;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 1; i < order.size(); ++i) {
      verts[order[i]] = clamp(verts[order[0]] + 0.5 * (verts[order[i]] - verts[order[0]]));
      vals[order[i]] = objective(verts[order[i]]);
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < vals.size(); ++i)
    if (vals[i] < vals[best]) best = i;
  out.best = verts[best];
  out.value = vals[best];
  return out;
}

/// Mean distance from each point to its nearest neighbour; the data resolution.
inline double mean_spacing(const PointSet& x) {
  const Eigen::Index n = x.rows();
  if (n < 2) return 1.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) nearest = std::min(nearest, (x.row(i) - x.row(j)).norm());
    total += nearest;
  }
  return total / static_cast<double>(n);
}

}  // namespace detail

/// Multi-start bounded Nelder-Mead over the free log parameters. The first start
/// is data-driven (ell at the mean point spacing, sigma_f = sigma_n = std(y)/sqrt(2),
/// the conventional single-start workflow); further starts come from a shifted
/// Halton grid over the box. Deterministic given the seed; the reported optimum
/// never has a worse nlml than any evaluated start.
inline FitResult fit(const KernelTemplate& kernel_template, const TrainingSet& data,
                     const HyperBounds& bounds, int starts = 8, std::uint64_t seed = 0) {
  if (starts < 1) throw ConfigError("fit: need starts >= 1");

  struct Slot {
    bool free;
    double lo, hi, fixed;
  };
  const Vector& y = data.responses();
  const double sy = std::max(std::sqrt((y.array() - y.mean()).square().mean()), 1e-8);
  const std::array<Slot, 3> slots = {
      Slot{!bounds.fixed_ell, bounds.log_ell_lo, bounds.log_ell_hi,
           bounds.fixed_ell ? *bounds.fixed_ell : 0.0},
      Slot{!bounds.fixed_sf, bounds.log_sf_lo, bounds.log_sf_hi,
           bounds.fixed_sf ? *bounds.fixed_sf : 0.0},
      Slot{!bounds.fixed_sn, bounds.log_sn_lo, bounds.log_sn_hi,
           bounds.fixed_sn ? *bounds.fixed_sn : 0.0}};
  for (const auto& s : slots)
    if (s.free && !(s.lo < s.hi)) throw ConfigError("fit: lower bound must be below upper bound");

  Eigen::Index n_free = 0;
  for (const auto& s : slots) n_free += s.free ? 1 : 0;

  const auto unpack = [&](const Vector& p) {
    std::array<double, 3> theta{};
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < 3; ++i) theta[i] = slots[i].free ? std::exp(p[k++]) : slots[i].fixed;
    return theta;
  };
  const auto objective = [&](const Vector& p) -> double {
    const auto [ell, sf, sn] = unpack(p);
    if (!(ell > 0.0) || !(sf > 0.0) || sn < 0.0) return std::numeric_limits<double>::infinity();
    try {
      return nlml(CovarianceModel{kernel_template(ell), sf, sn}, data);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  FitResult result;
  if (n_free == 0) {
    result.ell = slots[0].fixed;
    result.sigma_f = slots[1].fixed;
    result.sigma_n = slots[2].fixed;
    result.nlml = objective(Vector());
    result.starts_tried = 0;
    result.converged = true;
    if (!std::isfinite(result.nlml)) throw NumericalError("fit: fixed model not factorizable");
    return result;
  }

  Vector lo(n_free), hi(n_free);
  {
    Eigen::Index k = 0;
    for (const auto& s : slots)
      if (s.free) {
        lo[k] = s.lo;
        hi[k] = s.hi;
        ++k;
      }
  }

  std::vector<Vector> start_points;
  {
    const std::array<double, 3> heuristic = {detail::mean_spacing(data.points()),
                                             sy / std::numbers::sqrt2, sy / std::numbers::sqrt2};
    Vector p0(n_free);
    Eigen::Index k = 0;
    for (std::size_t i = 0; i < 3; ++i)
      if (slots[i].free) p0[k++] = std::clamp(std::log(heuristic[i]), slots[i].lo, slots[i].hi);
    start_points.push_back(p0);

    CounterRng rng(seed);
    Vector shift(n_free);
    for (Eigen::Index j = 0; j < n_free; ++j) shift[j] = rng.next_uniform();
    static constexpr unsigned primes[] = {2, 3, 5};
    for (int s = 1; s < starts; ++s) {
      Vector p(n_free);
      for (Eigen::Index j = 0; j < n_free; ++j) {
        const double u = std::fmod(radical_inverse(static_cast<std::uint64_t>(s), primes[j]) + shift[j], 1.0);
        p[j] = lo[j] + (hi[j] - lo[j]) * u;
      }
      start_points.push_back(p);
    }
  }

  Vector best_point;
  bool best_converged = false;
  for (const Vector& p0 : start_points) {
    ++result.starts_tried;
    const auto run = detail::nelder_mead(objective, p0, lo, hi);
    if (run.value < result.nlml) {
      result.nlml = run.value;
      best_point = run.best;
      best_converged = run.converged;
    }
  }
  if (!std::isfinite(result.nlml)) throw NumericalError("fit: every start failed to factorize");
  const auto [ell, sf, sn] = unpack(best_point);
  result.ell = ell;
  result.sigma_f = sf;
  result.sigma_n = sn;
  result.converged = best_converged;
  return result;
}

}  // namespace vskgp
