#pragma once

#include "vskgp/gp.hpp"
#include "vskgp/kernels.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace vskgp {

/// Reconstruction metrics over an evaluation set: RMSE, maximum absolute error,
/// and the average/maximum posterior standard deviation.
struct MetricsReport {
  double rmse = 0.0;
  double mae = 0.0;      // maximum absolute error
  double avg_std = 0.0;
  double max_std = 0.0;
  Eigen::Index m = 0;
};

inline MetricsReport compute_metrics(const TrainedGP& gp, const std::function<double(const Point&)>& target,
                                     const PointSet& eval_points, bool include_noise = true) {
  if (eval_points.rows() == 0) throw ConfigError("compute_metrics: empty evaluation set");
  const auto batch = gp.predict_batch(eval_points, include_noise);
  MetricsReport r;
  r.m = eval_points.rows();
  double sq = 0.0, std_sum = 0.0;
  for (Eigen::Index i = 0; i < r.m; ++i) {
    const double err = batch.mean[i] - target(eval_points.row(i).transpose());
    sq += err * err;
    r.mae = std::max(r.mae, std::abs(err));
    const double sd = std::sqrt(batch.variance[i]);
    std_sum += sd;
    r.max_std = std::max(r.max_std, sd);
  }
  r.rmse = std::sqrt(sq / static_cast<double>(r.m));
  r.avg_std = std_sum / static_cast<double>(r.m);
  return r;
}

inline MetricsReport compute_metrics(const TrainedGP& gp, const TargetFunction& target,
                                     const PointSet& eval_points, bool include_noise = true) {
  return compute_metrics(
      gp, [&target](const Point& x) { return target(x); }, eval_points, include_noise);
}

/// A step-size/residual table with the least-squares slope of log(residual)
/// against log(h). Residuals at or below the round-off floor (1e-13) are
/// excluded from the slope; if everything sits below the floor the sequence is
/// exact and the order reports +inf.
struct OrderEstimate {
  std::vector<double> steps;
  std::vector<double> residuals;
  double order = std::numeric_limits<double>::infinity();
  int points_used = 0;
};

inline void fit_order(OrderEstimate& est) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < est.steps.size(); ++i) {
    if (est.residuals[i] <= 1e-13) continue;
    const double lx = std::log(est.steps[i]);
    const double ly = std::log(est.residuals[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  est.points_used = n;
  if (n >= 2) est.order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline std::vector<double> dyadic_steps(int first = 3, int last = 12) {
  std::vector<double> hs;
  for (int j = first; j <= last; ++j) hs.push_back(std::ldexp(1.0, -j));
  return hs;
}

/// Residual of the symmetric local-metric expansion:
/// e = | d_Psi(x, x+h)^2 - h^T Mbar(x, x+h) h |,
/// Mbar = I + (grad psi(x) grad psi(x)^T + grad psi(x') grad psi(x')^T) / 2.
/// The expansion claims e = o(||h||^2); smooth maps show order ~3 or better.
inline OrderEstimate local_metric_residual(const VskKernel& kernel, const Point& x,
                                           const Point& direction,
                                           const std::vector<double>& hs = dyadic_steps()) {
  const ScalingMap& psi = kernel.scaling();
  const Vector dir = direction.normalized();
  OrderEstimate est;
  for (const double h : hs) {
    const Point xp = x + h * dir;
    const double d2 = std::pow(kernel.lifted_distance(x, xp), 2);
    const Vector gx = psi.gradient(x).row(0).transpose();
    const Vector gxp = psi.gradient(xp).row(0).transpose();
    const Matrix mbar = Matrix::Identity(x.size(), x.size()) +
                        0.5 * (gx * gx.transpose() + gxp * gxp.transpose());
    const Vector hv = h * dir;
    est.steps.push_back(h);
    est.residuals.push_back(std::abs(d2 - hv.dot(mbar * hv)));
  }
  fit_order(est);
  return est;
}

/// One-dimensional Gibbs-form residual: e = | kappa_vsk(x, x+h) - phi(|h| / ltilde) |
/// with l_psi(t) = l / sqrt(1 + psi'(t)^2) and ltilde the root-mean-square pairing.
/// The corollary claims e -> 0 as h -> 0.
inline OrderEstimate gibbs_equivalence_residual(const VskKernel& kernel, double x,
                                                const std::vector<double>& hs = dyadic_steps()) {
  const ScalingMap& psi = kernel.scaling();
  const double ell = kernel.base().length_scale();
  const auto local_ell = [&](double t) {
    const double dp = psi.gradient(point1(t))(0, 0);
    return ell / std::sqrt(1.0 + dp * dp);
  };
  OrderEstimate est;
  for (const double h : hs) {
    const double la = local_ell(x);
    const double lb = local_ell(x + h);
    const double ltilde = std::sqrt(0.5 * (la * la + lb * lb));
    const double vsk_value = kernel(point1(x), point1(x + h));
    const double gibbs_form = eval_profile(kernel.base().profile(), h / ltilde);
    est.steps.push_back(h);
    est.residuals.push_back(std::abs(vsk_value - gibbs_form));
  }
  fit_order(est);
  return est;
}

/// Residual between the Paciorek-Schervish quadratic form under
/// Sigma(x) = l^2 (I + grad psi grad psi^T)^{-1} and the local metric form
/// h^T Mbar h / l^2. Claimed o(||h||^2).
inline OrderEstimate paciorek_equivalence_residual(const VskKernel& kernel, const Point& x,
                                                   const Point& direction,
                                                   const std::vector<double>& hs = dyadic_steps()) {
  const ScalingMap& psi = kernel.scaling();
  const double ell = kernel.base().length_scale();
  const double ell2 = ell * ell;
  const Eigen::Index d = x.size();
  const Vector dir = direction.normalized();
  const auto sigma_at = [&](const Point& t) -> Matrix {
    const Vector g = psi.gradient(t).row(0).transpose();
    const Matrix m = Matrix::Identity(d, d) + g * g.transpose();
    return ell2 * m.inverse();
  };
  OrderEstimate est;
  for (const double h : hs) {
    const Point xp = x + h * dir;
    const Matrix avg = 0.5 * (sigma_at(x) + sigma_at(xp));
    const Vector hv = h * dir;
    const double q_ps = hv.dot(avg.llt().solve(hv));
    const Vector gx = psi.gradient(x).row(0).transpose();
    const Vector gxp = psi.gradient(xp).row(0).transpose();
    const Matrix mbar =
        Matrix::Identity(d, d) + 0.5 * (gx * gx.transpose() + gxp * gxp.transpose());
    est.steps.push_back(h);
    est.residuals.push_back(std::abs(q_ps - hv.dot(mbar * hv) / ell2));
  }
  fit_order(est);
  return est;
}

/// Cross-jump attenuation kappa_vsk(xl, xr) / kappa(xl, xr); equals
/// exp(-1/(2 l^2)) exactly for the Gaussian profile and a unit jump.
inline double decoupling_ratio(const VskKernel& kernel, const Point& x_left, const Point& x_right) {
  return kernel(x_left, x_right) / kernel.base()(x_left, x_right);
}

/// Spectral power-function bounds (Rayleigh-Ritz):
/// kappa(x,x) - ||k(x)||^2 / lmin(K)  <=  P_vsk(x)^2  <=  kappa(x,x) - ||k_vsk(x)||^2 / lmax(K).
/// The eigenvalue hypotheses are verified numerically per instance, together with
/// a rank floor (lmin > 1e-10 on both matrices) below which double-precision
/// evaluation of either side is meaningless.
struct PowerBoundsReport {
  bool hypotheses_met = false;
  std::string hypothesis_note;
  double lambda_min_plain = 0.0, lambda_max_plain = 0.0;
  double lambda_min_vsk = 0.0, lambda_max_vsk = 0.0;
  double min_lower_slack = std::numeric_limits<double>::quiet_NaN();
  double min_upper_slack = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> lower_slack;  // per probe: P^2 - lower bound
  std::vector<double> upper_slack;  // per probe: upper bound - P^2
};

template <KernelLike KA, KernelLike KB>
PowerBoundsReport power_bounds_check(const KA& plain, const KB& vsk, const PointSet& X,
                                     const PointSet& probes) {
  PowerBoundsReport rep;
  Matrix k = gram_matrix(plain, X);
  Matrix kp = gram_matrix(vsk, X);
  k = 0.5 * (k + k.transpose());
  kp = 0.5 * (kp + kp.transpose());
  const Eigen::SelfAdjointEigenSolver<Matrix> ek(k), ekp(kp);
  rep.lambda_min_plain = ek.eigenvalues().minCoeff();
  rep.lambda_max_plain = ek.eigenvalues().maxCoeff();
  rep.lambda_min_vsk = ekp.eigenvalues().minCoeff();
  rep.lambda_max_vsk = ekp.eigenvalues().maxCoeff();

  if (rep.lambda_min_plain <= 1e-10 || rep.lambda_min_vsk <= 1e-10) {
    rep.hypothesis_note = "numerically rank-deficient kernel matrix";
    return rep;
  }
  if (rep.lambda_min_vsk < rep.lambda_min_plain - 1e-12) {
    rep.hypothesis_note = "lambda_min(K_vsk) < lambda_min(K)";
    return rep;
  }
  if (rep.lambda_max_vsk > rep.lambda_max_plain + 1e-12) {
    rep.hypothesis_note = "lambda_max(K_vsk) > lambda_max(K)";
    return rep;
  }

  const Eigen::LLT<Matrix> llt(kp);
  const Eigen::Index n = X.rows();
  rep.min_lower_slack = std::numeric_limits<double>::infinity();
  rep.min_upper_slack = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < probes.rows(); ++i) {
    const Point x = probes.row(i).transpose();
    Vector kx(n), kpx(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const Point xj = X.row(j).transpose();
      kx[j] = plain(x, xj);
      kpx[j] = vsk(x, xj);
    }
    const double diag_plain = plain(x, x);
    const double diag_vsk = vsk(x, x);
    if (std::abs(diag_plain - diag_vsk) > 1e-12) {
      rep.hypothesis_note = "kappa_vsk(x,x) != kappa(x,x)";
      rep.hypotheses_met = false;
      return rep;
    }
    if (kpx.norm() > kx.norm() + 1e-12) {
      rep.hypothesis_note = "||k_vsk(x)|| > ||k(x)||";
      rep.hypotheses_met = false;
      return rep;
    }
    const double p2 = std::max(0.0, diag_vsk - kpx.dot(llt.solve(kpx)));
    const double lower = diag_plain - kx.squaredNorm() / rep.lambda_min_plain;
    const double upper = diag_plain - kpx.squaredNorm() / rep.lambda_max_plain;
    rep.lower_slack.push_back(p2 - lower);
    rep.upper_slack.push_back(upper - p2);
    rep.min_lower_slack = std::min(rep.min_lower_slack, rep.lower_slack.back());
    rep.min_upper_slack = std::min(rep.min_upper_slack, rep.upper_slack.back());
  }
  rep.hypotheses_met = true;
  return rep;
}

/// kappa(., center) sampled on the grid rows; used for side-by-side basis plots.
template <KernelLike K>
Vector basis_function_profile(const K& kernel, const Point& center, const PointSet& grid) {
  Vector out(grid.rows());
  for (Eigen::Index i = 0; i < grid.rows(); ++i) out[i] = kernel(grid.row(i).transpose(), center);
  return out;
}

}  // namespace vskgp
