#pragma once

#include "vskgp/common.hpp"
#include "vskgp/scaling_maps.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace vskgp {

/// One-dimensional radial profiles phi with phi(0) = 1, finite, non-negative and
/// non-increasing on [0, inf). Matern profiles are the nu = 1/2, 3/2, 5/2 family
/// (C0/C2/C4 sample-path smoothness); Wendland is the compactly supported C2
/// function for d <= 3.
enum class RadialFamily { Gaussian, MaternC0, MaternC2, MaternC4, Wendland, InverseMultiquadric };

inline std::string family_name(RadialFamily f) {
  switch (f) {
    case RadialFamily::Gaussian: return "gaussian";
    case RadialFamily::MaternC0: return "maternc0";
    case RadialFamily::MaternC2: return "maternc2";
    case RadialFamily::MaternC4: return "maternc4";
    case RadialFamily::Wendland: return "wendland";
    case RadialFamily::InverseMultiquadric: return "imq";
  }
  throw ConfigError("unknown radial family");
}

inline double eval_profile(RadialFamily f, double r) {
  if (r < 0.0) throw std::domain_error("eval_profile: negative radius");
  switch (f) {
    case RadialFamily::Gaussian:
      return std::exp(-0.5 * r * r);
    case RadialFamily::MaternC0:
      return std::exp(-r);
    case RadialFamily::MaternC2: {
      const double s = std::sqrt(3.0) * r;
      return (1.0 + s) * std::exp(-s);
    }
    case RadialFamily::MaternC4: {
      const double s = std::sqrt(5.0) * r;
      return (1.0 + s + (5.0 / 3.0) * r * r) * std::exp(-s);
    }
    case RadialFamily::Wendland: {
      if (r >= 1.0) return 0.0;
      const double u = 1.0 - r;
      const double u2 = u * u;
      return u2 * u2 * (4.0 * r + 1.0);
    }
    case RadialFamily::InverseMultiquadric:
      return 1.0 / std::sqrt(1.0 + r * r);
  }
  throw ConfigError("eval_profile: unknown radial family");
}

namespace detail {
/// Kernel formulas below are symmetric up to commutative floating-point ops, but
/// evaluating in a canonical argument order makes the symmetry bit-exact.
inline std::pair<const Point*, const Point*> canonical(const Point& a, const Point& b) {
  if (lex_less(b, a)) return {&b, &a};
  return {&a, &b};
}
}  // namespace detail

/// kappa_l(x,x') = phi(||x - x'||_2 / l).
class StationaryKernel {
 public:
  StationaryKernel(RadialFamily profile, double length_scale)
      : profile_(profile), length_scale_(length_scale) {
    if (!(length_scale > 0.0)) throw ConfigError("stationary kernel: length scale must be positive");
  }

  [[nodiscard]] double operator()(const Point& x, const Point& xp) const {
    if (x.size() != xp.size()) throw ConfigError("kernel: input dimension mismatch");
    auto [a, b] = detail::canonical(x, xp);
    return eval_profile(profile_, (*a - *b).norm() / length_scale_);
  }

  [[nodiscard]] RadialFamily profile() const { return profile_; }
  [[nodiscard]] double length_scale() const { return length_scale_; }

 private:
  RadialFamily profile_;
  double length_scale_;
};

/// Variably scaled kernel: the base kernel evaluated on lifted points
/// Psi(x) = (x, psi(x)), i.e. phi(sqrt(||x-x'||^2 + ||psi(x)-psi(x')||^2) / l).
class VskKernel {
 public:
  VskKernel(StationaryKernel base, ScalingMap scaling)
      : base_(base), scaling_(std::move(scaling)) {}

  [[nodiscard]] double operator()(const Point& x, const Point& xp) const {
    if (x.size() != xp.size()) throw ConfigError("kernel: input dimension mismatch");
    auto [a, b] = detail::canonical(x, xp);
    return eval_profile(base_.profile(), lifted_distance(*a, *b) / base_.length_scale());
  }

  /// d_Psi(x,x') = sqrt(||x-x'||^2 + ||psi(x)-psi(x')||^2); never below ||x-x'||.
  [[nodiscard]] double lifted_distance(const Point& x, const Point& xp) const {
    return std::sqrt((x - xp).squaredNorm() + scaling_.separation_sq(x, xp));
  }

  [[nodiscard]] const StationaryKernel& base() const { return base_; }
  [[nodiscard]] const ScalingMap& scaling() const { return scaling_; }

 private:
  StationaryKernel base_;
  ScalingMap scaling_;
};

/// Gibbs kernel with spatially varying length scale l(x):
/// sqrt(2 l(x) l(x') / (l(x)^2 + l(x')^2)) * phi(||x-x'|| / l_eff),
/// l_eff = sqrt((l(x)^2 + l(x')^2) / 2).
class GibbsKernel {
 public:
  using LengthField = std::function<double(const Point&)>;

  GibbsKernel(RadialFamily profile, LengthField length_field)
      : profile_(profile), length_field_(std::move(length_field)) {}

  [[nodiscard]] double operator()(const Point& x, const Point& xp) const {
    if (x.size() != xp.size()) throw ConfigError("kernel: input dimension mismatch");
    auto [a, b] = detail::canonical(x, xp);
    const double la = length_field_(*a);
    const double lb = length_field_(*b);
    if (!(la > 0.0) || !(lb > 0.0)) throw ConfigError("gibbs kernel: length field must be positive");
    const double sum_sq = la * la + lb * lb;
    const double prefactor = std::sqrt(2.0 * la * lb / sum_sq);
    const double l_eff = std::sqrt(0.5 * sum_sq);
    return prefactor * eval_profile(profile_, (*a - *b).norm() / l_eff);
  }

  [[nodiscard]] RadialFamily profile() const { return profile_; }

 private:
  RadialFamily profile_;
  LengthField length_field_;
};

/// Paciorek-Schervish kernel driven by an SPD matrix field Sigma(x):
/// |S(x)|^(1/4) |S(x')|^(1/4) / |(S(x)+S(x'))/2|^(1/2) * phi(sqrt(Q)),
/// Q = (x-x')^T ((S(x)+S(x'))/2)^(-1) (x-x').
class PaciorekKernel {
 public:
  using SigmaField = std::function<Matrix(const Point&)>;

  PaciorekKernel(RadialFamily profile, SigmaField sigma_field)
      : profile_(profile), sigma_field_(std::move(sigma_field)) {}

  [[nodiscard]] double operator()(const Point& x, const Point& xp) const {
    if (x.size() != xp.size()) throw ConfigError("kernel: input dimension mismatch");
    auto [a, b] = detail::canonical(x, xp);
    const Matrix sa = sigma_field_(*a);
    const Matrix sb = sigma_field_(*b);
    const Matrix avg = 0.5 * (sa + sb);
    Eigen::LLT<Matrix> llt(avg);
    if (llt.info() != Eigen::Success)
      throw NumericalError("paciorek kernel: averaged covariance field is not SPD");
    const double det_a = sa.determinant();
    const double det_b = sb.determinant();
    const double det_avg = avg.determinant();
    if (!(det_a > 0.0) || !(det_b > 0.0))
      throw NumericalError("paciorek kernel: covariance field is not SPD");
    const double prefactor = std::pow(det_a, 0.25) * std::pow(det_b, 0.25) / std::sqrt(det_avg);
    const Vector diff = *a - *b;
    const double q = diff.dot(llt.solve(diff));
    return prefactor * eval_profile(profile_, std::sqrt(std::max(0.0, q)));
  }

  [[nodiscard]] RadialFamily profile() const { return profile_; }

 private:
  RadialFamily profile_;
  SigmaField sigma_field_;
};

/// Linear kernel enriched by a scaling map: x^T x' + psi(x)^T psi(x').
class LinearVskKernel {
 public:
  explicit LinearVskKernel(ScalingMap scaling) : scaling_(std::move(scaling)) {}

  [[nodiscard]] double operator()(const Point& x, const Point& xp) const {
    if (x.size() != xp.size()) throw ConfigError("kernel: input dimension mismatch");
    auto [a, b] = detail::canonical(x, xp);
    double value = a->dot(*b);
    if (!scaling_.is_zero()) value += scaling_(*a).dot(scaling_(*b));
    return value;
  }

  [[nodiscard]] const ScalingMap& scaling() const { return scaling_; }

 private:
  ScalingMap scaling_;
};

template <typename K>
concept KernelLike = requires(const K& k, const Point& x) {
  { k(x, x) } -> std::convertible_to<double>;
};

/// N x N symmetric Gram matrix (K)_ij = kappa(x_i, x_j); rows of X are points.
template <KernelLike K>
[[nodiscard]] Matrix gram_matrix(const K& kernel, const PointSet& X) {
  const Eigen::Index n = X.rows();
  Matrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point xi = X.row(i).transpose();
    g(i, i) = kernel(xi, xi);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Point xj = X.row(j).transpose();
      const double v = kernel(xi, xj);
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

/// Cross-covariance matrix (M x N) between probe rows of A and node rows of B.
template <KernelLike K>
[[nodiscard]] Matrix cross_matrix(const K& kernel, const PointSet& A, const PointSet& B) {
  Matrix g(A.rows(), B.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const Point xi = A.row(i).transpose();
    for (Eigen::Index j = 0; j < B.rows(); ++j) g(i, j) = kernel(xi, B.row(j).transpose());
  }
  return g;
}

struct AmplitudeDecomposition {
  double sigma_x;       // sigma_f * exp(-||psi(x)||^2 / (2 l^2))
  double sigma_xp;      // sigma_f * exp(-||psi(x')||^2 / (2 l^2))
  double modulated;     // exp(<psi(x),psi(x')> / l^2) * kappa_l(x,x')
};

/// Splits a Gaussian VSK into amplitude factors and a modulated kernel so that
/// sigma_x * sigma_xp * modulated == sigma_f^2 * kappa_vsk(x,x').
inline AmplitudeDecomposition amplitude_decomposition(const VskKernel& kernel, const Point& x,
                                                      const Point& xp, double sigma_f = 1.0) {
  if (kernel.base().profile() != RadialFamily::Gaussian)
    throw UnsupportedOperation("amplitude decomposition requires the Gaussian profile");
  const double l = kernel.base().length_scale();
  const double l2 = l * l;
  const Vector px = kernel.scaling()(x);
  const Vector pxp = kernel.scaling()(xp);
  AmplitudeDecomposition out;
  out.sigma_x = sigma_f * std::exp(-0.5 * px.squaredNorm() / l2);
  out.sigma_xp = sigma_f * std::exp(-0.5 * pxp.squaredNorm() / l2);
  out.modulated = std::exp(px.dot(pxp) / l2) * kernel.base()(x, xp);
  return out;
}

}  // namespace vskgp
