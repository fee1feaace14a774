#pragma once

#include "vskgp/common.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

namespace vskgp {

/// Analytic test targets. Branch conventions: piecewise targets evaluate the
/// x >= x0 branch at the breakpoint itself.
class TargetFunction {
 public:
  enum class Kind { Jump, Weierstrass, Corner, ExpCos };

  static TargetFunction jump() { return TargetFunction(Kind::Jump, 0.0, 1.0); }
  static TargetFunction corner() { return TargetFunction(Kind::Corner, 0.0, 1.0); }
  static TargetFunction exp_cos() { return TargetFunction(Kind::ExpCos, -1.0, 1.0); }
  static TargetFunction weierstrass(double a, double b, int terms_k) {
    if (!(a > 0.0 && a < 1.0) || !(b > 1.0) || terms_k < 0)
      throw ConfigError("weierstrass target: need a in (0,1), b > 1, K >= 0");
    TargetFunction t(Kind::Weierstrass, 0.0, 1.0);
    t.a_ = a;
    t.b_ = b;
    t.k_ = terms_k;
    return t;
  }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] int input_dim() const { return kind_ == Kind::Weierstrass ? 2 : 1; }
  [[nodiscard]] double domain_lo() const { return lo_; }
  [[nodiscard]] double domain_hi() const { return hi_; }

  [[nodiscard]] double operator()(const Point& x) const {
    check_domain(x);
    switch (kind_) {
      case Kind::Jump: {
        const double t = x[0];
        const double base = std::cos(14.0 * std::numbers::pi * (t + 0.5)) / (2.0 * t + 0.5) +
                            std::pow(t - 0.5, 4);
        return t < 0.5 ? base + 3.0 : base;
      }
      case Kind::Weierstrass: {
        double s = 0.0;
        for (int k = 0; k <= k_; ++k) {
          const double w = std::numbers::pi * std::pow(b_, k);
          s += std::pow(a_, k) * std::cos(w * x[0]) * std::cos(w * x[1]);
        }
        return s;
      }
      case Kind::Corner: {
        const double t = x[0];
        const double u = 5.0 * (2.0 * t - 1.0) + (t < 0.5 ? 0.5 : -0.5);
        return std::exp(-0.5 * u * u);
      }
      case Kind::ExpCos:
        return std::exp(x[0]) - std::cos(2.0 * std::numbers::pi * x[0]);
    }
    throw ConfigError("target: unknown kind");
  }

  [[nodiscard]] double operator()(double x) const { return (*this)(point1(x)); }

  /// Analytic derivative for the one-dimensional targets (gradient for Weierstrass
  /// comes from gradient()). The jump target has no derivative at its breakpoint.
  [[nodiscard]] double derivative(double x) const {
    switch (kind_) {
      case Kind::ExpCos:
        return std::exp(x) + 2.0 * std::numbers::pi * std::sin(2.0 * std::numbers::pi * x);
      case Kind::Corner: {
        if (x == 0.5) throw UnsupportedOperation("corner target: derivative undefined at the corner");
        const double u = 5.0 * (2.0 * x - 1.0) + (x < 0.5 ? 0.5 : -0.5);
        return -u * 10.0 * std::exp(-0.5 * u * u);
      }
      case Kind::Jump: {
        if (x == 0.5) throw UnsupportedOperation("jump target: derivative undefined at the jump");
        const double c = std::cos(14.0 * std::numbers::pi * (x + 0.5));
        const double s = std::sin(14.0 * std::numbers::pi * (x + 0.5));
        const double den = 2.0 * x + 0.5;
        return (-14.0 * std::numbers::pi * s * den - 2.0 * c) / (den * den) + 4.0 * std::pow(x - 0.5, 3);
      }
      case Kind::Weierstrass:
        throw UnsupportedOperation("weierstrass target: use gradient(), input is two-dimensional");
    }
    throw ConfigError("target: unknown kind");
  }

  [[nodiscard]] Eigen::Vector2d gradient2(const Point& x) const {
    if (kind_ != Kind::Weierstrass) throw UnsupportedOperation("gradient2: weierstrass target only");
    Eigen::Vector2d g = Eigen::Vector2d::Zero();
    for (int k = 0; k <= k_; ++k) {
      const double w = std::numbers::pi * std::pow(b_, k);
      const double ak = std::pow(a_, k);
      g[0] += -ak * w * std::sin(w * x[0]) * std::cos(w * x[1]);
      g[1] += -ak * w * std::cos(w * x[0]) * std::sin(w * x[1]);
    }
    return g;
  }

  [[nodiscard]] double weierstrass_a() const { return a_; }
  [[nodiscard]] double weierstrass_b() const { return b_; }
  [[nodiscard]] int weierstrass_terms() const { return k_; }

 private:
  TargetFunction(Kind kind, double lo, double hi) : kind_(kind), lo_(lo), hi_(hi) {}

  void check_domain(const Point& x) const {
    if (x.size() < input_dim()) throw ConfigError("target: input dimension too small");
    for (int i = 0; i < input_dim(); ++i)
      if (x[i] < lo_ - 1e-12 || x[i] > hi_ + 1e-12)
        throw ConfigError("target: point outside the domain");
  }

  Kind kind_;
  double lo_, hi_;
  double a_ = 0.5, b_ = 3.0;
  int k_ = 12;
};

/// Scaling function psi: Omega -> R^q defining the lift Psi(x) = (x, psi(x)).
/// All maps here have q = 1 except the zero map, whose q is configurable.
class ScalingMap {
 public:
  enum class Kind { Zero, JumpIndicator, CornerBump, WeierstrassPartial, TargetMimic, Tabulated, Custom };

  static ScalingMap zero(int output_dim = 1) {
    if (output_dim < 1) throw ConfigError("zero map: output_dim must be positive");
    ScalingMap m(Kind::Zero);
    m.q_ = output_dim;
    return m;
  }

  /// Indicator of the half-open region {x : x_j >= x0_j for all j}; 1_{[x0,1]} in 1D.
  static ScalingMap jump_indicator(const Point& threshold) {
    ScalingMap m(Kind::JumpIndicator);
    m.threshold_ = threshold;
    return m;
  }
  static ScalingMap jump_indicator(double x0) { return jump_indicator(point1(x0)); }

  /// Corner-mimicking bump: 1 - (3/2)(r/R) + (1/2)(r/R)^3 for r = |x - x0| < R, else 0.
  static ScalingMap corner_bump(double x0, double radius) {
    if (!(radius > 0.0)) throw ConfigError("corner bump: radius must be positive");
    ScalingMap m(Kind::CornerBump);
    m.threshold_ = point1(x0);
    m.radius_ = radius;
    return m;
  }

  /// Truncated Weierstrass partial sum in two variables, terms k = 0..K inclusive.
  static ScalingMap weierstrass_partial(double a, double b, int terms_k) {
    ScalingMap m(Kind::WeierstrassPartial);
    m.target_.push_back(TargetFunction::weierstrass(a, b, terms_k));
    return m;
  }

  /// psi(x) = f(x) for the analytic target itself.
  static ScalingMap target_mimic(const TargetFunction& target) {
    ScalingMap m(Kind::TargetMimic);
    m.target_.push_back(target);
    return m;
  }

  /// Extension point for analytic maps not in the built-in list (scalar output).
  /// The gradient callback is optional; central differences are used without it.
  static ScalingMap custom(std::function<double(const Point&)> eval,
                           std::function<Vector(const Point&)> grad = {}) {
    ScalingMap m(Kind::Custom);
    m.custom_eval_ = std::move(eval);
    m.custom_grad_ = std::move(grad);
    return m;
  }

  /// One-dimensional samples with piecewise-linear interpolation; abscissae must be increasing.
  static ScalingMap tabulated(std::vector<double> xs, std::vector<double> values) {
    if (xs.size() != values.size() || xs.size() < 2)
      throw ConfigError("tabulated map: need at least two samples");
    if (!std::is_sorted(xs.begin(), xs.end())) throw ConfigError("tabulated map: abscissae must be sorted");
    ScalingMap m(Kind::Tabulated);
    m.tab_x_ = std::move(xs);
    m.tab_v_ = std::move(values);
    return m;
  }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] int output_dim() const { return q_; }
  [[nodiscard]] bool is_zero() const { return kind_ == Kind::Zero; }

  [[nodiscard]] Vector operator()(const Point& x) const {
    Vector out(q_);
    switch (kind_) {
      case Kind::Zero:
        out.setZero();
        return out;
      case Kind::JumpIndicator: {
        bool inside = true;
        for (Eigen::Index j = 0; j < threshold_.size(); ++j)
          if (x[j] < threshold_[j]) inside = false;
        out[0] = inside ? 1.0 : 0.0;
        return out;
      }
      case Kind::CornerBump: {
        const double r = std::abs(x[0] - threshold_[0]);
        out[0] = r >= radius_ ? 0.0 : 1.0 - 1.5 * (r / radius_) + 0.5 * std::pow(r / radius_, 3);
        return out;
      }
      case Kind::WeierstrassPartial:
      case Kind::TargetMimic:
        out[0] = target_.front()(x);
        return out;
      case Kind::Custom:
        out[0] = custom_eval_(x);
        return out;
      case Kind::Tabulated: {
        const double t = x[0];
        if (t < tab_x_.front() - 1e-12 || t > tab_x_.back() + 1e-12)
          throw ConfigError("tabulated map: point outside the sampled range");
        const auto it = std::upper_bound(tab_x_.begin(), tab_x_.end(), t);
        const std::size_t hi = std::min<std::size_t>(
            std::max<std::size_t>(1, static_cast<std::size_t>(it - tab_x_.begin())), tab_x_.size() - 1);
        const double w = (t - tab_x_[hi - 1]) / (tab_x_[hi] - tab_x_[hi - 1]);
        out[0] = (1.0 - w) * tab_v_[hi - 1] + w * tab_v_[hi];
        return out;
      }
    }
    throw ConfigError("scaling map: unknown kind");
  }

  /// Jacobian of psi, shape q x d. Analytic where a closed form exists; central
  /// finite differences (h = 1e-6 * max(1,|x_j|) per coordinate) for mimic/tabulated maps.
  [[nodiscard]] Matrix gradient(const Point& x) const {
    const Eigen::Index d = x.size();
    Matrix g = Matrix::Zero(q_, d);
    switch (kind_) {
      case Kind::Zero:
        return g;
      case Kind::JumpIndicator: {
        for (Eigen::Index j = 0; j < threshold_.size(); ++j)
          if (x[j] == threshold_[j])
            throw UnsupportedOperation("jump indicator: gradient undefined at the threshold");
        return g;  // locally constant elsewhere
      }
      case Kind::CornerBump: {
        const double u = x[0] - threshold_[0];
        const double r = std::abs(u);
        if (r == 0.0) throw UnsupportedOperation("corner bump: gradient undefined at the peak");
        if (r >= radius_) return g;  // zero outside; one-sided limits agree at r == R
        const double s = u > 0.0 ? 1.0 : -1.0;
        g(0, 0) = s * (-1.5 / radius_ + 1.5 * r * r / (radius_ * radius_ * radius_));
        return g;
      }
      case Kind::WeierstrassPartial: {
        const Eigen::Vector2d grad = target_.front().gradient2(x);
        g(0, 0) = grad[0];
        g(0, 1) = grad[1];
        return g;
      }
      case Kind::Custom:
        if (custom_grad_) {
          g.row(0) = custom_grad_(x).transpose();
          return g;
        }
        [[fallthrough]];
      case Kind::TargetMimic:
      case Kind::Tabulated: {
        for (Eigen::Index j = 0; j < d; ++j) {
          const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
          Point xp = x, xm = x;
          xp[j] += h;
          xm[j] -= h;
          g(0, j) = ((*this)(xp)[0] - (*this)(xm)[0]) / (2.0 * h);
        }
        return g;
      }
    }
    throw ConfigError("scaling map: unknown kind");
  }

  /// Squared scaling-coordinate separation ||psi(x) - psi(x')||^2.
  [[nodiscard]] double separation_sq(const Point& x, const Point& xp) const {
    if (kind_ == Kind::Zero) return 0.0;
    return ((*this)(x) - (*this)(xp)).squaredNorm();
  }

 private:
  explicit ScalingMap(Kind kind) : kind_(kind) {}

  Kind kind_;
  int q_ = 1;
  Point threshold_;
  double radius_ = 0.0;
  std::vector<TargetFunction> target_;  // 0 or 1 element
  std::vector<double> tab_x_, tab_v_;
  std::function<double(const Point&)> custom_eval_;
  std::function<Vector(const Point&)> custom_grad_;
};

}  // namespace vskgp
