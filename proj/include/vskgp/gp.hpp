#pragma once

#include "vskgp/common.hpp"
#include "vskgp/kernels.hpp"
#include "vskgp/rng.hpp"

#include <atomic>
#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <utility>

namespace vskgp {

/// Covariance function sigma_f^2 kappa(x,x') + sigma_n^2 delta_xx' built on a
/// normalized kernel. lambda = sigma_n^2 / sigma_f^2 is the internal form; sigma_f
/// re-enters only when variances are reported.
struct CovarianceModel {
  KernelFn kernel;
  double sigma_f = 1.0;
  double sigma_n = 0.0;

  [[nodiscard]] double lambda() const {
    if (!(sigma_f > 0.0)) throw ConfigError("covariance model: sigma_f must be positive");
    if (sigma_n < 0.0) throw ConfigError("covariance model: sigma_n must be non-negative");
    return (sigma_n * sigma_n) / (sigma_f * sigma_f);
  }
};

class TrainingSet {
 public:
  TrainingSet(PointSet x, Vector y) : x_(std::move(x)), y_(std::move(y)) {
    if (x_.rows() < 1) throw ConfigError("training set: need at least one point");
    if (x_.rows() != y_.size()) throw ConfigError("training set: point/response count mismatch");
    for (Eigen::Index i = 0; i < x_.rows(); ++i)
      for (Eigen::Index j = i + 1; j < x_.rows(); ++j)
        if ((x_.row(i) - x_.row(j)).cwiseAbs().maxCoeff() <= 1e-12)
          throw ConfigError("training set: points must be pairwise distinct");
  }

  [[nodiscard]] const PointSet& points() const { return x_; }
  [[nodiscard]] const Vector& responses() const { return y_; }
  [[nodiscard]] Eigen::Index size() const { return x_.rows(); }
  [[nodiscard]] Eigen::Index dim() const { return x_.cols(); }

 private:
  PointSet x_;
  Vector y_;
};

struct JitteredFactor {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;
};

/// Cholesky with a jitter ladder: plain attempt first, then jitter from
/// 1e-12*mean(diag) escalating x10 up to 1e-6*mean(diag).
inline JitteredFactor factorize_spd(const Matrix& a, const char* context) {
  JitteredFactor out;
  out.llt.compute(a);
  if (out.llt.info() == Eigen::Success) return out;
  const double scale = a.diagonal().mean();
  if (!(scale > 0.0))
    throw NumericalError(std::string(context) + ": matrix has non-positive diagonal scale");
  double jitter = 1e-12 * scale;
  const double max_jitter = 1e-6 * scale;
  while (jitter <= max_jitter * (1.0 + 1e-15)) {
    Matrix shifted = a;
    shifted.diagonal().array() += jitter;
    out.llt.compute(shifted);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = jitter;
      return out;
    }
    jitter *= 10.0;
  }
  std::ostringstream msg;
  msg << context << ": factorization failed, final jitter tried " << max_jitter;
  throw NumericalError(msg.str());
}

struct Interval {
  double lower;
  double upper;
};

/// mean +/- z_{1-alpha/2} * sqrt(variance).
inline Interval confidence_interval(double mean, double variance, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("confidence interval: alpha must lie in (0,1)");
  if (variance < 0.0) throw ConfigError("confidence interval: negative variance");
  const double z = normal_quantile(1.0 - 0.5 * alpha);
  const double half = z * std::sqrt(variance);
  return {mean - half, mean + half};
}

struct Prediction {
  double mean;
  double variance;
  double lower;
  double upper;
};

/// Factorized Kriging system. Immutable after train(); point predictions are safe
/// to run concurrently.
class TrainedGP {
 public:
  TrainedGP(CovarianceModel model, TrainingSet data)
      : model_(std::move(model)),
        data_(std::move(data)),
        lambda_(model_.lambda()),
        clamp_count_(std::make_shared<std::atomic<long>>(0)) {
    kmat_ = gram_matrix(model_.kernel, data_.points());
    Matrix reg = kmat_;
    reg.diagonal().array() += lambda_;
    auto f = factorize_spd(reg, "train");
    factor_ = std::move(f.llt);
    jitter_ = f.jitter;
    if (lambda_ == 0.0) {
      noise_free_factor_ = factor_;
      noise_free_jitter_ = jitter_;
    } else {
      auto nf = factorize_spd(kmat_, "train (noise-free factor)");
      noise_free_factor_ = std::move(nf.llt);
      noise_free_jitter_ = nf.jitter;
    }
    alpha_ = factor_.solve(data_.responses());
  }

  [[nodiscard]] const CovarianceModel& model() const { return model_; }
  [[nodiscard]] const TrainingSet& data() const { return data_; }
  [[nodiscard]] const Matrix& kernel_matrix() const { return kmat_; }
  [[nodiscard]] const Vector& alpha() const { return alpha_; }
  [[nodiscard]] double lambda() const { return lambda_; }
  [[nodiscard]] double jitter_used() const { return jitter_; }
  [[nodiscard]] long negative_variance_clamps() const { return clamp_count_->load(); }

  [[nodiscard]] Vector kernel_vector(const Point& x) const {
    Vector k(data_.size());
    for (Eigen::Index i = 0; i < data_.size(); ++i)
      k[i] = model_.kernel(x, data_.points().row(i).transpose());
    return k;
  }

  [[nodiscard]] double posterior_mean(const Point& x) const { return kernel_vector(x).dot(alpha_); }
  [[nodiscard]] double posterior_mean(double x) const { return posterior_mean(point1(x)); }

  [[nodiscard]] double posterior_variance(const Point& x, bool include_noise = true) const {
    const Vector k = kernel_vector(x);
    const double prior = model_.kernel(x, x);
    double q = prior - k.dot(factor_.solve(k));
    if (q < 0.0) {
      clamp_count_->fetch_add(1, std::memory_order_relaxed);
      q = 0.0;
    }
    double var = model_.sigma_f * model_.sigma_f * q;
    if (include_noise) var += model_.sigma_n * model_.sigma_n;
    return var;
  }

  /// Noise-free power function P(x) = sqrt(kappa(x,x) - k(x)^T K^{-1} k(x)).
  [[nodiscard]] double power_function(const Point& x) const {
    const Vector k = kernel_vector(x);
    const double q = model_.kernel(x, x) - k.dot(noise_free_factor_.solve(k));
    return std::sqrt(std::max(0.0, q));
  }

  /// Smoothed data (K + lambda I)^{-1} K y; equals y itself at lambda = 0.
  [[nodiscard]] Vector smoothed_data() const { return factor_.solve(kmat_ * data_.responses()); }

  [[nodiscard]] Prediction predict(const Point& x, double alpha = 0.05, bool include_noise = true) const {
    Prediction p;
    p.mean = posterior_mean(x);
    p.variance = posterior_variance(x, include_noise);
    const Interval ci = confidence_interval(p.mean, p.variance, alpha);
    p.lower = ci.lower;
    p.upper = ci.upper;
    return p;
  }

  /// Mean and variance on a probe set in one pass (one triangular solve per batch).
  struct Batch {
    Vector mean;
    Vector variance;
  };
  [[nodiscard]] Batch predict_batch(const PointSet& probes, bool include_noise = true) const {
    const Matrix kx = cross_matrix(model_.kernel, probes, data_.points());
    const Matrix solved = factor_.solve(kx.transpose());
    Batch out;
    out.mean = kx * alpha_;
    out.variance.resize(probes.rows());
    const double sf2 = model_.sigma_f * model_.sigma_f;
    const double sn2 = model_.sigma_n * model_.sigma_n;
    for (Eigen::Index i = 0; i < probes.rows(); ++i) {
      const Point xi = probes.row(i).transpose();
      double q = model_.kernel(xi, xi) - kx.row(i).dot(solved.col(i));
      if (q < 0.0) {
        clamp_count_->fetch_add(1, std::memory_order_relaxed);
        q = 0.0;
      }
      out.variance[i] = sf2 * q + (include_noise ? sn2 : 0.0);
    }
    return out;
  }

  /// Max over probes of |k(x)^T (K+lambda I)^{-1} y - k(x)^T K^{-1} yhat|; the
  /// push-through identity makes this zero in exact arithmetic.
  [[nodiscard]] double smoothed_interpolant_identity_check(const PointSet& probes) const {
    const Vector yhat = smoothed_data();
    const Vector beta = noise_free_factor_.solve(yhat);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < probes.rows(); ++i) {
      const Vector k = kernel_vector(probes.row(i).transpose());
      worst = std::max(worst, std::abs(k.dot(alpha_) - k.dot(beta)));
    }
    return worst;
  }

 private:
  CovarianceModel model_;
  TrainingSet data_;
  double lambda_;
  Matrix kmat_;
  Eigen::LLT<Matrix> factor_;
  Eigen::LLT<Matrix> noise_free_factor_;
  double jitter_ = 0.0;
  double noise_free_jitter_ = 0.0;
  Vector alpha_;
  std::shared_ptr<std::atomic<long>> clamp_count_;
};

inline TrainedGP train(CovarianceModel model, TrainingSet data) {
  return TrainedGP(std::move(model), std::move(data));
}

/// Batched noise-free power function for a bare (kernel, X) pair.
inline Vector power_function(const KernelFn& kernel, const PointSet& X, const PointSet& probes) {
  const Matrix k = gram_matrix(kernel, X);
  auto f = factorize_spd(k, "power function");
  Vector out(probes.rows());
  for (Eigen::Index i = 0; i < probes.rows(); ++i) {
    const Point x = probes.row(i).transpose();
    Vector kx(X.rows());
    for (Eigen::Index j = 0; j < X.rows(); ++j) kx[j] = kernel(x, X.row(j).transpose());
    out[i] = std::sqrt(std::max(0.0, kernel(x, x) - kx.dot(f.llt.solve(kx))));
  }
  return out;
}

/// Draws `count` paths of the prior (or the posterior, when conditioned) over the
/// grid rows. Deterministic given the seed; sigma_f = 0 degenerates to zero paths.
inline Matrix sample_paths(const CovarianceModel& model, const PointSet& grid, int count,
                           std::uint64_t seed, const std::optional<TrainingSet>& condition_on = {}) {
  if (count < 1) throw ConfigError("sample_paths: need count >= 1");
  const Eigen::Index m = grid.rows();
  Vector mean = Vector::Zero(m);
  Matrix cov;
  const double sf2 = model.sigma_f * model.sigma_f;
  if (condition_on) {
    const TrainedGP gp(model, *condition_on);
    const Matrix kx = cross_matrix(model.kernel, grid, condition_on->points());
    mean = kx * gp.alpha();
    Matrix reg = gp.kernel_matrix();
    reg.diagonal().array() += gp.lambda();
    const auto rf = factorize_spd(reg, "sample_paths");
    cov = sf2 * (gram_matrix(model.kernel, grid) - kx * rf.llt.solve(kx.transpose()));
  } else {
    cov = sf2 * gram_matrix(model.kernel, grid);
  }
  Matrix paths(count, m);
  cov = 0.5 * (cov + cov.transpose());
  // fully determined (or sigma_f = 0): the covariance is zero up to round-off
  if (sf2 == 0.0 || cov.diagonal().maxCoeff() <= 1e-12 * sf2) {
    for (int r = 0; r < count; ++r) paths.row(r) = mean.transpose();
    return paths;
  }
  const auto f = factorize_spd(cov, "sample_paths covariance");
  const Matrix l = f.llt.matrixL();
  CounterRng rng(seed);
  for (int r = 0; r < count; ++r) paths.row(r) = (mean + l * rng.gaussian_vector(m)).transpose();
  return paths;
}

}  // namespace vskgp
