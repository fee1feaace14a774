#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>

namespace vskgp {

/// A point in the input domain; experiments use d = 1 or 2, the library is d-agnostic.
using Point = Eigen::VectorXd;

/// A finite set of points, one per row.
using PointSet = Eigen::MatrixXd;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Type-erased normalized kernel evaluation kappa(x, x').
using KernelFn = std::function<double(const Point&, const Point&)>;

/// Invalid configuration (bad parameters, unknown names, malformed specs). CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure (factorization breakdown after jitter escalation, fit failure). CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Operation not defined for the given object (e.g. gradient of a jump indicator at its step).
class UnsupportedOperation : public std::runtime_error {
 public:
  explicit UnsupportedOperation(const std::string& what) : std::runtime_error(what) {}
};

inline Point point1(double x) {
  Point p(1);
  p[0] = x;
  return p;
}

inline Point point2(double x1, double x2) {
  Point p(2);
  p[0] = x1;
  p[1] = x2;
  return p;
}

/// Strict lexicographic order on coordinates; used to canonicalize argument order
/// so that kernel evaluations are bit-exactly symmetric.
inline bool lex_less(const Point& a, const Point& b) {
  const Eigen::Index n = std::min(a.size(), b.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return a.size() < b.size();
}

}  // namespace vskgp
