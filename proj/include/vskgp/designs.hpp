#pragma once

#include "vskgp/common.hpp"
#include "vskgp/rng.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace vskgp {

enum class DesignKind { Equispaced, Halton, Chebyshev, TensorGrid };

/// Radical-inverse in the given base; index 1 gives 1/base.
inline double radical_inverse(std::uint64_t index, unsigned base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

/// N equispaced points on [a,b] including both endpoints; the midpoint for N = 1.
inline PointSet equispaced(int n, double a, double b) {
  if (n < 1) throw ConfigError("equispaced: need n >= 1");
  if (!(b > a)) throw ConfigError("equispaced: degenerate domain");
  PointSet x(n, 1);
  if (n == 1) {
    x(0, 0) = 0.5 * (a + b);
    return x;
  }
  const double h = (b - a) / static_cast<double>(n - 1);
  for (int i = 0; i < n; ++i) x(i, 0) = a + h * i;
  x(n - 1, 0) = b;
  return x;
}

/// First n Halton points in d dimensions starting at index 1 + skip (prime bases
/// 2, 3, 5, ...; base-2 van der Corput in 1D), mapped affinely into [a,b]^d.
inline PointSet halton(int n, int dim, double a, double b, int skip = 0) {
  if (n < 1 || dim < 1) throw ConfigError("halton: need n >= 1 and dim >= 1");
  if (!(b > a)) throw ConfigError("halton: degenerate domain");
  static constexpr unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};
  if (dim > static_cast<int>(std::size(primes))) throw ConfigError("halton: dimension too large");
  PointSet x(n, dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j)
      x(i, j) = a + (b - a) * radical_inverse(static_cast<std::uint64_t>(i + 1 + skip), primes[j]);
  return x;
}

/// N Chebyshev-Gauss points cos((2i-1)pi/(2N)) mapped to [a,b], sorted ascending.
inline PointSet chebyshev(int n, double a, double b) {
  if (n < 1) throw ConfigError("chebyshev: need n >= 1");
  if (!(b > a)) throw ConfigError("chebyshev: degenerate domain");
  PointSet x(n, 1);
  for (int i = 1; i <= n; ++i) {
    const double t = std::cos((2.0 * i - 1.0) * std::numbers::pi / (2.0 * n));
    x(n - i, 0) = 0.5 * (a + b) + 0.5 * (b - a) * t;  // descending in i -> ascending rows
  }
  return x;
}

/// Cartesian product of per-axis equispaced sets (n points per axis, d axes).
inline PointSet tensor_grid(int n_per_axis, int dim, double a, double b) {
  if (n_per_axis < 1 || dim < 1) throw ConfigError("tensor grid: need n >= 1 and dim >= 1");
  const PointSet axis = equispaced(n_per_axis, a, b);
  Eigen::Index total = 1;
  for (int j = 0; j < dim; ++j) total *= n_per_axis;
  PointSet x(total, dim);
  for (Eigen::Index i = 0; i < total; ++i) {
    Eigen::Index rem = i;
    for (int j = dim - 1; j >= 0; --j) {
      x(i, j) = axis(rem % n_per_axis, 0);
      rem /= n_per_axis;
    }
  }
  return x;
}

struct DesignSpec {
  DesignKind kind = DesignKind::Equispaced;
  int n = 1;          // total count (per axis for TensorGrid)
  int dim = 1;
  double lo = 0.0;
  double hi = 1.0;
  bool include_endpoints = true;  // equispaced only; false shifts to an open grid
  int halton_skip = 0;
};

inline PointSet generate(const DesignSpec& spec) {
  switch (spec.kind) {
    case DesignKind::Equispaced: {
      if (spec.include_endpoints) return equispaced(spec.n, spec.lo, spec.hi);
      const double h = (spec.hi - spec.lo) / (spec.n + 1);
      return equispaced(spec.n, spec.lo + h, spec.hi - h);
    }
    case DesignKind::Halton: return halton(spec.n, spec.dim, spec.lo, spec.hi, spec.halton_skip);
    case DesignKind::Chebyshev: return chebyshev(spec.n, spec.lo, spec.hi);
    case DesignKind::TensorGrid: return tensor_grid(spec.n, spec.dim, spec.lo, spec.hi);
  }
  throw ConfigError("generate: unknown design kind");
}

/// y + sigma * z with z iid standard normal from the seeded counter generator.
inline Vector add_noise(const Vector& y, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw ConfigError("add_noise: sigma must be non-negative");
  if (sigma == 0.0) return y;
  CounterRng rng(seed);
  return y + sigma * rng.gaussian_vector(y.size());
}

}  // namespace vskgp
