#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "tvlap/matrix.hpp"

namespace tvlap {

/// Upper bound on the polynomial order. Observability and controllability
/// of the Taylor transition degrade numerically as the order grows.
inline constexpr unsigned kMaxOrder = 12;

/// Shape of the process-noise driver G.
///   G1: column [T^K/K!, ..., T, 1]', one disturbance on the top derivative.
///   G2: diag{T^K/K!, ..., T, 1}, one disturbance per state.
///   G3: identity.
enum class NoiseDriver { G1, G2, G3 };

inline std::string to_string(NoiseDriver d) {
  switch (d) {
    case NoiseDriver::G1: return "g1";
    case NoiseDriver::G2: return "g2";
    case NoiseDriver::G3: return "g3";
  }
  return "?";
}

/// x(n+1) = phi x(n) + g w(n),  y(n) = h x(n) + v(n),
/// cov(w) = q, var(v) = r.
struct StateSpaceModel {
  Matrix phi;
  Matrix h;
  Matrix g;
  Matrix q;
  double r = 1.0;

  /// Order K of the leading polynomial block; its size is order + 1.
  unsigned order = 0;
  /// Time gap T used to build the polynomial block.
  double time_gap = 1.0;

  /// Non-fatal findings from construction, e.g. a failed rank check.
  std::vector<std::string> warnings;

  std::size_t dim() const { return phi.rows(); }
};

namespace detail {

inline double factorial(unsigned k) {
  double f = 1.0;
  for (unsigned i = 2; i <= k; ++i) f *= i;
  return f;
}

/// T^k / k!
inline double taylor_weight(double t, unsigned k) {
  return std::pow(t, static_cast<double>(k)) / factorial(k);
}

inline void require_time_gap(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw std::invalid_argument("time gap T must be positive and finite");
  }
}

}  // namespace detail

/// Taylor transition: entry (i, j) = T^(j-i) / (j-i)! for j >= i.
inline Matrix build_transition(unsigned order, double t) {
  detail::require_time_gap(t);
  const std::size_t n = order + 1;
  Matrix phi(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      phi.set(i, j, detail::taylor_weight(t, static_cast<unsigned>(j - i)));
    }
  }
  return phi;
}

/// Row [1, 0, ..., 0]: only the trend value is measured.
inline Matrix build_measurement(unsigned order) {
  Matrix h(1, order + 1);
  h.set(0, 0, 1.0);
  return h;
}

inline Matrix build_noise_driver(unsigned order, double t, NoiseDriver variant) {
  detail::require_time_gap(t);
  const std::size_t n = order + 1;
  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) {
    weights[i] = detail::taylor_weight(t, static_cast<unsigned>(order - i));
  }
  switch (variant) {
    case NoiseDriver::G1: return Matrix::column(weights);
    case NoiseDriver::G2: return Matrix::diagonal(weights);
    case NoiseDriver::G3: return Matrix::identity(n);
  }
  throw std::invalid_argument("unknown noise driver");
}

}  // namespace tvlap
