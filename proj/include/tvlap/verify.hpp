#pragma once

/// Executable observability / controllability checks for linear
/// time-invariant models, and the power identity Phi(T)^k = Phi(kT) of the
/// Taylor transition.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

#include "tvlap/matrix.hpp"
#include "tvlap/state_space.hpp"

namespace tvlap {

struct SystemCheckReport {
  bool observable = false;
  bool controllable = false;
  std::size_t obs_rank = 0;
  std::size_t ctrl_rank = 0;
  std::size_t dim = 0;
  /// max |Phi(T)^k - Phi(kT)| over k = 1..K+1 on the polynomial block.
  double phi_power_max_err = 0.0;
};

/// Rows h, h*phi, ..., h*phi^(n-1).
inline Matrix observability_matrix(const Matrix& phi, const Matrix& h) {
  if (!phi.is_square()) {
    throw std::invalid_argument("observability_matrix: phi is " + phi.shape());
  }
  if (h.cols() != phi.rows()) {
    throw std::invalid_argument("observability_matrix: h is " + h.shape() +
                                ", phi is " + phi.shape());
  }
  Matrix out;
  Matrix block = h;
  for (std::size_t k = 0; k < phi.rows(); ++k) {
    out = vstack(out, block);
    block = block * phi;
  }
  return out;
}

/// Column blocks g, phi*g, ..., phi^(n-1)*g.
inline Matrix controllability_matrix(const Matrix& phi, const Matrix& g) {
  if (!phi.is_square()) {
    throw std::invalid_argument("controllability_matrix: phi is " +
                                phi.shape());
  }
  if (g.rows() != phi.rows()) {
    throw std::invalid_argument("controllability_matrix: g is " + g.shape() +
                                ", phi is " + phi.shape());
  }
  Matrix out;
  Matrix block = g;
  for (std::size_t k = 0; k < phi.rows(); ++k) {
    out = hstack(out, block);
    block = phi * block;
  }
  return out;
}

/// Rows alpha_i^0, alpha_i^1, ..., alpha_i^(cols-1).
inline Matrix vandermonde(std::span<const double> nodes, std::size_t cols) {
  Matrix v(nodes.size(), cols);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    double p = 1.0;
    for (std::size_t j = 0; j < cols; ++j) {
      v.set(i, j, p);
      p *= nodes[i];
    }
  }
  return v;
}

/// Rank after scaling every nonzero row, then every nonzero column, to unit
/// max-norm. Diagonal scaling preserves rank but removes the T^k/k! column
/// and row factors that otherwise sink below the pivot threshold.
inline std::size_t equilibrated_rank(const Matrix& a,
                                     double tol = kDefaultRankTolerance) {
  std::vector<double> w(a.entries().begin(), a.entries().end());
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  for (std::size_t i = 0; i < rows; ++i) {
    double m = 0.0;
    for (std::size_t j = 0; j < cols; ++j) m = std::max(m, std::abs(w[i * cols + j]));
    if (m > 0.0) {
      for (std::size_t j = 0; j < cols; ++j) w[i * cols + j] /= m;
    }
  }
  for (std::size_t j = 0; j < cols; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < rows; ++i) m = std::max(m, std::abs(w[i * cols + j]));
    if (m > 0.0) {
      for (std::size_t i = 0; i < rows; ++i) w[i * cols + j] /= m;
    }
  }
  return rank(Matrix(rows, cols, std::move(w)), tol);
}

/// max over k in 1..order+1 of max |Phi(T)^k - Phi(kT)|.
inline double phi_power_error(unsigned order, double t) {
  const Matrix phi = build_transition(order, t);
  Matrix power = Matrix::identity(order + 1);
  double worst = 0.0;
  for (unsigned k = 1; k <= order + 1; ++k) {
    power = power * phi;
    worst = std::max(worst, max_abs(power - build_transition(order, k * t)));
  }
  return worst;
}

inline SystemCheckReport check_system(const StateSpaceModel& model,
                                      double tol = kDefaultRankTolerance) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("check_system: tol must be positive");
  }
  SystemCheckReport report;
  report.dim = model.dim();
  report.obs_rank =
      equilibrated_rank(observability_matrix(model.phi, model.h), tol);
  report.ctrl_rank =
      equilibrated_rank(controllability_matrix(model.phi, model.g), tol);
  report.observable = report.obs_rank == report.dim;
  report.controllable = report.ctrl_rank == report.dim;
  if (model.order + 1 <= model.dim()) {
    report.phi_power_max_err = phi_power_error(model.order, model.time_gap);
  }
  return report;
}

}  // namespace tvlap
