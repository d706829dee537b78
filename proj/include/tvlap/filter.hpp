#pragma once

/// Discrete Kalman recursion for StateSpaceModel: Joseph-form measurement
/// update, multi-step forecasting, steady-state covariance search, and the
/// variant for augmented models whose process and measurement noise are
/// correlated.

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tvlap/matrix.hpp"
#include "tvlap/model.hpp"
#include "tvlap/state_space.hpp"

namespace tvlap {

struct FilterState {
  long n = -1;  ///< index of the last consumed observation
  Matrix xhat;  ///< posterior mean, dim x 1
  Matrix p;     ///< posterior covariance
  /// Last consumed observation. The correlated-noise time update needs it.
  std::optional<double> last_y;
};

struct StepResult {
  FilterState state;
  double innovation = 0.0;
  double innovation_variance = 0.0;
};

struct ForecastPoint {
  unsigned k = 0;  ///< steps ahead
  Matrix xhat;     ///< predicted mean
  Matrix p;        ///< predicted covariance
};

inline FilterState init_state(std::size_t dim, double infinity = 1e5) {
  if (dim < 1) throw std::invalid_argument("init_state: dim must be >= 1");
  if (!(infinity > 0.0)) throw std::invalid_argument("init_state: infinity must be positive");
  return FilterState{-1, Matrix(dim, 1), infinity * Matrix::identity(dim), std::nullopt};
}

namespace detail {

inline void require_compatible(const StateSpaceModel& model, const FilterState& state) {
  if (state.xhat.rows() != model.dim() || state.xhat.cols() != 1 ||
      state.p.rows() != model.dim() || state.p.cols() != model.dim()) {
    throw std::invalid_argument("filter state " + state.xhat.shape() + "/" +
                                state.p.shape() + " does not match model dimension " +
                                std::to_string(model.dim()));
  }
}

inline Matrix process_covariance(const StateSpaceModel& model) {
  return model.g * model.q * transpose(model.g);
}

/// Measurement update with Joseph-form covariance. `prior` holds x- and P-.
inline StepResult measurement_update(const StateSpaceModel& model, const Matrix& x_prior,
                                     const Matrix& p_prior, long n, double y) {
  if (!std::isfinite(y)) throw std::invalid_argument("filter: non-finite observation");
  const Matrix ph = p_prior * transpose(model.h);
  const Matrix s = model.h * ph + Matrix{{model.r}};
  if (!(s(0, 0) > 0.0)) {
    throw std::domain_error("filter: innovation variance " + std::to_string(s(0, 0)) +
                            " is not positive");
  }
  const Matrix gain = transpose(solve_spd(s, transpose(ph)));
  const double innovation = y - (model.h * x_prior)(0, 0);
  const Matrix xhat = x_prior + innovation * gain;
  const Matrix a = Matrix::identity(model.dim()) - gain * model.h;
  const Matrix p = a * p_prior * transpose(a) + gain * Matrix{{model.r}} * transpose(gain);
  return StepResult{FilterState{n, xhat, symmetrize(p), y}, innovation, s(0, 0)};
}

}  // namespace detail

/// One time update followed by one measurement update; the result is the
/// posterior at n + 1 given all observations so far.
inline StepResult step(const StateSpaceModel& model, const FilterState& state, double y) {
  detail::require_compatible(model, state);
  const Matrix x_prior = model.phi * state.xhat;
  const Matrix p_prior =
      model.phi * state.p * transpose(model.phi) + detail::process_covariance(model);
  return detail::measurement_update(model, x_prior, p_prior, state.n + 1, y);
}

/// Kalman step for x(n+1) = phi x(n) + w(n), y(n) = h x(n) + v(n) with
/// E[w(n) v(n)'] = M. v(n) is independent of x(n), so the measurement update
/// is the standard one; the correlation enters the following time update.
/// Subtracting J (y - h x - v) with J = M / R from the state equation gives
///
///   x(n+1) = (phi - J h) x(n) + J y(n) + (w(n) - J v(n)),
///
/// whose noise has covariance G Q G' - M M' / R and is uncorrelated with
/// v(n). When M = 0, or no earlier observation exists, this is `step`.
inline StepResult step_correlated(const AugmentedModel& model, const FilterState& state,
                                  double y) {
  const StateSpaceModel& s = model.stacked;
  detail::require_compatible(s, state);
  const bool correlated = max_abs(model.cross_cov) > 0.0 && s.r > 0.0;
  if (!correlated || !state.last_y) return step(s, state, y);

  const Matrix j = (1.0 / s.r) * model.cross_cov;
  const Matrix phi_eff = s.phi - j * s.h;
  const Matrix x_prior = phi_eff * state.xhat + *state.last_y * j;
  const Matrix q_eff = detail::process_covariance(s) -
                       (1.0 / s.r) * model.cross_cov * transpose(model.cross_cov);
  const Matrix p_prior = symmetrize(phi_eff * state.p * transpose(phi_eff) + q_eff);
  return detail::measurement_update(s, x_prior, p_prior, state.n + 1, y);
}

/// Time updates only: mean and covariance k = 1..steps ahead.
inline std::vector<ForecastPoint> forecast(const StateSpaceModel& model,
                                           const FilterState& state, unsigned steps) {
  if (steps < 1) throw std::invalid_argument("forecast: steps must be >= 1");
  detail::require_compatible(model, state);
  const Matrix gqg = detail::process_covariance(model);
  const Matrix phi_t = transpose(model.phi);
  std::vector<ForecastPoint> out;
  out.reserve(steps);
  Matrix x = state.xhat;
  Matrix p = state.p;
  for (unsigned k = 1; k <= steps; ++k) {
    x = model.phi * x;
    p = symmetrize(model.phi * p * phi_t + gqg);
    out.push_back(ForecastPoint{k, x, p});
  }
  return out;
}

struct RiccatiResult {
  bool converged = false;
  Matrix p_steady;  ///< posterior covariance at the last iteration
  unsigned iterations = 0;
};

/// Iterates the data-independent covariance recursion (time update, then
/// measurement update) from `p0` until successive posteriors differ by less
/// than `tol` in the infinity norm.
inline RiccatiResult riccati_converged(const StateSpaceModel& model, const Matrix& p0,
                                       unsigned max_iter, double tol) {
  if (max_iter < 1) throw std::invalid_argument("riccati_converged: max_iter must be >= 1");
  FilterState state{-1, Matrix(model.dim(), 1), p0, std::nullopt};
  RiccatiResult result;
  for (unsigned i = 1; i <= max_iter; ++i) {
    // The observation value does not influence the covariance.
    FilterState next = step(model, state, 0.0).state;
    const double change = norm_inf(next.p - state.p);
    state = std::move(next);
    result.iterations = i;
    if (change < tol) {
      result.converged = true;
      break;
    }
  }
  result.p_steady = state.p;
  return result;
}

inline RiccatiResult riccati_converged(const StateSpaceModel& model, unsigned max_iter,
                                       double tol, double infinity = 1e5) {
  return riccati_converged(model, infinity * Matrix::identity(model.dim()), max_iter, tol);
}

}  // namespace tvlap
