#pragma once

/// TVLAP model construction: the Taylor-polynomial state-space model, its
/// classical special cases, and augmentation with an ARMA noise model.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tvlap/matrix.hpp"
#include "tvlap/state_space.hpp"
#include "tvlap/verify.hpp"

namespace tvlap {

struct TvlapConfig {
  unsigned order = 4;  ///< K
  double time_gap = 0.1;  ///< T
  NoiseDriver driver = NoiseDriver::G1;
  /// Process-noise covariance: 1x1 for G1, (K+1)x(K+1) for G2/G3.
  Matrix q = Matrix{{1e-4}};
  double r = 1.0;
  /// Threshold on |d1| in threshold-mode extrema detection.
  double epsilon = 1e-6;
  /// Initial covariance scale: P0 = infinity * I.
  double infinity = 1e5;
};

/// Dimension of w(n) for the given driver.
inline std::size_t process_noise_dim(unsigned order, NoiseDriver driver) {
  return driver == NoiseDriver::G1 ? 1 : order + 1;
}

/// Q = diag(values) zero-padded on the right to (K+1)x(K+1). Entry i is the
/// variance injected into derivative i; intended for G2/G3 drivers when a
/// variance list is shorter than the state.
inline Matrix padded_diagonal_q(unsigned order, std::span<const double> values) {
  if (values.size() > order + 1) {
    throw std::invalid_argument("padded_diagonal_q: " +
                                std::to_string(values.size()) +
                                " entries exceed state dimension " +
                                std::to_string(order + 1));
  }
  std::vector<double> diag(order + 1, 0.0);
  std::copy(values.begin(), values.end(), diag.begin());
  return Matrix::diagonal(diag);
}

namespace detail {

/// Symmetric and positive semidefinite up to a relative jitter.
inline bool is_symmetric_psd(const Matrix& q) {
  if (!q.is_square()) return false;
  const double scale = std::max(max_abs(q), 1.0);
  for (std::size_t i = 0; i < q.rows(); ++i) {
    for (std::size_t j = i + 1; j < q.cols(); ++j) {
      if (std::abs(q(i, j) - q(j, i)) > 1e-9 * scale) return false;
    }
  }
  const Matrix jittered =
      symmetrize(q) + (1e-12 * scale) * Matrix::identity(q.rows());
  try {
    solve_spd(jittered, Matrix(q.rows(), 1));
  } catch (const std::domain_error&) {
    return false;
  }
  return true;
}

inline void append_check_warnings(StateSpaceModel& model) {
  const SystemCheckReport report = check_system(model);
  if (!report.observable) {
    model.warnings.push_back("observability rank " +
                             std::to_string(report.obs_rank) + " < " +
                             std::to_string(report.dim) +
                             ": no steady-state convergence guarantee");
  }
  if (!report.controllable) {
    model.warnings.push_back("controllability rank " +
                             std::to_string(report.ctrl_rank) + " < " +
                             std::to_string(report.dim) +
                             ": no steady-state convergence guarantee");
  }
}

}  // namespace detail

inline void validate(const TvlapConfig& config) {
  if (config.order > kMaxOrder) {
    throw std::invalid_argument("order K=" + std::to_string(config.order) +
                                " exceeds the maximum " +
                                std::to_string(kMaxOrder));
  }
  detail::require_time_gap(config.time_gap);
  if (!(config.r > 0.0) || !std::isfinite(config.r)) {
    throw std::invalid_argument("measurement variance R must be positive");
  }
  if (!(config.epsilon > 0.0)) {
    throw std::invalid_argument("epsilon must be positive");
  }
  if (!(config.infinity > 0.0)) {
    throw std::invalid_argument("initial covariance scale must be positive");
  }
  const std::size_t expected = process_noise_dim(config.order, config.driver);
  if (config.q.rows() != expected || config.q.cols() != expected) {
    throw std::invalid_argument(
        "Q must be " + std::to_string(expected) + "x" +
        std::to_string(expected) + " for driver " + to_string(config.driver) +
        ", got " + config.q.shape());
  }
  if (!detail::is_symmetric_psd(config.q)) {
    throw std::invalid_argument("Q must be symmetric positive semidefinite");
  }
}

inline StateSpaceModel make_tvlap(const TvlapConfig& config) {
  validate(config);
  StateSpaceModel model;
  model.phi = build_transition(config.order, config.time_gap);
  model.h = build_measurement(config.order);
  model.g = build_noise_driver(config.order, config.time_gap, config.driver);
  model.q = config.q;
  model.r = config.r;
  model.order = config.order;
  model.time_gap = config.time_gap;
  detail::append_check_warnings(model);
  if (max_abs(model.q) == 0.0) {
    model.warnings.push_back("process noise Q is zero: the filter gain decays to zero");
  }
  return model;
}

/// Named special cases: Level and Static are K = 0, Holt and constant
/// velocity K = 1, constant acceleration K = 2.
enum class SpecialModel { Level, Holt, Static, CV, CA };

inline unsigned special_order(SpecialModel kind) {
  switch (kind) {
    case SpecialModel::Level:
    case SpecialModel::Static: return 0;
    case SpecialModel::Holt:
    case SpecialModel::CV: return 1;
    case SpecialModel::CA: return 2;
  }
  throw std::invalid_argument("unknown special model");
}

inline StateSpaceModel make_special(SpecialModel kind, double t, const Matrix& q,
                                    double r,
                                    NoiseDriver driver = NoiseDriver::G1) {
  TvlapConfig config;
  config.order = special_order(kind);
  config.time_gap = t;
  config.driver = driver;
  config.q = q;
  config.r = r;
  return make_tvlap(config);
}

/// ARMA noise model with transfer function
///
///   H(z) = (theta_0 + theta_1 z^-1 + ... + theta_q z^-q)
///        / (1 + phi_1 z^-1 + ... + phi_p z^-p).
///
/// Sign convention: `ar` holds phi_i exactly as they appear in the
/// denominator, so AR(1) noise v(n) = 0.5 v(n-1) + e(n) has ar = {-0.5}.
class ArmaSpec {
 public:
  ArmaSpec(std::vector<double> ar, std::vector<double> ma)
      : ar_(std::move(ar)), ma_(std::move(ma)) {
    if (ma_.empty()) {
      throw std::invalid_argument("ArmaSpec: moving-average list needs theta_0");
    }
    for (double v : ar_) {
      if (!std::isfinite(v)) throw std::invalid_argument("ArmaSpec: non-finite phi");
    }
    for (double v : ma_) {
      if (!std::isfinite(v)) throw std::invalid_argument("ArmaSpec: non-finite theta");
    }
    if (!ar_stable(ar_)) {
      throw std::invalid_argument("ArmaSpec: autoregressive polynomial is not stable");
    }
  }

  /// White noise: H(z) = theta_0.
  static ArmaSpec white(double theta0 = 1.0) { return ArmaSpec({}, {theta0}); }

  const std::vector<double>& ar() const { return ar_; }
  const std::vector<double>& ma() const { return ma_; }
  std::size_t p() const { return ar_.size(); }
  std::size_t q() const { return ma_.size() - 1; }
  /// r = max(p, q), the dimension of the noise state.
  std::size_t order() const { return std::max(p(), q()); }

  /// phi_j, zero beyond p.
  double ar_at(std::size_t j) const { return j >= 1 && j <= p() ? ar_[j - 1] : 0.0; }
  /// theta_j, zero beyond q.
  double ma_at(std::size_t j) const { return j < ma_.size() ? ma_[j] : 0.0; }

  /// Companion test: the p x p companion matrix C must satisfy
  /// ||C^200||_inf <= 1e-6 ||C||_inf. Rejects roots with modulus above
  /// roughly 0.93 as well as unstable ones.
  static bool ar_stable(const std::vector<double>& ar) {
    const std::size_t p = ar.size();
    if (p == 0) return true;
    Matrix c(p, p);
    for (std::size_t i = 0; i + 1 < p; ++i) c.set(i, i + 1, 1.0);
    for (std::size_t j = 0; j < p; ++j) c.set(p - 1, j, -ar[p - 1 - j]);
    const double base = norm_inf(c);
    Matrix power = Matrix::identity(p);
    for (int k = 0; k < 200; ++k) {
      power = power * c;
      if (norm_inf(power) > 1e100) return false;
    }
    return norm_inf(power) <= 1e-6 * base;
  }

 private:
  std::vector<double> ar_;
  std::vector<double> ma_;
};

/// xi(n+1) = xi_mat xi(n) + upsilon e(n),  v(n) = pi xi(n) + lambda e(n).
struct ArmaStateSpace {
  Matrix xi;       ///< r x r companion
  Matrix upsilon;  ///< r x 1, [0, ..., 0, 1]'
  Matrix pi;       ///< 1 x r, [beta_r, ..., beta_1]
  double lambda = 0.0;  ///< theta_0
  std::size_t dim() const { return xi.rows(); }
};

inline ArmaStateSpace arma_to_state_space(const ArmaSpec& spec) {
  const std::size_t r = spec.order();
  ArmaStateSpace out;
  out.lambda = spec.ma_at(0);
  if (r == 0) return out;
  out.xi = Matrix(r, r);
  for (std::size_t i = 0; i + 1 < r; ++i) out.xi.set(i, i + 1, 1.0);
  for (std::size_t j = 0; j < r; ++j) out.xi.set(r - 1, j, -spec.ar_at(r - j));
  out.upsilon = Matrix(r, 1);
  out.upsilon.set(r - 1, 0, 1.0);
  out.pi = Matrix(1, r);
  for (std::size_t j = 0; j < r; ++j) {
    const std::size_t i = r - j;  // beta index
    out.pi.set(0, j, spec.ma_at(i) - spec.ma_at(0) * spec.ar_at(i));
  }
  return out;
}

/// Trend model stacked with an ARMA measurement-noise state. The process
/// noise [W; e] and the measurement noise lambda*e share e(n), giving the
/// cross covariance E[w(n) v(n)'] = cross_cov.
struct AugmentedModel {
  StateSpaceModel stacked;
  Matrix cross_cov;  ///< dim x 1: [0; upsilon * innovation_variance * lambda]
  double innovation_variance = 0.0;  ///< var e(n)
  std::size_t base_dim = 0;
  ArmaStateSpace arma;
};

inline AugmentedModel augment(const StateSpaceModel& base, const ArmaSpec& spec,
                              double innovation_variance) {
  if (!(innovation_variance > 0.0) || !std::isfinite(innovation_variance)) {
    throw std::invalid_argument("augment: innovation variance must be positive");
  }
  AugmentedModel out;
  out.arma = arma_to_state_space(spec);
  out.innovation_variance = innovation_variance;
  out.base_dim = base.dim();

  const ArmaStateSpace& a = out.arma;
  StateSpaceModel& s = out.stacked;
  s.order = base.order;
  s.time_gap = base.time_gap;
  s.r = a.lambda * a.lambda * innovation_variance;
  if (a.dim() == 0) {
    s.phi = base.phi;
    s.h = base.h;
    s.g = base.g;
    s.q = base.q;
    s.warnings = base.warnings;
    out.cross_cov = Matrix(base.dim(), 1);
    return out;
  }
  s.phi = block_diag(base.phi, a.xi);
  s.h = hstack(base.h, a.pi);
  s.g = block_diag(base.g, a.upsilon);
  s.q = block_diag(base.q, Matrix{{innovation_variance}});
  out.cross_cov = vstack(Matrix(base.dim(), 1),
                         (innovation_variance * a.lambda) * a.upsilon);
  detail::append_check_warnings(s);
  return out;
}

}  // namespace tvlap
