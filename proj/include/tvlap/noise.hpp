#pragma once

/// Measurement-noise statistics: R from historical blocks via polynomial
/// detrending, ARMA impulse responses, and the innovation variance of the
/// ARMA driver obtained from R through the squared impulse-response sum.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tvlap/matrix.hpp"
#include "tvlap/model.hpp"

namespace tvlap {

struct ResidualReport {
  unsigned chosen_order = 0;
  std::vector<double> residuals;
  double r_estimate = 0.0;
  bool stationarity_passed = false;
};

namespace detail {

inline double mean(std::span<const double> x) {
  return x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / x.size();
}

/// Sample variance with denominator n - 1.
inline double sample_variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

/// Least-squares polynomial of the given order on t_i = i / (n - 1).
inline std::vector<double> polynomial_residuals(std::span<const double> block,
                                                unsigned order) {
  const std::size_t n = block.size();
  const std::size_t m = order + 1;
  Matrix gram(m, m);
  Matrix rhs(m, 1);
  std::vector<double> powers(2 * m - 1);
  std::vector<double> gram_sums(2 * m - 1, 0.0);
  std::vector<double> rhs_sums(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    double p = 1.0;
    for (std::size_t k = 0; k < powers.size(); ++k) {
      powers[k] = p;
      p *= t;
    }
    for (std::size_t k = 0; k < gram_sums.size(); ++k) gram_sums[k] += powers[k];
    for (std::size_t k = 0; k < m; ++k) rhs_sums[k] += powers[k] * block[i];
  }
  for (std::size_t i = 0; i < m; ++i) {
    rhs.set(i, 0, rhs_sums[i]);
    for (std::size_t j = 0; j < m; ++j) gram.set(i, j, gram_sums[i + j]);
  }
  Matrix coeffs;
  try {
    coeffs = solve_spd(gram, rhs);
  } catch (const std::domain_error&) {
    const double ridge = 1e-12 * trace(gram);
    coeffs = solve_spd(gram + ridge * Matrix::identity(m), rhs);
  }
  std::vector<double> residuals(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    double fit = 0.0;
    for (std::size_t k = m; k-- > 0;) fit = fit * t + coeffs(k, 0);
    residuals[i] = block[i] - fit;
  }
  return residuals;
}

/// Half-split heuristic for wide-sense stationarity of residuals:
/// matching half means (within half a pooled std), half-variance ratio in
/// [1/2.5, 2.5], and lag-1 autocorrelation inside (-0.9, 0.9).
inline bool looks_stationary(std::span<const double> residuals) {
  const std::size_t half = residuals.size() / 2;
  const auto first = residuals.subspan(0, half);
  const auto second = residuals.subspan(half);
  const double var1 = sample_variance(first);
  const double var2 = sample_variance(second);
  const double pooled_sd = std::sqrt(0.5 * (var1 + var2));
  if (std::abs(mean(first) - mean(second)) > 0.5 * pooled_sd) return false;

  if (var1 > 0.0 || var2 > 0.0) {
    if (var1 == 0.0 || var2 == 0.0) return false;
    const double ratio = var1 / var2;
    if (ratio < 1.0 / 2.5 || ratio > 2.5) return false;
  }

  const double m = mean(residuals);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    const double d = residuals[i] - m;
    den += d * d;
    if (i > 0) num += d * (residuals[i - 1] - m);
  }
  const double rho = den > 0.0 ? num / den : 0.0;
  return rho > -0.9 && rho < 0.9;
}

}  // namespace detail

/// Picks the smallest detrending order in 0..max_order whose residuals pass
/// the stationarity heuristic and returns their sample variance.
inline ResidualReport estimate_r(std::span<const double> block, unsigned max_order) {
  if (block.size() < 4 * (static_cast<std::size_t>(max_order) + 1)) {
    throw std::invalid_argument("estimate_r: block of " +
                                std::to_string(block.size()) +
                                " samples is too short for order " +
                                std::to_string(max_order));
  }
  for (double v : block) {
    if (!std::isfinite(v)) throw std::invalid_argument("estimate_r: non-finite sample");
  }
  ResidualReport report;
  for (unsigned order = 0; order <= max_order; ++order) {
    report.chosen_order = order;
    report.residuals = detail::polynomial_residuals(block, order);
    report.r_estimate = detail::sample_variance(report.residuals);
    report.stationarity_passed = detail::looks_stationary(report.residuals);
    if (report.stationarity_passed) break;
  }
  return report;
}

/// Impulse response of H(z) by the difference equation
/// h(n) = theta_n - sum_j phi_j h(n - j). Pure MA specs return exactly
/// theta_0..theta_q. Otherwise iteration stops at the first n >= max(q, 10)
/// where |h(n)| / (1 - rho) < tol, rho being the largest ratio
/// |h(i)/h(i-1)| over the last ten terms clipped to [0, 0.999], or at
/// max_terms.
inline std::vector<double> impulse_response(const ArmaSpec& spec, double tol = 1e-12,
                                            std::size_t max_terms = 100000) {
  if (!(tol > 0.0)) throw std::invalid_argument("impulse_response: tol must be positive");
  if (max_terms < 1) throw std::invalid_argument("impulse_response: max_terms must be >= 1");
  if (spec.p() == 0) {
    std::vector<double> h(spec.ma().begin(), spec.ma().end());
    if (h.size() > max_terms) h.resize(max_terms);
    return h;
  }
  std::vector<double> h;
  h.reserve(std::min<std::size_t>(max_terms, 4096));
  const std::size_t min_terms = std::max<std::size_t>(spec.q(), 10);
  for (std::size_t n = 0; n < max_terms; ++n) {
    double v = spec.ma_at(n);
    for (std::size_t j = 1; j <= std::min(spec.p(), n); ++j) v -= spec.ar_at(j) * h[n - j];
    h.push_back(v);
    if (n < min_terms) continue;
    double rho = 0.0;
    for (std::size_t i = n - 9; i <= n; ++i) {
      const double prev = std::abs(h[i - 1]);
      const double cur = std::abs(h[i]);
      const double ratio = prev > 0.0 ? cur / prev : (cur > 0.0 ? 1.0 : 0.0);
      rho = std::max(rho, ratio);
    }
    rho = std::clamp(rho, 0.0, 0.999);
    if (std::abs(v) / (1.0 - rho) < tol) break;
  }
  return h;
}

/// Sum of h(n)^2 with relative truncation error about `tol`.
inline double impulse_energy(const ArmaSpec& spec, double tol = 1e-10,
                             std::size_t max_terms = 100000) {
  auto energy = [](const std::vector<double>& h) {
    double s = 0.0;
    for (double v : h) s += v * v;
    return s;
  };
  // The tail of sum h^2 is bounded by the square of the |h| tail bound, so a
  // coarse pass sets the absolute tolerance for the final one.
  const double coarse = energy(impulse_response(spec, 1e-6, max_terms));
  if (coarse == 0.0) return 0.0;
  return energy(impulse_response(spec, std::sqrt(tol * coarse), max_terms));
}

/// Variance of the white ARMA driver e(n) given the stationary output
/// variance r: r / sum_n h(n)^2.
inline double innovation_variance(double r, const ArmaSpec& spec, double tol = 1e-10) {
  if (!(r > 0.0)) throw std::invalid_argument("innovation_variance: r must be positive");
  const double energy = impulse_energy(spec, tol);
  if (!(energy > 0.0)) {
    throw std::invalid_argument("innovation_variance: impulse response is identically zero");
  }
  return r / energy;
}

}  // namespace tvlap
