#pragma once

/// Online trend tracking with extrema detection, extrema forecasting, and
/// the derivative-variance monitor used for sensor fault diagnosis.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "tvlap/filter.hpp"
#include "tvlap/model.hpp"

namespace tvlap {

enum class ExtremumKind { Minimum, Maximum };

/// Threshold: |d1| < epsilon with a signed d2 (the literal rule).
/// ZeroCross: d1 changes sign between consecutive samples with a signed d2.
enum class ExtremaMode { Threshold, ZeroCross };

struct ExtremaEvent {
  long n = 0;
  ExtremumKind kind = ExtremumKind::Minimum;
  double d1 = 0.0;
  double d2 = 0.0;
};

struct TrackOutput {
  long n = 0;
  double fhat = 0.0;
  std::vector<double> derivatives;  ///< estimates of derivatives 1..K
  std::optional<ExtremaEvent> event;
};

inline std::string to_string(ExtremumKind k) {
  return k == ExtremumKind::Minimum ? "min" : "max";
}

inline std::optional<ExtremumKind> classify_extremum(double d1, double d2, double epsilon,
                                                     ExtremaMode mode,
                                                     std::optional<double> d1_prev = {}) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("classify_extremum: epsilon must be positive");
  if (mode == ExtremaMode::Threshold) {
    if (std::abs(d1) >= epsilon) return std::nullopt;
    if (d2 > 0.0) return ExtremumKind::Minimum;
    if (d2 < 0.0) return ExtremumKind::Maximum;
    return std::nullopt;
  }
  if (!d1_prev) {
    throw std::invalid_argument("classify_extremum: zero-cross mode needs the previous d1");
  }
  if (*d1_prev < 0.0 && d1 >= 0.0 && d2 > 0.0) return ExtremumKind::Minimum;
  if (*d1_prev > 0.0 && d1 <= 0.0 && d2 < 0.0) return ExtremumKind::Maximum;
  return std::nullopt;
}

/// Samples during which the ~infinite prior covariance collapses; events
/// and diagnosis statistics are suppressed there.
inline std::size_t default_burn_in(unsigned order) {
  return std::max<std::size_t>(5 * (static_cast<std::size_t>(order) + 1), 50);
}

struct TrackOptions {
  bool detect_extrema = true;
  ExtremaMode mode = ExtremaMode::ZeroCross;
  std::optional<std::size_t> burn_in;  ///< default_burn_in(K) when unset
};

/// One-pass tracker: each push() runs one Kalman step and reports the trend,
/// its derivatives and any extremum found at that sample. Repeated events of
/// the same kind are suppressed until the opposite kind fires.
class TrendTracker {
 public:
  TrendTracker(StateSpaceModel model, const TvlapConfig& config, TrackOptions options = {})
      : model_(std::move(model)),
        epsilon_(config.epsilon),
        options_(options),
        burn_in_(options.burn_in.value_or(default_burn_in(model_.order))),
        state_(init_state(model_.dim(), config.infinity)) {
    if (options_.detect_extrema && model_.order < 2) {
      throw std::invalid_argument("extrema detection needs order K >= 2, got K=" +
                                  std::to_string(model_.order));
    }
  }

  TrackOutput push(double y) {
    state_ = step(model_, state_, y).state;
    TrackOutput out;
    out.n = state_.n;
    out.fhat = state_.xhat(0, 0);
    out.derivatives.reserve(model_.order);
    for (unsigned k = 1; k <= model_.order; ++k) out.derivatives.push_back(state_.xhat(k, 0));

    const bool past_burn_in = static_cast<std::size_t>(state_.n) >= burn_in_;
    if (options_.detect_extrema && past_burn_in) {
      const double d1 = out.derivatives[0];
      const double d2 = out.derivatives[1];
      // A zero crossing with |d2| < epsilon is rounding-level wobble (the
      // prior transient on a flat input), not a turning point.
      const bool flat = options_.mode == ExtremaMode::ZeroCross && std::abs(d2) < epsilon_;
      const auto kind = options_.mode == ExtremaMode::Threshold
                            ? classify_extremum(d1, d2, epsilon_, options_.mode)
                            : (d1_prev_ && !flat ? classify_extremum(d1, d2, epsilon_,
                                                                     options_.mode, d1_prev_)
                                                 : std::nullopt);
      if (kind && kind != last_kind_) {
        out.event = ExtremaEvent{state_.n, *kind, d1, d2};
        last_kind_ = kind;
      }
    }
    if (model_.order >= 1 && past_burn_in) d1_prev_ = state_.xhat(1, 0);
    return out;
  }

  const FilterState& state() const { return state_; }
  const StateSpaceModel& model() const { return model_; }
  std::size_t burn_in() const { return burn_in_; }

 private:
  StateSpaceModel model_;
  double epsilon_;
  TrackOptions options_;
  std::size_t burn_in_;
  FilterState state_;
  std::optional<double> d1_prev_;
  std::optional<ExtremumKind> last_kind_;
};

inline std::vector<TrackOutput> track(const StateSpaceModel& model,
                                      std::span<const double> stream,
                                      const TvlapConfig& config, TrackOptions options = {}) {
  TrendTracker tracker(model, config, options);
  std::vector<TrackOutput> out;
  out.reserve(stream.size());
  for (double y : stream) out.push_back(tracker.push(y));
  return out;
}

/// Zero-cross classification along the mean forecast; events carry the
/// future index state.n + k.
inline std::vector<ExtremaEvent> forecast_extrema(const StateSpaceModel& model,
                                                  const FilterState& state, unsigned steps,
                                                  double epsilon) {
  if (model.order < 2) {
    throw std::invalid_argument("forecast_extrema: needs order K >= 2");
  }
  std::vector<ExtremaEvent> events;
  double d1_prev = state.xhat(1, 0);
  for (const ForecastPoint& point : forecast(model, state, steps)) {
    const double d1 = point.xhat(1, 0);
    const double d2 = point.xhat(2, 0);
    if (auto kind = classify_extremum(d1, d2, epsilon, ExtremaMode::ZeroCross, d1_prev)) {
      events.push_back(ExtremaEvent{state.n + static_cast<long>(point.k), *kind, d1, d2});
    }
    d1_prev = d1;
  }
  return events;
}

/// Running sum(x^2) / n for a zero-mean sequence.
struct VarianceMonitor {
  std::size_t count = 0;
  double sum_squares = 0.0;
};

inline std::pair<VarianceMonitor, double> monitor_update(VarianceMonitor m, double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("monitor_update: non-finite value");
  m.count += 1;
  m.sum_squares += value * value;
  return {m, m.sum_squares / static_cast<double>(m.count)};
}

struct Channel {
  std::string name;
  std::vector<double> values;
};

struct ChannelVerdict {
  std::string name;
  double variance = 0.0;
  bool faulty = false;
};

/// Tracks each channel, accumulates the variance of the post-burn-in first
/// derivative estimate, and flags channels whose variance exceeds
/// ratio * (median over channels).
inline std::vector<ChannelVerdict> diagnose(std::span<const Channel> channels,
                                            const TvlapConfig& config, double ratio = 3.0) {
  if (channels.size() < 2) throw std::invalid_argument("diagnose: needs at least 2 channels");
  if (!(ratio > 1.0)) throw std::invalid_argument("diagnose: ratio must exceed 1");
  if (config.order < 1) throw std::invalid_argument("diagnose: needs order K >= 1");
  for (const Channel& c : channels) {
    if (c.values.size() != channels.front().values.size()) {
      throw std::invalid_argument("diagnose: channel '" + c.name + "' has " +
                                  std::to_string(c.values.size()) + " samples, expected " +
                                  std::to_string(channels.front().values.size()));
    }
  }
  const StateSpaceModel model = make_tvlap(config);
  std::vector<ChannelVerdict> verdicts;
  for (const Channel& c : channels) {
    TrackOptions options;
    options.detect_extrema = false;
    TrendTracker tracker(model, config, options);
    VarianceMonitor monitor;
    double variance = 0.0;
    for (double y : c.values) {
      const TrackOutput out = tracker.push(y);
      if (static_cast<std::size_t>(out.n) < tracker.burn_in()) continue;
      std::tie(monitor, variance) = monitor_update(monitor, out.derivatives[0]);
    }
    verdicts.push_back(ChannelVerdict{c.name, variance, false});
  }
  std::vector<double> sorted;
  for (const auto& v : verdicts) sorted.push_back(v.variance);
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  const double median =
      sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  for (auto& v : verdicts) v.faulty = v.variance > ratio * median;
  return verdicts;
}

}  // namespace tvlap
