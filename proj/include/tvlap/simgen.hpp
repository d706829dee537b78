#pragma once

/// Seeded scenario generators for the experiments and for test oracles.
///
/// Randomness: std::mt19937_64 (bit-exact across conforming standard
/// libraries) seeded with the scenario seed. Uniforms are (u >> 11) * 2^-53;
/// Gaussians use the Box-Muller pair
///   z0 = sqrt(-2 ln(1 - u1)) cos(2 pi u2),  z1 = ... sin(2 pi u2),
/// consumed in that order.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tvlap/model.hpp"

namespace tvlap {

class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double standard_normal() {
    if (spare_) {
      const double z = *spare_;
      spare_.reset();
      return z;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(1.0 - u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
  }

  /// Uniform integer in [lo, hi].
  long uniform_int(long lo, long hi) {
    const auto span = static_cast<double>(hi - lo + 1);
    return lo + static_cast<long>(uniform() * span);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

struct Scenario {
  std::string name;
  std::vector<double> t;
  std::vector<double> x;
  std::vector<double> truth;
  std::vector<double> truth_d1;
  std::uint64_t seed = 0;

  std::size_t size() const { return t.size(); }
};

namespace detail {

template <typename F, typename D>
Scenario grid_scenario(std::string name, std::uint64_t seed, std::size_t samples, double dt,
                       F truth, D truth_d1) {
  Scenario s;
  s.name = std::move(name);
  s.seed = seed;
  GaussianSource rng(seed);
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = static_cast<double>(i) * dt;
    s.t.push_back(t);
    s.truth.push_back(truth(t));
    s.truth_d1.push_back(truth_d1(t));
    s.x.push_back(s.truth.back() + rng.standard_normal());
  }
  return s;
}

}  // namespace detail

/// t = 0:0.1:120, x = 5 sin(0.1 t) + N(0, 1).
inline Scenario gen_sine(std::uint64_t seed) {
  return detail::grid_scenario(
      "sine", seed, 1201, 0.1, [](double t) { return 5.0 * std::sin(0.1 * t); },
      [](double t) { return 0.5 * std::cos(0.1 * t); });
}

/// t = 0:0.1:120, x = 5 sin(0.1 t) + exp(0.03 t) + N(0, 1).
inline Scenario gen_sine_exp(std::uint64_t seed) {
  return detail::grid_scenario(
      "sine_exp", seed, 1201, 0.1,
      [](double t) { return 5.0 * std::sin(0.1 * t) + std::exp(0.03 * t); },
      [](double t) { return 0.5 * std::cos(0.1 * t) + 0.03 * std::exp(0.03 * t); });
}

struct FaultOptions {
  std::size_t samples = 240;
  double dt = 0.1;
  /// Matches the measurement variance R = 0.03 of the diagnosis setup.
  double noise_sd = std::sqrt(0.03);
  /// Shared trajectory offset + amplitude * sin(frequency * t).
  double offset = 6.0;
  double amplitude = 1.0;
  double frequency = 0.1;
  /// Jumps start at or after this index so they land past the filter burn-in.
  std::size_t first_jump = 60;
  unsigned min_duration = 3;
  unsigned max_duration = 8;
};

/// Three range-like channels sharing a slow sinusoidal trajectory, each
/// with independent N(0, noise_sd^2) noise. Channel 3 additionally carries
/// `jumps` non-overlapping level offsets of +-magnitude lasting 3..8 samples.
inline std::vector<Scenario> gen_fault_channels(std::uint64_t seed, unsigned jumps,
                                                double magnitude,
                                                const FaultOptions& opt = {}) {
  if (opt.samples < opt.first_jump + opt.max_duration + 2) {
    throw std::invalid_argument("gen_fault_channels: too few samples");
  }
  GaussianSource rng(seed);
  std::vector<Scenario> channels(3);
  for (std::size_t c = 0; c < channels.size(); ++c) {
    Scenario& s = channels[c];
    s.name = "channel" + std::to_string(c + 1);
    s.seed = seed;
    for (std::size_t i = 0; i < opt.samples; ++i) {
      const double t = static_cast<double>(i) * opt.dt;
      s.t.push_back(t);
      s.truth.push_back(opt.offset + opt.amplitude * std::sin(opt.frequency * t));
      s.truth_d1.push_back(opt.amplitude * opt.frequency * std::cos(opt.frequency * t));
      s.x.push_back(s.truth.back() + opt.noise_sd * rng.standard_normal());
    }
  }

  std::vector<bool> taken(opt.samples, false);
  const long last_start = static_cast<long>(opt.samples - opt.max_duration - 1);
  for (unsigned j = 0; j < jumps; ++j) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const long start = rng.uniform_int(static_cast<long>(opt.first_jump), last_start);
      const long length = rng.uniform_int(opt.min_duration, opt.max_duration);
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      bool clear = true;
      // One free sample on each side keeps jumps distinct.
      for (long i = start - 1; i <= start + length; ++i) clear = clear && !taken[i];
      if (!clear) continue;
      for (long i = start; i < start + length; ++i) {
        taken[i] = true;
        channels[2].x[i] += sign * magnitude;
      }
      break;
    }
  }
  return channels;
}

/// Stationary ARMA noise driven by N(0, innovation_variance), 200 warm-up
/// samples discarded.
inline std::vector<double> gen_arma_noise(const ArmaSpec& spec, double innovation_variance,
                                          std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_arma_noise: n must be >= 1");
  if (!(innovation_variance >= 0.0)) {
    throw std::invalid_argument("gen_arma_noise: negative innovation variance");
  }
  constexpr std::size_t kWarmUp = 200;
  GaussianSource rng(seed);
  const double sd = std::sqrt(innovation_variance);
  const std::size_t total = n + kWarmUp;
  std::vector<double> e(total);
  std::vector<double> v(total, 0.0);
  for (std::size_t i = 0; i < total; ++i) {
    e[i] = sd * rng.standard_normal();
    double value = 0.0;
    for (std::size_t j = 0; j <= spec.q() && j <= i; ++j) value += spec.ma_at(j) * e[i - j];
    for (std::size_t j = 1; j <= spec.p() && j <= i; ++j) value -= spec.ar_at(j) * v[i - j];
    v[i] = value;
  }
  return std::vector<double>(v.begin() + kWarmUp, v.end());
}

}  // namespace tvlap
