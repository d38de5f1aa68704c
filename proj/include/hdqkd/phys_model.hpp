#pragma once

// Source, detector and channel model: Poisson pair statistics, the n-pair
// coincidence probability and the postselection probability P_lambda.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "hdqkd/errors.hpp"

namespace hdqkd {

struct PhysicalParams {
  double alpha = 0.2;          // fiber loss, dB/km
  double eta_alice = 0.93;     // detector efficiency
  double eta_bob = 0.93;
  double r_dc = 1000.0;        // dark-count rate, 1/s
  double delta_j = 20e-12;     // timing jitter, s (carried, not used)
  double delta_coh = 30e-12;   // coherence time, s
  int schmidt_d = 8;
  double delta_delta = 10e-12; // Eve-induced correlation-time change, s

  /// Throws DomainError naming the first offending field.
  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw DomainError(std::string("PhysicalParams: ") + what);
    };
    require(alpha >= 0.0, "alpha must be >= 0");
    require(eta_alice >= 0.0 && eta_alice <= 1.0, "eta_alice must lie in [0,1]");
    require(eta_bob >= 0.0 && eta_bob <= 1.0, "eta_bob must lie in [0,1]");
    require(r_dc >= 0.0, "r_dc must be >= 0");
    require(delta_j >= 0.0, "delta_j must be >= 0");
    require(delta_coh > 0.0, "delta_coh must be > 0");
    require(schmidt_d >= 2, "schmidt_d must be >= 2");
    require(delta_delta >= 0.0, "delta_delta must be >= 0");
  }
};

struct FrameParams {
  double t_f = 0.0;        // measurement-frame duration, s
  double delta_cor = 0.0;  // correlation time, s
  double p_d = 0.0;        // dark-count probability per frame
  double zeta = 0.0;       // true excess-noise factor (zeta_t = zeta_w)
};

struct ChannelPoint {
  double length_km = 0.0;
  double eta_t = 1.0;
};

inline double transmittance(double alpha, double length_km) {
  if (!(alpha >= 0.0) || !(length_km >= 0.0)) {
    throw DomainError("transmittance: alpha and length must be >= 0");
  }
  return std::pow(10.0, -alpha * length_km / 10.0);
}

inline ChannelPoint channel_point(double alpha, double length_km) {
  return {length_km, transmittance(alpha, length_km)};
}

namespace detail {

// ln(n!) without touching the global state std::lgamma may write.
inline double log_factorial(long n) {
  static const std::array<double, 171> table = [] {
    std::array<double, 171> t{};
    double f = 1.0;
    t[0] = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) {
      f *= static_cast<double>(i);
      t[i] = std::log(f);
    }
    return t;
  }();
  if (n < static_cast<long>(table.size())) return table[static_cast<std::size_t>(n)];
  // Stirling series; truncation error < 1e-17 relative for n >= 171.
  const double x = static_cast<double>(n) + 1.0;
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * M_PI) +
         inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0));
}

inline void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw DomainError(std::string(what) + " must lie in [0,1]");
  }
}

}  // namespace detail

/// Probability of emitting n pairs from a source of mean pair number lambda.
inline double poisson_pmf(long n, double lambda) {
  if (n < 0 || !(lambda >= 0.0)) {
    throw DomainError("poisson_pmf: n and lambda must be >= 0");
  }
  if (lambda == 0.0) return n == 0 ? 1.0 : 0.0;
  if (n == 0) return std::exp(-lambda);
  return std::exp(static_cast<double>(n) * std::log(lambda) - lambda -
                  detail::log_factorial(n));
}

/// Probability that both parties register at least one detection given
/// n emitted pairs; dark counts enter through p_d on each side.
inline double gamma_n(long n, double eta_alice, double eta_bob, double eta_t,
                      double p_d) {
  if (n < 0) throw DomainError("gamma_n: n must be >= 0");
  detail::check_unit(eta_alice, "gamma_n: eta_alice");
  detail::check_unit(eta_bob, "gamma_n: eta_bob");
  detail::check_unit(eta_t, "gamma_n: eta_t");
  detail::check_unit(p_d, "gamma_n: p_d");
  // 1 - (1-eta)^n (1-p_d) via expm1 so that tiny click probabilities
  // keep their relative precision.
  auto click = [&](double eta) {
    if (n == 0) return p_d;
    if (eta == 1.0 || p_d == 1.0) return 1.0;
    return -std::expm1(static_cast<double>(n) * std::log1p(-eta) + std::log1p(-p_d));
  };
  return click(eta_alice) * click(eta_bob * eta_t);
}

/// Postselection probability by direct summation over the pair number.
/// Terms are added until a bound on the remaining Poisson tail mass drops
/// below `tolerance`.
inline double postselect_prob_series(double lambda, double eta_alice,
                                     double eta_bob, double eta_t, double p_d,
                                     double tolerance = 1e-15,
                                     long max_terms = 100000) {
  if (!(lambda >= 0.0)) throw DomainError("postselect_prob_series: lambda < 0");
  if (!(tolerance > 0.0)) {
    throw DomainError("postselect_prob_series: tolerance must be > 0");
  }
  double sum = 0.0;
  for (long n = 0; n < max_terms; ++n) {
    sum += poisson_pmf(n, lambda) * gamma_n(n, eta_alice, eta_bob, eta_t, p_d);
    // Tail beyond n is <= pmf(n+1) / (1 - lambda/(n+2)) once n+2 > lambda.
    const double next = poisson_pmf(n + 1, lambda);
    const double ratio = lambda / static_cast<double>(n + 2);
    if (ratio < 1.0 && next / (1.0 - ratio) < tolerance) return sum;
  }
  throw ComputationError("postselect_prob_series: no convergence within " +
                         std::to_string(max_terms) + " terms");
}

/// Postselection probability from the resummed series. Written as a sum of
/// nonnegative terms so that small probabilities keep full relative precision.
inline double postselect_prob_closed(double lambda, double eta_alice,
                                     double eta_bob, double eta_t, double p_d) {
  if (!(lambda >= 0.0)) throw DomainError("postselect_prob_closed: lambda < 0");
  detail::check_unit(eta_alice, "postselect_prob_closed: eta_alice");
  detail::check_unit(eta_bob, "postselect_prob_closed: eta_bob");
  detail::check_unit(eta_t, "postselect_prob_closed: eta_t");
  detail::check_unit(p_d, "postselect_prob_closed: p_d");
  const double x = lambda * eta_alice;
  const double y = lambda * eta_bob * eta_t;
  const double keep = 1.0 - p_d;
  const double alice = -std::expm1(-x) + p_d * std::exp(-x);
  const double bob = -std::expm1(-y) + p_d * std::exp(-y);
  const double joint = keep * keep * std::exp(-x - y) * std::expm1(x * eta_bob * eta_t);
  return std::clamp(alice * bob + joint, 0.0, 1.0);
}

/// Excess-noise factor implied by a correlation-time change delta_delta.
inline double excess_noise_from_delta(double delta_delta, double delta_cor) {
  if (!(delta_cor > 0.0)) {
    throw DomainError("excess_noise_from_delta: delta_cor must be > 0");
  }
  if (!(delta_delta >= 0.0)) {
    throw DomainError("excess_noise_from_delta: delta_delta must be >= 0");
  }
  const double r = delta_delta / delta_cor;
  return r * (2.0 + r);
}

inline double frame_duration(double delta_coh) {
  return 2.0 * std::sqrt(2.0 * std::log(2.0)) * delta_coh;
}

inline FrameParams frame_params(const PhysicalParams& phys) {
  phys.validate();
  FrameParams f;
  f.t_f = frame_duration(phys.delta_coh);
  f.delta_cor = static_cast<double>(phys.schmidt_d) * phys.delta_coh;
  f.p_d = std::min(1.0, phys.r_dc * f.t_f);
  f.zeta = excess_noise_from_delta(phys.delta_delta, f.delta_cor);
  return f;
}

/// P_lambda for a full parameter set at a channel point.
inline double postselect_prob(double lambda, const PhysicalParams& phys,
                              const FrameParams& frame,
                              const ChannelPoint& channel) {
  return postselect_prob_closed(lambda, phys.eta_alice, phys.eta_bob,
                                channel.eta_t, frame.p_d);
}

/// Fraction of postselected events at intensity lambda that come from
/// single-pair emissions: lambda e^{-lambda} gamma_1 / P_lambda.
inline double single_pair_fraction(double lambda, const PhysicalParams& phys,
                                   const FrameParams& frame,
                                   const ChannelPoint& channel) {
  const double p = postselect_prob(lambda, phys, frame, channel);
  if (lambda == 0.0 || p == 0.0) return 0.0;
  const double g1 =
      gamma_n(1, phys.eta_alice, phys.eta_bob, channel.eta_t, frame.p_d);
  return std::min(1.0, lambda * std::exp(-lambda) * g1 / p);
}

}  // namespace hdqkd
