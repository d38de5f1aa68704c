#pragma once

// Decoy-state parameter estimation: bounds on the vacuum and single-pair
// yields, on the single-pair fraction K_mu of postselected signal events,
// and on the timing/frequency excess-noise factors. Every bound consumes
// fluctuation-adjusted postselection probabilities P^-/P^+.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include "hdqkd/errors.hpp"

namespace hdqkd {

enum class DecoyMode { two_decoy, single_decoy };

inline std::string_view to_string(DecoyMode m) {
  return m == DecoyMode::two_decoy ? "two-decoy" : "single-decoy";
}

inline DecoyMode parse_decoy_mode(std::string_view s) {
  if (s == "two-decoy") return DecoyMode::two_decoy;
  if (s == "single-decoy") return DecoyMode::single_decoy;
  throw DomainError("unknown decoy mode '" + std::string(s) + "'");
}

/// Source intensities and their selection probabilities. In single-decoy
/// mode the decoy is `v1` and `v2` is unused.
struct IntensityConfig {
  DecoyMode mode = DecoyMode::two_decoy;
  double mu = 0.1;
  double v1 = 0.05;
  double v2 = 0.005;
  double p_mu = 0.7;
  double p_v1 = 0.2;

  double p_v2() const {
    return mode == DecoyMode::two_decoy ? 1.0 - p_mu - p_v1 : 0.0;
  }

  void validate() const {
    if (mode == DecoyMode::two_decoy) {
      if (!(v2 >= 0.0 && v1 > v2)) {
        throw DomainError("IntensityConfig: requires v1 > v2 >= 0");
      }
      if (!(mu > v1 + v2)) {
        throw DomainError("IntensityConfig: requires mu > v1 + v2");
      }
      if (!(p_mu > 0.0 && p_v1 > 0.0 && p_v2() > 1e-15)) {
        throw DomainError("IntensityConfig: selection probabilities must be positive");
      }
    } else {
      if (!(v1 > 0.0 && mu > v1)) {
        throw DomainError("IntensityConfig: requires mu > v > 0");
      }
      if (!(p_mu > 0.0 && p_v1 > 0.0)) {
        throw DomainError("IntensityConfig: selection probabilities must be positive");
      }
      if (std::abs(p_mu + p_v1 - 1.0) > 1e-12) {
        throw DomainError("IntensityConfig: single-decoy probabilities must sum to 1");
      }
    }
    if (!(p_mu + p_v1 <= 1.0 + 1e-12)) {
      throw DomainError("IntensityConfig: selection probabilities sum above 1");
    }
  }
};

/// Aggregated statistics at one intensity.
struct IntensityStats {
  double p_post = 0.0;
  double p_minus = 0.0;
  double p_plus = 0.0;
  double phi_t = 0.0;
  double phi_w = 0.0;
};

struct MeasuredStats {
  IntensityStats mu;
  IntensityStats v1;
  IntensityStats v2;
};

struct Gamma0Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool degenerate = false;
};

struct ZetaBounds {
  double t = std::numeric_limits<double>::infinity();
  double w = std::numeric_limits<double>::infinity();
  bool no_key = true;
};

struct DecoyBounds {
  double gamma0_lb = 0.0;
  double gamma0_ub = 0.0;
  double gamma1_lb = 0.0;
  double kmu_lb = 0.0;
  double zeta_t_ub = std::numeric_limits<double>::infinity();
  double zeta_w_ub = std::numeric_limits<double>::infinity();
  bool no_key = true;
};

/// Upper cap on excess-noise bounds; anything above is reported as no key.
inline constexpr double kZetaCap = 1e3;

namespace detail {
inline double clamp01(double x) {
  if (std::isnan(x)) return 0.0;
  return std::clamp(x, 0.0, 1.0);
}
}  // namespace detail

/// Interval on the vacuum yield from two decoy intensities.
inline Gamma0Interval gamma0_bounds(const MeasuredStats& s, double v1,
                                    double v2, double p_d) {
  if (v1 == v2) throw DomainError("gamma0_bounds: v1 and v2 must differ");
  const double linear =
      (v1 * s.v2.p_minus * std::exp(v2) - v2 * s.v1.p_plus * std::exp(v1)) /
      (v1 - v2);
  Gamma0Interval g;
  g.lower = detail::clamp01(std::max(linear, p_d * p_d));
  g.upper = detail::clamp01(p_d);
  if (g.lower > g.upper) {
    g.lower = g.upper;
    g.degenerate = true;
  }
  return g;
}

/// Lower bound on the single-pair yield gamma_1.
inline double gamma1_lower(const MeasuredStats& s, double mu, double v1,
                           double v2, double gamma0_lb) {
  const double denom = mu * v1 - mu * v2 - v1 * v1 + v2 * v2;
  if (!(denom > 0.0)) {
    throw DomainError("gamma1_lower: intensity constraints violated");
  }
  const double bracket =
      s.v1.p_minus * std::exp(v1) - s.v2.p_plus * std::exp(v2) -
      (v1 * v1 - v2 * v2) / (mu * mu) * (s.mu.p_plus * std::exp(mu) - gamma0_lb);
  return detail::clamp01(mu / denom * bracket);
}

namespace detail {

// Lower bound on K_mu from a single decoy intensity lambda using the vacuum
// upper bound. Returns nullopt when mu*lambda - lambda^2 vanishes.
inline std::optional<double> kmu_single_branch(double p_lambda_minus,
                                               double p_mu_plus, double mu,
                                               double lambda,
                                               double gamma0_ub) {
  const double denom = mu * lambda - lambda * lambda;
  if (denom == 0.0 || p_mu_plus <= 0.0) return std::nullopt;
  const double r = lambda / mu;
  const double bracket =
      p_lambda_minus / p_mu_plus * std::exp(lambda - mu) - r * r -
      (1.0 - r * r) * gamma0_ub * std::exp(-mu) / p_mu_plus;
  return mu * mu / denom * bracket;
}

}  // namespace detail

/// Lower bound on K_mu with two decoys: the better of the bound built from
/// both decoys (with the vacuum lower bound) and the single-decoy bounds
/// (with the vacuum upper bound).
inline double kmu_lower_two(const MeasuredStats& s, double mu, double v1,
                            double v2, double gamma0_lb, double gamma0_ub) {
  std::optional<double> best;
  auto take = [&best](std::optional<double> v) {
    if (v && (!best || *v > *best)) best = v;
  };

  const double pmu = s.mu.p_plus;
  const double denom = mu * v1 - mu * v2 - v1 * v1 + v2 * v2;
  if (denom > 0.0 && pmu > 0.0) {
    const double bracket =
        s.v1.p_minus / pmu * std::exp(v1 - mu) -
        s.v2.p_plus / pmu * std::exp(v2 - mu) -
        (v1 * v1 - v2 * v2) / (mu * mu) *
            (1.0 - gamma0_lb * std::exp(-mu) / pmu);
    take(mu * mu / denom * bracket);
  }
  take(detail::kmu_single_branch(s.v1.p_minus, pmu, mu, v1, gamma0_ub));
  if (v2 != 0.0) {
    take(detail::kmu_single_branch(s.v2.p_minus, pmu, mu, v2, gamma0_ub));
  }
  if (!best) {
    if (pmu <= 0.0) return 0.0;  // nothing detected at the signal intensity
    throw ComputationError("kmu_lower_two: no admissible branch");
  }
  return detail::clamp01(*best);
}

/// Lower bound on K_mu with a single decoy v; the vacuum upper bound is p_d.
inline double kmu_lower_single(const MeasuredStats& s, double mu, double v,
                               double gamma0_ub) {
  if (!(v > 0.0 && v < mu)) {
    throw DomainError("kmu_lower_single: requires 0 < v < mu");
  }
  auto k = detail::kmu_single_branch(s.v1.p_minus, s.mu.p_plus, mu, v, gamma0_ub);
  return k ? detail::clamp01(*k) : 0.0;
}

namespace detail {

struct Sample {
  double lambda;
  const IntensityStats* stats;
};

inline double phi_of(const IntensityStats& s, bool timing) {
  return timing ? s.phi_t : s.phi_w;
}

// min over lambda > 0 of e^{lambda-mu} mu P_lambda^+ / (lambda P_mu^+) Phi / K.
inline double zeta_direct_branch(const Sample* samples, std::size_t n,
                                 double mu, double pmu_plus, double kmu_lb,
                                 bool timing) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double l = samples[i].lambda;
    if (l <= 0.0) continue;
    const auto& st = *samples[i].stats;
    best = std::min(best, std::exp(l - mu) * mu * st.p_plus / (l * pmu_plus) *
                              phi_of(st, timing) / kmu_lb);
  }
  return best;
}

inline ZetaBounds finish_zeta(double t, double w) {
  ZetaBounds z;
  z.t = std::max(0.0, t - 1.0);
  z.w = std::max(0.0, w - 1.0);
  z.no_key = !(z.t <= kZetaCap && z.w <= kZetaCap);
  return z;
}

}  // namespace detail

/// Upper bounds on the timing and frequency excess noise with two decoys.
/// `no_key` is set when K_mu^LB is zero or a bound exceeds kZetaCap.
inline ZetaBounds zeta_upper_two(const MeasuredStats& s, double mu, double v1,
                                 double v2, double kmu_lb) {
  const double pmu = s.mu.p_plus;
  if (!(kmu_lb > 0.0) || !(pmu > 0.0)) return {};
  const std::array<detail::Sample, 3> samples{{{mu, &s.mu}, {v1, &s.v1}, {v2, &s.v2}}};

  auto bound = [&](bool timing) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& hi : samples) {
      for (const auto& lo : samples) {
        if (!(hi.lambda > lo.lambda)) continue;
        const double diff =
            detail::phi_of(*hi.stats, timing) * hi.stats->p_plus / pmu *
                std::exp(hi.lambda) -
            detail::phi_of(*lo.stats, timing) * lo.stats->p_minus / pmu *
                std::exp(lo.lambda);
        best = std::min(best, mu * std::exp(-mu) /
                                  ((hi.lambda - lo.lambda) * kmu_lb) * diff);
      }
    }
    return std::min(best, detail::zeta_direct_branch(samples.data(), samples.size(),
                                                     mu, pmu, kmu_lb, timing));
  };
  return detail::finish_zeta(bound(true), bound(false));
}

/// Upper bounds on the excess noise with a single decoy v (stored in s.v1).
inline ZetaBounds zeta_upper_single(const MeasuredStats& s, double mu, double v,
                                    double kmu_lb) {
  if (!(v > 0.0 && v < mu)) {
    throw DomainError("zeta_upper_single: requires 0 < v < mu");
  }
  const double pmu = s.mu.p_plus;
  if (!(kmu_lb > 0.0) || !(pmu > 0.0)) return {};
  const std::array<detail::Sample, 2> samples{{{mu, &s.mu}, {v, &s.v1}}};

  auto bound = [&](bool timing) {
    const double pair =
        mu / ((mu - v) * kmu_lb) *
        (detail::phi_of(s.mu, timing) -
         detail::phi_of(s.v1, timing) * s.v1.p_minus / pmu * std::exp(v - mu));
    return std::min(pair, detail::zeta_direct_branch(samples.data(), samples.size(),
                                                     mu, pmu, kmu_lb, timing));
  };
  return detail::finish_zeta(bound(true), bound(false));
}

/// Average correlation multiplier at an intensity whose single-pair
/// fraction is k_lambda.
inline double phi_multiplier_forward(double k_lambda, double zeta_x,
                                     double delta_phi_x) {
  return k_lambda * (1.0 + zeta_x) + (1.0 - k_lambda) * delta_phi_x;
}

/// Runs the full estimation chain for the configured decoy mode.
inline DecoyBounds estimate_bounds(const MeasuredStats& s,
                                   const IntensityConfig& ic, double p_d) {
  DecoyBounds b;
  if (ic.mode == DecoyMode::two_decoy) {
    const auto g0 = gamma0_bounds(s, ic.v1, ic.v2, p_d);
    b.gamma0_lb = g0.lower;
    b.gamma0_ub = g0.upper;
    b.gamma1_lb = gamma1_lower(s, ic.mu, ic.v1, ic.v2, g0.lower);
    b.kmu_lb = kmu_lower_two(s, ic.mu, ic.v1, ic.v2, g0.lower, g0.upper);
    const auto z = zeta_upper_two(s, ic.mu, ic.v1, ic.v2, b.kmu_lb);
    b.zeta_t_ub = z.t;
    b.zeta_w_ub = z.w;
    b.no_key = z.no_key;
  } else {
    b.gamma0_lb = detail::clamp01(p_d * p_d);
    b.gamma0_ub = detail::clamp01(p_d);
    b.kmu_lb = kmu_lower_single(s, ic.mu, ic.v1, b.gamma0_ub);
    // gamma_1 >= K_mu^LB P_mu^+ e^{mu} / mu
    b.gamma1_lb = detail::clamp01(b.kmu_lb * s.mu.p_plus * std::exp(ic.mu) / ic.mu);
    const auto z = zeta_upper_single(s, ic.mu, ic.v1, b.kmu_lb);
    b.zeta_t_ub = z.t;
    b.zeta_w_ub = z.w;
    b.no_key = z.no_key;
  }
  return b;
}

}  // namespace hdqkd
