#pragma once

// Security budget and statistical fluctuation of measured postselection
// probabilities: Hoeffding and multiplicative Chernoff widths.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>

#include "hdqkd/errors.hpp"

namespace hdqkd {

/// Number of pulses sent; may be the infinite (asymptotic) sentinel.
class PulseCount {
 public:
  constexpr PulseCount() = default;
  explicit PulseCount(double n) : value_(n) {
    if (!(n >= 0.0)) throw DomainError("pulse count must be >= 0");
  }
  static constexpr PulseCount infinite() {
    PulseCount p;
    p.value_ = std::numeric_limits<double>::infinity();
    return p;
  }

  constexpr double value() const { return value_; }
  bool is_infinite() const { return std::isinf(value_); }

  friend constexpr bool operator==(PulseCount a, PulseCount b) = default;

 private:
  double value_ = 0.0;
};

enum class Method { hoeffding, chernoff, exact };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::hoeffding: return "hoeffding";
    case Method::chernoff: return "chernoff";
    case Method::exact: return "exact";
  }
  return "unknown";
}

inline Method parse_method(std::string_view s) {
  if (s == "hoeffding") return Method::hoeffding;
  if (s == "chernoff") return Method::chernoff;
  if (s == "exact") return Method::exact;
  throw DomainError("unknown fluctuation method '" + std::string(s) + "'");
}

struct EpsilonBudget {
  double eps_pe = 1e-10;
  double eps_ec = 1e-10;
  double eps_bar = 1e-10;
  double eps_pa = 1e-10;

  void validate() const {
    for (double e : {eps_pe, eps_ec, eps_bar, eps_pa}) {
      if (!(e > 0.0 && e < 1.0)) {
        throw DomainError("EpsilonBudget: components must lie in (0,1)");
      }
    }
    if (!(eps_pe + eps_ec + eps_bar + eps_pa < 1.0)) {
      throw DomainError("EpsilonBudget: total must be < 1");
    }
  }
};

/// Overall failure probability of the protocol.
inline double epsilon_total(const EpsilonBudget& b) {
  for (double e : {b.eps_pe, b.eps_ec, b.eps_bar, b.eps_pa}) {
    if (!(e >= 0.0 && e < 1.0)) {
      throw DomainError("epsilon_total: components must lie in [0,1)");
    }
  }
  const double total = b.eps_pe + b.eps_ec + b.eps_bar + b.eps_pa;
  if (!(total < 1.0)) throw DomainError("epsilon_total: sum must be < 1");
  return total;
}

struct FluctuationInterval {
  double p_center = 0.0;
  double p_minus = 0.0;
  double p_plus = 0.0;
  Method method = Method::exact;
  double n_frames = 0.0;
  // Set when no estimate could be formed and [0,1] was substituted.
  bool vacuous = false;
};

/// Frames available for estimating P_lambda: p_lambda (1 - p_T)^2 N.
inline double frames_for_estimation(double p_lambda, double p_t,
                                    PulseCount n_pulses) {
  if (!(p_lambda >= 0.0 && p_lambda <= 1.0) || !(p_t >= 0.0 && p_t <= 1.0)) {
    throw DomainError("frames_for_estimation: probabilities must lie in [0,1]");
  }
  const double share = p_lambda * (1.0 - p_t) * (1.0 - p_t);
  if (share == 0.0) return 0.0;
  return share * n_pulses.value();
}

namespace detail {
inline void check_eps(double eps, const char* who) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw DomainError(std::string(who) + ": eps_pe must lie in (0,1)");
  }
}
inline void check_frames(double n, const char* who) {
  if (std::isnan(n) || n < 0.0) {
    throw DomainError(std::string(who) + ": frame count must be >= 0");
  }
  if (n == 0.0) {
    throw EstimationImpossible(std::string(who) + ": no frames for estimation");
  }
}
}  // namespace detail

/// Symmetric Hoeffding width with eps_pe split evenly between the tails.
inline double hoeffding_delta(double n_frames, double eps_pe) {
  detail::check_eps(eps_pe, "hoeffding_delta");
  detail::check_frames(n_frames, "hoeffding_delta");
  if (std::isinf(n_frames)) return 0.0;
  return std::sqrt(std::log(2.0 / eps_pe) / (2.0 * n_frames));
}

struct ChernoffWidths {
  double plus = 0.0;
  double minus = 0.0;
};

/// Asymmetric multiplicative-Chernoff widths; eps_pe is split in thirds.
inline ChernoffWidths chernoff_deltas(double p_center, double n_frames,
                                      double eps_pe) {
  detail::check_eps(eps_pe, "chernoff_deltas");
  detail::check_frames(n_frames, "chernoff_deltas");
  if (!(p_center >= 0.0 && p_center <= 1.0)) {
    throw DomainError("chernoff_deltas: p_center must lie in [0,1]");
  }
  if (std::isinf(n_frames) || p_center == 0.0) return {0.0, 0.0};
  const double log_third = std::log(eps_pe / 3.0);
  const double scale = 2.0 * p_center / n_frames;
  return {std::sqrt(scale * (std::log(16.0) - 4.0 * log_third)),
          std::sqrt(scale * (-1.5 * log_third))};
}

/// Checks the preconditions of the multiplicative Chernoff bound for an
/// observed count `beta_observed` out of `n_frames` trials.
inline ChernoffDiagnostics chernoff_applicable(double beta_observed,
                                               double n_frames, double eps_pe) {
  ChernoffDiagnostics d;
  if (!(eps_pe > 0.0 && eps_pe < 1.0)) {
    d.reason = "eps_pe outside (0,1)";
    return d;
  }
  if (!(n_frames > 0.0)) {
    d.reason = "no frames for estimation";
    return d;
  }
  if (std::isinf(n_frames)) {
    d.passes = true;
    d.alpha_l = std::numeric_limits<double>::infinity();
    d.margin_lower = 9.0 / 32.0;
    d.margin_upper = 1.0 / 3.0;
    return d;
  }
  const double eps = eps_pe / 3.0;
  d.alpha_l = beta_observed - std::sqrt(n_frames / 2.0 * std::log(1.0 / eps));
  if (!(d.alpha_l > 0.0)) {
    d.reason = "sample too small (alpha_L <= 0)";
    d.margin_lower = -std::numeric_limits<double>::infinity();
    d.margin_upper = -std::numeric_limits<double>::infinity();
    return d;
  }
  // (2/eps_c)^(1/alpha_L) <= e^{(3/(4 sqrt 2))^2} and
  // (1/eps_c_hat)^(1/alpha_L) < e^{1/3}, compared in log space.
  d.margin_lower = 9.0 / 32.0 - std::log(2.0 / eps) / d.alpha_l;
  d.margin_upper = 1.0 / 3.0 - std::log(1.0 / eps) / d.alpha_l;
  d.passes = d.margin_lower >= 0.0 && d.margin_upper > 0.0;
  if (!d.passes) d.reason = "applicability condition violated";
  return d;
}

/// Fluctuation interval around a measured postselection probability.
/// Throws ChernoffInapplicable when the Chernoff preconditions fail.
inline FluctuationInterval interval(double p_center, double p_lambda,
                                    double p_t, PulseCount n_pulses,
                                    double eps_pe, Method method) {
  if (!(p_center >= 0.0 && p_center <= 1.0)) {
    throw DomainError("interval: p_center must lie in [0,1]");
  }
  FluctuationInterval iv;
  iv.p_center = iv.p_minus = iv.p_plus = p_center;
  iv.n_frames = frames_for_estimation(p_lambda, p_t, n_pulses);
  if (method == Method::exact || n_pulses.is_infinite()) {
    iv.method = Method::exact;
    return iv;
  }
  iv.method = method;
  double minus = 0.0;
  double plus = 0.0;
  if (method == Method::hoeffding) {
    minus = plus = hoeffding_delta(iv.n_frames, eps_pe);
  } else {
    detail::check_frames(iv.n_frames, "interval");
    auto diag = chernoff_applicable(p_center * iv.n_frames, iv.n_frames, eps_pe);
    if (!diag.passes) throw ChernoffInapplicable(std::move(diag));
    const auto w = chernoff_deltas(p_center, iv.n_frames, eps_pe);
    minus = w.minus;
    plus = w.plus;
  }
  iv.p_minus = std::max(0.0, p_center - minus);
  iv.p_plus = std::min(1.0, p_center + plus);
  return iv;
}

}  // namespace hdqkd
