#pragma once

// Secure-key capacity: the asymptotic-style rate R_HD and the finite-size
// capacity Delta I with its error-correction, privacy-amplification and
// smoothing penalties.

#include <cmath>
#include <limits>

#include "hdqkd/decoy_bounds.hpp"
#include "hdqkd/errors.hpp"
#include "hdqkd/finite_stats.hpp"
#include "hdqkd/security_model.hpp"

namespace hdqkd {

struct KeyRateTerms {
  double beta_iab = 0.0;
  double leak_ir = 0.0;  // (1 - K_mu) I_R
  double holevo = 0.0;   // K_mu phi_ub
  double ec_term = 0.0;
  double pa_term = 0.0;
  double smooth_term = 0.0;
};

struct KeyRateResult {
  double r_hd = -std::numeric_limits<double>::infinity();
  double delta_i = -std::numeric_limits<double>::infinity();
  KeyRateTerms terms;
  bool positive = false;
};

struct FiniteKeyTerms {
  double ec_term = 0.0;
  double pa_term = 0.0;
  double smooth_term = 0.0;
};

/// beta I(A;B) - (1 - K_mu) I_R - K_mu phi_ub.
inline double r_hd(double beta, const SecurityQuantities& sq, double kmu) {
  if (!(beta > 0.0 && beta <= 1.0)) throw DomainError("r_hd: beta must lie in (0,1]");
  if (!(kmu >= 0.0 && kmu <= 1.0)) throw DomainError("r_hd: kmu must lie in [0,1]");
  return beta * sq.i_ab - (1.0 - kmu) * sq.i_r - kmu * sq.phi_ub;
}

/// Finite-size penalties for p_mu p_T^2 N key frames. The infinite pulse
/// sentinel yields all zeros.
inline FiniteKeyTerms finite_key_terms(double p_mu, double p_t,
                                       PulseCount n_pulses, int schmidt_d,
                                       const EpsilonBudget& budget) {
  if (n_pulses.is_infinite()) return {};
  const double key_frames = p_mu * p_t * p_t * n_pulses.value();
  if (!(key_frames > 0.0)) throw ComputationError("finite_key_terms: no key frames");
  FiniteKeyTerms t;
  t.ec_term = std::log2(2.0 / budget.eps_ec) / key_frames;
  t.pa_term = 2.0 * std::log2(1.0 / budget.eps_pa) / key_frames;
  t.smooth_term = (2.0 * schmidt_d + 3.0) *
                  std::sqrt(std::log2(2.0 / budget.eps_bar) / key_frames);
  return t;
}

/// Protocol-level inputs to the finite-size capacity.
struct KeyRateInputs {
  double beta = 0.9;
  double p_mu = 0.7;
  double p_t = 0.5;
  PulseCount n_pulses = PulseCount::infinite();
  int schmidt_d = 8;
  EpsilonBudget budget;
};

/// Assembles Delta I = R_HD - ec - pa - smooth. A no-key condition from
/// the bounds yields delta_i = -inf; negative capacities are reported as is.
inline KeyRateResult delta_i(const KeyRateInputs& in, const DecoyBounds& bounds,
                             const SecurityQuantities& sq) {
  KeyRateResult res;
  const auto fk = finite_key_terms(in.p_mu, in.p_t, in.n_pulses, in.schmidt_d, in.budget);
  res.terms.ec_term = fk.ec_term;
  res.terms.pa_term = fk.pa_term;
  res.terms.smooth_term = fk.smooth_term;
  if (bounds.no_key || !(bounds.kmu_lb > 0.0)) return res;

  res.terms.beta_iab = in.beta * sq.i_ab;
  res.terms.leak_ir = (1.0 - bounds.kmu_lb) * sq.i_r;
  res.terms.holevo = bounds.kmu_lb * sq.phi_ub;
  res.r_hd = r_hd(in.beta, sq, bounds.kmu_lb);
  res.delta_i = res.r_hd - fk.ec_term - fk.pa_term - fk.smooth_term;
  res.positive = res.delta_i > 0.0;
  return res;
}

}  // namespace hdqkd
