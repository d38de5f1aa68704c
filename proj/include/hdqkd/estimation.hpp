#pragma once

// Glue between the physical model, the fluctuation analysis and the decoy
// bounds: builds MeasuredStats from model expectations and widens them
// into P^-/P^+ intervals.

#include <string>
#include <vector>

#include "hdqkd/decoy_bounds.hpp"
#include "hdqkd/finite_stats.hpp"
#include "hdqkd/phys_model.hpp"

namespace hdqkd {

/// What to do when the Chernoff preconditions fail for an intensity.
/// `vacuous` substitutes the always-valid interval [0, 1].
enum class InapplicablePolicy { error, vacuous };

inline std::string_view to_string(InapplicablePolicy p) {
  return p == InapplicablePolicy::error ? "error" : "vacuous";
}

inline InapplicablePolicy parse_inapplicable_policy(std::string_view s) {
  if (s == "error") return InapplicablePolicy::error;
  if (s == "vacuous") return InapplicablePolicy::vacuous;
  throw DomainError("unknown inapplicable policy '" + std::string(s) + "'");
}

struct EstimationSettings {
  Method method = Method::hoeffding;
  double eps_pe = 1e-10;
  double p_t = 0.5;
  PulseCount n_pulses = PulseCount::infinite();
  InapplicablePolicy on_inapplicable = InapplicablePolicy::vacuous;
};

/// Statistics an experiment would report in expectation: P_lambda from the
/// closed form and multipliers from the forward model with the true zeta.
inline MeasuredStats analytic_stats(const PhysicalParams& phys,
                                    const FrameParams& frame,
                                    const ChannelPoint& channel,
                                    const IntensityConfig& ic,
                                    double delta_phi = 0.0) {
  auto one = [&](double lambda) {
    IntensityStats s;
    s.p_post = s.p_minus = s.p_plus = postselect_prob(lambda, phys, frame, channel);
    const double k = single_pair_fraction(lambda, phys, frame, channel);
    s.phi_t = s.phi_w = phi_multiplier_forward(k, frame.zeta, delta_phi);
    return s;
  };
  MeasuredStats m;
  m.mu = one(ic.mu);
  m.v1 = one(ic.v1);
  if (ic.mode == DecoyMode::two_decoy) m.v2 = one(ic.v2);
  return m;
}

/// Replaces p_minus/p_plus of every active intensity by its fluctuation
/// interval. Intensities that fell back to [0,1] are appended to `vacuous`.
inline MeasuredStats apply_fluctuation(MeasuredStats s, const IntensityConfig& ic,
                                       const EstimationSettings& es,
                                       std::vector<std::string>* vacuous = nullptr) {
  auto widen = [&](IntensityStats& st, double p_select, const char* label) {
    try {
      const auto iv = interval(st.p_post, p_select, es.p_t, es.n_pulses,
                               es.eps_pe, es.method);
      st.p_minus = iv.p_minus;
      st.p_plus = iv.p_plus;
    } catch (const ChernoffInapplicable&) {
      if (es.on_inapplicable == InapplicablePolicy::error) throw;
      st.p_minus = 0.0;
      st.p_plus = 1.0;
      if (vacuous) vacuous->emplace_back(label);
    }
  };
  widen(s.mu, ic.p_mu, "mu");
  widen(s.v1, ic.p_v1, "v1");
  if (ic.mode == DecoyMode::two_decoy) widen(s.v2, ic.p_v2(), "v2");
  return s;
}

}  // namespace hdqkd
