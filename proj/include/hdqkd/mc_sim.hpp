#pragma once

// Frame-level Monte Carlo of the protocol. Each frame draws an intensity,
// a pair number, both basis choices and both detection outcomes; the
// resulting tallies give empirical postselection probabilities.
//
// Random numbers come from std::mt19937_64, whose output sequence is fixed
// by the standard. Uniforms are built directly from its raw bits so that a
// seed reproduces a tally bit-for-bit on any conforming toolchain.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <random>
#include <thread>
#include <vector>

#include "hdqkd/decoy_bounds.hpp"
#include "hdqkd/errors.hpp"
#include "hdqkd/estimation.hpp"
#include "hdqkd/finite_stats.hpp"
#include "hdqkd/phys_model.hpp"

namespace hdqkd {

enum class BasisPair : std::size_t { tt = 0, dd = 1, mismatched = 2 };

inline const char* to_string(BasisPair b) {
  switch (b) {
    case BasisPair::tt: return "TT";
    case BasisPair::dd: return "DD";
    case BasisPair::mismatched: return "mismatched";
  }
  return "?";
}

struct SimConfig {
  PhysicalParams phys;
  FrameParams frame;
  ChannelPoint channel;
  IntensityConfig intensities;
  double p_t = 0.5;
  std::uint64_t n_pulses = 1;
  std::uint64_t seed = 0;

  void validate() const {
    phys.validate();
    intensities.validate();
    if (!(p_t >= 0.0 && p_t <= 1.0)) throw DomainError("SimConfig: p_t must lie in [0,1]");
    if (n_pulses < 1) throw DomainError("SimConfig: n_pulses must be >= 1");
  }
};

inline SimConfig make_sim_config(const PhysicalParams& phys,
                                 const IntensityConfig& intensities,
                                 double length_km, double p_t,
                                 std::uint64_t n_pulses, std::uint64_t seed) {
  SimConfig c;
  c.phys = phys;
  c.frame = frame_params(phys);
  c.channel = channel_point(phys.alpha, length_km);
  c.intensities = intensities;
  c.p_t = p_t;
  c.n_pulses = n_pulses;
  c.seed = seed;
  c.validate();
  return c;
}

/// Intensity slot order: 0 = mu, 1 = v1 (or v), 2 = v2.
struct SessionTally {
  using Cells = std::array<std::array<std::uint64_t, 3>, 3>;

  std::array<double, 3> lambda{};
  Cells frames{};
  Cells coincidences{};

  std::uint64_t total_frames() const {
    std::uint64_t n = 0;
    for (const auto& row : frames) {
      for (auto f : row) n += f;
    }
    return n;
  }

  /// Empirical postselection probability in the D basis.
  double p_hat(std::size_t slot) const {
    const auto f = frames[slot][static_cast<std::size_t>(BasisPair::dd)];
    if (f == 0) throw EstimationImpossible("p_hat: no DD frames at this intensity");
    return static_cast<double>(
               coincidences[slot][static_cast<std::size_t>(BasisPair::dd)]) /
           static_cast<double>(f);
  }

  friend bool operator==(const SessionTally&, const SessionTally&) = default;
};

namespace detail {

inline std::mt19937_64 seeded_engine(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32)};
  return std::mt19937_64(seq);
}

inline double uniform53(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Per-intensity lookup tables indexed by pair number.
struct IntensityTables {
  std::vector<double> cdf;
  std::vector<double> alice;
  std::vector<double> bob;
};

inline IntensityTables make_tables(double lambda, const SimConfig& c) {
  IntensityTables t;
  double acc = 0.0;
  for (long n = 0;; ++n) {
    acc += poisson_pmf(n, lambda);
    const double a = 1.0 - std::pow(1.0 - c.phys.eta_alice, static_cast<double>(n)) *
                               (1.0 - c.frame.p_d);
    const double b =
        1.0 - std::pow(1.0 - c.phys.eta_bob * c.channel.eta_t, static_cast<double>(n)) *
                  (1.0 - c.frame.p_d);
    t.cdf.push_back(acc);
    t.alice.push_back(a);
    t.bob.push_back(b);
    if (1.0 - acc < 1e-17 || n >= 400) break;
  }
  t.cdf.back() = 1.0;
  return t;
}

}  // namespace detail

/// Simulates `n_pulses` frames. Identical configs yield identical tallies.
inline SessionTally simulate_session(const SimConfig& c) {
  c.validate();
  const auto& ic = c.intensities;
  SessionTally tally;
  tally.lambda = {ic.mu, ic.v1, ic.mode == DecoyMode::two_decoy ? ic.v2 : 0.0};

  std::array<detail::IntensityTables, 3> tables;
  const std::size_t slots = ic.mode == DecoyMode::two_decoy ? 3 : 2;
  for (std::size_t i = 0; i < slots; ++i) tables[i] = detail::make_tables(tally.lambda[i], c);

  const double cut_mu = ic.p_mu;
  const double cut_v1 = ic.p_mu + ic.p_v1;
  // Basis choices use 32-bit halves of one draw; p_T = 1 maps to 2^32.
  const auto basis_cut = static_cast<std::uint64_t>(std::ldexp(c.p_t, 32));

  auto rng = detail::seeded_engine(c.seed);
  for (std::uint64_t f = 0; f < c.n_pulses; ++f) {
    const double u_int = detail::uniform53(rng);
    std::size_t slot = u_int < cut_mu ? 0 : (u_int < cut_v1 ? 1 : 2);
    if (slot >= slots) slot = slots - 1;

    const std::uint64_t r = rng();
    const bool alice_t = (r >> 32) < basis_cut;
    const bool bob_t = (r & 0xffffffffULL) < basis_cut;
    const auto pair = alice_t == bob_t ? (alice_t ? BasisPair::tt : BasisPair::dd)
                                       : BasisPair::mismatched;
    const auto cell = static_cast<std::size_t>(pair);
    ++tally.frames[slot][cell];

    const auto& tab = tables[slot];
    const double u_n = detail::uniform53(rng);
    std::size_t n = 0;
    while (u_n >= tab.cdf[n]) ++n;

    // Bob's outcome only matters when Alice detected; drawing it lazily
    // leaves the coincidence distribution unchanged.
    if (detail::uniform53(rng) < tab.alice[n] && detail::uniform53(rng) < tab.bob[n]) {
      ++tally.coincidences[slot][cell];
    }
  }
  return tally;
}

/// Packages D-basis estimates for the decoy bounds. The simulator knows the
/// channel, so multipliers are synthesized from the true single-pair
/// fractions through the forward model.
inline MeasuredStats empirical_stats(const SessionTally& tally, const SimConfig& c,
                                     double eve_zeta, double delta_phi) {
  auto one = [&](std::size_t slot) {
    IntensityStats s;
    s.p_post = s.p_minus = s.p_plus = tally.p_hat(slot);
    const double k = single_pair_fraction(tally.lambda[slot], c.phys, c.frame, c.channel);
    s.phi_t = s.phi_w = phi_multiplier_forward(k, eve_zeta, delta_phi);
    return s;
  };
  MeasuredStats m;
  m.mu = one(0);
  m.v1 = one(1);
  if (c.intensities.mode == DecoyMode::two_decoy) m.v2 = one(2);
  return m;
}

struct CoverageResult {
  std::size_t trials = 0;
  std::size_t covered = 0;
  std::size_t inapplicable = 0;

  double fraction() const {
    return trials ? static_cast<double>(covered) / static_cast<double>(trials) : 0.0;
  }
};

/// Runs `trials` sessions with seeds `config.seed ^ trial` and counts those
/// whose intervals contain the analytic P_lambda at every active intensity.
/// A trial where the Chernoff preconditions fail, or an intensity has no
/// DD frames, counts as not covered.
/// With Method::exact the measurement is the analytic value itself.
inline CoverageResult coverage_experiment(const SimConfig& config, double eps_pe,
                                          Method method, std::size_t trials,
                                          unsigned workers = 1) {
  config.validate();
  if (trials < 100) throw DomainError("coverage_experiment: trials must be >= 100");
  const auto& ic = config.intensities;
  const std::size_t slots = ic.mode == DecoyMode::two_decoy ? 3 : 2;
  const std::array<double, 3> lambda{ic.mu, ic.v1, ic.v2};
  const std::array<double, 3> select{ic.p_mu, ic.p_v1, ic.p_v2()};
  std::array<double, 3> truth{};
  for (std::size_t i = 0; i < slots; ++i) {
    truth[i] = postselect_prob(lambda[i], config.phys, config.frame, config.channel);
  }
  const PulseCount n(static_cast<double>(config.n_pulses));

  // 0 = covered, 1 = missed, 2 = inapplicable
  std::vector<unsigned char> outcome(trials, 1);
  auto run = [&](std::size_t t) {
    if (method == Method::exact) {
      outcome[t] = 0;
      return;
    }
    SimConfig c = config;
    c.seed = config.seed ^ static_cast<std::uint64_t>(t);
    const auto tally = simulate_session(c);
    try {
      for (std::size_t i = 0; i < slots; ++i) {
        const auto iv = interval(tally.p_hat(i), select[i], c.p_t, n, eps_pe, method);
        if (!(iv.p_minus <= truth[i] && truth[i] <= iv.p_plus)) return;
      }
      outcome[t] = 0;
    } catch (const ChernoffInapplicable&) {
      outcome[t] = 2;
    } catch (const EstimationImpossible&) {
      // no DD frames at some intensity: nothing to cover with
    }
  };

  workers = std::max(1u, workers);
  if (workers == 1) {
    for (std::size_t t = 0; t < trials; ++t) run(t);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < trials; t += workers) run(t);
      });
    }
    for (auto& th : pool) th.join();
  }

  CoverageResult res;
  res.trials = trials;
  for (auto o : outcome) {
    if (o == 0) ++res.covered;
    if (o == 2) ++res.inapplicable;
  }
  return res;
}

/// Writes `lambda basis_pair frames coincidences` lines.
inline void write_tally(std::ostream& out, const SessionTally& tally,
                        std::size_t slots = 3) {
  char buf[128];
  for (std::size_t i = 0; i < slots; ++i) {
    for (auto pair : {BasisPair::tt, BasisPair::dd, BasisPair::mismatched}) {
      const auto cell = static_cast<std::size_t>(pair);
      std::snprintf(buf, sizeof buf, "%.17g %s %llu %llu\n", tally.lambda[i],
                    to_string(pair),
                    static_cast<unsigned long long>(tally.frames[i][cell]),
                    static_cast<unsigned long long>(tally.coincidences[i][cell]));
      out << buf;
    }
  }
}

}  // namespace hdqkd
