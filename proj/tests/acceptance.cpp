// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "hdqkd/hdqkd.hpp"

using namespace hdqkd;
using Big = boost::multiprecision::cpp_dec_float_50;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string printf_str(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
std::string printf_str(const char* fmt, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, ap);
  va_end(ap);
  return buf;
}

std::shared_ptr<const SecurityModel> pinned_model() {
  static const auto model = std::make_shared<TableSecurityModel>(
      std::make_shared<const SecurityTable>(SecurityTable::load(HDQKD_TABLE_PATH)),
      HDQKD_TABLE_PATH);
  return model;
}

Scenario pinned(const char* name) {
  Scenario s = preset(name);
  s.security = pinned_model();
  return s;
}

Scenario with_n(Scenario s, PulseCount n) {
  s.n_pulses = n;
  return s;
}

double delta_or_neg_inf(const ResultRow& r) {
  return r.positive ? r.delta_i : -std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------

Outcome closed_vs_series() {
  const double etas[] = {0.1, 0.5, 0.93};
  const double pds[] = {0.0, 1.5e-9, 1e-3};
  constexpr int kLambdas = 13;  // 27 * 3 * 13 = 1053 points
  double worst = 0;
  int points = 0;
  for (double ea : etas) {
    for (double eb : etas) {
      for (double et : etas) {
        for (double pd : pds) {
          for (int i = 0; i < kLambdas; ++i) {
            const double lambda = static_cast<double>(i) / (kLambdas - 1);
            const double diff = std::abs(postselect_prob_closed(lambda, ea, eb, et, pd) -
                                         postselect_prob_series(lambda, ea, eb, et, pd));
            worst = std::max(worst, diff);
            ++points;
          }
        }
      }
    }
  }
  return {worst <= 1e-12, printf_str("%d points, max |diff| = %.3g", points, worst)};
}

Outcome monte_carlo_consistency() {
  IntensityConfig ic;  // mu 0.1, v1 0.05, v2 0.005
  constexpr int kSeeds = 100;
  int good = 0;
  double worst_z = 0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const auto cfg = make_sim_config(PhysicalParams{}, ic, 0.0, 0.5, 10'000'000, seed);
    const auto tally = simulate_session(cfg);
    bool ok = true;
    for (std::size_t slot = 0; slot < 3; ++slot) {
      const double p = postselect_prob(tally.lambda[slot], cfg.phys, cfg.frame, cfg.channel);
      const double n = static_cast<double>(tally.frames[slot][1]);
      const double z = std::abs(tally.p_hat(slot) - p) / std::sqrt(p * (1 - p) / n);
      worst_z = std::max(worst_z, z);
      ok = ok && z <= 5.0;
    }
    good += ok;
  }
  return {good >= 99, printf_str("%d/%d seeds within 5 sigma, max |z| = %.2f", good, kSeeds, worst_z)};
}

Outcome interval_coverage() {
  IntensityConfig ic;
  ic.mu = 0.25;
  ic.v1 = 0.125;
  ic.v2 = 0.0125;
  const auto cfg = make_sim_config(PhysicalParams{}, ic, 0.0, 0.5, 2'000'000, 2024);
  const auto h = coverage_experiment(cfg, 0.01, Method::hoeffding, 1000);
  const auto c = coverage_experiment(cfg, 0.01, Method::chernoff, 1000);
  return {h.fraction() >= 0.98 && c.fraction() >= 0.98,
          printf_str("hoeffding %.3f, chernoff %.3f (inapplicable %zu)", h.fraction(),
                     c.fraction(), c.inapplicable)};
}

Outcome bound_soundness() {
  int checks = 0;
  int violations = 0;
  const PhysicalParams phys;
  const auto frame = frame_params(phys);
  for (double mu : {0.01, 0.1, 0.25}) {
    for (int l = 0; l <= 200; l += 25) {
      const auto ch = channel_point(phys.alpha, l);
      const double g1 = gamma_n(1, phys.eta_alice, phys.eta_bob, ch.eta_t, frame.p_d);
      const double k = single_pair_fraction(mu, phys, frame, ch);
      for (auto mode : {DecoyMode::two_decoy, DecoyMode::single_decoy}) {
        const auto ic = detail::standard_intensities(mode, mu);
        const auto b = estimate_bounds(analytic_stats(phys, frame, ch, ic, 0.0), ic, frame.p_d);
        violations += !(b.gamma1_lb <= g1);
        violations += !(b.kmu_lb <= k);
        violations += !(b.zeta_t_ub >= frame.zeta);
        violations += !(b.zeta_w_ub >= frame.zeta);
        checks += 4;
      }
    }
  }
  return {violations == 0, printf_str("%d checks, %d violations", checks, violations)};
}

Outcome asymptotic_recovery() {
  const double grid[] = {1e8, 1e9, 1e10, 1e11, 1e12, 1e13, 1e14, 1e15, 1e16, 1e17, 1e18};
  double worst_gap = 0;
  double worst_gap_inf = 0;
  int monotone_breaks = 0;
  int series = 0;
  for (const auto& p : preset_catalog()) {
    for (double l : {0.0, 25.0, 50.0}) {
      const Scenario s = pinned(p.name);
      double prev = -std::numeric_limits<double>::infinity();
      for (double n : grid) {
        const double d = delta_or_neg_inf(run_point(with_n(s, PulseCount(n)), l));
        monotone_breaks += d < prev;
        prev = d;
      }
      const auto last = run_point(with_n(s, PulseCount(1e18)), l);
      const auto limit = run_point(with_n(s, PulseCount::infinite()), l);
      worst_gap = std::max(worst_gap, last.r_hd - last.delta_i);
      worst_gap_inf = std::max(worst_gap_inf, std::abs(limit.r_hd - last.delta_i));
      ++series;
    }
  }
  return {monotone_breaks == 0 && worst_gap < 1e-6,
          printf_str("%d series, %d monotonicity breaks, max R_HD - dI at N=1e18 = %.3g bpc "
                     "(vs N=inf rate: %.3g)",
                     series, monotone_breaks, worst_gap, worst_gap_inf)};
}

Outcome ordering_two_vs_single() {
  const char* pairs[][2] = {{"fig2a", "fig2d"}, {"fig2b", "fig2e"}, {"fig2c", "fig2f"}};
  bool ok = true;
  std::string detail;
  for (const auto& pr : pairs) {
    const auto two = max_distance(with_n(pinned(pr[0]), PulseCount::infinite()));
    const auto one = max_distance(with_n(pinned(pr[1]), PulseCount::infinite()));
    ok = ok && two.km >= one.km;
    detail += printf_str("%s %.1f%s vs %s %.1f; ", pr[0], two.km, two.saturated ? "+" : "", pr[1],
                         one.km);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

Outcome ordering_in_pulses() {
  const double grid[] = {1e9, 1e10, 1e11, 1e12, 1e13, 1e18, 1e24};
  bool ok = true;
  std::string detail;
  for (const char* name : {"fig2d", "fig3e", "fig2a"}) {
    const Scenario s = pinned(name);
    const auto inf = max_distance(with_n(s, PulseCount::infinite()));
    double prev = -1;
    std::string row = std::string(name) + ":";
    for (double n : grid) {
      const auto m = max_distance(with_n(s, PulseCount(n)));
      ok = ok && m.km >= prev && m.km <= inf.km + 0.1;
      if (inf.saturated) ok = ok && (n == grid[0] || m.km > prev);
      prev = m.km;
      row += printf_str(" %.1f", m.km);
    }
    if (!inf.saturated) ok = ok && std::abs(prev - inf.km) <= 1.0;
    row += printf_str(" -> inf %.1f%s", inf.km, inf.saturated ? "+" : "");
    detail += row + "; ";
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

Outcome chernoff_vs_hoeffding() {
  Scenario c = pinned("fig4a");
  c.method = Method::chernoff;
  Scenario h = c;
  h.method = Method::hoeffding;
  const auto rc = sweep_distance(c, 0, 300, 1);
  const auto rh = sweep_distance(h, 0, 300, 1);
  // Smallest L beyond which Chernoff never trails Hoeffding.
  std::size_t cross = rc.size();
  for (std::size_t i = rc.size(); i-- > 0;) {
    if (delta_or_neg_inf(rc[i]) < delta_or_neg_inf(rh[i])) break;
    cross = i;
  }
  const bool beyond = cross < rc.size() && rc[cross].positive;
  const double c0 = rc[0].delta_i;
  const double h0 = rh[0].delta_i;
  const bool origin = h0 >= c0;
  double h_end = 0, c_end = 0;
  for (std::size_t i = 0; i < rc.size(); ++i) {
    if (rh[i].positive) h_end = rc[i].length_km;
    if (rc[i].positive) c_end = rc[i].length_km;
  }
  return {beyond && origin,
          printf_str("Chernoff >= Hoeffding for L >= %.0f km (%s); at L=0 Hoeffding %.7f vs "
                     "Chernoff %.7f (%s); last positive L: Hoeffding %.0f, Chernoff %.0f",
                     cross < rc.size() ? rc[cross].length_km : NAN, beyond ? "ok" : "missing",
                     h0, c0, origin ? "ok" : "violated", h_end, c_end)};
}

struct Separation {
  double rel_dist;
  double rel_delta;  // sup |dI_two - dI_single| / dI_two(0)
};

Separation separation(PulseCount n) {
  const Scenario two = with_n(pinned("fig3a"), n);
  const Scenario one = with_n(pinned("fig3d"), n);
  const auto l2 = max_distance(two).km;
  const auto l1 = max_distance(one).km;
  const auto r2 = sweep_distance(two, 0, 300, 5);
  const auto r1 = sweep_distance(one, 0, 300, 5);
  double sup = 0;
  for (std::size_t i = 0; i < r2.size(); ++i) {
    if (!r2[i].positive && !r1[i].positive) continue;
    sup = std::max(sup, std::abs(std::max(0.0, delta_or_neg_inf(r2[i])) -
                                 std::max(0.0, delta_or_neg_inf(r1[i]))));
  }
  const double base = r2[0].positive ? r2[0].delta_i : 1.0;
  return {l2 > 0 ? std::abs(l2 - l1) / l2 : 0.0, sup / base};
}

Outcome decoy_separation() {
  const auto small = separation(PulseCount(1e9));
  const auto large = separation(PulseCount(1e12));
  const bool close = small.rel_dist <= 0.05 && small.rel_delta <= 0.05;
  const bool apart = large.rel_dist > 0.05 || large.rel_delta > 0.05;
  return {close && apart,
          printf_str("N=1e9: dist %.2f%%, dI %.2f%% (%s); N=1e12: dist %.2f%%, dI %.2f%% (%s)",
                     100 * small.rel_dist, 100 * small.rel_delta, close ? "close" : "apart",
                     100 * large.rel_dist, 100 * large.rel_delta, apart ? "apart" : "close")};
}

Outcome finite_terms() {
  const auto t = finite_key_terms(0.7, 0.5, PulseCount(1e12), 8, EpsilonBudget{});
  const Big eps("1e-10");
  const Big frames = Big("0.7") * Big("0.5") * Big("0.5") * Big("1e12");
  const Big ln2 = log(Big(2));
  const Big ec = log(Big(2) / eps) / ln2 / frames;
  const Big pa = 2 * (log(Big(1) / eps) / ln2) / frames;
  const Big sm = (2 * 8 + 3) * sqrt(log(Big(2) / eps) / ln2 / frames);
  auto rel = [](double got, const Big& ref) {
    return std::abs(static_cast<double>((Big(got) - ref) / ref));
  };
  const double worst = std::max({rel(t.ec_term, ec), rel(t.pa_term, pa), rel(t.smooth_term, sm)});
  return {worst <= 1e-12 && std::abs(t.smooth_term - 2.657e-4) < 5e-7,
          printf_str("ec %.6g, pa %.6g, smooth %.6g bpc, max rel err %.2g", t.ec_term, t.pa_term,
                     t.smooth_term, worst)};
}

Outcome determinism() {
  const Scenario base = pinned("fig3a");
  auto render = [&](unsigned parallel) {
    std::vector<ResultRow> rows;
    for (auto n : standard_pulse_grid()) {
      const auto part = sweep_distance(with_n(base, n), 0, 300, 5, parallel);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    std::ostringstream out;
    emit_csv(rows, out);
    return out.str();
  };
  const auto a = render(1);
  const auto b = render(1);
  const auto c = render(4);
  return {a == b && a == c,
          printf_str("%zu bytes; repeat %s, parallel 1 vs 4 %s", a.size(),
                     a == b ? "identical" : "DIFFERENT", a == c ? "identical" : "DIFFERENT")};
}

struct Criterion {
  const char* id;
  const char* title;
  double budget_s;  // 0 = none
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"1", "closed form matches series", 5, closed_vs_series},
      {"2", "Monte Carlo matches model", 120, monte_carlo_consistency},
      {"3", "interval coverage", 600, interval_coverage},
      {"4", "bound soundness at zero fluctuation", 0, bound_soundness},
      {"5", "asymptotic recovery", 0, asymptotic_recovery},
      {"6a", "two decoys reach at least as far", 0, ordering_two_vs_single},
      {"6b", "max distance grows with N", 0, ordering_in_pulses},
      {"6c", "Chernoff vs Hoeffding crossover", 0, chernoff_vs_hoeffding},
      {"6d", "single vs two decoys across N", 0, decoy_separation},
      {"7", "finite-key terms", 0, finite_terms},
      {"8", "deterministic CSV", 0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += printf_str("; exceeded %.0f s", c.budget_s);
    }
    failed += !o.pass;
    std::printf("%s criterion %-3s %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.title,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed ? 1 : 0;
}
