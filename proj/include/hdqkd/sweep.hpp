#pragma once

// End-to-end evaluation of a scenario at one or many channel lengths,
// maximum-distance search, and CSV / plot-data output.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "hdqkd/decoy_bounds.hpp"
#include "hdqkd/errors.hpp"
#include "hdqkd/estimation.hpp"
#include "hdqkd/keyrate.hpp"
#include "hdqkd/phys_model.hpp"
#include "hdqkd/scenario.hpp"

namespace hdqkd {

struct ResultRow {
  double length_km = 0.0;
  PulseCount n_pulses = PulseCount::infinite();
  Method method = Method::exact;  // method actually applied
  double delta_i = -std::numeric_limits<double>::infinity();
  double r_hd = -std::numeric_limits<double>::infinity();
  double kmu_lb = 0.0;
  double zeta_t_ub = std::numeric_limits<double>::infinity();
  double zeta_w_ub = std::numeric_limits<double>::infinity();
  double ec_term = 0.0;
  double pa_term = 0.0;
  double smooth_term = 0.0;
  bool positive = false;
  std::vector<std::string> vacuous;  // intensities whose interval fell back to [0,1]
  std::string note;                  // reason for a no-key row, if any
};

/// Evaluates the scenario at one length with model-expectation statistics.
/// ChernoffInapplicable propagates under InapplicablePolicy::error; other
/// estimation failures give a row with positive = false.
inline ResultRow run_point(const Scenario& s, double length_km) {
  s.validate();
  const auto frame = frame_params(s.phys);
  const auto channel = channel_point(s.phys.alpha, length_km);

  ResultRow row;
  row.length_km = length_km;
  row.n_pulses = s.n_pulses;
  row.method = s.n_pulses.is_infinite() ? Method::exact : s.method;

  KeyRateInputs in;
  in.beta = s.beta;
  in.p_mu = s.intensities.p_mu;
  in.p_t = s.p_t;
  in.n_pulses = s.n_pulses;
  in.schmidt_d = s.phys.schmidt_d;
  in.budget = s.budget;
  const auto fk = finite_key_terms(in.p_mu, in.p_t, in.n_pulses, in.schmidt_d, in.budget);
  row.ec_term = fk.ec_term;
  row.pa_term = fk.pa_term;
  row.smooth_term = fk.smooth_term;

  EstimationSettings es;
  es.method = s.method;
  es.eps_pe = s.budget.eps_pe;
  es.p_t = s.p_t;
  es.n_pulses = s.n_pulses;
  es.on_inapplicable = s.on_inapplicable;

  DecoyBounds bounds;
  try {
    const auto expected = analytic_stats(s.phys, frame, channel, s.intensities, s.delta_phi);
    const auto measured = apply_fluctuation(expected, s.intensities, es, &row.vacuous);
    bounds = estimate_bounds(measured, s.intensities, frame.p_d);
  } catch (const ChernoffInapplicable&) {
    throw;
  } catch (const ComputationError& e) {
    row.note = e.what();
    return row;
  }
  row.kmu_lb = bounds.kmu_lb;
  row.zeta_t_ub = bounds.zeta_t_ub;
  row.zeta_w_ub = bounds.zeta_w_ub;
  if (bounds.no_key || !(bounds.kmu_lb > 0.0)) {
    row.note = "no key";
    return row;
  }

  SecurityQuery q;
  q.schmidt_d = s.phys.schmidt_d;
  q.delta_coh = s.phys.delta_coh;
  q.delta_cor = frame.delta_cor;
  q.zeta_t = bounds.zeta_t_ub;
  q.zeta_w = bounds.zeta_w_ub;
  const auto sq = s.security->evaluate(q);
  const auto res = delta_i(in, bounds, sq);
  row.delta_i = res.delta_i;
  row.r_hd = res.r_hd;
  row.positive = res.positive;
  return row;
}

namespace detail {

// Evaluates fn(i) for i in [0, n) on up to `workers` threads; results keep
// index order. The first exception (lowest index) is rethrown.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, unsigned workers, Fn fn) {
  std::vector<T> out(n);
  std::vector<std::exception_ptr> errors(n);
  auto body = [&](std::size_t i) {
    try {
      out[i] = fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += workers) body(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace detail

/// Lengths l_min, l_min + step, ... up to l_max (inclusive within 1e-9 step).
inline std::vector<double> length_grid(double l_min, double l_max, double step) {
  if (!(l_min >= 0.0) || !(l_max >= l_min) || std::isinf(l_max)) {
    throw DomainError("length grid: requires 0 <= l_min <= l_max < inf");
  }
  if (!(step > 0.0)) throw DomainError("length grid: step must be > 0");
  const auto n = static_cast<std::size_t>(std::floor((l_max - l_min) / step + 1e-9)) + 1;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = l_min + static_cast<double>(i) * step;
  return g;
}

inline std::vector<ResultRow> sweep_distance(const Scenario& s, double l_min, double l_max,
                                             double step, unsigned parallel = 1) {
  const auto grid = length_grid(l_min, l_max, step);
  return detail::parallel_map<ResultRow>(grid.size(), parallel,
                                         [&](std::size_t i) { return run_point(s, grid[i]); });
}

struct MaxDistance {
  double km = 0.0;
  bool monotone = true;   // false if the coarse scan found a non-monotone profile
  bool saturated = false; // still positive at the scan limit
};

/// Largest length with positive delta_i, to 0.1 km. Assumes delta_i is
/// nonincreasing in L; a coarse 5 km scan checks that and, if it fails,
/// the answer comes from a 0.1 km grid scan instead of bisection.
inline MaxDistance max_distance(const Scenario& s, double l_limit = 1000.0,
                                unsigned parallel = 1) {
  constexpr double coarse = 5.0;
  constexpr double tol = 0.1;
  auto positive = [&](double l) { return run_point(s, l).positive; };

  const auto grid = length_grid(0.0, l_limit, coarse);
  const auto flags = detail::parallel_map<char>(
      grid.size(), parallel, [&](std::size_t i) { return static_cast<char>(positive(grid[i])); });

  MaxDistance res;
  std::size_t first_off = flags.size();
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (!flags[i]) {
      first_off = i;
      break;
    }
  }
  for (std::size_t i = first_off; i < flags.size(); ++i) {
    if (flags[i]) res.monotone = false;
  }

  if (!res.monotone) {
    const auto fine = length_grid(0.0, l_limit, tol);
    const auto ff = detail::parallel_map<char>(
        fine.size(), parallel, [&](std::size_t i) { return static_cast<char>(positive(fine[i])); });
    for (std::size_t i = 0; i < ff.size(); ++i) {
      if (ff[i]) res.km = fine[i];
    }
    res.saturated = ff.back();
    return res;
  }
  if (first_off == 0) return res;
  if (first_off == flags.size()) {
    res.km = grid.back();
    res.saturated = true;
    return res;
  }
  double lo = grid[first_off - 1];
  double hi = grid[first_off];
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (positive(mid) ? lo : hi) = mid;
  }
  res.km = lo;
  return res;
}

// ---------------------------------------------------------------------------
// Output

inline const char* csv_header() {
  return "length_km,n_pulses,method,delta_i_bpc,r_hd_bpc,kmu_lb,zeta_t_ub,zeta_w_ub,"
         "ec_term,pa_term,smooth_term,positive";
}

namespace detail {

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Rows sharing (n_pulses, method) with their predecessor must advance in L.
inline void check_order(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw DomainError("emit: no rows");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& a = rows[i - 1];
    const auto& b = rows[i];
    const bool same_series = a.method == b.method &&
                             a.n_pulses.is_infinite() == b.n_pulses.is_infinite() &&
                             (a.n_pulses.is_infinite() || a.n_pulses.value() == b.n_pulses.value());
    if (same_series && !(b.length_km > a.length_km)) {
      throw DomainError("emit: rows not in ascending length_km order at row " +
                        std::to_string(i + 1));
    }
  }
}

template <class Writer>
void write_to_path(const std::string& path, Writer w) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing", path);
  w(out);
  out.flush();
  if (!out) throw IoError("write failed", path);
}

}  // namespace detail

inline void emit_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
  detail::check_order(rows);
  std::string text = csv_header();
  text += '\n';
  for (const auto& r : rows) {
    using detail::fmt_double;
    text += fmt_double(r.length_km) + ',' + format_pulse_count(r.n_pulses) + ',' +
            std::string(to_string(r.method)) + ',' + fmt_double(r.delta_i) + ',' +
            fmt_double(r.r_hd) + ',' + fmt_double(r.kmu_lb) + ',' + fmt_double(r.zeta_t_ub) +
            ',' + fmt_double(r.zeta_w_ub) + ',' + fmt_double(r.ec_term) + ',' +
            fmt_double(r.pa_term) + ',' + fmt_double(r.smooth_term) + ',' +
            (r.positive ? "true" : "false") + '\n';
  }
  out << text;
}

inline void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  detail::check_order(rows);
  detail::write_to_path(path, [&](std::ostream& o) { emit_csv(rows, o); });
}

/// Two-column `length_km delta_i` blocks, one per (n_pulses, method)
/// series, separated by blank lines. Rows without key print as NaN so
/// plotting tools leave a gap.
inline void emit_plotdata(const std::vector<ResultRow>& rows, std::ostream& out) {
  detail::check_order(rows);
  std::string text;
  const ResultRow* prev = nullptr;
  for (const auto& r : rows) {
    const bool new_series = !prev || prev->method != r.method ||
                            format_pulse_count(prev->n_pulses) != format_pulse_count(r.n_pulses);
    if (new_series) {
      if (prev) text += "\n\n";
      text += "# n_pulses=" + format_pulse_count(r.n_pulses) +
              " method=" + std::string(to_string(r.method)) + '\n';
    }
    text += detail::fmt_double(r.length_km) + ' ' +
            (r.positive ? detail::fmt_double(r.delta_i) : std::string("NaN")) + '\n';
    prev = &r;
  }
  out << text;
}

inline void emit_plotdata(const std::vector<ResultRow>& rows, const std::string& path) {
  detail::check_order(rows);
  detail::write_to_path(path, [&](std::ostream& o) { emit_plotdata(rows, o); });
}

// ---------------------------------------------------------------------------
// Decoy optimizer

struct DecoyChoice {
  IntensityConfig intensities;
  ResultRow row;
};

/// Grid search over decoy intensities at fixed mu and length: v1 (or v)
/// over `steps` fractions of the admissible range and, in two-decoy mode,
/// v2 over `steps` fractions of v1 including 0. Returns the choice with the
/// largest delta_i.
inline DecoyChoice optimize_decoys(const Scenario& s, double length_km, int steps = 20,
                                   unsigned parallel = 1) {
  if (steps < 1) throw DomainError("optimize_decoys: steps must be >= 1");
  std::vector<IntensityConfig> candidates;
  const auto& base = s.intensities;
  for (int i = 1; i <= steps; ++i) {
    IntensityConfig ic = base;
    const double f = static_cast<double>(i) / (steps + 1);
    if (base.mode == DecoyMode::single_decoy) {
      ic.v1 = f * base.mu;
      candidates.push_back(ic);
      continue;
    }
    for (int j = 0; j < steps; ++j) {
      ic.v2 = static_cast<double>(j) / steps * f * base.mu;
      // keep mu > v1 + v2 by shrinking v1 into the remaining room
      ic.v1 = f * (base.mu - ic.v2);
      if (ic.v1 > ic.v2 && base.mu > ic.v1 + ic.v2) candidates.push_back(ic);
    }
  }
  const auto rows = detail::parallel_map<ResultRow>(candidates.size(), parallel, [&](std::size_t k) {
    Scenario t = s;
    t.intensities = candidates[k];
    return run_point(t, length_km);
  });
  std::size_t best = 0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    if (rows[k].delta_i > rows[best].delta_i) best = k;
  }
  return {candidates[best], rows[best]};
}

}  // namespace hdqkd
