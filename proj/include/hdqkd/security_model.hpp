#pragma once

// Pluggable source of I(A;B) and of the upper bound on Eve's Holevo
// information, both evaluated at given excess-noise factors.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hdqkd/errors.hpp"

namespace hdqkd {

struct SecurityQuantities {
  double i_ab = 0.0;    // bits per coincidence
  double phi_ub = 0.0;  // bits
  double i_r = 0.0;     // log2 d
};

struct SecurityQuery {
  int schmidt_d = 8;
  double delta_coh = 30e-12;
  double delta_cor = 240e-12;
  double zeta_t = 0.0;
  double zeta_w = 0.0;
};

class SecurityModel {
 public:
  virtual ~SecurityModel() = default;
  virtual SecurityQuantities evaluate(const SecurityQuery& q) const = 0;
  virtual std::string name() const = 0;
};

// ---------------------------------------------------------------------------
// Tabulated model

/// Immutable grid of (i_ab, phi_ub) per dimension d over a full
/// zeta_t x zeta_w tensor grid. Queries interpolate bilinearly and refuse
/// to extrapolate.
class SecurityTable {
 public:
  struct Entry {
    double i_ab;
    double phi_ub;
  };

  /// Parses `d zeta_t zeta_w i_ab phi_ub` lines; `#` starts a comment.
  static SecurityTable parse(std::istream& in) {
    std::map<int, std::map<std::pair<double, double>, Entry>> raw;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::istringstream ls(line);
      double d_real = 0.0;
      double zt = 0.0;
      double zw = 0.0;
      Entry e{};
      std::string extra;
      if (!(ls >> d_real >> zt >> zw >> e.i_ab >> e.phi_ub) || (ls >> extra)) {
        throw ConfigError("security table: expected 5 numeric fields", lineno);
      }
      const int d = static_cast<int>(d_real);
      if (d != d_real || d < 2) {
        throw ConfigError("security table: d must be an integer >= 2", lineno);
      }
      if (!(zt >= 0.0) || !(zw >= 0.0) || !(e.i_ab >= 0.0) || !(e.phi_ub >= 0.0)) {
        throw ConfigError("security table: fields must be finite and >= 0", lineno);
      }
      auto [it, inserted] = raw[d].emplace(std::make_pair(zt, zw), e);
      if (!inserted) {
        throw ConfigError("security table: duplicate grid point", lineno);
      }
    }
    if (raw.empty()) throw ConfigError("security table: no entries");

    SecurityTable table;
    for (auto& [d, points] : raw) {
      Grid g;
      for (const auto& [key, e] : points) {
        g.zeta_t.push_back(key.first);
        g.zeta_w.push_back(key.second);
      }
      auto uniq = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
      };
      uniq(g.zeta_t);
      uniq(g.zeta_w);
      if (g.zeta_t.size() * g.zeta_w.size() != points.size()) {
        throw ConfigError("security table: grid for d=" + std::to_string(d) +
                          " is not a full zeta_t x zeta_w product");
      }
      g.values.reserve(points.size());
      for (double zt : g.zeta_t) {
        for (double zw : g.zeta_w) g.values.push_back(points.at({zt, zw}));
      }
      table.grids_.emplace(d, std::move(g));
    }
    return table;
  }

  static SecurityTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open security table", path);
    return parse(in);
  }

  SecurityQuantities lookup(int d, double zeta_t, double zeta_w) const {
    auto it = grids_.find(d);
    if (it == grids_.end()) {
      throw DomainError("security table: no entries for d=" + std::to_string(d));
    }
    const Grid& g = it->second;
    const auto [it0, ft] = locate(g.zeta_t, zeta_t, "zeta_t");
    const auto [jt0, fw] = locate(g.zeta_w, zeta_w, "zeta_w");
    const std::size_t nw = g.zeta_w.size();
    auto at = [&](std::size_t i, std::size_t j) {
      return g.values[std::min(i, g.zeta_t.size() - 1) * nw + std::min(j, nw - 1)];
    };
    const Entry e00 = at(it0, jt0), e01 = at(it0, jt0 + 1);
    const Entry e10 = at(it0 + 1, jt0), e11 = at(it0 + 1, jt0 + 1);
    auto mix = [&](double Entry::*field) {
      return (1 - ft) * (1 - fw) * e00.*field + (1 - ft) * fw * e01.*field +
             ft * (1 - fw) * e10.*field + ft * fw * e11.*field;
    };
    return {mix(&Entry::i_ab), mix(&Entry::phi_ub), std::log2(static_cast<double>(d))};
  }

  bool has_dimension(int d) const { return grids_.count(d) != 0; }

  double max_zeta_t(int d) const { return grids_.at(d).zeta_t.back(); }

 private:
  struct Grid {
    std::vector<double> zeta_t;
    std::vector<double> zeta_w;
    std::vector<Entry> values;  // row-major in (zeta_t, zeta_w)
  };

  // Index of the lower grid node and the fractional position above it.
  static std::pair<std::size_t, double> locate(const std::vector<double>& axis,
                                               double x, const char* name) {
    if (!(x >= axis.front() && x <= axis.back())) {
      std::ostringstream msg;
      msg << "security table: " << name << "=" << x << " outside ["
          << axis.front() << ", " << axis.back() << "]";
      throw DomainError(msg.str());
    }
    if (axis.size() == 1) return {0, 0.0};
    auto hi = std::upper_bound(axis.begin(), axis.end(), x);
    std::size_t i = static_cast<std::size_t>(hi - axis.begin());
    if (i == axis.size()) return {axis.size() - 1, 0.0};
    --i;
    return {i, (x - axis[i]) / (axis[i + 1] - axis[i])};
  }

  std::map<int, Grid> grids_;
};

/// Tabulated lookup at (d, zeta_t, zeta_w).
inline SecurityQuantities security_model_table(const SecurityTable& table, int d,
                                               double zeta_t, double zeta_w) {
  return table.lookup(d, zeta_t, zeta_w);
}

class TableSecurityModel final : public SecurityModel {
 public:
  explicit TableSecurityModel(std::shared_ptr<const SecurityTable> table,
                              std::string source = "table")
      : table_(std::move(table)), source_(std::move(source)) {}

  SecurityQuantities evaluate(const SecurityQuery& q) const override {
    return table_->lookup(q.schmidt_d, q.zeta_t, q.zeta_w);
  }
  std::string name() const override { return "table"; }
  const std::string& source() const { return source_; }
  const SecurityTable& table() const { return *table_; }

 private:
  std::shared_ptr<const SecurityTable> table_;
  std::string source_;
};

// ---------------------------------------------------------------------------
// Gaussian collective-attack model
//
// Biphoton timing/frequency covariance in units where t is measured in
// coherence times and omega in inverse coherence times, so [t, omega] = i and
// a pure single-mode state has symplectic eigenvalue 1/2. With r the ratio
// of correlation to coherence time:
//   Var t  = r^2 + 1/4          Cov(t_A, t_B) = r^2 - 1/4
//   Var w  = 1/4 + 1/(16 r^2)   Cov(w_A, w_B) = 1/(16 r^2) - 1/4
// Eve's action is independent Gaussian noise on Bob's mode that scales
// Var(t_A - t_B) by (1 + zeta_t) and Var(w_A + w_B) by (1 + zeta_w).
// The bound is S(AB) - S(B | t_A) with Eve holding the purification.

namespace detail {

/// Von Neumann entropy (bits) of a thermal mode with symplectic
/// eigenvalue nu >= 1/2.
inline double thermal_entropy(double nu) {
  const double up = nu + 0.5;
  const double down = nu - 0.5;
  if (down <= 0.0) return 0.0;
  return up * std::log2(up) - down * std::log2(down);
}

}  // namespace detail

inline SecurityQuantities security_model_gaussian(int d, double delta_coh,
                                                  double delta_cor,
                                                  double zeta_t_ub,
                                                  double zeta_w_ub) {
  if (d < 2) throw DomainError("security_model_gaussian: d must be >= 2");
  if (!(delta_coh > 0.0) || !(delta_cor > 0.0)) {
    throw DomainError("security_model_gaussian: times must be > 0");
  }
  if (!(zeta_t_ub >= 0.0) || !(zeta_w_ub >= 0.0) || std::isinf(zeta_t_ub) ||
      std::isinf(zeta_w_ub)) {
    throw DomainError("security_model_gaussian: zeta must be finite and >= 0");
  }
  const double r2 = (delta_cor / delta_coh) * (delta_cor / delta_coh);
  const double a_t = r2 + 0.25;
  const double a_w = 0.25 + 1.0 / (16.0 * r2);
  const double noise_t = zeta_t_ub;                 // Var0(t_A - t_B) = 1
  const double noise_w = zeta_w_ub / (4.0 * r2);    // Var0(w_A + w_B)
  const double b_t = a_t + noise_t;
  const double b_w = a_w + noise_w;

  // Determinants of the timing and frequency blocks, written without the
  // cancellation of a*b - c^2.
  const double det_t = r2 + a_t * noise_t;
  const double det_w = 1.0 / (16.0 * r2) + a_w * noise_w;
  const double det_all = det_t * det_w;
  const double delta = 0.5 + noise_t * a_w + noise_w * a_t + noise_t * noise_w;
  const double disc = std::sqrt(std::max(0.0, delta * delta - 4.0 * det_all));
  const double nu_plus = std::sqrt((delta + disc) / 2.0);
  const double nu_minus = std::sqrt(std::max(0.0, det_all) / (nu_plus * nu_plus));
  const double s_ab =
      detail::thermal_entropy(nu_plus) + detail::thermal_entropy(nu_minus);

  // Bob's mode conditioned on a time measurement by Alice.
  const double nu_cond = std::sqrt(det_t / a_t * b_w);
  const double s_cond = detail::thermal_entropy(nu_cond);

  SecurityQuantities q;
  q.i_r = std::log2(static_cast<double>(d));
  q.phi_ub = std::max(0.0, s_ab - s_cond);
  const double mi = 0.5 * std::log2(a_t * b_t / det_t);
  q.i_ab = std::clamp(mi, 0.0, q.i_r);
  return q;
}

class GaussianSecurityModel final : public SecurityModel {
 public:
  SecurityQuantities evaluate(const SecurityQuery& q) const override {
    return security_model_gaussian(q.schmidt_d, q.delta_coh, q.delta_cor,
                                   q.zeta_t, q.zeta_w);
  }
  std::string name() const override { return "gaussian"; }
};

/// Zeta grid of the pinned table: dense where presets operate, sparse out
/// to the no-key cap.
inline std::vector<double> default_zeta_grid() {
  return {0,     0.005, 0.01,  0.015, 0.02, 0.025, 0.03, 0.04, 0.05, 0.06, 0.07,
          0.075, 0.08,  0.085, 0.09,  0.095, 0.1,  0.11, 0.12, 0.13, 0.14, 0.15,
          0.175, 0.2,   0.25,  0.3,   0.4,  0.5,   0.75, 1,    1.5,  2,    3,
          5,     7.5,   10,    20,    50,   100,   200,  500,  1000};
}

/// Renders a table of the Gaussian model over `zeta_grid` x `zeta_grid`
/// for each d, in the format SecurityTable::parse reads. delta_cor is taken
/// as d * delta_coh.
inline std::string render_gaussian_table(const std::vector<int>& dims,
                                         const std::vector<double>& zeta_grid,
                                         double delta_coh) {
  std::string out =
      "# d zeta_t zeta_w i_ab phi_ub\n"
      "# Gaussian collective-attack model, delta_cor = d * delta_coh\n";
  char buf[160];
  for (int d : dims) {
    for (double zt : zeta_grid) {
      for (double zw : zeta_grid) {
        const auto q = security_model_gaussian(d, delta_coh, d * delta_coh, zt, zw);
        std::snprintf(buf, sizeof buf, "%d %.17g %.17g %.17g %.17g\n", d, zt, zw,
                      q.i_ab, q.phi_ub);
        out += buf;
      }
    }
  }
  return out;
}

}  // namespace hdqkd
