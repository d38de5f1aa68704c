#pragma once

// Scenario description, named presets, and the
// `key = value` configuration format.
//
//   preset = fig3a            # optional, before any section
//   [physical]  alpha eta eta_alice eta_bob r_dc delta_j delta_coh
//               schmidt_d delta_delta
//   [protocol]  mode mu v1 v2 v p_mu p_v1 ratios p_t n_pulses method beta
//               delta_phi chernoff_inapplicable
//   [epsilons]  eps_pe eps_ec eps_bar eps_pa
//   [security_model]  kind = gaussian | table, table = PATH
//
// Times are in seconds. Omitted decoys default to v1 = mu/2, v2 = v1/10
// (two-decoy) or v = mu/2 (single-decoy).

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hdqkd/decoy_bounds.hpp"
#include "hdqkd/errors.hpp"
#include "hdqkd/estimation.hpp"
#include "hdqkd/finite_stats.hpp"
#include "hdqkd/phys_model.hpp"
#include "hdqkd/security_model.hpp"

namespace hdqkd {

struct Scenario {
  std::string name;
  PhysicalParams phys;
  IntensityConfig intensities;
  double p_t = 0.5;
  EpsilonBudget budget;
  Method method = Method::hoeffding;
  PulseCount n_pulses = PulseCount(1e12);
  std::shared_ptr<const SecurityModel> security = std::make_shared<GaussianSecurityModel>();
  double beta = 0.9;
  double delta_phi = 0.0;
  InapplicablePolicy on_inapplicable = InapplicablePolicy::vacuous;

  void validate() const {
    phys.validate();
    intensities.validate();
    budget.validate();
    if (!(p_t > 0.0 && p_t < 1.0)) throw DomainError("Scenario: p_t must lie in (0,1)");
    if (!(beta > 0.0 && beta <= 1.0)) throw DomainError("Scenario: beta must lie in (0,1]");
    if (!(delta_phi >= 0.0) || std::isinf(delta_phi)) {
      throw DomainError("Scenario: delta_phi must be finite and >= 0");
    }
    if (!security) throw DomainError("Scenario: no security model");
  }
};

/// Pulse-count grid offered for N sweeps.
inline std::vector<PulseCount> standard_pulse_grid() {
  return {PulseCount(1e8),  PulseCount(1e9),  PulseCount(1e10), PulseCount(1e11),
          PulseCount(1e12), PulseCount(1e13), PulseCount::infinite()};
}

/// "inf" or a nonnegative number such as 1e12.
inline PulseCount parse_pulse_count(std::string_view s) {
  if (s == "inf" || s == "infinity" || s == "Inf") return PulseCount::infinite();
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) {
    throw DomainError("invalid pulse count '" + std::string(s) + "'");
  }
  return PulseCount(v);
}

inline std::string format_pulse_count(PulseCount n) {
  if (n.is_infinite()) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", n.value());
  return buf;
}

/// Splits "7:2:1" into probabilities normalized to sum 1.
inline std::vector<double> parse_ratios(std::string_view s) {
  std::vector<double> parts;
  std::size_t start = 0;
  while (true) {
    const auto colon = s.find(':', start);
    const auto tok = s.substr(start, colon == std::string_view::npos ? s.npos : colon - start);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size() || !(v > 0.0) || std::isinf(v)) {
      throw DomainError("invalid ratio '" + std::string(s) + "'");
    }
    parts.push_back(v);
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  double total = 0.0;
  for (double v : parts) total += v;
  for (double& v : parts) v /= total;
  return parts;
}

// ---------------------------------------------------------------------------
// Presets

namespace detail {

inline IntensityConfig standard_intensities(DecoyMode mode, double mu) {
  IntensityConfig ic;
  ic.mode = mode;
  ic.mu = mu;
  ic.v1 = mu / 2.0;
  if (mode == DecoyMode::two_decoy) {
    ic.v2 = ic.v1 / 10.0;
    ic.p_mu = 0.7;
    ic.p_v1 = 0.2;
  } else {
    ic.v2 = 0.0;
    ic.p_mu = 0.8;
    ic.p_v1 = 0.2;
  }
  return ic;
}

inline Scenario make_preset(std::string name, int d, DecoyMode mode, double mu,
                            Method method) {
  Scenario s;
  s.name = std::move(name);
  s.phys.schmidt_d = d;
  s.intensities = standard_intensities(mode, mu);
  s.method = method;
  return s;
}

}  // namespace detail

struct PresetInfo {
  const char* name;
  int schmidt_d;
  DecoyMode mode;
  double mu;
  Method method;
  double n_pulses;
};

inline const std::vector<PresetInfo>& preset_catalog() {
  constexpr auto two = DecoyMode::two_decoy;
  constexpr auto one = DecoyMode::single_decoy;
  constexpr auto hoef = Method::hoeffding;
  constexpr auto cher = Method::chernoff;
  static const std::vector<PresetInfo> catalog = {
      {"fig2a", 8, two, 0.01, hoef, 1e12},  {"fig2b", 8, two, 0.10, hoef, 1e12},
      {"fig2c", 8, two, 0.25, hoef, 1e12},  {"fig2d", 8, one, 0.01, hoef, 1e12},
      {"fig2e", 8, one, 0.10, hoef, 1e12},  {"fig2f", 8, one, 0.25, hoef, 1e12},
      {"fig3a", 8, two, 0.01, cher, 1e12},  {"fig3b", 8, two, 0.10, cher, 1e12},
      {"fig3c", 8, two, 0.25, cher, 1e12},  {"fig3d", 8, one, 0.01, cher, 1e12},
      {"fig3e", 8, one, 0.10, cher, 1e12},  {"fig3f", 8, one, 0.25, cher, 1e12},
      {"fig4a", 8, one, 0.10, cher, 1e12},  {"fig4b", 8, one, 0.25, cher, 1e11},
      {"fig5", 32, one, 0.01, cher, 1e12},  {"fig6a", 32, two, 0.10, cher, 1e12},
      {"fig6b", 32, two, 0.25, cher, 1e12},
  };
  return catalog;
}

/// Fully populated preset. Unknown names throw ConfigError.
inline Scenario preset(std::string_view name) {
  for (const auto& p : preset_catalog()) {
    if (name != p.name) continue;
    Scenario s = detail::make_preset(p.name, p.schmidt_d, p.mode, p.mu, p.method);
    s.n_pulses = PulseCount(p.n_pulses);
    return s;
  }
  throw ConfigError("unknown preset '" + std::string(name) + "'", 0, "preset");
}

// ---------------------------------------------------------------------------
// Config parsing

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == s.npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct ConfigEntry {
  std::string value;
  std::size_t line;
};

}  // namespace detail

/// Parses a configuration document. `preset_name` (e.g. from the command
/// line) overrides any `preset` key in the text. Relative table paths
/// resolve against `base_dir`.
inline Scenario parse_config(std::string_view text,
                             std::optional<std::string> preset_name = std::nullopt,
                             const std::string& base_dir = ".") {
  static const std::map<std::string, std::set<std::string>> known = {
      {"", {"preset"}},
      {"physical",
       {"alpha", "eta", "eta_alice", "eta_bob", "r_dc", "delta_j", "delta_coh",
        "schmidt_d", "delta_delta"}},
      {"protocol",
       {"mode", "mu", "v1", "v2", "v", "p_mu", "p_v1", "ratios", "p_t", "n_pulses",
        "method", "beta", "delta_phi", "chernoff_inapplicable"}},
      {"epsilons", {"eps_pe", "eps_ec", "eps_bar", "eps_pa"}},
      {"security_model", {"kind", "table"}},
  };

  std::map<std::string, detail::ConfigEntry> kv;  // "section.key"
  std::string section;
  std::size_t lineno = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != line.npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header", lineno);
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      if (section.empty() || !known.count(section)) {
        throw ConfigError("unknown section [" + section + "]", lineno, section);
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == line.npos) throw ConfigError("expected 'key = value'", lineno);
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("missing key", lineno);
    if (!known.at(section).count(key)) {
      throw ConfigError("unknown key '" + key + "'" +
                            (section.empty() ? "" : " in [" + section + "]"),
                        lineno, key);
    }
    if (value.empty()) throw ConfigError("missing value for '" + key + "'", lineno, key);
    const std::string full = section.empty() ? key : section + "." + key;
    if (kv.count(full)) throw ConfigError("duplicate key '" + key + "'", lineno, key);
    kv.emplace(full, detail::ConfigEntry{value, lineno});
  }

  auto has = [&](const char* k) { return kv.count(k) != 0; };
  auto line_of = [&](const char* k) { return has(k) ? kv.at(k).line : 0; };
  auto short_key = [](const std::string& full) {
    const auto dot = full.find('.');
    return dot == full.npos ? full : full.substr(dot + 1);
  };
  auto number = [&](const char* k) {
    const auto& e = kv.at(k);
    double v = 0.0;
    const auto* end = e.value.data() + e.value.size();
    const auto [p, ec] = std::from_chars(e.value.data(), end, v);
    if (ec != std::errc() || p != end || std::isnan(v)) {
      throw ConfigError("'" + e.value + "' is not a number", e.line, short_key(k));
    }
    return v;
  };
  auto get = [&](const char* k, double& dst) {
    if (has(k)) dst = number(k);
  };
  // Wraps conversions that throw DomainError so the key is reported.
  auto guarded = [&](const char* k, auto&& fn) {
    try {
      fn();
    } catch (const DomainError& e) {
      throw ConfigError(e.what(), line_of(k), short_key(k));
    }
  };

  std::string base = preset_name.value_or(has("preset") ? kv.at("preset").value : "");
  Scenario s;
  if (!base.empty()) {
    try {
      s = preset(base);
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), line_of("preset"), "preset");
    }
  } else {
    s.name = "custom";
    s.intensities = detail::standard_intensities(DecoyMode::two_decoy, 0.1);
  }

  // [physical]
  auto& ph = s.phys;
  get("physical.alpha", ph.alpha);
  if (has("physical.eta")) ph.eta_alice = ph.eta_bob = number("physical.eta");
  get("physical.eta_alice", ph.eta_alice);
  get("physical.eta_bob", ph.eta_bob);
  get("physical.r_dc", ph.r_dc);
  get("physical.delta_j", ph.delta_j);
  get("physical.delta_coh", ph.delta_coh);
  get("physical.delta_delta", ph.delta_delta);
  if (has("physical.schmidt_d")) {
    const double d = number("physical.schmidt_d");
    if (d != std::floor(d) || d < 2 || d > 1 << 20) {
      throw ConfigError("schmidt_d must be an integer >= 2", line_of("physical.schmidt_d"),
                        "schmidt_d");
    }
    ph.schmidt_d = static_cast<int>(d);
  }

  // [protocol]
  auto& ic = s.intensities;
  if (has("protocol.mode")) {
    guarded("protocol.mode", [&] {
      const auto mode = parse_decoy_mode(kv.at("protocol.mode").value);
      if (mode != ic.mode) {
        const auto fresh = detail::standard_intensities(mode, ic.mu);
        ic = fresh;
      }
    });
  }
  if (ic.mode == DecoyMode::single_decoy && (has("protocol.v1") || has("protocol.v2"))) {
    const char* k = has("protocol.v1") ? "protocol.v1" : "protocol.v2";
    throw ConfigError("single-decoy mode takes 'v', not '" + short_key(k) + "'",
                      line_of(k), short_key(k));
  }
  if (ic.mode == DecoyMode::two_decoy && has("protocol.v")) {
    throw ConfigError("two-decoy mode takes 'v1' and 'v2', not 'v'", line_of("protocol.v"),
                      "v");
  }
  if (has("protocol.mu")) {
    ic.mu = number("protocol.mu");
    if (!has("protocol.v1") && !has("protocol.v")) ic.v1 = ic.mu / 2.0;
  }
  get("protocol.v1", ic.v1);
  get("protocol.v", ic.v1);
  if (ic.mode == DecoyMode::two_decoy) {
    if (has("protocol.v2")) {
      ic.v2 = number("protocol.v2");
    } else if (has("protocol.mu") || has("protocol.v1")) {
      ic.v2 = ic.v1 / 10.0;
    }
  }
  if (has("protocol.ratios")) {
    guarded("protocol.ratios", [&] {
      const auto r = parse_ratios(kv.at("protocol.ratios").value);
      const std::size_t want = ic.mode == DecoyMode::two_decoy ? 3 : 2;
      if (r.size() != want) {
        throw DomainError("ratios must have " + std::to_string(want) + " parts");
      }
      ic.p_mu = r[0];
      ic.p_v1 = r[1];
    });
  }
  get("protocol.p_mu", ic.p_mu);
  get("protocol.p_v1", ic.p_v1);
  get("protocol.p_t", s.p_t);
  get("protocol.beta", s.beta);
  get("protocol.delta_phi", s.delta_phi);
  if (has("protocol.n_pulses")) {
    guarded("protocol.n_pulses",
            [&] { s.n_pulses = parse_pulse_count(kv.at("protocol.n_pulses").value); });
  }
  if (has("protocol.method")) {
    guarded("protocol.method", [&] { s.method = parse_method(kv.at("protocol.method").value); });
  }
  if (has("protocol.chernoff_inapplicable")) {
    guarded("protocol.chernoff_inapplicable", [&] {
      s.on_inapplicable =
          parse_inapplicable_policy(kv.at("protocol.chernoff_inapplicable").value);
    });
  }

  // [epsilons]
  get("epsilons.eps_pe", s.budget.eps_pe);
  get("epsilons.eps_ec", s.budget.eps_ec);
  get("epsilons.eps_bar", s.budget.eps_bar);
  get("epsilons.eps_pa", s.budget.eps_pa);

  // [security_model]
  const std::string kind =
      has("security_model.kind") ? kv.at("security_model.kind").value : "gaussian";
  if (kind == "gaussian") {
    if (has("security_model.table")) {
      throw ConfigError("'table' requires kind = table", line_of("security_model.table"),
                        "table");
    }
    s.security = std::make_shared<GaussianSecurityModel>();
  } else if (kind == "table") {
    if (!has("security_model.table")) {
      throw ConfigError("kind = table requires a 'table' path", line_of("security_model.kind"),
                        "table");
    }
    std::filesystem::path p = kv.at("security_model.table").value;
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    std::shared_ptr<const SecurityTable> table;
    try {
      table = std::make_shared<const SecurityTable>(SecurityTable::load(p.string()));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + " (in " + p.string() + ")",
                        line_of("security_model.table"), "table");
    }
    if (!table->has_dimension(ph.schmidt_d)) {
      throw ConfigError("security table has no entries for d=" +
                            std::to_string(ph.schmidt_d),
                        line_of("security_model.table"), "table");
    }
    s.security = std::make_shared<TableSecurityModel>(table, p.string());
  } else {
    throw ConfigError("unknown security model '" + kind + "'", line_of("security_model.kind"),
                      "kind");
  }

  // Cross-key invariants, reported against the key most likely at fault.
  auto check = [&](bool ok, const std::string& msg, std::initializer_list<const char*> keys) {
    if (ok) return;
    for (const char* k : keys) {
      if (has(k)) throw ConfigError(msg, line_of(k), short_key(k));
    }
    throw ConfigError(msg, 0, short_key(*keys.begin()));
  };
  if (ic.mode == DecoyMode::two_decoy) {
    check(ic.v2 >= 0.0, "v2 must be >= 0", {"protocol.v2"});
    check(ic.v1 > ic.v2, "requires v1 > v2", {"protocol.v2", "protocol.v1"});
    check(ic.mu > ic.v1 + ic.v2, "requires mu > v1 + v2",
          {"protocol.mu", "protocol.v1", "protocol.v2"});
    check(ic.p_mu > 0.0 && ic.p_v1 > 0.0 && ic.p_mu + ic.p_v1 < 1.0,
          "selection probabilities must be positive and leave room for v2",
          {"protocol.p_v1", "protocol.p_mu", "protocol.ratios"});
  } else {
    check(ic.v1 > 0.0 && ic.mu > ic.v1, "requires mu > v > 0", {"protocol.v", "protocol.mu"});
    if (has("protocol.p_mu") && !has("protocol.p_v1")) ic.p_v1 = 1.0 - ic.p_mu;
    if (has("protocol.p_v1") && !has("protocol.p_mu")) ic.p_mu = 1.0 - ic.p_v1;
    check(ic.p_mu > 0.0 && ic.p_v1 > 0.0 && std::abs(ic.p_mu + ic.p_v1 - 1.0) <= 1e-12,
          "single-decoy selection probabilities must be positive and sum to 1",
          {"protocol.p_v1", "protocol.p_mu", "protocol.ratios"});
  }
  check(ic.mu > 0.0, "mu must be > 0", {"protocol.mu"});

  static const std::vector<std::string> order = [] {
    std::vector<std::string> v;
    for (const auto& [sec, keys] : known) {
      for (const auto& k : keys) v.push_back(sec.empty() ? k : sec + "." + k);
    }
    return v;
  }();
  try {
    s.validate();
  } catch (const DomainError& e) {
    // Attribute to a key whose name appears in the message, if any.
    const std::string msg = e.what();
    for (const auto& full : order) {
      if (has(full.c_str()) && msg.find(short_key(full)) != msg.npos) {
        throw ConfigError(msg, kv.at(full).line, short_key(full));
      }
    }
    throw ConfigError(msg);
  }
  return s;
}

inline Scenario load_config(const std::string& path,
                            std::optional<std::string> preset_name = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config", path);
  std::stringstream buf;
  buf << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config(buf.str(), std::move(preset_name), dir.empty() ? "." : dir.string());
}

}  // namespace hdqkd
