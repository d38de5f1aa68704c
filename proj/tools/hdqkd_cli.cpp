// hdqkd: command-line front end for key-capacity sweeps, maximum-distance
// searches and Monte Carlo validation runs.
//
// Exit codes: 0 ok, 1 configuration error, 2 computation error, 3 I/O error.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hdqkd/hdqkd.hpp"

namespace {

using namespace hdqkd;

enum Exit { kOk = 0, kConfig = 1, kCompute = 2, kIo = 3 };

struct ScenarioOpts {
  std::string config;
  std::string preset;
  std::string method;
  std::string n_pulses;
  std::string table;
  std::string on_inapplicable;
};

void add_scenario_opts(CLI::App* cmd, ScenarioOpts& o) {
  cmd->add_option("--config", o.config, "Configuration file");
  cmd->add_option("--preset", o.preset, "Named preset (see `presets`)");
  cmd->add_option("--method", o.method, "hoeffding | chernoff | exact");
  cmd->add_option("--n-pulses", o.n_pulses,
                  "Pulse count: number, inf, a comma list, or `grid`");
  cmd->add_option("--table", o.table, "Use a tabulated security model from PATH");
  cmd->add_option("--chernoff-inapplicable", o.on_inapplicable, "error | vacuous");
}

std::vector<PulseCount> pulse_list(const std::string& spec, PulseCount fallback) {
  if (spec.empty()) return {fallback};
  if (spec == "grid") return standard_pulse_grid();
  std::vector<PulseCount> out;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(parse_pulse_count(tok));
    } catch (const DomainError& e) {
      throw ConfigError(e.what(), 0, "n-pulses");
    }
  }
  if (out.empty()) throw ConfigError("empty pulse list", 0, "n-pulses");
  return out;
}

Scenario build_scenario(const ScenarioOpts& o) {
  std::optional<std::string> preset_name;
  if (!o.preset.empty()) preset_name = o.preset;
  Scenario s = o.config.empty() ? parse_config("", preset_name) : load_config(o.config, preset_name);
  try {
    if (!o.method.empty()) s.method = parse_method(o.method);
  } catch (const DomainError& e) {
    throw ConfigError(e.what(), 0, "method");
  }
  try {
    if (!o.on_inapplicable.empty()) s.on_inapplicable = parse_inapplicable_policy(o.on_inapplicable);
  } catch (const DomainError& e) {
    throw ConfigError(e.what(), 0, "chernoff-inapplicable");
  }
  if (!o.table.empty()) {
    auto table = std::make_shared<const SecurityTable>(SecurityTable::load(o.table));
    if (!table->has_dimension(s.phys.schmidt_d)) {
      throw ConfigError("security table has no entries for d=" + std::to_string(s.phys.schmidt_d),
                        0, "table");
    }
    s.security = std::make_shared<TableSecurityModel>(table, o.table);
  }
  return s;
}

// Writes to --out if given, else stdout.
template <class Fn>
void with_output(const std::string& path, Fn fn) {
  if (path.empty()) {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing", path);
  fn(out);
  out.flush();
  if (!out) throw IoError("write failed", path);
}

void warn_vacuous(const std::vector<ResultRow>& rows) {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.vacuous.empty() ? 0 : 1;
  if (n) {
    std::fprintf(stderr,
                 "warning: Chernoff preconditions failed at %zu point(s); "
                 "those intensities used the interval [0,1]\n",
                 n);
  }
}

std::string fmt(double v) { return detail::fmt_double(v); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"High-dimensional decoy-state QKD key-capacity calculator"};
  app.require_subcommand(1);

  ScenarioOpts so;
  std::string out_path;
  std::string plot_path;
  unsigned parallel = 1;
  double length = 0.0;
  double l_min = 0.0;
  double l_max = 300.0;
  double step = 5.0;
  std::uint64_t seed = 1;
  std::size_t trials = 1000;
  double eps_pe = 0.01;
  int steps = 20;
  std::vector<int> dims{8, 16, 32};

  auto* point = app.add_subcommand("point", "Evaluate one channel length");
  add_scenario_opts(point, so);
  point->add_option("--length", length, "Channel length, km")->required();
  point->add_option("--out", out_path, "CSV destination (default stdout)");

  auto* sweep = app.add_subcommand("sweep", "Sweep channel length");
  add_scenario_opts(sweep, so);
  sweep->add_option("--l-min", l_min, "First length, km");
  sweep->add_option("--l-max", l_max, "Last length, km");
  sweep->add_option("--step", step, "Length step, km");
  sweep->add_option("--parallel", parallel, "Worker threads");
  sweep->add_option("--out", out_path, "CSV destination (default stdout)");
  sweep->add_option("--plotdata", plot_path, "Also write two-column plot data to PATH");

  auto* maxdist = app.add_subcommand("maxdist", "Maximum distance with positive capacity");
  add_scenario_opts(maxdist, so);
  maxdist->add_option("--parallel", parallel, "Worker threads");
  maxdist->add_option("--out", out_path, "CSV destination (default stdout)");

  auto* optimize = app.add_subcommand("optimize", "Grid-search decoy intensities at one length");
  add_scenario_opts(optimize, so);
  optimize->add_option("--length", length, "Channel length, km")->required();
  optimize->add_option("--steps", steps, "Grid points per intensity");
  optimize->add_option("--parallel", parallel, "Worker threads");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo session tally");
  add_scenario_opts(simulate, so);
  simulate->add_option("--length", length, "Channel length, km");
  simulate->add_option("--seed", seed, "RNG seed");
  simulate->add_option("--out", out_path, "Tally destination (default stdout)");

  auto* coverage = app.add_subcommand("coverage", "Empirical coverage of fluctuation intervals");
  add_scenario_opts(coverage, so);
  coverage->add_option("--length", length, "Channel length, km");
  coverage->add_option("--seed", seed, "Base RNG seed");
  coverage->add_option("--trials", trials, "Number of sessions (>= 100)");
  coverage->add_option("--eps-pe", eps_pe, "Failure probability of each interval");
  coverage->add_option("--parallel", parallel, "Worker threads");

  app.add_subcommand("presets", "List named presets");

  auto* table = app.add_subcommand("table", "Tabulate the Gaussian security model");
  table->add_option("--dims", dims, "Schmidt numbers")->delimiter(',');
  table->add_option("--out", out_path, "Destination (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (app.got_subcommand("presets")) {
      for (const auto& p : preset_catalog()) {
        std::printf("%-6s d=%-2d %-12s mu=%-4g %-9s N=%s\n", p.name, p.schmidt_d,
                    std::string(to_string(p.mode)).c_str(), p.mu,
                    std::string(to_string(p.method)).c_str(),
                    format_pulse_count(PulseCount(p.n_pulses)).c_str());
      }
      return kOk;
    }

    if (app.got_subcommand("table")) {
      const auto text = render_gaussian_table(dims, default_zeta_grid(), PhysicalParams{}.delta_coh);
      with_output(out_path, [&](std::ostream& o) { o << text; });
      return kOk;
    }

    const Scenario base = build_scenario(so);

    if (app.got_subcommand("point") || app.got_subcommand("sweep")) {
      std::vector<ResultRow> rows;
      for (auto n : pulse_list(so.n_pulses, base.n_pulses)) {
        Scenario s = base;
        s.n_pulses = n;
        auto part = app.got_subcommand("point")
                        ? std::vector<ResultRow>{run_point(s, length)}
                        : sweep_distance(s, l_min, l_max, step, parallel);
        rows.insert(rows.end(), part.begin(), part.end());
      }
      warn_vacuous(rows);
      with_output(out_path, [&](std::ostream& o) { emit_csv(rows, o); });
      if (!plot_path.empty()) emit_plotdata(rows, plot_path);
      return kOk;
    }

    if (app.got_subcommand("maxdist")) {
      std::string text = "n_pulses,method,max_distance_km,monotone,saturated\n";
      for (auto n : pulse_list(so.n_pulses, base.n_pulses)) {
        Scenario s = base;
        s.n_pulses = n;
        const auto m = max_distance(s, 1000.0, parallel);
        if (!m.monotone) {
          std::fprintf(stderr, "warning: capacity not monotone in length for N=%s; used grid scan\n",
                       format_pulse_count(n).c_str());
        }
        text += format_pulse_count(n) + ',' +
                std::string(to_string(n.is_infinite() ? Method::exact : s.method)) + ',' +
                fmt(m.km) + ',' + (m.monotone ? "true" : "false") + ',' +
                (m.saturated ? "true" : "false") + '\n';
      }
      with_output(out_path, [&](std::ostream& o) { o << text; });
      return kOk;
    }

    if (app.got_subcommand("optimize")) {
      const auto best = optimize_decoys(base, length, steps, parallel);
      const auto& ic = best.intensities;
      std::printf("mu=%s v1=%s v2=%s delta_i_bpc=%s\n", fmt(ic.mu).c_str(), fmt(ic.v1).c_str(),
                  fmt(ic.mode == DecoyMode::two_decoy ? ic.v2 : 0.0).c_str(),
                  fmt(best.row.delta_i).c_str());
      return kOk;
    }

    // Monte Carlo subcommands take an integral frame count.
    const PulseCount n = so.n_pulses.empty() ? PulseCount(1e7) : pulse_list(so.n_pulses, base.n_pulses).front();
    if (n.is_infinite() || n.value() < 1 || n.value() > 1e15 || n.value() != std::floor(n.value())) {
      throw ConfigError("simulation needs a finite integral --n-pulses in [1, 1e15]", 0, "n-pulses");
    }
    const auto frames = static_cast<std::uint64_t>(n.value());
    const auto cfg = make_sim_config(base.phys, base.intensities, length, base.p_t, frames, seed);
    const std::size_t slots = base.intensities.mode == DecoyMode::two_decoy ? 3 : 2;

    if (app.got_subcommand("simulate")) {
      const auto tally = simulate_session(cfg);
      with_output(out_path, [&](std::ostream& o) {
        o << "# lambda basis_pair frames coincidences\n";
        write_tally(o, tally, slots);
        for (std::size_t i = 0; i < slots; ++i) {
          o << "# p_hat(" << fmt(tally.lambda[i]) << ")=" << fmt(tally.p_hat(i)) << " model="
            << fmt(postselect_prob(tally.lambda[i], cfg.phys, cfg.frame, cfg.channel)) << '\n';
        }
      });
      return kOk;
    }

    if (app.got_subcommand("coverage")) {
      const auto res = coverage_experiment(cfg, eps_pe, base.method, trials, parallel);
      std::printf("method=%s trials=%zu covered=%zu inapplicable=%zu coverage=%s\n",
                  std::string(to_string(base.method)).c_str(), res.trials, res.covered,
                  res.inapplicable, fmt(res.fraction()).c_str());
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kIo;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kCompute;
  }
  return kOk;
}
