// Batch front end: channel statistics, noise curves, interruption surfaces,
// key-rate sweeps and protocol simulation, all emitted as CSV.

#include "fsqss/config.hpp"
#include "fsqss/errors.hpp"
#include "fsqss/keyrate.hpp"
#include "fsqss/protocol_sim.hpp"
#include "fsqss/sweep.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> samples;
  std::string out = "-";
  unsigned workers = 0;
};

fsqss::SystemConfig load(const Common& c) {
  auto cfg = c.config_path.empty() ? fsqss::SystemConfig{} : fsqss::load_config_file(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  if (c.samples) cfg.mc_samples = *c.samples;
  cfg.validate();
  return cfg;
}

void emit(const fsqss::CsvTable& table, const std::string& out) {
  if (out.empty() || out == "-") {
    table.write(std::cout);
    std::cout.flush();
    return;
  }
  const std::filesystem::path target(out);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error(fmt::format("cannot open {} for writing", tmp.string()));
    table.write(f);
    f.flush();
    if (!f) throw std::runtime_error(fmt::format("write to {} failed", tmp.string()));
  }
  std::filesystem::rename(tmp, target);
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON config file");
  sub->add_option("--seed", c.seed, "Random seed (overrides config)");
  sub->add_option("--samples", c.samples, "Monte Carlo samples per link (overrides config)");
  sub->add_option("--out", c.out, "Output CSV path, - for standard output");
  sub->add_option("--workers", c.workers, "Worker threads, 0 = hardware concurrency");
}

std::vector<double> default_intensity_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 60; ++k) g.push_back(std::pow(10.0, 2.0 + 0.1 * k));
  return g;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(',', start);
    const auto item = s.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    if (!item.empty()) out.push_back(item);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Free-space CV quantum secret sharing simulator"};
  app.require_subcommand(1);

  Common stats_opt, noise_opt, surf_opt, sweep_opt, sim_opt;

  auto* stats_cmd = app.add_subcommand("stats", "Per-link transmittance moments");
  add_common(stats_cmd, stats_opt);

  auto* noise_cmd = app.add_subcommand("noise-curve", "Excess noise against reference intensity");
  add_common(noise_cmd, noise_opt);
  std::string noise_grid;
  noise_cmd->add_option("--grid", noise_grid, "E_R^2 grid (list or start:stop:count)");

  auto* surf_cmd = app.add_subcommand("interruption-surface", "P_QSS over distance and participant count");
  add_common(surf_cmd, surf_opt);
  std::string surf_distances = "5000:60000:12";
  std::string surf_ns = "2:20:19";
  surf_cmd->add_option("--distances", surf_distances, "Total distance grid, m");
  surf_cmd->add_option("--ns", surf_ns, "Participant count grid");

  auto* sweep_cmd = app.add_subcommand("keyrate-sweep", "Key rate against one parameter");
  add_common(sweep_cmd, sweep_opt);
  std::string sweep_var = "distance";
  std::string sweep_grid;
  std::string sweep_outputs;
  sweep_cmd->add_option("--sweep", sweep_var, "distance | participants | cn2 | reference_intensity");
  sweep_cmd->add_option("--grid", sweep_grid, "Grid (list or start:stop:count)")->required();
  sweep_cmd->add_option("--outputs", sweep_outputs, "Comma separated metric columns");

  auto* sim_cmd = app.add_subcommand("protocol-sim", "Round-level simulation of the quantum stage");
  add_common(sim_cmd, sim_opt);
  std::optional<std::int64_t> rounds;
  bool estimate = false;
  sim_cmd->add_option("--rounds", rounds, "Number of rounds (overrides config)");
  sim_cmd->add_flag("--estimate", estimate, "Emit the transmittance estimate instead of the records");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*stats_cmd) {
      const auto cfg = load(stats_opt);
      emit(fsqss::sweep::stats_table(cfg, fsqss::keyrate::link_channel_stats(cfg, stats_opt.workers)),
           stats_opt.out);
    } else if (*noise_cmd) {
      const auto cfg = load(noise_opt);
      fsqss::sweep::SweepSpec spec;
      spec.variable = fsqss::sweep::SweepVariable::reference_intensity;
      spec.grid = noise_grid.empty() ? default_intensity_grid() : fsqss::sweep::parse_grid(noise_grid);
      spec.outputs = {"mean_t", "eps_am", "eps_le", "eps_lo", "eps_tf", "eps_0", "eps_total", "e_r_sq"};
      emit(fsqss::sweep::run_sweep(cfg, spec, noise_opt.workers), noise_opt.out);
    } else if (*surf_cmd) {
      const auto cfg = load(surf_opt);
      std::vector<int> ns;
      for (const double v : fsqss::sweep::parse_grid(surf_ns)) {
        if (std::trunc(v) != v) throw fsqss::ConfigError("--ns", fmt::format("n must be an integer, got {}", v));
        ns.push_back(static_cast<int>(v));
      }
      emit(fsqss::sweep::interruption_surface(cfg, fsqss::sweep::parse_grid(surf_distances), ns), surf_opt.out);
    } else if (*sweep_cmd) {
      const auto cfg = load(sweep_opt);
      fsqss::sweep::SweepSpec spec;
      spec.variable = fsqss::sweep::parse_variable(sweep_var);
      spec.grid = fsqss::sweep::parse_grid(sweep_grid);
      spec.outputs = split_list(sweep_outputs);
      emit(fsqss::sweep::run_sweep(cfg, spec, sweep_opt.workers), sweep_opt.out);
    } else if (*sim_cmd) {
      auto cfg = load(sim_opt);
      if (rounds) cfg.rounds = *rounds;
      cfg.validate();
      const fsqss::protocol_sim::ProtocolSimulator sim(cfg, {}, std::nullopt, sim_opt.workers);
      const auto records = sim.simulate(cfg.rounds, sim_opt.workers);
      if (estimate) {
        std::vector<double> ref;
        for (const auto& s : sim.stats()) ref.push_back(s.mean_t);
        const auto rep = fsqss::protocol_sim::estimate_transmittances(records, cfg, ref);
        fsqss::CsvTable t;
        t.header = {"link", "t_hat", "t_hat_stderr", "mean_t", "rel_error", "n_rounds"};
        for (std::size_t j = 0; j < rep.t_hat.size(); ++j) {
          t.add_row({fsqss::format_number(static_cast<std::int64_t>(j + 1)), fsqss::format_number(rep.t_hat[j]),
                     fsqss::format_number(rep.t_hat_stderr[j]), fsqss::format_number(ref[j]),
                     fsqss::format_number(rep.rel_error[j]), fsqss::format_number(rep.n_rounds)});
        }
        emit(t, sim_opt.out);
      } else {
        emit(fsqss::protocol_sim::round_records_csv(records), sim_opt.out);
      }
    }
  } catch (const fsqss::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const fsqss::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
