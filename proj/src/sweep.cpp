#include "fsqss/sweep.hpp"

#include "fsqss/errors.hpp"
#include "fsqss/interruption.hpp"
#include "fsqss/keyrate.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

namespace fsqss::sweep {

namespace {

using Row = std::vector<std::string>;

double parse_double(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("--grid", fmt::format("cannot parse grid value \"{}\"", s));
  }
  return v;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

SystemConfig with_value(SystemConfig cfg, SweepVariable v, double x) {
  switch (v) {
    case SweepVariable::distance: cfg.distance = x; break;
    case SweepVariable::participants: cfg.participants = static_cast<int>(x); break;
    case SweepVariable::cn2: cfg.cn2 = x; break;
    case SweepVariable::reference_intensity:
      cfg.e_r_mode = noise::ReferenceMode::fixed;
      cfg.e_r_sq = x;
      break;
  }
  cfg.validate();
  return cfg;
}

void append_rows(CsvTable& table, double x,
                 const keyrate::SystemEvaluation& ev) {
  const auto& res = ev.result;
  for (std::size_t i = 0; i < ev.stats.size(); ++i) {
    const auto& s = ev.stats[i];
    const auto& b = ev.budgets[i];
    table.add_row({format_number(x), format_number(static_cast<std::int64_t>(i + 1)), format_number(s.mean_t),
                   format_number(s.mean_sqrt_t), format_number(s.var_sqrt_t), format_number(s.stderr_mean_t),
                   format_number(s.stderr_mean_sqrt_t), format_number(b.eps_am), format_number(b.eps_le),
                   format_number(b.eps_lo), format_number(b.eps_tf), format_number(b.eps_0),
                   format_number(b.eps_total), format_number(b.e_r_sq_used),
                   format_number(ev.link_interruption[i]), format_number(res.p_qss),
                   format_number(res.per_link_rates[i]), format_number(res.rate_bit_per_pulse),
                   format_number(res.rate_stderr), format_number(res.rate_bit_per_second)});
  }
}

CsvTable select_columns(const CsvTable& full, const std::vector<std::string>& outputs) {
  if (outputs.empty()) return full;
  std::vector<std::size_t> keep = {0, 1};
  for (std::size_t c = 2; c < full.header.size(); ++c) {
    if (std::find(outputs.begin(), outputs.end(), full.header[c]) != outputs.end()) keep.push_back(c);
  }
  CsvTable out;
  for (const auto c : keep) out.header.push_back(full.header[c]);
  for (const auto& row : full.rows) {
    Row r;
    for (const auto c : keep) r.push_back(row[c]);
    out.add_row(std::move(r));
  }
  return out;
}

}  // namespace

SweepVariable parse_variable(std::string_view name) {
  if (name == "distance") return SweepVariable::distance;
  if (name == "participants") return SweepVariable::participants;
  if (name == "cn2") return SweepVariable::cn2;
  if (name == "reference_intensity") return SweepVariable::reference_intensity;
  throw ConfigError("--sweep", fmt::format("unknown sweep variable \"{}\"", name));
}

std::string_view variable_name(SweepVariable v) {
  switch (v) {
    case SweepVariable::distance: return "distance";
    case SweepVariable::participants: return "participants";
    case SweepVariable::cn2: return "cn2";
    case SweepVariable::reference_intensity: return "reference_intensity";
  }
  return "distance";
}

const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols = {
      "sweep_value", "link",   "mean_t", "mean_sqrt_t", "var_sqrt_t", "stderr_mean_t", "stderr_mean_sqrt_t",
      "eps_am",      "eps_le", "eps_lo", "eps_tf",      "eps_0",      "eps_total",     "e_r_sq",
      "p_link",      "p_qss",  "r_link", "R_bit_pulse", "R_stderr",   "R_bit_s"};
  return cols;
}

void SweepSpec::validate() const {
  if (grid.empty()) throw ConfigError("--grid", "sweep grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i])) throw ConfigError("--grid", "sweep grid values must be finite");
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw ConfigError("--grid", fmt::format("sweep grid is not strictly increasing at {}", grid[i]));
    }
    if (variable == SweepVariable::participants && std::trunc(grid[i]) != grid[i]) {
      throw ConfigError("--grid", fmt::format("participant count must be an integer, got {}", grid[i]));
    }
  }
  const auto& cols = sweep_columns();
  for (const auto& o : outputs) {
    if (std::find(cols.begin(), cols.end(), o) == cols.end()) {
      throw ConfigError("--outputs", fmt::format("unknown output column \"{}\"", o));
    }
  }
}

CsvTable run_sweep(const SystemConfig& cfg, const SweepSpec& spec, unsigned workers) {
  cfg.validate();
  spec.validate();
  CsvTable table;
  table.header = sweep_columns();

  if (spec.variable == SweepVariable::reference_intensity) {
    const auto stats = keyrate::link_channel_stats(cfg, workers);
    for (const double x : spec.grid) {
      const auto point = with_value(cfg, spec.variable, x);
      append_rows(table, x, keyrate::evaluate_links(point, stats));
    }
  } else {
    for (const double x : spec.grid) {
      const auto point = with_value(cfg, spec.variable, x);
      append_rows(table, x, keyrate::evaluate_system(point, workers));
    }
  }
  return select_columns(table, spec.outputs);
}

CsvTable stats_table(const SystemConfig& cfg, const std::vector<atmosphere::ChannelStats>& stats) {
  CsvTable table;
  table.header = {"link",   "link_distance",        "mean_t", "mean_sqrt_t", "var_sqrt_t", "equiv_t",
                  "stderr_mean_t", "stderr_mean_sqrt_t", "n_samples"};
  const int n = static_cast<int>(stats.size());
  for (int j = 1; j <= n; ++j) {
    const auto& s = stats[static_cast<std::size_t>(j - 1)];
    table.add_row({format_number(static_cast<std::int64_t>(j)),
                   format_number(atmosphere::link_distance(j, n, cfg.distance)), format_number(s.mean_t),
                   format_number(s.mean_sqrt_t), format_number(s.var_sqrt_t),
                   format_number(s.equivalent_transmittance()), format_number(s.stderr_mean_t),
                   format_number(s.stderr_mean_sqrt_t), format_number(s.n_samples)});
  }
  return table;
}

CsvTable interruption_surface(const SystemConfig& cfg, const std::vector<double>& distances,
                              const std::vector<int>& participants) {
  cfg.validate();
  if (distances.empty() || participants.empty()) {
    throw ConfigError("--grid", "interruption surface needs distances and participant counts");
  }
  CsvTable table;
  table.header = {"distance", "n", "p_qss"};
  const auto turb = cfg.turbulence();
  for (const double l : distances) {
    if (!(l > 0.0) || !std::isfinite(l)) throw ConfigError("l", fmt::format("distance must be positive, got {}", l));
    for (const int n : participants) {
      if (n < 1) throw ConfigError("n", fmt::format("n must be at least 1, got {}", n));
      std::vector<double> probs;
      for (int j = 1; j <= n; ++j) {
        auto p = turb;
        p.distance = atmosphere::link_distance(j, n, l);
        const double x0_var = atmosphere::beam_param_covariance(p).x0_variance();
        probs.push_back(interruption::link_interruption_prob(
            {x0_var, p.distance, cfg.fiber_core_diameter, cfg.focal_length}));
      }
      table.add_row({format_number(l), format_number(static_cast<std::int64_t>(n)),
                     format_number(interruption::system_interruption_prob(probs))});
    }
  }
  return table;
}

std::vector<double> parse_grid(std::string_view text) {
  if (text.empty()) throw ConfigError("--grid", "grid is empty");
  if (text.find(':') != std::string_view::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw ConfigError("--grid", "range grid must be start:stop:count");
    const double a = parse_double(parts[0]);
    const double b = parse_double(parts[1]);
    const double c = parse_double(parts[2]);
    if (!(c >= 1.0) || std::trunc(c) != c) throw ConfigError("--grid", "range count must be a positive integer");
    const auto count = static_cast<std::size_t>(c);
    std::vector<double> grid;
    for (std::size_t i = 0; i < count; ++i) {
      grid.push_back(count == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    return grid;
  }
  std::vector<double> grid;
  for (const auto part : split(text, ',')) grid.push_back(parse_double(part));
  return grid;
}

}  // namespace fsqss::sweep
