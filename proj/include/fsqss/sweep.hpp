#pragma once

#include "fsqss/atmosphere.hpp"
#include "fsqss/config.hpp"
#include "fsqss/csv.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace fsqss::sweep {

enum class SweepVariable { distance, participants, cn2, reference_intensity };

SweepVariable parse_variable(std::string_view name);
std::string_view variable_name(SweepVariable v);

struct SweepSpec {
  SweepVariable variable = SweepVariable::distance;
  std::vector<double> grid;          // strictly increasing, non-empty
  std::vector<std::string> outputs;  // subset of sweep_columns(); empty means all

  /// Throws ConfigError on an empty or unsorted grid, a non-integral
  /// participant count, or an unknown output column.
  void validate() const;
};

/// Every metric column in emission order; sweep_value and link always lead.
const std::vector<std::string>& sweep_columns();

/// One row per grid point per link, in grid order then link order.
/// A reference_intensity sweep fixes E_R^2 at each grid value and reuses one
/// set of channel statistics.
CsvTable run_sweep(const SystemConfig& cfg, const SweepSpec& spec, unsigned workers = 0);

/// Columns: link, link_distance, mean_t, mean_sqrt_t, var_sqrt_t, equiv_t,
/// stderr_mean_t, stderr_mean_sqrt_t, n_samples.
CsvTable stats_table(const SystemConfig& cfg, const std::vector<atmosphere::ChannelStats>& stats);

/// Columns: distance, n, p_qss. Rows in distance order then n order.
CsvTable interruption_surface(const SystemConfig& cfg, const std::vector<double>& distances,
                              const std::vector<int>& participants);

/// Comma separated list of numbers, or start:stop:count for a linear grid.
std::vector<double> parse_grid(std::string_view text);

}  // namespace fsqss::sweep
