#pragma once

#include "fsqss/atmosphere.hpp"
#include "fsqss/config.hpp"
#include "fsqss/csv.hpp"
#include "fsqss/numerics.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace fsqss::protocol_sim {

struct Quadrature {
  double q = 0.0;
  double p = 0.0;
};

struct RoundRecord {
  std::vector<Quadrature> participant_quadratures;  // (q_j, p_j), SNU
  std::vector<double> sampled_t;                    // T_j of this round
  Quadrature dealer_outcome;                        // (q_B, p_B), SNU
};

/// Which noise sources enter the dealer outcome.
struct SimulationOptions {
  bool shot_noise = true;
  bool detector_noise = true;
  bool channel_noise = true;
  /// Replaces the atmospheric draws with fixed per-link transmittances.
  std::optional<std::vector<double>> fixed_transmittance;
};

/// Channel noise referred to the dealer: <T_1> (eps_oth,1 + eps_0) from the
/// analytic budget of link 1.
double reference_channel_noise(const SystemConfig& cfg,
                               const std::vector<atmosphere::ChannelStats>& stats);

/// Per-link statistics of a deterministic channel.
std::vector<atmosphere::ChannelStats> fixed_channel_stats(std::span<const double> t);

class ProtocolSimulator {
 public:
  /// `stats` are the analytic link statistics used for the channel-noise
  /// level; when omitted they are estimated with cfg.mc_samples.
  ProtocolSimulator(const SystemConfig& cfg, SimulationOptions options,
                    std::optional<std::vector<atmosphere::ChannelStats>> stats = std::nullopt,
                    unsigned workers = 0);

  /// Round `index` uses its own random streams; records depend only on
  /// (seed, index).
  RoundRecord simulate_round(std::uint64_t index) const;
  /// Modulation and noise draws come from `rng`; transmittance draws from
  /// per-link streams keyed by rng.stream_id().
  RoundRecord simulate_round(numerics::RngStream& rng) const;
  std::vector<RoundRecord> simulate(std::int64_t n_rounds, unsigned workers = 0) const;

  /// Variance of one dealer quadrature predicted by the model.
  double predicted_outcome_variance() const;
  double noise_variance() const noexcept { return noise_variance_; }
  const std::vector<atmosphere::ChannelStats>& stats() const noexcept { return stats_; }
  const SystemConfig& config() const noexcept { return cfg_; }

 private:
  double link_transmittance(std::uint64_t round, int j) const;

  SystemConfig cfg_;
  SimulationOptions options_;
  std::vector<atmosphere::ChannelStats> stats_;
  std::vector<atmosphere::TurbulenceParams> link_params_;
  std::vector<atmosphere::BeamSampler> samplers_;
  std::vector<double> deterministic_;
  double noise_variance_ = 0.0;
  std::uint64_t quadrature_seed_;
  std::uint64_t channel_seed_;
};

/// Convenience wrapper; builds a simulator (including the Monte Carlo
/// channel statistics) on every call.
RoundRecord simulate_round(const SystemConfig& cfg, numerics::RngStream& rng);

struct EstimationReport {
  std::vector<double> t_hat;
  std::vector<double> t_hat_stderr;
  std::int64_t n_rounds = 0;
  std::vector<double> rel_error;  // |t_hat - <T_j>| / <T_j>
};

/// Least-squares regression of the dealer outcome on the disclosed
/// quadratures, pooled over q and p; t_hat_j is the squared gain of link j.
/// `reference` supplies <T_j> for rel_error; when empty it is estimated.
EstimationReport estimate_transmittances(std::span<const RoundRecord> records, const SystemConfig& cfg,
                                         std::span<const double> reference = {});

struct OutcomeMoments {
  double variance = 0.0;  // pooled over q_B and p_B
  double stderr_variance = 0.0;
};

OutcomeMoments outcome_moments(std::span<const RoundRecord> records);

/// Columns: round, j, q_j, p_j, T_j, q_B, p_B.
CsvTable round_records_csv(std::span<const RoundRecord> records);

}  // namespace fsqss::protocol_sim
