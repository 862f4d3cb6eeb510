#include "fsqss/protocol_sim.hpp"

#include "fsqss/errors.hpp"
#include "fsqss/keyrate.hpp"
#include "fsqss/noise.hpp"
#include "fsqss/parallel.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>

#include <cmath>

namespace fsqss::protocol_sim {

namespace {

constexpr std::int64_t kMinRecords = 1000;
constexpr std::int64_t kRoundChunk = 1024;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  numerics::RngStream s(seed, salt);
  return s.next_u64();
}

}  // namespace

double reference_channel_noise(const SystemConfig& cfg,
                               const std::vector<atmosphere::ChannelStats>& stats) {
  std::vector<double> mean_t;
  for (const auto& s : stats) mean_t.push_back(s.mean_t);
  const auto budget = noise::total_excess_noise(cfg.noise_inputs(mean_t, 1, stats.front()), cfg.e_r_mode);
  return mean_t.front() * (budget.eps_other() + budget.eps_0);
}

std::vector<atmosphere::ChannelStats> fixed_channel_stats(std::span<const double> t) {
  std::vector<atmosphere::ChannelStats> out;
  for (const double v : t) {
    atmosphere::ChannelStats s;
    s.mean_t = v;
    s.mean_sqrt_t = std::sqrt(v);
    s.n_samples = 1;
    out.push_back(s);
  }
  return out;
}

ProtocolSimulator::ProtocolSimulator(const SystemConfig& cfg, SimulationOptions options,
                                     std::optional<std::vector<atmosphere::ChannelStats>> stats,
                                     unsigned workers)
    : cfg_(cfg),
      options_(std::move(options)),
      quadrature_seed_(derive_seed(cfg.seed, 1)),
      channel_seed_(derive_seed(cfg.seed, 2)) {
  cfg_.validate();
  const int n = cfg_.participants;
  if (options_.fixed_transmittance) {
    const auto& t = *options_.fixed_transmittance;
    if (static_cast<int>(t.size()) != n) {
      throw ConfigError("n", fmt::format("fixed transmittance has {} entries for {} participants", t.size(), n));
    }
    for (const double v : t) {
      if (!(v > 0.0 && v <= 1.0)) throw ConfigError("fixed_transmittance", "transmittance outside (0, 1]");
    }
  }

  if (stats) {
    stats_ = std::move(*stats);
  } else if (options_.fixed_transmittance) {
    stats_ = fixed_channel_stats(*options_.fixed_transmittance);
  } else {
    stats_ = keyrate::link_channel_stats(cfg_, workers);
  }
  if (static_cast<int>(stats_.size()) != n) {
    throw ConfigError("n", "link statistics do not match the participant count");
  }

  const auto turb = cfg_.turbulence();
  for (int j = 1; j <= n; ++j) {
    auto p = turb;
    p.distance = atmosphere::link_distance(j, n, cfg_.distance);
    link_params_.push_back(p);
    samplers_.emplace_back(p);
    deterministic_.push_back(atmosphere::t_extinction(p.distance, p.altitude) *
                             std::pow(cfg_.habs_transmissivity, atmosphere::habs_exponent(j, n)));
  }

  if (options_.shot_noise) noise_variance_ += 1.0;
  if (options_.detector_noise) noise_variance_ += (2.0 - cfg_.eta_e + 2.0 * cfg_.v_el) / cfg_.eta_e;
  if (options_.channel_noise) noise_variance_ += reference_channel_noise(cfg_, stats_);
}

double ProtocolSimulator::link_transmittance(std::uint64_t round, int j) const {
  const auto idx = static_cast<std::size_t>(j - 1);
  if (options_.fixed_transmittance) return (*options_.fixed_transmittance)[idx];
  const std::uint64_t block =
      cfg_.fading == Fading::slow ? round / static_cast<std::uint64_t>(cfg_.fading_block) : round;
  numerics::RngStream rng(channel_seed_,
                          block * static_cast<std::uint64_t>(cfg_.participants) + idx);
  return atmosphere::t_atmospheric(samplers_[idx](rng), link_params_[idx]) * deterministic_[idx];
}

RoundRecord ProtocolSimulator::simulate_round(numerics::RngStream& rng) const {
  const int n = cfg_.participants;
  const double sd = std::sqrt(cfg_.v_a);
  RoundRecord rec;
  rec.participant_quadratures.reserve(static_cast<std::size_t>(n));
  rec.sampled_t.reserve(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) {
    const Quadrature x{sd * rng.normal(), sd * rng.normal()};
    const double t = link_transmittance(rng.stream_id(), j);
    rec.participant_quadratures.push_back(x);
    rec.sampled_t.push_back(t);
    rec.dealer_outcome.q += std::sqrt(t) * x.q;
    rec.dealer_outcome.p += std::sqrt(t) * x.p;
  }
  const double noise_sd = std::sqrt(noise_variance_);
  const double nq = rng.normal();
  const double np = rng.normal();
  rec.dealer_outcome.q += noise_sd * nq;
  rec.dealer_outcome.p += noise_sd * np;
  return rec;
}

RoundRecord ProtocolSimulator::simulate_round(std::uint64_t index) const {
  numerics::RngStream rng(quadrature_seed_, index);
  return simulate_round(rng);
}

std::vector<RoundRecord> ProtocolSimulator::simulate(std::int64_t n_rounds, unsigned workers) const {
  if (n_rounds < 1) throw ConfigError("rounds", "rounds must be at least 1");
  std::vector<RoundRecord> out(static_cast<std::size_t>(n_rounds));
  const std::size_t chunks = static_cast<std::size_t>((n_rounds + kRoundChunk - 1) / kRoundChunk);
  parallel_for(chunks, workers, [&](std::size_t c) {
    const std::int64_t begin = static_cast<std::int64_t>(c) * kRoundChunk;
    const std::int64_t end = std::min(begin + kRoundChunk, n_rounds);
    for (std::int64_t i = begin; i < end; ++i) {
      out[static_cast<std::size_t>(i)] = simulate_round(static_cast<std::uint64_t>(i));
    }
  });
  return out;
}

double ProtocolSimulator::predicted_outcome_variance() const {
  double signal = 0.0;
  for (const auto& s : stats_) signal += s.mean_t * cfg_.v_a;
  return signal + noise_variance_;
}

RoundRecord simulate_round(const SystemConfig& cfg, numerics::RngStream& rng) {
  return ProtocolSimulator(cfg, SimulationOptions{}).simulate_round(rng);
}

EstimationReport estimate_transmittances(std::span<const RoundRecord> records, const SystemConfig& cfg,
                                         std::span<const double> reference) {
  const auto n_records = static_cast<std::int64_t>(records.size());
  if (n_records < kMinRecords) {
    throw DomainError(fmt::format("estimate_transmittances: need at least {} records, got {}",
                                  kMinRecords, n_records));
  }
  const int n = cfg.participants;
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(n);
  double yty = 0.0;
  Eigen::VectorXd row(n);
  for (const auto& rec : records) {
    if (static_cast<int>(rec.participant_quadratures.size()) != n) {
      throw ConfigError("n", "record length does not match the participant count");
    }
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < n; ++j) {
        const auto& x = rec.participant_quadratures[static_cast<std::size_t>(j)];
        row(j) = pass == 0 ? x.q : x.p;
      }
      const double y = pass == 0 ? rec.dealer_outcome.q : rec.dealer_outcome.p;
      xtx.selfadjointView<Eigen::Lower>().rankUpdate(row);
      xty += y * row;
      yty += y * y;
    }
  }
  xtx = xtx.selfadjointView<Eigen::Lower>();

  const double scale = xtx.diagonal().maxCoeff();
  if (!(scale > 0.0)) {
    throw DomainError("estimate_transmittances: participants carry no modulation");
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-12) {
    throw DomainError("estimate_transmittances: disclosed quadratures are degenerate");
  }
  const Eigen::VectorXd gain = ldlt.solve(xty);
  const double dof = 2.0 * static_cast<double>(n_records) - n;
  const double resid_var = std::max(0.0, (yty - gain.dot(xty)) / dof);
  const Eigen::MatrixXd gain_cov = resid_var * ldlt.solve(Eigen::MatrixXd::Identity(n, n));

  std::vector<double> ref(reference.begin(), reference.end());
  if (ref.empty()) {
    for (const auto& s : keyrate::link_channel_stats(cfg)) ref.push_back(s.mean_t);
  }
  if (static_cast<int>(ref.size()) != n) throw ConfigError("n", "reference length mismatch");

  EstimationReport rep;
  rep.n_rounds = n_records;
  for (int j = 0; j < n; ++j) {
    const double g = std::clamp(gain(j), 0.0, 1.0);
    rep.t_hat.push_back(g * g);
    rep.t_hat_stderr.push_back(2.0 * g * std::sqrt(std::max(0.0, gain_cov(j, j))));
    rep.rel_error.push_back(std::abs(g * g - ref[static_cast<std::size_t>(j)]) / ref[static_cast<std::size_t>(j)]);
  }
  return rep;
}

OutcomeMoments outcome_moments(std::span<const RoundRecord> records) {
  numerics::CompensatedSum s2;
  numerics::CompensatedSum s4;
  for (const auto& r : records) {
    for (const double y : {r.dealer_outcome.q, r.dealer_outcome.p}) {
      s2.add(y * y);
      s4.add(y * y * y * y);
    }
  }
  // Outcomes have zero mean by construction; moments are taken about zero.
  const double m = 2.0 * static_cast<double>(records.size());
  OutcomeMoments out;
  out.variance = s2.value() / m;
  out.stderr_variance = std::sqrt(std::max(0.0, s4.value() / m - out.variance * out.variance) / m);
  return out;
}

CsvTable round_records_csv(std::span<const RoundRecord> records) {
  CsvTable table;
  table.header = {"round", "j", "q_j", "p_j", "T_j", "q_B", "p_B"};
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    for (std::size_t j = 0; j < rec.participant_quadratures.size(); ++j) {
      const auto& x = rec.participant_quadratures[j];
      table.add_row({format_number(static_cast<std::int64_t>(r)), format_number(static_cast<std::int64_t>(j + 1)),
                     format_number(x.q), format_number(x.p), format_number(rec.sampled_t[j]),
                     format_number(rec.dealer_outcome.q), format_number(rec.dealer_outcome.p)});
    }
  }
  return table;
}

}  // namespace fsqss::protocol_sim
