#pragma once

#include "fsqss/atmosphere.hpp"

#include <vector>

namespace fsqss::noise {

/// Inputs for the excess-noise budget of link j. Per-participant vectors are
/// indexed by participant (0-based, participant i + 1); all variances in SNU.
struct LinkNoiseInputs {
  std::vector<double> mean_t;  // <T_i>
  int link = 1;                // j, 1-based
  std::vector<double> v_a;     // modulation variances V_{A_i}
  std::vector<double> d_db;    // modulator dynamic range, dB
  std::vector<double> r_e;     // amplitude-modulator extinction ratio, dB
  std::vector<double> r_p;     // polarization beam splitter extinction ratio, dB
  double e_r_sq = 0.0;         // phase-reference intensity E_{R,j}^2
  double e0 = 0.01;            // phase-reference channel noise
  double eta = 0.95;           // efficiency entering chi_j
  double v_el = 0.1;
  double eps0 = 0.01;
  atmosphere::ChannelStats stats;  // moments of T_j

  /// Identical participants: every per-participant vector filled with the
  /// same value.
  static LinkNoiseInputs identical(std::vector<double> mean_t, int link, double v_a, double d_db,
                                   double r_e, double r_p);

  std::size_t participants() const { return mean_t.size(); }
  double link_mean_t() const { return mean_t.at(static_cast<std::size_t>(link - 1)); }
  double link_v_a() const { return v_a.at(static_cast<std::size_t>(link - 1)); }
  void validate() const;
};

struct NoiseBudget {
  double eps_am = 0.0;
  double eps_le = 0.0;
  double eps_lo = 0.0;
  double eps_tf = 0.0;
  double eps_0 = 0.0;
  double eps_total = 0.0;
  double e_r_sq_used = 0.0;

  double eps_other() const { return eps_am + eps_le + eps_lo; }
};

enum class ReferenceMode { fixed, optimal };

/// Total noise imposed on the phase reference.
double chi_reference(double t, double e0, double eta, double v_el);

double eps_modulation(const LinkNoiseInputs& in);
double eps_leakage(const LinkNoiseInputs& in);
double eps_lo(const LinkNoiseInputs& in);
double eps_fluctuation(const atmosphere::ChannelStats& stats, double v_a);

/// Phase-reference intensity minimizing eps_le + eps_lo.
double optimal_reference_intensity(const LinkNoiseInputs& in);

/// Full budget. With ReferenceMode::optimal the given e_r_sq is ignored.
NoiseBudget total_excess_noise(const LinkNoiseInputs& in,
                               ReferenceMode mode = ReferenceMode::fixed);

}  // namespace fsqss::noise
