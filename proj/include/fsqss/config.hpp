#pragma once

#include "fsqss/atmosphere.hpp"
#include "fsqss/noise.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fsqss {

enum class ChiEfficiency { reconciliation, detector };
enum class Fading { fast, slow };

/// Every system parameter. Defaults are the reference parameter table; keys
/// in the JSON config are given next to each field.
struct SystemConfig {
  double wavelength = 8e-5;            // lambda, m
  double w0 = 0.02;                    // w0, m
  double aperture_radius = 0.2;        // r, m
  double fiber_core_diameter = 9e-6;   // d_cor, m
  double focal_length = 0.22;          // d_f, m
  double outer_scale = 0.04;           // l0, m (recorded, unused by the beam model)
  double pulse_rate = 1e8;             // f_pr, Hz
  double duty_ratio = 0.15;            // r_ra
  double eta = 0.95;                   // eta, reconciliation
  double eta_e = 0.5;                  // eta_e, detector efficiency
  double habs_transmissivity = 0.99;   // t_h
  double eps0 = 0.01;                  // eps0, SNU
  double v_el = 0.1;                   // v_el, SNU
  double v_a = 1.0;                    // v_a, SNU
  double altitude = 10.0;              // h, m
  double d_db = 40.0;                  // d_db, dB
  double r_e = 40.0;                   // r_e, dB
  double r_p = 30.0;                   // r_p, dB

  int participants = 5;                // n
  double distance = 10'000.0;          // l, m
  double cn2 = 1e-15;                  // cn2, m^{-2/3}
  std::int64_t mc_samples = 1'000'000; // mc_samples
  std::uint64_t seed = 20241001;       // seed
  double e0 = 0.01;                    // e0, SNU
  double e_r_sq = 1e4;                 // e_r_sq, SNU (used when e_r_mode is fixed)
  noise::ReferenceMode e_r_mode = noise::ReferenceMode::optimal;  // e_r_mode
  double wander_exponent = atmosphere::kDefaultWanderExponent;   // wander_exponent
  double heterodyne_mi_factor = 1.0;   // heterodyne_mi_factor
  ChiEfficiency chi_efficiency = ChiEfficiency::reconciliation;  // chi_efficiency
  Fading fading = Fading::fast;        // fading
  std::int64_t fading_block = 1000;    // fading_block, rounds per block when slow
  std::int64_t rounds = 100'000;       // rounds (protocol simulation)

  /// Throws ConfigError naming the first offending field.
  void validate() const;

  atmosphere::TurbulenceParams turbulence() const;
  /// Efficiency that enters the phase-reference noise chi_j.
  double chi_eta() const { return chi_efficiency == ChiEfficiency::detector ? eta_e : eta; }
  /// Noise inputs for link j given the mean transmittance vector.
  noise::LinkNoiseInputs noise_inputs(const std::vector<double>& mean_t, int link,
                                      const atmosphere::ChannelStats& stats) const;
};

/// Parses a JSON object of overrides; an empty or whitespace-only text yields
/// the defaults. Unknown keys, wrong types, and out-of-range values raise
/// ConfigError naming the field (and the line for syntax errors).
SystemConfig validate_config(std::string_view raw);
SystemConfig load_config_file(const std::string& path);

/// Serializes every field (round-trips through validate_config).
std::string config_to_json(const SystemConfig& cfg);

/// Names of all recognised config keys.
const std::vector<std::string>& config_keys();

}  // namespace fsqss
