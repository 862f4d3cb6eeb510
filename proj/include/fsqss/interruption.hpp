#pragma once

#include <span>

namespace fsqss::interruption {

struct InterruptionInputs {
  double x0_variance = 0.0;            // <x0^2>, m^2
  double link_distance = 10'000.0;     // L_j, m
  double fiber_core_diameter = 9e-6;   // d_cor, m
  double focal_length = 0.22;          // D_f, m
};

/// Angle-of-arrival variance <theta_a^2> = <x0^2> / L_j^2 (rad^2).
double aoa_variance(const InterruptionInputs& in);

/// Probability that the focused spot falls outside the fiber core.
double link_interruption_prob(const InterruptionInputs& in);

/// 1 - prod_j (1 - P_j).
double system_interruption_prob(std::span<const double> link_probs);

}  // namespace fsqss::interruption
