#include "fsqss/interruption.hpp"

#include "fsqss/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

namespace fsqss::interruption {

double aoa_variance(const InterruptionInputs& in) {
  if (!(in.link_distance > 0.0)) throw DomainError("aoa_variance: link distance must be positive");
  if (!(in.x0_variance >= 0.0)) throw DomainError("aoa_variance: negative beam-wander variance");
  return in.x0_variance / (in.link_distance * in.link_distance);
}

double link_interruption_prob(const InterruptionInputs& in) {
  if (!(in.fiber_core_diameter > 0.0) || !(in.focal_length > 0.0)) {
    throw DomainError("link_interruption_prob: core diameter and focal length must be positive");
  }
  const double var = aoa_variance(in);
  if (var == 0.0 || std::isinf(in.fiber_core_diameter)) return 0.0;
  // The focus is N(0, D_f^2 <theta_a^2>); P = 1 - [2 Phi(a) - 1] = erfc(a / sqrt 2).
  const double a = in.fiber_core_diameter / (2.0 * in.focal_length * std::sqrt(var));
  return std::erfc(a / std::numbers::sqrt2);
}

double system_interruption_prob(std::span<const double> link_probs) {
  double survive = 1.0;
  for (const double p : link_probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw DomainError(fmt::format("interruption probability {} outside [0, 1]", p));
    }
    survive *= 1.0 - p;
  }
  return 1.0 - survive;
}

}  // namespace fsqss::interruption
