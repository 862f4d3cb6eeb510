#include "fsqss/noise.hpp"

#include "fsqss/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace fsqss::noise {

namespace {

double db_to_linear_attenuation(double db) { return std::pow(10.0, -0.1 * db); }

// sum_i <T_i> 10^{-0.1 (R_e,i + R_p,i)}
double leakage_sum(const LinkNoiseInputs& in) {
  double sum = 0.0;
  for (std::size_t i = 0; i < in.participants(); ++i) {
    sum += in.mean_t[i] * db_to_linear_attenuation(in.r_e[i] + in.r_p[i]);
  }
  return sum;
}

}  // namespace

LinkNoiseInputs LinkNoiseInputs::identical(std::vector<double> mean_t, int link, double v_a,
                                           double d_db, double r_e, double r_p) {
  LinkNoiseInputs in;
  const std::size_t n = mean_t.size();
  in.mean_t = std::move(mean_t);
  in.link = link;
  in.v_a.assign(n, v_a);
  in.d_db.assign(n, d_db);
  in.r_e.assign(n, r_e);
  in.r_p.assign(n, r_p);
  return in;
}

void LinkNoiseInputs::validate() const {
  const std::size_t n = mean_t.size();
  if (n == 0) throw ConfigError("n", "noise inputs need at least one participant");
  if (v_a.size() != n || d_db.size() != n || r_e.size() != n || r_p.size() != n) {
    throw ConfigError("n", "per-participant noise vectors differ in length");
  }
  if (link < 1 || static_cast<std::size_t>(link) > n) {
    throw IndexError(fmt::format("link index {} outside 1..{}", link, n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(mean_t[i] > 0.0 && mean_t[i] <= 1.0)) {
      throw DomainError(fmt::format("<T_{}> = {} outside (0, 1]", i + 1, mean_t[i]));
    }
    if (!(v_a[i] >= 0.0)) throw ConfigError("v_a", "v_a must be non-negative");
    if (!(d_db[i] >= 0.0)) throw ConfigError("d_db", "d_db must be non-negative");
    if (!(r_e[i] >= 0.0)) throw ConfigError("r_e", "r_e must be non-negative");
    if (!(r_p[i] >= 0.0)) throw ConfigError("r_p", "r_p must be non-negative");
  }
  if (!(e_r_sq >= 0.0)) throw ConfigError("e_r_sq", "e_r_sq must be non-negative");
  if (!(e0 >= 0.0)) throw ConfigError("e0", "e0 must be non-negative");
  if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("eta", "eta must lie in (0, 1]");
  if (!(v_el >= 0.0)) throw ConfigError("v_el", "v_el must be non-negative");
  if (!(eps0 >= 0.0)) throw ConfigError("eps0", "eps0 must be non-negative");
}

double chi_reference(double t, double e0, double eta, double v_el) {
  if (!(t > 0.0)) throw DomainError(fmt::format("chi_reference: transmittance {} <= 0", t));
  if (!(eta > 0.0)) throw DomainError("chi_reference: eta must be positive");
  return 1.0 / t - 1.0 + e0 + (2.0 - eta + 2.0 * v_el) / (eta * t);
}

double eps_modulation(const LinkNoiseInputs& in) {
  double sum = 0.0;
  for (std::size_t i = 0; i < in.participants(); ++i) {
    // |alpha_smax,i|^2 ~ 10 V_A,i
    sum += in.mean_t[i] * 10.0 * in.v_a[i] * db_to_linear_attenuation(in.d_db[i]);
  }
  return sum / in.link_mean_t();
}

double eps_leakage(const LinkNoiseInputs& in) {
  const double sum = leakage_sum(in);
  if (sum == 0.0 || in.e_r_sq == 0.0) return 0.0;
  return 2.0 * in.e_r_sq * sum / in.link_mean_t();
}

double eps_lo(const LinkNoiseInputs& in) {
  if (in.link_v_a() == 0.0) return 0.0;
  if (!(in.e_r_sq > 0.0)) throw DomainError("eps_lo: phase-reference intensity must be positive");
  const double chi = chi_reference(in.link_mean_t(), in.e0, in.eta, in.v_el);
  return in.link_v_a() * (chi + 1.0) / in.e_r_sq;
}

double eps_fluctuation(const atmosphere::ChannelStats& stats, double v_a) {
  const double var = stats.mean_t - stats.mean_sqrt_t * stats.mean_sqrt_t;
  return std::max(0.0, var) * v_a;
}

double optimal_reference_intensity(const LinkNoiseInputs& in) {
  const double sum = leakage_sum(in);
  if (!(sum > 0.0)) {
    throw DomainError("optimal_reference_intensity: all leakage coefficients vanish");
  }
  const double t = in.link_mean_t();
  const double chi = chi_reference(t, in.e0, in.eta, in.v_el);
  return std::sqrt(t * in.link_v_a() * (chi + 1.0) / (2.0 * sum));
}

NoiseBudget total_excess_noise(const LinkNoiseInputs& in, ReferenceMode mode) {
  in.validate();
  LinkNoiseInputs working = in;
  if (mode == ReferenceMode::optimal) working.e_r_sq = optimal_reference_intensity(in);

  NoiseBudget b;
  b.e_r_sq_used = working.e_r_sq;
  b.eps_am = eps_modulation(working);
  b.eps_le = eps_leakage(working);
  b.eps_lo = std::isinf(working.e_r_sq) ? 0.0 : eps_lo(working);
  b.eps_tf = eps_fluctuation(working.stats, working.link_v_a());
  b.eps_0 = working.eps0;
  b.eps_total = b.eps_am + b.eps_le + b.eps_lo + b.eps_tf + b.eps_0;
  return b;
}

}  // namespace fsqss::noise
