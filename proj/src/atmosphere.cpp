#include "fsqss/atmosphere.hpp"

#include "fsqss/errors.hpp"
#include "fsqss/parallel.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace fsqss::atmosphere {

namespace {

constexpr double kDegenerateArgument = 1e-10;
constexpr double kCircularTolerance = 1e-6;
constexpr std::int64_t kMinSamples = 10'000;
constexpr std::int64_t kChunk = 4096;

void require_positive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(field, fmt::format("{} must be positive and finite, got {}", field, v));
  }
}

}  // namespace

double TurbulenceParams::wavenumber() const { return 2.0 * std::numbers::pi / wavelength; }

void TurbulenceParams::validate() const {
  if (!(cn2 >= 0.0) || !std::isfinite(cn2)) {
    throw ConfigError("cn2", fmt::format("cn2 must be non-negative, got {}", cn2));
  }
  require_positive(wavelength, "lambda");
  require_positive(w0, "w0");
  require_positive(aperture_radius, "r");
  require_positive(distance, "l");
  if (!(altitude >= 0.0) || !std::isfinite(altitude)) {
    throw ConfigError("h", fmt::format("h must be non-negative, got {}", altitude));
  }
  if (!std::isfinite(wander_exponent)) {
    throw ConfigError("wander_exponent", "wander_exponent must be finite");
  }
}

double EllipticalBeamSample::w1(double w0) const { return w0 * std::exp(0.5 * phi1); }
double EllipticalBeamSample::w2(double w0) const { return w0 * std::exp(0.5 * phi2); }

void LinkGeometry::validate() const {
  if (n_participants < 1) {
    throw ConfigError("n", fmt::format("n must be at least 1, got {}", n_participants));
  }
  if (link < 1 || link > n_participants) {
    throw IndexError(fmt::format("link index {} outside 1..{}", link, n_participants));
  }
  require_positive(total_distance, "l");
  if (!(habs_transmissivity > 0.0 && habs_transmissivity <= 1.0)) {
    throw ConfigError("t_h", fmt::format("t_h must lie in (0, 1], got {}", habs_transmissivity));
  }
}

double rytov_variance(const TurbulenceParams& p) {
  return 1.23 * p.cn2 * std::pow(p.wavenumber(), 7.0 / 6.0) * std::pow(p.distance, 11.0 / 6.0);
}

double fresnel_parameter(const TurbulenceParams& p) {
  return p.wavenumber() * p.w0 * p.w0 / (2.0 * p.distance);
}

BeamMoments beam_param_covariance(const TurbulenceParams& p) {
  p.validate();
  const double sigma2 = rytov_variance(p);
  const double omega = fresnel_parameter(p);
  const double a = sigma2 * std::pow(omega, 5.0 / 6.0);
  const double b = 1.0 + 2.96 * a;
  const double b2 = b * b;

  const double var_arg = 1.0 + 1.2 * a / b2;
  const double cov_arg = 1.0 - 0.8 * a / b2;
  const double mean_arg = b2 + 1.2 * a;
  if (!(cov_arg > 0.0) || !(var_arg > 0.0) || !(omega > 0.0) || !std::isfinite(a)) {
    throw DomainError("beam parameters outside the validity of the elliptical-beam model");
  }

  const double phi_mean = 2.0 * std::log(b) - 2.0 * std::log(omega) - 0.5 * std::log(mean_arg);
  const double phi_var = std::log1p(1.2 * a / b2);
  const double phi_cov = std::log1p(-0.8 * a / b2);
  const double x0_var = 0.33 * p.w0 * p.w0 * sigma2 * std::pow(omega, p.wander_exponent);

  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m(0, 0) = x0_var;
  m(1, 1) = x0_var;
  m(2, 2) = phi_var;
  m(3, 3) = phi_var;
  m(2, 3) = phi_cov;
  m(3, 2) = phi_cov;
  return BeamMoments{Eigen::Vector4d(0.0, 0.0, phi_mean, phi_mean), numerics::CovMatrix4(m)};
}

BeamSampler::BeamSampler(const TurbulenceParams& p)
    : moments_(beam_param_covariance(p)), mvn_(moments_.mean, moments_.cov) {}

EllipticalBeamSample BeamSampler::operator()(numerics::RngStream& rng) const {
  const Eigen::Vector4d v = mvn_(rng);
  return EllipticalBeamSample{v(0), v(1), v(2), v(3), 0.5 * std::numbers::pi * rng.uniform()};
}

EllipticalBeamSample sample_beam(const TurbulenceParams& p, numerics::RngStream& rng) {
  return BeamSampler(p)(rng);
}

namespace detail {

namespace {

// Power series for y < 1 of
//   g(y)  = 1 - e^{-y} I0(y)      = sum_k (-1)^{k+1} b_k y^k
//   n(y)  = 2 (1 - e^{-y/2})      = sum_k (-1)^{k+1} a_k y^k
// with a_k = 2 / (2^k k!) and b_k = (1/2)_k 2^k / (k!)^2. The k = 1 terms of
// n - g cancel exactly, so it is summed term by term.
struct SmallSeries {
  double g;
  double n_minus_g;
};

SmallSeries small_series(double y) {
  double a = 1.0;
  double b = 1.0;
  double yk = y;
  double g = y;
  double diff = 0.0;
  double sign = 1.0;
  for (int k = 1; k < 80; ++k) {
    a /= 2.0 * (k + 1);
    b *= 2.0 * (k + 0.5) / ((k + 1.0) * (k + 1.0));
    yk *= y;
    sign = -sign;
    const double gt = sign * b * yk;
    const double dt = sign * (a - b) * yk;
    g += gt;
    diff += dt;
    if (std::abs(gt) < 1e-18 * std::abs(g) && std::abs(dt) < 1e-18 * std::abs(diff)) break;
  }
  return {g, diff};
}

}  // namespace

double one_minus_scaled_i0(double y) {
  if (y < 1.0) return small_series(y).g;
  return 1.0 - numerics::bessel_i0e(y);
}

ScaleShape scale_shape(double y) {
  if (!(y >= 0.0)) throw DomainError("scale/shape argument must be non-negative");
  if (y == 0.0) return {std::numeric_limits<double>::infinity(), 2.0};
  if (y < 1e-150) {
    // Leading order: ln(...) = y / 2, Q = 2.
    return {std::sqrt(2.0 / y), 2.0};
  }
  double g;
  double log_ratio;
  if (y < 1.0) {
    const SmallSeries s = small_series(y);
    g = s.g;
    log_ratio = std::log1p(s.n_minus_g / s.g);
  } else {
    g = 1.0 - numerics::bessel_i0e(y);
    log_ratio = std::log(-2.0 * std::expm1(-0.5 * y) / g);
  }
  const double shape = 2.0 * y * numerics::bessel_i1e(y) / (g * log_ratio);
  const double scale = std::pow(log_ratio, -1.0 / shape);
  return {scale, shape};
}

double effective_lambert_argument(double angle, double w1, double w2, double r) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double a1 = r * r / (w1 * w1);
  const double a2 = r * r / (w2 * w2);
  const double log_z =
      std::log(4.0 * r * r / (w1 * w2)) + a1 * (1.0 + 2.0 * c * c) + a2 * (1.0 + 2.0 * s * s);
  return numerics::lambert_w0_of_exp(log_z);
}

}  // namespace detail

double scale_R(double x, double r) {
  const double y = r * r * x * x;
  if (!(y >= kDegenerateArgument)) {
    throw DomainError(fmt::format("scale_R: degenerate argument r^2 x^2 = {}", y));
  }
  return detail::scale_shape(y).scale;
}

double shape_Q(double x, double r) {
  const double y = r * r * x * x;
  if (!(y >= kDegenerateArgument)) {
    throw DomainError(fmt::format("shape_Q: degenerate argument r^2 x^2 = {}", y));
  }
  return detail::scale_shape(y).shape;
}

double w_eff(double angle, double w1, double w2, double r) {
  if (!(w1 > 0.0 && w2 > 0.0 && r > 0.0)) {
    throw DomainError("w_eff: radii must be positive");
  }
  return 2.0 * r / std::sqrt(detail::effective_lambert_argument(angle, w1, w2, r));
}

double t0_centered(double w1, double w2, double r) {
  if (!(w1 > 0.0 && w2 > 0.0 && r > 0.0)) {
    throw DomainError("t0_centered: radii must be positive");
  }
  const double a1 = r * r / (w1 * w1);
  const double a2 = r * r / (w2 * w2);
  const double amin = std::min(a1, a2);
  // 1 - I0(a1 - a2) e^{-(a1 + a2)} = (1 - e^{-2 amin}) + e^{-2 amin} (1 - e^{-|a1-a2|} I0(|a1-a2|))
  const double first = -std::expm1(-2.0 * amin) +
                       std::exp(-2.0 * amin) * detail::one_minus_scaled_i0(std::abs(a1 - a2));

  double second = 0.0;
  if (std::abs(w1 - w2) >= kCircularTolerance * w1) {
    const double inv_diff = 1.0 / w1 - 1.0 / w2;
    const double y = r * r * inv_diff * inv_diff;
    const auto rq = detail::scale_shape(y);
    // (W1 + W2)^2 / |W1^2 - W2^2|
    const double ratio = (w1 + w2) / std::abs(w1 - w2);
    second = -2.0 * std::expm1(-0.5 * y) * std::exp(-std::pow(ratio / rq.scale, rq.shape));
  }
  return std::clamp(first - second, 0.0, 1.0);
}

double t_atmospheric(const EllipticalBeamSample& s, const TurbulenceParams& p) {
  const double r = p.aperture_radius;
  const double w1 = s.w1(p.w0);
  const double w2 = s.w2(p.w0);
  const double t0 = t0_centered(w1, w2, r);
  const double r0 = std::hypot(s.x0, s.y0);
  if (r0 == 0.0) return t0;

  const double alpha = std::atan2(s.y0, s.x0);
  const double y = detail::effective_lambert_argument(s.theta - alpha, w1, w2, r);
  const auto rq = detail::scale_shape(y);
  const double t = t0 * std::exp(-std::pow((r0 / r) / rq.scale, rq.shape));
  return std::clamp(t, 0.0, 1.0);
}

double t_extinction(double distance, double altitude) {
  if (!(distance >= 0.0)) throw DomainError("t_extinction: distance must be non-negative");
  return std::exp(-kExtinctionBeta0 * std::exp(-altitude / kExtinctionScaleHeight) * distance);
}

int habs_exponent(int j, int n) {
  if (n < 1 || j < 1 || j > n) {
    throw IndexError(fmt::format("habs_exponent: index {} outside 1..{}", j, n));
  }
  return j == 1 ? n - j : n - j + 1;
}

double link_distance(int j, int n, double total_distance) {
  if (n < 1 || j < 1 || j > n) {
    throw IndexError(fmt::format("link_distance: index {} outside 1..{}", j, n));
  }
  if (!(total_distance > 0.0)) throw DomainError("link_distance: total distance must be positive");
  return total_distance * static_cast<double>(n - j + 1) / static_cast<double>(n);
}

ChannelStats estimate_link_stats(const LinkGeometry& geom, const TurbulenceParams& p,
                                 std::int64_t n_samples, std::uint64_t seed, unsigned workers) {
  geom.validate();
  if (n_samples < kMinSamples) {
    throw ConfigError("mc_samples",
                      fmt::format("mc_samples must be at least {}, got {}", kMinSamples, n_samples));
  }
  TurbulenceParams link_params = p;
  link_params.distance = link_distance(geom.link, geom.n_participants, geom.total_distance);
  link_params.validate();

  const BeamSampler sampler(link_params);
  auto draw = [&](std::int64_t i) {
    numerics::RngStream rng(seed, static_cast<std::uint64_t>(i));
    return t_atmospheric(sampler(rng), link_params);
  };
  // Moments are accumulated about the first draw so nearly deterministic
  // channels keep their small variances.
  const double shift_t = draw(0);
  const double shift_s = std::sqrt(shift_t);

  const std::size_t n_chunks = static_cast<std::size_t>((n_samples + kChunk - 1) / kChunk);
  struct Partial {
    numerics::CompensatedSum t, t_sq, s, s_sq;
  };
  std::vector<Partial> partials(n_chunks);

  parallel_for(n_chunks, workers, [&](std::size_t c) {
    const std::int64_t begin = static_cast<std::int64_t>(c) * kChunk;
    const std::int64_t end = std::min(begin + kChunk, n_samples);
    Partial& out = partials[c];
    for (std::int64_t i = begin; i < end; ++i) {
      const double t = draw(i);
      const double dt = t - shift_t;
      const double ds = std::sqrt(t) - shift_s;
      out.t.add(dt);
      out.t_sq.add(dt * dt);
      out.s.add(ds);
      out.s_sq.add(ds * ds);
    }
  });

  Partial total;
  for (const auto& part : partials) {
    total.t.add(part.t);
    total.t_sq.add(part.t_sq);
    total.s.add(part.s);
    total.s_sq.add(part.s_sq);
  }
  const double n = static_cast<double>(n_samples);
  const double dt_mean = total.t.value() / n;
  const double ds_mean = total.s.value() / n;
  const double mean_at = shift_t + dt_mean;
  const double var_t_at = std::max(0.0, total.t_sq.value() / n - dt_mean * dt_mean);
  const double var_s_at = std::max(0.0, total.s_sq.value() / n - ds_mean * ds_mean);
  const double mean_sqrt_at = std::min(shift_s + ds_mean, std::sqrt(mean_at));

  const double deterministic =
      t_extinction(link_params.distance, p.altitude) *
      std::pow(geom.habs_transmissivity, habs_exponent(geom.link, geom.n_participants));

  ChannelStats stats;
  stats.n_samples = n_samples;
  stats.mean_t = mean_at * deterministic;
  stats.mean_sqrt_t = std::min(mean_sqrt_at * std::sqrt(deterministic), std::sqrt(stats.mean_t));
  // Squaring a rounded sqrt can overshoot by an ulp; keep <sqrt T>^2 <= <T>.
  while (stats.mean_sqrt_t * stats.mean_sqrt_t > stats.mean_t) {
    stats.mean_sqrt_t = std::nextafter(stats.mean_sqrt_t, 0.0);
  }
  stats.var_sqrt_t = var_s_at * deterministic;
  const double bessel = n / (n - 1.0);
  stats.stderr_mean_t = deterministic * std::sqrt(var_t_at * bessel / n);
  stats.stderr_mean_sqrt_t = std::sqrt(deterministic) * std::sqrt(var_s_at * bessel / n);
  return stats;
}

}  // namespace fsqss::atmosphere
