#pragma once

#include "fsqss/numerics.hpp"

#include <cstdint>

namespace fsqss::atmosphere {

/// Extinction coefficient at sea level (m^-1) and its scale height (m).
inline constexpr double kExtinctionBeta0 = 5e-6;
inline constexpr double kExtinctionScaleHeight = 6600.0;

/// Exponent of the Fresnel parameter in the beam-wander variance, as printed.
inline constexpr double kDefaultWanderExponent = -6.0 / 7.0;

struct TurbulenceParams {
  double cn2 = 1e-15;              // m^{-2/3}
  double wavelength = 8e-5;        // m
  double w0 = 0.02;                // initial beam radius, m
  double aperture_radius = 0.2;    // m
  double distance = 10'000.0;      // m
  double altitude = 10.0;          // m
  double wander_exponent = kDefaultWanderExponent;

  double wavenumber() const;
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Gaussian moments of w = (x0, y0, phi1, phi2).
struct BeamMoments {
  Eigen::Vector4d mean;
  numerics::CovMatrix4 cov;

  double x0_variance() const { return cov(0, 0); }
  double phi_mean() const { return mean(2); }
  double phi_variance() const { return cov(2, 2); }
  double phi_covariance() const { return cov(2, 3); }
};

struct EllipticalBeamSample {
  double x0 = 0.0;     // m
  double y0 = 0.0;     // m
  double phi1 = 0.0;
  double phi2 = 0.0;
  double theta = 0.0;  // rad, [0, pi/2]

  double w1(double w0) const;
  double w2(double w0) const;
};

struct ChannelStats {
  double mean_t = 0.0;
  double mean_sqrt_t = 0.0;
  double var_sqrt_t = 0.0;
  std::int64_t n_samples = 0;
  double stderr_mean_t = 0.0;
  double stderr_mean_sqrt_t = 0.0;

  /// T^e = <sqrt T>^2.
  double equivalent_transmittance() const { return mean_sqrt_t * mean_sqrt_t; }
};

struct LinkGeometry {
  int link = 1;                    // j, 1-based
  int n_participants = 1;
  double total_distance = 10'000.0;
  double habs_transmissivity = 0.99;

  void validate() const;
};

double rytov_variance(const TurbulenceParams& p);
double fresnel_parameter(const TurbulenceParams& p);
BeamMoments beam_param_covariance(const TurbulenceParams& p);

/// Samples elliptical-beam parameters for a fixed parameter set.
class BeamSampler {
 public:
  explicit BeamSampler(const TurbulenceParams& p);

  EllipticalBeamSample operator()(numerics::RngStream& rng) const;
  const BeamMoments& moments() const noexcept { return moments_; }

 private:
  BeamMoments moments_;
  numerics::MvnSampler mvn_;
};

EllipticalBeamSample sample_beam(const TurbulenceParams& p, numerics::RngStream& rng);

/// Scale function R(x) for aperture radius r. Throws DomainError when
/// r^2 x^2 < 1e-10; callers needing that region use the limit path.
double scale_R(double x, double r);
/// Shape function Q(x) for aperture radius r. Same degeneracy rule as scale_R.
double shape_Q(double x, double r);

/// Effective spot radius for orientation `angle` of the ellipse relative to
/// the centroid displacement.
double w_eff(double angle, double w1, double w2, double r);

/// Transmittance of a centered elliptical beam through a circular aperture.
double t0_centered(double w1, double w2, double r);

/// Atmospheric transmittance of one sampled beam.
double t_atmospheric(const EllipticalBeamSample& s, const TurbulenceParams& p);

/// Beam-extinction transmittance exp(-beta0 e^{-h/h0} L).
double t_extinction(double distance, double altitude);

/// Number of HABS passes f(j, n) for participant j of n.
int habs_exponent(int j, int n);

/// Horizontal distance L (n - j + 1) / n of participant j.
double link_distance(int j, int n, double total_distance);

/// Monte Carlo estimate of the moments of T_j = T_at,j T_ex,j T_H^f(j,n).
/// Sample i is drawn from RngStream(seed, i) in every link, so links and
/// sweep points evaluated with the same seed share random numbers. Results
/// are bit-identical for any `workers` (0 = hardware concurrency).
ChannelStats estimate_link_stats(const LinkGeometry& geom, const TurbulenceParams& p,
                                 std::int64_t n_samples, std::uint64_t seed,
                                 unsigned workers = 0);

namespace detail {

struct ScaleShape {
  double scale;  // R
  double shape;  // Q
};

/// 1 - e^{-y} I0(y), accurate for small y.
double one_minus_scaled_i0(double y);
/// R and Q as functions of y = r^2 x^2, valid for every y >= 0.
ScaleShape scale_shape(double y);
/// r^2 (2 / W_eff)^2, i.e. the Lambert-W value inside W_eff.
double effective_lambert_argument(double angle, double w1, double w2, double r);

}  // namespace detail

}  // namespace fsqss::atmosphere
