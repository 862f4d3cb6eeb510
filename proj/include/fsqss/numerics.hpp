#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace fsqss::numerics {

/// Modified Bessel function of the first kind, order 0.
double bessel_i0(double x);
/// Modified Bessel function of the first kind, order 1.
double bessel_i1(double x);
/// exp(-|x|) * I0(x); finite for every finite x.
double bessel_i0e(double x);
/// exp(-|x|) * I1(x); finite for every finite x.
double bessel_i1e(double x);

/// Principal branch of the Lambert W function, x >= -1/e.
double lambert_w0(double x);
/// W0(exp(u)) without forming exp(u); usable when exp(u) overflows.
double lambert_w0_of_exp(double u);

/// Standard normal cumulative distribution function.
double gaussian_cdf(double x);

/// Counter-based random stream. Draw k of stream (seed, stream_id) is a pure
/// function of (seed, stream_id, k), so Monte Carlo sample i can be produced
/// by any worker without shared state.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  /// Standard normal (Box-Muller, pairs cached).
  double normal() noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Symmetric 4x4 covariance. Construction checks symmetry only; positive
/// semi-definiteness is checked when the matrix is factorized.
class CovMatrix4 {
 public:
  CovMatrix4() : m_(Eigen::Matrix4d::Zero()) {}
  explicit CovMatrix4(const Eigen::Matrix4d& m);

  const Eigen::Matrix4d& matrix() const noexcept { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

 private:
  Eigen::Matrix4d m_;
};

/// Lower-triangular factor L with L L^T = cov. Pivots below 1e-12 are treated
/// as zero (jitter for nearly singular covariances); a pivot below -1e-12
/// raises DecompositionError.
Eigen::Matrix4d psd_cholesky(const CovMatrix4& cov);

/// Multivariate normal sampler with a precomputed factor.
class MvnSampler {
 public:
  MvnSampler(const Eigen::Vector4d& mean, const CovMatrix4& cov);

  Eigen::Vector4d operator()(RngStream& rng) const;

  const Eigen::Vector4d& mean() const noexcept { return mean_; }

 private:
  Eigen::Vector4d mean_;
  Eigen::Matrix4d factor_;
};

Eigen::Vector4d sample_mvn(const Eigen::Vector4d& mean, const CovMatrix4& cov, RngStream& rng);

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  void add(const CompensatedSum& other) noexcept;
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace fsqss::numerics
