#include "fsqss/numerics.hpp"

#include "fsqss/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace fsqss::numerics {

namespace {

// Below this the power series is used, above it the large-argument expansion.
// At 25 the expansion's smallest term is ~e^{-50} relative, and the series has
// only positive terms.
constexpr double kBesselCrossover = 25.0;

// Largest x with I0(x), I1(x) finite in double.
constexpr double kBesselOverflow = 713.98;

// Sum_{k>=0} (x/2)^{2k+order} / (k! (k+order)!), order 0 or 1.
double bessel_series(double x, int order) {
  const double q = 0.25 * x * x;
  double term = order == 0 ? 1.0 : 0.5 * x;
  double sum = term;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(k + order));
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

// sqrt(2 pi x) e^{-x} I_order(x) for large positive x.
double bessel_asymptotic_scaled(double x, int order) {
  const double mu = 4.0 * order * order;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = -term * (mu - odd * odd) / (k * 8.0 * x);
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

double scaled_bessel(double x, int order) {
  const double ax = std::abs(x);
  double value;
  if (ax <= kBesselCrossover) {
    value = std::exp(-ax) * bessel_series(ax, order);
  } else {
    value = bessel_asymptotic_scaled(ax, order) / std::sqrt(2.0 * std::numbers::pi * ax);
  }
  return (order == 1 && x < 0.0) ? -value : value;
}

double unscaled_bessel(double x, int order, const char* name) {
  if (!std::isfinite(x)) throw DomainError(fmt::format("{}: non-finite argument", name));
  const double ax = std::abs(x);
  if (ax > kBesselOverflow) {
    throw OverflowError(fmt::format("{}({}) overflows double precision", name, x));
  }
  double value;
  if (ax <= kBesselCrossover) {
    value = bessel_series(ax, order);
  } else {
    value = std::exp(ax - 0.5 * std::log(2.0 * std::numbers::pi * ax)) *
            bessel_asymptotic_scaled(ax, order);
  }
  if (!std::isfinite(value)) {
    throw OverflowError(fmt::format("{}({}) overflows double precision", name, x));
  }
  return (order == 1 && x < 0.0) ? -value : value;
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

double bessel_i0(double x) { return unscaled_bessel(x, 0, "bessel_i0"); }
double bessel_i1(double x) { return unscaled_bessel(x, 1, "bessel_i1"); }

double bessel_i0e(double x) {
  if (!std::isfinite(x)) throw DomainError("bessel_i0e: non-finite argument");
  return scaled_bessel(x, 0);
}

double bessel_i1e(double x) {
  if (!std::isfinite(x)) throw DomainError("bessel_i1e: non-finite argument");
  return scaled_bessel(x, 1);
}

double lambert_w0(double x) {
  constexpr double kBranch = -1.0 / std::numbers::e;
  if (std::isnan(x)) throw DomainError("lambert_w0: NaN argument");
  if (x < kBranch) {
    // -1/e is not representable; accept values within rounding of it.
    if (x < kBranch - 4.0 * std::numeric_limits<double>::epsilon()) {
      throw DomainError(fmt::format("lambert_w0: argument {} below -1/e", x));
    }
    return -1.0;
  }
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return x;

  double w;
  if (x < -0.32) {
    // Branch-point series in p = sqrt(2(e x + 1)).
    const double p = std::sqrt(std::max(0.0, 2.0 * (std::numbers::e * x + 1.0)));
    w = -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * 11.0 / 72.0));
  } else if (x < 3.0) {
    w = std::log1p(x) * (1.0 - 0.15 * std::log1p(x));
  } else {
    const double l1 = std::log(x);
    const double l2 = std::log(l1);
    w = l1 - l2 + l2 / l1;
  }

  for (int it = 0; it < 64; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    if (f == 0.0) break;
    const double wp1 = w + 1.0;
    if (wp1 == 0.0) break;
    const double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    const double step = f / denom;
    w -= step;
    if (std::abs(step) <= 1e-16 * (1.0 + std::abs(w))) break;
  }
  return w;
}

double lambert_w0_of_exp(double u) {
  if (std::isnan(u)) throw DomainError("lambert_w0_of_exp: NaN argument");
  if (u < 700.0) return lambert_w0(std::exp(u));
  // Solve w + ln w = u by Newton.
  double w = u - std::log(u);
  for (int it = 0; it < 64; ++it) {
    const double next = w * (1.0 + u - std::log(w)) / (1.0 + w);
    if (std::abs(next - w) <= 1e-16 * next) {
      w = next;
      break;
    }
    w = next;
  }
  return w;
}

double gaussian_cdf(double x) {
  if (std::isnan(x)) throw DomainError("gaussian_cdf: NaN argument");
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
    : seed_(seed), stream_id_(stream_id), key_(mix64(seed ^ mix64(stream_id + kGolden))) {}

std::uint64_t RngStream::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
}

double RngStream::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double radius = std::sqrt(-2.0 * std::log(uniform()));
  const double angle = 2.0 * std::numbers::pi * uniform();
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

CovMatrix4::CovMatrix4(const Eigen::Matrix4d& m) : m_(m) {
  const double scale = std::max(1e-300, m.cwiseAbs().maxCoeff());
  if (!m.allFinite()) throw DecompositionError("covariance has non-finite entries");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw DecompositionError("covariance matrix is not symmetric");
  }
}

Eigen::Matrix4d psd_cholesky(const CovMatrix4& cov) {
  const Eigen::Matrix4d& a = cov.matrix();
  const double scale = a.diagonal().cwiseAbs().maxCoeff();
  const double tol = 1e-12 * std::max(scale, 1e-300);
  Eigen::Matrix4d l = Eigen::Matrix4d::Zero();
  for (int j = 0; j < 4; ++j) {
    double d = a(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d < -tol) {
      throw DecompositionError(
          fmt::format("covariance is not positive semi-definite (pivot {} = {})", j, d));
    }
    if (d <= tol) {
      for (int i = j + 1; i < 4; ++i) {
        double s = a(i, j);
        for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
        if (std::abs(s) > std::sqrt(tol) * std::sqrt(std::max(a(i, i), 0.0)) + tol) {
          throw DecompositionError(
              fmt::format("covariance is not positive semi-definite (column {})", j));
        }
      }
      continue;
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (int i = j + 1; i < 4; ++i) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

MvnSampler::MvnSampler(const Eigen::Vector4d& mean, const CovMatrix4& cov)
    : mean_(mean), factor_(psd_cholesky(cov)) {}

Eigen::Vector4d MvnSampler::operator()(RngStream& rng) const {
  Eigen::Vector4d z;
  for (int i = 0; i < 4; ++i) z(i) = rng.normal();
  Eigen::Vector4d out = mean_;
  for (int i = 0; i < 4; ++i) {
    for (int k = 0; k <= i; ++k) {
      if (factor_(i, k) != 0.0) out(i) += factor_(i, k) * z(k);
    }
  }
  return out;
}

Eigen::Vector4d sample_mvn(const Eigen::Vector4d& mean, const CovMatrix4& cov, RngStream& rng) {
  return MvnSampler(mean, cov)(rng);
}

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    comp_ += (sum_ - t) + x;
  } else {
    comp_ += (x - t) + sum_;
  }
  sum_ = t;
}

void CompensatedSum::add(const CompensatedSum& other) noexcept {
  add(other.sum_);
  add(other.comp_);
}

}  // namespace fsqss::numerics
