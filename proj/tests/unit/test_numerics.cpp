#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fsqss/errors.hpp"
#include "fsqss/numerics.hpp"
#include "fsqss/parallel.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace fsqss;
using namespace fsqss::numerics;

namespace {

// Power series sum (x/2)^(2k+nu) / (k! (k+nu)!) in long double.
long double bessel_series(int nu, long double x) {
  long double term = std::pow(x / 2.0L, nu);
  for (int i = 1; i <= nu; ++i) term /= i;
  long double sum = term;
  for (int k = 1; k < 400; ++k) {
    term *= (x / 2.0L) * (x / 2.0L) / (static_cast<long double>(k) * (k + nu));
    sum += term;
    if (term < sum * 1e-21L) break;
  }
  return sum;
}

long double lambert_newton(long double x) {
  long double w = x < 1.0L ? 0.5L * x : std::log(x);
  for (int i = 0; i < 200; ++i) {
    const long double f = w * std::exp(w) - x;
    const long double step = f / (std::exp(w) * (w + 1.0L));
    w -= step;
    if (std::fabs(step) < 1e-20L * (1.0L + std::fabs(w))) break;
  }
  return w;
}

double simpson_cdf(double x) {
  // 0.5 + integral_0^x of the standard normal density.
  const int n = 20000;
  const double h = x / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double t = i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * std::exp(-0.5 * t * t);
  }
  return 0.5 + s * h / 3.0 / std::sqrt(2.0 * M_PI);
}

}  // namespace

TEST_CASE("bessel_i0 matches the power series") {
  CHECK(bessel_i0(0.0) == 1.0);
  CHECK(bessel_i0(1.0) == doctest::Approx(1.2660658777520082).epsilon(1e-15));
  for (double x = 0.05; x <= 40.0; x += 0.37) {
    const double ref = static_cast<double>(bessel_series(0, x));
    CHECK(bessel_i0(x) == doctest::Approx(ref).epsilon(1e-13));
    CHECK(bessel_i0(-x) == bessel_i0(x));
  }
}

TEST_CASE("bessel_i1 matches the power series") {
  CHECK(bessel_i1(0.0) == 0.0);
  CHECK(bessel_i1(1.0) == doctest::Approx(0.5651591039924851).epsilon(1e-15));
  for (double x = 0.05; x <= 40.0; x += 0.37) {
    const double ref = static_cast<double>(bessel_series(1, x));
    CHECK(bessel_i1(x) == doctest::Approx(ref).epsilon(1e-13));
    CHECK(bessel_i1(-x) == -bessel_i1(x));
  }
}

TEST_CASE("scaled bessel functions agree with the library ones") {
  for (double x : {0.0, 0.3, 7.0, 24.9, 25.1, 80.0, 600.0, 5000.0, 1e6}) {
    const double i0e_ref = std::cyl_bessel_i(0.0, std::min(x, 700.0)) * std::exp(-std::min(x, 700.0));
    if (x <= 700.0) {
      CHECK(bessel_i0e(x) == doctest::Approx(i0e_ref).epsilon(1e-12));
      CHECK(bessel_i1e(x) == doctest::Approx(std::cyl_bessel_i(1.0, x) * std::exp(-x)).epsilon(1e-12));
    }
    CHECK(std::isfinite(bessel_i0e(x)));
    CHECK(bessel_i0e(-x) == bessel_i0e(x));
  }
  // Large-argument asymptote exp(-x) I0(x) ~ 1/sqrt(2 pi x).
  CHECK(bessel_i0e(1e6) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI * 1e6)).epsilon(1e-6));
}

TEST_CASE("bessel overflow is reported") {
  CHECK_THROWS_AS(bessel_i0(800.0), OverflowError);
  CHECK_THROWS_AS(bessel_i1(-800.0), OverflowError);
  CHECK(std::isfinite(bessel_i0(700.0)));
}

TEST_CASE("bessel derivative identity I0' = I1") {
  for (double x = 0.0; x <= 20.0; x += 0.25) {
    const double h = 1e-5 * std::max(1.0, x);
    const double d = (bessel_i0(x + h) - bessel_i0(x - h)) / (2.0 * h);
    CHECK(d == doctest::Approx(bessel_i1(x)).epsilon(1e-6));
  }
}

TEST_CASE("lambert_w0 fixed points") {
  CHECK(lambert_w0(0.0) == 0.0);
  CHECK(lambert_w0(M_E) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(lambert_w0(1.0) == doctest::Approx(0.5671432904097838).epsilon(1e-15));
  CHECK(lambert_w0(-1.0 / M_E) == doctest::Approx(-1.0).epsilon(1e-7));
  CHECK_THROWS_AS(lambert_w0(-0.5), DomainError);
  CHECK_THROWS_AS(lambert_w0(std::nan("")), DomainError);
}

TEST_CASE("lambert_w0 matches a Newton oracle") {
  for (double x : {-0.36, -0.3, -0.1, 1e-8, 0.2, 3.0, 17.0, 1e3, 1e10, 1e100, 1e300}) {
    const double ref = static_cast<double>(lambert_newton(x));
    CHECK(lambert_w0(x) == doctest::Approx(ref).epsilon(1e-14));
  }
}

TEST_CASE("lambert_w0 residual property on random inputs") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-1.0 / M_E, 1e3);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(gen);
    const double w = lambert_w0(x);
    CHECK(std::fabs(w * std::exp(w) - x) <= 1e-12 * std::max(1.0, std::fabs(x)));
  }
}

TEST_CASE("lambert_w0_of_exp continues past overflow") {
  for (double u : {-5.0, 0.0, 1.0, 50.0, 699.0}) {
    CHECK(lambert_w0_of_exp(u) == doctest::Approx(lambert_w0(std::exp(u))).epsilon(1e-14));
  }
  for (double u : {700.0, 1e4, 1e8}) {
    const double w = lambert_w0_of_exp(u);
    CHECK(w + std::log(w) == doctest::Approx(u).epsilon(1e-15));
  }
}

TEST_CASE("gaussian_cdf") {
  CHECK(gaussian_cdf(0.0) == 0.5);
  CHECK(gaussian_cdf(40.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(gaussian_cdf(1.959963985) == doctest::Approx(0.975).epsilon(1e-9));
  for (double x = -6.0; x <= 6.0; x += 0.5) {
    CHECK(gaussian_cdf(x) + gaussian_cdf(-x) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(gaussian_cdf(x) == doctest::Approx(simpson_cdf(x)).epsilon(1e-11));
  }
}

TEST_CASE("RngStream is a pure function of seed, stream and counter") {
  RngStream a(42, 9), b(42, 9), c(42, 10);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs = differs || x != c.next_u64();
  }
  CHECK(differs);
  RngStream u(1, 2);
  CompensatedSum s1, s2;
  for (int i = 0; i < 200000; ++i) {
    const double v = u.uniform();
    REQUIRE(v > 0.0);
    REQUIRE(v < 1.0);
    s1.add(v);
    const double z = u.normal();
    s2.add(z * z);
  }
  CHECK(s1.value() / 200000 == doctest::Approx(0.5).epsilon(0.005));
  CHECK(s2.value() / 200000 == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("psd_cholesky reconstructs and tolerates singular matrices") {
  Eigen::Matrix4d a;
  a << 4, 1, 0, 0, 1, 3, 0.5, 0, 0, 0.5, 2, 0.2, 0, 0, 0.2, 1;
  const auto l = psd_cholesky(CovMatrix4(a));
  CHECK((l * l.transpose() - a).norm() < 1e-14);

  Eigen::Matrix4d s = Eigen::Matrix4d::Zero();
  s(0, 0) = 1.0;
  s(2, 2) = 2.0;
  s(2, 3) = s(3, 2) = std::sqrt(2.0);
  s(3, 3) = 1.0;  // rank-one lower block
  const auto ls = psd_cholesky(CovMatrix4(s));
  CHECK((ls * ls.transpose() - s).norm() < 1e-12);

  Eigen::Matrix4d bad = Eigen::Matrix4d::Identity();
  bad(1, 1) = -1.0;
  CHECK_THROWS_AS(psd_cholesky(CovMatrix4(bad)), DecompositionError);
  Eigen::Matrix4d asym = Eigen::Matrix4d::Identity();
  asym(0, 1) = 0.3;
  CHECK_THROWS_AS((void)CovMatrix4(asym), DecompositionError);
}

TEST_CASE("sample_mvn: degenerate and identity covariance") {
  const Eigen::Vector4d mean(1.0, -2.0, 3.0, 0.5);
  RngStream rng(3, 0);
  CHECK(sample_mvn(mean, CovMatrix4(), rng) == mean);

  const MvnSampler sampler(Eigen::Vector4d::Zero(), CovMatrix4(Eigen::Matrix4d::Identity()));
  Eigen::Matrix4d acc = Eigen::Matrix4d::Zero();
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) {
    RngStream r(11, static_cast<std::uint64_t>(i));
    const Eigen::Vector4d v = sampler(r);
    acc += v * v.transpose();
  }
  acc /= n;
  CHECK((acc - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 0.01);
}

TEST_CASE("sample_mvn is schedule independent") {
  Eigen::Matrix4d a;
  a << 4, 1, 0, 0, 1, 3, 0.5, 0, 0, 0.5, 2, 0.2, 0, 0, 0.2, 1;
  const MvnSampler sampler(Eigen::Vector4d::Zero(), CovMatrix4(a));
  const std::size_t n = 5000;
  std::vector<Eigen::Vector4d> serial(n), threaded(n);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream r(5, i);
    serial[i] = sampler(r);
  }
  parallel_for(n, 8, [&](std::size_t i) {
    RngStream r(5, n - 1 - i);
    threaded[n - 1 - i] = sampler(r);
  });
  for (std::size_t i = 0; i < n; ++i) CHECK(serial[i] == threaded[i]);
}

TEST_CASE("CompensatedSum recovers cancelled digits") {
  CompensatedSum s;
  s.add(1e16);
  s.add(1.0);
  s.add(-1e16);
  CHECK(s.value() == 1.0);
  CompensatedSum a, b;
  for (int i = 0; i < 10; ++i) a.add(0.1);
  for (int i = 0; i < 10; ++i) b.add(0.1);
  a.add(b);
  CHECK(a.value() == doctest::Approx(2.0).epsilon(1e-16));
}
