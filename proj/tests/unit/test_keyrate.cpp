#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fsqss/config.hpp"
#include "fsqss/errors.hpp"
#include "fsqss/keyrate.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

using namespace fsqss;
using namespace fsqss::keyrate;

namespace {

struct ClosedForm {
  long double nu[5];
  long double chi;
};

long double g_ref(long double nu) {
  if (nu <= 1.0L) return 0.0L;
  const long double p = (nu + 1.0L) / 2.0L, m = (nu - 1.0L) / 2.0L;
  return p * std::log2(p) - m * std::log2(m);
}

// Published heterodyne-detection eigenvalues with a trusted noisy detector.
ClosedForm holevo_closed_form(long double va, long double t, long double eps, long double eta, long double vel) {
  const long double v = va + 1.0L;
  const long double chi_l = 1.0L / t - 1.0L + eps;
  const long double chi_h = (2.0L - eta + 2.0L * vel) / eta;
  const long double chi_t = chi_l + chi_h / t;
  const long double a = v * v * (1.0L - 2.0L * t) + 2.0L * t + t * t * (v + chi_l) * (v + chi_l);
  const long double b = t * t * (v * chi_l + 1.0L) * (v * chi_l + 1.0L);
  const long double denom = t * t * (v + chi_t) * (v + chi_t);
  const long double c = (a * chi_h * chi_h + b + 1.0L + 2.0L * chi_h * (v * std::sqrt(b) + t * (v + chi_l)) +
                         2.0L * t * (v * v - 1.0L)) / denom;
  const long double d = std::pow((v + std::sqrt(b) * chi_h) / (t * (v + chi_t)), 2.0L);
  ClosedForm out{};
  const long double ra = std::sqrt(std::max(0.0L, a * a - 4.0L * b));
  const long double rc = std::sqrt(std::max(0.0L, c * c - 4.0L * d));
  out.nu[0] = std::sqrt(0.5L * (a + ra));
  out.nu[1] = std::sqrt(0.5L * (a - ra));
  out.nu[2] = std::sqrt(0.5L * (c + rc));
  out.nu[3] = std::sqrt(0.5L * (c - rc));
  out.nu[4] = 1.0L;
  out.chi = g_ref(out.nu[0]) + g_ref(out.nu[1]) - g_ref(out.nu[2]) - g_ref(out.nu[3]);
  return out;
}

// Random symplectic matrix: passive unitary, single-mode squeezers, passive
// unitary. Built in (q..., p...) order then permuted to (q1, p1, ...).
Eigen::MatrixXd random_symplectic(int m, std::mt19937_64& gen) {
  std::normal_distribution<double> nd;
  auto passive = [&] {
    Eigen::MatrixXcd z(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) z(i, j) = {nd(gen), nd(gen)};
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
    const Eigen::MatrixXcd u = qr.householderQ();
    Eigen::MatrixXd o(2 * m, 2 * m);
    o << u.real(), -u.imag(), u.imag(), u.real();
    return o;
  };
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  std::uniform_real_distribution<double> ur(-1.2, 1.2);
  for (int i = 0; i < m; ++i) {
    const double r = ur(gen);
    sq(i, i) = std::exp(-r);
    sq(m + i, m + i) = std::exp(r);
  }
  const Eigen::MatrixXd s = passive() * sq * passive();
  Eigen::MatrixXd perm = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  for (int i = 0; i < m; ++i) {
    perm(2 * i, i) = 1.0;
    perm(2 * i + 1, m + i) = 1.0;
  }
  return perm * s * perm.transpose();
}

Eigen::MatrixXd random_state(int m, std::mt19937_64& gen, std::vector<double>& nu) {
  std::uniform_real_distribution<double> un(1.0, 6.0);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  nu.clear();
  for (int i = 0; i < m; ++i) {
    nu.push_back(un(gen));
    d(2 * i, 2 * i) = d(2 * i + 1, 2 * i + 1) = nu.back();
  }
  const Eigen::MatrixXd s = random_symplectic(m, gen);
  Eigen::MatrixXd cov = s * d * s.transpose();
  cov = 0.5 * (cov + cov.transpose());
  std::sort(nu.begin(), nu.end());
  return cov;
}

std::pair<double, double> two_mode_closed_form(const Eigen::MatrixXd& g) {
  const double da = g.block<2, 2>(0, 0).determinant();
  const double db = g.block<2, 2>(2, 2).determinant();
  const double dc = g.block<2, 2>(0, 2).determinant();
  const double delta = da + db + 2.0 * dc;
  const double det = g.determinant();
  const double disc = std::sqrt(std::max(0.0, delta * delta - 4.0 * det));
  return {std::sqrt(0.5 * (delta - disc)), std::sqrt(0.5 * (delta + disc))};
}

LinkKeyRateInputs table_inputs(double t, double eps) {
  LinkKeyRateInputs in;
  in.equiv_t = t;
  in.eps_total = eps;
  return in;
}

}  // namespace

TEST_CASE("entropy function") {
  CHECK(entropy_g(1.0) == 0.0);
  CHECK(entropy_g(3.0) == 2.0);
  CHECK(entropy_g(1.0 - 1e-12) == 0.0);
  CHECK(entropy_g(1.0 + 1e-12) > 0.0);
  CHECK(entropy_g(5.0) == doctest::Approx(static_cast<double>(g_ref(5.0L))).epsilon(1e-15));
}

TEST_CASE("symplectic eigenvalues of simple states") {
  for (int m = 1; m <= 4; ++m) {
    const auto nu = symplectic_eigenvalues(GaussianState(Eigen::MatrixXd::Identity(2 * m, 2 * m)));
    for (double v : nu) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  }
  Eigen::MatrixXd th = 3.7 * Eigen::MatrixXd::Identity(2, 2);
  CHECK(symplectic_eigenvalues(GaussianState(th))[0] == doctest::Approx(3.7).epsilon(1e-13));
}

TEST_CASE("physicality checks") {
  Eigen::MatrixXd bad = 0.5 * Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS((void)GaussianState(bad), PhysicalityError);
  Eigen::MatrixXd squeezed(2, 2);
  squeezed << 0.25, 0.0, 0.0, 4.0;
  CHECK_NOTHROW((void)GaussianState(squeezed));
  Eigen::MatrixXd asym = Eigen::MatrixXd::Identity(2, 2);
  asym(0, 1) = 0.1;
  CHECK_THROWS_AS((void)GaussianState(asym), PhysicalityError);
  CHECK_THROWS_AS((void)GaussianState(Eigen::MatrixXd::Identity(3, 3)), PhysicalityError);
}

TEST_CASE("random physical states") {
  std::mt19937_64 gen(12345);
  std::vector<double> nu;
  for (int i = 0; i < 1000; ++i) {
    const int m = 1 + i % 4;
    const auto cov = random_state(m, gen, nu);
    const GaussianState s(cov);
    const auto got = symplectic_eigenvalues(s);
    for (std::size_t k = 0; k < nu.size(); ++k) {
      CHECK(got[k] >= 1.0 - 1e-9);
      CHECK(got[k] == doctest::Approx(nu[k]).epsilon(1e-8));
    }
  }
}

TEST_CASE("two-mode numeric path matches the closed form") {
  std::mt19937_64 gen(777);
  std::vector<double> nu;
  for (int i = 0; i < 1000; ++i) {
    const auto cov = random_state(2, gen, nu);
    const auto got = symplectic_eigenvalues(GaussianState(cov));
    const auto [lo, hi] = two_mode_closed_form(cov);
    CHECK(std::fabs(got[0] - lo) <= 1e-9 * std::max(1.0, lo));
    CHECK(std::fabs(got[1] - hi) <= 1e-9 * std::max(1.0, hi));
  }
}

TEST_CASE("pure states have unit symplectic eigenvalues") {
  std::mt19937_64 gen(99);
  for (int i = 0; i < 200; ++i) {
    const int m = 1 + i % 3;
    const auto s = random_symplectic(m, gen);
    const auto nu = symplectic_eigenvalues(GaussianState(s * s.transpose()));
    for (double v : nu) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("entangling-cloner covariance") {
  const auto pure = symplectic_eigenvalues(channel_cov(2.0, 1.0, 0.0));
  CHECK(pure[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pure[1] == doctest::Approx(1.0).epsilon(1e-12));
  const auto vac = channel_cov(1.0, 0.3, 0.1);
  CHECK(vac.cov()(0, 2) == 0.0);
  CHECK(vac.cov()(0, 0) == 1.0);
  CHECK(vac.cov()(2, 2) == doctest::Approx(0.3 * (1.0 + 1.0 / 0.3 - 1.0 + 0.1)).epsilon(1e-15));
  const auto s = channel_cov(2.0, 0.5, 0.05);
  CHECK(uncertainty_margin(s.cov()) >= -1e-12);
  CHECK_THROWS_AS(channel_cov(0.5, 0.5, 0.0), DomainError);
  CHECK_THROWS_AS(channel_cov(2.0, 0.0, 0.0), DomainError);
}

TEST_CASE("mutual information") {
  LinkKeyRateInputs in;
  in.equiv_t = 1.0;
  in.eps_total = 0.0;
  in.eta_det = 1.0;
  in.v_el = 0.0;
  CHECK(mutual_information(in) == doctest::Approx(std::log2(1.5)).epsilon(1e-15));
  in.eps_total = 1e12;
  CHECK(mutual_information(in) == doctest::Approx(0.0).epsilon(1e-9));
  in.eps_total = 0.0;
  in.mi_factor = 2.0;
  CHECK(mutual_information(in) == doctest::Approx(2.0 * std::log2(1.5)).epsilon(1e-15));

  const auto t = table_inputs(0.4, 0.05);
  const double chi_t = 1.0 / 0.4 - 1.0 + 0.05 + 3.4 / 0.4;
  CHECK(mutual_information(t) == doctest::Approx(std::log2((2.0 + chi_t) / (1.0 + chi_t))).epsilon(1e-15));
}

TEST_CASE("Holevo bound against the closed form") {
  const auto ref = holevo_closed_form(1.0L, 0.4L, 0.05L, 0.5L, 0.1L);
  const auto got = holevo_breakdown(table_inputs(0.4, 0.05));
  for (int k = 0; k < 5; ++k) CHECK(got.nu[k] == doctest::Approx(static_cast<double>(ref.nu[k])).epsilon(1e-9));
  CHECK(std::fabs(got.chi_ed - static_cast<double>(ref.chi)) <= 1e-6);

  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> ut(0.01, 1.0), ue(0.0, 0.3), uva(0.5, 30.0), ueta(0.2, 0.95),
      uel(0.0, 0.3);
  for (int i = 0; i < 200; ++i) {
    LinkKeyRateInputs in;
    in.equiv_t = ut(gen);
    in.eps_total = ue(gen);
    in.v_a = uva(gen);
    in.eta_det = ueta(gen);
    in.v_el = uel(gen);
    const auto r = holevo_closed_form(in.v_a, in.equiv_t, in.eps_total, in.eta_det, in.v_el);
    CHECK(std::fabs(holevo_bound(in) - std::max(0.0L, r.chi)) <= 1e-6 * std::max(1.0L, r.chi));
  }
}

TEST_CASE("Holevo bound limits and monotonicity") {
  CHECK(holevo_bound(table_inputs(1.0, 0.0)) == doctest::Approx(0.0).epsilon(1e-9));
  auto ideal_det = table_inputs(1.0, 0.0);
  ideal_det.eta_det = 1.0;
  ideal_det.v_el = 0.0;
  CHECK(holevo_bound(ideal_det) == doctest::Approx(0.0).epsilon(1e-9));
  // Near-unit efficiency approaches the decoupled-ancilla limit.
  auto near = table_inputs(0.6, 0.02);
  near.eta_det = 1.0 - 1e-7;
  near.v_el = 1e-9;
  auto unit = near;
  unit.eta_det = 1.0;
  unit.v_el = 0.0;
  CHECK(holevo_bound(near) == doctest::Approx(holevo_bound(unit)).epsilon(1e-5));

  for (const double t : {0.05, 0.3, 0.8}) {
    double prev = -1.0;
    for (int i = 0; i < 100; ++i) {
      const double chi = holevo_bound(table_inputs(t, 0.005 * i));
      CHECK(chi >= 0.0);
      CHECK(chi >= prev - 1e-12);
      prev = chi;
    }
  }
}

TEST_CASE("link key rate") {
  auto ideal = table_inputs(1.0, 0.0);
  CHECK(link_key_rate(ideal) > 0.0);
  CHECK(link_key_rate(table_inputs(0.3, 2.0)) < 0.0);
  const auto in = table_inputs(0.4, 0.05);
  CHECK(link_key_rate(in) == doctest::Approx(0.95 * mutual_information(in) - holevo_bound(in)).epsilon(1e-15));
}

TEST_CASE("system rate plumbing") {
  SystemConfig cfg;
  cfg.mc_samples = 20'000;
  cfg.participants = 1;
  cfg.wavelength = 8e-7;
  const auto ev = evaluate_system(cfg, 1);
  REQUIRE(ev.result.per_link_rates.size() == 1);
  CHECK(ev.result.raw_rate_bit_per_pulse ==
        doctest::Approx((1.0 - ev.link_interruption[0]) * ev.result.per_link_rates[0]).epsilon(1e-15));
  CHECK(ev.result.rate_bit_per_second ==
        doctest::Approx(ev.result.rate_bit_per_pulse * 1e8 * 0.15).epsilon(1e-15));
  CHECK(ev.result.min_link == 1);

  cfg.participants = 5;
  const auto five = evaluate_system(cfg, 1);
  CHECK(five.result.per_link_rates.size() == 5);
  CHECK(five.result.rate_bit_per_pulse >= 0.0);
  const double mn = *std::min_element(five.result.per_link_rates.begin(), five.result.per_link_rates.end());
  CHECK(five.result.raw_rate_bit_per_pulse == doctest::Approx((1.0 - five.result.p_qss) * mn).epsilon(1e-15));
  CHECK(five.result.rate_stderr >= 0.0);

  // Negative link rates clamp the system rate at zero.
  cfg.wavelength = 8e-5;
  const auto neg = evaluate_system(cfg, 1);
  CHECK(neg.result.raw_rate_bit_per_pulse < 0.0);
  CHECK(neg.result.rate_bit_per_pulse == 0.0);
}
