#include "fsqss/keyrate.hpp"

#include "fsqss/errors.hpp"
#include "fsqss/interruption.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <complex>

namespace fsqss::keyrate {

namespace {

constexpr double kPhysicalityTolerance = 1e-9;
constexpr double kUnitEfficiencyGuard = 1e-9;

// Gamma_X - C (Gamma_B + I)^{-1} C^T for an ideal heterodyne on `mode`.
Eigen::MatrixXd heterodyne_condition(const Eigen::MatrixXd& cov, int mode) {
  const int dim = static_cast<int>(cov.rows());
  std::vector<int> keep;
  for (int i = 0; i < dim; ++i) {
    if (i / 2 != mode) keep.push_back(i);
  }
  const int k = static_cast<int>(keep.size());
  Eigen::MatrixXd gx(k, k);
  Eigen::MatrixXd c(k, 2);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) gx(a, b) = cov(keep[a], keep[b]);
    c(a, 0) = cov(keep[a], 2 * mode);
    c(a, 1) = cov(keep[a], 2 * mode + 1);
  }
  const Eigen::Matrix2d gb = cov.block<2, 2>(2 * mode, 2 * mode) + Eigen::Matrix2d::Identity();
  Eigen::MatrixXd out = gx - c * gb.inverse() * c.transpose();
  return 0.5 * (out + out.transpose());
}

Eigen::Matrix2d pauli_z() {
  Eigen::Matrix2d z;
  z << 1.0, 0.0, 0.0, -1.0;
  return z;
}

double chi_detector(double eta_det, double v_el) { return (2.0 - eta_det + 2.0 * v_el) / eta_det; }

}  // namespace

void LinkKeyRateInputs::validate() const {
  if (!(equiv_t > 0.0 && equiv_t <= 1.0)) {
    throw DomainError(fmt::format("equivalent transmittance {} outside (0, 1]", equiv_t));
  }
  if (!(eps_total >= 0.0) || !std::isfinite(eps_total)) {
    throw DomainError(fmt::format("excess noise {} must be finite and non-negative", eps_total));
  }
  if (!(v_a >= 0.0)) throw DomainError("modulation variance must be non-negative");
  if (!(eta_rec > 0.0 && eta_rec <= 1.0)) throw DomainError("eta must lie in (0, 1]");
  if (!(eta_det > 0.0 && eta_det <= 1.0)) throw DomainError("eta_e must lie in (0, 1]");
  if (!(v_el >= 0.0)) throw DomainError("v_el must be non-negative");
}

Eigen::MatrixXd symplectic_form(int modes) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * modes, 2 * modes);
  for (int m = 0; m < modes; ++m) {
    omega(2 * m, 2 * m + 1) = 1.0;
    omega(2 * m + 1, 2 * m) = -1.0;
  }
  return omega;
}

double uncertainty_margin(const Eigen::MatrixXd& cov) {
  const int modes = static_cast<int>(cov.rows() / 2);
  const Eigen::MatrixXcd h =
      cov.cast<std::complex<double>>() + std::complex<double>(0.0, 1.0) * symplectic_form(modes).cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("eigen-solve of cov + i Omega failed");
  return solver.eigenvalues().minCoeff();
}

GaussianState::GaussianState(Eigen::MatrixXd cov) : cov_(std::move(cov)) {
  if (cov_.rows() != cov_.cols() || cov_.rows() % 2 != 0 || cov_.rows() == 0) {
    throw PhysicalityError("covariance must be a non-empty 2m x 2m matrix");
  }
  if (!cov_.allFinite()) throw PhysicalityError("covariance has non-finite entries");
  const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw PhysicalityError("covariance is not symmetric");
  }
  const double margin = uncertainty_margin(cov_);
  if (margin < -kPhysicalityTolerance * scale) {
    throw PhysicalityError(fmt::format("covariance violates cov + i Omega >= 0 (min eigenvalue {})", margin));
  }
}

GaussianState channel_cov(double v, double t, double eps) {
  if (!(v >= 1.0)) throw DomainError(fmt::format("channel_cov: variance {} < 1", v));
  if (!(t > 0.0 && t <= 1.0)) throw DomainError(fmt::format("channel_cov: transmittance {} outside (0, 1]", t));
  if (!(eps >= 0.0)) throw DomainError("channel_cov: negative excess noise");
  const double chi_line = 1.0 / t - 1.0 + eps;
  const double b = t * (v + chi_line);
  const double c = std::sqrt(t * (v * v - 1.0));
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(4, 4);
  cov.block<2, 2>(0, 0) = v * Eigen::Matrix2d::Identity();
  cov.block<2, 2>(2, 2) = b * Eigen::Matrix2d::Identity();
  cov.block<2, 2>(0, 2) = c * pauli_z();
  cov.block<2, 2>(2, 0) = c * pauli_z();
  return GaussianState(std::move(cov));
}

std::vector<double> symplectic_eigenvalues(const GaussianState& s) {
  const Eigen::MatrixXd& cov = s.cov();
  const int m = s.modes();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> root(cov);
  if (root.info() != Eigen::Success) throw NumericalError("symplectic_eigenvalues: eigen-solve failed");
  const Eigen::VectorXd lam = root.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd sq = root.eigenvectors() * lam.asDiagonal() * root.eigenvectors().transpose();

  // i S Omega S is Hermitian with eigenvalues +-nu_k.
  const Eigen::MatrixXd a = sq * symplectic_form(m) * sq;
  const Eigen::MatrixXcd h = std::complex<double>(0.0, 1.0) * a.cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("symplectic_eigenvalues: eigen-solve failed");

  std::vector<double> mags(static_cast<std::size_t>(2 * m));
  for (int i = 0; i < 2 * m; ++i) mags[static_cast<std::size_t>(i)] = std::abs(solver.eigenvalues()(i));
  std::sort(mags.begin(), mags.end());
  std::vector<double> nu(static_cast<std::size_t>(m));
  for (std::size_t k = 0; k < nu.size(); ++k) nu[k] = 0.5 * (mags[2 * k] + mags[2 * k + 1]);
  return nu;
}

double entropy_g(double nu) {
  if (nu <= 1.0) return 0.0;
  const double plus = 0.5 * (nu + 1.0);
  const double minus = 0.5 * (nu - 1.0);
  return plus * std::log2(plus) - minus * std::log2(minus);
}

double mutual_information(const LinkKeyRateInputs& in) {
  in.validate();
  const double v = in.v_a + 1.0;
  const double chi_line = 1.0 / in.equiv_t - 1.0 + in.eps_total;
  const double chi_total = chi_line + chi_detector(in.eta_det, in.v_el) / in.equiv_t;
  return in.mi_factor * std::log2((v + chi_total) / (1.0 + chi_total));
}

HolevoBreakdown holevo_breakdown(const LinkKeyRateInputs& in) {
  in.validate();
  const double v = in.v_a + 1.0;
  const GaussianState ab = channel_cov(v, in.equiv_t, in.eps_total);
  const auto nu_ab = symplectic_eigenvalues(ab);

  HolevoBreakdown out;
  out.nu[0] = nu_ab[1];
  out.nu[1] = nu_ab[0];

  std::vector<double> nu_cond;
  if (std::abs(1.0 - in.eta_det) < kUnitEfficiencyGuard) {
    // Unit efficiency: the detector ancilla decouples, only A remains.
    nu_cond = symplectic_eigenvalues(GaussianState(heterodyne_condition(ab.cov(), 1)));
    nu_cond.push_back(1.0);
    nu_cond.push_back(1.0);
  } else {
    // Modes: A, B, F0, G. (F0, G) is a two-mode squeezed ancilla whose
    // variance reproduces the detector noise; B and F0 meet on a beamsplitter
    // of transmissivity eta_e before the ideal heterodyne of B.
    const double eta = in.eta_det;
    const double v_d = 1.0 + 2.0 * in.v_el / (1.0 - eta);
    const double c_d = std::sqrt(std::max(0.0, v_d * v_d - 1.0));
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(8, 8);
    cov.block<4, 4>(0, 0) = ab.cov();
    cov.block<2, 2>(4, 4) = v_d * Eigen::Matrix2d::Identity();
    cov.block<2, 2>(6, 6) = v_d * Eigen::Matrix2d::Identity();
    cov.block<2, 2>(4, 6) = c_d * pauli_z();
    cov.block<2, 2>(6, 4) = c_d * pauli_z();

    Eigen::MatrixXd bs = Eigen::MatrixXd::Identity(8, 8);
    const double st = std::sqrt(eta);
    const double sr = std::sqrt(1.0 - eta);
    bs.block<2, 2>(2, 2) = st * Eigen::Matrix2d::Identity();
    bs.block<2, 2>(2, 4) = sr * Eigen::Matrix2d::Identity();
    bs.block<2, 2>(4, 2) = -sr * Eigen::Matrix2d::Identity();
    bs.block<2, 2>(4, 4) = st * Eigen::Matrix2d::Identity();
    const Eigen::MatrixXd mixed = bs * cov * bs.transpose();
    nu_cond = symplectic_eigenvalues(GaussianState(heterodyne_condition(mixed, 1)));
  }
  std::sort(nu_cond.begin(), nu_cond.end(), std::greater<>());
  for (std::size_t k = 0; k < 3; ++k) out.nu[2 + k] = nu_cond[k];

  const double chi = entropy_g(out.nu[0]) + entropy_g(out.nu[1]) - entropy_g(out.nu[2]) -
                     entropy_g(out.nu[3]) - entropy_g(out.nu[4]);
  out.chi_ed = std::max(0.0, chi);
  return out;
}

double holevo_bound(const LinkKeyRateInputs& in) { return holevo_breakdown(in).chi_ed; }

double link_key_rate(const LinkKeyRateInputs& in) {
  return in.eta_rec * mutual_information(in) - holevo_bound(in);
}

std::vector<atmosphere::ChannelStats> link_channel_stats(const SystemConfig& cfg, unsigned workers) {
  cfg.validate();
  const auto turb = cfg.turbulence();
  std::vector<atmosphere::ChannelStats> stats;
  stats.reserve(static_cast<std::size_t>(cfg.participants));
  for (int j = 1; j <= cfg.participants; ++j) {
    const atmosphere::LinkGeometry geom{j, cfg.participants, cfg.distance, cfg.habs_transmissivity};
    stats.push_back(atmosphere::estimate_link_stats(geom, turb, cfg.mc_samples, cfg.seed, workers));
  }
  return stats;
}

namespace {

LinkKeyRateInputs rate_inputs(const SystemConfig& cfg, double equiv_t, double eps) {
  LinkKeyRateInputs in;
  in.equiv_t = equiv_t;
  in.eps_total = eps;
  in.v_a = cfg.v_a;
  in.eta_rec = cfg.eta;
  in.eta_det = cfg.eta_e;
  in.v_el = cfg.v_el;
  in.mi_factor = cfg.heterodyne_mi_factor;
  return in;
}

std::vector<double> mean_vector(const std::vector<atmosphere::ChannelStats>& stats) {
  std::vector<double> mean_t;
  mean_t.reserve(stats.size());
  for (const auto& s : stats) mean_t.push_back(s.mean_t);
  return mean_t;
}

}  // namespace

SystemEvaluation evaluate_links(const SystemConfig& cfg, std::vector<atmosphere::ChannelStats> stats) {
  cfg.validate();
  const int n = cfg.participants;
  if (static_cast<int>(stats.size()) != n) {
    throw ConfigError("n", fmt::format("expected {} link statistics, got {}", n, stats.size()));
  }
  SystemEvaluation ev;
  ev.stats = std::move(stats);
  const std::vector<double> mean_t = mean_vector(ev.stats);
  const auto turb = cfg.turbulence();

  KeyRateResult& res = ev.result;
  for (int j = 1; j <= n; ++j) {
    const auto& s = ev.stats[static_cast<std::size_t>(j - 1)];
    const auto budget = noise::total_excess_noise(cfg.noise_inputs(mean_t, j, s), cfg.e_r_mode);
    ev.budgets.push_back(budget);
    res.per_link_rates.push_back(
        link_key_rate(rate_inputs(cfg, s.equivalent_transmittance(), budget.eps_total)));

    atmosphere::TurbulenceParams link_turb = turb;
    link_turb.distance = atmosphere::link_distance(j, n, cfg.distance);
    const double x0_var = atmosphere::beam_param_covariance(link_turb).x0_variance();
    ev.x0_variance.push_back(x0_var);
    ev.link_interruption.push_back(interruption::link_interruption_prob(
        {x0_var, link_turb.distance, cfg.fiber_core_diameter, cfg.focal_length}));
  }

  const auto min_it = std::min_element(res.per_link_rates.begin(), res.per_link_rates.end());
  res.min_link = static_cast<int>(min_it - res.per_link_rates.begin()) + 1;
  res.min_at_first_link = res.per_link_rates.front() <= *min_it;
  res.p_qss = interruption::system_interruption_prob(ev.link_interruption);
  const double survive = 1.0 - res.p_qss;
  res.raw_rate_bit_per_pulse = survive * *min_it;
  res.rate_bit_per_pulse = std::max(0.0, res.raw_rate_bit_per_pulse);
  res.rate_bit_per_second = res.rate_bit_per_pulse * cfg.pulse_rate * cfg.duty_ratio;

  // First-order propagation of the Monte Carlo error of the limiting link.
  {
    const std::size_t m = static_cast<std::size_t>(res.min_link - 1);
    const auto& s = ev.stats[m];
    const double base = *min_it;
    double var = 0.0;
    const double sqrt_up = std::min(s.mean_sqrt_t + s.stderr_mean_sqrt_t, std::sqrt(s.mean_t));
    if (sqrt_up > s.mean_sqrt_t) {
      const double r = link_key_rate(rate_inputs(cfg, sqrt_up * sqrt_up, ev.budgets[m].eps_total));
      var += (r - base) * (r - base);
    }
    if (s.stderr_mean_t > 0.0) {
      auto shifted = s;
      shifted.mean_t = std::min(1.0, s.mean_t + s.stderr_mean_t);
      auto mt = mean_t;
      mt[m] = shifted.mean_t;
      const auto b = noise::total_excess_noise(cfg.noise_inputs(mt, res.min_link, shifted), cfg.e_r_mode);
      const double r = link_key_rate(rate_inputs(cfg, s.equivalent_transmittance(), b.eps_total));
      var += (r - base) * (r - base);
    }
    res.rate_stderr = survive * std::sqrt(var);
  }
  return ev;
}

SystemEvaluation evaluate_system(const SystemConfig& cfg, unsigned workers) {
  return evaluate_links(cfg, link_channel_stats(cfg, workers));
}

KeyRateResult qss_key_rate(const SystemConfig& cfg, unsigned workers) {
  return evaluate_system(cfg, workers).result;
}

}  // namespace fsqss::keyrate
