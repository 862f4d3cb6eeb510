#pragma once

#include "fsqss/atmosphere.hpp"
#include "fsqss/config.hpp"
#include "fsqss/noise.hpp"

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace fsqss::keyrate {

struct LinkKeyRateInputs {
  double equiv_t = 1.0;    // T^e = <sqrt T>^2
  double eps_total = 0.0;  // <eps_j>, SNU
  double v_a = 1.0;        // SNU
  double eta_rec = 0.95;   // reconciliation efficiency
  double eta_det = 0.5;    // detector efficiency
  double v_el = 0.1;       // SNU
  double mi_factor = 1.0;  // multiplies the mutual information

  void validate() const;
};

/// Covariance of a Gaussian state of m modes in the (q1, p1, q2, p2, ...)
/// ordering, vacuum = identity.
class GaussianState {
 public:
  /// Throws PhysicalityError unless cov is symmetric and cov + i Omega >= 0
  /// within 1e-9.
  explicit GaussianState(Eigen::MatrixXd cov);

  int modes() const noexcept { return static_cast<int>(cov_.rows() / 2); }
  const Eigen::MatrixXd& cov() const noexcept { return cov_; }

 private:
  Eigen::MatrixXd cov_;
};

/// Block-diagonal symplectic form for m modes.
Eigen::MatrixXd symplectic_form(int modes);

/// Smallest eigenvalue of cov + i Omega.
double uncertainty_margin(const Eigen::MatrixXd& cov);

/// Entangling-cloner state of (A, B): [[v I, c Z], [c Z, t (v + chi_l) I]].
GaussianState channel_cov(double v, double t, double eps);

/// Symplectic eigenvalues, ascending.
std::vector<double> symplectic_eigenvalues(const GaussianState& s);

/// Von Neumann entropy (bits) of a thermal mode with symplectic eigenvalue nu.
double entropy_g(double nu);

double mutual_information(const LinkKeyRateInputs& in);

struct HolevoBreakdown {
  std::array<double, 5> nu{};  // nu_1..nu_5
  double chi_ed = 0.0;
};

/// Eve's information on the dealer's heterodyne data under a trusted, noisy
/// detector.
HolevoBreakdown holevo_breakdown(const LinkKeyRateInputs& in);
double holevo_bound(const LinkKeyRateInputs& in);

/// eta I - chi_ED, reported raw (may be negative).
double link_key_rate(const LinkKeyRateInputs& in);

struct KeyRateResult {
  std::vector<double> per_link_rates;  // r_j, bit/pulse
  int min_link = 1;
  bool min_at_first_link = true;
  double p_qss = 0.0;
  double rate_bit_per_pulse = 0.0;     // clamped at 0
  double raw_rate_bit_per_pulse = 0.0; // (1 - P_QSS) min r_j before clamping
  double rate_stderr = 0.0;            // first-order Monte Carlo error of the raw rate
  double rate_bit_per_second = 0.0;
};

/// Everything computed for one configuration.
struct SystemEvaluation {
  std::vector<atmosphere::ChannelStats> stats;
  std::vector<noise::NoiseBudget> budgets;
  std::vector<double> link_interruption;
  std::vector<double> x0_variance;
  KeyRateResult result;
};

/// Monte Carlo channel statistics of every link of cfg.
std::vector<atmosphere::ChannelStats> link_channel_stats(const SystemConfig& cfg,
                                                         unsigned workers = 0);

/// Deterministic remainder of the pipeline given per-link statistics.
SystemEvaluation evaluate_links(const SystemConfig& cfg,
                                std::vector<atmosphere::ChannelStats> stats);

SystemEvaluation evaluate_system(const SystemConfig& cfg, unsigned workers = 0);

KeyRateResult qss_key_rate(const SystemConfig& cfg, unsigned workers = 0);

}  // namespace fsqss::keyrate
