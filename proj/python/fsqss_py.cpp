#include "fsqss/atmosphere.hpp"
#include "fsqss/config.hpp"
#include "fsqss/errors.hpp"
#include "fsqss/interruption.hpp"
#include "fsqss/keyrate.hpp"
#include "fsqss/noise.hpp"
#include "fsqss/numerics.hpp"
#include "fsqss/protocol_sim.hpp"
#include "fsqss/sweep.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace fsqss;

namespace {

py::dict stats_dict(const atmosphere::ChannelStats& s) {
  py::dict d;
  d["mean_t"] = s.mean_t;
  d["mean_sqrt_t"] = s.mean_sqrt_t;
  d["var_sqrt_t"] = s.var_sqrt_t;
  d["equiv_t"] = s.equivalent_transmittance();
  d["stderr_mean_t"] = s.stderr_mean_t;
  d["stderr_mean_sqrt_t"] = s.stderr_mean_sqrt_t;
  d["n_samples"] = s.n_samples;
  return d;
}

py::dict table_dict(const CsvTable& t) {
  py::dict d;
  d["header"] = t.header;
  d["rows"] = t.rows;
  d["csv"] = t.str();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Free-space CV quantum secret sharing core";

  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("bessel_i0", &numerics::bessel_i0);
  m.def("bessel_i1", &numerics::bessel_i1);
  m.def("lambert_w0", &numerics::lambert_w0);
  m.def("gaussian_cdf", &numerics::gaussian_cdf);

  m.def("validate_config", [](const std::string& text) { return config_to_json(validate_config(text)); },
        py::arg("text") = "", "Validate a JSON config; returns the fully populated config as JSON.");
  m.def("config_keys", &config_keys);

  m.def("t0_centered", &atmosphere::t0_centered, py::arg("w1"), py::arg("w2"), py::arg("r"));
  m.def("rytov_variance", [](double cn2, double wavelength, double distance) {
    atmosphere::TurbulenceParams p;
    p.cn2 = cn2;
    p.wavelength = wavelength;
    p.distance = distance;
    return atmosphere::rytov_variance(p);
  }, py::arg("cn2"), py::arg("wavelength"), py::arg("distance"));

  m.def("link_stats", [](const std::string& config, unsigned workers) {
    const auto cfg = validate_config(config);
    py::list out;
    for (const auto& s : keyrate::link_channel_stats(cfg, workers)) out.append(stats_dict(s));
    return out;
  }, py::arg("config") = "", py::arg("workers") = 0);

  m.def("qss_key_rate", [](const std::string& config, unsigned workers) {
    const auto ev = keyrate::evaluate_system(validate_config(config), workers);
    py::dict d;
    d["per_link_rates"] = ev.result.per_link_rates;
    d["min_link"] = ev.result.min_link;
    d["min_at_first_link"] = ev.result.min_at_first_link;
    d["p_qss"] = ev.result.p_qss;
    d["rate_bit_per_pulse"] = ev.result.rate_bit_per_pulse;
    d["raw_rate_bit_per_pulse"] = ev.result.raw_rate_bit_per_pulse;
    d["rate_stderr"] = ev.result.rate_stderr;
    d["rate_bit_per_second"] = ev.result.rate_bit_per_second;
    std::vector<double> eps;
    for (const auto& b : ev.budgets) eps.push_back(b.eps_total);
    d["eps_total"] = eps;
    d["link_interruption"] = ev.link_interruption;
    return d;
  }, py::arg("config") = "", py::arg("workers") = 0);

  m.def("mutual_information", [](double equiv_t, double eps, double v_a, double eta_det, double v_el) {
    keyrate::LinkKeyRateInputs in;
    in.equiv_t = equiv_t;
    in.eps_total = eps;
    in.v_a = v_a;
    in.eta_det = eta_det;
    in.v_el = v_el;
    return keyrate::mutual_information(in);
  }, py::arg("equiv_t"), py::arg("eps"), py::arg("v_a") = 1.0, py::arg("eta_det") = 0.5, py::arg("v_el") = 0.1);

  m.def("holevo_bound", [](double equiv_t, double eps, double v_a, double eta_det, double v_el) {
    keyrate::LinkKeyRateInputs in;
    in.equiv_t = equiv_t;
    in.eps_total = eps;
    in.v_a = v_a;
    in.eta_det = eta_det;
    in.v_el = v_el;
    return keyrate::holevo_bound(in);
  }, py::arg("equiv_t"), py::arg("eps"), py::arg("v_a") = 1.0, py::arg("eta_det") = 0.5, py::arg("v_el") = 0.1);

  m.def("entropy_g", &keyrate::entropy_g);
  m.def("symplectic_eigenvalues", [](const Eigen::MatrixXd& cov) {
    return keyrate::symplectic_eigenvalues(keyrate::GaussianState(cov));
  });

  m.def("link_interruption_prob", [](double x0_variance, double distance, double d_cor, double d_f) {
    return interruption::link_interruption_prob({x0_variance, distance, d_cor, d_f});
  }, py::arg("x0_variance"), py::arg("distance"), py::arg("d_cor") = 9e-6, py::arg("d_f") = 0.22);
  m.def("system_interruption_prob",
        [](const std::vector<double>& p) { return interruption::system_interruption_prob(p); });

  m.def("run_sweep", [](const std::string& config, const std::string& variable, const std::vector<double>& grid,
                        const std::vector<std::string>& outputs, unsigned workers) {
    sweep::SweepSpec spec;
    spec.variable = sweep::parse_variable(variable);
    spec.grid = grid;
    spec.outputs = outputs;
    return table_dict(sweep::run_sweep(validate_config(config), spec, workers));
  }, py::arg("config"), py::arg("variable"), py::arg("grid"), py::arg("outputs") = std::vector<std::string>{},
     py::arg("workers") = 0);

  m.def("simulate_protocol", [](const std::string& config, std::int64_t rounds, unsigned workers) {
    const auto cfg = validate_config(config);
    const protocol_sim::ProtocolSimulator sim(cfg, {}, std::nullopt, workers);
    const auto records = sim.simulate(rounds, workers);
    std::vector<double> ref;
    for (const auto& s : sim.stats()) ref.push_back(s.mean_t);
    const auto rep = protocol_sim::estimate_transmittances(records, cfg, ref);
    const auto mom = protocol_sim::outcome_moments(records);
    py::dict d;
    d["t_hat"] = rep.t_hat;
    d["t_hat_stderr"] = rep.t_hat_stderr;
    d["mean_t"] = ref;
    d["rel_error"] = rep.rel_error;
    d["outcome_variance"] = mom.variance;
    d["outcome_variance_stderr"] = mom.stderr_variance;
    d["predicted_variance"] = sim.predicted_outcome_variance();
    return d;
  }, py::arg("config") = "", py::arg("rounds") = 100000, py::arg("workers") = 0);
}
