#include "fsqss/config.hpp"

#include "fsqss/errors.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace fsqss {

namespace {

using nlohmann::json;

struct KeySpec {
  const char* name;
  std::function<void(SystemConfig&, const json&)> set;
  std::function<json(const SystemConfig&)> get;
};

double as_double(const json& v, const char* key) {
  if (!v.is_number()) throw ConfigError(key, fmt::format("{} must be a number", key));
  return v.get<double>();
}

std::int64_t as_int(const json& v, const char* key) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::trunc(d) == d && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
  }
  throw ConfigError(key, fmt::format("{} must be an integer", key));
}

std::string as_string(const json& v, const char* key) {
  if (!v.is_string()) throw ConfigError(key, fmt::format("{} must be a string", key));
  return v.get<std::string>();
}

#define FSQSS_DOUBLE_KEY(key, field)                                                  \
  KeySpec {                                                                           \
    key, [](SystemConfig& c, const json& v) { c.field = as_double(v, key); },         \
        [](const SystemConfig& c) { return json(c.field); }                           \
  }

const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = {
      FSQSS_DOUBLE_KEY("lambda", wavelength),
      FSQSS_DOUBLE_KEY("w0", w0),
      FSQSS_DOUBLE_KEY("r", aperture_radius),
      FSQSS_DOUBLE_KEY("d_cor", fiber_core_diameter),
      FSQSS_DOUBLE_KEY("d_f", focal_length),
      FSQSS_DOUBLE_KEY("l0", outer_scale),
      FSQSS_DOUBLE_KEY("f_pr", pulse_rate),
      FSQSS_DOUBLE_KEY("r_ra", duty_ratio),
      FSQSS_DOUBLE_KEY("eta", eta),
      FSQSS_DOUBLE_KEY("eta_e", eta_e),
      FSQSS_DOUBLE_KEY("t_h", habs_transmissivity),
      FSQSS_DOUBLE_KEY("eps0", eps0),
      FSQSS_DOUBLE_KEY("v_el", v_el),
      FSQSS_DOUBLE_KEY("v_a", v_a),
      FSQSS_DOUBLE_KEY("h", altitude),
      FSQSS_DOUBLE_KEY("d_db", d_db),
      FSQSS_DOUBLE_KEY("r_e", r_e),
      FSQSS_DOUBLE_KEY("r_p", r_p),
      KeySpec{"n",
              [](SystemConfig& c, const json& v) {
                const auto n = as_int(v, "n");
                if (n < 1 || n > 100'000) throw ConfigError("n", fmt::format("n out of range: {}", n));
                c.participants = static_cast<int>(n);
              },
              [](const SystemConfig& c) { return json(c.participants); }},
      FSQSS_DOUBLE_KEY("l", distance),
      FSQSS_DOUBLE_KEY("cn2", cn2),
      KeySpec{"mc_samples",
              [](SystemConfig& c, const json& v) { c.mc_samples = as_int(v, "mc_samples"); },
              [](const SystemConfig& c) { return json(c.mc_samples); }},
      KeySpec{"seed",
              [](SystemConfig& c, const json& v) {
                if (!v.is_number_unsigned()) {
                  throw ConfigError("seed", "seed must be a non-negative integer");
                }
                c.seed = v.get<std::uint64_t>();
              },
              [](const SystemConfig& c) { return json(c.seed); }},
      FSQSS_DOUBLE_KEY("e0", e0),
      FSQSS_DOUBLE_KEY("e_r_sq", e_r_sq),
      KeySpec{"e_r_mode",
              [](SystemConfig& c, const json& v) {
                const auto s = as_string(v, "e_r_mode");
                if (s == "fixed") {
                  c.e_r_mode = noise::ReferenceMode::fixed;
                } else if (s == "optimal") {
                  c.e_r_mode = noise::ReferenceMode::optimal;
                } else {
                  throw ConfigError("e_r_mode",
                                    fmt::format("e_r_mode must be \"fixed\" or \"optimal\", got \"{}\"", s));
                }
              },
              [](const SystemConfig& c) {
                return json(c.e_r_mode == noise::ReferenceMode::fixed ? "fixed" : "optimal");
              }},
      FSQSS_DOUBLE_KEY("wander_exponent", wander_exponent),
      FSQSS_DOUBLE_KEY("heterodyne_mi_factor", heterodyne_mi_factor),
      KeySpec{"chi_efficiency",
              [](SystemConfig& c, const json& v) {
                const auto s = as_string(v, "chi_efficiency");
                if (s == "reconciliation") {
                  c.chi_efficiency = ChiEfficiency::reconciliation;
                } else if (s == "detector") {
                  c.chi_efficiency = ChiEfficiency::detector;
                } else {
                  throw ConfigError("chi_efficiency",
                                    fmt::format("chi_efficiency must be \"reconciliation\" or "
                                                "\"detector\", got \"{}\"", s));
                }
              },
              [](const SystemConfig& c) {
                return json(c.chi_efficiency == ChiEfficiency::detector ? "detector"
                                                                        : "reconciliation");
              }},
      KeySpec{"fading",
              [](SystemConfig& c, const json& v) {
                const auto s = as_string(v, "fading");
                if (s == "fast") {
                  c.fading = Fading::fast;
                } else if (s == "slow") {
                  c.fading = Fading::slow;
                } else {
                  throw ConfigError("fading",
                                    fmt::format("fading must be \"fast\" or \"slow\", got \"{}\"", s));
                }
              },
              [](const SystemConfig& c) { return json(c.fading == Fading::slow ? "slow" : "fast"); }},
      KeySpec{"fading_block",
              [](SystemConfig& c, const json& v) { c.fading_block = as_int(v, "fading_block"); },
              [](const SystemConfig& c) { return json(c.fading_block); }},
      KeySpec{"rounds",
              [](SystemConfig& c, const json& v) { c.rounds = as_int(v, "rounds"); },
              [](const SystemConfig& c) { return json(c.rounds); }},
  };
  return specs;
}

#undef FSQSS_DOUBLE_KEY

void positive(double v, const char* key) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ConfigError(key, fmt::format("{} must be positive and finite, got {}", key, v));
  }
}

void non_negative(double v, const char* key) {
  if (!(v >= 0.0)) throw ConfigError(key, fmt::format("{} must be non-negative, got {}", key, v));
}

void unit_interval(double v, const char* key) {
  if (!(v > 0.0 && v <= 1.0)) {
    throw ConfigError(key, fmt::format("{} must lie in (0, 1], got {}", key, v));
  }
}

std::size_t line_of_offset(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

}  // namespace

void SystemConfig::validate() const {
  positive(wavelength, "lambda");
  positive(w0, "w0");
  positive(aperture_radius, "r");
  positive(fiber_core_diameter, "d_cor");
  positive(focal_length, "d_f");
  positive(outer_scale, "l0");
  positive(pulse_rate, "f_pr");
  unit_interval(duty_ratio, "r_ra");
  unit_interval(eta, "eta");
  unit_interval(eta_e, "eta_e");
  unit_interval(habs_transmissivity, "t_h");
  non_negative(eps0, "eps0");
  non_negative(v_el, "v_el");
  non_negative(v_a, "v_a");
  if (!std::isfinite(v_a)) throw ConfigError("v_a", "v_a must be finite");
  non_negative(altitude, "h");
  if (!std::isfinite(altitude)) throw ConfigError("h", "h must be finite");
  non_negative(d_db, "d_db");
  non_negative(r_e, "r_e");
  non_negative(r_p, "r_p");
  if (participants < 1) throw ConfigError("n", fmt::format("n must be at least 1, got {}", participants));
  positive(distance, "l");
  non_negative(cn2, "cn2");
  if (!std::isfinite(cn2)) throw ConfigError("cn2", "cn2 must be finite");
  if (mc_samples < 10'000) {
    throw ConfigError("mc_samples", fmt::format("mc_samples must be at least 10000, got {}", mc_samples));
  }
  non_negative(e0, "e0");
  positive(e_r_sq, "e_r_sq");
  if (!std::isfinite(wander_exponent)) throw ConfigError("wander_exponent", "wander_exponent must be finite");
  positive(heterodyne_mi_factor, "heterodyne_mi_factor");
  if (fading_block < 1) throw ConfigError("fading_block", "fading_block must be at least 1");
  if (rounds < 1) throw ConfigError("rounds", "rounds must be at least 1");
}

atmosphere::TurbulenceParams SystemConfig::turbulence() const {
  atmosphere::TurbulenceParams p;
  p.cn2 = cn2;
  p.wavelength = wavelength;
  p.w0 = w0;
  p.aperture_radius = aperture_radius;
  p.distance = distance;
  p.altitude = altitude;
  p.wander_exponent = wander_exponent;
  return p;
}

noise::LinkNoiseInputs SystemConfig::noise_inputs(const std::vector<double>& mean_t, int link,
                                                  const atmosphere::ChannelStats& stats) const {
  auto in = noise::LinkNoiseInputs::identical(mean_t, link, v_a, d_db, r_e, r_p);
  in.e_r_sq = e_r_sq;
  in.e0 = e0;
  in.eta = chi_eta();
  in.v_el = v_el;
  in.eps0 = eps0;
  in.stats = stats;
  return in;
}

SystemConfig validate_config(std::string_view raw) {
  SystemConfig cfg;
  const bool blank = std::all_of(raw.begin(), raw.end(), [](char ch) {
    return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r';
  });
  if (blank) return cfg;

  json doc;
  try {
    doc = json::parse(raw.begin(), raw.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("<syntax>", fmt::format("config parse error at line {}: {}",
                                              line_of_offset(raw, e.byte > 0 ? e.byte - 1 : 0),
                                              e.what()));
  }
  if (!doc.is_object()) throw ConfigError("<root>", "config must be a JSON object");

  const auto& specs = key_specs();
  for (const auto& [key, value] : doc.items()) {
    auto it = std::find_if(specs.begin(), specs.end(), [&](const KeySpec& s) { return key == s.name; });
    if (it == specs.end()) throw ConfigError(key, fmt::format("unknown config key \"{}\"", key));
    it->set(cfg, value);
  }
  cfg.validate();
  return cfg;
}

SystemConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", fmt::format("cannot open config file {}", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return validate_config(ss.str());
}

std::string config_to_json(const SystemConfig& cfg) {
  json out = json::object();
  for (const auto& spec : key_specs()) out[spec.name] = spec.get(cfg);
  return out.dump(2);
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& s : key_specs()) k.emplace_back(s.name);
    return k;
  }();
  return keys;
}

}  // namespace fsqss
