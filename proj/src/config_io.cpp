// SPDX-License-Identifier: Apache-2.0

#include "mimose/config_io.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mimose {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw std::invalid_argument("config: " + key + ": " + what);
}

double num_at(const json& j, const std::string& key) {
  if (!j.is_number()) fail(key, "expected a number");
  return j.get<double>();
}

long int_at(const json& j, const std::string& key) {
  if (!j.is_number_integer()) fail(key, "expected an integer");
  return j.get<long>();
}

void check_keys(const json& j, const std::string& section,
                const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(section, "expected an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) fail(section + "." + key, "unknown key");
}

// "identity" or a positive scalar c meaning c * I.
double bias_scale(const json& j, const std::string& key) {
  if (j.is_string()) {
    if (j.get<std::string>() == "identity") return 1.0;
    fail(key, "expected \"identity\" or a positive number");
  }
  const double c = num_at(j, key);
  if (!(c > 0.0)) fail(key, "bias scale must be positive");
  return c;
}

RunConfig from_json(json j) {
  check_keys(j, "(root)", {"scenario", "budget", "power", "regularization"});
  RunConfig cfg;

  if (j.contains("scenario")) {
    const json& s = j["scenario"];
    check_keys(s, "scenario",
               {"L", "K", "M", "inter_bs_distance_m", "user_radius_m",
                "angular_spread_deg", "quadrature_points", "target_user",
                "pathloss"});
    if (s.contains("L")) cfg.scenario.L = static_cast<int>(int_at(s["L"], "scenario.L"));
    if (s.contains("K")) cfg.scenario.K = static_cast<int>(int_at(s["K"], "scenario.K"));
    if (s.contains("M")) cfg.scenario.M = static_cast<int>(int_at(s["M"], "scenario.M"));
    if (s.contains("inter_bs_distance_m"))
      cfg.scenario.inter_bs_distance =
          num_at(s["inter_bs_distance_m"], "scenario.inter_bs_distance_m");
    if (s.contains("user_radius_m"))
      cfg.scenario.user_radius = num_at(s["user_radius_m"], "scenario.user_radius_m");
    if (s.contains("angular_spread_deg"))
      cfg.scenario.angular_spread_deg =
          num_at(s["angular_spread_deg"], "scenario.angular_spread_deg");
    if (s.contains("quadrature_points"))
      cfg.scenario.quadrature_points =
          static_cast<int>(int_at(s["quadrature_points"], "scenario.quadrature_points"));
    if (s.contains("target_user"))
      cfg.scenario.target_user =
          static_cast<int>(int_at(s["target_user"], "scenario.target_user"));
    if (s.contains("pathloss")) {
      const json& p = s["pathloss"];
      if (p.contains("offset_db") || p.contains("slope_db_per_decade")) {
        check_keys(p, "scenario.pathloss", {"offset_db", "slope_db_per_decade"});
        if (p.contains("offset_db"))
          cfg.scenario.pathloss.offset_db =
              num_at(p["offset_db"], "scenario.pathloss.offset_db");
        if (p.contains("slope_db_per_decade"))
          cfg.scenario.pathloss.slope_db_per_decade =
              num_at(p["slope_db_per_decade"], "scenario.pathloss.slope_db_per_decade");
      } else {
        check_keys(p, "scenario.pathloss",
                   {"exponent", "frequency_hz", "tx_power_dbm", "bandwidth_hz",
                    "noise_figure_db"});
        for (const char* req :
             {"exponent", "frequency_hz", "tx_power_dbm", "bandwidth_hz",
              "noise_figure_db"})
          if (!p.contains(req))
            fail(std::string("scenario.pathloss.") + req,
                 "missing key in physical path-loss form");
        cfg.scenario.pathloss = PathlossModel::from_physical(
            num_at(p["exponent"], "scenario.pathloss.exponent"),
            num_at(p["frequency_hz"], "scenario.pathloss.frequency_hz"),
            num_at(p["tx_power_dbm"], "scenario.pathloss.tx_power_dbm"),
            num_at(p["bandwidth_hz"], "scenario.pathloss.bandwidth_hz"),
            num_at(p["noise_figure_db"], "scenario.pathloss.noise_figure_db"));
      }
    }
  }

  if (j.contains("budget")) {
    const json& b = j["budget"];
    check_keys(b, "budget", {"P", "C_u", "C_d", "tau_s", "N_R", "N_Q"});
    if (b.contains("P")) cfg.scenario.P = static_cast<int>(int_at(b["P"], "budget.P"));
    if (b.contains("C_u"))
      cfg.scenario.C_u = static_cast<int>(int_at(b["C_u"], "budget.C_u"));
    if (b.contains("C_d"))
      cfg.scenario.C_d = static_cast<int>(int_at(b["C_d"], "budget.C_d"));
    if (b.contains("tau_s")) cfg.scenario.tau_s = int_at(b["tau_s"], "budget.tau_s");
    if (b.contains("N_R")) cfg.budget.N_R = int_at(b["N_R"], "budget.N_R");
    if (b.contains("N_Q")) cfg.budget.N_Q = int_at(b["N_Q"], "budget.N_Q");
  }

  if (j.contains("power")) {
    const json& p = j["power"];
    check_keys(p, "power", {"mu", "lambda"});
    if (p.contains("mu")) cfg.scenario.mu = num_at(p["mu"], "power.mu");
    if (p.contains("lambda"))
      cfg.scenario.lambda = num_at(p["lambda"], "power.lambda");
  }

  if (j.contains("regularization")) {
    const json& r = j["regularization"];
    check_keys(r, "regularization", {"alpha_R", "R_b", "alpha_Q", "P_b"});
    if (r.contains("alpha_R")) {
      cfg.reg_r.alpha_R = num_at(r["alpha_R"], "regularization.alpha_R");
      if (cfg.reg_r.alpha_R < 0.0 || cfg.reg_r.alpha_R > 1.0)
        fail("regularization.alpha_R", "must be in [0, 1]");
    }
    if (r.contains("R_b")) {
      const double c = bias_scale(r["R_b"], "regularization.R_b");
      cfg.reg_r.R_b =
          c * CMatrix::Identity(cfg.scenario.M, cfg.scenario.M);
    }
    if (r.contains("alpha_Q")) {
      cfg.reg_p.alpha_Q = num_at(r["alpha_Q"], "regularization.alpha_Q");
      if (cfg.reg_p.alpha_Q < 0.0 || cfg.reg_p.alpha_Q > 1.0)
        fail("regularization.alpha_Q", "must be in [0, 1]");
    }
    if (r.contains("P_b")) {
      const double c = bias_scale(r["P_b"], "regularization.P_b");
      cfg.reg_p.P_b = c * RVector::Ones(cfg.scenario.M);
    }
  }

  cfg.budget.P = cfg.scenario.P;
  cfg.budget.C_u = cfg.scenario.C_u;
  cfg.budget.tau_s = cfg.scenario.tau_s;
  cfg.scenario.validate();
  return cfg;
}

json apply_overrides(json j, const std::vector<std::string>& overrides) {
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      fail(kv, "override must have the form section.key=value");
    const std::string path = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);

    json* node = &j;
    std::stringstream ss(path);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    if (parts.empty()) fail(kv, "empty override path");
    for (std::size_t i = 0; i + 1 < parts.size(); ++i)
      node = &((*node)[parts[i]]);

    // Numbers stay numbers so schema checks behave as for file input.
    json parsed = json::parse(value, nullptr, false);
    if (parsed.is_discarded()) parsed = value;
    (*node)[parts.back()] = parsed;
  }
  return j;
}

}  // namespace

RunConfig parse_config(const std::string& json_text,
                       const std::vector<std::string>& overrides) {
  json j = json::parse(json_text, nullptr, false, true);
  if (j.is_discarded())
    throw std::invalid_argument("config: malformed JSON");
  return from_json(apply_overrides(std::move(j), overrides));
}

RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("config: cannot open file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), overrides);
}

}  // namespace mimose
