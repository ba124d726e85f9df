#pragma once
// Strict JSON scenario files: unknown keys and wrong types are errors, absent optional fields
// take defaults.

#include "vhip/pendulum.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vhip::io {

inline constexpr int kSchemaVersion = 1;

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScenarioConfig {
  int n{10};
  std::optional<double> alpha;  // fixed alpha; when absent alpha is sampled
  int n_alpha{5};
  double h_f{0.8};
  double lambda_min{0.};
  double lambda_max{0.};
  std::vector<double> t_swing;  // one per step; a scalar in the file applies to every step
  double control_period{0.01};
  double mu{1e6};
};

struct Scenario {
  int schema_version{kSchemaVersion};
  double g{kGravity};
  std::vector<ContactArea> contacts;
  PendulumState initial;
  ScenarioConfig config;

  [[nodiscard]] StiffnessBounds bounds() const { return {config.lambda_min, config.lambda_max}; }
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ScenarioError(where + ": expected an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [k, v] : obj.items())
    if (!keys.count(k)) throw ScenarioError(where + ": unknown key '" + k + "'");
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ScenarioError(where + ": expected a number");
  return j.get<double>();
}

inline int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ScenarioError(where + ": expected an integer");
  return j.get<int>();
}

inline Vector3 vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ScenarioError(where + ": expected an array of 3 numbers");
  return {number(j[0], where + "[0]"), number(j[1], where + "[1]"), number(j[2], where + "[2]")};
}

inline const json& required(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ScenarioError(where + ": missing key '" + key + "'");
  return obj.at(key);
}

inline ContactArea contact(const json& j, const std::string& where) {
  reject_unknown(j, where, {"center", "rpy", "t", "b", "n", "half_extents"});
  const Vector3 center = vec3(required(j, "center", where), where + ".center");
  const json& he = required(j, "half_extents", where);
  if (!he.is_array() || he.size() != 2) throw ScenarioError(where + ".half_extents: expected [X, Y]");
  const double X = number(he[0], where + ".half_extents[0]"), Y = number(he[1], where + ".half_extents[1]");
  const bool has_rpy = j.contains("rpy");
  const bool has_frame = j.contains("t") || j.contains("b") || j.contains("n");
  if (has_rpy && has_frame) throw ScenarioError(where + ": give either rpy or t/b/n, not both");
  ContactArea c;
  if (has_frame) {
    c.o = center;
    c.t = vec3(required(j, "t", where), where + ".t");
    c.b = vec3(required(j, "b", where), where + ".b");
    c.n = vec3(required(j, "n", where), where + ".n");
    c.X = X;
    c.Y = Y;
  } else {
    c = ContactArea::from_rpy(center, has_rpy ? vec3(j.at("rpy"), where + ".rpy") : Vector3::Zero(), X, Y);
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(where + ": " + e.what());
  }
  return c;
}

}  // namespace detail

/// Parses scenario text. `origin` prefixes diagnostics (usually the file path).
inline Scenario parse_scenario(const std::string& text, const std::string& origin = "scenario") {
  using detail::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // The message carries line and column.
    throw ScenarioError(origin + ": " + e.what());
  }
  detail::reject_unknown(root, origin, {"schema_version", "gravity", "contacts", "initial_state", "config"});
  Scenario s;
  s.schema_version = detail::integer(detail::required(root, "schema_version", origin), origin + ".schema_version");
  if (s.schema_version != kSchemaVersion)
    throw ScenarioError(origin + ": unsupported schema_version " + std::to_string(s.schema_version));
  if (root.contains("gravity")) s.g = detail::number(root.at("gravity"), origin + ".gravity");
  if (!(s.g > 0.)) throw ScenarioError(origin + ".gravity: must be positive");

  const json& cs = detail::required(root, "contacts", origin);
  if (!cs.is_array() || cs.empty()) throw ScenarioError(origin + ".contacts: expected a non-empty array");
  for (std::size_t i = 0; i < cs.size(); ++i)
    s.contacts.push_back(detail::contact(cs[i], origin + ".contacts[" + std::to_string(i) + "]"));

  const std::string wi = origin + ".initial_state";
  const json& init = detail::required(root, "initial_state", origin);
  detail::reject_unknown(init, wi, {"c", "cdot"});
  s.initial.c = detail::vec3(detail::required(init, "c", wi), wi + ".c");
  s.initial.cdot = init.contains("cdot") ? detail::vec3(init.at("cdot"), wi + ".cdot") : Vector3::Zero();

  ScenarioConfig& cfg = s.config;
  cfg.lambda_min = 0.1 * s.g;
  cfg.lambda_max = 2. * s.g;
  if (root.contains("config")) {
    const std::string wc = origin + ".config";
    const json& c = root.at("config");
    detail::reject_unknown(c, wc, {"n", "alpha", "n_alpha", "h_f", "lambda_min", "lambda_max", "t_swing",
                                   "control_period", "mu"});
    if (c.contains("alpha") && c.contains("n_alpha")) throw ScenarioError(wc + ": give either alpha or n_alpha");
    if (c.contains("n")) cfg.n = detail::integer(c.at("n"), wc + ".n");
    if (c.contains("alpha")) cfg.alpha = detail::number(c.at("alpha"), wc + ".alpha");
    if (c.contains("n_alpha")) cfg.n_alpha = detail::integer(c.at("n_alpha"), wc + ".n_alpha");
    if (c.contains("h_f")) cfg.h_f = detail::number(c.at("h_f"), wc + ".h_f");
    if (c.contains("lambda_min")) cfg.lambda_min = detail::number(c.at("lambda_min"), wc + ".lambda_min");
    if (c.contains("lambda_max")) cfg.lambda_max = detail::number(c.at("lambda_max"), wc + ".lambda_max");
    if (c.contains("control_period")) cfg.control_period = detail::number(c.at("control_period"), wc + ".control_period");
    if (c.contains("mu")) cfg.mu = detail::number(c.at("mu"), wc + ".mu");
    if (c.contains("t_swing")) {
      const json& ts = c.at("t_swing");
      if (ts.is_array()) {
        for (std::size_t i = 0; i < ts.size(); ++i)
          cfg.t_swing.push_back(detail::number(ts[i], wc + ".t_swing[" + std::to_string(i) + "]"));
      } else {
        cfg.t_swing.assign(s.contacts.size() > 1 ? s.contacts.size() - 1 : 1, detail::number(ts, wc + ".t_swing"));
      }
    }
    if (cfg.n < 2) throw ScenarioError(wc + ".n: must be >= 2");
    if (cfg.n_alpha < 1) throw ScenarioError(wc + ".n_alpha: must be >= 1");
    if (cfg.alpha && !(*cfg.alpha > 0. && *cfg.alpha < 1.)) throw ScenarioError(wc + ".alpha: must lie in (0, 1)");
    if (!(cfg.h_f > 0.)) throw ScenarioError(wc + ".h_f: must be positive");
    if (!(cfg.lambda_min > 0. && cfg.lambda_min < cfg.lambda_max))
      throw ScenarioError(wc + ": need 0 < lambda_min < lambda_max");
    if (!(cfg.control_period > 0.)) throw ScenarioError(wc + ".control_period: must be positive");
    if (!(cfg.mu > 0.)) throw ScenarioError(wc + ".mu: must be positive");
    for (double t : cfg.t_swing)
      if (!(t > 0.)) throw ScenarioError(wc + ".t_swing: durations must be positive");
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

}  // namespace vhip::io
