#include "surrosim/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>

namespace surrosim {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

ScenarioSpec make_preset(std::string name, std::vector<double> ks_active, double ks_control,
                         std::vector<double> kg_active, double kg_control) {
  ScenarioSpec s;
  s.name = std::move(name);
  s.ks_active = std::move(ks_active);
  s.ks_control = ks_control;
  s.kg_active = std::move(kg_active);
  s.kg_control = kg_control;
  return s;
}

const std::vector<ScenarioSpec>& presets() {
  static const std::vector<ScenarioSpec> table = {
      make_preset("Ks1", {0.02, 0.03, 0.04, 0.05, 0.06}, 0.02, {0.01}, 0.01),
      make_preset("Ks1-low", {0.02, 0.025, 0.03, 0.035, 0.04}, 0.02, {0.01}, 0.01),
      make_preset("Ks1-high", {0.04, 0.045, 0.05, 0.055, 0.06}, 0.02, {0.01}, 0.01),
      make_preset("Ks2", {0.02, 0.03, 0.04, 0.05, 0.06}, 0.02, {0.03}, 0.03),
      make_preset("Kg1", {0.02}, 0.02, {0.015, 0.012, 0.008, 0.0045, 0.001}, 0.015),
      make_preset("Kg2", {0.05}, 0.05, {0.03, 0.025, 0.02, 0.01, 0.005}, 0.03),
  };
  return table;
}

[[noreturn]] void fail(const ScenarioSpec& s, std::string_view field, std::string_view what) {
  throw ScenarioError("scenario '" + s.name + "': field '" + std::string(field) + "' " +
                      std::string(what));
}

void check_rates(const ScenarioSpec& s, std::string_view field, const std::vector<double>& v) {
  if (v.empty()) fail(s, field, "must not be empty");
  for (double r : v)
    if (!(r > 0.0) || !std::isfinite(r)) fail(s, field, "must contain strictly positive rates");
}

void check_finite_list(const ScenarioSpec& s, std::string_view field, const std::vector<double>& v) {
  if (v.empty()) fail(s, field, "must not be empty");
  for (double x : v)
    if (!std::isfinite(x)) fail(s, field, "must contain finite values");
  if (std::set<double>(v.begin(), v.end()).size() != v.size())
    fail(s, field, "must not contain duplicates");
}

json number_or_inf(double x) {
  if (std::isinf(x)) return x > 0 ? json("inf") : json("-inf");
  return json(x);
}

double read_number(const ScenarioSpec& s, const json& j, std::string_view field) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string v = lower(j.get<std::string>());
    if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
  }
  fail(s, field, "must be a number");
}

std::vector<double> read_list(const ScenarioSpec& s, const json& j, std::string_view field) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) fail(s, field, "must be a number or a list of numbers");
  std::vector<double> out;
  for (const auto& e : j) out.push_back(read_number(s, e, field));
  return out;
}

int read_int(const ScenarioSpec& s, const json& j, std::string_view field) {
  if (!j.is_number_integer()) fail(s, field, "must be an integer");
  return j.get<int>();
}

}  // namespace

Profile profile_by_name(std::string_view name) {
  const std::string n = lower(name);
  if (n == "desk") return {"desk", 100, 100, 50};
  if (n == "paper") return {"paper", 200, 300, 100};
  throw ScenarioError("unknown profile '" + std::string(name) + "' (expected desk or paper)");
}

void apply_profile(ScenarioSpec& spec, const Profile& profile) {
  spec.n_per_arm = profile.n_per_arm;
  spec.n_replicates = profile.n_replicates;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : presets()) out.push_back(p.name);
  return out;
}

bool is_preset(std::string_view name) {
  const std::string n = lower(name);
  return std::any_of(presets().begin(), presets().end(),
                     [&](const ScenarioSpec& p) { return lower(p.name) == n; });
}

ScenarioSpec preset(std::string_view name) {
  const std::string n = lower(name);
  for (const auto& p : presets())
    if (lower(p.name) == n) return p;
  throw ScenarioError("unknown scenario preset '" + std::string(name) + "'");
}

void validate(const ScenarioSpec& s) {
  if (s.name.empty()) fail(s, "name", "must not be empty");
  for (char c : s.name)
    if (c == ',' || c == '"' || c == '\n' || c == '\r')
      fail(s, "name", "must not contain commas, quotes or newlines");
  check_rates(s, "ks_active", s.ks_active);
  check_rates(s, "kg_active", s.kg_active);
  check_rates(s, "ks_control", {s.ks_control});
  check_rates(s, "kg_control", {s.kg_control});
  if (std::set<double>(s.ks_active.begin(), s.ks_active.end()).size() != s.ks_active.size())
    fail(s, "ks_active", "must not contain duplicates");
  if (std::set<double>(s.kg_active.begin(), s.kg_active.end()).size() != s.kg_active.size())
    fail(s, "kg_active", "must not contain duplicates");
  const bool ks_type = s.kg_active.size() == 1 && s.kg_active[0] == s.kg_control;
  const bool kg_type = s.ks_active.size() == 1 && s.ks_active[0] == s.ks_control;
  if (!ks_type && !kg_type)
    fail(s, s.kg_active.size() == 1 ? "kg_active" : "ks_active",
         "must be a single value equal to its control mean (only one of Ks/Kg may vary)");
  check_finite_list(s, "alpha_grid", s.alpha_grid);
  check_finite_list(s, "beta1_grid", s.beta1_grid);
  if (!(s.gamma > 0.0) || !std::isfinite(s.gamma)) fail(s, "gamma", "must be positive");
  if (!(s.omega_ks >= 0.0) || !std::isfinite(s.omega_ks)) fail(s, "omega_ks", "must be nonnegative");
  if (!(s.omega_kg >= 0.0) || !std::isfinite(s.omega_kg)) fail(s, "omega_kg", "must be nonnegative");
  if (!(s.sigma_err >= 0.0) || !std::isfinite(s.sigma_err)) fail(s, "sigma_err", "must be nonnegative");
  if (s.n_per_arm <= 0) fail(s, "n_per_arm", "must be positive");
  if (s.n_replicates <= 0) fail(s, "n_replicates", "must be positive");
  if (s.pilot_size < 2) fail(s, "pilot_size", "must be at least 2");
  if (!(s.t_star > 0.0) || !std::isfinite(s.t_star)) fail(s, "t_star", "must be a positive time");
  if (!(s.max_duration > s.t_star)) fail(s, "max_duration", "must exceed t_star");
  if (!(s.target_event_fraction > 0.0 && s.target_event_fraction <= 1.0))
    fail(s, "target_event_fraction", "must lie in (0, 1]");
  if (!(s.max_early_event_fraction > 0.0 && s.max_early_event_fraction < 1.0))
    fail(s, "max_early_event_fraction", "must lie in (0, 1)");
  if (!(s.early_event_target > 0.0 && s.early_event_target < s.max_early_event_fraction))
    fail(s, "early_event_target", "must lie in (0, max_early_event_fraction)");
  if (s.beta0_override && !std::isfinite(*s.beta0_override))
    fail(s, "beta0_override", "must be finite");
}

json to_json(const ScenarioSpec& s) {
  json j;
  j["name"] = s.name;
  j["ks_active"] = s.ks_active;
  j["ks_control"] = s.ks_control;
  j["kg_active"] = s.kg_active;
  j["kg_control"] = s.kg_control;
  j["alpha_grid"] = s.alpha_grid;
  j["beta1_grid"] = s.beta1_grid;
  j["gamma"] = s.gamma;
  j["omega_ks"] = s.omega_ks;
  j["omega_kg"] = s.omega_kg;
  j["sigma_err"] = s.sigma_err;
  j["n_per_arm"] = s.n_per_arm;
  j["n_replicates"] = s.n_replicates;
  j["t_star"] = s.t_star;
  j["max_duration"] = number_or_inf(s.max_duration);
  j["target_event_fraction"] = s.target_event_fraction;
  j["max_early_event_fraction"] = s.max_early_event_fraction;
  j["early_event_target"] = s.early_event_target;
  j["pilot_size"] = s.pilot_size;
  j["lognormal_anchor"] = s.lognormal_anchor == LognormalAnchor::median ? "median" : "mean";
  j["beta0_override"] = s.beta0_override ? json(*s.beta0_override) : json(nullptr);
  return j;
}

ScenarioSpec from_json(const json& j, const Profile* profile) {
  if (!j.is_object()) throw ScenarioError("scenario entry must be a JSON object");
  ScenarioSpec s;
  if (auto it = j.find("preset"); it != j.end()) {
    if (!it->is_string()) throw ScenarioError("field 'preset' must be a string");
    s = preset(it->get<std::string>());
  }
  if (profile) apply_profile(s, *profile);
  if (auto it = j.find("name"); it != j.end()) {
    if (!it->is_string()) throw ScenarioError("field 'name' must be a string");
    s.name = it->get<std::string>();
  }
  if (s.name.empty()) throw ScenarioError("scenario entry lacks a 'name' (or 'preset')");

  for (const auto& [key, value] : j.items()) {
    if (key == "preset" || key == "name") continue;
    if (key == "ks_active") s.ks_active = read_list(s, value, key);
    else if (key == "kg_active") s.kg_active = read_list(s, value, key);
    else if (key == "ks_control") s.ks_control = read_number(s, value, key);
    else if (key == "kg_control") s.kg_control = read_number(s, value, key);
    else if (key == "alpha_grid") s.alpha_grid = read_list(s, value, key);
    else if (key == "beta1_grid") s.beta1_grid = read_list(s, value, key);
    else if (key == "gamma") s.gamma = read_number(s, value, key);
    else if (key == "omega_ks") s.omega_ks = read_number(s, value, key);
    else if (key == "omega_kg") s.omega_kg = read_number(s, value, key);
    else if (key == "sigma_err") s.sigma_err = read_number(s, value, key);
    else if (key == "n_per_arm") s.n_per_arm = read_int(s, value, key);
    else if (key == "n_replicates") s.n_replicates = read_int(s, value, key);
    else if (key == "pilot_size") s.pilot_size = read_int(s, value, key);
    else if (key == "t_star") s.t_star = read_number(s, value, key);
    else if (key == "t_star_months") s.t_star = months_to_weeks(read_number(s, value, key));
    else if (key == "max_duration") s.max_duration = read_number(s, value, key);
    else if (key == "max_duration_months") s.max_duration = months_to_weeks(read_number(s, value, key));
    else if (key == "target_event_fraction") s.target_event_fraction = read_number(s, value, key);
    else if (key == "max_early_event_fraction") s.max_early_event_fraction = read_number(s, value, key);
    else if (key == "early_event_target") s.early_event_target = read_number(s, value, key);
    else if (key == "lognormal_anchor") {
      const std::string v = value.is_string() ? lower(value.get<std::string>()) : "";
      if (v == "median") s.lognormal_anchor = LognormalAnchor::median;
      else if (v == "mean") s.lognormal_anchor = LognormalAnchor::mean;
      else fail(s, key, "must be \"median\" or \"mean\"");
    } else if (key == "beta0_override") {
      if (value.is_null()) s.beta0_override.reset();
      else s.beta0_override = read_number(s, value, key);
    } else {
      fail(s, key, "is not a recognised scenario field");
    }
  }
  validate(s);
  return s;
}

std::vector<ScenarioSpec> load_scenarios(std::string_view config_text, const Profile* profile) {
  json root;
  try {
    root = json::parse(config_text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("config parse failure: ") + e.what());
  }
  const json* list = &root;
  if (root.is_object() && root.contains("scenarios")) list = &root["scenarios"];
  std::vector<ScenarioSpec> out;
  if (list->is_array()) {
    for (const auto& e : *list) out.push_back(from_json(e, profile));
  } else {
    out.push_back(from_json(*list, profile));
  }
  if (out.empty()) throw ScenarioError("config defines no scenarios");
  std::set<std::string> names;
  for (const auto& s : out)
    if (!names.insert(s.name).second) throw ScenarioError("duplicate scenario name '" + s.name + "'");
  return out;
}

std::vector<SimulationCell> expand_cells(const ScenarioSpec& spec) {
  std::vector<SimulationCell> cells;
  cells.reserve(spec.alpha_grid.size() * spec.beta1_grid.size() * spec.ks_active.size() *
                spec.kg_active.size());
  int index = 0;
  for (double alpha : spec.alpha_grid)
    for (double beta1 : spec.beta1_grid)
      for (double ks : spec.ks_active)
        for (double kg : spec.kg_active)
          cells.push_back({spec.name, alpha, beta1, ks, kg, spec.ks_control, spec.kg_control, index++});
  return cells;
}

}  // namespace surrosim
