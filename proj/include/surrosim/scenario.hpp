#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "surrosim/units.hpp"

namespace surrosim {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// How the grid value of Ks/Kg anchors the lognormal: as its median
/// (log K ~ N(log value, omega)) or as its arithmetic mean.
enum class LognormalAnchor { median, mean };

struct ScenarioSpec {
  std::string name;
  std::vector<double> ks_active;
  double ks_control = 0.0;
  std::vector<double> kg_active;
  double kg_control = 0.0;
  std::vector<double> alpha_grid{0.0, 0.5, 2.0, 4.0, 6.0};
  std::vector<double> beta1_grid{0.0, -0.3, -0.6};
  double gamma = 1.0;
  double omega_ks = 0.8;  // variance of log Ks
  double omega_kg = 0.6;  // variance of log Kg
  double sigma_err = 0.09;
  int n_per_arm = 200;
  int n_replicates = 300;
  double t_star = months_to_weeks(2.0);
  double max_duration = months_to_weeks(120.0);
  double target_event_fraction = 0.75;
  double max_early_event_fraction = 0.25;
  double early_event_target = 0.10;
  int pilot_size = 2000;
  LognormalAnchor lognormal_anchor = LognormalAnchor::median;
  std::optional<double> beta0_override;

  bool operator==(const ScenarioSpec&) const = default;
};

/// Scale layer applied on top of a preset.
struct Profile {
  std::string name;
  int n_per_arm;
  int n_replicates;
  int n_pairs;
};

Profile profile_by_name(std::string_view name);
void apply_profile(ScenarioSpec& spec, const Profile& profile);

struct SimulationCell {
  std::string scenario;
  double alpha = 0.0;
  double beta1 = 0.0;
  double ks_active_mean = 0.0;
  double kg_active_mean = 0.0;
  double ks_control_mean = 0.0;
  double kg_control_mean = 0.0;
  int cell_index = 0;

  bool operator==(const SimulationCell&) const = default;
};

std::vector<std::string> preset_names();
bool is_preset(std::string_view name);
/// Built-in scenario at paper scale. Throws ScenarioError for unknown names.
ScenarioSpec preset(std::string_view name);

/// Throws ScenarioError naming the scenario and the offending field.
void validate(const ScenarioSpec& spec);

/// Parses a JSON config: a scenario object, an array of them, or
/// {"scenarios": [...]}. Each object may name a "preset" to start from;
/// when `profile` is given it is applied to that base before the object's
/// own fields.
std::vector<ScenarioSpec> load_scenarios(std::string_view config_text,
                                         const Profile* profile = nullptr);

nlohmann::json to_json(const ScenarioSpec& spec);
ScenarioSpec from_json(const nlohmann::json& j, const Profile* profile = nullptr);

/// alpha outer, beta1 middle, active means inner (ks_active major, kg_active minor).
std::vector<SimulationCell> expand_cells(const ScenarioSpec& spec);

}  // namespace surrosim
