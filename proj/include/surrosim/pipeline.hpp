#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "surrosim/meta.hpp"
#include "surrosim/scenario.hpp"

namespace surrosim {

inline constexpr const char* kToolName = "surrosim";
inline constexpr const char* kToolVersion = "0.1.0";

class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Stage { calibrate, simulate, metrics, meta, report, all };
Stage parse_stage(std::string_view name);
const char* to_string(Stage stage);

struct RunOptions {
  std::vector<std::string> scenarios;  // preset names or JSON config paths
  std::optional<std::string> profile;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out = "surrosim_out";
  int threads = 1;
  std::optional<PairMode> mode;
  std::optional<int> dups;
  std::ostream* log = nullptr;
};

struct MetaVariant {
  PairMode mode;
  int dups;
  std::string tag() const;  // e.g. fixed_dup3
};

/// Scenario specs for the given names or config paths, with the profile applied.
std::vector<ScenarioSpec> resolve_scenarios(const std::vector<std::string>& names,
                                            const Profile& profile);

/// Runs `stage` (and for `all`, every stage in order) against options.out.
void run(Stage stage, const RunOptions& options);

/// Calls fn(i) for i in [0, n) on up to `threads` workers. The first
/// exception (lowest index) is rethrown after all workers stop.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace surrosim
