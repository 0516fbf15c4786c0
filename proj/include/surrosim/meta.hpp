#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "surrosim/metrics.hpp"
#include "surrosim/random.hpp"
#include "surrosim/survsim.hpp"

namespace surrosim {

class MetaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrialKey {
  int cell_index = 0;
  int replicate = 0;
  auto operator<=>(const TrialKey&) const = default;
};

struct TrialEffect {
  TrialKey key;
  double log_hr_os = 0.0;
  double delta_median_se = 0.0;
};

/// Median of an even count is the mean of the two central order statistics.
double median(std::vector<double> values);

/// Marginal Cox log HR of arm on all patients, and the between-arm
/// difference in median surrogate (active minus control). Patients with an
/// event at or before t_star take the maximum surrogate among patients still
/// at risk at t_star, pooled over arms.
TrialEffect trial_effects(const Trial& trial, double t_star);

struct R2Result {
  double r2 = 0.0;
  bool degenerate = false;  // all x equal; r2 reported as 0
};

/// Unweighted OLS of y on x; R^2 = 1 - SS_res/SS_tot clamped to [0, 1].
R2Result fit_r2(std::span<const double> x, std::span<const double> y);
/// OLS of log_hr_os on delta_median_se.
R2Result fit_r2(std::span<const TrialEffect> effects);

double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of mid-ranks. Throws MetaError on fewer than three
/// points or zero rank variance.
double spearman(std::span<const double> x, std::span<const double> y);

enum class PairMode { fixed_beta1, mixed_beta1 };
const char* to_string(PairMode mode);
PairMode parse_pair_mode(std::string_view text);

/// One simulated trial available for pairing.
struct PoolEntry {
  SimulationCell cell;
  int replicate = 0;
  TrialEffect effect;
  std::optional<StudyMetrics> metrics;  // empty when the trial was unusable
};

struct MetaPair {
  PairMode mode = PairMode::fixed_beta1;
  double alpha = 0.0;
  std::optional<double> beta1;  // empty in mixed mode
  int pair_id = 0;
  double r2 = 0.0;
  bool r2_degenerate = false;
  TrialKey discovery_key;
  double discovery_beta1 = 0.0;
  StudyMetrics discovery;
  std::vector<TrialKey> members;
  int meta_size = 0;
};

/// Builds n_pairs (meta set, discovery study) pairs per stratum. Fixed mode
/// stratifies by (alpha, beta1) and samples `dups` replicates without
/// replacement per active-mean value; mixed mode stratifies by alpha and
/// samples `dups` replicates per (beta1, active mean). The discovery study
/// is drawn from the stratum's remaining usable trials (in mixed mode with a
/// uniformly drawn beta1 first). Strata are visited in order of first
/// appearance in `pool`; each stratum draws from its own derived stream.
std::vector<MetaPair> assemble_pairs(std::span<const PoolEntry> pool, PairMode mode, int dups,
                                     int n_pairs, std::uint64_t seed);

struct AlphaFilter {
  std::string name;
  std::function<bool(double)> keep;
};

/// all alpha; alpha > 0; alpha >= 2.
std::vector<AlphaFilter> default_alpha_filters();

struct CorrelationRow {
  std::string metric;
  std::string alpha_filter;
  std::string stratum;  // beta1 value, or "mixed"
  double rho = 0.0;
  int n_pairs = 0;
  bool defined = true;
};

inline const std::vector<std::string>& patient_metric_names() {
  static const std::vector<std::string> names{"c_index", "scaled_ibs", "ibs", "log_hr_se"};
  return names;
}
double metric_value(const StudyMetrics& m, std::string_view metric);

/// Spearman between each patient-level metric and r2 across the pairs kept
/// by each filter, per stratum.
std::vector<CorrelationRow> correlation_report(std::span<const MetaPair> pairs,
                                               const std::vector<AlphaFilter>& filters);

std::string format_beta1(double beta1);

}  // namespace surrosim
