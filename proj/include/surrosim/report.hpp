#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "surrosim/meta.hpp"
#include "surrosim/metrics.hpp"

namespace surrosim {

/// One row of metrics.csv.
struct MetricsRecord {
  std::string scenario;
  int cell_index = 0;
  double alpha = 0.0;
  double beta1 = 0.0;
  double ks_mean_active = 0.0;
  double kg_mean_active = 0.0;
  int replicate = 0;
  StudyMetrics metrics;
  bool usable = true;
};

/// One row of a pairs_*.csv file.
struct PairRecord {
  std::string scenario;
  std::string mode;  // fixed | mixed
  int dups = 0;
  int meta_size = 0;
  double alpha = 0.0;
  std::string beta1_label;  // beta1 value or "mixed"
  int pair_id = 0;
  double r2 = 0.0;
  StudyMetrics discovery;
};

std::vector<std::string> metrics_csv_columns();
std::vector<std::string> pairs_csv_columns();
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);
std::vector<PairRecord> read_pairs_csv(const std::filesystem::path& path);

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};
Quartiles quartiles(const std::vector<double>& values);

struct SummaryRow {
  std::string scenario;
  double alpha = 0.0;
  std::string beta1_label;
  std::string metric;
  Quartiles q;
  int n = 0;
};

/// Quartiles of each patient-level metric per (scenario, alpha, beta1),
/// pooling replicates and active-mean values. Usable trials only.
std::vector<SummaryRow> metric_boxplots(const std::vector<MetricsRecord>& records);

struct WithinCellRow {
  std::string scenario;
  std::string family;  // "fixed" (one cell) or "alpha_varying" (pooled over alpha)
  std::string alpha_label;
  double beta1 = 0.0;
  double ks_mean_active = 0.0;
  double kg_mean_active = 0.0;
  std::string metric;  // correlated against c_index
  int n = 0;
  double spearman = 0.0;
  double pearson = 0.0;
};

struct CorrelationSummaryRow {
  std::string scenario;
  std::string family;
  std::string metric;
  Quartiles abs_spearman;
  int n = 0;  // number of correlations summarised
};

/// Correlations between C and each other metric, within cells across
/// replicates and across alpha-pooled replicate sets per (beta1, mean).
std::vector<WithinCellRow> within_cell_correlations(const std::vector<MetricsRecord>& records);
std::vector<CorrelationSummaryRow> summarize_correlations(const std::vector<WithinCellRow>& rows);

struct R2SummaryRow {
  std::string scenario;
  std::string mode;
  int meta_size = 0;
  double alpha = 0.0;
  std::string beta1_label;
  Quartiles q;
  int n = 0;
};

std::vector<R2SummaryRow> r2_summaries(const std::vector<PairRecord>& pairs);

struct PatternCheck {
  std::string id;
  std::string description;
  double value = 0.0;
  bool pass = false;
};

/// Paper-pattern checks on one scenario: null association, C plateau,
/// metric agreement, trial-level null and correlation decay. `fixed15` and
/// `fixed5` are fixed-beta1 pairs with 3 and 1 replicates per mean value;
/// either may be empty, in which case those checks are omitted.
std::vector<PatternCheck> pattern_checks(const std::string& scenario,
                                         const std::vector<MetricsRecord>& records,
                                         const std::vector<PairRecord>& fixed15,
                                         const std::vector<PairRecord>& fixed5);

struct Box {
  Quartiles q;
  int n = 0;
};
struct BoxSeries {
  std::string label;
  std::vector<std::optional<Box>> boxes;  // one per x group
};

/// Grouped box plot (quartile boxes with a median bar) as a standalone SVG.
/// The plotted numbers are embedded as an XML comment.
std::string boxplot_svg(const std::string& title, const std::string& y_label,
                        const std::vector<std::string>& x_labels,
                        const std::vector<BoxSeries>& series);

struct ReportFiles {
  std::vector<std::filesystem::path> written;
  std::vector<PatternCheck> checks;
};

/// Writes summary_*.csv and fig_*.svg for the given inputs into `out_dir`.
ReportFiles write_report(const std::filesystem::path& out_dir,
                         const std::vector<MetricsRecord>& records,
                         const std::vector<std::vector<PairRecord>>& pair_sets);

}  // namespace surrosim
