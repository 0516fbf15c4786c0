#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "surrosim/survmodels.hpp"
#include "surrosim/survsim.hpp"

namespace surrosim {

/// A trial that cannot support patient-level metrics (too few rows or
/// events after landmarking, or a degenerate metric).
class UnusableTrial : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LandmarkDataset {
  std::vector<double> y;
  std::vector<double> time;  // time since t_star
  std::vector<std::uint8_t> event;
  std::vector<std::uint8_t> arm;
  int excluded_count = 0;

  std::size_t size() const { return time.size(); }
};

/// Drops patients with an event at or before t_star and shifts the rest to
/// the landmark. Throws UnusableTrial with fewer than 10 rows or no events.
LandmarkDataset rebaseline(const Trial& trial, double t_star);

/// Harrell's C with risk = larger-is-worse. A pair is comparable when the
/// times differ and the earlier time is an event; tied risks count 1/2.
/// Throws UnusableTrial when no pair is comparable.
double harrell_c(std::span<const double> risks, std::span<const double> times,
                 std::span<const std::uint8_t> events);

/// IPCW Brier score at t. `predictions[i]` is S(t | row i); G is the
/// censoring survival function (left limit used at event times).
double brier_at(double t, std::span<const double> times, std::span<const std::uint8_t> events,
                std::span<const double> predictions, const StepFunction& censoring);

/// Predicted survival S0(t)^relative_risk[i] from a Cox fit.
struct CoxPrediction {
  StepFunction baseline;
  std::vector<double> relative_risk;

  double at(double t, std::size_t i) const;
  std::vector<double> at(double t) const;
};

/// Integral of the Brier curve over [0, tau], divided by tau. The curve is
/// piecewise constant between observed times, so it is integrated exactly
/// on the knots {0} and the distinct observed times in (0, tau).
double integrated_brier(const LandmarkDataset& data, const CoxPrediction& prediction,
                        const StepFunction& censoring, double tau);

struct StudyMetrics {
  double c_index = 0.0;
  double ibs = 0.0;
  double ibs_null = 0.0;
  double scaled_ibs = 0.0;
  double log_hr_se = 0.0;
  int excluded_count = 0;
  double tau = 0.0;
};

/// Type-7 (linear interpolation) sample quantile.
double quantile(std::vector<double> values, double prob);

StudyMetrics study_metrics(const Trial& trial, double t_star, double tau_quantile = 0.95);

}  // namespace surrosim
