#include "surrosim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace surrosim {

LandmarkDataset rebaseline(const Trial& trial, double t_star) {
  if (!(t_star < trial.censor_time))
    throw UnusableTrial("landmark time is not before the administrative censor time");
  LandmarkDataset out;
  out.y.reserve(trial.patients.size());
  out.time.reserve(trial.patients.size());
  for (const auto& p : trial.patients) {
    if (p.event && p.time <= t_star) {
      ++out.excluded_count;
      continue;
    }
    out.y.push_back(p.surrogate.observed_y);
    out.time.push_back(p.time - t_star);
    out.event.push_back(p.event ? 1 : 0);
    out.arm.push_back(static_cast<std::uint8_t>(p.arm));
  }
  if (out.size() < 10)
    throw UnusableTrial("only " + std::to_string(out.size()) + " patients remain after t_star");
  if (std::none_of(out.event.begin(), out.event.end(), [](std::uint8_t e) { return e != 0; }))
    throw UnusableTrial("no events after t_star");
  return out;
}

double harrell_c(std::span<const double> risks, std::span<const double> times,
                 std::span<const std::uint8_t> events) {
  const std::size_t n = times.size();
  if (risks.size() != n || events.size() != n)
    throw std::invalid_argument("harrell_c: input lengths differ");
  if (n < 2) throw std::invalid_argument("harrell_c: need at least two subjects");
  double concordant = 0.0;
  std::size_t comparable = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!events[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (!(times[i] < times[j])) continue;
      ++comparable;
      if (risks[i] > risks[j]) concordant += 1.0;
      else if (risks[i] == risks[j]) concordant += 0.5;
    }
  }
  if (comparable == 0) throw UnusableTrial("harrell_c: no comparable pairs");
  return concordant / static_cast<double>(comparable);
}

double brier_at(double t, std::span<const double> times, std::span<const std::uint8_t> events,
                std::span<const double> predictions, const StepFunction& censoring) {
  const std::size_t n = times.size();
  if (events.size() != n || predictions.size() != n)
    throw std::invalid_argument("brier_at: input lengths differ");
  const double g_t = censoring(t);
  if (!(g_t > 0.0)) throw std::domain_error("brier_at: censoring survival is zero at t");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = predictions[i];
    if (times[i] <= t) {
      if (events[i]) sum += s * s / censoring.left_limit(times[i]);
    } else {
      sum += (1.0 - s) * (1.0 - s) / g_t;
    }
  }
  return sum / static_cast<double>(n);
}

double CoxPrediction::at(double t, std::size_t i) const {
  const double s0 = baseline(t);
  if (s0 <= 0.0) return 0.0;
  return std::pow(s0, relative_risk[i]);
}

std::vector<double> CoxPrediction::at(double t) const {
  std::vector<double> out(relative_risk.size());
  const double s0 = baseline(t);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = s0 <= 0.0 ? 0.0 : std::pow(s0, relative_risk[i]);
  return out;
}

double integrated_brier(const LandmarkDataset& data, const CoxPrediction& prediction,
                        const StepFunction& censoring, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("integrated_brier: tau must be positive");
  bool any_event = false;
  for (std::size_t i = 0; i < data.size(); ++i) any_event |= data.event[i] && data.time[i] <= tau;
  if (!any_event) throw UnusableTrial("integrated_brier: no event times below tau");

  std::vector<double> knots{0.0};
  for (double t : data.time)
    if (t > 0.0 && t < tau) knots.push_back(t);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  double area = 0.0;
  for (std::size_t k = 0; k < knots.size(); ++k) {
    const double right = k + 1 < knots.size() ? knots[k + 1] : tau;
    const double t = knots[k];
    area += brier_at(t, data.time, data.event, prediction.at(t), censoring) * (right - t);
  }
  return area / tau;
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

CoxPrediction predictions_from(const CoxFit& fit, const SurvivalSample& sample) {
  CoxPrediction pred;
  pred.baseline = breslow_baseline(fit, sample).at(0);
  pred.relative_risk.resize(sample.size(), 1.0);
  if (fit.coefficients.size() > 0) {
    const Eigen::VectorXd eta = sample.covariates * fit.coefficients;
    for (std::size_t i = 0; i < sample.size(); ++i)
      pred.relative_risk[i] = std::exp(eta[static_cast<Eigen::Index>(i)]);
  }
  return pred;
}

}  // namespace

StudyMetrics study_metrics(const Trial& trial, double t_star, double tau_quantile) {
  const LandmarkDataset data = rebaseline(trial, t_star);
  const std::size_t n = data.size();
  StudyMetrics m;
  m.excluded_count = data.excluded_count;
  m.c_index = harrell_c(data.y, data.time, data.event);

  SurvivalSample with_y;
  with_y.time = data.time;
  with_y.event = data.event;
  with_y.covariates = Eigen::Map<const Eigen::VectorXd>(data.y.data(), static_cast<Eigen::Index>(n));

  SurvivalSample intercept_only{data.time, data.event, Eigen::MatrixXd(n, 0), {}};

  // Censoring distribution from an intercept-only Cox model on the flipped indicator.
  SurvivalSample flipped = intercept_only;
  for (auto& e : flipped.event) e = e ? 0 : 1;
  StepFunction censoring;  // G = 1 when nobody is censored
  if (std::any_of(flipped.event.begin(), flipped.event.end(), [](std::uint8_t e) { return e != 0; }))
    censoring = breslow_baseline(fit_cox(flipped), flipped).at(0);

  m.tau = quantile(data.time, tau_quantile);
  if (!(censoring(m.tau) > 0.0)) throw UnusableTrial("censoring survival is zero at tau");

  try {
    const CoxFit fit_y = fit_cox(with_y);
    const CoxFit fit_null = fit_cox(intercept_only);
    m.ibs = integrated_brier(data, predictions_from(fit_y, with_y), censoring, m.tau);
    m.ibs_null = integrated_brier(data, predictions_from(fit_null, intercept_only), censoring, m.tau);

    SurvivalSample by_arm = with_y;
    by_arm.stratum.assign(data.arm.begin(), data.arm.end());
    const CoxFit fit_strat = fit_cox(by_arm);
    m.log_hr_se = fit_strat.coefficients.size() == 1 ? fit_strat.coefficients[0] : 0.0;
  } catch (const CoxError& e) {
    throw UnusableTrial(std::string("patient-level Cox fit failed: ") + e.what());
  }
  if (!(m.ibs_null > 0.0)) throw UnusableTrial("null-model IBS is zero");
  m.scaled_ibs = 1.0 - m.ibs / m.ibs_null;
  return m;
}

}  // namespace surrosim
