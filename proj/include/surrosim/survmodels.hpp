#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace surrosim {

class CoxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SurvivalSample {
  std::vector<double> time;
  std::vector<std::uint8_t> event;
  Eigen::MatrixXd covariates;  // rows = subjects; zero columns for intercept-only
  std::vector<int> stratum;    // empty means one stratum

  std::size_t size() const { return time.size(); }
  Eigen::Index n_covariates() const { return covariates.cols(); }
  int stratum_of(std::size_t i) const { return stratum.empty() ? 0 : stratum[i]; }
  /// Throws std::invalid_argument on inconsistent sizes or non-positive times.
  void validate() const;
};

struct PartialLikelihood {
  double loglik = 0.0;
  Eigen::VectorXd score;
  Eigen::MatrixXd information;
};

/// Stratified Cox partial log-likelihood with Breslow ties, its gradient and
/// the observed information.
PartialLikelihood cox_partial_likelihood(const SurvivalSample& data, const Eigen::VectorXd& beta);

struct CoxFit {
  Eigen::VectorXd coefficients;
  double loglik = 0.0;
  double loglik_null = 0.0;
  double score_norm = 0.0;  // max |score| at the returned coefficients
  int iterations = 0;
  bool converged = false;
  Eigen::MatrixXd information;

  double linear_predictor(std::span<const double> x) const;
};

struct CoxOptions {
  int max_iterations = 50;
  double score_tolerance = 1e-9;
  double coefficient_bound = 20.0;
};

/// Newton-Raphson with step halving from beta = 0. Coefficients are clamped
/// at +/- coefficient_bound and the fit flagged not converged when the
/// likelihood is monotone. If every covariate is constant within every
/// stratum the fit is intercept-only (empty coefficients).
CoxFit fit_cox(const SurvivalSample& data, const CoxOptions& options = {});

/// Right-continuous step function; `initial` holds before the first knot.
struct StepFunction {
  std::vector<double> knots;
  std::vector<double> values;
  double initial = 1.0;

  double operator()(double t) const;
  double left_limit(double t) const;
};

/// Breslow baseline survival S0(t) = exp(-H0(t)) for each stratum.
std::map<int, StepFunction> breslow_baseline(const CoxFit& fit, const SurvivalSample& data);

/// S0(t)^exp(x'beta).
double predict_survival(const CoxFit& fit, const StepFunction& baseline, std::span<const double> x,
                        double t);

/// Product-limit estimator with knots at the distinct event times.
StepFunction km_estimate(std::span<const double> times, std::span<const std::uint8_t> events);

}  // namespace surrosim
