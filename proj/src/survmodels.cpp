#include "surrosim/survmodels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace surrosim {

void SurvivalSample::validate() const {
  const std::size_t n = time.size();
  if (event.size() != n || static_cast<std::size_t>(covariates.rows()) != n ||
      (!stratum.empty() && stratum.size() != n))
    throw std::invalid_argument("survival sample columns differ in length");
  for (double t : time)
    if (!(t > 0.0) || !std::isfinite(t))
      throw std::invalid_argument("survival times must be positive and finite");
}

namespace {

// Indices ordered by stratum, then by decreasing time.
std::vector<std::size_t> risk_order(const SurvivalSample& d) {
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (d.stratum_of(a) != d.stratum_of(b)) return d.stratum_of(a) < d.stratum_of(b);
    if (d.time[a] != d.time[b]) return d.time[a] > d.time[b];
    return a < b;
  });
  return idx;
}

bool all_columns_constant_within_strata(const SurvivalSample& d) {
  const Eigen::Index p = d.n_covariates();
  std::map<int, std::size_t> first;
  for (std::size_t i = 0; i < d.size(); ++i) first.emplace(d.stratum_of(i), i);
  for (Eigen::Index j = 0; j < p; ++j)
    for (std::size_t i = 0; i < d.size(); ++i)
      if (d.covariates(i, j) != d.covariates(first[d.stratum_of(i)], j)) return false;
  return true;
}

double max_abs(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

PartialLikelihood cox_partial_likelihood(const SurvivalSample& d, const Eigen::VectorXd& beta) {
  const Eigen::Index p = d.n_covariates();
  const std::size_t n = d.size();
  PartialLikelihood out;
  out.score = Eigen::VectorXd::Zero(p);
  out.information = Eigen::MatrixXd::Zero(p, p);

  Eigen::VectorXd eta = p > 0 ? Eigen::VectorXd(d.covariates * beta) : Eigen::VectorXd::Zero(n);
  const std::vector<std::size_t> order = risk_order(d);

  Eigen::VectorXd s1(p);
  Eigen::MatrixXd s2(p, p);
  std::size_t k = 0;
  while (k < n) {
    // One stratum at a time; shift eta by its maximum to keep exp() in range.
    const int stratum = d.stratum_of(order[k]);
    std::size_t end = k;
    double shift = -std::numeric_limits<double>::infinity();
    while (end < n && d.stratum_of(order[end]) == stratum) shift = std::max(shift, eta[order[end++]]);

    double s0 = 0.0;
    s1.setZero();
    s2.setZero();
    std::size_t i = k;
    while (i < end) {
      std::size_t j = i;
      const double t = d.time[order[i]];
      for (; j < end && d.time[order[j]] == t; ++j) {
        const std::size_t r = order[j];
        const double w = std::exp(eta[r] - shift);
        s0 += w;
        if (p > 0) {
          const auto x = d.covariates.row(r).transpose();
          s1 += w * x;
          s2.noalias() += w * x * x.transpose();
        }
      }
      for (std::size_t m = i; m < j; ++m) {
        const std::size_t r = order[m];
        if (!d.event[r]) continue;
        out.loglik += (eta[r] - shift) - std::log(s0);
        if (p > 0) {
          const Eigen::VectorXd mean = s1 / s0;
          out.score += d.covariates.row(r).transpose() - mean;
          out.information += s2 / s0 - mean * mean.transpose();
        }
      }
      i = j;
    }
    k = end;
  }
  return out;
}

double CoxFit::linear_predictor(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) != coefficients.size())
    throw std::invalid_argument("covariate vector length does not match the fit");
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += x[j] * coefficients[static_cast<Eigen::Index>(j)];
  return s;
}

CoxFit fit_cox(const SurvivalSample& data, const CoxOptions& opt) {
  data.validate();
  if (std::none_of(data.event.begin(), data.event.end(), [](std::uint8_t e) { return e != 0; }))
    throw CoxError("Cox fit: no events");

  const Eigen::Index p = data.n_covariates();
  CoxFit fit;
  if (p == 0 || all_columns_constant_within_strata(data)) {
    SurvivalSample reduced{data.time, data.event, Eigen::MatrixXd(data.size(), 0), data.stratum};
    const PartialLikelihood pl = cox_partial_likelihood(reduced, Eigen::VectorXd(0));
    fit.coefficients = Eigen::VectorXd(0);
    fit.loglik = fit.loglik_null = pl.loglik;
    fit.information = Eigen::MatrixXd(0, 0);
    fit.converged = true;
    return fit;
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  PartialLikelihood pl = cox_partial_likelihood(data, beta);
  fit.loglik_null = pl.loglik;
  bool clamped = false;
  int iter = 0;
  for (; iter < opt.max_iterations && max_abs(pl.score) >= opt.score_tolerance; ++iter) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(pl.information);
    const double scale = std::max(1.0, pl.information.diagonal().cwiseAbs().maxCoeff());
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-13 * scale) {
      if (iter == 0) throw CoxError("Cox fit: singular information matrix");
      break;  // information collapsed while drifting toward the bound
    }
    Eigen::VectorXd step = ldlt.solve(pl.score);
    auto propose = [&](const Eigen::VectorXd& s) {
      Eigen::VectorXd c = beta + s;
      for (Eigen::Index j = 0; j < p; ++j)
        c[j] = std::clamp(c[j], -opt.coefficient_bound, opt.coefficient_bound);
      return c;
    };
    Eigen::VectorXd candidate = propose(step);
    PartialLikelihood next = cox_partial_likelihood(data, candidate);
    const double slack = 1e-12 * (1.0 + std::abs(pl.loglik));
    for (int h = 0; h < 40 && !(next.loglik >= pl.loglik - slack); ++h) {
      step *= 0.5;
      candidate = propose(step);
      next = cox_partial_likelihood(data, candidate);
    }
    if (!(next.loglik >= pl.loglik - slack)) break;
    beta = candidate;
    pl = std::move(next);
    if (max_abs(beta) >= opt.coefficient_bound) {
      clamped = true;
      ++iter;
      break;
    }
  }
  fit.coefficients = beta;
  fit.loglik = pl.loglik;
  fit.score_norm = max_abs(pl.score);
  fit.iterations = iter;
  fit.information = pl.information;
  fit.converged = !clamped && fit.score_norm < opt.score_tolerance;
  return fit;
}

double StepFunction::operator()(double t) const {
  const auto it = std::upper_bound(knots.begin(), knots.end(), t);
  if (it == knots.begin()) return initial;
  return values[static_cast<std::size_t>(it - knots.begin()) - 1];
}

double StepFunction::left_limit(double t) const {
  const auto it = std::lower_bound(knots.begin(), knots.end(), t);
  if (it == knots.begin()) return initial;
  return values[static_cast<std::size_t>(it - knots.begin()) - 1];
}

std::map<int, StepFunction> breslow_baseline(const CoxFit& fit, const SurvivalSample& data) {
  data.validate();
  const std::size_t n = data.size();
  std::vector<double> risk(n, 1.0);
  if (fit.coefficients.size() > 0) {
    if (fit.coefficients.size() != data.n_covariates())
      throw std::invalid_argument("fit and sample covariate counts differ");
    const Eigen::VectorXd eta = data.covariates * fit.coefficients;
    for (std::size_t i = 0; i < n; ++i) risk[i] = std::exp(eta[static_cast<Eigen::Index>(i)]);
  }

  std::map<int, StepFunction> out;
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < n; ++i) members[data.stratum_of(i)].push_back(i);
  for (auto& [stratum, idx] : members) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return data.time[a] < data.time[b];
    });
    // Risk-set totals from the back.
    std::vector<double> tail(idx.size() + 1, 0.0);
    for (std::size_t k = idx.size(); k-- > 0;) tail[k] = tail[k + 1] + risk[idx[k]];

    StepFunction& s = out[stratum];
    double cumhaz = 0.0;
    for (std::size_t k = 0; k < idx.size();) {
      const double t = data.time[idx[k]];
      std::size_t j = k;
      int deaths = 0;
      for (; j < idx.size() && data.time[idx[j]] == t; ++j) deaths += data.event[idx[j]] ? 1 : 0;
      if (deaths > 0) {
        cumhaz += deaths / tail[k];
        s.knots.push_back(t);
        s.values.push_back(std::exp(-cumhaz));
      }
      k = j;
    }
  }
  return out;
}

double predict_survival(const CoxFit& fit, const StepFunction& baseline, std::span<const double> x,
                        double t) {
  if (t < 0.0) throw std::invalid_argument("prediction time must be nonnegative");
  const double s0 = baseline(t);
  if (s0 <= 0.0) return 0.0;
  return std::pow(s0, std::exp(fit.linear_predictor(x)));
}

StepFunction km_estimate(std::span<const double> times, std::span<const std::uint8_t> events) {
  if (times.size() != events.size()) throw std::invalid_argument("times and events differ in length");
  if (times.empty()) throw std::invalid_argument("Kaplan-Meier needs at least one observation");
  std::vector<std::size_t> idx(times.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
  StepFunction s;
  double surv = 1.0;
  std::size_t at_risk = times.size();
  for (std::size_t k = 0; k < idx.size();) {
    const double t = times[idx[k]];
    std::size_t j = k;
    std::size_t deaths = 0;
    for (; j < idx.size() && times[idx[j]] == t; ++j) deaths += events[idx[j]] ? 1 : 0;
    if (deaths > 0) {
      surv *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
      s.knots.push_back(t);
      s.values.push_back(surv);
    }
    at_risk -= j - k;
    k = j;
  }
  return s;
}

}  // namespace surrosim
