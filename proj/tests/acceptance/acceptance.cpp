// Desk-scale acceptance run on scenario Ks1. Prints one PASS/FAIL line per
// criterion and exits nonzero when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "surrosim/csv.hpp"
#include "surrosim/metrics.hpp"
#include "surrosim/survsim.hpp"

using namespace surrosim;
namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kSeed = 7;

int failures = 0;
std::string summary;

void report(int id, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  char head[32];
  std::snprintf(head, sizeof head, "criterion %2d: %s  ", id, pass ? "PASS" : "FAIL");
  const std::string line = head + detail + "\n";
  summary += line;
  std::fputs(line.c_str(), stdout);
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

template <class Cdf>
double ks_statistic(std::vector<double> x, Cdf cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

ScenarioSpec desk_ks1() {
  ScenarioSpec s = preset("Ks1");
  apply_profile(s, profile_by_name("desk"));
  return s;
}

double calibrated_beta0(const SimulationCell& cell, const ScenarioSpec& spec) {
  Stream s = derive_stream(mix_seed(kSeed, spec.name), static_cast<std::uint64_t>(cell.cell_index),
                           kCalibrationReplicate);
  return calibrate_beta0(cell, spec, s).beta0;
}

void criterion1() {
  ScenarioSpec spec = desk_ks1();
  spec.n_per_arm = 1000;
  spec.target_event_fraction = 1.0;
  spec.max_duration = kInf;
  const SimulationCell cell = expand_cells(spec).front();
  const double beta0 = calibrated_beta0(cell, spec);
  Stream s = derive_stream(kSeed, 1001, 0);
  std::vector<double> times;
  for (const auto& p : simulate_trial(cell, spec, beta0, 0, s).patients) times.push_back(p.time);
  const double d_exp = ks_statistic(times, [&](double t) { return 1.0 - std::exp(-std::exp(beta0) * t); });

  spec.gamma = 1.5;
  const double beta0_w = -5.0;
  Stream w = derive_stream(kSeed, 1002, 0);
  times.clear();
  for (const auto& p : simulate_trial(cell, spec, beta0_w, 0, w).patients) times.push_back(p.time);
  const double d_weib = ks_statistic(
      times, [&](double t) { return 1.0 - std::exp(-std::exp(beta0_w) * std::pow(t, 1.5)); });
  report(1, d_exp < 0.04 && d_weib < 0.04,
         "KS exponential D=" + fmt(d_exp) + ", Weibull(1.5) D=" + fmt(d_weib) + " (n=2000, < 0.04)");
}

void criterion2() {
  const ScenarioSpec spec = desk_ks1();
  double worst = 0.0;
  long draws = 0;
  for (const auto& cell : expand_cells(spec)) {
    const double beta0 = calibrated_beta0(cell, spec);
    Stream s = derive_stream(kSeed, 2000 + static_cast<std::uint64_t>(cell.cell_index), 0);
    for (int i = 0; i < 2 * spec.n_per_arm; ++i) {
      const int arm = i % 2;
      HazardParams hp;
      hp.beta0 = beta0;
      hp.beta1 = cell.beta1;
      hp.alpha = cell.alpha;
      hp.trt = arm;
      hp.trajectory = sample_params(s, arm ? cell.ks_active_mean : cell.ks_control_mean,
                                    arm ? cell.kg_active_mean : cell.kg_control_mean, spec.omega_ks,
                                    spec.omega_kg);
      const double u = s.uniform();
      const EventDraw d = invert_cumulative_hazard(hp, -std::log(u), spec.max_duration);
      if (!d.event) continue;
      worst = std::max(worst, std::abs(cumulative_hazard(hp, d.time) + std::log(u)));
      ++draws;
    }
  }
  report(2, worst <= 1e-6, "max |H(T) + log u| = " + fmt(worst) + " over " + std::to_string(draws) +
                               " event times (<= 1e-6)");
}

void criterion3(const fs::path& run) {
  SurvivalSample d;
  d.time = {1, 2, 3};
  d.event = {1, 1, 1};
  d.covariates = Eigen::MatrixXd(3, 1);
  d.covariates << 1, 0, 1;
  const double beta = fit_cox(d).coefficients[0];
  const bool analytic = std::abs(beta + 0.346574) <= 1e-6;

  Stream s = derive_stream(kSeed, 3000, 0);
  double worst_grad = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 30 + rep, p = 1 + rep % 3;
    SurvivalSample r;
    r.covariates = Eigen::MatrixXd(n, p);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) r.covariates(i, j) = s.normal();
      const double t = -std::log(s.uniform()), c = 1.5 * s.uniform();
      r.time.push_back(std::min(t, c));
      r.event.push_back(t <= c);
    }
    r.event[0] = 1;
    Eigen::VectorXd b(p);
    for (int j = 0; j < p; ++j) b[j] = 0.5 * s.normal();
    const auto pl = cox_partial_likelihood(r, b);
    for (int j = 0; j < p; ++j) {
      Eigen::VectorXd up = b, down = b;
      up[j] += 1e-5;
      down[j] -= 1e-5;
      const double fd = (cox_partial_likelihood(r, up).loglik - cox_partial_likelihood(r, down).loglik) / 2e-5;
      worst_grad = std::max(worst_grad, std::abs(fd - pl.score[j]) / std::max(1.0, std::abs(pl.score[j])));
    }
  }

  const auto doc = csv::Document::read(run / "effects.csv");
  const auto c_a = doc.column("alpha"), c_b = doc.column("beta1"), c_k = doc.column("ks_mean_active"),
             c_l = doc.column("log_hr_os");
  std::map<double, std::pair<double, int>> per_cell;
  for (std::size_t i = 0; i < doc.rows(); ++i) {
    if (doc.number(i, c_a) != 0.0 || doc.number(i, c_b) != -0.3) continue;
    auto& acc = per_cell[doc.number(i, c_k)];
    acc.first += doc.number(i, c_l);
    ++acc.second;
  }
  double worst_bias = 0.0;
  std::string means;
  for (const auto& [ks, acc] : per_cell) {
    const double mean = acc.first / acc.second;
    worst_bias = std::max(worst_bias, std::abs(mean + 0.3));
    means += (means.empty() ? "" : " ") + fmt(mean);
  }
  report(3, analytic && worst_grad < 1e-6 && per_cell.size() == 5 && worst_bias <= 0.05,
         "beta=" + fmt(beta) + ", max gradient rel. error " + fmt(worst_grad) +
             ", alpha=0 beta1=-0.3 mean log HR per cell [" + means + "]");
}

void criterion4() {
  Stream s = derive_stream(kSeed, 4000, 0);
  int c_mismatch = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + static_cast<int>(s.uniform_index(199));
    std::vector<double> risk(n), time(n);
    std::vector<std::uint8_t> event(n);
    for (int i = 0; i < n; ++i) {
      risk[i] = std::round(4 * s.normal());
      time[i] = std::round(30 * s.uniform()) + 1;
      event[i] = s.uniform() < 0.7;
    }
    time[0] = 0.5;
    event[0] = 1;
    double num = 0, den = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        if (time[i] == time[j]) continue;
        const int e = time[i] < time[j] ? i : j, l = e == i ? j : i;
        if (!event[e]) continue;
        den += 1;
        num += risk[e] > risk[l] ? 1.0 : risk[e] == risk[l] ? 0.5 : 0.0;
      }
    c_mismatch += harrell_c(risk, time, event) != num / den;
  }

  const ScenarioSpec spec = desk_ks1();
  const auto cells = expand_cells(spec);
  double worst_ibs = 0.0;
  for (int id : {0, 20, 47, 74}) {
    const double beta0 = calibrated_beta0(cells[id], spec);
    for (int r = 0; r < 3; ++r) {
      Stream ts = derive_stream(kSeed, 4100 + static_cast<std::uint64_t>(id), static_cast<std::uint64_t>(r));
      const LandmarkDataset d = rebaseline(simulate_trial(cells[id], spec, beta0, r, ts), spec.t_star);
      SurvivalSample with_y{d.time, d.event, Eigen::Map<const Eigen::VectorXd>(d.y.data(), d.size()), {}};
      const CoxFit fit = fit_cox(with_y);
      CoxPrediction pred{breslow_baseline(fit, with_y).at(0), {}};
      for (double y : d.y) pred.relative_risk.push_back(std::exp(fit.coefficients[0] * y));
      SurvivalSample flipped{d.time, d.event, Eigen::MatrixXd(d.size(), 0), {}};
      for (auto& e : flipped.event) e = !e;
      const StepFunction g = breslow_baseline(fit_cox(flipped), flipped).at(0);
      const double tau = quantile(d.time, 0.95);
      double oracle = 0.0;
      const int steps = 10000;
      for (int k = 0; k < steps; ++k) {
        const double t = (k + 0.5) * tau / steps;
        double sum = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) {
          const double sv = std::pow(pred.baseline(t), pred.relative_risk[i]);
          if (d.time[i] > t) sum += (1 - sv) * (1 - sv) / g(t);
          else if (d.event[i]) sum += sv * sv / g.left_limit(d.time[i]);
        }
        oracle += sum / d.size();
      }
      oracle /= steps;
      worst_ibs = std::max(worst_ibs, std::abs(integrated_brier(d, pred, g, tau) / oracle - 1.0));
    }
  }

  const std::vector<double> t{1, 2, 3, 5};
  const std::vector<std::uint8_t> ev{1, 0, 1, 0}, flipped{0, 1, 0, 1};
  const double golden = brier_at(4.0, t, ev, std::vector<double>{0.8, 0.6, 0.5, 0.3}, km_estimate(t, flipped));
  const double golden_err = std::abs(golden - 0.4375);

  report(4, c_mismatch == 0 && worst_ibs < 1e-3 && golden_err <= 1e-12,
         "C mismatches " + std::to_string(c_mismatch) + "/100, IBS max rel. error " + fmt(worst_ibs) +
             ", golden Brier error " + fmt(golden_err));
}

std::map<std::string, std::pair<double, bool>> read_checks(const fs::path& run) {
  const auto doc = csv::Document::read(run / "summary_patterns.csv");
  std::map<std::string, std::pair<double, bool>> out;
  for (std::size_t i = 0; i < doc.rows(); ++i)
    out[std::string(doc.field(i, 0))] = {doc.number(i, 2), doc.field(i, 3) == "1"};
  return out;
}

void pattern_criterion(int id, const std::map<std::string, std::pair<double, bool>>& checks,
                       const std::string& prefix) {
  bool pass = true;
  int n = 0;
  std::string detail;
  for (const auto& [name, value] : checks) {
    if (name.rfind("Ks1:" + prefix, 0) != 0) continue;
    ++n;
    pass = pass && value.second;
    detail += (detail.empty() ? "" : ", ") + name.substr(4) + "=" + fmt(value.first);
  }
  report(id, pass && n > 0, detail);
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = csv::read_file(e.path());
  return out;
}

int run_all(const fs::path& out, int threads) {
  fs::remove_all(out);
  const std::string cmd = std::string(SURROSIM_CLI) + " all --scenario Ks1 --profile desk --seed " +
                          std::to_string(kSeed) + " --threads " + std::to_string(threads) +
                          " --out " + out.string() + " 2> " + out.string() + ".log";
  return std::system(cmd.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "surrosim_acceptance";
  fs::create_directories(work);
  const fs::path run1 = work / "run_threads1", run2 = work / "run_threads3";

  const auto start = std::chrono::steady_clock::now();
  if (run_all(run1, 1) != 0) {
    std::printf("pipeline run failed; see %s.log\n", run1.string().c_str());
    return 1;
  }
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  std::printf("desk Ks1 'all' run: %.2f minutes on 1 thread\n", minutes);

  criterion1();
  criterion2();
  criterion3(run1);
  criterion4();
  const auto checks = read_checks(run1);
  pattern_criterion(5, checks, "null.");
  pattern_criterion(6, checks, "plateau.");
  pattern_criterion(7, checks, "agreement.");
  pattern_criterion(8, checks, "trial_null.");
  pattern_criterion(9, checks, "decay.");

  const bool second_ok = run_all(run2, 3) == 0;
  bool identical = second_ok;
  std::string detail = second_ok ? "" : "second run failed";
  if (second_ok) {
    const auto a = tree(run1), b = tree(run2);
    identical = a.size() == b.size();
    for (const auto& [name, text] : a) {
      const auto it = b.find(name);
      if (it == b.end() || it->second != text) {
        identical = false;
        detail += " differs:" + name;
      }
    }
    detail = std::to_string(a.size()) + " files compared (threads 1 vs 3)" + detail;
  }
  report(10, identical, detail);
  fs::remove_all(run2);

  std::printf("%s: %d criteria failed\n", failures ? "FAIL" : "PASS", failures);
  csv::write_file_atomic(work / "acceptance_summary.txt", summary);
  return failures ? 1 : 0;
}
