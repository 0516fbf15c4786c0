#include "surrosim/meta.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace surrosim {

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty sample");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lower + upper);
}

TrialEffect trial_effects(const Trial& trial, double t_star) {
  TrialEffect eff;
  eff.key = {trial.cell.cell_index, trial.replicate};
  const std::size_t n = trial.patients.size();

  SurvivalSample sample;
  sample.time.reserve(n);
  sample.event.reserve(n);
  sample.covariates.resize(static_cast<Eigen::Index>(n), 1);
  for (std::size_t i = 0; i < n; ++i) {
    const Patient& p = trial.patients[i];
    sample.time.push_back(p.time);
    sample.event.push_back(p.event ? 1 : 0);
    sample.covariates(static_cast<Eigen::Index>(i), 0) = p.arm;
  }
  const CoxFit fit = fit_cox(sample);
  eff.log_hr_os = fit.coefficients.size() == 1 ? fit.coefficients[0] : 0.0;

  double max_at_risk = -std::numeric_limits<double>::infinity();
  for (const auto& p : trial.patients)
    if (!(p.event && p.time <= t_star)) max_at_risk = std::max(max_at_risk, p.surrogate.observed_y);
  if (!std::isfinite(max_at_risk)) throw MetaError("no patient at risk at t_star");

  std::vector<double> y[2];
  for (const auto& p : trial.patients) {
    const bool early = p.event && p.time <= t_star;
    y[p.arm].push_back(early ? max_at_risk : p.surrogate.observed_y);
  }
  if (y[0].empty() || y[1].empty()) throw MetaError("trial lacks one of the arms");
  eff.delta_median_se = median(y[1]) - median(y[0]);
  return eff;
}

R2Result fit_r2(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_r2: lengths differ");
  if (x.size() < 3) throw MetaError("fit_r2: need at least 3 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) return {0.0, true};
  if (syy == 0.0) return {1.0, false};
  const double slope = sxy / sxx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - my - slope * (x[i] - mx);
    ss_res += r * r;
  }
  return {std::clamp(1.0 - ss_res / syy, 0.0, 1.0), false};
}

R2Result fit_r2(std::span<const TrialEffect> effects) {
  std::vector<double> x, y;
  for (const auto& e : effects) {
    x.push_back(e.delta_median_se);
    y.push_back(e.log_hr_os);
  }
  return fit_r2(x, y);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson: lengths differ");
  if (x.size() < 3) throw MetaError("correlation needs at least 3 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw MetaError("correlation undefined: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

namespace {

std::vector<double> mid_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t k = 0; k < idx.size();) {
    std::size_t j = k;
    while (j < idx.size() && v[idx[j]] == v[idx[k]]) ++j;
    const double r = 0.5 * static_cast<double>(k + j - 1) + 1.0;
    for (std::size_t m = k; m < j; ++m) ranks[idx[m]] = r;
    k = j;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: lengths differ");
  const std::vector<double> rx = mid_ranks(x), ry = mid_ranks(y);
  return pearson(rx, ry);
}

const char* to_string(PairMode mode) {
  return mode == PairMode::fixed_beta1 ? "fixed" : "mixed";
}

PairMode parse_pair_mode(std::string_view text) {
  if (text == "fixed" || text == "fixed_beta1") return PairMode::fixed_beta1;
  if (text == "mixed" || text == "mixed_beta1") return PairMode::mixed_beta1;
  throw std::invalid_argument("unknown pairing mode '" + std::string(text) + "'");
}

std::string format_beta1(double beta1) {
  if (beta1 == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, beta1);
  return std::string(buf, res.ptr);
}

namespace {

struct Stratum {
  double alpha = 0.0;
  std::optional<double> beta1;
  // Sampling groups (active mean, or (beta1, active mean)) in pool order.
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> entries;
};

// First `k` positions of a partial Fisher-Yates shuffle of `items`.
std::vector<std::size_t> sample_without_replacement(std::vector<std::size_t> items, int k,
                                                    Stream& stream) {
  for (int i = 0; i < k; ++i) {
    const std::size_t j = static_cast<std::size_t>(i) + stream.uniform_index(items.size() - i);
    std::swap(items[static_cast<std::size_t>(i)], items[j]);
  }
  items.resize(static_cast<std::size_t>(k));
  return items;
}

}  // namespace

std::vector<MetaPair> assemble_pairs(std::span<const PoolEntry> pool, PairMode mode, int dups,
                                     int n_pairs, std::uint64_t seed) {
  if (dups < 1) throw MetaError("dups must be at least 1");
  if (n_pairs < 1) throw MetaError("n_pairs must be at least 1");

  // Group the pool into strata and sampling groups, keeping first-appearance order.
  std::vector<Stratum> strata;
  std::vector<std::vector<std::tuple<double, double, double>>> group_keys;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const SimulationCell& c = pool[i].cell;
    const std::optional<double> b1 =
        mode == PairMode::fixed_beta1 ? std::optional<double>(c.beta1) : std::nullopt;
    auto it = std::find_if(strata.begin(), strata.end(),
                           [&](const Stratum& s) { return s.alpha == c.alpha && s.beta1 == b1; });
    if (it == strata.end()) {
      strata.push_back({c.alpha, b1, {}, {}});
      group_keys.emplace_back();
      it = strata.end() - 1;
    }
    auto& keys = group_keys[static_cast<std::size_t>(it - strata.begin())];
    const auto key = std::make_tuple(c.beta1, c.ks_active_mean, c.kg_active_mean);
    auto g = std::find(keys.begin(), keys.end(), key);
    if (g == keys.end()) {
      keys.push_back(key);
      it->groups.emplace_back();
      g = keys.end() - 1;
    }
    it->groups[static_cast<std::size_t>(g - keys.begin())].push_back(i);
    it->entries.push_back(i);
  }

  std::vector<MetaPair> out;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    const Stratum& st = strata[s];
    for (const auto& g : st.groups)
      if (g.size() < static_cast<std::size_t>(dups) + 1)
        throw MetaError("insufficient pool: a sampling group at alpha=" + format_beta1(st.alpha) +
                        " has " + std::to_string(g.size()) + " trials, need " +
                        std::to_string(dups + 1));
    std::vector<double> beta1_values;
    for (std::size_t i : st.entries)
      if (std::find(beta1_values.begin(), beta1_values.end(), pool[i].cell.beta1) ==
          beta1_values.end())
        beta1_values.push_back(pool[i].cell.beta1);

    Stream stream = derive_stream(seed, s, 0);
    for (int k = 0; k < n_pairs; ++k) {
      MetaPair pair;
      pair.mode = mode;
      pair.alpha = st.alpha;
      pair.beta1 = st.beta1;
      pair.pair_id = k;
      std::set<std::size_t> members;
      std::vector<TrialEffect> effects;
      for (const auto& g : st.groups) {
        for (std::size_t i : sample_without_replacement(g, dups, stream)) {
          members.insert(i);
          effects.push_back(pool[i].effect);
          pair.members.push_back({pool[i].cell.cell_index, pool[i].replicate});
        }
      }
      pair.meta_size = static_cast<int>(effects.size());
      const R2Result r2 = fit_r2(effects);
      pair.r2 = r2.r2;
      pair.r2_degenerate = r2.degenerate;

      double discovery_beta1 = st.beta1.value_or(0.0);
      if (mode == PairMode::mixed_beta1)
        discovery_beta1 = beta1_values[stream.uniform_index(beta1_values.size())];
      std::vector<std::size_t> candidates;
      for (std::size_t i : st.entries)
        if (!members.count(i) && pool[i].metrics && pool[i].cell.beta1 == discovery_beta1)
          candidates.push_back(i);
      if (candidates.empty())
        throw MetaError("insufficient pool: no usable discovery study outside the meta set");
      const std::size_t d = candidates[stream.uniform_index(candidates.size())];
      pair.discovery_key = {pool[d].cell.cell_index, pool[d].replicate};
      pair.discovery_beta1 = pool[d].cell.beta1;
      pair.discovery = *pool[d].metrics;
      out.push_back(std::move(pair));
    }
  }
  return out;
}

std::vector<AlphaFilter> default_alpha_filters() {
  return {
      {"all", [](double) { return true; }},
      {"alpha>0", [](double a) { return a > 0.0; }},
      {"alpha>=2", [](double a) { return a >= 2.0; }},
  };
}

double metric_value(const StudyMetrics& m, std::string_view metric) {
  if (metric == "c_index") return m.c_index;
  if (metric == "scaled_ibs") return m.scaled_ibs;
  if (metric == "ibs") return m.ibs;
  if (metric == "log_hr_se") return m.log_hr_se;
  throw std::invalid_argument("unknown patient-level metric '" + std::string(metric) + "'");
}

std::vector<CorrelationRow> correlation_report(std::span<const MetaPair> pairs,
                                               const std::vector<AlphaFilter>& filters) {
  std::vector<std::string> strata;
  auto stratum_of = [](const MetaPair& p) {
    return p.beta1 ? format_beta1(*p.beta1) : std::string("mixed");
  };
  for (const auto& p : pairs) {
    const std::string s = stratum_of(p);
    if (std::find(strata.begin(), strata.end(), s) == strata.end()) strata.push_back(s);
  }
  std::vector<CorrelationRow> rows;
  for (const auto& metric : patient_metric_names()) {
    for (const auto& filter : filters) {
      for (const auto& s : strata) {
        std::vector<double> x, y;
        for (const auto& p : pairs) {
          if (stratum_of(p) != s || !filter.keep(p.alpha)) continue;
          x.push_back(metric_value(p.discovery, metric));
          y.push_back(p.r2);
        }
        CorrelationRow row{metric, filter.name, s, std::numeric_limits<double>::quiet_NaN(),
                           static_cast<int>(x.size()), false};
        try {
          row.rho = spearman(x, y);
          row.defined = true;
        } catch (const MetaError&) {
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

}  // namespace surrosim
