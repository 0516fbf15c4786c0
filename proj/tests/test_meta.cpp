#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "doctest.h"
#include "surrosim/meta.hpp"

using namespace surrosim;

namespace {

Trial two_arm_trial(const std::vector<double>& y0, const std::vector<double>& y1) {
  Trial t;
  t.censor_time = 100.0;
  int id = 0;
  for (int arm = 0; arm < 2; ++arm)
    for (double y : arm ? y1 : y0) {
      Patient p;
      p.id = id;
      p.arm = arm;
      p.time = 20.0 + id;
      p.event = id % 3 != 0;
      p.surrogate.observed_y = y;
      t.patients.push_back(p);
      ++id;
    }
  return t;
}

std::vector<PoolEntry> synthetic_pool(int replicates, Stream& s) {
  ScenarioSpec spec = preset("Ks1");
  std::vector<PoolEntry> pool;
  for (const auto& cell : expand_cells(spec))
    for (int r = 0; r < replicates; ++r) {
      PoolEntry e;
      e.cell = cell;
      e.replicate = r;
      e.effect = {TrialKey{cell.cell_index, r}, s.normal() * 0.2, s.normal() * 0.05};
      if (r % 7 != 3) {
        StudyMetrics m;
        m.c_index = 0.5 + 0.05 * cell.alpha + 0.01 * s.normal();
        m.scaled_ibs = 0.1 * s.uniform();
        e.metrics = m;
      }
      pool.push_back(e);
    }
  return pool;
}

}  // namespace

TEST_CASE("median") {
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 3, 2}) == 2.5);
  CHECK_THROWS(median({}));
}

TEST_CASE("trial effects on handmade trials") {
  const std::vector<double> y{-0.3, -0.1, 0.2, 0.05, 0.0};
  const TrialEffect same = trial_effects(two_arm_trial(y, y), 8.0);
  CHECK(same.delta_median_se == 0.0);

  // No early events: plain difference of medians.
  const TrialEffect plain = trial_effects(two_arm_trial({1, 2, 3}, {5, 6, 7, 8}), 8.0);
  CHECK(plain.delta_median_se == doctest::Approx(6.5 - 2.0));

  // An early death in the active arm takes the maximum y among those at risk.
  Trial early = two_arm_trial({1, 2, 3}, {0.5, 1.5, 9});
  early.patients[3].time = 4.0;
  early.patients[3].event = true;
  early.patients[5].time = 6.0;
  early.patients[5].event = true;
  // At risk: y = 1, 2, 3, 1.5 -> max 3; active becomes {3, 1.5, 3}.
  CHECK(trial_effects(early, 8.0).delta_median_se == doctest::Approx(3.0 - 2.0));
}

TEST_CASE("marginal log HR recovers beta1 when alpha = 0") {
  ScenarioSpec spec = preset("Ks1");
  apply_profile(spec, profile_by_name("desk"));
  const auto cells = expand_cells(spec);
  for (int idx : {5, 10}) {
    const SimulationCell& cell = cells[idx];
    REQUIRE(cell.alpha == 0.0);
    Stream cs = derive_stream(41, static_cast<std::uint64_t>(idx), kCalibrationReplicate);
    const double beta0 = calibrate_beta0(cell, spec, cs).beta0;
    double sum = 0.0;
    for (int r = 0; r < 100; ++r) {
      Stream s = derive_stream(41, static_cast<std::uint64_t>(idx), static_cast<std::uint64_t>(r));
      sum += trial_effects(simulate_trial(cell, spec, beta0, r, s), spec.t_star).log_hr_os;
    }
    const double tolerance = cell.beta1 == -0.3 ? 0.05 : 0.07;
    CHECK(std::abs(sum / 100 - cell.beta1) <= tolerance);
  }
}

TEST_CASE("R squared") {
  CHECK(fit_r2(std::vector<double>{0, 1, 2}, std::vector<double>{0, -0.2, -0.4}).r2 ==
        doctest::Approx(1.0));
  CHECK(fit_r2(std::vector<double>{0, 1, 2}, std::vector<double>{0, 1, 0}).r2 == doctest::Approx(0.0));
  const auto flat = fit_r2(std::vector<double>{1, 1, 1}, std::vector<double>{0, 2, 5});
  CHECK(flat.degenerate);
  CHECK(flat.r2 == 0.0);
  CHECK_THROWS_AS(fit_r2(std::vector<double>{1, 2}, std::vector<double>{1, 2}), MetaError);

  Stream s = derive_stream(42, 0, 0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> x(15), y(15), xs(15), ys(15);
    for (int i = 0; i < 15; ++i) {
      x[i] = s.normal();
      y[i] = 0.3 * x[i] + s.normal();
      xs[i] = -4.0 * x[i] + 7.0;
      ys[i] = 0.01 * y[i] - 2.0;
    }
    const double r2 = fit_r2(x, y).r2;
    CHECK(r2 >= 0.0);
    CHECK(r2 <= 1.0);
    CHECK(std::abs(r2 - std::pow(pearson(x, y), 2)) <= 1e-12);
    CHECK(fit_r2(xs, ys).r2 == doctest::Approx(r2).epsilon(1e-10));
  }
}

TEST_CASE("Spearman") {
  CHECK(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{10, 20, 30}) == doctest::Approx(1.0));
  // d^2 sums to 4, so rho = 1 - 6*4 / (4*15).
  CHECK(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{2, 1, 4, 3}) == doctest::Approx(0.6));
  CHECK(spearman(std::vector<double>{1, 2, 2, 3}, std::vector<double>{1, 2, 3, 4}) ==
        doctest::Approx(pearson(std::vector<double>{1, 2.5, 2.5, 4}, std::vector<double>{1, 2, 3, 4})));
  CHECK_THROWS_AS(spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), MetaError);
  CHECK_THROWS_AS(spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2}), MetaError);

  Stream s = derive_stream(43, 0, 0);
  std::vector<double> x(30), y(30), tx(30);
  for (int i = 0; i < 30; ++i) {
    x[i] = s.normal();
    y[i] = x[i] + s.normal();
    tx[i] = std::exp(3 * x[i]);
  }
  CHECK(spearman(tx, y) == doctest::Approx(spearman(x, y)).epsilon(1e-14));
  CHECK(spearman(x, x) == doctest::Approx(1.0));
}

TEST_CASE("fixed-beta1 pairs") {
  Stream s = derive_stream(44, 0, 0);
  const auto pool = synthetic_pool(10, s);
  std::map<TrialKey, const PoolEntry*> by_key;
  for (const auto& e : pool) by_key[e.effect.key] = &e;

  for (int dups : {3, 1}) {
    const auto pairs = assemble_pairs(pool, PairMode::fixed_beta1, dups, 20, 99);
    CHECK(pairs.size() == 15 * 20);
    for (const auto& p : pairs) {
      REQUIRE(p.beta1.has_value());
      CHECK(p.meta_size == 5 * dups);
      CHECK(std::set<TrialKey>(p.members.begin(), p.members.end()).size() == p.members.size());
      std::map<double, int> per_mean;
      for (const auto& k : p.members) {
        const PoolEntry& e = *by_key.at(k);
        CHECK(e.cell.alpha == p.alpha);
        CHECK(e.cell.beta1 == *p.beta1);
        ++per_mean[e.cell.ks_active_mean];
      }
      CHECK(per_mean.size() == 5);
      for (const auto& [mean, count] : per_mean) CHECK(count == dups);
      CHECK(std::find(p.members.begin(), p.members.end(), p.discovery_key) == p.members.end());
      const PoolEntry& d = *by_key.at(p.discovery_key);
      CHECK(d.metrics.has_value());
      CHECK(d.cell.alpha == p.alpha);
      CHECK(d.cell.beta1 == *p.beta1);
      CHECK(p.r2 >= 0.0);
      CHECK(p.r2 <= 1.0);
    }
  }

  const auto a = assemble_pairs(pool, PairMode::fixed_beta1, 3, 5, 7);
  const auto b = assemble_pairs(pool, PairMode::fixed_beta1, 3, 5, 7);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].members == b[i].members);
    CHECK(a[i].r2 == b[i].r2);
    CHECK(a[i].discovery_key == b[i].discovery_key);
  }
  CHECK_THROWS_AS(assemble_pairs(synthetic_pool(3, s), PairMode::fixed_beta1, 3, 1, 1), MetaError);
}

TEST_CASE("mixed-beta1 pairs") {
  Stream s = derive_stream(45, 0, 0);
  const auto pool = synthetic_pool(6, s);
  std::map<TrialKey, const PoolEntry*> by_key;
  for (const auto& e : pool) by_key[e.effect.key] = &e;
  const auto pairs = assemble_pairs(pool, PairMode::mixed_beta1, 1, 30, 5);
  CHECK(pairs.size() == 5 * 30);
  std::set<double> discovery_beta1;
  for (const auto& p : pairs) {
    CHECK_FALSE(p.beta1.has_value());
    CHECK(p.meta_size == 15);
    std::set<std::pair<double, double>> combos;
    for (const auto& k : p.members) {
      const PoolEntry& e = *by_key.at(k);
      CHECK(e.cell.alpha == p.alpha);
      combos.insert({e.cell.beta1, e.cell.ks_active_mean});
    }
    CHECK(combos.size() == 15);
    CHECK(by_key.at(p.discovery_key)->cell.alpha == p.alpha);
    CHECK(std::find(p.members.begin(), p.members.end(), p.discovery_key) == p.members.end());
    discovery_beta1.insert(p.discovery_beta1);
  }
  CHECK(discovery_beta1.size() == 3);
}

TEST_CASE("correlation report") {
  Stream s = derive_stream(46, 0, 0);
  const auto pool = synthetic_pool(8, s);
  const auto pairs = assemble_pairs(pool, PairMode::fixed_beta1, 1, 10, 3);
  const auto rows = correlation_report(pairs, default_alpha_filters());
  CHECK(rows.size() == 4 * 3 * 3);
  for (const auto& r : rows) {
    if (r.alpha_filter == "all") CHECK(r.n_pairs == 50);
    if (r.alpha_filter == "alpha>0") CHECK(r.n_pairs == 40);
    if (r.alpha_filter == "alpha>=2") CHECK(r.n_pairs == 30);
  }
  const auto filters = default_alpha_filters();
  CHECK_FALSE(filters[2].keep(0.0));
  CHECK_FALSE(filters[2].keep(0.5));
  CHECK(filters[2].keep(2.0));
}

TEST_CASE("labels") {
  CHECK(format_beta1(0.0) == "0");
  CHECK(format_beta1(-0.0) == "0");
  CHECK(format_beta1(-0.3) == "-0.3");
  CHECK(parse_pair_mode("mixed") == PairMode::mixed_beta1);
  CHECK(std::string(to_string(PairMode::fixed_beta1)) == "fixed");
  CHECK_THROWS(parse_pair_mode("other"));
}
