#include "surrosim/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <tuple>

#include "surrosim/csv.hpp"

namespace surrosim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v, int digits = 6) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// Index of `value` in `order`, appending it when new.
template <class T>
std::size_t ordinal(std::vector<T>& order, const T& value) {
  auto it = std::find(order.begin(), order.end(), value);
  if (it != order.end()) return static_cast<std::size_t>(it - order.begin());
  order.push_back(value);
  return order.size() - 1;
}

}  // namespace

std::vector<std::string> metrics_csv_columns() {
  return {"scenario", "cell_index", "alpha",      "beta1",     "ks_mean_active",
          "kg_mean_active", "replicate", "c_index", "ibs", "scaled_ibs",
          "log_hr_se", "excluded_count", "tau", "ibs_null", "status"};
}

std::vector<std::string> pairs_csv_columns() {
  return {"scenario", "mode", "alpha", "beta1_or_mixed", "pair_id", "r2", "c_index", "ibs",
          "scaled_ibs", "log_hr_se", "dups", "meta_size", "discovery_cell",
          "discovery_replicate", "discovery_beta1"};
}

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path) {
  const csv::Document doc = csv::Document::read(path);
  const auto c_scen = doc.column("scenario"), c_cell = doc.column("cell_index"),
             c_alpha = doc.column("alpha"), c_beta1 = doc.column("beta1"),
             c_ks = doc.column("ks_mean_active"), c_kg = doc.column("kg_mean_active"),
             c_rep = doc.column("replicate"), c_c = doc.column("c_index"), c_ibs = doc.column("ibs"),
             c_sibs = doc.column("scaled_ibs"), c_lhr = doc.column("log_hr_se"),
             c_exc = doc.column("excluded_count"), c_tau = doc.column("tau"),
             c_null = doc.column("ibs_null"), c_status = doc.column("status");
  std::vector<MetricsRecord> out;
  out.reserve(doc.rows());
  for (std::size_t r = 0; r < doc.rows(); ++r) {
    MetricsRecord m;
    m.scenario = std::string(doc.field(r, c_scen));
    m.cell_index = static_cast<int>(doc.integer(r, c_cell));
    m.alpha = doc.number(r, c_alpha);
    m.beta1 = doc.number(r, c_beta1);
    m.ks_mean_active = doc.number(r, c_ks);
    m.kg_mean_active = doc.number(r, c_kg);
    m.replicate = static_cast<int>(doc.integer(r, c_rep));
    m.usable = doc.field(r, c_status) == "ok";
    m.metrics.c_index = doc.number(r, c_c);
    m.metrics.ibs = doc.number(r, c_ibs);
    m.metrics.scaled_ibs = doc.number(r, c_sibs);
    m.metrics.log_hr_se = doc.number(r, c_lhr);
    m.metrics.excluded_count = static_cast<int>(doc.integer(r, c_exc));
    m.metrics.tau = doc.number(r, c_tau);
    m.metrics.ibs_null = doc.number(r, c_null);
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<PairRecord> read_pairs_csv(const std::filesystem::path& path) {
  const csv::Document doc = csv::Document::read(path);
  const auto c_scen = doc.column("scenario"), c_mode = doc.column("mode"),
             c_alpha = doc.column("alpha"), c_b1 = doc.column("beta1_or_mixed"),
             c_id = doc.column("pair_id"), c_r2 = doc.column("r2"), c_c = doc.column("c_index"),
             c_ibs = doc.column("ibs"), c_sibs = doc.column("scaled_ibs"),
             c_lhr = doc.column("log_hr_se"), c_dups = doc.column("dups"),
             c_size = doc.column("meta_size");
  std::vector<PairRecord> out;
  out.reserve(doc.rows());
  for (std::size_t r = 0; r < doc.rows(); ++r) {
    PairRecord p;
    p.scenario = std::string(doc.field(r, c_scen));
    p.mode = std::string(doc.field(r, c_mode));
    p.alpha = doc.number(r, c_alpha);
    p.beta1_label = std::string(doc.field(r, c_b1));
    p.pair_id = static_cast<int>(doc.integer(r, c_id));
    p.r2 = doc.number(r, c_r2);
    p.discovery.c_index = doc.number(r, c_c);
    p.discovery.ibs = doc.number(r, c_ibs);
    p.discovery.scaled_ibs = doc.number(r, c_sibs);
    p.discovery.log_hr_se = doc.number(r, c_lhr);
    p.dups = static_cast<int>(doc.integer(r, c_dups));
    p.meta_size = static_cast<int>(doc.integer(r, c_size));
    out.push_back(std::move(p));
  }
  return out;
}

Quartiles quartiles(const std::vector<double>& values) {
  return {quantile(values, 0.25), quantile(values, 0.5), quantile(values, 0.75)};
}

std::vector<SummaryRow> metric_boxplots(const std::vector<MetricsRecord>& records) {
  std::vector<std::string> scenarios;
  std::vector<double> betas;
  std::map<std::tuple<std::size_t, double, std::size_t>, std::vector<const MetricsRecord*>> groups;
  for (const auto& r : records) {
    if (!r.usable) continue;
    groups[{ordinal(scenarios, r.scenario), r.alpha, ordinal(betas, r.beta1)}].push_back(&r);
  }
  std::vector<SummaryRow> out;
  for (const auto& metric : patient_metric_names()) {
    for (const auto& [key, members] : groups) {
      std::vector<double> v;
      for (const auto* m : members) v.push_back(metric_value(m->metrics, metric));
      SummaryRow row;
      row.scenario = scenarios[std::get<0>(key)];
      row.alpha = std::get<1>(key);
      row.beta1_label = format_beta1(betas[std::get<2>(key)]);
      row.metric = metric;
      row.q = quartiles(v);
      row.n = static_cast<int>(v.size());
      out.push_back(std::move(row));
    }
  }
  return out;
}

std::vector<WithinCellRow> within_cell_correlations(const std::vector<MetricsRecord>& records) {
  std::vector<std::string> scenarios;
  std::vector<double> betas;
  std::map<std::pair<std::size_t, int>, std::vector<const MetricsRecord*>> cells;
  std::map<std::tuple<std::size_t, std::size_t, double, double>, std::vector<const MetricsRecord*>>
      pooled;
  for (const auto& r : records) {
    if (!r.usable) continue;
    const std::size_t s = ordinal(scenarios, r.scenario);
    cells[{s, r.cell_index}].push_back(&r);
    pooled[{s, ordinal(betas, r.beta1), r.ks_mean_active, r.kg_mean_active}].push_back(&r);
  }

  std::vector<WithinCellRow> out;
  auto emit = [&](const std::string& scenario, const std::string& family,
                  const std::string& alpha_label, const MetricsRecord& proto,
                  const std::vector<const MetricsRecord*>& members) {
    std::vector<double> c;
    for (const auto* m : members) c.push_back(m->metrics.c_index);
    for (const auto& metric : patient_metric_names()) {
      if (metric == "c_index") continue;
      std::vector<double> v;
      for (const auto* m : members) v.push_back(metric_value(m->metrics, metric));
      WithinCellRow row{scenario, family, alpha_label, proto.beta1, proto.ks_mean_active,
                        proto.kg_mean_active, metric, static_cast<int>(members.size()), kNaN, kNaN};
      try {
        row.spearman = spearman(c, v);
        row.pearson = pearson(c, v);
      } catch (const MetaError&) {
      }
      out.push_back(std::move(row));
    }
  };
  for (const auto& [key, members] : cells)
    emit(scenarios[key.first], "fixed", format_beta1(members.front()->alpha), *members.front(),
         members);
  for (const auto& [key, members] : pooled)
    emit(scenarios[std::get<0>(key)], "alpha_varying", "varying", *members.front(), members);
  return out;
}

std::vector<CorrelationSummaryRow> summarize_correlations(const std::vector<WithinCellRow>& rows) {
  std::vector<std::tuple<std::string, std::string, std::string>> order;
  std::map<std::size_t, std::vector<double>> values;
  for (const auto& r : rows) {
    const std::size_t k = ordinal(order, std::make_tuple(r.scenario, r.family, r.metric));
    if (!std::isnan(r.spearman)) values[k].push_back(std::abs(r.spearman));
    else values[k];
  }
  std::vector<CorrelationSummaryRow> out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& v = values[k];
    CorrelationSummaryRow row{std::get<0>(order[k]), std::get<1>(order[k]), std::get<2>(order[k]),
                              {kNaN, kNaN, kNaN}, static_cast<int>(v.size())};
    if (!v.empty()) row.abs_spearman = quartiles(v);
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<R2SummaryRow> r2_summaries(const std::vector<PairRecord>& pairs) {
  std::vector<std::tuple<std::string, std::string, int>> sets;
  std::vector<std::string> labels;
  std::map<std::tuple<std::size_t, double, std::size_t>, std::vector<double>> groups;
  for (const auto& p : pairs)
    groups[{ordinal(sets, std::make_tuple(p.scenario, p.mode, p.meta_size)), p.alpha,
            ordinal(labels, p.beta1_label)}]
        .push_back(p.r2);
  std::vector<R2SummaryRow> out;
  for (const auto& [key, v] : groups) {
    const auto& set = sets[std::get<0>(key)];
    out.push_back({std::get<0>(set), std::get<1>(set), std::get<2>(set), std::get<1>(key),
                   labels[std::get<2>(key)], quartiles(v), static_cast<int>(v.size())});
  }
  return out;
}

std::vector<PatternCheck> pattern_checks(const std::string& scenario,
                                         const std::vector<MetricsRecord>& records,
                                         const std::vector<PairRecord>& fixed15,
                                         const std::vector<PairRecord>& fixed5) {
  std::vector<const MetricsRecord*> rs;
  for (const auto& r : records)
    if (r.scenario == scenario && r.usable) rs.push_back(&r);

  std::vector<PatternCheck> checks;
  auto add = [&](std::string id, std::string desc, double value, bool pass) {
    checks.push_back({std::move(id), std::move(desc), value, pass});
  };
  auto mean_of = [&](auto pred, auto get) {
    double s = 0.0;
    int n = 0;
    for (const auto* r : rs)
      if (pred(*r)) {
        s += get(*r);
        ++n;
      }
    return n ? s / n : kNaN;
  };
  auto values_of = [&](auto pred, auto get) {
    std::vector<double> v;
    for (const auto* r : rs)
      if (pred(*r)) v.push_back(get(*r));
    return v;
  };
  auto safe_median = [](const std::vector<double>& v) { return v.empty() ? kNaN : median(v); };

  // Null association at alpha = 0, beta1 = 0.
  auto is_null = [](const MetricsRecord& r) { return r.alpha == 0.0 && r.beta1 == 0.0; };
  const double mean_c = mean_of(is_null, [](const MetricsRecord& r) { return r.metrics.c_index; });
  const double mean_sibs = mean_of(is_null, [](const MetricsRecord& r) { return r.metrics.scaled_ibs; });
  const double mean_lhr = mean_of(is_null, [](const MetricsRecord& r) { return r.metrics.log_hr_se; });
  add("null.c_index", "alpha=0,beta1=0 mean C in [0.48, 0.52]", mean_c, mean_c >= 0.48 && mean_c <= 0.52);
  add("null.scaled_ibs", "alpha=0,beta1=0 mean scaled IBS in [-0.05, 0.05]", mean_sibs,
      mean_sibs >= -0.05 && mean_sibs <= 0.05);
  add("null.log_hr_se", "alpha=0,beta1=0 |mean log HR of SE| < 0.1", mean_lhr, std::abs(mean_lhr) < 0.1);

  // Plateau of C once alpha reaches 2.
  auto c_at = [&](double alpha) {
    return safe_median(values_of([&](const MetricsRecord& r) { return r.beta1 == 0.0 && r.alpha == alpha; },
                                 [](const MetricsRecord& r) { return r.metrics.c_index; }));
  };
  const double c2 = c_at(2.0), c6 = c_at(6.0);
  add("plateau.c_alpha2", "beta1=0 median C at alpha=2 in [0.65, 0.85]", c2, c2 >= 0.65 && c2 <= 0.85);
  add("plateau.c_gain", "beta1=0 median C(alpha=6) - median C(alpha=2) <= 0.10", c6 - c2, c6 - c2 <= 0.10);

  // Metric agreement.
  const auto within = within_cell_correlations(records);
  double min_pearson = std::numeric_limits<double>::infinity();
  int n_cells = 0;
  for (const auto& w : within)
    if (w.scenario == scenario && w.family == "fixed" && w.metric == "scaled_ibs" &&
        std::stod(w.alpha_label) >= 0.5) {
      min_pearson = std::min(min_pearson, std::isnan(w.pearson) ? -1.0 : w.pearson);
      ++n_cells;
    }
  if (n_cells == 0) min_pearson = kNaN;
  add("agreement.within_cell_pearson", "min within-cell Pearson(C, scaled IBS) over alpha>=0.5 cells >= 0.85",
      min_pearson, n_cells > 0 && min_pearson >= 0.85);
  for (const auto& s : summarize_correlations(within)) {
    if (s.scenario != scenario || s.family != "alpha_varying") continue;
    add("agreement.alpha_varying." + s.metric,
        "alpha-varying median |Spearman(C, " + s.metric + ")| >= 0.9", s.abs_spearman.median,
        s.abs_spearman.median >= 0.9);
  }

  // Trial-level null.
  auto null_r2 = [&](const std::vector<PairRecord>& pairs) {
    std::vector<double> v;
    for (const auto& p : pairs)
      if (p.scenario == scenario && p.alpha == 0.0 && p.beta1_label == "0") v.push_back(p.r2);
    return safe_median(v);
  };
  if (!fixed15.empty()) {
    const double m = null_r2(fixed15);
    add("trial_null.r2_15", "fixed-beta1 15-study median R2 at alpha=0,beta1=0 <= 0.15", m, m <= 0.15);
  }
  if (!fixed5.empty()) {
    const double m = null_r2(fixed5);
    add("trial_null.r2_5", "fixed-beta1 5-study median R2 at alpha=0,beta1=0 in [0.05, 0.29]", m,
        m >= 0.05 && m <= 0.29);
  }

  // Correlation decay between C and R2, per beta1 stratum.
  if (!fixed15.empty()) {
    std::vector<std::string> strata;
    for (const auto& p : fixed15)
      if (p.scenario == scenario) ordinal(strata, p.beta1_label);
    for (const auto& s : strata) {
      auto rho = [&](double min_alpha) {
        std::vector<double> c, r2;
        for (const auto& p : fixed15)
          if (p.scenario == scenario && p.beta1_label == s && p.alpha >= min_alpha) {
            c.push_back(p.discovery.c_index);
            r2.push_back(p.r2);
          }
        try {
          return spearman(c, r2);
        } catch (const MetaError&) {
          return kNaN;
        }
      };
      const double all = rho(-std::numeric_limits<double>::infinity());
      const double high = rho(2.0);
      add("decay.all_alpha[beta1=" + s + "]", "fixed-beta1 Spearman(C, R2) over all alpha >= 0.6", all,
          all >= 0.6);
      add("decay.alpha_ge_2[beta1=" + s + "]", "fixed-beta1 Spearman(C, R2) over alpha>=2 <= 0.4", high,
          high <= 0.4);
    }
  }
  return checks;
}

std::string boxplot_svg(const std::string& title, const std::string& y_label,
                        const std::vector<std::string>& x_labels,
                        const std::vector<BoxSeries>& series) {
  static const char* kColors[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"};
  const double width = 720, height = 420, left = 70, right = 150, top = 40, bottom = 50;
  const double plot_w = width - left - right, plot_h = height - top - bottom;

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : series)
    for (const auto& b : s.boxes)
      if (b) {
        lo = std::min(lo, b->q.q1);
        hi = std::max(hi, b->q.q3);
      }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  if (hi - lo < 1e-9) lo -= 0.5, hi += 0.5;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  auto y_of = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
         num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
  svg += "<!-- data: series,x,q1,median,q3,n\n";
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.boxes.size() && i < x_labels.size(); ++i)
      if (s.boxes[i])
        svg += s.label + "," + x_labels[i] + "," + num(s.boxes[i]->q.q1) + "," +
               num(s.boxes[i]->q.median) + "," + num(s.boxes[i]->q.q3) + "," +
               std::to_string(s.boxes[i]->n) + "\n";
  svg += "-->\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num(width / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">" + title + "</text>\n";
  svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) + "\" y2=\"" +
         num(top + plot_h) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(top + plot_h) + "\" x2=\"" + num(left + plot_w) +
         "\" y2=\"" + num(top + plot_h) + "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    svg += "<text x=\"" + num(left - 6) + "\" y=\"" + num(y_of(v) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + num(v, 3) + "</text>\n";
  }
  svg += "<text x=\"16\" y=\"" + num(top + plot_h / 2) + "\" transform=\"rotate(-90 16 " +
         num(top + plot_h / 2) + ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
         y_label + "</text>\n";

  const double group_w = x_labels.empty() ? plot_w : plot_w / static_cast<double>(x_labels.size());
  const double box_w = series.empty() ? 0.0 : 0.8 * group_w / static_cast<double>(series.size());
  for (std::size_t g = 0; g < x_labels.size(); ++g) {
    const double gx = left + group_w * static_cast<double>(g);
    svg += "<text x=\"" + num(gx + group_w / 2) + "\" y=\"" + num(top + plot_h + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + x_labels[g] +
           "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
      if (g >= series[s].boxes.size() || !series[s].boxes[g]) continue;
      const Quartiles& q = series[s].boxes[g]->q;
      const double x = gx + 0.1 * group_w + box_w * static_cast<double>(s);
      const char* color = kColors[s % 6];
      svg += "<rect x=\"" + num(x + 1) + "\" y=\"" + num(y_of(q.q3)) + "\" width=\"" + num(box_w - 2) +
             "\" height=\"" + num(std::max(0.5, y_of(q.q1) - y_of(q.q3))) + "\" fill=\"" + color +
             "\" fill-opacity=\"0.45\" stroke=\"" + color + "\"/>\n";
      svg += "<line x1=\"" + num(x + 1) + "\" y1=\"" + num(y_of(q.median)) + "\" x2=\"" +
             num(x + box_w - 1) + "\" y2=\"" + num(y_of(q.median)) + "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    }
  }
  svg += "<text x=\"" + num(left + plot_w / 2) + "\" y=\"" + num(height - 10) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">alpha</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double ly = top + 10 + 18 * static_cast<double>(s);
    svg += "<rect x=\"" + num(width - right + 16) + "\" y=\"" + num(ly - 9) +
           "\" width=\"12\" height=\"12\" fill=\"" + kColors[s % 6] + "\"/>\n";
    svg += "<text x=\"" + num(width - right + 34) + "\" y=\"" + num(ly + 1) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + series[s].label + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

namespace {

// Builds series (one per label) over ordered alpha groups.
template <class Row, class LabelFn>
std::pair<std::vector<std::string>, std::vector<BoxSeries>> to_series(
    const std::vector<const Row*>& rows, const std::string& legend_prefix, LabelFn label_of) {
  std::vector<double> alphas;
  std::vector<std::string> labels;
  for (const auto* r : rows) {
    ordinal(alphas, r->alpha);
    ordinal(labels, label_of(*r));
  }
  std::sort(alphas.begin(), alphas.end());
  std::vector<std::string> x_labels;
  for (double a : alphas) x_labels.push_back(format_beta1(a));
  std::vector<BoxSeries> series;
  for (const auto& l : labels) series.push_back({legend_prefix + l, std::vector<std::optional<Box>>(alphas.size())});
  for (const auto* r : rows) {
    const auto ai = static_cast<std::size_t>(std::find(alphas.begin(), alphas.end(), r->alpha) - alphas.begin());
    const auto li = static_cast<std::size_t>(std::find(labels.begin(), labels.end(), label_of(*r)) - labels.begin());
    series[li].boxes[ai] = Box{r->q, r->n};
  }
  return {x_labels, series};
}

}  // namespace

ReportFiles write_report(const std::filesystem::path& out_dir,
                         const std::vector<MetricsRecord>& records,
                         const std::vector<std::vector<PairRecord>>& pair_sets) {
  ReportFiles files;
  auto put = [&](const std::string& name, const std::string& text) {
    const auto path = out_dir / name;
    csv::write_file_atomic(path, text);
    files.written.push_back(path);
  };

  const auto boxes = metric_boxplots(records);
  {
    csv::Builder b({"scenario", "alpha", "beta1", "metric", "q1", "median", "q3", "n"});
    for (const auto& r : boxes) b.row(r.scenario, r.alpha, r.beta1_label, r.metric, r.q.q1, r.q.median, r.q.q3, r.n);
    put("summary_metrics.csv", b.text());
  }
  std::vector<std::string> scenarios;
  for (const auto& r : records) ordinal(scenarios, r.scenario);
  for (const auto& scenario : scenarios) {
    for (const auto& metric : patient_metric_names()) {
      std::vector<const SummaryRow*> rows;
      for (const auto& r : boxes)
        if (r.scenario == scenario && r.metric == metric) rows.push_back(&r);
      if (rows.empty()) continue;
      auto [x, series] = to_series(rows, "beta1=", [](const SummaryRow& r) { return r.beta1_label; });
      put("fig_" + metric + "_" + scenario + ".svg",
          boxplot_svg(metric + " by alpha and beta1 (" + scenario + ")", metric, x, series));
    }
  }

  const auto within = within_cell_correlations(records);
  {
    csv::Builder b({"scenario", "family", "alpha", "beta1", "ks_mean_active", "kg_mean_active",
                    "metric", "n", "spearman", "pearson"});
    for (const auto& r : within)
      b.row(r.scenario, r.family, r.alpha_label, r.beta1, r.ks_mean_active, r.kg_mean_active, r.metric,
            r.n, r.spearman, r.pearson);
    put("summary_within_cell.csv", b.text());
  }
  {
    csv::Builder b({"scenario", "family", "metric", "abs_spearman_q1", "abs_spearman_median",
                    "abs_spearman_q3", "n_correlations"});
    for (const auto& r : summarize_correlations(within))
      b.row(r.scenario, r.family, r.metric, r.abs_spearman.q1, r.abs_spearman.median,
            r.abs_spearman.q3, r.n);
    put("summary_within_cell_quartiles.csv", b.text());
  }

  std::vector<PairRecord> all_pairs;
  for (const auto& set : pair_sets) all_pairs.insert(all_pairs.end(), set.begin(), set.end());
  if (!all_pairs.empty()) {
    const auto r2 = r2_summaries(all_pairs);
    csv::Builder b({"scenario", "mode", "meta_size", "alpha", "beta1_or_mixed", "q1", "median", "q3", "n"});
    for (const auto& r : r2)
      b.row(r.scenario, r.mode, r.meta_size, r.alpha, r.beta1_label, r.q.q1, r.q.median, r.q.q3, r.n);
    put("summary_r2.csv", b.text());

    std::vector<std::tuple<std::string, std::string, int>> sets;
    for (const auto& r : r2) ordinal(sets, std::make_tuple(r.scenario, r.mode, r.meta_size));
    for (const auto& [scenario, mode, size] : sets) {
      std::vector<const R2SummaryRow*> rows;
      for (const auto& r : r2)
        if (r.scenario == scenario && r.mode == mode && r.meta_size == size) rows.push_back(&r);
      auto [x, series] = to_series(rows, "beta1=", [](const R2SummaryRow& r) { return r.beta1_label; });
      put("fig_r2_" + mode + "_" + std::to_string(size) + "_" + scenario + ".svg",
          boxplot_svg("R2 from " + std::to_string(size) + "-study meta-analyses, " + mode + " beta1 (" +
                          scenario + ")",
                      "R2", x, series));
    }
  }

  for (const auto& scenario : scenarios) {
    std::vector<PairRecord> f15, f5;
    for (const auto& p : all_pairs) {
      if (p.scenario != scenario || p.mode != "fixed") continue;
      if (p.dups == 3) f15.push_back(p);
      if (p.dups == 1) f5.push_back(p);
    }
    auto checks = pattern_checks(scenario, records, f15, f5);
    for (auto& c : checks) c.id = scenario + ":" + c.id;
    files.checks.insert(files.checks.end(), checks.begin(), checks.end());
  }
  {
    csv::Builder b({"check", "description", "value", "pass"});
    for (const auto& c : files.checks) {
      std::string desc = c.description;
      std::replace(desc.begin(), desc.end(), ',', ';');
      b.row(c.id, desc, c.value, c.pass);
    }
    put("summary_patterns.csv", b.text());
  }
  return files;
}

}  // namespace surrosim
