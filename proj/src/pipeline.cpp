#include "surrosim/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "json.hpp"
#include "surrosim/csv.hpp"
#include "surrosim/metrics.hpp"
#include "surrosim/report.hpp"
#include "surrosim/survsim.hpp"

namespace surrosim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kBatch = 64;
const char* const kStageNames[] = {"calibrate", "simulate", "metrics", "meta", "report"};

std::vector<std::string> trial_columns() {
  return {"scenario", "cell_index", "alpha", "beta1", "ks_mean_active", "kg_mean_active",
          "ks_mean_control", "kg_mean_control", "replicate", "id", "arm", "ks", "kg",
          "y_tstar", "time_weeks", "event", "beta0", "censor_time"};
}

std::string trials_file(const std::string& scenario) { return "trials_" + scenario + ".csv"; }

struct Context {
  fs::path out;
  Profile profile;
  std::uint64_t seed = 0;
  std::vector<ScenarioSpec> specs;
  json manifest;
  std::ostream* log = nullptr;

  void say(const std::string& line) const {
    if (log) *log << line << std::endl;
  }
  std::uint64_t scenario_seed(const ScenarioSpec& spec) const { return mix_seed(seed, spec.name); }
  const ScenarioSpec& spec_named(std::string_view name) const {
    for (const auto& s : specs)
      if (s.name == name) return s;
    throw PipelineError("scenario '" + std::string(name) + "' is not part of this run");
  }
};

json identity(const Context& ctx) {
  json j;
  j["tool"] = kToolName;
  j["tool_version"] = kToolVersion;
  j["master_seed"] = ctx.seed;
  j["profile"] = ctx.profile.name;
  j["n_pairs"] = ctx.profile.n_pairs;
  j["month_to_week"] = kWeeksPerMonth;
  j["scenarios"] = json::array();
  for (const auto& s : ctx.specs) j["scenarios"].push_back(to_json(s));
  return j;
}

fs::path manifest_path(const fs::path& out) { return out / "manifest.json"; }

void save_manifest(const Context& ctx) {
  csv::write_file_atomic(manifest_path(ctx.out), ctx.manifest.dump(2) + "\n");
}

void require_file(const fs::path& path, const char* stage) {
  if (!fs::exists(path))
    throw PipelineError("missing prior stage output: " + path.string() + " (run '" + stage +
                        "' first)");
}

void require_marker(const Context& ctx, const char* stage) {
  if (!ctx.manifest["stages"].value(stage, false))
    throw PipelineError("prior stage '" + std::string(stage) + "' is not complete in " +
                        manifest_path(ctx.out).string());
}

void mark_done(Context& ctx, Stage stage) {
  bool reset = false;
  for (int i = 0; i < 5; ++i) {
    if (reset) ctx.manifest["stages"][kStageNames[i]] = false;
    if (i == static_cast<int>(stage)) {
      ctx.manifest["stages"][kStageNames[i]] = true;
      reset = true;
    }
  }
  if (stage < Stage::meta) ctx.manifest["meta_variants"] = json::array();
  save_manifest(ctx);
}

Context open_context(const RunOptions& opt, Stage stage) {
  Context ctx;
  ctx.out = opt.out;
  ctx.log = opt.log;
  const fs::path mpath = manifest_path(opt.out);
  const bool have_manifest = fs::exists(mpath);
  json existing;
  if (have_manifest) {
    try {
      existing = json::parse(csv::read_file(mpath));
    } catch (const json::exception& e) {
      throw PipelineError(mpath.string() + ": unreadable manifest: " + e.what());
    }
    if (existing.value("tool", "") != kToolName ||
        existing.value("tool_version", "") != kToolVersion)
      throw PipelineError(mpath.string() + ": written by " + existing.value("tool", "?") + " " +
                          existing.value("tool_version", "?") + ", this is " + kToolName + " " +
                          kToolVersion + "; refusing to mix outputs");
  }

  ctx.profile = profile_by_name(opt.profile.value_or(
      have_manifest ? existing.value("profile", "desk") : std::string("desk")));
  ctx.seed = opt.seed.value_or(have_manifest ? existing.value("master_seed", std::uint64_t{1})
                                             : std::uint64_t{1});
  if (!opt.scenarios.empty()) {
    ctx.specs = resolve_scenarios(opt.scenarios, ctx.profile);
  } else if (have_manifest) {
    for (const auto& s : existing.at("scenarios")) ctx.specs.push_back(from_json(s));
  } else {
    ctx.specs = resolve_scenarios({"Ks1"}, ctx.profile);
  }

  switch (stage) {
    case Stage::simulate:
      require_file(opt.out / "calibration.csv", "calibrate");
      break;
    case Stage::metrics:
      for (const auto& s : ctx.specs) require_file(opt.out / trials_file(s.name), "simulate");
      break;
    case Stage::meta:
      require_file(opt.out / "metrics.csv", "metrics");
      require_file(opt.out / "effects.csv", "metrics");
      break;
    case Stage::report:
      require_file(opt.out / "metrics.csv", "metrics");
      break;
    default:
      break;
  }

  const json id = identity(ctx);
  if (have_manifest) {
    for (const auto& [key, value] : id.items())
      if (existing.value(key, json()) != value)
        throw PipelineError(mpath.string() + ": '" + key +
                            "' differs from this run; refusing to mix outputs (use a new --out)");
    ctx.manifest = existing;
  } else {
    if (stage != Stage::calibrate && stage != Stage::all)
      throw PipelineError("missing prior stage output: " + mpath.string() + " (run 'calibrate' first)");
    fs::create_directories(opt.out);
    ctx.manifest = id;
    for (const char* s : kStageNames) ctx.manifest["stages"][s] = false;
    ctx.manifest["meta_variants"] = json::array();
    save_manifest(ctx);
  }
  return ctx;
}

// Calibration

struct CellCalibration {
  bool feasible = true;
  Calibration cal;
  std::string message;
};

std::string sanitize(std::string text) {
  std::replace(text.begin(), text.end(), ',', ';');
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

void stage_calibrate(Context& ctx, int threads) {
  csv::Builder b({"scenario", "cell_index", "alpha", "beta1", "ks_mean_active", "kg_mean_active",
                  "ks_mean_control", "kg_mean_control", "beta0", "early_fraction",
                  "horizon_fraction", "status", "note"});
  for (const auto& spec : ctx.specs) {
    const auto cells = expand_cells(spec);
    std::vector<CellCalibration> results(cells.size());
    const std::uint64_t seed = ctx.scenario_seed(spec);
    parallel_for(cells.size(), threads, [&](std::size_t i) {
      Stream stream = derive_stream(seed, static_cast<std::uint64_t>(cells[i].cell_index),
                                    kCalibrationReplicate);
      try {
        results[i].cal = calibrate_beta0(cells[i], spec, stream);
      } catch (const InfeasibleCell& e) {
        results[i].feasible = false;
        results[i].message = e.what();
      }
    });
    int warnings = 0, infeasible = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& c = cells[i];
      const auto& r = results[i];
      const char* status = !r.feasible ? "infeasible" : r.cal.warning ? "warning" : "ok";
      if (!r.feasible) ++infeasible;
      else if (r.cal.warning) ++warnings;
      b.row(spec.name, c.cell_index, c.alpha, c.beta1, c.ks_active_mean, c.kg_active_mean,
            c.ks_control_mean, c.kg_control_mean, r.feasible ? r.cal.beta0 : kNaN,
            r.feasible ? r.cal.early_fraction : kNaN, r.feasible ? r.cal.horizon_fraction : kNaN,
            status, sanitize(r.feasible ? r.cal.note : r.message));
    }
    ctx.say("calibrate " + spec.name + ": " + std::to_string(cells.size()) + " cells, " +
            std::to_string(warnings) + " with warnings, " + std::to_string(infeasible) +
            " infeasible");
  }
  b.write(ctx.out / "calibration.csv");
}

// Simulation

std::map<std::pair<std::string, int>, double> read_calibration(const fs::path& path) {
  const auto doc = csv::Document::read(path);
  const auto c_s = doc.column("scenario"), c_i = doc.column("cell_index"),
             c_b = doc.column("beta0"), c_st = doc.column("status");
  std::map<std::pair<std::string, int>, double> out;
  for (std::size_t r = 0; r < doc.rows(); ++r) {
    if (doc.field(r, c_st) == "infeasible") continue;
    out[{std::string(doc.field(r, c_s)), static_cast<int>(doc.integer(r, c_i))}] =
        doc.number(r, c_b);
  }
  return out;
}

void append_trial_rows(std::string& text, const ScenarioSpec& spec, const Trial& t) {
  const SimulationCell& c = t.cell;
  for (const auto& p : t.patients) {
    auto field = [&](const auto& v) {
      csv::append_field(text, v);
      text += ',';
    };
    field(spec.name);
    field(c.cell_index);
    field(c.alpha);
    field(c.beta1);
    field(c.ks_active_mean);
    field(c.kg_active_mean);
    field(c.ks_control_mean);
    field(c.kg_control_mean);
    field(t.replicate);
    field(p.id);
    field(p.arm);
    field(p.trajectory.ks);
    field(p.trajectory.kg);
    field(p.surrogate.observed_y);
    field(p.time);
    field(p.event ? 1 : 0);
    field(t.beta0);
    csv::append_field(text, t.censor_time);
    text += '\n';
  }
}

struct Task {
  SimulationCell cell;
  int replicate = 0;
  double beta0 = 0.0;
};

class AtomicFile {
 public:
  explicit AtomicFile(fs::path path) : path_(std::move(path)), tmp_(path_.string() + ".partial") {
    os_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!os_) throw PipelineError("cannot write " + tmp_.string());
  }
  void write(const std::string& text) {
    os_.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!os_) throw PipelineError("write failed: " + tmp_.string());
  }
  void commit() {
    os_.close();
    if (!os_) throw PipelineError("write failed: " + tmp_.string());
    fs::rename(tmp_, path_);
  }

 private:
  fs::path path_, tmp_;
  std::ofstream os_;
};

std::string header_line(const std::vector<std::string>& columns) {
  std::string h;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) h += ',';
    h += columns[i];
  }
  return h + '\n';
}

void stage_simulate(Context& ctx, int threads) {
  const auto beta0s = read_calibration(ctx.out / "calibration.csv");
  for (const auto& spec : ctx.specs) {
    std::vector<Task> tasks;
    for (const auto& cell : expand_cells(spec)) {
      const auto it = beta0s.find({spec.name, cell.cell_index});
      if (it == beta0s.end()) {
        ctx.say("simulate " + spec.name + ": skipping infeasible cell " +
                std::to_string(cell.cell_index));
        continue;
      }
      for (int r = 0; r < spec.n_replicates; ++r) tasks.push_back({cell, r, it->second});
    }
    const std::uint64_t seed = ctx.scenario_seed(spec);
    AtomicFile file(ctx.out / trials_file(spec.name));
    file.write(header_line(trial_columns()));
    std::vector<std::string> chunks;
    for (std::size_t start = 0; start < tasks.size(); start += kBatch) {
      const std::size_t n = std::min(kBatch, tasks.size() - start);
      chunks.assign(n, std::string());
      parallel_for(n, threads, [&](std::size_t k) {
        const Task& task = tasks[start + k];
        Stream stream = derive_stream(seed, static_cast<std::uint64_t>(task.cell.cell_index),
                                      static_cast<std::uint64_t>(task.replicate));
        const Trial trial = simulate_trial(task.cell, spec, task.beta0, task.replicate, stream);
        append_trial_rows(chunks[k], spec, trial);
      });
      for (const auto& c : chunks) file.write(c);
      const std::size_t done = start + n;
      if (done % (kBatch * 16) == 0 || done == tasks.size())
        ctx.say("simulate " + spec.name + ": " + std::to_string(done) + "/" +
                std::to_string(tasks.size()) + " trials");
    }
    file.commit();
  }
}

// Metrics

class TrialReader {
 public:
  TrialReader(const fs::path& path, const ScenarioSpec& spec)
      : path_(path), spec_(spec), cells_(expand_cells(spec)), in_(path, std::ios::binary) {
    if (!in_) throw PipelineError("cannot read " + path.string());
    std::getline(in_, header_);
    if (!header_.empty() && header_.back() == '\r') header_.pop_back();
    if (header_line(trial_columns()) != header_ + '\n')
      throw PipelineError(path.string() + ": unexpected header");
  }

  /// Raw text of the next trial (2 n_per_arm lines), empty at end of file.
  std::string next_block() {
    std::string block = header_ + '\n';
    std::string line;
    const int rows = 2 * spec_.n_per_arm;
    for (int i = 0; i < rows; ++i) {
      if (!std::getline(in_, line)) {
        if (i == 0) return {};
        throw PipelineError(path_.string() + ": truncated trial");
      }
      block += line;
      block += '\n';
    }
    return block;
  }

  Trial parse(std::string block) const {
    const auto doc = csv::Document::parse(std::move(block), path_.string());
    const auto col = [&](const char* n) { return doc.column(n); };
    const auto c_cell = col("cell_index"), c_rep = col("replicate"), c_id = col("id"),
               c_arm = col("arm"), c_ks = col("ks"), c_kg = col("kg"), c_y = col("y_tstar"),
               c_t = col("time_weeks"), c_e = col("event"), c_b0 = col("beta0"),
               c_cens = col("censor_time"), c_s = col("scenario");
    Trial t;
    const auto cell_index = doc.integer(0, c_cell);
    if (cell_index < 0 || static_cast<std::size_t>(cell_index) >= cells_.size() ||
        doc.field(0, c_s) != spec_.name)
      throw PipelineError(path_.string() + ": row does not match scenario " + spec_.name);
    t.cell = cells_[static_cast<std::size_t>(cell_index)];
    t.replicate = static_cast<int>(doc.integer(0, c_rep));
    t.beta0 = doc.number(0, c_b0);
    t.censor_time = doc.number(0, c_cens);
    t.patients.resize(doc.rows());
    for (std::size_t r = 0; r < doc.rows(); ++r) {
      if (doc.integer(r, c_cell) != cell_index || doc.integer(r, c_rep) != t.replicate)
        throw PipelineError(path_.string() + ": trial rows are not contiguous");
      Patient& p = t.patients[r];
      p.id = static_cast<int>(doc.integer(r, c_id));
      p.arm = static_cast<int>(doc.integer(r, c_arm));
      p.trajectory = {doc.number(r, c_ks), doc.number(r, c_kg)};
      p.surrogate.observed_y = doc.number(r, c_y);
      p.surrogate.true_f = biexp_unchecked(p.trajectory, spec_.t_star);
      p.time = doc.number(r, c_t);
      p.event = doc.integer(r, c_e) != 0;
    }
    return t;
  }

 private:
  fs::path path_;
  const ScenarioSpec& spec_;
  std::vector<SimulationCell> cells_;
  std::ifstream in_;
  std::string header_;
};

std::vector<std::string> effects_columns() {
  return {"scenario", "cell_index", "alpha", "beta1", "ks_mean_active", "kg_mean_active",
          "replicate", "log_hr_os", "delta_median_se", "status"};
}

struct TrialOutput {
  SimulationCell cell;
  int replicate = 0;
  std::optional<StudyMetrics> metrics;
  std::optional<TrialEffect> effect;
};

void stage_metrics(Context& ctx, int threads) {
  csv::Builder metrics(metrics_csv_columns());
  csv::Builder effects(effects_columns());
  for (const auto& spec : ctx.specs) {
    TrialReader reader(ctx.out / trials_file(spec.name), spec);
    std::size_t done = 0, unusable = 0;
    while (true) {
      std::vector<std::string> blocks;
      for (std::size_t k = 0; k < kBatch; ++k) {
        std::string b = reader.next_block();
        if (b.empty()) break;
        blocks.push_back(std::move(b));
      }
      if (blocks.empty()) break;
      std::vector<TrialOutput> results(blocks.size());
      parallel_for(blocks.size(), threads, [&](std::size_t k) {
        const Trial trial = reader.parse(std::move(blocks[k]));
        TrialOutput& o = results[k];
        o.cell = trial.cell;
        o.replicate = trial.replicate;
        try {
          o.metrics = study_metrics(trial, spec.t_star);
        } catch (const UnusableTrial&) {
        }
        try {
          o.effect = trial_effects(trial, spec.t_star);
        } catch (const CoxError&) {
        }
      });
      for (const auto& o : results) {
        const SimulationCell& c = o.cell;
        if (o.metrics) {
          const StudyMetrics& m = *o.metrics;
          metrics.row(spec.name, c.cell_index, c.alpha, c.beta1, c.ks_active_mean, c.kg_active_mean,
                      o.replicate, m.c_index, m.ibs, m.scaled_ibs, m.log_hr_se, m.excluded_count,
                      m.tau, m.ibs_null, "ok");
        } else {
          ++unusable;
          metrics.row(spec.name, c.cell_index, c.alpha, c.beta1, c.ks_active_mean, c.kg_active_mean,
                      o.replicate, kNaN, kNaN, kNaN, kNaN, -1, kNaN, kNaN, "unusable");
        }
        effects.row(spec.name, c.cell_index, c.alpha, c.beta1, c.ks_active_mean, c.kg_active_mean,
                    o.replicate, o.effect ? o.effect->log_hr_os : kNaN,
                    o.effect ? o.effect->delta_median_se : kNaN, o.effect ? "ok" : "failed");
      }
      done += blocks.size();
      if (done % (kBatch * 16) == 0)
        ctx.say("metrics " + spec.name + ": " + std::to_string(done) + " trials");
    }
    ctx.say("metrics " + spec.name + ": " + std::to_string(done) + " trials, " +
            std::to_string(unusable) + " unusable");
  }
  metrics.write(ctx.out / "metrics.csv");
  effects.write(ctx.out / "effects.csv");
}

// Meta-analysis

std::vector<MetaVariant> requested_variants(const RunOptions& opt) {
  std::vector<MetaVariant> v;
  if (!opt.mode && !opt.dups)
    return {{PairMode::fixed_beta1, 3}, {PairMode::fixed_beta1, 1}, {PairMode::mixed_beta1, 1}};
  const PairMode mode = opt.mode.value_or(PairMode::fixed_beta1);
  const int dups = opt.dups.value_or(mode == PairMode::mixed_beta1 ? 1 : 3);
  return {{mode, dups}};
}

void stage_meta(Context& ctx, const std::vector<MetaVariant>& variants) {
  const auto edoc = csv::Document::read(ctx.out / "effects.csv");
  std::map<std::pair<std::string, TrialKey>, StudyMetrics> usable;
  for (const auto& r : read_metrics_csv(ctx.out / "metrics.csv"))
    if (r.usable) usable[{r.scenario, TrialKey{r.cell_index, r.replicate}}] = r.metrics;

  std::map<std::string, std::vector<PoolEntry>> pools;
  std::map<std::string, std::vector<SimulationCell>> cells;
  for (const auto& spec : ctx.specs) cells[spec.name] = expand_cells(spec);
  const auto c_s = edoc.column("scenario"), c_i = edoc.column("cell_index"),
             c_r = edoc.column("replicate"), c_l = edoc.column("log_hr_os"),
             c_d = edoc.column("delta_median_se"), c_st = edoc.column("status");
  for (std::size_t r = 0; r < edoc.rows(); ++r) {
    if (edoc.field(r, c_st) != "ok") continue;
    const std::string scenario(edoc.field(r, c_s));
    const auto& cs = cells.at(ctx.spec_named(scenario).name);
    const auto ci = edoc.integer(r, c_i);
    if (ci < 0 || static_cast<std::size_t>(ci) >= cs.size())
      throw PipelineError("effects.csv: cell index out of range");
    PoolEntry e;
    e.cell = cs[static_cast<std::size_t>(ci)];
    e.replicate = static_cast<int>(edoc.integer(r, c_r));
    e.effect = {TrialKey{e.cell.cell_index, e.replicate}, edoc.number(r, c_l), edoc.number(r, c_d)};
    const auto it = usable.find({scenario, e.effect.key});
    if (it != usable.end()) e.metrics = it->second;
    pools[scenario].push_back(std::move(e));
  }

  for (const auto& variant : variants) {
    const std::string tag = variant.tag();
    csv::Builder pairs(pairs_csv_columns());
    csv::Builder corr({"scenario", "mode", "metric", "alpha_filter", "stratum", "spearman_rho",
                       "n_pairs"});
    for (const auto& spec : ctx.specs) {
      const auto& pool = pools[spec.name];
      const auto result = assemble_pairs(pool, variant.mode, variant.dups, ctx.profile.n_pairs,
                                         mix_seed(ctx.scenario_seed(spec), "pairs:" + tag));
      for (const auto& p : result) {
        const StudyMetrics& d = p.discovery;
        pairs.row(spec.name, to_string(p.mode), p.alpha,
                  p.beta1 ? format_beta1(*p.beta1) : std::string("mixed"), p.pair_id, p.r2,
                  d.c_index, d.ibs, d.scaled_ibs, d.log_hr_se, variant.dups, p.meta_size,
                  p.discovery_key.cell_index, p.discovery_key.replicate, p.discovery_beta1);
      }
      for (const auto& row : correlation_report(result, default_alpha_filters()))
        corr.row(spec.name, to_string(variant.mode), row.metric, row.alpha_filter, row.stratum,
                 row.defined ? row.rho : kNaN, row.n_pairs);
      ctx.say("meta " + tag + " " + spec.name + ": " + std::to_string(result.size()) + " pairs");
    }
    pairs.write(ctx.out / ("pairs_" + tag + ".csv"));
    corr.write(ctx.out / ("correlations_" + tag + ".csv"));
  }
  std::set<std::string> tags;
  for (const auto& t : ctx.manifest["meta_variants"]) tags.insert(t.get<std::string>());
  for (const auto& v : variants) tags.insert(v.tag());
  ctx.manifest["meta_variants"] = json(std::vector<std::string>(tags.begin(), tags.end()));
}

void stage_report(Context& ctx) {
  const auto records = read_metrics_csv(ctx.out / "metrics.csv");
  std::vector<std::vector<PairRecord>> sets;
  for (const auto& t : ctx.manifest["meta_variants"]) {
    const fs::path p = ctx.out / ("pairs_" + t.get<std::string>() + ".csv");
    require_file(p, "meta");
    sets.push_back(read_pairs_csv(p));
  }
  const ReportFiles files = write_report(ctx.out, records, sets);
  ctx.say("report: " + std::to_string(files.written.size()) + " files");
  for (const auto& c : files.checks)
    ctx.say(std::string(c.pass ? "PASS " : "FAIL ") + c.id + " = " + std::to_string(c.value) +
            "  (" + c.description + ")");
}

void run_one(Context& ctx, Stage stage, const RunOptions& opt) {
  switch (stage) {
    case Stage::calibrate:
      stage_calibrate(ctx, opt.threads);
      break;
    case Stage::simulate:
      require_marker(ctx, "calibrate");
      stage_simulate(ctx, opt.threads);
      break;
    case Stage::metrics:
      require_marker(ctx, "simulate");
      stage_metrics(ctx, opt.threads);
      break;
    case Stage::meta:
      require_marker(ctx, "metrics");
      stage_meta(ctx, requested_variants(opt));
      break;
    case Stage::report:
      require_marker(ctx, "meta");
      stage_report(ctx);
      break;
    case Stage::all:
      return;
  }
  mark_done(ctx, stage);
}

}  // namespace

Stage parse_stage(std::string_view name) {
  for (int i = 0; i < 5; ++i)
    if (name == kStageNames[i]) return static_cast<Stage>(i);
  if (name == "all") return Stage::all;
  throw PipelineError("unknown stage '" + std::string(name) + "'");
}

const char* to_string(Stage stage) {
  return stage == Stage::all ? "all" : kStageNames[static_cast<int>(stage)];
}

std::string MetaVariant::tag() const {
  return std::string(mode == PairMode::fixed_beta1 ? "fixed" : "mixed") + "_dup" +
         std::to_string(dups);
}

std::vector<ScenarioSpec> resolve_scenarios(const std::vector<std::string>& names,
                                            const Profile& profile) {
  std::vector<ScenarioSpec> specs;
  for (const auto& name : names) {
    if (is_preset(name)) {
      ScenarioSpec s = preset(name);
      apply_profile(s, profile);
      specs.push_back(std::move(s));
      continue;
    }
    if (!fs::exists(name))
      throw PipelineError("unknown scenario '" + name + "': not a preset (" + [] {
        std::string all;
        for (const auto& p : preset_names()) all += (all.empty() ? "" : ", ") + p;
        return all;
      }() + ") and no such config file");
    for (auto& s : load_scenarios(csv::read_file(name), &profile)) specs.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < specs.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (specs[i].name == specs[j].name)
        throw PipelineError("scenario '" + specs[i].name + "' given twice");
  return specs;
}

void run(Stage stage, const RunOptions& options) {
  if (options.threads < 1) throw PipelineError("--threads must be at least 1");
  if (options.dups && *options.dups != 1 && *options.dups != 3)
    throw PipelineError("--dups must be 1 or 3");
  Context ctx = open_context(options, stage);
  if (stage != Stage::all) {
    run_one(ctx, stage, options);
    return;
  }
  for (Stage s : {Stage::calibrate, Stage::simulate, Stage::metrics, Stage::meta, Stage::report})
    run_one(ctx, s, options);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex mutex;
  std::size_t error_index = n;
  std::exception_ptr error;
  auto work = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace surrosim
