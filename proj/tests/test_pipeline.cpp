#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "surrosim/csv.hpp"
#include "surrosim/pipeline.hpp"

using namespace surrosim;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "surrosim_pipeline_test";

struct Result {
  int status;
  std::string output;
};

Result cli(const std::string& args, const std::string& env = "") {
  const fs::path log = kRoot / "cli.log";
  const std::string cmd = env + " " + SURROSIM_CLI + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return {rc, csv::read_file(log)};
}

fs::path tiny_config() {
  const fs::path path = kRoot / "tiny.json";
  csv::write_file_atomic(path, R"({"preset": "Ks1", "name": "tiny", "alpha_grid": [0, 2],
    "beta1_grid": [0, -0.6], "n_per_arm": 30, "n_replicates": 6, "pilot_size": 400})");
  return path;
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = csv::read_file(e.path());
  return out;
}

}  // namespace

TEST_CASE("parallel_for is ordered and propagates the first error") {
  std::vector<int> v(1000, 0);
  parallel_for(v.size(), 4, [&](std::size_t i) { v[i] = static_cast<int>(i * i); });
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == static_cast<int>(i * i));
  CHECK_THROWS_WITH(parallel_for(100, 3, [](std::size_t i) {
                      if (i == 17) throw std::runtime_error("boom");
                    }),
                    "boom");
}

TEST_CASE("stage names and variant tags") {
  CHECK(parse_stage("meta") == Stage::meta);
  CHECK(parse_stage("all") == Stage::all);
  CHECK_THROWS_AS(parse_stage("fit"), PipelineError);
  CHECK(MetaVariant{PairMode::fixed_beta1, 3}.tag() == "fixed_dup3");
  CHECK_THROWS_AS(resolve_scenarios({"NoSuchScenario"}, profile_by_name("desk")), PipelineError);
}

TEST_CASE("CLI end to end") {
  fs::remove_all(kRoot);
  fs::create_directories(kRoot);
  const std::string config = tiny_config().string();
  const fs::path a = kRoot / "a", b = kRoot / "b";

  SUBCASE("meta without metrics names the missing file") {
    CHECK(cli("calibrate --scenario " + config + " --out " + a.string()).status == 0);
    const Result r = cli("meta --out " + a.string());
    CHECK(r.status != 0);
    CHECK(r.output.find("error:") != std::string::npos);
    CHECK(r.output.find("metrics.csv") != std::string::npos);
    CHECK(cli("metrics --out " + a.string()).output.find("trials_tiny.csv") != std::string::npos);
  }

  SUBCASE("repeated runs and thread counts give identical trees") {
    const std::string common = "all --scenario " + config + " --profile desk --seed 7";
    const Result first = cli(common + " --threads 1 --out " + a.string());
    REQUIRE_MESSAGE(first.status == 0, first.output);
    REQUIRE(cli(common + " --threads 3", "SURROSIM_OUT=" + b.string()).status == 0);
    const auto ta = tree(a), tb = tree(b);
    CHECK(ta.size() == tb.size());
    for (const auto& [name, text] : ta) CHECK_MESSAGE(tb.at(name) == text, name);
    for (const char* f : {"manifest.json", "calibration.csv", "trials_tiny.csv", "metrics.csv",
                          "effects.csv", "pairs_fixed_dup3.csv", "pairs_fixed_dup1.csv",
                          "pairs_mixed_dup1.csv", "correlations_fixed_dup3.csv",
                          "summary_metrics.csv", "summary_r2.csv", "summary_patterns.csv",
                          "fig_c_index_tiny.svg"})
      CHECK_MESSAGE(ta.count(f) == 1, f);

    const auto manifest = nlohmann::json::parse(ta.at("manifest.json"));
    CHECK(manifest["master_seed"] == 7);
    CHECK(manifest["profile"] == "desk");
    CHECK(manifest["month_to_week"] == doctest::Approx(30.4375 / 7));
    CHECK(manifest["stages"]["report"] == true);
    CHECK(manifest["scenarios"][0]["name"] == "tiny");

    // Rerunning a stage regenerates identical files.
    REQUIRE(cli("metrics --out " + a.string() + " --threads 2").status == 0);
    CHECK(csv::read_file(a / "metrics.csv") == ta.at("metrics.csv"));
    const auto after = nlohmann::json::parse(csv::read_file(a / "manifest.json"));
    CHECK(after["stages"]["metrics"] == true);
    CHECK(after["stages"]["meta"] == false);
    CHECK(after["stages"]["report"] == false);
    CHECK(cli("report --out " + a.string()).status != 0);

    REQUIRE(cli("meta --mode fixed --dups 1 --out " + a.string()).status == 0);
    CHECK(csv::read_file(a / "pairs_fixed_dup1.csv") == ta.at("pairs_fixed_dup1.csv"));

    // A different seed refuses to mix with existing outputs.
    const Result mixed = cli("simulate --seed 8 --out " + a.string());
    CHECK(mixed.status != 0);
    CHECK(mixed.output.find("master_seed") != std::string::npos);
  }

  SUBCASE("argument errors") {
    CHECK(cli("all --dups 2 --out " + a.string()).status != 0);
    CHECK(cli("frobnicate").status != 0);
    const Result r = cli("calibrate --scenario Nope --out " + a.string());
    CHECK(r.status != 0);
    CHECK(r.output.find("Nope") != std::string::npos);
  }
  fs::remove_all(kRoot);
}
