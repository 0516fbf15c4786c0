#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "surrosim/pipeline.hpp"

int main(int argc, char** argv) {
  using namespace surrosim;
  CLI::App app{"Joint longitudinal-survival trial simulator for surrogate endpoint evaluation"};
  app.require_subcommand(1);

  RunOptions opt;
  std::string out, mode, profile;
  std::uint64_t seed = 0;
  int threads = 0, dups = 0;

  for (const char* name : {"calibrate", "simulate", "metrics", "meta", "report", "all"}) {
    CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " stage");
    sub->add_option("--scenario", opt.scenarios, "preset name or JSON config path (repeatable)");
    sub->add_option("--profile", profile, "desk | paper")->check(CLI::IsMember({"desk", "paper"}));
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", out, "output directory (env SURROSIM_OUT)");
    sub->add_option("--threads", threads, "worker threads (env SURROSIM_THREADS)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--mode", mode, "pairing mode")->check(CLI::IsMember({"fixed", "mixed"}));
    sub->add_option("--dups", dups, "replicates per mean value in a meta set")
        ->check(CLI::IsMember({1, 3}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const Stage stage = parse_stage(sub->get_name());
    if (!profile.empty()) opt.profile = profile;
    if (sub->count("--seed")) opt.seed = seed;
    if (!mode.empty()) opt.mode = parse_pair_mode(mode);
    if (dups) opt.dups = dups;

    if (!out.empty()) opt.out = out;
    else if (const char* env = std::getenv("SURROSIM_OUT"); env && *env) opt.out = env;

    if (threads) {
      opt.threads = threads;
    } else if (const char* env = std::getenv("SURROSIM_THREADS"); env && *env) {
      try {
        opt.threads = std::stoi(env);
      } catch (const std::exception&) {
        throw PipelineError(std::string("SURROSIM_THREADS is not an integer: ") + env);
      }
    }
    opt.log = &std::cerr;
    run(stage, opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
