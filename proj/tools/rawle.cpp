// rawle: train and evaluate baseline and maximin societies, recompute the
// statistics of a finished run, print the generalised norms.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "rawle/config.hpp"
#include "rawle/experiment.hpp"
#include "rawle/norms.hpp"

namespace fs = std::filesystem;
using namespace rawle;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maximin-shaped multi-agent harvest experiments"};
  app.require_subcommand(1);

  std::string config_path, scenario, society, out_dir = "results";
  int train_episodes = -1, eval_episodes = -1, n_seeds = -1;
  long long seed = -1;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Train and evaluate one or both societies");
  run->add_option("--config", config_path, "Key-value config file")->check(CLI::ExistingFile);
  run->add_option("--scenario", scenario, "capabilities | allotment");
  run->add_option("--society", society, "baseline | rawle | both");
  run->add_option("--train-episodes", train_episodes)->check(CLI::NonNegativeNumber);
  run->add_option("--eval-episodes", eval_episodes)->check(CLI::PositiveNumber);
  run->add_option("--n-seeds", n_seeds)->check(CLI::PositiveNumber);
  run->add_option("--seed", seed)->check(CLI::NonNegativeNumber);
  run->add_option("--out", out_dir, "Output directory");
  run->add_flag("--quiet", quiet, "No progress lines");

  std::string in_dir;
  auto* stats = app.add_subcommand("stats", "Recompute the statistics table from a run directory");
  stats->add_option("--in", in_dir)->required()->check(CLI::ExistingDirectory);
  auto* norms = app.add_subcommand("norms", "Print the generalised norm tree of a run directory");
  norms->add_option("--in", in_dir)->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      KeyValues kv;
      if (!config_path.empty()) kv = load_key_values(config_path);
      if (!scenario.empty()) kv["scenario"] = scenario;
      if (!society.empty()) kv["society"] = society;
      if (train_episodes >= 0) kv["train_episodes"] = std::to_string(train_episodes);
      if (eval_episodes >= 0) kv["eval_episodes"] = std::to_string(eval_episodes);
      if (n_seeds >= 0) kv["n_seeds"] = std::to_string(n_seeds);
      if (seed >= 0) kv["seed"] = std::to_string(seed);
      const ExperimentConfig config = build_config(kv);
      config.validate();
      ProgressFn progress;
      if (!quiet) progress = [](const std::string& line) { std::cerr << line << '\n'; };
      const auto result = run_experiment(config, progress);
      write_results(result, config, out_dir);
      const auto* base = result.find(Society::Baseline);
      const auto* rawle = result.find(Society::Rawle);
      if (base && rawle) std::cout << format_stats_table(compute_stats(base->episodes, rawle->episodes));
      std::cout << "wrote " << out_dir << '\n';
    } else if (stats->parsed()) {
      const fs::path dir(in_dir);
      const auto base = read_episodes_csv(dir / "episodes_baseline.csv");
      const auto rawle = read_episodes_csv(dir / "episodes_rawle.csv");
      const auto report = compute_stats(base, rawle);
      write_stats_csv(report, dir / "stats.csv");
      std::cout << format_stats_table(report);
    } else if (norms->parsed()) {
      const fs::path dir(in_dir);
      bool any = false;
      for (const char* name : {"baseline", "rawle"}) {
        const fs::path path = dir / (std::string("norms_") + name + ".txt");
        if (!fs::exists(path)) continue;
        any = true;
        std::cout << "# " << name << '\n' << format_rule_tree(generalise(parse_norm_dump(read_file(path))));
      }
      if (!any) throw std::runtime_error("no norms_*.txt in " + in_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "rawle: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
