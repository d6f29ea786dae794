#pragma once

// Training and evaluation of whole societies, per-episode metrics, the
// baseline-vs-maximin statistics, and the CSV artifacts of a run.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rawle/agent.hpp"
#include "rawle/config.hpp"
#include "rawle/norms.hpp"

namespace rawle {

struct MetricsRecord {
  std::uint64_t seed = 0;
  int episode = 0;
  int length = 0;
  // Per-episode means of the per-step values over alive agents.
  double gini_wellbeing = 0.0;
  double min_wellbeing = 0.0;
  double welfare_wellbeing = 0.0;
  double gini_resource = 0.0;
  double min_resource = 0.0;
  double welfare_resource = 0.0;
  // Throw-consequent norms in the norm base at the end of the episode.
  double coop_norm_num = 0.0;
  double coop_norm_fitness = 0.0;
};

// Per-step sums over episodes; index d holds step d + 1.
struct StepSeries {
  std::vector<double> min_wellbeing, welfare_wellbeing, gini_wellbeing;
  std::vector<double> min_resource, welfare_resource, gini_resource;
  std::vector<int> episodes;

  void resize(int t_max);
  void merge(const StepSeries& other);
};

struct EpisodeOutcome {
  MetricsRecord metrics;
  StepSeries series;
  // Norm base at the end of the episode.
  std::map<BehaviourKey, Norm> norms;
  double mean_shaped_return = 0.0;
  double mean_loss = 0.0;
  int throws = 0;
  int eats = 0;
};

struct TrainingRecord {
  std::uint64_t seed = 0;
  int episode = 0;
  double epsilon = 0.0;
  double mean_shaped_return = 0.0;
  double mean_loss = 0.0;
  int throws = 0;
  int eats = 0;
};

struct SocietyResult {
  Society society = Society::Baseline;
  std::vector<MetricsRecord> episodes;
  std::vector<TrainingRecord> training;
  StepSeries series;
  // Norm base at the end of evaluation. Pooling over seeds sums num, fitness
  // and holders.
  std::map<BehaviourKey, Norm> norms;
};

struct EpisodeOptions {
  double epsilon = 0.0;
  bool learn = false;
  bool sanctions = true;
  // Society clock value of the episode's first step; drives the clip periods.
  int first_step = 1;
};

// One episode with an existing set of agents. The agents' behaviour bases and
// the shared norm base carry over from earlier episodes.
EpisodeOutcome run_episode(std::vector<Agent>& agents, const SimConfig& sim, NormBase& norm_base,
                           std::uint64_t episode_seed, const EpisodeOptions& options);

// Linear schedule from epsilon_start at the first training episode to
// epsilon_end after the last.
double training_epsilon(const LearnerConfig& config, int episode, int train_episodes);

// Deterministic stream derivation.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index);

using ProgressFn = std::function<void(const std::string&)>;

SocietyResult run_society(const ExperimentConfig& config, Society society, std::uint64_t seed,
                          const ProgressFn& progress = {});

struct ExperimentResult {
  std::vector<SocietyResult> societies;  // pooled over seeds
  const SocietyResult* find(Society s) const;
};

ExperimentResult run_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});

struct MetricComparison {
  std::string metric;
  std::string variable;
  double mean_baseline = 0.0;
  double mean_rawle = 0.0;
  double sd_baseline = 0.0;
  double sd_rawle = 0.0;
  double u = 0.0;
  double p = 1.0;
  std::optional<double> cohens_d;
  std::string magnitude;
};

struct StatsReport {
  std::vector<MetricComparison> rows;
  const MetricComparison* find(const std::string& metric, const std::string& variable) const;
};

StatsReport compute_stats(const std::vector<MetricsRecord>& baseline,
                          const std::vector<MetricsRecord>& rawle);

// Writes config.txt, per-society episode/training CSVs, the paired metric
// CSVs, the per-step series, stats.csv and the norm dumps into out_dir.
void write_results(const ExperimentResult& result, const ExperimentConfig& config,
                   const std::filesystem::path& out_dir);

std::vector<MetricsRecord> read_episodes_csv(const std::filesystem::path& path);
void write_stats_csv(const StatsReport& report, const std::filesystem::path& path);
std::string format_stats_table(const StatsReport& report);

// Column label used in the paired CSVs: "baseline" or "maximin".
std::string_view column_label(Society s);

}  // namespace rawle
