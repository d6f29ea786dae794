#pragma once

// Flat key-value configuration shared by the CLI, the experiment harness and
// the Python module. One "key = value" per line, '#' starts a comment.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rawle/env.hpp"
#include "rawle/learner.hpp"
#include "rawle/norms.hpp"

namespace rawle {

struct ExperimentConfig {
  SimConfig sim;
  RewardTable baseline_rewards = RewardTable::baseline();
  RewardTable rawle_rewards = RewardTable::rawle();
  LearnerConfig learner;
  NormConfig norms;
  int train_episodes = 500;
  int eval_episodes = 2000;
  // Runs seeds sim.seed .. sim.seed + n_seeds - 1 and pools their evaluation
  // episodes.
  int n_seeds = 1;
  std::vector<Society> societies{Society::Baseline, Society::Rawle};
  bool sanctions_in_eval = true;
  bool learn_in_eval = false;

  // Simulation config with the society's reward column selected.
  SimConfig sim_for(Society society) const;
  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);
KeyValues load_key_values(const std::string& path);

// Applies scenario defaults first (grid size), then every other key. Unknown
// keys and malformed values throw ConfigError.
ExperimentConfig build_config(const KeyValues& kv);

// Every key with its current value; build_config(to_key_values(c)) == c.
KeyValues to_key_values(const ExperimentConfig& config);
std::string format_key_values(const KeyValues& kv);

std::string format_double(double v);

}  // namespace rawle
