#pragma once

// Behaviour mining and norm emergence.
//
// Each agent keeps a behaviour base of IF <view> THEN <action class> rules,
// keyed by the discretised view it acted from. A behaviour's fitness is
// num * r_acc * lambda^age. A behaviour held by at least the convergence
// fraction of the society becomes a norm in the shared norm base.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rawle/env.hpp"

namespace rawle {

enum class Level : std::uint8_t { None, Low, Medium, High };
enum class ActClass : std::uint8_t { Move, Eat, Throw };

ActClass act_class(Action a);
std::string_view to_string(ActClass a);
std::optional<ActClass> parse_act_class(std::string_view s);

struct View {
  Level health = Level::High;
  Level berries = Level::None;
  // Other agents in id order.
  std::vector<Level> neighbours;

  auto operator<=>(const View&) const = default;
  bool operator==(const View&) const = default;
};

struct ViewThresholds {
  // Fractions of h_initial: low < health_low <= medium < health_high <= high.
  double health_low = 0.3;
  double health_high = 0.7;
  // Bag sizes: 0 none, 1 low, [berries_medium, berries_high) medium, else high.
  int berries_medium = 2;
  int berries_high = 5;
  // Fractions of the spawn well-being splitting neighbour levels in terciles.
  double days_low = 1.0 / 3.0;
  double days_high = 2.0 / 3.0;

  bool operator==(const ViewThresholds&) const = default;
};

View make_view(const Observation& obs, const ViewThresholds& thresholds, const SimConfig& config);

struct BehaviourKey {
  View pre;
  ActClass act = ActClass::Move;
  auto operator<=>(const BehaviourKey&) const = default;
  bool operator==(const BehaviourKey&) const = default;
};

struct Behaviour {
  View pre;
  ActClass act = ActClass::Move;
  int num = 1;
  double reward = 0.0;  // accumulated shaped reward
  int age = 0;
};

double fitness(int num, double reward, double decay, int age);
inline double fitness(const Behaviour& b, double decay) { return fitness(b.num, b.reward, decay, b.age); }

struct NormConfig {
  double decay = 0.99;
  int max_behaviours = 50;
  int clip_behaviours_period = 10;
  int clip_norms_period = 5;
  double convergence = 0.9;
  ViewThresholds thresholds;

  void validate() const;
  bool operator==(const NormConfig&) const = default;
};

class BehaviourBase {
 public:
  BehaviourBase() = default;
  explicit BehaviourBase(const NormConfig& config) : config_(config) {}

  // Existing key: num + 1 and reward accumulates. New key: num 1, age 0.
  void record(const View& view, ActClass act, double shaped_reward);
  // Only at steps divisible by the clip period and when over capacity: drops
  // the least fit behaviours, older first on ties.
  bool clip(int step);
  void age_all();
  void clear() { entries_.clear(); }

  int size() const { return static_cast<int>(entries_.size()); }
  bool contains(const BehaviourKey& key) const { return entries_.count(key) != 0; }
  const Behaviour* find(const BehaviourKey& key) const;
  const std::map<BehaviourKey, Behaviour>& entries() const { return entries_; }
  const NormConfig& config() const { return config_; }

  // Test hook for building bases directly.
  void insert(const Behaviour& b) { entries_[BehaviourKey{b.pre, b.act}] = b; }

 private:
  NormConfig config_;
  std::map<BehaviourKey, Behaviour> entries_;
};

struct Norm {
  View pre;
  ActClass act = ActClass::Move;
  int num = 0;            // summed over holders
  double fitness = 0.0;   // summed over holders
  int holders = 0;
};

// Holders needed for a pair to count as a norm: ceil(convergence * k).
int required_holders(int k, double convergence);

class NormBase {
 public:
  NormBase() = default;
  explicit NormBase(const NormConfig& config) : config_(config) {}

  // Admits pairs held by enough agents, refreshing their aggregates. At norm
  // clip steps, drops norms that no longer meet the threshold.
  void update_emerged(const std::vector<const BehaviourBase*>& bases, int k, int step);
  void clear() { norms_.clear(); }

  const std::map<BehaviourKey, Norm>& norms() const { return norms_; }
  const NormConfig& config() const { return config_; }
  int size() const { return static_cast<int>(norms_.size()); }
  void insert(const Norm& n) { norms_[BehaviourKey{n.pre, n.act}] = n; }

 private:
  NormConfig config_;
  std::map<BehaviourKey, Norm> norms_;
};

// Generalised rule: a partial antecedent over (health, berries, neighbour
// levels...) where a missing entry is a wildcard.
struct GeneralRule {
  std::vector<std::optional<Level>> conditions;
  ActClass act = ActClass::Move;
  int num = 0;
  double fitness = 0.0;
  int covered = 0;

  auto operator<=>(const GeneralRule&) const = default;
};

std::vector<Level> flatten(const View& v);
std::string level_label(std::size_t feature, Level level);
std::string condition_label(const std::vector<std::optional<Level>>& conditions);

// Merges norms whose antecedents agree on a subset of features and whose every
// matching norm has the same action class. Every norm stays covered and no
// rule matches a norm antecedent with a different action.
std::vector<GeneralRule> generalise(const std::map<BehaviourKey, Norm>& norms);

// "IF <high health, no berries, ...> THEN <move>"
std::string format_rule(const View& view, ActClass act);
std::string format_rule(const GeneralRule& rule);

// One norm per line: rule, tab, num, tab, fitness.
std::string format_norm_dump(const std::map<BehaviourKey, Norm>& norms);
std::map<BehaviourKey, Norm> parse_norm_dump(const std::string& text);

// Indented prefix tree over the rule conditions in feature order, actions as
// leaves.
std::string format_rule_tree(const std::vector<GeneralRule>& rules);

}  // namespace rawle
