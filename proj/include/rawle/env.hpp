#pragma once

// Harvesting gridworld: agents forage berries, eat them to restore health and
// may throw them to one another. Two variants exist. In the capabilities
// harvest, short agents only see ground berries and tall agents only see tree
// berries. In the allotment harvest, each agent owns one vertical strip of the
// grid and only harvests there.

#include <array>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rawle {

using Rng = std::mt19937_64;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scenario { Capabilities, Allotment };
enum class Society { Baseline, Rawle };

std::string_view to_string(Scenario s);
std::string_view to_string(Society s);
Scenario parse_scenario(std::string_view name);
Society parse_society(std::string_view name);

struct RewardTable {
  double survive_episode = 1.0;
  double eat_berry = 1.0;
  double forage_hit = 1.0;
  double throw_berry = 0.5;
  double try_eat_empty = -0.2;
  double try_throw_empty = -0.2;
  double try_throw_low_health = -0.2;
  double try_throw_no_recipient = -0.2;
  double die = -1.0;
  double sanction_magnitude = 0.0;

  static RewardTable baseline();
  static RewardTable rawle();
  static RewardTable for_society(Society s);

  bool operator==(const RewardTable&) const = default;
};

struct SimConfig {
  Scenario scenario = Scenario::Capabilities;
  int grid_width = 8;
  int grid_height = 4;
  int n_agents = 4;
  int b_initial = 12;
  double h_initial = 5.0;
  double h_gain = 0.1;
  double h_decay = -0.01;
  double h_throw = 0.6;
  int t_max = 50;
  std::uint64_t seed = 0;
  Society society = Society::Baseline;
  RewardTable reward_table = RewardTable::baseline();
  // Berries per allotment at episode start; must have n_agents entries
  // summing to b_initial. Empty means an even split.
  std::vector<int> allotment_profile{6, 3, 2, 1};
  // Which cases of the maximin sanction produce a penalty.
  bool sanction_on_worsen = true;
  bool sanction_on_missed = true;

  static SimConfig capabilities();
  static SimConfig allotment();

  // Throws ConfigError when an invariant does not hold.
  void validate() const;

  int cell_count() const { return grid_width * grid_height; }
  // Well-being of a freshly spawned agent with an empty bag.
  double spawn_wellbeing() const;
  std::vector<int> resolved_allotment_profile() const;

  bool operator==(const SimConfig&) const = default;
};

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

inline int manhattan(Cell a, Cell b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

// Berry group: Ground/Tree kind in the capabilities harvest, the allotment id
// in the allotment harvest. An agent harvests a berry iff the groups match.
inline constexpr int kGround = 0;
inline constexpr int kTree = 1;
inline constexpr int kNoBerry = -1;

struct Berry {
  Cell pos;
  int group = 0;
  bool operator==(const Berry&) const = default;
};

struct AgentState {
  int id = 0;
  Cell pos;
  double health = 0.0;
  // Groups of the carried berries, most recent last.
  std::vector<int> bag;
  bool alive = true;
  // Short (kGround) / Tall (kTree) or allotment id.
  int group = 0;
  int eaten = 0;

  int bag_count() const { return static_cast<int>(bag.size()); }
  bool operator==(const AgentState&) const = default;
};

std::string trait_name(const AgentState& agent, Scenario scenario);

struct GridState {
  int width = 0;
  int height = 0;
  // Row-major berry occupancy: kNoBerry or the berry group.
  std::vector<int> berry_at;
  std::vector<AgentState> agents;
  int t = 0;
  Rng rng;

  int index(Cell c) const { return c.y * width + c.x; }
  Cell cell(int index) const { return {index % width, index / width}; }
  std::vector<Berry> berries() const;
  int berry_count() const;
  int alive_count() const;
  bool all_dead() const { return alive_count() == 0; }
  bool cell_has_agent(Cell c) const;

  bool operator==(const GridState&) const = default;
};

enum class Action : std::uint8_t { MoveNorth, MoveEast, MoveSouth, MoveWest, Eat, Throw };
inline constexpr int kActionCount = 6;
inline constexpr std::array<Action, kActionCount> kAllActions{
    Action::MoveNorth, Action::MoveEast, Action::MoveSouth,
    Action::MoveWest,  Action::Eat,      Action::Throw};

std::string_view to_string(Action a);
inline bool is_move(Action a) { return static_cast<int>(a) < 4; }
inline Action action_from_index(int i) { return kAllActions.at(static_cast<std::size_t>(i)); }
inline int action_index(Action a) { return static_cast<int>(a); }

enum class Outcome : std::uint8_t {
  Moved,
  Ate,
  Threw,
  EatEmpty,
  ThrowEmpty,
  ThrowLowHealth,
  ThrowNoRecipient,
};

struct Observation {
  int self = 0;
  double health = 0.0;
  int bag = 0;
  int distance_to_berry = 0;
  std::vector<double> wellbeing;
};

struct StepResult {
  double reward = 0.0;
  bool done = false;
  Outcome outcome = Outcome::Moved;
  bool foraged = false;
  bool died = false;
  int throw_target = -1;
};

GridState init_episode(const SimConfig& config, std::uint64_t rng_seed);

// Days left to live: (health + bag * h_gain) / |h_decay|; 0 for dead agents.
double wellbeing(const AgentState& agent, const SimConfig& config);
std::vector<double> wellbeing_vector(const GridState& state, const SimConfig& config);

bool can_harvest(const AgentState& agent, int berry_group);
int allotment_of_column(int x, const SimConfig& config);

// Alive agent other than agent_id with minimum well-being, ties to the lowest
// id; -1 if there is none.
int throw_recipient(const GridState& state, int agent_id, const SimConfig& config);

Observation observe(const GridState& state, int agent_id, const SimConfig& config);

// Applies one agent's turn in place: action, forage, decay, death, and the
// survive reward when this is the last step of the episode.
StepResult step_agent(GridState& state, int agent_id, Action action, const SimConfig& config);

bool episode_done(const GridState& state, const SimConfig& config);

// Fresh uniform permutation of the alive agents, drawn from the state's rng.
std::vector<int> draw_turn_order(GridState& state);

using TurnFn = std::function<void(GridState&, int agent_id)>;
using PolicyFn = std::function<Action(const GridState&, int agent_id)>;

// One environment step: every alive agent takes a turn in a shuffled order,
// then the step counter advances. No-op once the episode is done.
// Returns the turn order used.
std::vector<int> run_step(GridState& state, const SimConfig& config, const TurnFn& turn);
std::vector<int> run_step(GridState& state, const PolicyFn& policy, const SimConfig& config);

}  // namespace rawle
