#include "rawle/ethics.hpp"

#include <cmath>
#include <vector>

namespace rawle {

namespace {

// Well-being values are sums of a few multiples of h_gain and h_decay, so
// comparisons allow for rounding in the last bits.
bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace

std::optional<MinExperience> min_experience(std::span<const double> wellbeing) {
  std::optional<MinExperience> best;
  for (int i = 0; i < static_cast<int>(wellbeing.size()); ++i) {
    const double w = wellbeing[static_cast<std::size_t>(i)];
    if (!(w > 0.0)) continue;
    if (!best || w < best->value) best = MinExperience{w, i};
  }
  return best;
}

double sanction(std::span<const double> before, std::span<const double> after, bool improvable,
                const SanctionRule& rule) {
  if (before.size() != after.size())
    throw std::invalid_argument("well-being vectors differ in length");
  const auto min_before = min_experience(before);
  const auto min_after = min_experience(after);
  if (!min_before || !min_after) return 0.0;
  if (nearly_equal(min_before->value, min_after->value))
    return (rule.penalise_missed && improvable) ? -rule.magnitude : 0.0;
  if (min_after->value > min_before->value) return rule.magnitude;
  return rule.penalise_worsened ? -rule.magnitude : 0.0;
}

bool could_improve_min(const GridState& state, int agent_id, const SimConfig& config) {
  if (agent_id < 0 || agent_id >= static_cast<int>(state.agents.size()))
    throw std::out_of_range("unknown agent id " + std::to_string(agent_id));
  const auto& agent = state.agents[static_cast<std::size_t>(agent_id)];
  if (!agent.alive || agent.bag.empty()) return false;

  std::vector<double> u = wellbeing_vector(state, config);
  const auto current = min_experience(u);
  if (!current) return false;

  const auto self = static_cast<std::size_t>(agent_id);
  bool unique_self_min = current->id == agent_id;
  for (std::size_t i = 0; i < u.size() && unique_self_min; ++i)
    if (i != self && u[i] > 0.0 && nearly_equal(u[i], u[self])) unique_self_min = false;
  if (unique_self_min) return config.h_gain > 0.0;

  if (agent.health < config.h_throw) return false;
  const int target = throw_recipient(state, agent_id, config);
  if (target < 0) return false;
  const double moved = config.h_gain / std::abs(config.h_decay);
  u[self] -= moved;
  u[static_cast<std::size_t>(target)] += moved;
  const auto after = min_experience(u);
  return after && after->value > current->value && !nearly_equal(after->value, current->value);
}

}  // namespace rawle
