#pragma once

// Maximin evaluation of a transition and the self-directed sanction an agent
// adds to its environmental reward.

#include <optional>
#include <span>

#include "rawle/env.hpp"

namespace rawle {

struct MinExperience {
  double value = 0.0;
  int id = -1;
};

// Minimum over alive agents (entries > 0), lowest id on ties. Empty when
// every agent is dead.
std::optional<MinExperience> min_experience(std::span<const double> wellbeing);

struct SanctionRule {
  double magnitude = 0.4;
  // Penalise a strictly lower post-step minimum.
  bool penalise_worsened = true;
  // Penalise an unchanged minimum when an improving action was available.
  bool penalise_missed = true;
};

// +magnitude if the minimum rose, -magnitude if it fell or stayed put while
// the agent could have raised it, 0 otherwise. 0 when either vector has no
// alive agent.
double sanction(std::span<const double> before, std::span<const double> after, bool improvable,
                const SanctionRule& rule);

// True iff the agent carries a berry and either it is itself the unique
// minimum (eating restores its health), or it may throw and throwing to the
// designated recipient would raise the society's minimum.
bool could_improve_min(const GridState& state, int agent_id, const SimConfig& config);

}  // namespace rawle
