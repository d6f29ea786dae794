#include "rawle/norms.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

namespace rawle {

ActClass act_class(Action a) {
  if (is_move(a)) return ActClass::Move;
  return a == Action::Eat ? ActClass::Eat : ActClass::Throw;
}

std::string_view to_string(ActClass a) {
  switch (a) {
    case ActClass::Move: return "move";
    case ActClass::Eat: return "eat";
    case ActClass::Throw: return "throw";
  }
  return "?";
}

std::optional<ActClass> parse_act_class(std::string_view s) {
  if (s == "move") return ActClass::Move;
  if (s == "eat") return ActClass::Eat;
  if (s == "throw") return ActClass::Throw;
  return std::nullopt;
}

void NormConfig::validate() const {
  if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("norm decay must lie in (0, 1]");
  if (max_behaviours < 1) throw ConfigError("max_behaviours must be at least 1");
  if (clip_behaviours_period < 1 || clip_norms_period < 1)
    throw ConfigError("clip periods must be at least 1");
  if (!(convergence > 0.0 && convergence <= 1.0))
    throw ConfigError("convergence must lie in (0, 1]");
  if (!(thresholds.health_low <= thresholds.health_high))
    throw ConfigError("health thresholds out of order");
  if (!(thresholds.berries_medium >= 2 && thresholds.berries_medium <= thresholds.berries_high))
    throw ConfigError("berry thresholds out of order");
  if (!(thresholds.days_low <= thresholds.days_high))
    throw ConfigError("days thresholds out of order");
}

View make_view(const Observation& obs, const ViewThresholds& th, const SimConfig& config) {
  View v;
  const double h = obs.health / config.h_initial;
  v.health = h < th.health_low ? Level::Low : (h < th.health_high ? Level::Medium : Level::High);
  if (obs.bag <= 0)
    v.berries = Level::None;
  else if (obs.bag < th.berries_medium)
    v.berries = Level::Low;
  else if (obs.bag < th.berries_high)
    v.berries = Level::Medium;
  else
    v.berries = Level::High;
  const double spawn = config.spawn_wellbeing();
  for (int i = 0; i < static_cast<int>(obs.wellbeing.size()); ++i) {
    if (i == obs.self) continue;
    const double d = obs.wellbeing[static_cast<std::size_t>(i)] / spawn;
    v.neighbours.push_back(d < th.days_low ? Level::Low
                                           : (d < th.days_high ? Level::Medium : Level::High));
  }
  return v;
}

double fitness(int num, double reward, double decay, int age) {
  return num * reward * std::pow(decay, age);
}

void BehaviourBase::record(const View& view, ActClass act, double shaped_reward) {
  BehaviourKey key{view, act};
  auto it = entries_.find(key);
  if (it != entries_.end()) {
    it->second.num += 1;
    it->second.reward += shaped_reward;
    return;
  }
  entries_.emplace(std::move(key), Behaviour{view, act, 1, shaped_reward, 0});
}

bool BehaviourBase::clip(int step) {
  if (step % config_.clip_behaviours_period != 0 || size() <= config_.max_behaviours) return false;
  std::vector<std::pair<double, std::map<BehaviourKey, Behaviour>::iterator>> ranked;
  for (auto it = entries_.begin(); it != entries_.end(); ++it)
    ranked.emplace_back(fitness(it->second, config_.decay), it);
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second->second.age > b.second->second.age;
  });
  const auto excess = static_cast<std::size_t>(size() - config_.max_behaviours);
  for (std::size_t i = 0; i < excess; ++i) entries_.erase(ranked[i].second);
  return true;
}

void BehaviourBase::age_all() {
  for (auto& [key, b] : entries_) b.age += 1;
}

const Behaviour* BehaviourBase::find(const BehaviourKey& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

int required_holders(int k, double convergence) {
  return static_cast<int>(std::ceil(convergence * k - 1e-9));
}

void NormBase::update_emerged(const std::vector<const BehaviourBase*>& bases, int k, int step) {
  if (k < 1) throw std::invalid_argument("society size must be at least 1");
  const int needed = required_holders(k, config_.convergence);
  std::map<BehaviourKey, Norm> tally;
  for (const BehaviourBase* base : bases) {
    for (const auto& [key, b] : base->entries()) {
      Norm& n = tally[key];
      n.pre = b.pre;
      n.act = b.act;
      n.num += b.num;
      n.fitness += fitness(b, config_.decay);
      n.holders += 1;
    }
  }
  for (auto& [key, n] : tally)
    if (n.holders >= needed) norms_[key] = n;
  if (step % config_.clip_norms_period == 0) {
    std::erase_if(norms_, [&](const auto& kv) {
      auto it = tally.find(kv.first);
      return it == tally.end() || it->second.holders < needed;
    });
  }
}

std::vector<Level> flatten(const View& v) {
  std::vector<Level> out{v.health, v.berries};
  out.insert(out.end(), v.neighbours.begin(), v.neighbours.end());
  return out;
}

std::string level_label(std::size_t feature, Level level) {
  static constexpr const char* names[] = {"no", "low", "medium", "high"};
  const std::string word = names[static_cast<int>(level)];
  if (feature == 0) return word + " health";
  if (feature == 1) return word + " berries";
  return word + " days";
}

std::string condition_label(const std::vector<std::optional<Level>>& conditions) {
  std::string out;
  for (std::size_t f = 0; f < conditions.size(); ++f) {
    if (!conditions[f]) continue;
    if (!out.empty()) out += ", ";
    out += level_label(f, *conditions[f]);
  }
  return out;
}

namespace {

using Pattern = std::vector<std::optional<Level>>;

bool matches(const Pattern& p, const std::vector<Level>& antecedent) {
  if (p.size() != antecedent.size()) return false;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] && *p[i] != antecedent[i]) return false;
  return true;
}

struct FlatNorm {
  std::vector<Level> antecedent;
  ActClass act;
  int num;
  double fitness;
};

}  // namespace

std::vector<GeneralRule> generalise(const std::map<BehaviourKey, Norm>& norms) {
  std::vector<FlatNorm> flat;
  for (const auto& [key, n] : norms) flat.push_back({flatten(n.pre), n.act, n.num, n.fitness});
  if (flat.empty()) return {};

  // Candidate pattern for each norm: among all subsets of its conditions,
  // keep the valid one covering most norms, then with fewest conditions,
  // then preferring conditions on earlier features.
  std::set<std::pair<Pattern, ActClass>> chosen;
  for (const auto& norm : flat) {
    const std::size_t width = norm.antecedent.size();
    // Wide antecedents (large societies) only try dropping up to 16 features.
    const std::size_t free_bits = std::min<std::size_t>(width, 16);
    Pattern best;
    int best_cover = -1;
    int best_kept = std::numeric_limits<int>::max();
    for (std::uint32_t mask = 0; mask < (1u << free_bits); ++mask) {
      Pattern p(width);
      int kept = 0;
      for (std::size_t f = 0; f < width; ++f) {
        const bool keep = f >= free_bits || (mask >> f & 1u);
        if (keep) {
          p[f] = norm.antecedent[f];
          ++kept;
        }
      }
      // The fully specific rule is always valid, even where one antecedent
      // carries several actions.
      const bool specific = kept == static_cast<int>(width);
      int cover = 0;
      bool valid = true;
      for (const auto& other : flat) {
        if (!matches(p, other.antecedent)) continue;
        if (other.act != norm.act) {
          if (specific) continue;
          valid = false;
          break;
        }
        ++cover;
      }
      if (!valid) continue;
      const bool better = cover > best_cover || (cover == best_cover && kept < best_kept) ||
                          (cover == best_cover && kept == best_kept && p > best);
      if (better) {
        best = p;
        best_cover = cover;
        best_kept = kept;
      }
    }
    chosen.emplace(best, norm.act);
  }

  std::vector<GeneralRule> rules;
  for (const auto& [pattern, act] : chosen) {
    GeneralRule r{pattern, act, 0, 0.0, 0};
    for (const auto& n : flat) {
      if (n.act != act || !matches(pattern, n.antecedent)) continue;
      r.num += n.num;
      r.fitness += n.fitness;
      r.covered += 1;
    }
    rules.push_back(std::move(r));
  }

  // Drop rules whose coverage is contained in another rule's coverage.
  auto covers = [&](const GeneralRule& a, const GeneralRule& b) {
    for (const auto& n : flat)
      if (n.act == b.act && matches(b.conditions, n.antecedent) && !matches(a.conditions, n.antecedent))
        return false;
    return true;
  };
  std::vector<GeneralRule> kept;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    bool redundant = false;
    for (std::size_t j = 0; j < rules.size() && !redundant; ++j) {
      if (i == j || rules[i].act != rules[j].act) continue;
      if (!covers(rules[j], rules[i])) continue;
      // Equal coverage: keep the first of the pair only.
      redundant = !covers(rules[i], rules[j]) || j < i;
    }
    if (!redundant) kept.push_back(rules[i]);
  }
  std::sort(kept.begin(), kept.end(), [](const GeneralRule& a, const GeneralRule& b) {
    if (a.conditions != b.conditions) return a.conditions < b.conditions;
    return a.act < b.act;
  });
  return kept;
}

std::string format_rule(const View& view, ActClass act) {
  const auto levels = flatten(view);
  Pattern p(levels.begin(), levels.end());
  return "IF <" + condition_label(p) + "> THEN <" + std::string(to_string(act)) + ">";
}

std::string format_rule(const GeneralRule& rule) {
  return "IF <" + condition_label(rule.conditions) + "> THEN <" + std::string(to_string(rule.act)) +
         ">";
}

std::string format_norm_dump(const std::map<BehaviourKey, Norm>& norms) {
  std::ostringstream out;
  out << std::setprecision(10);
  for (const auto& [key, n] : norms)
    out << format_rule(n.pre, n.act) << '\t' << n.num << '\t' << n.fitness << '\n';
  return out.str();
}

namespace {

std::optional<Level> parse_level_word(std::string_view w) {
  if (w == "no") return Level::None;
  if (w == "low") return Level::Low;
  if (w == "medium") return Level::Medium;
  if (w == "high") return Level::High;
  return std::nullopt;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::map<BehaviourKey, Norm> parse_norm_dump(const std::string& text) {
  std::map<BehaviourKey, Norm> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fail = [&](const std::string& why) {
      throw std::runtime_error("norm dump line " + std::to_string(line_no) + ": " + why);
    };
    const auto open = line.find("IF <");
    const auto mid = line.find("> THEN <");
    if (open != 0 || mid == std::string::npos) fail("expected 'IF <...> THEN <...>'");
    const auto close = line.find('>', mid + 8);
    if (close == std::string::npos) fail("unterminated action");
    const auto act = parse_act_class(line.substr(mid + 8, close - mid - 8));
    if (!act) fail("unknown action");

    Norm n;
    n.act = *act;
    std::vector<Level> levels;
    std::istringstream conds(line.substr(4, mid - 4));
    std::string cond;
    while (std::getline(conds, cond, ',')) {
      const auto c = trim(cond);
      const auto space = c.find(' ');
      if (space == std::string_view::npos) fail("bad condition");
      const auto level = parse_level_word(c.substr(0, space));
      if (!level) fail("bad level");
      levels.push_back(*level);
    }
    if (levels.size() < 2) fail("a norm needs health and berry conditions");
    n.pre.health = levels[0];
    n.pre.berries = levels[1];
    n.pre.neighbours.assign(levels.begin() + 2, levels.end());

    std::istringstream rest(line.substr(close + 1));
    if (!(rest >> n.num >> n.fitness)) fail("missing num/fitness columns");
    out[BehaviourKey{n.pre, n.act}] = n;
  }
  return out;
}

std::string format_rule_tree(const std::vector<GeneralRule>& rules) {
  // Rules are sorted by conditions, so shared prefixes are adjacent.
  std::ostringstream out;
  std::vector<std::string> printed;
  for (const auto& rule : rules) {
    std::vector<std::string> path;
    for (std::size_t f = 0; f < rule.conditions.size(); ++f)
      if (rule.conditions[f]) path.push_back(level_label(f, *rule.conditions[f]));
    std::size_t common = 0;
    while (common < path.size() && common < printed.size() && path[common] == printed[common])
      ++common;
    for (std::size_t d = common; d < path.size(); ++d)
      out << std::string(2 * d, ' ') << path[d] << '\n';
    out << std::string(2 * path.size(), ' ') << to_string(rule.act) << "  (num " << rule.num
        << ")\n";
    printed = std::move(path);
  }
  return out.str();
}

}  // namespace rawle
