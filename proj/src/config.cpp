#include "rawle/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace rawle {

SimConfig ExperimentConfig::sim_for(Society society) const {
  SimConfig s = sim;
  s.society = society;
  s.reward_table = society == Society::Baseline ? baseline_rewards : rawle_rewards;
  return s;
}

void ExperimentConfig::validate() const {
  sim.validate();
  learner.validate();
  norms.validate();
  if (train_episodes < 0) throw ConfigError("train_episodes must be non-negative");
  if (eval_episodes < 1) throw ConfigError("eval_episodes must be at least 1");
  if (n_seeds < 1) throw ConfigError("n_seeds must be at least 1");
  if (societies.empty()) throw ConfigError("no society selected");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + key + "' expects true/false, got '" + v + "'");
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(static_cast<int>(to_int(key, item)));
  }
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

struct RewardField {
  const char* name;
  double RewardTable::*member;
};

constexpr RewardField kRewardFields[] = {
    {"survive_episode", &RewardTable::survive_episode},
    {"eat_berry", &RewardTable::eat_berry},
    {"forage_hit", &RewardTable::forage_hit},
    {"throw_berry", &RewardTable::throw_berry},
    {"try_eat_empty", &RewardTable::try_eat_empty},
    {"try_throw_empty", &RewardTable::try_throw_empty},
    {"try_throw_low_health", &RewardTable::try_throw_low_health},
    {"try_throw_no_recipient", &RewardTable::try_throw_no_recipient},
    {"die", &RewardTable::die},
    {"sanction_magnitude", &RewardTable::sanction_magnitude},
};

std::string societies_value(const std::vector<Society>& s) {
  if (s.size() == 2) return "both";
  return std::string(to_string(s.front()));
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto int_field = [&t](const char* key, auto member_path) {
      t[key] = [member_path](ExperimentConfig& c, const std::string& k, const std::string& v) {
        member_path(c) = static_cast<int>(to_int(k, v));
      };
    };
    auto dbl_field = [&t](const char* key, auto member_path) {
      t[key] = [member_path](ExperimentConfig& c, const std::string& k, const std::string& v) {
        member_path(c) = to_double(k, v);
      };
    };
    auto bool_field = [&t](const char* key, auto member_path) {
      t[key] = [member_path](ExperimentConfig& c, const std::string& k, const std::string& v) {
        member_path(c) = to_bool(k, v);
      };
    };

    t["scenario"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.sim.scenario = parse_scenario(v);
    };
    int_field("grid_width", [](ExperimentConfig& c) -> int& { return c.sim.grid_width; });
    int_field("grid_height", [](ExperimentConfig& c) -> int& { return c.sim.grid_height; });
    int_field("n_agents", [](ExperimentConfig& c) -> int& { return c.sim.n_agents; });
    int_field("b_initial", [](ExperimentConfig& c) -> int& { return c.sim.b_initial; });
    dbl_field("h_initial", [](ExperimentConfig& c) -> double& { return c.sim.h_initial; });
    dbl_field("h_gain", [](ExperimentConfig& c) -> double& { return c.sim.h_gain; });
    dbl_field("h_decay", [](ExperimentConfig& c) -> double& { return c.sim.h_decay; });
    dbl_field("h_throw", [](ExperimentConfig& c) -> double& { return c.sim.h_throw; });
    int_field("t_max", [](ExperimentConfig& c) -> int& { return c.sim.t_max; });
    t["seed"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      const long long s = to_int(k, v);
      if (s < 0) throw ConfigError("seed must be non-negative");
      c.sim.seed = static_cast<std::uint64_t>(s);
    };
    t["allotment_profile"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.sim.allotment_profile = to_int_list(k, v);
    };
    bool_field("sanction_on_worsen", [](ExperimentConfig& c) -> bool& { return c.sim.sanction_on_worsen; });
    bool_field("sanction_on_missed", [](ExperimentConfig& c) -> bool& { return c.sim.sanction_on_missed; });

    for (const auto& f : kRewardFields) {
      const auto member = f.member;
      t[std::string("reward.baseline.") + f.name] =
          [member](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.baseline_rewards.*member = to_double(k, v);
          };
      t[std::string("reward.rawle.") + f.name] =
          [member](ExperimentConfig& c, const std::string& k, const std::string& v) {
            c.rawle_rewards.*member = to_double(k, v);
          };
    }

    int_field("batch_size", [](ExperimentConfig& c) -> int& { return c.learner.batch_size; });
    int_field("target_sync_period", [](ExperimentConfig& c) -> int& { return c.learner.target_sync_period; });
    dbl_field("epsilon_start", [](ExperimentConfig& c) -> double& { return c.learner.epsilon_start; });
    dbl_field("epsilon_end", [](ExperimentConfig& c) -> double& { return c.learner.epsilon_end; });
    dbl_field("eval_epsilon", [](ExperimentConfig& c) -> double& { return c.learner.eval_epsilon; });
    dbl_field("learning_rate", [](ExperimentConfig& c) -> double& { return c.learner.learning_rate; });
    dbl_field("discount", [](ExperimentConfig& c) -> double& { return c.learner.discount; });
    int_field("replay_capacity", [](ExperimentConfig& c) -> int& { return c.learner.replay_capacity; });
    int_field("hidden_layers", [](ExperimentConfig& c) -> int& { return c.learner.hidden_layers; });
    int_field("hidden_units", [](ExperimentConfig& c) -> int& { return c.learner.hidden_units; });
    dbl_field("huber_delta", [](ExperimentConfig& c) -> double& { return c.learner.huber_delta; });
    t["optimizer"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
      if (v == "sgd") c.learner.optimizer = OptimizerKind::Sgd;
      else if (v == "adam") c.learner.optimizer = OptimizerKind::Adam;
      else throw ConfigError("optimizer must be sgd or adam, got '" + v + "'");
    };

    dbl_field("norm_decay", [](ExperimentConfig& c) -> double& { return c.norms.decay; });
    int_field("max_behaviours", [](ExperimentConfig& c) -> int& { return c.norms.max_behaviours; });
    int_field("clip_behaviours_period", [](ExperimentConfig& c) -> int& { return c.norms.clip_behaviours_period; });
    int_field("clip_norms_period", [](ExperimentConfig& c) -> int& { return c.norms.clip_norms_period; });
    dbl_field("convergence", [](ExperimentConfig& c) -> double& { return c.norms.convergence; });
    dbl_field("health_low", [](ExperimentConfig& c) -> double& { return c.norms.thresholds.health_low; });
    dbl_field("health_high", [](ExperimentConfig& c) -> double& { return c.norms.thresholds.health_high; });
    int_field("berries_medium", [](ExperimentConfig& c) -> int& { return c.norms.thresholds.berries_medium; });
    int_field("berries_high", [](ExperimentConfig& c) -> int& { return c.norms.thresholds.berries_high; });
    dbl_field("days_low", [](ExperimentConfig& c) -> double& { return c.norms.thresholds.days_low; });
    dbl_field("days_high", [](ExperimentConfig& c) -> double& { return c.norms.thresholds.days_high; });

    int_field("train_episodes", [](ExperimentConfig& c) -> int& { return c.train_episodes; });
    int_field("eval_episodes", [](ExperimentConfig& c) -> int& { return c.eval_episodes; });
    int_field("n_seeds", [](ExperimentConfig& c) -> int& { return c.n_seeds; });
    t["society"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
      if (v == "both") c.societies = {Society::Baseline, Society::Rawle};
      else c.societies = {parse_society(v)};
    };
    bool_field("sanctions_in_eval", [](ExperimentConfig& c) -> bool& { return c.sanctions_in_eval; });
    bool_field("learn_in_eval", [](ExperimentConfig& c) -> bool& { return c.learn_in_eval; });
    return t;
  }();
  return table;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_key_values(buf.str());
}

ExperimentConfig build_config(const KeyValues& kv) {
  ExperimentConfig c;
  if (auto it = kv.find("scenario"); it != kv.end()) {
    const Scenario s = parse_scenario(it->second);
    c.sim = s == Scenario::Capabilities ? SimConfig::capabilities() : SimConfig::allotment();
  }
  const auto& table = setters();
  for (const auto& [key, value] : kv) {
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(c, key, value);
  }
  c.validate();
  return c;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return std::to_string(v);
  return std::string(buf, ptr);
}

KeyValues to_key_values(const ExperimentConfig& c) {
  KeyValues kv;
  auto d = [](double v) { return format_double(v); };
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  kv["scenario"] = std::string(to_string(c.sim.scenario));
  kv["grid_width"] = std::to_string(c.sim.grid_width);
  kv["grid_height"] = std::to_string(c.sim.grid_height);
  kv["n_agents"] = std::to_string(c.sim.n_agents);
  kv["b_initial"] = std::to_string(c.sim.b_initial);
  kv["h_initial"] = d(c.sim.h_initial);
  kv["h_gain"] = d(c.sim.h_gain);
  kv["h_decay"] = d(c.sim.h_decay);
  kv["h_throw"] = d(c.sim.h_throw);
  kv["t_max"] = std::to_string(c.sim.t_max);
  kv["seed"] = std::to_string(c.sim.seed);
  kv["allotment_profile"] = join(c.sim.allotment_profile);
  kv["sanction_on_worsen"] = b(c.sim.sanction_on_worsen);
  kv["sanction_on_missed"] = b(c.sim.sanction_on_missed);
  for (const auto& f : kRewardFields) {
    kv[std::string("reward.baseline.") + f.name] = d(c.baseline_rewards.*f.member);
    kv[std::string("reward.rawle.") + f.name] = d(c.rawle_rewards.*f.member);
  }
  kv["batch_size"] = std::to_string(c.learner.batch_size);
  kv["target_sync_period"] = std::to_string(c.learner.target_sync_period);
  kv["epsilon_start"] = d(c.learner.epsilon_start);
  kv["epsilon_end"] = d(c.learner.epsilon_end);
  kv["eval_epsilon"] = d(c.learner.eval_epsilon);
  kv["learning_rate"] = d(c.learner.learning_rate);
  kv["discount"] = d(c.learner.discount);
  kv["replay_capacity"] = std::to_string(c.learner.replay_capacity);
  kv["hidden_layers"] = std::to_string(c.learner.hidden_layers);
  kv["hidden_units"] = std::to_string(c.learner.hidden_units);
  kv["huber_delta"] = d(c.learner.huber_delta);
  kv["optimizer"] = c.learner.optimizer == OptimizerKind::Sgd ? "sgd" : "adam";
  kv["norm_decay"] = d(c.norms.decay);
  kv["max_behaviours"] = std::to_string(c.norms.max_behaviours);
  kv["clip_behaviours_period"] = std::to_string(c.norms.clip_behaviours_period);
  kv["clip_norms_period"] = std::to_string(c.norms.clip_norms_period);
  kv["convergence"] = d(c.norms.convergence);
  kv["health_low"] = d(c.norms.thresholds.health_low);
  kv["health_high"] = d(c.norms.thresholds.health_high);
  kv["berries_medium"] = std::to_string(c.norms.thresholds.berries_medium);
  kv["berries_high"] = std::to_string(c.norms.thresholds.berries_high);
  kv["days_low"] = d(c.norms.thresholds.days_low);
  kv["days_high"] = d(c.norms.thresholds.days_high);
  kv["train_episodes"] = std::to_string(c.train_episodes);
  kv["eval_episodes"] = std::to_string(c.eval_episodes);
  kv["n_seeds"] = std::to_string(c.n_seeds);
  kv["society"] = societies_value(c.societies);
  kv["sanctions_in_eval"] = b(c.sanctions_in_eval);
  kv["learn_in_eval"] = b(c.learn_in_eval);
  return kv;
}

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

}  // namespace rawle
