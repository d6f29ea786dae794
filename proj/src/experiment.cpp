#include "rawle/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rawle/metrics.hpp"
#include "rawle/stats.hpp"

namespace rawle {

void StepSeries::resize(int t_max) {
  const auto n = static_cast<std::size_t>(t_max);
  for (auto* v : {&min_wellbeing, &welfare_wellbeing, &gini_wellbeing, &min_resource,
                  &welfare_resource, &gini_resource})
    v->assign(n, 0.0);
  episodes.assign(n, 0);
}

void StepSeries::merge(const StepSeries& other) {
  if (episodes.size() < other.episodes.size()) {
    const auto n = other.episodes.size();
    for (auto* v : {&min_wellbeing, &welfare_wellbeing, &gini_wellbeing, &min_resource,
                    &welfare_resource, &gini_resource})
      v->resize(n, 0.0);
    episodes.resize(n, 0);
  }
  for (std::size_t d = 0; d < other.episodes.size(); ++d) {
    min_wellbeing[d] += other.min_wellbeing[d];
    welfare_wellbeing[d] += other.welfare_wellbeing[d];
    gini_wellbeing[d] += other.gini_wellbeing[d];
    min_resource[d] += other.min_resource[d];
    welfare_resource[d] += other.welfare_resource[d];
    gini_resource[d] += other.gini_resource[d];
    episodes[d] += other.episodes[d];
  }
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index) {
  // splitmix64 finaliser over a combination of the three inputs.
  std::uint64_t z = base * 0x9E3779B97F4A7C15ULL ^ (stream + 0x632BE59BD9B4E019ULL) * 0xBF58476D1CE4E5B9ULL ^
                    (index + 1) * 0x94D049BB133111EBULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double training_epsilon(const LearnerConfig& config, int episode, int train_episodes) {
  if (train_episodes <= 1) return config.epsilon_start;
  const double frac = static_cast<double>(episode) / static_cast<double>(train_episodes - 1);
  return config.epsilon_start + (config.epsilon_end - config.epsilon_start) * std::clamp(frac, 0.0, 1.0);
}

EpisodeOutcome run_episode(std::vector<Agent>& agents, const SimConfig& sim, NormBase& norm_base,
                           std::uint64_t episode_seed, const EpisodeOptions& options) {
  if (static_cast<int>(agents.size()) != sim.n_agents)
    throw std::invalid_argument("agent count does not match n_agents");
  EpisodeOutcome out;
  out.series.resize(sim.t_max);
  GridState state = init_episode(sim, episode_seed);
  const NormConfig& norms = norm_base.config();
  std::vector<const BehaviourBase*> bases;
  for (const auto& a : agents) bases.push_back(&a.behaviours());

  double shaped_total = 0.0;
  double loss_total = 0.0;
  int loss_count = 0;
  MetricsRecord& m = out.metrics;

  while (!episode_done(state, sim)) {
    StepContext ctx{&sim, &norms, options.epsilon, options.learn, options.sanctions,
                    options.first_step + state.t};
    run_step(state, sim, [&](GridState& s, int id) {
      const AgentStepLog log = agents[static_cast<std::size_t>(id)].step(s, ctx);
      shaped_total += log.shaped_reward;
      if (log.loss) {
        loss_total += *log.loss;
        ++loss_count;
      }
      if (log.env.outcome == Outcome::Threw) ++out.throws;
      if (log.env.outcome == Outcome::Ate) ++out.eats;
    });
    for (auto& a : agents) a.behaviours().age_all();
    norm_base.update_emerged(bases, sim.n_agents, options.first_step + state.t - 1);

    std::vector<double> well, resource;
    for (const auto& a : state.agents) {
      if (!a.alive) continue;
      well.push_back(wellbeing(a, sim));
      resource.push_back(static_cast<double>(a.eaten));
    }
    const auto d = static_cast<std::size_t>(state.t - 1);
    StepSeries& s = out.series;
    s.episodes[d] = 1;
    s.gini_wellbeing[d] = gini(well);
    s.min_wellbeing[d] = min_experience_value(well);
    s.welfare_wellbeing[d] = social_welfare(well);
    s.gini_resource[d] = gini(resource);
    s.min_resource[d] = min_experience_value(resource);
    s.welfare_resource[d] = social_welfare(resource);
    m.gini_wellbeing += s.gini_wellbeing[d];
    m.min_wellbeing += s.min_wellbeing[d];
    m.welfare_wellbeing += s.welfare_wellbeing[d];
    m.gini_resource += s.gini_resource[d];
    m.min_resource += s.min_resource[d];
    m.welfare_resource += s.welfare_resource[d];
  }

  m.length = state.t;
  if (m.length > 0) {
    const double n = m.length;
    m.gini_wellbeing /= n;
    m.min_wellbeing /= n;
    m.welfare_wellbeing /= n;
    m.gini_resource /= n;
    m.min_resource /= n;
    m.welfare_resource /= n;
  }
  out.norms = norm_base.norms();
  for (const auto& [key, n] : out.norms) {
    if (n.act != ActClass::Throw) continue;
    m.coop_norm_num += n.num;
    m.coop_norm_fitness += n.fitness;
  }
  out.mean_shaped_return = shaped_total / sim.n_agents;
  out.mean_loss = loss_count ? loss_total / loss_count : 0.0;
  return out;
}

SocietyResult run_society(const ExperimentConfig& config, Society society, std::uint64_t seed,
                          const ProgressFn& progress) {
  const SimConfig sim = config.sim_for(society);
  SocietyResult result;
  result.society = society;
  result.series.resize(sim.t_max);

  std::vector<Agent> agents;
  agents.reserve(static_cast<std::size_t>(sim.n_agents));
  for (int id = 0; id < sim.n_agents; ++id)
    agents.emplace_back(id, sim, config.learner, config.norms, derive_seed(seed, 1, static_cast<std::uint64_t>(id)));

  NormBase norm_base(config.norms);
  int clock = 1;
  for (int e = 0; e < config.train_episodes; ++e) {
    const double eps = training_epsilon(config.learner, e, config.train_episodes);
    const auto out = run_episode(agents, sim, norm_base, derive_seed(seed, 2, static_cast<std::uint64_t>(e)),
                                 {eps, true, true, clock});
    clock += out.metrics.length;
    result.training.push_back({seed, e, eps, out.mean_shaped_return, out.mean_loss, out.throws, out.eats});
    if (progress && (e + 1) % 50 == 0) {
      std::ostringstream msg;
      msg << to_string(society) << " seed " << seed << ": trained " << (e + 1) << "/"
          << config.train_episodes << " episodes";
      progress(msg.str());
    }
  }

  // Behaviour and norm bases live as long as the agents; evaluation keeps
  // adding to them.
  EpisodeOptions eval{config.learner.eval_epsilon, config.learn_in_eval, config.sanctions_in_eval, clock};
  for (int e = 0; e < config.eval_episodes; ++e) {
    auto out = run_episode(agents, sim, norm_base, derive_seed(seed, 3, static_cast<std::uint64_t>(e)), eval);
    eval.first_step += out.metrics.length;
    out.metrics.seed = seed;
    out.metrics.episode = e;
    result.episodes.push_back(out.metrics);
    result.series.merge(out.series);
  }
  result.norms = norm_base.norms();
  if (progress) {
    std::ostringstream msg;
    msg << to_string(society) << " seed " << seed << ": evaluated " << config.eval_episodes << " episodes";
    progress(msg.str());
  }
  return result;
}

const SocietyResult* ExperimentResult::find(Society s) const {
  for (const auto& r : societies)
    if (r.society == s) return &r;
  return nullptr;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const ProgressFn& progress) {
  config.validate();
  ExperimentResult result;
  for (Society society : config.societies) {
    SocietyResult pooled;
    pooled.society = society;
    pooled.series.resize(config.sim.t_max);
    for (int s = 0; s < config.n_seeds; ++s) {
      const std::uint64_t seed = config.sim.seed + static_cast<std::uint64_t>(s);
      SocietyResult run = run_society(config, society, seed, progress);
      pooled.episodes.insert(pooled.episodes.end(), run.episodes.begin(), run.episodes.end());
      pooled.training.insert(pooled.training.end(), run.training.begin(), run.training.end());
      pooled.series.merge(run.series);
      for (const auto& [key, n] : run.norms) {
        Norm& total = pooled.norms[key];
        total.pre = n.pre;
        total.act = n.act;
        total.num += n.num;
        total.fitness += n.fitness;
        total.holders += n.holders;
      }
    }
    result.societies.push_back(std::move(pooled));
  }
  return result;
}

const MetricComparison* StatsReport::find(const std::string& metric, const std::string& variable) const {
  for (const auto& r : rows)
    if (r.metric == metric && r.variable == variable) return &r;
  return nullptr;
}

namespace {

struct MetricColumn {
  const char* metric;
  const char* variable;
  double (*get)(const MetricsRecord&);
};

constexpr MetricColumn kMetricColumns[] = {
    {"inequality", "wellbeing", [](const MetricsRecord& m) { return m.gini_wellbeing; }},
    {"inequality", "resource", [](const MetricsRecord& m) { return m.gini_resource; }},
    {"min_experience", "wellbeing", [](const MetricsRecord& m) { return m.min_wellbeing; }},
    {"min_experience", "resource", [](const MetricsRecord& m) { return m.min_resource; }},
    {"social_welfare", "wellbeing", [](const MetricsRecord& m) { return m.welfare_wellbeing; }},
    {"social_welfare", "resource", [](const MetricsRecord& m) { return m.welfare_resource; }},
    {"robustness", "episode_length", [](const MetricsRecord& m) { return static_cast<double>(m.length); }},
    {"cooperative_norms", "numerosity", [](const MetricsRecord& m) { return m.coop_norm_num; }},
    {"cooperative_norms", "fitness", [](const MetricsRecord& m) { return m.coop_norm_fitness; }},
};

std::vector<double> column(const std::vector<MetricsRecord>& rows, double (*get)(const MetricsRecord&)) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(get(r));
  return out;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void check_written(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

StatsReport compute_stats(const std::vector<MetricsRecord>& baseline,
                          const std::vector<MetricsRecord>& rawle) {
  if (baseline.empty() || rawle.empty()) throw std::invalid_argument("stats need both societies");
  StatsReport report;
  for (const auto& col : kMetricColumns) {
    const auto a = column(baseline, col.get);
    const auto b = column(rawle, col.get);
    MetricComparison row;
    row.metric = col.metric;
    row.variable = col.variable;
    row.mean_baseline = mean(a);
    row.mean_rawle = mean(b);
    row.sd_baseline = stddev(a);
    row.sd_rawle = stddev(b);
    const auto mw = mann_whitney_u(a, b);
    row.u = mw.u;
    row.p = mw.p;
    if (a.size() >= 2 && b.size() >= 2) row.cohens_d = cohens_d(a, b);
    row.magnitude = row.cohens_d ? std::string(effect_magnitude(*row.cohens_d)) : "undefined";
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string_view column_label(Society s) { return s == Society::Baseline ? "baseline" : "maximin"; }

void write_stats_csv(const StatsReport& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "metric,variable,mean_baseline,mean_maximin,sd_baseline,sd_maximin,u,p,cohens_d,magnitude\n";
  for (const auto& r : report.rows) {
    out << r.metric << ',' << r.variable << ',' << num(r.mean_baseline) << ',' << num(r.mean_rawle)
        << ',' << num(r.sd_baseline) << ',' << num(r.sd_rawle) << ',' << num(r.u) << ',' << num(r.p)
        << ',' << (r.cohens_d ? num(*r.cohens_d) : "nan") << ',' << r.magnitude << '\n';
  }
  check_written(out, path);
}

std::string format_stats_table(const StatsReport& report) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %-15s %12s %12s %10s %10s %10s %8s %s\n", "metric", "variable",
                "baseline", "maximin", "sd_base", "sd_max", "p", "d", "effect");
  out << line;
  for (const auto& r : report.rows) {
    std::snprintf(line, sizeof line, "%-18s %-15s %12.4f %12.4f %10.4f %10.4f %10.3g %8s %s\n",
                  r.metric.c_str(), r.variable.c_str(), r.mean_baseline, r.mean_rawle, r.sd_baseline,
                  r.sd_rawle, r.p, r.cohens_d ? num(*r.cohens_d).substr(0, 8).c_str() : "nan",
                  r.magnitude.c_str());
    out << line;
  }
  return out.str();
}

namespace {

const char* kEpisodeHeader =
    "seed,episode,length,gini_wellbeing,min_wellbeing,welfare_wellbeing,gini_resource,"
    "min_resource,welfare_resource,coop_norm_num,coop_norm_fitness";

void write_episodes_csv(const std::vector<MetricsRecord>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << kEpisodeHeader << '\n';
  for (const auto& m : rows) {
    out << m.seed << ',' << m.episode << ',' << m.length << ',' << num(m.gini_wellbeing) << ','
        << num(m.min_wellbeing) << ',' << num(m.welfare_wellbeing) << ',' << num(m.gini_resource)
        << ',' << num(m.min_resource) << ',' << num(m.welfare_resource) << ','
        << num(m.coop_norm_num) << ',' << num(m.coop_norm_fitness) << '\n';
  }
  check_written(out, path);
}

void write_training_csv(const std::vector<TrainingRecord>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "seed,episode,epsilon,mean_shaped_return,mean_loss,throws,eats\n";
  for (const auto& r : rows)
    out << r.seed << ',' << r.episode << ',' << num(r.epsilon) << ',' << num(r.mean_shaped_return)
        << ',' << num(r.mean_loss) << ',' << r.throws << ',' << r.eats << '\n';
  check_written(out, path);
}

// One column per society, one row per pooled evaluation episode.
void write_paired(const ExperimentResult& result, const std::filesystem::path& path,
                  double (*get)(const MetricsRecord&)) {
  auto out = open_out(path);
  std::size_t rows = 0;
  for (std::size_t i = 0; i < result.societies.size(); ++i) {
    out << (i ? "," : "") << column_label(result.societies[i].society);
    rows = std::max(rows, result.societies[i].episodes.size());
  }
  out << '\n';
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < result.societies.size(); ++i) {
      const auto& eps = result.societies[i].episodes;
      out << (i ? "," : "") << (r < eps.size() ? num(get(eps[r])) : "");
    }
    out << '\n';
  }
  check_written(out, path);
}

// Per-step sums divided by the number of episodes still running at that step.
void write_series(const ExperimentResult& result, const std::filesystem::path& path,
                  const std::vector<double> StepSeries::*member) {
  auto out = open_out(path);
  out << "day";
  std::size_t days = 0;
  for (const auto& s : result.societies) {
    out << ',' << column_label(s.society);
    days = std::max(days, s.series.episodes.size());
  }
  out << '\n';
  for (std::size_t d = 0; d < days; ++d) {
    out << (d + 1);
    for (const auto& s : result.societies) {
      const auto& values = s.series.*member;
      const int n = d < s.series.episodes.size() ? s.series.episodes[d] : 0;
      out << ',' << (n > 0 ? num(values[d] / n) : "");
    }
    out << '\n';
  }
  check_written(out, path);
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << text;
  check_written(out, path);
}

}  // namespace

void write_results(const ExperimentResult& result, const ExperimentConfig& config,
                   const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());

  write_text(format_key_values(to_key_values(config)), out_dir / "config.txt");
  for (const auto& s : result.societies) {
    const std::string name(to_string(s.society));
    write_episodes_csv(s.episodes, out_dir / ("episodes_" + name + ".csv"));
    write_training_csv(s.training, out_dir / ("training_" + name + ".csv"));
    write_text(format_norm_dump(s.norms), out_dir / ("norms_" + name + ".txt"));
    write_text(format_rule_tree(generalise(s.norms)), out_dir / ("norms_tree_" + name + ".txt"));
  }

  write_paired(result, out_dir / "gini_days_left_to_live.csv", [](const MetricsRecord& m) { return m.gini_wellbeing; });
  write_paired(result, out_dir / "gini_berries_consumed.csv", [](const MetricsRecord& m) { return m.gini_resource; });
  write_paired(result, out_dir / "days_survived.csv",
               [](const MetricsRecord& m) { return static_cast<double>(m.length); });
  write_series(result, out_dir / "min_days_left_to_live.csv", &StepSeries::min_wellbeing);
  write_series(result, out_dir / "min_berries_consumed.csv", &StepSeries::min_resource);
  write_series(result, out_dir / "total_days_left_to_live.csv", &StepSeries::welfare_wellbeing);
  write_series(result, out_dir / "total_berries_consumed.csv", &StepSeries::welfare_resource);

  const auto* base = result.find(Society::Baseline);
  const auto* rawle = result.find(Society::Rawle);
  if (base && rawle) write_stats_csv(compute_stats(base->episodes, rawle->episodes), out_dir / "stats.csv");
}

std::vector<MetricsRecord> read_episodes_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kEpisodeHeader)
    throw std::runtime_error(path.string() + ": unexpected header");
  std::vector<MetricsRecord> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    std::vector<std::string> f;
    while (std::getline(cells, cell, ',')) f.push_back(cell);
    if (f.size() != 11) throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected 11 columns");
    try {
      MetricsRecord m;
      m.seed = std::stoull(f[0]);
      m.episode = std::stoi(f[1]);
      m.length = std::stoi(f[2]);
      m.gini_wellbeing = std::stod(f[3]);
      m.min_wellbeing = std::stod(f[4]);
      m.welfare_wellbeing = std::stod(f[5]);
      m.gini_resource = std::stod(f[6]);
      m.min_resource = std::stod(f[7]);
      m.welfare_resource = std::stod(f[8]);
      m.coop_norm_num = std::stod(f[9]);
      m.coop_norm_fitness = std::stod(f[10]);
      rows.push_back(m);
    } catch (const std::logic_error&) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": malformed number");
    }
  }
  return rows;
}

}  // namespace rawle
