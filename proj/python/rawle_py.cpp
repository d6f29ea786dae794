#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rawle/config.hpp"
#include "rawle/ethics.hpp"
#include "rawle/experiment.hpp"
#include "rawle/learner.hpp"
#include "rawle/metrics.hpp"
#include "rawle/norms.hpp"
#include "rawle/stats.hpp"

namespace py = pybind11;
using namespace rawle;

namespace {

ExperimentConfig config_from(const py::dict& d) {
  KeyValues kv;
  for (const auto& [k, v] : d) kv[py::str(k)] = py::str(v);
  return build_config(kv);
}

py::dict config_to_dict(const ExperimentConfig& c) {
  py::dict out;
  for (const auto& [k, v] : to_key_values(c)) out[py::str(k)] = v;
  return out;
}

py::dict metrics_dict(const MetricsRecord& m) {
  py::dict d;
  d["seed"] = m.seed;
  d["episode"] = m.episode;
  d["length"] = m.length;
  d["gini_wellbeing"] = m.gini_wellbeing;
  d["min_wellbeing"] = m.min_wellbeing;
  d["welfare_wellbeing"] = m.welfare_wellbeing;
  d["gini_resource"] = m.gini_resource;
  d["min_resource"] = m.min_resource;
  d["welfare_resource"] = m.welfare_resource;
  d["coop_norm_num"] = m.coop_norm_num;
  d["coop_norm_fitness"] = m.coop_norm_fitness;
  return d;
}

py::list stats_rows(const StatsReport& r) {
  py::list rows;
  for (const auto& m : r.rows) {
    py::dict d;
    d["metric"] = m.metric;
    d["variable"] = m.variable;
    d["mean_baseline"] = m.mean_baseline;
    d["mean_rawle"] = m.mean_rawle;
    d["sd_baseline"] = m.sd_baseline;
    d["sd_rawle"] = m.sd_rawle;
    d["u"] = m.u;
    d["p"] = m.p;
    d["cohens_d"] = m.cohens_d ? py::cast(*m.cohens_d) : py::none();
    d["magnitude"] = m.magnitude;
    rows.append(d);
  }
  return rows;
}

std::vector<MetricsRecord> records_from(const py::list& rows) {
  std::vector<MetricsRecord> out;
  for (const auto& item : rows) {
    const auto d = item.cast<py::dict>();
    MetricsRecord m;
    auto get = [&](const char* k, double fallback) {
      return d.contains(k) ? d[k].cast<double>() : fallback;
    };
    m.length = static_cast<int>(get("length", 0));
    m.gini_wellbeing = get("gini_wellbeing", 0);
    m.min_wellbeing = get("min_wellbeing", 0);
    m.welfare_wellbeing = get("welfare_wellbeing", 0);
    m.gini_resource = get("gini_resource", 0);
    m.min_resource = get("min_resource", 0);
    m.welfare_resource = get("welfare_resource", 0);
    m.coop_norm_num = get("coop_norm_num", 0);
    m.coop_norm_fitness = get("coop_norm_fitness", 0);
    out.push_back(m);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_rawle, m) {
  m.doc() = "Maximin-shaped multi-agent harvesting simulation";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

  m.def("default_config", [](const std::string& scenario) {
        return config_to_dict(build_config({{"scenario", scenario}}));
      }, py::arg("scenario") = "capabilities",
      "Every configuration key with its default for the scenario.");

  m.def("init_episode", [](const py::dict& cfg, std::uint64_t seed) {
        const auto c = config_from(cfg);
        const auto s = init_episode(c.sim, seed);
        py::dict out;
        out["width"] = s.width;
        out["height"] = s.height;
        py::list berries;
        for (const auto& b : s.berries()) berries.append(py::make_tuple(b.pos.x, b.pos.y, b.group));
        out["berries"] = berries;
        py::list agents;
        for (const auto& a : s.agents) {
          py::dict d;
          d["id"] = a.id;
          d["pos"] = py::make_tuple(a.pos.x, a.pos.y);
          d["health"] = a.health;
          d["group"] = a.group;
          d["wellbeing"] = wellbeing(a, c.sim);
          agents.append(d);
        }
        out["agents"] = agents;
        return out;
      }, py::arg("config"), py::arg("seed"));

  m.def("gini", [](const std::vector<double>& x) { return gini(x); });
  m.def("social_welfare", [](const std::vector<double>& x) { return social_welfare(x); });
  m.def("min_experience", [](const std::vector<double>& u) -> py::object {
    const auto r = min_experience(u);
    if (!r) return py::none();
    return py::make_tuple(r->value, r->id);
  });
  m.def("sanction",
        [](const std::vector<double>& before, const std::vector<double>& after, bool improvable,
           double magnitude) { return sanction(before, after, improvable, SanctionRule{magnitude, true, true}); },
        py::arg("before"), py::arg("after"), py::arg("improvable"), py::arg("magnitude") = 0.4);
  m.def("mann_whitney_u", [](const std::vector<double>& a, const std::vector<double>& b) {
    const auto r = mann_whitney_u(a, b);
    return py::make_tuple(r.u, r.p);
  });
  m.def("cohens_d", [](const std::vector<double>& a, const std::vector<double>& b) -> py::object {
    const auto d = cohens_d(a, b);
    return d ? py::cast(*d) : py::none();
  });
  m.def("effect_magnitude", [](double d) { return std::string(effect_magnitude(d)); });
  m.def("huber", &huber, py::arg("prediction"), py::arg("target"), py::arg("delta") = 1.0);
  m.def("fitness", py::overload_cast<int, double, double, int>(&fitness), py::arg("num"),
        py::arg("reward"), py::arg("decay"), py::arg("age"));

  m.def("run_experiment", [](const py::dict& cfg, const std::optional<std::filesystem::path>& out) {
        const auto c = config_from(cfg);
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(c);
          if (out) write_results(r, c, *out);
        }
        py::dict result;
        for (const auto& s : r.societies) {
          py::list eps;
          for (const auto& e : s.episodes) eps.append(metrics_dict(e));
          py::list norms;
          for (const auto& [key, n] : s.norms)
            norms.append(py::make_tuple(format_rule(n.pre, n.act), n.num, n.fitness));
          py::dict d;
          d["episodes"] = eps;
          d["norms"] = norms;
          result[py::str(std::string(to_string(s.society)))] = d;
        }
        return result;
      }, py::arg("config"), py::arg("out") = py::none(),
      "Trains and evaluates the configured societies; optionally writes the CSV artifacts.");

  m.def("compute_stats", [](const py::list& baseline, const py::list& rawle) {
    return stats_rows(compute_stats(records_from(baseline), records_from(rawle)));
  });
  m.def("stats_from_dir", [](const std::filesystem::path& dir) {
    return stats_rows(compute_stats(read_episodes_csv(dir / "episodes_baseline.csv"),
                                    read_episodes_csv(dir / "episodes_rawle.csv")));
  });
}
