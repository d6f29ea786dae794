#include "doctest.h"

#include <algorithm>
#include <set>

#include "rawle/norms.hpp"

using namespace rawle;

namespace {

View view(Level health, Level berries, std::vector<Level> neighbours = {Level::High, Level::High, Level::High}) {
  return View{health, berries, std::move(neighbours)};
}

Behaviour behaviour(View pre, ActClass act, int num, double reward, int age) {
  return Behaviour{std::move(pre), act, num, reward, age};
}

Level random_level(Rng& rng, int lo = 0) { return static_cast<Level>(std::uniform_int_distribution<int>(lo, 3)(rng)); }

// Does the rule's partial antecedent match the full one?
bool matches(const GeneralRule& r, const std::vector<Level>& full) {
  for (std::size_t f = 0; f < full.size(); ++f)
    if (r.conditions[f] && *r.conditions[f] != full[f]) return false;
  return true;
}

}  // namespace

TEST_CASE("view bucketing") {
  const auto c = SimConfig::capabilities();
  const ViewThresholds th;
  Observation obs{0, 5.0, 0, 3, {500, 500, 500, 500}};
  auto v = make_view(obs, th, c);
  CHECK(v.health == Level::High);
  CHECK(v.berries == Level::None);
  CHECK(v.neighbours == std::vector<Level>{Level::High, Level::High, Level::High});

  obs.health = 0.3 * 5.0;
  obs.bag = 2;
  v = make_view(obs, th, c);
  CHECK(v.health == Level::Medium);  // 0.3 h_initial is the first medium value
  CHECK(v.berries == Level::Medium);
  obs.health = 1.49;
  CHECK(make_view(obs, th, c).health == Level::Low);
  obs.health = 3.5;
  CHECK(make_view(obs, th, c).health == Level::High);

  for (int bag : {0, 1, 2, 4, 5, 9}) {
    obs.bag = bag;
    const Level expect = bag == 0 ? Level::None : bag == 1 ? Level::Low : bag < 5 ? Level::Medium : Level::High;
    CHECK(make_view(obs, th, c).berries == expect);
  }

  obs.self = 2;
  obs.wellbeing = {100, 200, 999, 400};
  v = make_view(obs, th, c);
  CHECK(v.neighbours == std::vector<Level>{Level::Low, Level::Medium, Level::High});

  Observation a{0, 4.9, 3, 1, {500, 499, 498, 497}};
  Observation b{0, 4.0, 4, 7, {480, 470, 460, 450}};
  CHECK(make_view(a, th, c) == make_view(b, th, c));
}

TEST_CASE("fitness hand values") {
  CHECK(std::abs(fitness(2, 1.5, 0.9, 3) - 2.187) < 1e-12);
  CHECK(fitness(3, 0.7, 0.9, 0) == 3 * 0.7);
  CHECK(fitness(4, 2.0, 1.0, 37) == 8.0);
  double prev = fitness(2, 1.0, 0.99, 0);
  for (int age = 1; age < 100; ++age) {
    const double f = fitness(2, 1.0, 0.99, age);
    CHECK(f < prev);
    prev = f;
  }
}

TEST_CASE("record semantics") {
  BehaviourBase base{NormConfig{}};
  const auto v = view(Level::High, Level::None);
  base.record(v, ActClass::Move, 1.0);
  CHECK(base.size() == 1);
  CHECK(base.find({v, ActClass::Move})->num == 1);
  base.record(v, ActClass::Move, 1.0);
  const auto* b = base.find({v, ActClass::Move});
  CHECK(b->num == 2);
  CHECK(b->reward == 2.0);
  CHECK(b->age == 0);
  base.record(view(Level::Low, Level::None), ActClass::Move, 0.0);
  base.record(v, ActClass::Eat, 0.0);
  CHECK(base.size() == 3);

  // Accumulation order does not matter.
  BehaviourBase x{NormConfig{}}, y{NormConfig{}};
  const std::vector<double> rs{0.25, -1.0, 0.5, 2.0};
  for (double r : rs) x.record(v, ActClass::Throw, r);
  for (auto it = rs.rbegin(); it != rs.rend(); ++it) y.record(v, ActClass::Throw, *it);
  CHECK(x.find({v, ActClass::Throw})->reward == y.find({v, ActClass::Throw})->reward);
}

TEST_CASE("clip keeps the fittest") {
  NormConfig cfg;
  cfg.max_behaviours = 3;
  BehaviourBase base{cfg};
  base.insert(behaviour(view(Level::High, Level::None), ActClass::Move, 5, 1.0, 0));
  base.insert(behaviour(view(Level::High, Level::Low), ActClass::Eat, 1, 0.1, 0));
  base.insert(behaviour(view(Level::High, Level::Low), ActClass::Move, 2, 1.0, 0));
  base.insert(behaviour(view(Level::Low, Level::Low), ActClass::Eat, 1, 0.2, 0));
  base.insert(behaviour(view(Level::Low, Level::None), ActClass::Move, 3, 1.0, 0));
  CHECK_FALSE(base.clip(7));
  CHECK(base.size() == 5);
  CHECK(base.clip(10));
  CHECK(base.size() == 3);
  CHECK_FALSE(base.contains({view(Level::High, Level::Low), ActClass::Eat}));
  CHECK_FALSE(base.contains({view(Level::Low, Level::Low), ActClass::Eat}));

  BehaviourBase small{cfg};
  small.insert(behaviour(view(Level::High, Level::None), ActClass::Move, 1, 1.0, 0));
  CHECK_FALSE(small.clip(10));

  // Equal fitness: the older behaviour goes.
  NormConfig flat = cfg;
  flat.decay = 1.0;
  flat.max_behaviours = 1;
  BehaviourBase tie{flat};
  tie.insert(behaviour(view(Level::High, Level::None), ActClass::Move, 1, 1.0, 9));
  tie.insert(behaviour(view(Level::Low, Level::None), ActClass::Move, 1, 1.0, 2));
  tie.clip(10);
  CHECK(tie.contains({view(Level::Low, Level::None), ActClass::Move}));
}

TEST_CASE("clip against a sort-by-fitness oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    NormConfig cfg;
    cfg.max_behaviours = 1 + trial % 12;
    BehaviourBase base{cfg};
    const int n = std::uniform_int_distribution<int>(0, 30)(rng);
    for (int i = 0; i < n; ++i) {
      base.insert(behaviour(view(random_level(rng), random_level(rng), {random_level(rng, 1)}),
                            static_cast<ActClass>(std::uniform_int_distribution<int>(0, 2)(rng)),
                            std::uniform_int_distribution<int>(1, 9)(rng),
                            std::uniform_real_distribution<double>(-2.0, 2.0)(rng),
                            std::uniform_int_distribution<int>(0, 40)(rng)));
    }
    const auto before = base.entries();
    base.clip(10);
    CHECK(base.size() == std::min<int>(static_cast<int>(before.size()), cfg.max_behaviours));
    double worst_kept = 1e300, best_removed = -1e300;
    for (const auto& [key, b] : before) {
      const double f = fitness(b, cfg.decay);
      if (base.contains(key)) worst_kept = std::min(worst_kept, f);
      else best_removed = std::max(best_removed, f);
    }
    CHECK(worst_kept >= best_removed);
  }
}

TEST_CASE("norm admission threshold") {
  CHECK(required_holders(4, 0.9) == 4);
  CHECK(required_holders(10, 0.9) == 9);
  CHECK(required_holders(1, 0.9) == 1);

  NormConfig cfg;
  const auto v = view(Level::High, Level::None);
  std::vector<BehaviourBase> bases(4, BehaviourBase{cfg});
  for (int i = 0; i < 3; ++i) bases[static_cast<std::size_t>(i)].record(v, ActClass::Move, 1.0);
  std::vector<const BehaviourBase*> ptrs;
  for (const auto& b : bases) ptrs.push_back(&b);
  NormBase norms{cfg};
  norms.update_emerged(ptrs, 4, 1);
  CHECK(norms.size() == 0);
  bases[3].record(v, ActClass::Move, 0.5);
  norms.update_emerged(ptrs, 4, 2);
  REQUIRE(norms.size() == 1);
  const auto& n = norms.norms().begin()->second;
  CHECK(n.num == 4);
  CHECK(n.holders == 4);
  CHECK(n.fitness == doctest::Approx(3.5));

  // Dropped only at a norm clip step once support falls away.
  bases[3].clear();
  norms.update_emerged(ptrs, 4, 3);
  CHECK(norms.size() == 1);
  norms.update_emerged(ptrs, 4, 5);
  CHECK(norms.size() == 0);

  std::vector<BehaviourBase> ten(10, BehaviourBase{cfg});
  for (int i = 0; i < 9; ++i) ten[static_cast<std::size_t>(i)].record(v, ActClass::Eat, 1.0);
  std::vector<const BehaviourBase*> tp;
  for (const auto& b : ten) tp.push_back(&b);
  NormBase tn{cfg};
  tn.update_emerged(tp, 10, 1);
  CHECK(tn.size() == 1);
}

TEST_CASE("norm admission matches a brute-force recount") {
  Rng rng(99);
  NormConfig cfg;
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + trial % 7;
    std::vector<BehaviourBase> bases(static_cast<std::size_t>(k), BehaviourBase{cfg});
    std::vector<const BehaviourBase*> ptrs;
    for (const auto& b : bases) ptrs.push_back(&b);
    NormBase norms{cfg};
    for (int step = 5; step <= 25; step += 5) {  // every call is a clip step
      for (auto& b : bases) {
        b.clear();
        const int n = std::uniform_int_distribution<int>(0, 5)(rng);
        for (int i = 0; i < n; ++i)
          b.record(view(random_level(rng, 2), random_level(rng, 2), {}),
                   static_cast<ActClass>(std::uniform_int_distribution<int>(0, 1)(rng)), 1.0);
      }
      norms.update_emerged(ptrs, k, step);
      std::set<BehaviourKey> expected;
      std::set<BehaviourKey> keys;
      for (const auto& b : bases)
        for (const auto& [key, _] : b.entries()) keys.insert(key);
      for (const auto& key : keys) {
        int holders = 0;
        for (const auto& b : bases) holders += b.contains(key);
        if (holders * 10 >= 9 * k) expected.insert(key);  // holders >= 0.9 k
      }
      std::set<BehaviourKey> got;
      for (const auto& [key, _] : norms.norms()) got.insert(key);
      CHECK(got == expected);
    }
  }
}

TEST_CASE("generalise: no berries -> move") {
  std::map<BehaviourKey, Norm> norms;
  for (Level h : {Level::Low, Level::Medium, Level::High}) {
    const auto v = view(h, Level::None);
    norms[{v, ActClass::Move}] = Norm{v, ActClass::Move, 10, 5.0, 4};
  }
  const auto v = view(Level::High, Level::Low);
  norms[{v, ActClass::Eat}] = Norm{v, ActClass::Eat, 3, 1.0, 4};
  const auto rules = generalise(norms);
  std::vector<std::string> text;
  for (const auto& r : rules) text.push_back(format_rule(r));
  CHECK(std::find(text.begin(), text.end(), "IF <no berries> THEN <move>") != text.end());
  CHECK(std::find(text.begin(), text.end(), "IF <low berries> THEN <eat>") != text.end());
  CHECK(rules.size() == 2);
}

TEST_CASE("generalise: singleton and conflicts") {
  std::map<BehaviourKey, Norm> one;
  const auto v = view(Level::High, Level::None, {Level::High});
  one[{v, ActClass::Move}] = Norm{v, ActClass::Move, 1, 1.0, 4};
  const auto rules = generalise(one);
  REQUIRE(rules.size() == 1);
  CHECK(rules[0].act == ActClass::Move);
  CHECK(rules[0].covered == 1);

  // Same partial antecedent, different actions: no rule may drop the health
  // condition.
  std::map<BehaviourKey, Norm> conflict;
  const auto a = view(Level::High, Level::Low, {Level::High});
  const auto b = view(Level::Low, Level::Low, {Level::High});
  conflict[{a, ActClass::Eat}] = Norm{a, ActClass::Eat, 1, 1.0, 4};
  conflict[{b, ActClass::Throw}] = Norm{b, ActClass::Throw, 1, 1.0, 4};
  for (const auto& r : generalise(conflict)) {
    CHECK(r.conditions[0].has_value());
    CHECK(r.covered == 1);
  }
}

TEST_CASE("generalise preserves every norm decision") {
  Rng rng(4242);
  for (int trial = 0; trial < 150; ++trial) {
    std::map<BehaviourKey, Norm> norms;
    const int n = std::uniform_int_distribution<int>(1, 14)(rng);
    for (int i = 0; i < n; ++i) {
      const auto v = view(random_level(rng, 1), random_level(rng), {random_level(rng, 1), random_level(rng, 1)});
      const auto act = static_cast<ActClass>(std::uniform_int_distribution<int>(0, 2)(rng));
      norms[{v, act}] = Norm{v, act, 1, 1.0, 4};
    }
    const auto rules = generalise(norms);
    for (const auto& [key, norm] : norms) {
      const auto full = flatten(key.pre);
      bool covered = false;
      for (const auto& r : rules) {
        if (!matches(r, full)) continue;
        // A rule matching a norm antecedent must agree with some norm there.
        bool agrees = false;
        for (const auto& [k2, _] : norms)
          if (k2.pre == key.pre && k2.act == r.act) agrees = true;
        CHECK(agrees);
        covered |= r.act == key.act;
      }
      CHECK(covered);
    }
  }
}

TEST_CASE("norm dump round trip and tree") {
  std::map<BehaviourKey, Norm> norms;
  const auto a = view(Level::High, Level::None);
  const auto b = view(Level::Medium, Level::Low, {Level::Low, Level::High, Level::Medium});
  norms[{a, ActClass::Move}] = Norm{a, ActClass::Move, 42, 12.345678901234, 4};
  norms[{b, ActClass::Throw}] = Norm{b, ActClass::Throw, 7, -0.5, 4};
  const auto text = format_norm_dump(norms);
  CHECK(text.find("IF <high health, no berries, high days, high days, high days> THEN <move>\t42\t") !=
        std::string::npos);
  const auto back = parse_norm_dump(text);
  REQUIRE(back.size() == 2);
  CHECK(back.at({a, ActClass::Move}).num == 42);
  CHECK(back.at({a, ActClass::Move}).fitness == doctest::Approx(12.345678901234).epsilon(1e-9));
  CHECK(back.at({b, ActClass::Throw}).num == 7);
  CHECK_THROWS(parse_norm_dump("IF <tall> THEN <move>\t1\t1\n"));

  const auto tree = format_rule_tree(generalise(norms));
  CHECK(tree.find("move") != std::string::npos);
  CHECK(tree.find("throw") != std::string::npos);
  CHECK(tree == format_rule_tree(generalise(parse_norm_dump(text))));
}
