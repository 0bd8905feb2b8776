#include <gtest/gtest.h>

#include <random>

#include "support/corpus.hpp"
#include "support/soundness.hpp"
#include "support/timelines.hpp"
#include "zec/check_ground.hpp"
#include "zec/incremental.hpp"

using namespace zec;
using namespace zec::oracle;

namespace {

Term goal(const std::string& text) { return event_term(text); }

std::vector<Rational> answer_times(const Engine& e, const std::string& q, const SolveOptions& opts = {}) {
  Query query = parse_query(q);
  VarId t = static_cast<VarId>(std::find(query.var_names.begin(), query.var_names.end(), "T") - query.var_names.begin());
  std::vector<Rational> out;
  for (const auto& a : e.solve_all(query, opts)) {
    EXPECT_TRUE(a.values[t]->is_num()) << a.text();
    if (a.values[t]->is_num()) out.push_back(a.values[t]->num);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Rational level(const Engine& e, const std::string& q, const SolveOptions& opts = {}) {
  auto answers = e.solve_all(parse_query(q), opts);
  EXPECT_EQ(answers.size(), 1u) << q;
  if (answers.empty() || !answers[0].values[0]->is_num()) return -1;
  return answers[0].values[0]->num;
}

/// Every answer of `q`, instantiated three times, holds on the timeline.
void expect_sound(const Engine& e, GroundChecker& gc, const std::string& q, const SolveOptions& opts = {}) {
  std::mt19937 rng(7);
  Query query = parse_query(q);
  auto answers = e.solve_all(query, opts);
  ASSERT_FALSE(answers.empty()) << q;
  for (const auto& a : answers) {
    for (int i = 0; i < 3; ++i) {
      for (const auto& g : instantiate(query, a, rng)) EXPECT_TRUE(gc.check_goal(g)) << q << " answer " << a.text() << " at " << to_string(g);
    }
  }
}

}  // namespace

TEST(GroundChecker, LightInterval) {
  auto p = load({"ex1-light/model.pl", "ex1-light/nar.pl"});
  GroundChecker gc(p, {occ("turn_light_on", 10), occ("turn_light_off", 20)});
  Term on = goal("light_on");
  EXPECT_FALSE(gc.holds(on, 5));
  EXPECT_FALSE(gc.holds(on, 10));
  EXPECT_TRUE(gc.holds(on, 15));
  EXPECT_TRUE(gc.holds(on, 20));
  EXPECT_FALSE(gc.holds(on, 25));
  EXPECT_TRUE(check_ground(p, gc.occurrences(), on, q(199, 10)));
}

TEST(GroundChecker, InitialValuePersists) {
  auto p = load({"ex2-bank/remodel.pl", "ex2-bank/nar.pl"});
  GroundChecker gc(p, {occ("withdraw(8000)", 10), occ("withdraw(1500)", 20), occ("serviceFee", 20)});
  EXPECT_TRUE(gc.holds(goal("balance(10000)"), 0));
  EXPECT_TRUE(gc.holds(goal("balance(10000)"), 10));
  EXPECT_TRUE(gc.holds(goal("balance(2000)"), 15));
  EXPECT_TRUE(gc.holds(goal("balance(490)"), 25));
  EXPECT_FALSE(gc.holds(goal("balance(500)"), 25));
  EXPECT_TRUE(gc.supported(occ("serviceFee", 20)));
  EXPECT_FALSE(gc.supported(occ("serviceFee", 15)));
}

TEST(GroundChecker, BankDelayedFee) {
  auto p = load({"ex2-bank/model.pl", "ex2-bank/fix-holdsAt4.pl", "ex2-bank/nar.pl"});
  Rational fee = 20 + q(1, 1000000);
  GroundChecker gc(p, {occ("withdraw(8000)", 10), occ("withdraw(1500)", 20), occ("serviceFee", fee)});
  EXPECT_TRUE(gc.supported(occ("serviceFee", fee)));
  EXPECT_TRUE(gc.holds(goal("balance(490)"), 25));
  Engine e(p);
  EXPECT_EQ(answer_times(e, "?- happens(serviceFee, T)."), std::vector<Rational>{fee});
  expect_sound(e, gc, "?- holdsAt(balance(X), 25).");
}

TEST(GroundChecker, PulsingMatchesTimeline) {
  auto p = load({"ex4-pulsing/model.pl", "ex4-pulsing/fix-holdsAt4.pl", "ex4-pulsing/nar.pl"});
  GroundChecker gc(p, pulsing(60));
  for (const auto& o : gc.occurrences())
    if (to_string(o.event) != "turn_light_on") EXPECT_TRUE(gc.supported(o)) << to_string(o.event);
  Engine e(p);
  EXPECT_EQ(answer_times(e, "?- T .=<. 55, happens(fade_in_end, T)."), (std::vector<Rational>{20, 40}));
  EXPECT_EQ(answer_times(e, "?- T .=<. 55, happens(fade_out_end, T)."), (std::vector<Rational>{30, 50}));
  for (Rational t : {q(5), q(15), q(20), q(25), q(33), q(47), q(105, 2)}) {
    auto held = gc.holding(goal("brightness(X)"), t);
    ASSERT_EQ(held.size(), 1u) << format_rational(t);
    EXPECT_EQ(to_string(held[0]), "brightness(" + format_rational(pulsing_brightness(t)) + ")");
  }
  expect_sound(e, gc, "?- holdsAt(brightness(X), 33).");
}

TEST(GroundChecker, PulsingIncrementalFacts) {
  auto p = load({"ex4-pulsing/model.pl", "ex4-pulsing/trigger.pl", "ex4-pulsing/fix-incr.pl", "ex4-pulsing/nar.pl"});
  Engine e(p);
  auto state = run_incremental(e, 35, {});
  auto expected = pulsing(35);
  ASSERT_EQ(state.facts.size() + 1, expected.size());
  for (std::size_t i = 0; i < state.facts.size(); ++i) {
    EXPECT_EQ(to_string(state.facts[i].event), to_string(expected[i + 1].event));
    EXPECT_EQ(state.facts[i].time, expected[i + 1].time);
  }
}

TEST(GroundChecker, OneTankNarrativeOne) {
  auto p = load({"ex5-tanks/model.pl", "ex5-tanks/trigger.pl", "ex5-tanks/nar1.pl"});
  OneTank tank(100, false, {q(65, 4)}, {SwitchRule{}}, q(39, 2));
  GroundChecker gc(p, tank.events);
  Engine e(p);
  EXPECT_EQ(answer_times(e, "?- happens(switch_left, T)."), tank.times("switch_left"));
  for (const auto& o : tank.events)
    if (to_string(o.event) == "switch_left") EXPECT_TRUE(gc.supported(o));
  for (Rational t : {q(11), q(25, 2), q(65, 4), q(145, 8), q(39, 2)}) {
    Rational x = level(e, "?- holdsAt(water_left(X), " + format_rational(t) + ").");
    EXPECT_EQ(x, tank.level_at(t)) << format_rational(t);
    EXPECT_TRUE(gc.holds(goal("water_left(" + format_rational(x) + ")"), t));
  }
  expect_sound(e, gc, "?- happens(switch_left, T).");
}

TEST(GroundChecker, OneTankSplitTrigger) {
  auto p = load({"ex5-tanks/model.pl", "ex5-tanks/fix-split-holdsAt4.pl", "ex5-tanks/nar2.pl"});
  OneTank tank(0, true, {13}, {SwitchRule{SwitchRule::Exactly}, SwitchRule{SwitchRule::Below, 50, std::nullopt, q(1)}}, 20);
  GroundChecker gc(p, tank.events);
  Engine e(p);
  EXPECT_EQ(answer_times(e, "?- happens(switch_left, T)."), tank.times("switch_left"));
  EXPECT_EQ(level(e, "?- holdsAt(water_left(X), 15)."), tank.level_at(15));
  expect_sound(e, gc, "?- holdsAt(water_left(X), 15).");
}

TEST(GroundChecker, OneTankGuardedSwitch) {
  auto p = load({"ex5-tanks/fix-no-start.pl", "ex5-tanks/nar2.pl"});
  OneTank tank(0, true, {13}, {SwitchRule{SwitchRule::Exactly}}, 20, true);
  GroundChecker gc(p, tank.events);
  Engine e(p);
  EXPECT_TRUE(tank.times("switch_left").empty());
  EXPECT_TRUE(answer_times(e, "?- happens(switch_left, T).").empty());
  EXPECT_EQ(level(e, "?- holdsAt(water_left(X), 15)."), tank.level_at(15));
  expect_sound(e, gc, "?- holdsAt(water_left(X), 15).");
}

TEST(GroundChecker, TwoTanksMinimumDuration) {
  auto p = load({"ex7-tanks/model.pl", "ex7-tanks/sol2-mind.pl", "ex7-tanks/nar.pl"});
  TwoTanks tanks({SwitchRule{SwitchRule::AtMost, 50, q(1)}}, q(39, 2));
  GroundChecker gc(p, tanks.events);
  for (const auto& o : tanks.events)
    if (to_string(o.event) != "start(right)") EXPECT_TRUE(gc.supported(o)) << to_string(o.event);
  Engine e(p);
  EXPECT_EQ(answer_times(e, "?- T .=<. 19.5, happens(switch_left, T)."), tanks.times("switch_left"));
  EXPECT_EQ(answer_times(e, "?- T .=<. 19.5, happens(switch_right, T)."), tanks.times("switch_right"));
  EXPECT_EQ(level(e, "?- holdsAt(water_left(X), 19.5)."), tanks.left_at(q(39, 2)));
  EXPECT_EQ(level(e, "?- holdsAt(water_right(X), 19.5)."), tanks.right_at(q(39, 2)));
  expect_sound(e, gc, "?- holdsAt(water_right(X), 17).");
}

TEST(GroundChecker, TwoTanksIncrementalEquality) {
  auto p = load({"ex7-tanks/model.pl", "ex7-tanks/trigger.pl", "ex7-tanks/incr.pl", "ex7-tanks/nar.pl"});
  TwoTanks tanks({SwitchRule{}}, q(39, 2));
  Engine e(p);
  auto state = run_incremental(e, q(39, 2), {});
  ASSERT_EQ(state.facts.size() + 1, tanks.events.size());
  for (std::size_t i = 0; i < state.facts.size(); ++i) {
    EXPECT_EQ(to_string(state.facts[i].event), to_string(tanks.events[i + 1].event));
    EXPECT_EQ(state.facts[i].time, tanks.events[i + 1].time);
  }
  GroundChecker gc(p, tanks.events);
  for (std::size_t i = 1; i < tanks.events.size(); ++i) EXPECT_TRUE(gc.supported(tanks.events[i]));
  SolveOptions opts;
  opts.incr_facts = state.facts;
  EXPECT_EQ(level(e, "?- holdsAt(water_left(X), 19.5).", opts), tanks.left_at(q(39, 2)));
  EXPECT_EQ(level(e, "?- holdsAt(water_right(X), 19.5).", opts), tanks.right_at(q(39, 2)));
}

TEST(GroundChecker, BlinkingDelay) {
  auto p = load({"apx-blinking/model.pl", "apx-blinking/fix-holdsAt3.pl", "apx-blinking/nar.pl"});
  GroundChecker gc(p, blinking(1, 20));
  for (std::size_t i = 1; i < gc.occurrences().size(); ++i) EXPECT_TRUE(gc.supported(gc.occurrences()[i]));
  EXPECT_FALSE(gc.supported(occ("turn_light_off", q(21, 2))));
  Engine e(p);
  EXPECT_EQ(answer_times(e, "?- T .=<. 16, happens(turn_light_off, T)."), (std::vector<Rational>{11, 13, 15}));
  EXPECT_TRUE(gc.holds(goal("light_on"), q(21, 2)));
  EXPECT_FALSE(gc.holds(goal("light_on"), q(23, 2)));
  expect_sound(e, gc, "?- T .=<. 16, happens(turn_light_on, T).");
}
