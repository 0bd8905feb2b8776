#include <gtest/gtest.h>

#include <algorithm>

#include "support/corpus.hpp"
#include "zec/engine.hpp"

using namespace zec;
using oracle::answer_texts;
using oracle::load;
using Texts = std::vector<std::string>;

TEST(Engine, LightInterval) {
  Engine e(load({"ex1-light/model.pl", "ex1-light/nar.pl"}), false);
  EXPECT_EQ(answer_texts(e, "?- holdsAt(light_on, T)."), Texts{"T ~ {T > 10, T =< 20}"});
  EXPECT_TRUE(answer_texts(e, "?- holdsAt(light_on, 5).").empty());
  EXPECT_EQ(answer_texts(e, "?- holdsAt(light_on, 15)."), Texts{"true"});
  EXPECT_TRUE(answer_texts(e, "?- holdsAt(light_on, 20.5).").empty());
}

TEST(Engine, BankRemodel) {
  Engine e(load({"ex2-bank/remodel.pl", "ex2-bank/nar.pl"}));
  EXPECT_EQ(answer_texts(e, "?- holdsAt(balance(X), 25)."), Texts{"X = 490"});
  EXPECT_EQ(answer_texts(e, "?- happens(serviceFee, T)."), Texts{"T = 20"});
}

TEST(Engine, BankUnfixedZeno) {
  Engine e(load({"ex2-bank/model.pl", "ex2-bank/trigger.pl", "ex2-bank/nar.pl"}));
  SolveOptions o;
  o.zeno_halt = true;
  try {
    answer_texts(e, "?- T .=<. 100, happens(serviceFee, T).", o);
    FAIL() << "expected a Zeno halt";
  } catch (const ZenoHalt& z) {
    EXPECT_EQ(z.report.event_text, "serviceFee");
    EXPECT_EQ(render_interval(z.report.lower, z.report.upper), "(0, 100)");
  }
}

TEST(Engine, BankFixedEpsilon) {
  Engine e(load({"ex2-bank/model.pl", "ex2-bank/fix-holdsAt4.pl", "ex2-bank/nar.pl"}));
  EXPECT_EQ(answer_texts(e, "?- happens(serviceFee, T)."), Texts{"T = 20.000001"});
  EXPECT_EQ(answer_texts(e, "?- holdsAt(balance(X), 25)."), Texts{"X = 490"});
}

TEST(Engine, FadingFixed) {
  Engine e(load({"ex3-fading/model.pl", "ex3-fading/fix-holdsAt3.pl", "ex3-fading/nar.pl"}));
  EXPECT_EQ(answer_texts(e, "?- happens(fade_in_end, T)."), Texts{"T = 20"});
  EXPECT_EQ(answer_texts(e, "?- holdsAt(brightness(X), 25)."), Texts{"X = 10"});
  EXPECT_EQ(answer_texts(e, "?- holdsAt(brightness(X), 15)."), Texts{"X = 5"});
}

TEST(Engine, FadingUnfixedZeno) {
  Engine e(load({"ex3-fading/model.pl", "ex3-fading/trigger.pl", "ex3-fading/nar.pl"}));
  SolveOptions o;
  o.zeno_halt = true;
  EXPECT_THROW(answer_texts(e, "?- happens(fade_in_end, T).", o), ZenoHalt);
}

TEST(Engine, PulsingDuration) {
  Engine e(load({"ex4-pulsing/model.pl", "ex4-pulsing/fix-holdsAt4.pl", "ex4-pulsing/nar.pl"}));
  EXPECT_EQ(answer_texts(e, "?- T .=<. 35, happens(fade_in_end, T)."), Texts{"T = 20"});
  EXPECT_EQ(answer_texts(e, "?- T .=<. 35, happens(fade_out_end, T)."), Texts{"T = 30"});
  EXPECT_EQ(answer_texts(e, "?- holdsAt(brightness(X), 25)."), Texts{"X = 5"});
}

TEST(Engine, PulsingUnfixedZeno) {
  Engine e(load({"ex4-pulsing/model.pl", "ex4-pulsing/trigger.pl", "ex4-pulsing/nar.pl"}));
  SolveOptions o;
  o.zeno_halt = true;
  EXPECT_THROW(answer_texts(e, "?- happens(fade_in_end, T).", o), ZenoHalt);
}

TEST(Engine, TankNarrativeOne) {
  Engine e(load({"ex5-tanks/model.pl", "ex5-tanks/trigger.pl", "ex5-tanks/nar1.pl"}));
  EXPECT_EQ(answer_texts(e, "?- happens(switch_left, T)."), (Texts{"T = 12.5", "T = 18.125"}));
  EXPECT_EQ(answer_texts(e, "?- holdsAt(water_left(W), 12.5)."), Texts{"W = 50"});
  EXPECT_EQ(answer_texts(e, "?- holdsAt(water_left(W), 16.25)."), Texts{"W = 87.5"});
  EXPECT_EQ(answer_texts(e, "?- holdsAt(water_left(W), 19.5)."), Texts{"W = 63.75"});
}

TEST(Engine, TankNarrativeTwo) {
  Engine e(load({"ex5-tanks/model.pl", "ex5-tanks/trigger.pl", "ex5-tanks/nar2.pl"}));
  EXPECT_EQ(answer_texts(e, "?- holdsAt(water_left(W), 13)."), Texts{"W = 30"});
  SolveOptions o;
  o.zeno_halt = true;
  EXPECT_THROW(answer_texts(e, "?- happens(switch_left, T).", o), ZenoHalt);
}

TEST(Engine, TankFixes) {
  Engine a(load({"ex5-tanks/model.pl", "ex5-tanks/fix-split-holdsAt4.pl", "ex5-tanks/nar2.pl"}));
  EXPECT_EQ(answer_texts(a, "?- happens(switch_left, T)."), Texts{"T = 14"});
  EXPECT_EQ(answer_texts(a, "?- holdsAt(water_left(W), 15)."), Texts{"W = 20"});
  Engine b(load({"ex5-tanks/fix-no-start.pl", "ex5-tanks/nar2.pl"}));
  EXPECT_TRUE(answer_texts(b, "?- happens(switch_left, T).").empty());
  EXPECT_EQ(answer_texts(b, "?- holdsAt(water_left(W), 15)."), Texts{"W = 50"});
}

TEST(Engine, Blinking) {
  Engine e(load({"apx-blinking/model.pl", "apx-blinking/fix-holdsAt3.pl", "apx-blinking/nar.pl"}));
  auto sorted = [](Texts t) {
    std::sort(t.begin(), t.end());
    return t;
  };
  EXPECT_EQ(sorted(answer_texts(e, "?- T .=<. 13, happens(turn_light_off, T).")), (Texts{"T = 11", "T = 13"}));
  EXPECT_EQ(sorted(answer_texts(e, "?- T .=<. 13, happens(turn_light_on, T).")), (Texts{"T = 10", "T = 12"}));
  EXPECT_EQ(answer_texts(e, "?- holdsAt(light_on, 15)."), Texts{"true"});
  EXPECT_EQ(answer_texts(e, "?- holdsAt(light_on, 15.5)."), Texts{});
  EXPECT_EQ(answer_texts(e, "?- holdsAt(light_on, 14.5)."), Texts{"true"});
}

TEST(Engine, BlinkingUnfixedZeno) {
  Engine e(load({"apx-blinking/model.pl", "apx-blinking/trigger.pl", "apx-blinking/nar.pl"}));
  SolveOptions o;
  o.zeno_halt = true;
  EXPECT_THROW(answer_texts(e, "?- happens(turn_light_off, T).", o), ZenoHalt);
}

TEST(Engine, DepthLimit) {
  Engine e(load({"ex2-bank/model.pl", "ex2-bank/trigger.pl", "ex2-bank/nar.pl"}));
  SolveOptions o;
  o.depth_limit = 200;
  EXPECT_THROW(answer_texts(e, "?- happens(serviceFee, T).", o), DepthExhausted);
}
