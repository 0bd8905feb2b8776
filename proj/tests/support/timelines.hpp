#pragma once

// Closed-form timelines of the corpus models, computed without the engine.

#include <optional>
#include <string>
#include <vector>

#include "zec/check_ground.hpp"

namespace zec::oracle {

inline Rational q(long num, long den = 1) { return make_rational(num, den); }

inline Term event_term(const std::string& text) {
  return parse_program("e(" + text + ").").clauses().front().head->args[0];
}

inline Occurrence occ(const std::string& event, const Rational& t) { return {event_term(event), t}; }

/// A switch condition on the draining tank, relative to the phase start.
struct SwitchRule {
  enum Kind { AtMost, Exactly, Below } kind = AtMost;
  Rational level = 50;
  std::optional<Rational> min_d;    // elapsed >= min_d
  std::optional<Rational> exact_d;  // elapsed == exact_d
};

/// Earliest time after `start` at which any rule fires for a tank holding
/// `w0` at `start` and draining at 20 per unit. Empty when no rule fires or
/// when the firing set has no least element.
inline std::optional<Rational> earliest_switch(const Rational& start, const Rational& w0, const std::vector<SwitchRule>& rules) {
  std::optional<Rational> best;
  auto consider = [&](const Rational& t) {
    if (!best || t < *best) best = t;
  };
  for (const auto& r : rules) {
    Rational hit = start + (w0 - r.level) / 20;
    switch (r.kind) {
      case SwitchRule::AtMost:
        if (r.min_d) {
          consider(hit > start + *r.min_d ? hit : start + *r.min_d);
        } else if (hit > start) {
          consider(hit);
        } else {
          return std::nullopt;
        }
        break;
      case SwitchRule::Exactly:
        if (hit > start && (!r.min_d || hit - start >= *r.min_d)) consider(hit);
        break;
      case SwitchRule::Below: {
        Rational t = start + *r.exact_d;
        if (w0 - 20 * *r.exact_d < r.level) consider(t);
        break;
      }
    }
  }
  return best;
}

/// Two tanks, start(right) at 10, both at 100. The filling tank gains 10 and
/// the other loses 20 per unit time.
struct TwoTanks {
  std::vector<Occurrence> events;
  struct Phase {
    Rational start, left, right;
    bool left_filling;
  };
  std::vector<Phase> phases;

  TwoTanks(const std::vector<SwitchRule>& rules, const Rational& horizon) {
    events.push_back(occ("start(right)", 10));
    phases.push_back({10, 100, 100, false});
    for (;;) {
      const Phase& p = phases.back();
      Rational draining = p.left_filling ? p.right : p.left;
      auto t = earliest_switch(p.start, draining, rules);
      if (!t || *t > horizon) break;
      Rational dt = *t - p.start;
      Rational l = p.left + (p.left_filling ? 10 : -20) * dt;
      Rational r = p.right + (p.left_filling ? -20 : 10) * dt;
      events.push_back(occ(p.left_filling ? "switch_right" : "switch_left", *t));
      phases.push_back({*t, l, r, !p.left_filling});
    }
  }

  std::vector<Rational> times(const std::string& event) const {
    std::vector<Rational> out;
    for (const auto& e : events)
      if (to_string(e.event) == event) out.push_back(e.time);
    return out;
  }

  Rational left_at(const Rational& t) const { return level(t, true); }
  Rational right_at(const Rational& t) const { return level(t, false); }

 private:
  Rational level(const Rational& t, bool left) const {
    const Phase* cur = &phases.front();
    for (const auto& p : phases)
      if (p.start < t) cur = &p;
    Rational dt = t - cur->start;
    bool gaining = cur->left_filling == left;
    return (left ? cur->left : cur->right) + (gaining ? 10 : -20) * dt;
  }
};

/// One tank: a start event at 10 picks the first mode, switch_right events
/// from the narrative turn filling into draining (only above 50 when
/// `guarded`), switch_left fires on the rules while draining.
struct OneTank {
  std::vector<Occurrence> events;
  struct Phase {
    Rational start, level;
    bool filling;
  };
  std::vector<Phase> phases;

  OneTank(const Rational& initial, bool start_filling, std::vector<Rational> switch_right,
          const std::vector<SwitchRule>& rules, const Rational& horizon, bool guarded = false) {
    events.push_back(occ(start_filling ? "start(left)" : "start(right)", 10));
    for (const auto& t : switch_right) events.push_back(occ("switch_right", t));
    phases.push_back({10, initial, start_filling});
    std::size_t next_right = 0;
    for (;;) {
      const Phase p = phases.back();
      std::optional<Rational> trig;
      if (!p.filling) trig = earliest_switch(p.start, p.level, rules);
      while (next_right < switch_right.size() && switch_right[next_right] <= p.start) ++next_right;
      std::optional<Rational> narr;
      if (next_right < switch_right.size()) narr = switch_right[next_right];
      if (trig && (!narr || *trig < *narr)) {
        if (*trig > horizon) break;
        events.push_back(occ("switch_left", *trig));
        phases.push_back({*trig, p.level - 20 * (*trig - p.start), true});
      } else if (narr && *narr <= horizon) {
        ++next_right;
        Rational lvl = p.level + (p.filling ? 10 : -20) * (*narr - p.start);
        if (p.filling && (!guarded || lvl > 50)) phases.push_back({*narr, lvl, false});
      } else {
        break;
      }
    }
  }

  std::vector<Rational> times(const std::string& event) const {
    std::vector<Rational> out;
    for (const auto& e : events)
      if (to_string(e.event) == event) out.push_back(e.time);
    return out;
  }

  Rational level_at(const Rational& t) const {
    const Phase* cur = &phases.front();
    for (const auto& p : phases)
      if (p.start < t) cur = &p;
    return cur->level + (cur->filling ? 10 : -20) * (t - cur->start);
  }
};

/// Light turned on at 10, then alternating every `period` until the horizon.
inline std::vector<Occurrence> blinking(const Rational& period, const Rational& horizon) {
  std::vector<Occurrence> out;
  bool on = true;
  for (Rational t = 10; t <= horizon; t += period, on = !on) out.push_back(occ(on ? "turn_light_on" : "turn_light_off", t));
  return out;
}

/// Light on at 10, then fade-in and fade-out phases of 10 units each.
inline std::vector<Occurrence> pulsing(const Rational& horizon) {
  std::vector<Occurrence> out{occ("turn_light_on", 10)};
  bool in = true;
  for (Rational t = 20; t <= horizon; t += 10, in = !in) out.push_back(occ(in ? "fade_in_end" : "fade_out_end", t));
  return out;
}

/// Brightness of the pulsing light. At a phase boundary the ending phase
/// still supplies the value.
inline Rational pulsing_brightness(const Rational& t) {
  if (t <= 10) return 0;
  Rational s = (t - 10) / 10;
  mpz_class n = s.get_num() / s.get_den();
  Rational r = (s - Rational(n)) * 10;
  if (r == 0) {
    n -= 1;
    r = 10;
  }
  return n % 2 == 0 ? r : 10 - r;
}

}  // namespace zec::oracle
