#pragma once

// Direct evaluation of the event calculus over a finite ground timeline.
// Independent of the resolution engine; used to certify its answers.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "zec/program.hpp"

namespace zec {

struct Occurrence {
  Term event;
  Rational time;
};

class GroundChecker {
 public:
  GroundChecker(const ModelProgram& program, std::vector<Occurrence> occurrences);
  ~GroundChecker();

  /// Ground instances of `pattern` that hold at t.
  std::vector<Term> holding(const Term& pattern, const Rational& t);
  bool holds(const Term& fluent, const Rational& t);
  bool happens(const Term& event, const Rational& t) const;
  /// Ground goal: holdsAt/2, holdsAt/3 (control fluent), happens/2, not_holdsAt/2,
  /// not_happens/2 or a constraint.
  bool check_goal(const Term& goal);
  /// Every occurrence with no narrative fact behind it has a satisfied trigger rule.
  bool supported(const Occurrence& occ);

  const std::vector<Occurrence>& occurrences() const { return occurrences_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::vector<Occurrence> occurrences_;
};

bool check_ground(const ModelProgram& program, const std::vector<Occurrence>& occurrences, const Term& fluent,
                  const Rational& t);

}  // namespace zec
