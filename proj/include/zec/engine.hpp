#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "zec/constraints.hpp"
#include "zec/program.hpp"

namespace zec {

struct IncrFact {
  Term event;
  Rational time;
};

struct SolveOptions {
  bool zeno_halt = false;
  std::size_t depth_limit = 2000;
  std::size_t answer_limit = 0;  // 0 = unlimited
  /// Memoizes ground-time happens/holdsAt calls within one solve.
  bool tabling = true;
  std::vector<IncrFact> incr_facts;
  /// incr_facts list every incremental occurrence up to this time. A happens/2
  /// call on an incremental event whose time is entailed to lie at or before
  /// it reads the facts instead of the trigger rules.
  std::optional<Rational> incr_complete;
  /// Called on every goal expansion (goal text, depth). For tracing only.
  std::function<void(const std::string&, std::size_t)> trace;
};

struct ZenoChainReport {
  Term event;
  std::string event_text;
  std::string older_var, newer_var, current_var;
  Bound lower, upper;
  std::array<std::size_t, 3> node_depths{};  // older, newer, current
  std::string warning;
};

std::string render_interval(const Bound& lower, const Bound& upper);
std::string render_warning(const ZenoChainReport& report);

struct ZenoHalt : std::runtime_error {
  explicit ZenoHalt(ZenoChainReport r) : std::runtime_error(r.warning), report(std::move(r)) {}
  ZenoChainReport report;
};

struct DepthExhausted : std::runtime_error {
  explicit DepthExhausted(std::size_t limit)
      : std::runtime_error("depth limit " + std::to_string(limit) + " exhausted"), limit(limit) {}
  std::size_t limit;
};

/// Runtime errors in the model: non-linear arithmetic, bad durations,
/// negation over non-numeric bindings.
struct EngineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidDuration : EngineError {
  using EngineError::EngineError;
};
struct NonLinear : EngineError {
  using EngineError::EngineError;
};

struct Answer {
  std::vector<std::string> names;  // query variables, index = VarId
  std::vector<Term> values;        // resolved value per query variable
  /// Projection of the final store, over query VarIds and extra ids >= names.size().
  std::vector<LinConstraint> residual;

  std::string var_name(VarId v) const;
  /// "X = 490", "T ~ {T > 10, T =< 20}"; "true" when nothing is bound.
  std::vector<std::string> lines() const;
  std::string text() const;
};

struct SolveStats {
  std::size_t nodes = 0;
  std::size_t max_depth = 0;
  std::size_t table_hits = 0;
  double time_ms = 0;
};

/// Adds can_initiates/can_terminates/can_releases/can_trajectory facts.
ModelProgram generate_can_facts(const ModelProgram& program);

class Engine {
 public:
  /// `preprocess` runs generate_can_facts; turn off only if the model
  /// supplies its own can_* facts.
  explicit Engine(ModelProgram program, bool preprocess = true);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const ModelProgram& program() const { return program_; }

  using AnswerSink = std::function<bool(const Answer&)>;  // return true to stop

  /// Enumerates answers depth-first. Throws ZenoHalt, DepthExhausted or EngineError.
  SolveStats solve(const Query& query, const SolveOptions& options, const AnswerSink& sink) const;
  std::vector<Answer> solve_all(const Query& query, const SolveOptions& options, SolveStats* stats = nullptr) const;

  bool is_declared(std::string_view kind, const Term& t) const;
  bool is_incremental(const Term& event) const;

 private:
  friend class Machine;
  ModelProgram program_;
  ModelProgram axioms_;
  std::vector<Term> fluents_, events_, incr_events_;
};

}  // namespace zec
