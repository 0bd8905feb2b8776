#pragma once

// Forward loop that turns incremental events into incr_happens facts.

#include <optional>
#include <vector>

#include "zec/engine.hpp"

namespace zec {

struct IncrementalState {
  Rational frontier = 0;
  std::vector<IncrFact> facts;
  Rational max_time = 0;
  std::size_t iterations = 0;
  std::size_t chain_depth = 0;
  /// Every incremental occurrence up to this time is in `facts`.
  Rational complete_until = 0;
};

struct NonPointOccurrence : EngineError {
  using EngineError::EngineError;
};
struct IncrMaxTimeMissing : EngineError {
  IncrMaxTimeMissing() : EngineError("incremental mode needs !incr_max_time(R) or --incr-max-time") {}
};

/// The `!incr_max_time(R)` directive of a query, if present.
std::optional<Rational> incr_max_time(const Query& query);

IncrementalState run_incremental(const Engine& engine, const Rational& max_time, const SolveOptions& options);

/// Solves `query` with the facts of `state` visible to incr_happens/2.
std::vector<Answer> query_with_kb(const Engine& engine, const IncrementalState& state, const Query& query,
                                  SolveOptions options, SolveStats* stats = nullptr);

}  // namespace zec
