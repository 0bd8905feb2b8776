#pragma once

// Command-line front end and golden-corpus runner.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "zec/engine.hpp"
#include "zec/incremental.hpp"

namespace zec {

enum ExitCode : int {
  kExitAnswers = 0,
  kExitFailed = 1,
  kExitZeno = 2,
  kExitParse = 3,
  kExitDepth = 4,
  kExitIncremental = 5,
};

struct RunConfig {
  std::vector<std::string> files;
  std::vector<std::string> queries;  // empty: run the queries found in the files
  bool zeno_halt = false;
  bool incremental = false;
  bool ec_preprocess = true;
  bool tabling = true;
  std::size_t depth_limit = 2000;
  std::size_t answer_limit = 0;
  bool json = false;
  std::optional<Rational> incr_max_time;
};

struct QueryOutcome {
  std::string query;
  std::vector<Answer> answers;
  std::optional<ZenoChainReport> zeno;
  bool depth_exhausted = false;
  std::string error;  // engine or incremental error text
  SolveStats stats;
};

struct RunResult {
  int exit_code = kExitAnswers;
  std::vector<QueryOutcome> outcomes;
  std::optional<IncrementalState> incremental;
  std::string diagnostic;
};

/// Adds "?-" and the final "." when missing.
std::string normalize_query(std::string text);

/// Parses argv-style flags (without the program name) into `config`.
/// Returns an error message, empty on success.
std::string parse_flags(const std::vector<std::string>& args, RunConfig& config, std::string* corpus = nullptr);

/// Loads, solves and classifies. Throws ParseError for bad input.
RunResult execute(const RunConfig& config);

void print_text(const RunResult& result, std::ostream& out, std::ostream& err);
void print_json(const RunResult& result, std::ostream& out);

struct CorpusRow {
  int line = 0;
  std::vector<std::string> files;
  std::string query;
  std::string flags;
  std::string expectation;
};

struct CorpusRowResult {
  CorpusRow row;
  bool pass = false;
  std::string actual;
  double time_ms = 0;
};

std::vector<CorpusRow> read_manifest(const std::string& path);
/// Renders the outcome of a single-query run as a manifest expectation.
std::string describe_outcome(const RunResult& result);
bool matches_expectation(const std::string& expectation, const RunResult& result);
CorpusRowResult run_corpus_row(const CorpusRow& row, const std::string& base_dir);
/// Prints a pass/fail table; returns 0 iff every row passes.
int run_corpus(const std::string& manifest, std::ostream& out);

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace zec
