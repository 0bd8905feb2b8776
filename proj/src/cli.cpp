#include "zec/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace zec {

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void setup_app(CLI::App& app, RunConfig& c, std::string& corpus, std::string& max_time) {
  app.add_option("files", c.files, "Model and narrative files");
  app.add_option("-q,--query", c.queries, "Query to run (repeatable); defaults to the queries in the files");
  app.add_flag("--zeno_halt,--zeno-halt", c.zeno_halt, "Halt on Zeno-descending event chains");
  app.add_flag("--incremental", c.incremental, "Materialize incremental events first");
  app.add_option("--incr-max-time", max_time, "Time limit of the incremental loop");
  app.add_option("--depth", c.depth_limit, "Derivation depth limit")->check(CLI::PositiveNumber);
  app.add_option("--answers", c.answer_limit, "Stop after this many answers per query (0 = all)");
  app.add_flag("--json", c.json, "JSON output");
  bool no_ec = false;
  app.add_flag("--no-ec", no_ec, "Do not generate can_* facts")->each([&c](const std::string&) { c.ec_preprocess = false; });
  app.add_flag("--no-table", "Disable call tabling")->each([&c](const std::string&) { c.tabling = false; });
  app.add_option("--corpus", corpus, "Run a corpus manifest");
}

void finish_config(RunConfig& c, const std::string& max_time) {
  if (!max_time.empty()) c.incr_max_time = parse_decimal(max_time);
}

nlohmann::json bound_json(const Bound& b) {
  if (!b.present) return nullptr;
  return {{"value", format_rational(b.value)}, {"strict", b.strict}};
}

nlohmann::json outcome_json(const QueryOutcome& o) {
  nlohmann::json answers = nlohmann::json::array();
  for (const auto& a : o.answers) {
    nlohmann::json bindings = nlohmann::json::object();
    auto namer = [&a](VarId v) { return a.var_name(v); };
    for (VarId q = 0; q < a.values.size(); ++q) {
      if (a.names[q] == "_" || a.names[q][0] == '_') continue;
      const Term& v = a.values[q];
      if (!v->is_var() || v->id != q) bindings[a.names[q]] = to_string(v, namer);
    }
    nlohmann::json residual = nlohmann::json::array();
    for (const auto& c : a.residual) residual.push_back(render_constraint(c, namer));
    answers.push_back({{"text", a.text()}, {"bindings", bindings}, {"residual", residual}});
  }
  nlohmann::json zeno = nullptr;
  if (o.zeno) {
    const auto& r = *o.zeno;
    zeno = {{"event", r.event_text},
            {"variables", {r.older_var, r.newer_var, r.current_var}},
            {"depths", {r.node_depths[0], r.node_depths[1], r.node_depths[2]}},
            {"interval", render_interval(r.lower, r.upper)},
            {"lower", bound_json(r.lower)},
            {"upper", bound_json(r.upper)},
            {"warning", r.warning}};
  }
  nlohmann::json j = {{"query", o.query},
                      {"answers", answers},
                      {"zeno_report", zeno},
                      {"stats", {{"nodes", o.stats.nodes}, {"max_depth", o.stats.max_depth}, {"time_ms", o.stats.time_ms}}}};
  if (o.depth_exhausted) j["depth_exhausted"] = true;
  if (!o.error.empty()) j["error"] = o.error;
  return j;
}

std::string fact_text(const IncrFact& f) {
  return "incr_happens(" + to_string(f.event) + ", " + format_rational(f.time) + ")";
}

}  // namespace

std::string normalize_query(std::string text) {
  text = trim(std::move(text));
  if (text.rfind("?-", 0) != 0) text = "?- " + text;
  if (text.empty() || text.back() != '.') text += ".";
  return text;
}

std::string parse_flags(const std::vector<std::string>& args, RunConfig& config, std::string* corpus) {
  CLI::App app{"zeno-ec"};
  std::string corpus_path, max_time;
  setup_app(app, config, corpus_path, max_time);
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
    finish_config(config, max_time);
  } catch (const CLI::ParseError& e) {
    return e.what();
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  if (corpus) *corpus = corpus_path;
  return {};
}

RunResult execute(const RunConfig& config) {
  RunResult result;
  ModelProgram program;
  for (const auto& f : config.files) program.append(parse_program(read_file(f)));
  std::vector<Query> queries;
  if (config.queries.empty()) {
    queries = program.queries();
  } else {
    for (const auto& q : config.queries) queries.push_back(parse_query(normalize_query(q)));
  }

  Engine engine(program, config.ec_preprocess);
  SolveOptions opts;
  opts.zeno_halt = config.zeno_halt;
  opts.depth_limit = config.depth_limit;
  opts.answer_limit = config.answer_limit;
  opts.tabling = config.tabling;

  auto halt = [&](QueryOutcome o, int code, std::string diag) {
    result.outcomes.push_back(std::move(o));
    result.exit_code = code;
    result.diagnostic = std::move(diag);
    return result;
  };

  if (config.incremental) {
    std::optional<Rational> max_time = config.incr_max_time;
    for (const auto& q : queries) {
      if (!max_time) max_time = incr_max_time(q);
    }
    QueryOutcome o;
    o.query = "(incremental)";
    if (!max_time) return halt(std::move(o), kExitIncremental, IncrMaxTimeMissing().what());
    try {
      result.incremental = run_incremental(engine, *max_time, opts);
    } catch (const ZenoHalt& z) {
      o.zeno = z.report;
      return halt(std::move(o), kExitZeno, z.report.warning);
    } catch (const DepthExhausted& d) {
      o.depth_exhausted = true;
      return halt(std::move(o), kExitDepth, std::string("error: ") + d.what());
    } catch (const EngineError& e) {
      o.error = e.what();
      return halt(std::move(o), kExitIncremental, std::string("error: ") + e.what());
    }
    opts.incr_facts = result.incremental->facts;
    opts.incr_complete = result.incremental->complete_until;
  }

  bool all_answered = true;
  for (const auto& q : queries) {
    QueryOutcome o;
    o.query = q.text;
    auto start = std::chrono::steady_clock::now();
    try {
      o.stats = engine.solve(q, opts, [&o](const Answer& a) {
        o.answers.push_back(a);
        return false;
      });
    } catch (const ZenoHalt& z) {
      o.zeno = z.report;
      return halt(std::move(o), kExitZeno, z.report.warning);
    } catch (const DepthExhausted& d) {
      o.depth_exhausted = true;
      return halt(std::move(o), kExitDepth, std::string("error: ") + d.what());
    } catch (const EngineError& e) {
      o.error = e.what();
      return halt(std::move(o), kExitParse, std::string("error: ") + e.what());
    }
    o.stats.time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (o.answers.empty()) all_answered = false;
    result.outcomes.push_back(std::move(o));
  }
  result.exit_code = all_answered ? kExitAnswers : kExitFailed;
  return result;
}

void print_text(const RunResult& result, std::ostream& out, std::ostream& err) {
  if (result.incremental) {
    for (const auto& f : result.incremental->facts) out << "% " << fact_text(f) << ".\n";
  }
  bool headers = result.outcomes.size() > 1;
  for (const auto& o : result.outcomes) {
    if (headers) out << o.query << "\n";
    for (const auto& a : o.answers) out << a.text() << "\n";
    if (o.answers.empty() && !o.zeno && !o.depth_exhausted && o.error.empty()) out << "false\n";
  }
  if (!result.diagnostic.empty()) err << result.diagnostic << "\n";
}

void print_json(const RunResult& result, std::ostream& out) {
  nlohmann::json j;
  if (result.outcomes.size() == 1) {
    j = outcome_json(result.outcomes.front());
  } else {
    j = nlohmann::json::object();
    j["queries"] = nlohmann::json::array();
    for (const auto& o : result.outcomes) j["queries"].push_back(outcome_json(o));
  }
  if (result.incremental) {
    nlohmann::json facts = nlohmann::json::array();
    for (const auto& f : result.incremental->facts)
      facts.push_back({{"event", to_string(f.event)}, {"time", format_rational(f.time)}});
    j["incr_facts"] = facts;
  }
  j["exit_code"] = result.exit_code;
  out << j.dump(2) << "\n";
}

std::vector<CorpusRow> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path);
  std::vector<CorpusRow> rows;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto cols = split(t, '|');
    if (cols.size() != 4) throw std::runtime_error(path + ":" + std::to_string(n) + ": expected 4 columns");
    CorpusRow row;
    row.line = n;
    std::istringstream files(cols[0]);
    for (std::string f; files >> f;) row.files.push_back(f);
    row.query = trim(cols[1]);
    row.flags = trim(cols[2]);
    row.expectation = trim(cols[3]);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string describe_outcome(const RunResult& result) {
  if (result.outcomes.empty()) return "NO_ANSWER";
  const auto& o = result.outcomes.back();
  if (o.zeno) return "ZENO_HALT(" + o.zeno->event_text + ")";
  if (o.depth_exhausted) return "DEPTH_EXHAUSTED";
  if (!o.error.empty()) return "ERROR(" + o.error + ")";
  if (o.answers.empty()) return "NO_ANSWER";
  std::string s = "ANSWERS(";
  for (std::size_t i = 0; i < o.answers.size(); ++i) s += (i ? "; " : "") + o.answers[i].text();
  return s + ")";
}

bool matches_expectation(const std::string& expectation, const RunResult& result) {
  std::string actual = describe_outcome(result);
  const std::string zeno = "ZENO_HALT(";
  if (expectation.rfind(zeno, 0) == 0 && actual.rfind(zeno, 0) == 0) {
    std::string events = expectation.substr(zeno.size(), expectation.size() - zeno.size() - 1);
    std::string got = actual.substr(zeno.size(), actual.size() - zeno.size() - 1);
    for (const auto& e : split(events, '/'))
      if (trim(e) == got) return true;
    return false;
  }
  return expectation == actual;
}

CorpusRowResult run_corpus_row(const CorpusRow& row, const std::string& base_dir) {
  CorpusRowResult r;
  r.row = row;
  RunConfig config;
  std::istringstream flags(row.flags);
  std::vector<std::string> args;
  for (std::string f; flags >> f;) args.push_back(f);
  auto start = std::chrono::steady_clock::now();
  if (std::string err = parse_flags(args, config); !err.empty()) {
    r.actual = "BAD_FLAGS(" + err + ")";
    return r;
  }
  for (const auto& f : row.files) config.files.push_back((std::filesystem::path(base_dir) / f).string());
  config.queries = {row.query};
  try {
    RunResult res = execute(config);
    r.actual = describe_outcome(res);
    r.pass = matches_expectation(row.expectation, res);
  } catch (const std::exception& e) {
    r.actual = std::string("ERROR(") + e.what() + ")";
  }
  r.time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

int run_corpus(const std::string& manifest, std::ostream& out) {
  auto rows = read_manifest(manifest);
  std::string base = std::filesystem::path(manifest).parent_path().string();
  std::size_t passed = 0;
  for (const auto& row : rows) {
    auto r = run_corpus_row(row, base);
    if (r.pass) ++passed;
    char ms[32];
    std::snprintf(ms, sizeof ms, "%9.1f ms", r.time_ms);
    out << (r.pass ? "PASS " : "FAIL ") << "line " << row.line << "  " << ms << "  " << row.query;
    if (!row.flags.empty()) out << "  [" << row.flags << "]";
    out << "\n";
    if (!r.pass) out << "     expected " << row.expectation << "\n     actual   " << r.actual << "\n";
  }
  out << passed << "/" << rows.size() << " rows passed\n";
  return passed == rows.size() ? 0 : 1;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Event calculus reasoner over exact rational time"};
  RunConfig config;
  std::string corpus, max_time;
  setup_app(app, config, corpus, max_time);
  try {
    app.parse(argc, argv);
    finish_config(config, max_time);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : kExitParse;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitParse;
  }
  if (!corpus.empty()) {
    try {
      return run_corpus(corpus, out);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitParse;
    }
  }
  if (config.files.empty()) {
    err << "error: at least one input file is required\n";
    return kExitParse;
  }
  RunResult result;
  try {
    result = execute(config);
  } catch (const ParseError& e) {
    err << "parse error at line " << e.line << ", column " << e.column << " near '" << e.token << "': " << e.what() << "\n";
    return kExitParse;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitParse;
  }
  if (config.json) {
    print_json(result, out);
    if (!result.diagnostic.empty()) err << result.diagnostic << "\n";
  } else {
    print_text(result, out, err);
  }
  return result.exit_code;
}

}  // namespace zec
