// loop2rec: transform, run, diff, analyze and fuzz MiniJava-L programs.
//
// Exit codes: 0 ok, 1 mismatch, 2 front-end error or unsupported construct,
// 3 I/O error, 4 step budget exceeded, 5 runtime error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "loop2rec/analysis.hpp"
#include "loop2rec/interpreter.hpp"
#include "loop2rec/parser.hpp"
#include "loop2rec/transform.hpp"
#include "loop2rec/verify.hpp"

namespace fs = std::filesystem;
using namespace loop2rec;

namespace {

enum Exit { kOk = 0, kMismatch = 1, kFrontEnd = 2, kIo = 3, kBudget = 4, kRuntime = 5 };

struct ExitWith {
  int code;
};

struct Config {
  std::string input;
  std::string output;
  bool no_optimize = false;
  uint64_t budget = 1'000'000;
  uint64_t seed = 0;
  int count = 500;
  bool json = false;
  bool trace = false;
  bool dump_analysis = false;
  bool verify = false;
  std::string mutant = "none";
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << path << ": cannot open\n";
    throw ExitWith{kIo};
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) {
    std::cerr << path << ": read error\n";
    throw ExitWith{kIo};
  }
  return ss.str();
}

void write_output(const Config& cfg, const std::string& text) {
  if (cfg.output.empty() || cfg.output == "-") {
    std::cout << text;
    return;
  }
  std::error_code ec;
  if (!cfg.input.empty() && fs::exists(cfg.output) &&
      fs::equivalent(cfg.input, cfg.output, ec)) {
    std::cerr << cfg.output << ": refusing to overwrite the input file\n";
    throw ExitWith{kIo};
  }
  std::ofstream out(cfg.output, std::ios::binary);
  out << text;
  out.close();
  if (!out) {
    std::cerr << cfg.output << ": write error\n";
    throw ExitWith{kIo};
  }
}

Program load_checked(const std::string& path) {
  std::string text = read_file(path);
  Program p;
  try {
    p = parse(text);
  } catch (const ParseError& e) {
    std::cerr << e.format(path) << "\n";
    throw ExitWith{kFrontEnd};
  }
  auto errors = check_semantics(p);
  if (!errors.empty()) {
    for (const auto& e : errors) std::cerr << e.format(path) << "\n";
    throw ExitWith{kFrontEnd};
  }
  return p;
}

Mutant parse_mutant(const std::string& name) {
  for (Mutant m : {Mutant::None, Mutant::DropForUpdate, Mutant::SwapCondCheck,
                   Mutant::OmitModifiedVar})
    if (name == to_string(m)) return m;
  std::cerr << "unknown mutant: " << name << "\n";
  throw ExitWith{kFrontEnd};
}

TransformOptions transform_options(const Config& cfg) {
  TransformOptions o;
  o.optimize = !cfg.no_optimize;
  o.mutant = parse_mutant(cfg.mutant);
  return o;
}

std::string analysis_json(const Program& p, bool optimize) {
  auto sites = collect_loops(p);
  NameSupply names(p);
  AnalysisOptions ao;
  ao.optimize = optimize;
  std::vector<LoopAnalysis> analyses;
  for (const auto& s : sites)
    analyses.push_back(analyze_loop(*s.loop, *s.method, p, names, ao));
  return analyses_to_json(sites, analyses);
}

std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + xs[i];
  return out;
}

std::string analysis_text(const Program& p, bool optimize) {
  auto sites = collect_loops(p);
  NameSupply names(p);
  AnalysisOptions ao;
  ao.optimize = optimize;
  std::ostringstream out;
  for (const auto& s : sites) {
    LoopAnalysis a = analyze_loop(*s.loop, *s.method, p, names, ao);
    std::vector<std::string> params, modified, live;
    for (const auto& v : a.params) params.push_back(v.name);
    for (const auto& v : a.modified) modified.push_back(v.name);
    for (const auto& v : a.live_after) live.push_back(v.name);
    out << "loop " << s.id << " (" << to_string(a.kind) << ", " << s.method->name
        << " " << to_string(s.loop->loc) << ") -> " << a.loop_method_name
        << "\n  params:    " << join(params)
        << "\n  modified:  " << join(modified)
        << "\n  liveAfter: " << join(live)
        << "\n  packing:   " << to_string(a.packing) << "\n";
  }
  return out.str();
}

int cmd_transform(const Config& cfg) {
  Program p = load_checked(cfg.input);
  if (cfg.dump_analysis) std::cerr << analysis_json(p, !cfg.no_optimize) << "\n";
  TransformResult r = transform_program(p, transform_options(cfg));
  std::string text = pretty_print(r.program);
  if (cfg.verify) {
    try {
      auto errors = check_semantics(parse(text));
      if (!errors.empty()) {
        std::cerr << "verify: " << errors.front().format("<transformed>") << "\n";
        return kFrontEnd;
      }
    } catch (const ParseError& e) {
      std::cerr << "verify: " << e.format("<transformed>") << "\n";
      return kFrontEnd;
    }
  }
  write_output(cfg, text);
  return kOk;
}

int cmd_run(const Config& cfg) {
  Program p = load_checked(cfg.input);
  RunOptions ro;
  ro.budget = cfg.budget;
  if (cfg.trace) {
    ro.observer = [](const TraceEvent& e, const State&) {
      std::cerr << to_string(e.rule) << " " << to_string(e.loc) << " "
                << e.depth << "\n";
    };
  }
  ExecTrace t = run(p, ro);
  for (const auto& line : t.prints) std::cout << line << "\n";
  switch (t.status) {
    case RunStatus::Ok: return kOk;
    case RunStatus::BudgetExceeded:
      std::cerr << cfg.input << ": step budget of " << cfg.budget
                << " exceeded\n";
      return kBudget;
    case RunStatus::RuntimeError:
      std::cerr << cfg.input << ":" << to_string(t.error_loc) << ": "
                << to_string(*t.error) << ": " << t.error_message << "\n";
      return kRuntime;
  }
  return kRuntime;
}

int cmd_diff(const Config& cfg) {
  Program p = load_checked(cfg.input);
  DiffReport r = diff_run(p, transform_options(cfg), cfg.budget);
  if (cfg.json) {
    std::cout << to_json(r) << "\n";
  } else if (r.equivalent()) {
    std::cout << "Equivalent (" << r.original.steps << " / "
              << r.transformed.steps << " steps, " << r.loops.size()
              << " loops)\n";
  } else {
    std::cout << "Mismatch at " << r.detail() << "\n";
  }
  return r.equivalent() ? kOk : kMismatch;
}

int cmd_analyze(const Config& cfg) {
  Program p = load_checked(cfg.input);
  if (cfg.json || cfg.dump_analysis)
    write_output(cfg, analysis_json(p, !cfg.no_optimize) + "\n");
  else
    write_output(cfg, analysis_text(p, !cfg.no_optimize));
  return kOk;
}

int cmd_fuzz(const Config& cfg) {
  GenConfig g;
  g.seed = cfg.seed;
  FuzzOptions fo;
  fo.budget = cfg.budget;
  fo.transform = transform_options(cfg);
  FuzzSummary s = fuzz_campaign(cfg.count, g, fo);
  if (cfg.json) {
    std::cout << to_json(s) << "\n";
  } else {
    std::cout << s.equivalent << "/" << s.total << " equivalent, tail "
              << s.tail_ok << "/" << s.total << ", iterations "
              << s.iter_call_ok << "/" << s.total << ", budget exceeded "
              << s.budget_exceeded << "\n";
    for (const auto& m : s.mismatches)
      std::cout << "  seed " << m.seed << ": " << m.detail << "\n";
  }
  return s.all_passed() ? kOk : kMismatch;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loop to tail-recursion transpiler for MiniJava-L"};
  app.require_subcommand(1, 1);
  Config cfg;

  auto input = [&](CLI::App* sub) {
    sub->add_option("file", cfg.input, "MiniJava-L source (.mj)")->required();
  };
  auto optimize = [&](CLI::App* sub) {
    sub->add_flag("--no-optimize", cfg.no_optimize,
                  "hand back every parameter as Object[]");
  };
  auto budget = [&](CLI::App* sub) {
    sub->add_option("--budget", cfg.budget, "step budget per run")
        ->check(CLI::PositiveNumber);
  };
  auto mutant = [&](CLI::App* sub) {
    sub->add_option("--mutant", cfg.mutant)->group("");
  };

  auto* transform = app.add_subcommand("transform", "rewrite every loop as tail recursion");
  input(transform);
  transform->add_option("-o", cfg.output, "output file (default stdout)");
  optimize(transform);
  transform->add_flag("--dump-analysis", cfg.dump_analysis, "loop analysis JSON on stderr");
  transform->add_flag("--verify", cfg.verify, "re-parse and re-check the output");
  mutant(transform);

  auto* run_cmd = app.add_subcommand("run", "interpret a program");
  input(run_cmd);
  budget(run_cmd);
  run_cmd->add_flag("--trace", cfg.trace, "one line per rule application on stderr");

  auto* diff = app.add_subcommand("diff", "compare a program with its transformed form");
  input(diff);
  optimize(diff);
  budget(diff);
  diff->add_flag("--json", cfg.json, "JSON report");
  mutant(diff);

  auto* analyze = app.add_subcommand("analyze", "show per-loop analysis");
  input(analyze);
  analyze->add_option("-o", cfg.output, "output file (default stdout)");
  optimize(analyze);
  analyze->add_flag("--json,--dump-analysis", cfg.json, "JSON output");

  auto* fuzz = app.add_subcommand("fuzz", "differential fuzzing on generated programs");
  fuzz->add_option("-n", cfg.count, "number of programs")->check(CLI::NonNegativeNumber);
  fuzz->add_option("--seed", cfg.seed, "first seed");
  optimize(fuzz);
  budget(fuzz);
  fuzz->add_flag("--json", cfg.json, "JSON summary");
  mutant(fuzz);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kFrontEnd;
  }

  try {
    if (transform->parsed()) return cmd_transform(cfg);
    if (run_cmd->parsed()) return cmd_run(cfg);
    if (diff->parsed()) return cmd_diff(cfg);
    if (analyze->parsed()) return cmd_analyze(cfg);
    if (fuzz->parsed()) return cmd_fuzz(cfg);
  } catch (const ExitWith& e) {
    return e.code;
  } catch (const UnsupportedConstruct& e) {
    std::cerr << cfg.input << ":" << to_string(e.loc())
              << ": UnsupportedConstruct: " << e.what() << "\n";
    return kFrontEnd;
  }
  return kFrontEnd;
}
