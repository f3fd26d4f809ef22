// Copyright 2026 The hevec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Command-line driver: compile, run and emit subcommands.

#include "hevec/driver.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string slurp(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw hevec::Error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Flags {
  std::string file;
  int64_t slots = 16;
  int epochs = 1;
  int opt = 0;
  int opt_budget = 500;
  int max_evals = 4000;
  double seconds = 60;
  std::string schedule, weights;
  std::vector<std::string> dumps;
};

void add_compile_flags(CLI::App *cmd, Flags &f) {
  cmd->add_option("file", f.file, "Source program")->required();
  cmd->add_option("--slots", f.slots, "Slots per vector (power of two)");
  cmd->add_option("--epochs", f.epochs, "Search epochs");
  cmd->add_option("--opt", f.opt, "0: hoisting only, 1: rewrite circuits too")
      ->check(CLI::Range(0, 1));
  cmd->add_option("--schedule", f.schedule, "Use the schedule in this file");
  cmd->add_option("--weights", f.weights, "Cost weights (key = value lines)");
  cmd->add_option("--opt-budget", f.opt_budget,
                  "E-nodes rewriting may add per let");
  cmd->add_option("--search-evals", f.max_evals,
                  "Schedules evaluated per search epoch");
  cmd->add_option("--time-limit", f.seconds,
                  "Seconds allowed for search and for rewriting");
  cmd->add_option("--dump", f.dumps, "index-free, schedule, circuit, loopnest, vectors")
      ->check(CLI::IsMember(
          {"index-free", "schedule", "circuit", "loopnest", "vectors"}));
}

hevec::Compiled compile(const Flags &f) {
  hevec::CompileOptions o;
  o.slots = f.slots;
  o.epochs = f.epochs;
  o.opt = f.opt;
  if (!f.schedule.empty())
    o.schedule = slurp(f.schedule);
  if (!f.weights.empty())
    o.weights = hevec::CostWeights::parse(slurp(f.weights));
  o.optimize.node_budget = f.opt_budget;
  o.optimize.seconds = f.seconds;
  o.max_evals = f.max_evals;
  o.search_seconds = f.seconds;
  return hevec::compile(slurp(f.file), o);
}

void dump(const hevec::Compiled &c, const std::vector<std::string> &what,
          std::ostream &os) {
  for (const std::string &w : what) {
    if (w == "index-free") {
      os << hevec::print(c.index_free);
    } else if (w == "schedule") {
      os << hevec::print_schedule(c.schedule, c.index_free);
    } else if (w == "circuit") {
      os << hevec::print(c.circuit);
    } else if (w == "loopnest") {
      os << hevec::print(c.loopnest);
    } else if (w == "vectors") {
      for (const hevec::LStmt &s : c.loopnest.stmts)
        if (s.kind == hevec::LStmt::Kind::Val)
          os << s.name << ": " << hevec::vtype_name(s.type) << " = "
             << s.ctor.str() << "\n";
    }
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Vectorizing compiler for homomorphic-encryption array programs"};
  app.require_subcommand(1);
  Flags f;
  std::string inputs, binding;

  CLI::App *comp = app.add_subcommand("compile", "Compile and print the cost");
  add_compile_flags(comp, f);
  CLI::App *run = app.add_subcommand("run", "Compile, simulate and decode");
  add_compile_flags(run, f);
  run->add_option("--inputs", inputs, "JSON object of input arrays")->required();
  CLI::App *emit = app.add_subcommand("emit", "Print a call script");
  add_compile_flags(emit, f);
  emit->add_option("--binding", binding, "API binding (key = value lines)");

  CLI11_PARSE(app, argc, argv);
  try {
    hevec::Compiled c = compile(f);
    if (comp->parsed()) {
      dump(c, f.dumps, std::cout);
      if (f.dumps.empty())
        std::cout << hevec::print_schedule(c.schedule, c.index_free)
                  << c.cost.str() << "\n";
    } else if (run->parsed()) {
      dump(c, f.dumps, std::cerr);
      hevec::InputMap in = hevec::inputs_from_json(slurp(inputs), c.program);
      hevec::RunResult r = hevec::run(c, in);
      nlohmann::ordered_json j;
      j["output"] = nlohmann::json::parse(hevec::nest_to_json(r.output));
      j["trace"] = nlohmann::ordered_json::parse(r.trace.json());
      std::cout << j.dump() << "\n";
    } else {
      dump(c, f.dumps, std::cerr);
      hevec::Binding b = binding.empty() ? hevec::default_binding()
                                         : hevec::parse_binding(slurp(binding));
      std::cout << hevec::emit_script(c.loopnest, b);
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
