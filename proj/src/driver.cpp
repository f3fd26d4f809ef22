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

#include "hevec/driver.hpp"

#include "json.hpp"

namespace hevec {

Compiled compile(const std::string &source, const CompileOptions &opt) {
  if (!is_pow2(opt.slots))
    throw Error("slots must be a power of two, got " + std::to_string(opt.slots));
  if (opt.opt != 0 && opt.opt != 1)
    throw Error("--opt must be 0 or 1");
  Compiled c;
  c.program = check(parse(source));
  c.index_free = to_index_free(c.program);
  CircuitProgram circuit;
  if (opt.schedule) {
    c.schedule = parse_schedule(*opt.schedule, c.index_free, opt.slots);
    try {
      circuit = cgen(c.index_free, c.schedule, opt.slots);
    } catch (const ScheduleInvalid &e) {
      throw Error(std::string("forced schedule is invalid: ") + e.what());
    }
  } else {
    SearchOptions so;
    so.epochs = opt.epochs;
    so.slots = opt.slots;
    so.weights = opt.weights;
    so.max_evals = opt.max_evals;
    so.seconds = opt.search_seconds;
    SearchResult r = search(c.index_free, so);
    c.schedule = r.schedule;
    circuit = std::move(r.circuit);
  }
  if (opt.opt == 1)
    circuit = optimize(circuit, opt.weights, opt.optimize);
  c.circuit = hoist_plaintexts(circuit);
  c.cost = cost(c.circuit, opt.weights);
  c.loopnest = value_number(lower(c.circuit));
  mark_inplace(c.loopnest);
  return c;
}

RunResult run(const Compiled &c, const InputMap &inputs, int64_t slots) {
  for (const auto &s : c.program.stmts)
    if (s.kind == Statement::Kind::Input) {
      auto it = inputs.find(s.name);
      if (it == inputs.end())
        throw Error("missing input '" + s.name + "'");
      if (it->second.shape != s.shape)
        throw Error("input '" + s.name + "' has the wrong shape");
    }
  SimResult r = simulate(c.loopnest, inputs, slots);
  return {decode_output(c.circuit, r.outputs), r.trace};
}

namespace {

void flatten(const nlohmann::json &j, Shape &shape, size_t depth,
             std::vector<int64_t> &out, const std::string &name) {
  if (depth == shape.size()) {
    if (!j.is_number_integer())
      throw Error("input '" + name + "': expected an integer");
    out.push_back(j.get<int64_t>());
    return;
  }
  if (!j.is_array() || static_cast<int64_t>(j.size()) != shape[depth])
    throw Error("input '" + name + "': expected an array of length " +
                std::to_string(shape[depth]));
  for (const auto &e : j)
    flatten(e, shape, depth + 1, out, name);
}

nlohmann::json unflatten(const Nest &n, size_t depth, int64_t &pos) {
  if (depth == n.shape.size())
    return n.data[pos++];
  nlohmann::json a = nlohmann::json::array();
  for (int64_t k = 0; k < n.shape[depth]; ++k)
    a.push_back(unflatten(n, depth + 1, pos));
  return a;
}

} // namespace

InputMap inputs_from_json(const std::string &text, const Program &p) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception &e) {
    throw Error(std::string("invalid inputs JSON: ") + e.what());
  }
  if (!j.is_object())
    throw Error("inputs JSON must be an object");
  InputMap m;
  for (const auto &s : p.stmts) {
    if (s.kind != Statement::Kind::Input)
      continue;
    if (!j.contains(s.name))
      throw Error("missing input '" + s.name + "'");
    Nest n(s.shape);
    n.data.clear();
    Shape shape = s.shape;
    flatten(j[s.name], shape, 0, n.data, s.name);
    m[s.name] = std::move(n);
  }
  return m;
}

std::string nest_to_json(const Nest &n) {
  int64_t pos = 0;
  return unflatten(n, 0, pos).dump();
}

} // namespace hevec
