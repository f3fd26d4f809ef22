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

// Exhaustive materialization fidelity: every layout reachable for an input
// site must evaluate to exactly the vectors the layout describes.

#ifndef HEVEC_TESTS_FIDELITY_HPP
#define HEVEC_TESTS_FIDELITY_HPP

#include "hevec/materialize.hpp"

#include <deque>
#include <random>
#include <set>

namespace hevec::testing {

/// All layouts of one site reachable by the schedule transformers.
inline std::vector<Layout> site_layouts(const IndexFreeProgram &p, int site,
                                        int64_t slots, int epoch) {
  Schedule start;
  start[site] = initial_schedule(p).at(site);
  std::vector<Layout> out;
  std::set<std::string> seen{serialize(start)};
  std::deque<Schedule> queue{start};
  while (!queue.empty()) {
    Schedule s = queue.front();
    queue.pop_front();
    out.push_back(s.at(site));
    for (Schedule &n : neighbors(s, p, {epoch, slots}))
      if (seen.insert(serialize(n)).second)
        queue.push_back(std::move(n));
  }
  return out;
}

inline int64_t traversal_positions(const Site &s) {
  int64_t n = 1;
  for (const auto &d : s.traversal.dims)
    n *= d.extent;
  return n;
}

struct FidelityResult {
  int pairs = 0;
  int invalid = 0; // layouts the materializer rejects
  int failures = 0;
  std::string first_failure;
};

/// Checks materialize_input against site_content for one (site, layout).
/// Returns false on a mismatch; ScheduleInvalid counts as a rejection.
inline bool check_fidelity(const Site &site, const Layout &l, int64_t slots,
                           std::mt19937_64 &rng, FidelityResult &res) {
  CircuitProgram prog;
  prog.slots = slots;
  SiteCircuit sc;
  try {
    sc = materialize_input(site, l, prog.reg);
  } catch (const ScheduleInvalid &) {
    ++res.invalid;
    return true;
  }
  ++res.pairs;
  CLet let;
  let.name = "out";
  for (const auto &e : l.exploded)
    let.dims.emplace_back(e.name, e.extent);
  let.body = sc.expr;
  prog.lets.push_back(let);
  Nest arr(site.array_shape);
  std::uniform_int_distribution<int64_t> dist(1, 1000);
  for (auto &v : arr.data)
    v = dist(rng);
  InputMap inputs{{site.traversal.array, arr}};
  CircuitEvaluator ev(prog, inputs);
  for (const Coord &c : coordinates(l.exploded)) {
    std::vector<int64_t> want = site_content(site, l, c);
    const std::vector<int64_t> &got = ev.let_value("out", c);
    for (int64_t s = 0; s < slots; ++s) {
      int64_t el = want[s % want.size()];
      int64_t v = el < 0 ? 0 : arr.data[el];
      if (got[s] != v) {
        if (res.failures++ == 0)
          res.first_failure = "site " + std::to_string(site.id) + " " +
                              site.traversal.str() + " layout " + l.str();
        return false;
      }
    }
  }
  return true;
}

/// Runs the fidelity check over every input site of `p` with at most
/// `max_positions` traversal positions and every reachable layout.
inline FidelityResult fidelity_sweep(const IndexFreeProgram &p, int64_t slots,
                                     int epoch, int64_t max_positions,
                                     std::mt19937_64 &rng) {
  FidelityResult res;
  for (const Site &site : p.sites) {
    if (!site.is_input || traversal_positions(site) > max_positions)
      continue;
    for (const Layout &l : site_layouts(p, site.id, slots, epoch))
      check_fidelity(site, l, slots, rng, res);
  }
  return res;
}

} // namespace hevec::testing

#endif // HEVEC_TESTS_FIDELITY_HPP
