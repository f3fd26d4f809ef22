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

#include "hevec/search.hpp"

#include <chrono>
#include <queue>
#include <set>

namespace hevec {

int exploded_count(const Schedule &s) {
  int n = 0;
  for (const auto &[id, l] : s)
    n += static_cast<int>(l.exploded.size());
  return n;
}

namespace {

struct Candidate {
  double cost;
  int exploded;
  std::string key;
  Schedule schedule;

  bool operator<(const Candidate &o) const {
    return std::tie(cost, exploded, key) < std::tie(o.cost, o.exploded, o.key);
  }
  // Min-heap order for std::priority_queue.
  bool operator>(const Candidate &o) const { return o < *this; }
};

} // namespace

SearchResult search(const IndexFreeProgram &p, const SearchOptions &opt) {
  if (opt.epochs < 1)
    throw Error("search needs at least one epoch");
  using Clock = std::chrono::steady_clock;
  auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                     std::chrono::duration<double>(opt.seconds));
  SearchResult best;
  std::optional<Candidate> best_cand;

  auto evaluate = [&](const Schedule &s) -> std::optional<Candidate> {
    ++best.evaluated;
    try {
      CircuitProgram c = cgen(p, s, opt.slots);
      CostValue v = cost(c, opt.weights);
      Candidate cand{v.total, exploded_count(s), serialize(s), s};
      if (!best_cand || cand < *best_cand) {
        best_cand = cand;
        best.schedule = s;
        best.circuit = std::move(c);
        best.cost = v;
      }
      return cand;
    } catch (const ScheduleInvalid &) {
      ++best.invalid;
      return std::nullopt;
    }
  };

  Schedule start = initial_schedule(p);
  if (!evaluate(start))
    throw Error("the initial schedule does not generate a circuit");

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> frontier;
    std::set<std::string> visited;
    std::vector<Schedule> seeds = {start};
    if (best_cand && best_cand->key != serialize(start))
      seeds.push_back(best_cand->schedule);
    for (const Schedule &s : seeds) {
      visited.insert(serialize(s));
      CircuitProgram c = cgen(p, s, opt.slots);
      frontier.push({cost(c, opt.weights).total, exploded_count(s), serialize(s), s});
    }
    int evals = 0;
    NeighborOptions nopt{epoch, opt.slots};
    while (!frontier.empty() && evals < opt.max_evals && Clock::now() < deadline) {
      Candidate cur = frontier.top();
      frontier.pop();
      for (Schedule &n : neighbors(cur.schedule, p, nopt)) {
        if (!visited.insert(serialize(n)).second)
          continue;
        ++evals;
        if (auto c = evaluate(n))
          frontier.push(std::move(*c));
        if (evals >= opt.max_evals || Clock::now() >= deadline)
          break;
      }
    }
  }
  return best;
}

} // namespace hevec
