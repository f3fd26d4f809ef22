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

#include "hevec/schedule.hpp"

#include <algorithm>
#include <functional>
#include <regex>
#include <set>
#include <sstream>

namespace hevec {

std::string Preprocess::str() const {
  if (kind == Kind::Identity)
    return "id";
  return "roll(" + std::to_string(a) + "," + std::to_string(b) + ")";
}

int64_t Layout::block_size() const {
  int64_t b = 1;
  for (const auto &v : vectorized)
    b *= v.extent;
  return b;
}

int Layout::dims_covering(int d) const {
  int n = 0;
  for (const auto &e : exploded)
    n += e.dim == d;
  for (const auto &v : vectorized)
    n += v.dim == d;
  return n;
}

std::string Layout::str() const {
  std::ostringstream os;
  if (pre.is_roll())
    os << pre.str() << " ";
  os << "{";
  for (size_t k = 0; k < exploded.size(); ++k)
    os << (k ? ", " : "") << exploded[k].name << ":" << exploded[k].dim << ":"
       << exploded[k].extent << ":" << exploded[k].stride;
  os << "} [";
  for (size_t k = 0; k < vectorized.size(); ++k) {
    os << (k ? ", " : "") << "(" << vectorized[k].dim << ","
       << vectorized[k].extent << "," << vectorized[k].stride;
    if (vectorized[k].valid != vectorized[k].extent)
      os << "/" << vectorized[k].valid;
    os << ")";
  }
  os << "]";
  return os.str();
}

void canonicalize(Layout &l, const Site &site) {
  for (auto &e : l.exploded) {
    std::string base = site.dim_names[e.dim] + "_" + std::to_string(site.id);
    bool whole = l.dims_covering(e.dim) == 1 &&
                 e.extent == site.traversal.dims[e.dim].extent && e.stride == 1;
    e.name = whole ? base : base + "_s" + std::to_string(e.stride);
  }
  std::sort(l.exploded.begin(), l.exploded.end(),
            [](const ExplodedDim &x, const ExplodedDim &y) {
              return std::tie(x.dim, x.stride, x.extent) <
                     std::tie(y.dim, y.stride, y.extent);
            });
}

Schedule initial_schedule(const IndexFreeProgram &p) {
  Schedule s;
  for (const Site &site : p.sites) {
    Layout l;
    for (size_t d = 0; d < site.traversal.dims.size(); ++d)
      l.exploded.push_back(
          {"", static_cast<int>(d), site.traversal.dims[d].extent, 1});
    canonicalize(l, site);
    s[site.id] = l;
  }
  return s;
}

namespace {

std::vector<ExplodedDim>::const_iterator find_dim(const Layout &l,
                                                  const std::string &name) {
  auto it = std::find_if(l.exploded.begin(), l.exploded.end(),
                         [&](const ExplodedDim &e) { return e.name == name; });
  if (it == l.exploded.end())
    throw Error("no exploded dimension named '" + name + "'");
  return it;
}

} // namespace

Layout vectorize_dim(const Layout &l, const Site &site, const std::string &name,
                     int64_t slots) {
  auto it = find_dim(l, name);
  if (l.pre.is_roll() && it->dim == l.pre.a)
    throw ScheduleInvalid("cannot vectorize the rolled dimension");
  Layout out = l;
  VectorizedDim v{it->dim, next_pow2(it->extent), it->stride, it->extent};
  out.exploded.erase(out.exploded.begin() + (it - l.exploded.begin()));
  out.vectorized.push_back(v);
  if (out.block_size() > slots)
    throw ScheduleInvalid("vector block of " +
                          std::to_string(out.block_size()) +
                          " slots exceeds the slot count " +
                          std::to_string(slots));
  canonicalize(out, site);
  return out;
}

Layout tile_dim(const Layout &l, const Site &site, const std::string &name,
                int64_t tile) {
  auto it = find_dim(l, name);
  if (l.pre.is_roll() && it->dim == l.pre.a)
    throw ScheduleInvalid("cannot tile the rolled dimension");
  if (tile <= 1 || tile >= it->extent || it->extent % tile != 0)
    throw ScheduleInvalid("tile " + std::to_string(tile) +
                          " does not properly divide extent " +
                          std::to_string(it->extent));
  Layout out = l;
  ExplodedDim inner{"", it->dim, tile, it->stride};
  ExplodedDim outer{"", it->dim, it->extent / tile, it->stride * tile};
  out.exploded.erase(out.exploded.begin() + (it - l.exploded.begin()));
  out.exploded.push_back(inner);
  out.exploded.push_back(outer);
  canonicalize(out, site);
  return out;
}

bool roll_applicable(const Layout &l, const Site &site,
                     const std::string &name) {
  if (l.pre.is_roll() || l.vectorized.empty())
    return false;
  auto it = std::find_if(l.exploded.begin(), l.exploded.end(),
                         [&](const ExplodedDim &e) { return e.name == name; });
  if (it == l.exploded.end())
    return false;
  const VectorizedDim &b = l.vectorized.front();
  const ArrayTraversal &t = site.traversal;
  int da = it->dim, db = b.dim;
  int64_t n = t.dims[da].extent;
  if (da == db || t.dims[db].extent != n)
    return false;
  if (it->stride != 1 || it->extent != n || l.dims_covering(da) != 1)
    return false;
  if (b.stride != 1 || b.extent != n || b.valid != n ||
      l.dims_covering(db) != 1)
    return false;
  std::set<int> touched;
  for (int d : {da, db}) {
    const auto &content = t.dims[d].content;
    if (content.size() > 1)
      return false;
    for (const ContentDim &c : content) {
      if (c.stride != 1 || site.array_shape[c.dim] != n ||
          t.offsets[c.dim] != 0 || !touched.insert(c.dim).second)
        return false;
    }
  }
  for (size_t k = 0; k < t.dims.size(); ++k) {
    if (static_cast<int>(k) == da || static_cast<int>(k) == db)
      continue;
    for (const ContentDim &c : t.dims[k].content)
      if (touched.count(c.dim))
        return false;
  }
  return true;
}

Layout apply_roll(const Layout &l, const Site &site, const std::string &name) {
  if (!roll_applicable(l, site, name))
    throw ScheduleInvalid("roll transformer not applicable to '" + name + "'");
  Layout out = l;
  out.pre = Preprocess::roll(find_dim(l, name)->dim, l.vectorized.front().dim);
  return out;
}

std::optional<std::vector<int64_t>>
layout_position(const Layout &l, const std::vector<TraversalDim> &dims,
                const std::vector<int64_t> &coord, int64_t slot) {
  std::vector<int64_t> pos(dims.size(), 0);
  for (size_t k = 0; k < l.exploded.size(); ++k)
    pos[l.exploded[k].dim] += coord[k] * l.exploded[k].stride;
  for (size_t k = l.vectorized.size(); k-- > 0;) {
    const VectorizedDim &v = l.vectorized[k];
    int64_t q = slot % v.extent;
    slot /= v.extent;
    if (q >= v.valid)
      return std::nullopt;
    pos[v.dim] += q * v.stride;
  }
  if (l.pre.is_roll())
    pos[l.pre.a] = floor_mod(pos[l.pre.a] + pos[l.pre.b], dims[l.pre.a].extent);
  return pos;
}

std::vector<std::vector<int64_t>>
coordinates(const std::vector<ExplodedDim> &e) {
  Shape ext;
  for (const auto &d : e)
    ext.push_back(d.extent);
  std::vector<std::vector<int64_t>> out;
  for_each_index(ext, [&](const std::vector<int64_t> &c) { out.push_back(c); });
  return out;
}

std::string serialize(const Schedule &s) {
  std::ostringstream os;
  for (const auto &[id, l] : s) {
    os << id << ":" << l.pre.str() << "{";
    for (const auto &e : l.exploded)
      os << "(" << e.dim << "," << e.extent << "," << e.stride << ")";
    os << "}[";
    for (const auto &v : l.vectorized)
      os << "(" << v.dim << "," << v.extent << "," << v.stride << ")";
    os << "];";
  }
  return os.str();
}

std::string print_schedule(const Schedule &s, const IndexFreeProgram &p) {
  std::ostringstream os;
  for (const auto &[id, l] : s)
    os << id << ": " << l.str() << "    # " << p.sites[id].traversal.str()
       << "\n";
  return os.str();
}

Schedule parse_schedule(const std::string &text, const IndexFreeProgram &p,
                        int64_t slots) {
  Schedule s = initial_schedule(p);
  static const std::regex line_re(
      R"(^\s*(\d+)\s*:\s*(roll\(\s*(\d+)\s*,\s*(\d+)\s*\))?\s*\{([^}]*)\}\s*\[([^\]]*)\]\s*(#.*)?$)");
  static const std::regex ex_re(R"(([A-Za-z_][A-Za-z0-9_]*)?\s*:\s*(\d+)\s*:\s*(\d+)\s*:\s*(\d+))");
  static const std::regex vec_re(R"(\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*(/\s*\d+\s*)?\))");
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#')
      continue;
    std::smatch m;
    if (!std::regex_match(line, m, line_re))
      throw ParseError("malformed schedule line", lineno, 1);
    int id = std::stoi(m[1]);
    if (id < 0 || id >= static_cast<int>(p.sites.size()))
      throw ParseError("unknown site " + std::to_string(id), lineno, 1);
    const Site &site = p.sites[id];
    Layout l;
    std::string ex = m[5], vec = m[6];
    for (std::sregex_iterator it(ex.begin(), ex.end(), ex_re), end; it != end;
         ++it)
      l.exploded.push_back({"", std::stoi((*it)[2]), std::stoll((*it)[3]),
                            std::stoll((*it)[4])});
    for (std::sregex_iterator it(vec.begin(), vec.end(), vec_re), end;
         it != end; ++it) {
      int d = std::stoi((*it)[1]);
      int64_t e = std::stoll((*it)[2]), st = std::stoll((*it)[3]);
      if (d < 0 || d >= static_cast<int>(site.traversal.dims.size()))
        throw ParseError("dimension out of range", lineno, 1);
      int64_t valid =
          std::min(e, (site.traversal.dims[d].extent + st - 1) / st);
      if (!is_pow2(e))
        throw ParseError("vectorized extent must be a power of two", lineno, 1);
      l.vectorized.push_back({d, e, st, valid});
    }
    std::optional<Preprocess> roll;
    if (m[2].matched)
      roll = Preprocess::roll(std::stoi(m[3]), std::stoi(m[4]));
    for (size_t d = 0; d < site.traversal.dims.size(); ++d) {
      int64_t covered = 1;
      for (const auto &e : l.exploded)
        if (e.dim == static_cast<int>(d))
          covered *= e.extent;
      for (const auto &v : l.vectorized)
        if (v.dim == static_cast<int>(d))
          covered *= v.valid;
      if (covered != site.traversal.dims[d].extent)
        throw ParseError("layout does not cover traversal dimension " +
                             std::to_string(d) + " of site " +
                             std::to_string(id),
                         lineno, 1);
    }
    if (l.block_size() > slots)
      throw ParseError("vector block exceeds the slot count", lineno, 1);
    canonicalize(l, site);
    if (roll) {
      auto a = std::find_if(l.exploded.begin(), l.exploded.end(),
                            [&](const ExplodedDim &e) { return e.dim == roll->a; });
      if (a == l.exploded.end() || l.vectorized.empty() ||
          l.vectorized.front().dim != roll->b ||
          !roll_applicable(l, site, a->name))
        throw ParseError("roll(" + std::to_string(roll->a) + "," +
                             std::to_string(roll->b) +
                             ") is not applicable to site " + std::to_string(id),
                         lineno, 1);
      l.pre = *roll;
    }
    s[id] = l;
  }
  return s;
}

namespace {

using Move = std::function<Layout(const Layout &, const Site &)>;

// Group key of an exploded dim: its class plus tile geometry.
struct DimKey {
  int cls;
  int64_t extent;
  int64_t stride;
  auto tie() const { return std::tie(cls, extent, stride); }
  bool operator<(const DimKey &o) const { return tie() < o.tie(); }
};

DimKey key_of(const Site &site, const ExplodedDim &e) {
  return {site.dim_class[e.dim], e.extent, e.stride};
}

int tilings(const Layout &l, const Site &site) {
  return static_cast<int>(l.exploded.size() + l.vectorized.size() -
                          site.traversal.dims.size());
}

} // namespace

std::vector<Schedule> neighbors(const Schedule &s, const IndexFreeProgram &p,
                                const NeighborOptions &opt) {
  std::vector<Schedule> out;
  std::set<std::string> seen{serialize(s)};
  auto emit = [&](Schedule n) {
    if (seen.insert(serialize(n)).second)
      out.push_back(std::move(n));
  };
  auto tile_sizes = [&](const Layout &l, const Site &site,
                        const ExplodedDim &e) {
    std::vector<int64_t> ts;
    if (opt.epoch <= 1 || tilings(l, site) >= opt.epoch - 1)
      return ts;
    for (int64_t t = 2; t < e.extent; t *= 2)
      if (e.extent % t == 0)
        ts.push_back(t);
    return ts;
  };

  // Single-site moves.
  for (const auto &[id, l] : s) {
    const Site &site = p.sites[id];
    for (const auto &e : l.exploded) {
      auto attempt = [&](const std::function<Layout()> &f) {
        try {
          Schedule n = s;
          n[id] = f();
          emit(std::move(n));
        } catch (const ScheduleInvalid &) {
        }
      };
      attempt([&] { return vectorize_dim(l, site, e.name, opt.slots); });
      for (int64_t t : tile_sizes(l, site, e))
        attempt([&] { return tile_dim(l, site, e.name, t); });
      if (roll_applicable(l, site, e.name))
        attempt([&] { return apply_roll(l, site, e.name); });
    }
  }

  // Group moves: the same transformation on every site sharing a dim class.
  std::set<DimKey> keys;
  std::set<std::pair<int, int>> roll_pairs;
  for (const auto &[id, l] : s) {
    const Site &site = p.sites[id];
    for (const auto &e : l.exploded) {
      keys.insert(key_of(site, e));
      if (roll_applicable(l, site, e.name))
        roll_pairs.insert({site.dim_class[e.dim],
                           site.dim_class[l.vectorized.front().dim]});
    }
  }
  auto group = [&](const std::function<std::optional<Layout>(
                       const Layout &, const Site &)> &f) {
    Schedule n = s;
    int changed = 0;
    try {
      for (auto &[id, l] : n) {
        if (auto r = f(l, p.sites[id])) {
          l = *r;
          ++changed;
        }
      }
    } catch (const ScheduleInvalid &) {
      return;
    }
    if (changed > 1)
      emit(std::move(n));
  };
  for (const DimKey &k : keys) {
    auto match = [&](const Layout &l, const Site &site) -> const ExplodedDim * {
      for (const auto &e : l.exploded) {
        DimKey ek = key_of(site, e);
        if (!(ek < k) && !(k < ek))
          return &e;
      }
      return nullptr;
    };
    group([&](const Layout &l, const Site &site) -> std::optional<Layout> {
      if (const ExplodedDim *e = match(l, site))
        return vectorize_dim(l, site, e->name, opt.slots);
      return std::nullopt;
    });
    if (opt.epoch > 1)
      for (int64_t t = 2; t < k.extent; t *= 2) {
        if (k.extent % t)
          continue;
        group([&](const Layout &l, const Site &site) -> std::optional<Layout> {
          const ExplodedDim *e = match(l, site);
          if (!e || tilings(l, site) >= opt.epoch - 1)
            return std::nullopt;
          return tile_dim(l, site, e->name, t);
        });
      }
  }
  for (const auto &[ca, cb] : roll_pairs) {
    group([&](const Layout &l, const Site &site) -> std::optional<Layout> {
      if (l.vectorized.empty() || site.dim_class[l.vectorized.front().dim] != cb)
        return std::nullopt;
      for (const auto &e : l.exploded)
        if (site.dim_class[e.dim] == ca && roll_applicable(l, site, e.name))
          return apply_roll(l, site, e.name);
      return std::nullopt;
    });
  }
  return out;
}

} // namespace hevec
