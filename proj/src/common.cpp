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

#include "hevec/common.hpp"

#include <sstream>

namespace hevec {

ParseError::ParseError(const std::string &msg, int line, int col)
    : Error(std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
      line(line), col(col) {}

Nest::Nest(Shape s) : shape(std::move(s)), data(shape_size(shape), 0) {}

Nest Nest::scalar(int64_t v) {
  Nest n;
  n.data[0] = v;
  return n;
}

int64_t &Nest::at(const std::vector<int64_t> &idx) {
  return data[flatten_index(shape, idx)];
}

int64_t Nest::at(const std::vector<int64_t> &idx) const {
  return data[flatten_index(shape, idx)];
}

int64_t shape_size(const Shape &s) {
  int64_t n = 1;
  for (int64_t e : s)
    n *= e;
  return n;
}

int64_t flatten_index(const Shape &s, const std::vector<int64_t> &idx) {
  int64_t flat = 0;
  for (size_t k = 0; k < s.size(); ++k)
    flat = flat * s[k] + idx[k];
  return flat;
}

std::vector<int64_t> unflatten_index(const Shape &s, int64_t flat) {
  std::vector<int64_t> idx(s.size());
  for (size_t k = s.size(); k-- > 0;) {
    idx[k] = flat % s[k];
    flat /= s[k];
  }
  return idx;
}

bool is_pow2(int64_t v) { return v > 0 && (v & (v - 1)) == 0; }

int64_t next_pow2(int64_t v) {
  int64_t p = 1;
  while (p < v)
    p <<= 1;
  return p;
}

int ceil_log2(int64_t v) {
  int k = 0;
  while ((int64_t{1} << k) < v)
    ++k;
  return k;
}

int64_t floor_mod(int64_t a, int64_t m) {
  int64_t r = a % m;
  return r < 0 ? r + m : r;
}

std::string join_ints(const std::vector<int64_t> &v, const std::string &sep) {
  std::ostringstream os;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i)
      os << sep;
    os << v[i];
  }
  return os.str();
}

} // namespace hevec
