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

#ifndef HEVEC_COMMON_HPP
#define HEVEC_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hevec {

using Shape = std::vector<int64_t>;

/// Base class for every diagnostic raised by the compiler pipeline.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
  ParseError(const std::string &msg, int line, int col);
  int line;
  int col;
};

class CheckError : public Error {
public:
  using Error::Error;
};

/// A schedule was rejected by circuit generation.
class ScheduleInvalid : public Error {
public:
  using Error::Error;
};

/// Dense row-major integer array.
struct Nest {
  Shape shape;
  std::vector<int64_t> data;

  Nest() : data(1, 0) {}
  explicit Nest(Shape s);
  static Nest scalar(int64_t v);

  int64_t size() const { return static_cast<int64_t>(data.size()); }
  int64_t &at(const std::vector<int64_t> &idx);
  int64_t at(const std::vector<int64_t> &idx) const;
  bool operator==(const Nest &o) const {
    return shape == o.shape && data == o.data;
  }
};

int64_t shape_size(const Shape &s);
int64_t flatten_index(const Shape &s, const std::vector<int64_t> &idx);
std::vector<int64_t> unflatten_index(const Shape &s, int64_t flat);

bool is_pow2(int64_t v);
int64_t next_pow2(int64_t v);
int ceil_log2(int64_t v);
int64_t floor_mod(int64_t a, int64_t m);

/// Calls fn(idx) for every index of the box described by extents, last
/// dimension fastest.
template <typename Fn> void for_each_index(const Shape &extents, Fn &&fn) {
  std::vector<int64_t> idx(extents.size(), 0);
  for (int64_t e : extents)
    if (e <= 0)
      return;
  while (true) {
    fn(static_cast<const std::vector<int64_t> &>(idx));
    int k = static_cast<int>(idx.size()) - 1;
    while (k >= 0) {
      if (++idx[k] < extents[k])
        break;
      idx[k] = 0;
      --k;
    }
    if (k < 0)
      return;
  }
}

std::string join_ints(const std::vector<int64_t> &v, const std::string &sep);

} // namespace hevec

#endif // HEVEC_COMMON_HPP
