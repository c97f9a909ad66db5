// tests/unit/test_util.h

// Copyright 2026  HFC-VP authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HFCVP_TESTS_TEST_UTIL_H_
#define HFCVP_TESTS_TEST_UTIL_H_

#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "hfcvp/error.h"
#include "hfcvp/rng.h"

namespace hfcvp {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("hfcvp_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;
  const std::filesystem::path &path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Uniform draw from the probability simplex (normalised exponentials).
inline std::vector<double> RandomSimplex(Rng &rng, int c, double floor = 0.0) {
  std::vector<double> p(c);
  double s = 0.0;
  for (auto &v : p) {
    v = -std::log(1.0 - rng.Uniform()) + floor;
    s += v;
  }
  for (auto &v : p) v /= s;
  return p;
}

inline bool ThrowsKind(auto &&fn, ErrorKind kind) {
  try {
    fn();
  } catch (const Error &e) {
    return e.kind() == kind;
  } catch (...) {
    return false;
  }
  return false;
}

}  // namespace hfcvp

#define CHECK_THROWS_AS_KIND(expr, kind) \
  CHECK(::hfcvp::ThrowsKind([&] { (void)(expr); }, kind))

#endif  // HFCVP_TESTS_TEST_UTIL_H_
