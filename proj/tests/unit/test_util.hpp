// Copyright 2026 The qspace Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QSPACE_TESTS_TEST_UTIL_HPP
#define QSPACE_TESTS_TEST_UTIL_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>

#include <unistd.h>

#include <Eigen/Dense>

#include "qspace/random.hpp"
#include "qspace/sphere.hpp"

namespace qspace::testing {

// Uniform random directions on the whole sphere, kept away from the poles
// by margin radians.
inline DirectionSet random_directions(std::size_t n, std::uint64_t seed, double margin = 0.0) {
  SplitMix64 rng(seed);
  DirectionSet dirs;
  while (dirs.size() < n) {
    const double z = 2.0 * rng.uniform() - 1.0;
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    const double theta = std::acos(z);
    if (theta < margin || theta > std::numbers::pi - margin) continue;
    dirs.push_back({theta, phi});
  }
  return dirs;
}

// Near-uniform Fibonacci lattice on the full sphere.
inline Eigen::Matrix<double, Eigen::Dynamic, 3> fibonacci_sphere(int m) {
  Eigen::Matrix<double, Eigen::Dynamic, 3> pts(m, 3);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < m; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / m;
    const double r = std::sqrt(1.0 - z * z);
    pts.row(i) << r * std::cos(golden * i), r * std::sin(golden * i), z;
  }
  return pts;
}

inline Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed, double scale = 1.0) {
  SplitMix64 rng(seed);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * (2.0 * rng.uniform() - 1.0);
  return v;
}

inline double relative_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Scratch directory removed at scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("qspace_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path path_;
};

}  // namespace qspace::testing

#endif  // QSPACE_TESTS_TEST_UTIL_HPP
