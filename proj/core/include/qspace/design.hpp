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

#ifndef QSPACE_DESIGN_HPP
#define QSPACE_DESIGN_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "qspace/sphere.hpp"

namespace qspace {

struct DesignConfig {
  int n = 30;
  std::uint64_t seed = 0;
  int max_iters = 20000;
  double step_init = 0.05;
  // Stop once the relative energy decrease stays below tol for
  // kDesignPatience consecutive iterations.
  double tol = 1e-12;

  void validate() const;
};

inline constexpr int kDesignPatience = 50;
inline constexpr int kDesignMaxHalvings = 30;

// Gradient with respect to each direction's (theta, phi).
struct AngleGradient {
  Eigen::VectorXd d_theta;
  Eigen::VectorXd d_phi;

  double norm() const { return std::sqrt(d_theta.squaredNorm() + d_phi.squaredNorm()); }
};

// Antipodally symmetric Coulomb energy
//   E = sum_{i<j} 1/|g_i - g_j| + 1/|g_i + g_j|.
// Throws Error when two directions coincide up to sign.
double coulomb_energy(const DirectionSet& dirs);
AngleGradient coulomb_gradient(const DirectionSet& dirs);

// Seeded area-uniform sample of the upper hemisphere (z = u, phi = 2 pi v).
DirectionSet random_hemisphere(std::size_t n, std::uint64_t seed);

struct DesignTrace {
  DirectionSet dirs;
  std::vector<double> energies;  // energy after every accepted step
  int iterations = 0;
};

// Electrostatic repulsion design: gradient descent in (theta, phi) with a
// backtracking line search. The result is canonicalized to the upper
// hemisphere and sorted by (theta, phi).
DesignTrace electrostatic_design_trace(const DesignConfig& cfg);
DirectionSet electrostatic_design(const DesignConfig& cfg);

}  // namespace qspace

#endif  // QSPACE_DESIGN_HPP
