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

#ifndef QSPACE_CLI_HPP
#define QSPACE_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "qspace/sphere.hpp"

namespace qspace::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Runs one subcommand. argv[0] is the program name. Results go to files
// and out, diagnostics to err.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, const char* const* argv);

std::string version();

struct GradientTable {
  std::string bvecs;  // three lines: x, y and z components
  std::string bvals;  // one line
};

// FSL-style gradient table with n_b0 leading b = 0 columns. Directions are
// written in their upper-hemisphere representative.
GradientTable export_bvec(const DirectionSet& dirs, double b_value, int n_b0);

// Columns of a bvecs text as unit vectors (zero columns skipped).
Eigen::Matrix<double, Eigen::Dynamic, 3> parse_bvecs(const std::string& text);

struct PlotSet {
  DirectionSet dirs;
  std::string color = "#1f77b4";
  std::string label;
};

// Top view of the upper hemisphere: each direction is drawn at the (x, y)
// of its canonical unit vector inside the unit circle. At most two sets.
std::string plot_dirs_svg(const std::vector<PlotSet>& sets);

}  // namespace qspace::cli

#endif  // QSPACE_CLI_HPP
