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

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "qspace/cli.hpp"
#include "qspace/error.hpp"
#include "qspace/io.hpp"

namespace qspace::cli {

GradientTable export_bvec(const DirectionSet& dirs, double b_value, int n_b0) {
  if (n_b0 < 0) throw Error("n_b0 must be non-negative");
  std::vector<Vec3> columns(static_cast<std::size_t>(n_b0), Vec3::Zero());
  for (const Direction& d : dirs) columns.push_back(canonicalize_hemisphere(sph_to_cart(d)));

  GradientTable table;
  for (int axis = 0; axis < 3; ++axis) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) table.bvecs += ' ';
      table.bvecs += columns[c](axis) == 0.0 ? "0.0" : format_double(columns[c](axis));
    }
    table.bvecs += '\n';
  }
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) table.bvals += ' ';
    table.bvals += static_cast<int>(c) < n_b0 ? "0" : format_double(b_value);
  }
  table.bvals += '\n';
  return table;
}

Eigen::Matrix<double, Eigen::Dynamic, 3> parse_bvecs(const std::string& text) {
  std::istringstream is(text);
  std::vector<std::vector<double>> rows;
  for (std::string line; std::getline(is, line);) {
    std::istringstream ls(line);
    std::vector<double> row;
    for (double v; ls >> v;) row.push_back(v);
    if (!ls.eof()) throw IoError("bvecs: non-numeric entry");
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.size() != 3 || rows[0].size() != rows[1].size() || rows[0].size() != rows[2].size())
    throw IoError("bvecs: expected three rows of equal length");

  std::vector<Vec3> vecs;
  for (std::size_t c = 0; c < rows[0].size(); ++c) {
    const Vec3 v(rows[0][c], rows[1][c], rows[2][c]);
    if (v.norm() > 0.0) vecs.push_back(v.normalized());
  }
  Eigen::Matrix<double, Eigen::Dynamic, 3> out(static_cast<Eigen::Index>(vecs.size()), 3);
  for (std::size_t i = 0; i < vecs.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = vecs[i].transpose();
  return out;
}

namespace {

constexpr double kSize = 400.0;
constexpr double kRadius = 180.0;

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string plot_dirs_svg(const std::vector<PlotSet>& sets) {
  if (sets.size() > 2) throw Error("plot_dirs_svg draws at most two direction sets");
  const double c = kSize / 2.0;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(kSize) << "\" height=\"" << fixed(kSize)
     << "\" viewBox=\"0 0 " << fixed(kSize) << ' ' << fixed(kSize) << "\">\n";
  os << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "  <circle cx=\"" << fixed(c) << "\" cy=\"" << fixed(c) << "\" r=\"" << fixed(kRadius)
     << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
  for (std::size_t s = 0; s < sets.size(); ++s) {
    const PlotSet& set = sets[s];
    os << "  <g class=\"set" << s << "\" fill=\"" << escape_xml(set.color) << "\">\n";
    for (const Direction& d : set.dirs) {
      const Vec3 v = canonicalize_hemisphere(sph_to_cart(d));
      // SVG y grows downwards.
      os << "    <circle class=\"dir\" cx=\"" << fixed(c + kRadius * v.x()) << "\" cy=\""
         << fixed(c - kRadius * v.y()) << "\" r=\"4.000\"/>\n";
    }
    os << "  </g>\n";
    if (!set.label.empty()) {
      os << "  <text x=\"10.000\" y=\"" << fixed(20.0 + 16.0 * static_cast<double>(s)) << "\" fill=\""
         << escape_xml(set.color) << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape_xml(set.label)
         << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace qspace::cli
