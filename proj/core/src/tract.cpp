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

#include "qspace/tract.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>

#include "qspace/error.hpp"
#include "qspace/parallel.hpp"

namespace qspace {

namespace {

Tessellation build_icosphere(int subdivisions) {
  const double g = std::numbers::phi;
  std::vector<Vec3> verts = {{-1, g, 0}, {1, g, 0},  {-1, -g, 0}, {1, -g, 0}, {0, -1, g},  {0, 1, g},
                             {0, -1, -g}, {0, 1, -g}, {g, 0, -1},  {g, 0, 1},  {-g, 0, -1}, {-g, 0, 1}};
  for (auto& v : verts) v.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};

  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      verts.push_back((verts[static_cast<std::size_t>(a)] + verts[static_cast<std::size_t>(b)]).normalized());
      const int idx = static_cast<int>(verts.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int a = mid(f[0], f[1]), b = mid(f[1], f[2]), c = mid(f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    faces = std::move(next);
  }

  Tessellation t;
  t.vertices.resize(static_cast<Eigen::Index>(verts.size()), 3);
  for (std::size_t i = 0; i < verts.size(); ++i) t.vertices.row(static_cast<Eigen::Index>(i)) = verts[i].transpose();
  t.neighbors.assign(verts.size(), {});
  for (const auto& f : faces) {
    for (int e = 0; e < 3; ++e) {
      const int a = f[static_cast<std::size_t>(e)], b = f[static_cast<std::size_t>((e + 1) % 3)];
      t.neighbors[static_cast<std::size_t>(a)].push_back(b);
      t.neighbors[static_cast<std::size_t>(b)].push_back(a);
    }
  }
  for (auto& nb : t.neighbors) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  t.antipode.assign(verts.size(), -1);
  for (std::size_t i = 0; i < verts.size(); ++i) {
    for (std::size_t j = 0; j < verts.size(); ++j) {
      if ((verts[i] + verts[j]).squaredNorm() < 1e-20) {
        t.antipode[i] = static_cast<int>(j);
        break;
      }
    }
  }
  return t;
}

// Funk-Radon eigenvalue factor P_l(0) for even l.
double legendre_at_zero(int l) {
  double p = 1.0;
  for (int k = 1; k <= l / 2; ++k) p *= -static_cast<double>(2 * k - 1) / static_cast<double>(2 * k);
  return p;
}

bool lex_less(const Vec3& a, const Vec3& b) {
  return std::tie(a.x(), a.y(), a.z()) < std::tie(b.x(), b.y(), b.z());
}

std::vector<Peak> peaks_from_values(const Eigen::VectorXd& values, const Tessellation& sphere,
                                    const PeakOptions& options) {
  std::vector<Peak> candidates;
  const double vmin = std::max(0.0, values.minCoeff());
  const double vmax = values.maxCoeff();
  if (!(vmax - vmin > 1e-12 * std::max(1.0, std::abs(vmax)))) return {};
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const Vec3 v = sphere.vertices.row(i).transpose();
    if (canonicalize_hemisphere(v) != v) continue;
    bool is_max = true;
    for (int nb : sphere.neighbors[static_cast<std::size_t>(i)]) {
      if (values(nb) > values(i)) {
        is_max = false;
        break;
      }
    }
    if (!is_max) continue;
    if (values(i) - vmin < options.rel_threshold * (vmax - vmin)) continue;
    candidates.push_back({v, values(i)});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Peak& a, const Peak& b) {
    return a.value != b.value ? a.value > b.value : lex_less(a.dir, b.dir);
  });
  const double min_sep = options.min_separation_deg * std::numbers::pi / 180.0;
  std::vector<Peak> kept;
  for (const auto& c : candidates) {
    if (static_cast<int>(kept.size()) >= options.max_peaks) break;
    bool separated = true;
    for (const auto& k : kept) {
      if (angular_distance_antipodal(c.dir, k.dir) < min_sep) {
        separated = false;
        break;
      }
    }
    if (separated) kept.push_back(c);
  }
  return kept;
}

bool inside(const Dims& dims, const Vec3& p) {
  return p.x() >= -0.5 && p.y() >= -0.5 && p.z() >= -0.5 && p.x() < dims.x - 0.5 && p.y() < dims.y - 0.5 &&
         p.z() < dims.z - 0.5;
}

std::size_t nearest_voxel(const Dims& dims, const Vec3& p) {
  return dims.index(static_cast<int>(std::floor(p.x() + 0.5)), static_cast<int>(std::floor(p.y() + 0.5)),
                    static_cast<int>(std::floor(p.z() + 0.5)));
}

std::vector<Vec3> track_half(const PeakField& field, const std::vector<double>& gfa, const Vec3& seed, Vec3 dir,
                             const TrackingParams& params) {
  std::vector<Vec3> pts;
  const double cos_thresh = std::cos(params.angle_thresh_deg * std::numbers::pi / 180.0);
  Vec3 p = seed;
  for (int step = 0; step < params.max_steps; ++step) {
    if (!inside(field.dims, p)) break;
    const std::size_t v = nearest_voxel(field.dims, p);
    if (gfa[v] < params.gfa_thresh) break;
    double best = -1.0;
    Vec3 chosen = Vec3::Zero();
    for (const auto& pk : field.peaks[v]) {
      const double c = pk.dir.dot(dir);
      if (std::abs(c) >= cos_thresh && std::abs(c) > best) {
        best = std::abs(c);
        chosen = c >= 0.0 ? pk.dir : Vec3(-pk.dir);
      }
    }
    if (best < 0.0) break;
    dir = chosen;
    const Vec3 next = p + params.step_size * dir;
    if (!inside(field.dims, next)) break;
    pts.push_back(next);
    p = next;
  }
  return pts;
}

}  // namespace

const Tessellation& Tessellation::icosphere(int subdivisions) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<Tessellation>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[subdivisions];
  if (!slot) slot = std::make_unique<Tessellation>(build_icosphere(subdivisions));
  return *slot;
}

ShExpansion OdfField::at(std::size_t voxel) const {
  return {order, coeffs.row(static_cast<Eigen::Index>(voxel)).transpose()};
}

OdfField csa_odf(const DwiVolume& x, int order, double lambda) {
  const std::size_t n = x.dirs.size();
  if (order < 0) order = default_sh_order(n);
  const int count = sh_count(order);
  if (n < static_cast<std::size_t>(count)) {
    throw Error("CSA ODF of order " + std::to_string(order) + " needs " + std::to_string(count) +
                " directions but only " + std::to_string(n) + " are available; use order " +
                std::to_string(default_sh_order(n)) + " or lower");
  }
  const Eigen::MatrixXd fit = sh_fit_matrix(sh_basis(order, x.dirs), lambda);
  const Eigen::VectorXi degrees = sh_degrees(order);
  Eigen::VectorXd scale(count);
  for (int j = 0; j < count; ++j) {
    const int l = degrees(j);
    scale(j) = -legendre_at_zero(l) * l * (l + 1) / (8.0 * std::numbers::pi);
  }
  const double o0 = 0.5 / std::sqrt(std::numbers::pi);

  OdfField odf;
  odf.dims = x.dims;
  odf.order = order;
  odf.coeffs = RowMatrix::Zero(x.data.rows(), count);
  parallel_chunks(x.voxels(), 1024, [&](std::size_t, std::size_t begin, std::size_t end) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t v = begin; v < end; ++v) {
      const auto r = static_cast<Eigen::Index>(v);
      const double s0 = x.b0(r);
      if (s0 > 0.0) {
        for (Eigen::Index k = 0; k < y.size(); ++k) {
          const double s = std::clamp(x.data(r, k) / s0, kCsaClamp, 1.0 - kCsaClamp);
          y(k) = std::log(-std::log(s));
        }
        odf.coeffs.row(r) = (scale.asDiagonal() * (fit * y)).transpose();
      }
      odf.coeffs(r, 0) = o0;
    }
  });
  return odf;
}

double gfa(const Eigen::Ref<const Eigen::VectorXd>& coeffs) {
  const double total = coeffs.squaredNorm();
  if (total <= 0.0) return 0.0;
  return std::sqrt(std::max(0.0, 1.0 - coeffs(0) * coeffs(0) / total));
}

double gfa(const ShExpansion& odf) {
  odf.validate();
  return gfa(odf.coeffs);
}

std::vector<double> gfa_map(const OdfField& odf) {
  std::vector<double> out(static_cast<std::size_t>(odf.coeffs.rows()));
  for (Eigen::Index r = 0; r < odf.coeffs.rows(); ++r) out[static_cast<std::size_t>(r)] = gfa(odf.coeffs.row(r).transpose());
  return out;
}

std::vector<Peak> find_peaks(const ShExpansion& odf, const Tessellation& sphere, const PeakOptions& options) {
  odf.validate();
  const Eigen::VectorXd values = sh_basis(odf.order, sphere.vertices) * odf.coeffs;
  return peaks_from_values(values, sphere, options);
}

PeakField compute_peaks(const OdfField& odf, const Tessellation& sphere, const PeakOptions& options,
                        const Mask& include) {
  PeakField field;
  field.dims = odf.dims;
  field.peaks.assign(static_cast<std::size_t>(odf.coeffs.rows()), {});
  const Eigen::MatrixXd basis = sh_basis(odf.order, sphere.vertices);
  parallel_chunks(field.peaks.size(), 256, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) {
      if (!include.empty() && !include[v]) continue;
      const Eigen::VectorXd values = basis * odf.coeffs.row(static_cast<Eigen::Index>(v)).transpose();
      field.peaks[v] = peaks_from_values(values, sphere, options);
    }
  });
  return field;
}

Streamline track_from_seed(const PeakField& peaks, const std::vector<double>& gfa, const Vec3& seed,
                           const Vec3& initial_dir, const TrackingParams& params) {
  std::vector<Vec3> back = track_half(peaks, gfa, seed, -initial_dir, params);
  const std::vector<Vec3> fwd = track_half(peaks, gfa, seed, initial_dir, params);
  Streamline out(back.rbegin(), back.rend());
  out.push_back(seed);
  out.insert(out.end(), fwd.begin(), fwd.end());
  return out;
}

Tractogram track_streamlines(const PeakField& peaks, const std::vector<double>& gfa,
                             const std::vector<Vec3>& seeds, const TrackingParams& params) {
  if (gfa.size() != peaks.peaks.size()) throw Error("track_streamlines: GFA map and peak field differ in size");
  std::vector<Streamline> results(seeds.size());
  parallel_chunks(seeds.size(), 64, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) {
      const Vec3& seed = seeds[s];
      if (!inside(peaks.dims, seed)) continue;
      const std::size_t v = nearest_voxel(peaks.dims, seed);
      if (gfa[v] < params.gfa_thresh || peaks.peaks[v].empty()) continue;
      results[s] = track_from_seed(peaks, gfa, seed, peaks.peaks[v].front().dir, params);
    }
  });
  Tractogram out;
  for (auto& s : results)
    if (s.size() >= 2) out.streamlines.push_back(std::move(s));
  return out;
}

std::vector<Vec3> mask_seeds(const Dims& dims, const Mask& mask) {
  std::vector<Vec3> seeds;
  for (std::size_t v = 0; v < mask.size(); ++v) {
    if (!mask[v]) continue;
    const auto c = dims.coords(v);
    seeds.emplace_back(c[0], c[1], c[2]);
  }
  return seeds;
}

Tractogram run_tractography(const DwiVolume& x, const std::vector<Vec3>& seeds, const TractographyOptions& options) {
  const OdfField odf = csa_odf(x, options.odf_order, options.lambda);
  const std::vector<double> g = gfa_map(odf);
  Mask include(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) include[v] = g[v] >= options.tracking.gfa_thresh;
  const PeakField peaks = compute_peaks(odf, Tessellation::icosphere(4), options.peaks, include);
  return track_streamlines(peaks, g, seeds, options.tracking);
}

}  // namespace qspace
