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

#ifndef QSPACE_TRACT_HPP
#define QSPACE_TRACT_HPP

#include <cstddef>
#include <vector>

#include "qspace/sphere.hpp"
#include "qspace/volume.hpp"

namespace qspace {

// Vertices of a subdivided icosahedron with their mesh neighbours.
struct Tessellation {
  Eigen::Matrix<double, Eigen::Dynamic, 3> vertices;
  std::vector<std::vector<int>> neighbors;
  std::vector<int> antipode;  // index of -vertex

  // 10 * 4^k + 2 vertices. Cached per subdivision level.
  static const Tessellation& icosphere(int subdivisions = 4);
};

struct OdfField {
  Dims dims;
  int order = 0;
  RowMatrix coeffs;  // voxels x sh_count(order)

  ShExpansion at(std::size_t voxel) const;
};

inline constexpr double kCsaClamp = 1e-4;

// Constant solid angle ODF: fits ln(-ln(S/S0)) and applies the Funk-Radon
// and Laplace-Beltrami eigenvalues. Every voxel gets o_0 = 1/(2 sqrt(pi)).
// order < 0 picks the largest even order the direction count supports.
OdfField csa_odf(const DwiVolume& x, int order = -1, double lambda = kDefaultShLambda);

// Generalized fractional anisotropy from SH coefficients.
double gfa(const ShExpansion& odf);
double gfa(const Eigen::Ref<const Eigen::VectorXd>& coeffs);
std::vector<double> gfa_map(const OdfField& odf);

struct Peak {
  Vec3 dir;  // hemisphere-canonical
  double value = 0.0;
};

struct PeakOptions {
  double rel_threshold = 0.5;
  double min_separation_deg = 25.0;
  int max_peaks = 3;
};

// Local maxima of the ODF on the tessellation, thresholded relative to the
// largest one (after removing the ODF minimum), suppressed within
// min_separation_deg, strongest first.
std::vector<Peak> find_peaks(const ShExpansion& odf, const Tessellation& sphere,
                             const PeakOptions& options = {});

struct PeakField {
  Dims dims;
  std::vector<std::vector<Peak>> peaks;  // per voxel
};

// Peaks for the voxels where include is set (all voxels when empty).
PeakField compute_peaks(const OdfField& odf, const Tessellation& sphere, const PeakOptions& options,
                        const Mask& include = {});

using Streamline = std::vector<Vec3>;

struct Tractogram {
  std::vector<Streamline> streamlines;
  std::vector<int> labels;  // optional, one per streamline
};

struct TrackingParams {
  double step_size = 0.5;
  double angle_thresh_deg = 60.0;
  double gfa_thresh = 0.1;
  int max_steps = 1000;  // per direction from the seed
};

// Tracks both ways from seed and joins the halves: the part traced along
// -initial_dir comes first (reversed), then the seed, then the part traced
// along +initial_dir.
Streamline track_from_seed(const PeakField& peaks, const std::vector<double>& gfa, const Vec3& seed,
                           const Vec3& initial_dir, const TrackingParams& params);

// Seeds without a usable peak, or whose streamline has fewer than two
// points, produce nothing. Output order follows seed order.
Tractogram track_streamlines(const PeakField& peaks, const std::vector<double>& gfa,
                             const std::vector<Vec3>& seeds, const TrackingParams& params);

// Centres of the voxels set in mask.
std::vector<Vec3> mask_seeds(const Dims& dims, const Mask& mask);

struct TractographyOptions {
  int odf_order = -1;
  double lambda = kDefaultShLambda;
  PeakOptions peaks;
  TrackingParams tracking;
};

// csa_odf + find_peaks + track_streamlines.
Tractogram run_tractography(const DwiVolume& x, const std::vector<Vec3>& seeds,
                            const TractographyOptions& options = {});

}  // namespace qspace

#endif  // QSPACE_TRACT_HPP
