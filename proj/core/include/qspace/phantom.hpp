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

#ifndef QSPACE_PHANTOM_HPP
#define QSPACE_PHANTOM_HPP

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qspace/sphere.hpp"
#include "qspace/volume.hpp"

namespace qspace {

// One Gaussian diffusion compartment. The second and third eigenvectors are
// an arbitrary orthonormal completion of axis, so eigenvalues(1) and
// eigenvalues(2) should match unless that choice does not matter.
struct TensorCompartment {
  Eigen::Vector3d eigenvalues{1.7e-3, 0.3e-3, 0.3e-3};  // mm^2/s, descending
  Vec3 axis{0.0, 0.0, 1.0};
  double fraction = 1.0;
};

inline constexpr double kBackgroundDiffusivity = 3.0e-3;

// S = sum_i f_i exp(-b g^T D_i g).
double tensor_signal(const Vec3& g, double b, std::span<const TensorCompartment> compartments);

struct Bundle {
  std::vector<Vec3> centerline;  // voxel coordinates
  double radius = 0.0;           // voxels
};

// Ground truth for a synthetic phantom. ROI ids are 2 * bundle + end, with
// end 0 at the first centerline point.
struct PhantomTruth {
  std::string preset;
  Dims dims;
  std::vector<Bundle> bundles;
  std::vector<std::array<std::vector<std::size_t>, 2>> rois;  // voxel indices
  std::vector<std::vector<TensorCompartment>> compartments;   // per voxel; empty outside fibers
  double background_diffusivity = kBackgroundDiffusivity;

  // Voxels whose centre lies inside the bundle tube.
  Mask bundle_mask(std::size_t bundle) const;
  // Union of all bundle masks.
  Mask fiber_mask() const;
  // ROI id per voxel, -1 where the voxel belongs to no ROI.
  std::vector<int> roi_lookup() const;
};

enum class PhantomPreset { straight, crossing, arc };

struct PhantomSpec {
  PhantomPreset preset = PhantomPreset::crossing;
  double crossing_angle_deg = 60.0;
  Dims dims{32, 32, 32};
  int n_dirs = 60;
  std::uint64_t seed = 0;  // seeds the electrostatic direction design
  double b_value = 1000.0;
  Eigen::Vector3d eigenvalues{1.7e-3, 0.3e-3, 0.3e-3};
  double radius = 0.0;     // 0 picks max(2, min(dims) / 8)
  double roi_depth = 2.0;  // centerline length covered by each endpoint ROI
  // Overrides the designed directions when set.
  std::optional<DirectionSet> dirs;
};

// Parses "straight", "arc", "crossing" (60 degrees) or "crossing:<deg>".
PhantomSpec parse_preset(const std::string& text);
std::string preset_name(const PhantomSpec& spec);

// Rebuilds bundle geometry, compartments and ROIs for a preset without
// simulating any signal.
PhantomTruth phantom_truth(const PhantomSpec& spec);

struct Phantom {
  DwiVolume volume;
  PhantomTruth truth;
};

Phantom generate_phantom(const PhantomSpec& spec);

// Rician magnitude noise with standard deviation 1/snr per real channel,
// keyed by (seed, x, y, z, d). snr = +inf returns the input unchanged. b0
// is left untouched.
DwiVolume add_rician_noise(const DwiVolume& vol, double snr, std::uint64_t seed);

inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

}  // namespace qspace

#endif  // QSPACE_PHANTOM_HPP
