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

#ifndef QSPACE_VOLUME_HPP
#define QSPACE_VOLUME_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "qspace/sphere.hpp"

namespace qspace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Mask = std::vector<std::uint8_t>;

struct Dims {
  int x = 0;
  int y = 0;
  int z = 0;

  std::size_t voxels() const {
    return static_cast<std::size_t>(x) * static_cast<std::size_t>(y) * static_cast<std::size_t>(z);
  }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * static_cast<std::size_t>(y) + static_cast<std::size_t>(j)) *
               static_cast<std::size_t>(z) +
           static_cast<std::size_t>(k);
  }
  std::array<int, 3> coords(std::size_t v) const {
    const auto zz = static_cast<std::size_t>(z), yy = static_cast<std::size_t>(y);
    return {static_cast<int>(v / (yy * zz)), static_cast<int>((v / zz) % yy), static_cast<int>(v % zz)};
  }
  bool contains(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < x && j < y && k < z;
  }

  friend bool operator==(const Dims&, const Dims&) = default;
};

// A single-shell diffusion-weighted volume. data holds one row per voxel
// (index ((x*Y + y)*Z + z)) and one column per direction, normalized so the
// b0 reference is 1 inside the brain.
struct DwiVolume {
  Dims dims;
  std::array<double, 3> voxel_size{1.0, 1.0, 1.0};
  double b_value = 1000.0;
  DirectionSet dirs;
  RowMatrix data;
  Eigen::VectorXd b0;

  std::size_t channels() const { return static_cast<std::size_t>(data.cols()); }
  std::size_t voxels() const { return dims.voxels(); }

  // Checks shapes, finiteness and non-negativity; throws Error.
  void validate() const;
};

// Voxels whose b0 exceeds 5% of the volume maximum.
Mask brain_mask(const DwiVolume& vol);

// Indices of the voxels of axial slice z (in voxel-index order) that are
// set in mask.
std::vector<std::size_t> slice_voxels(const Dims& dims, const Mask& mask, int z);

// Copies the rows listed in voxels into a dense matrix.
RowMatrix gather_rows(const RowMatrix& data, const std::vector<std::size_t>& voxels);

// Sub-block [origin, origin + size) of a volume.
DwiVolume crop(const DwiVolume& vol, std::array<int, 3> origin, Dims size);

// Replaces data with new channels (and directions), keeping geometry.
DwiVolume with_channels(const DwiVolume& vol, DirectionSet dirs, RowMatrix data);

}  // namespace qspace

#endif  // QSPACE_VOLUME_HPP
