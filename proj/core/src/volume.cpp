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

#include "qspace/volume.hpp"

#include <cmath>
#include <string>

#include "qspace/error.hpp"

namespace qspace {

void DwiVolume::validate() const {
  if (dims.x <= 0 || dims.y <= 0 || dims.z <= 0) throw Error("volume dimensions must be positive");
  if (static_cast<std::size_t>(data.rows()) != voxels()) {
    throw Error("volume data has " + std::to_string(data.rows()) + " rows, expected " +
                std::to_string(voxels()));
  }
  if (static_cast<std::size_t>(data.cols()) != dirs.size()) {
    throw Error("volume has " + std::to_string(data.cols()) + " channels but " +
                std::to_string(dirs.size()) + " directions");
  }
  if (static_cast<std::size_t>(b0.size()) != voxels()) throw Error("b0 size does not match volume");
  if (!data.allFinite() || !b0.allFinite()) throw Error("volume contains non-finite values");
  if (data.size() > 0 && data.minCoeff() < 0.0) throw Error("volume contains negative signal");
}

Mask brain_mask(const DwiVolume& vol) {
  Mask mask(vol.voxels(), 0);
  if (vol.b0.size() == 0) return mask;
  const double threshold = 0.05 * vol.b0.maxCoeff();
  for (std::size_t v = 0; v < mask.size(); ++v) mask[v] = vol.b0(static_cast<Eigen::Index>(v)) > threshold;
  return mask;
}

std::vector<std::size_t> slice_voxels(const Dims& dims, const Mask& mask, int z) {
  std::vector<std::size_t> out;
  for (int i = 0; i < dims.x; ++i) {
    for (int j = 0; j < dims.y; ++j) {
      const std::size_t v = dims.index(i, j, z);
      if (mask[v]) out.push_back(v);
    }
  }
  return out;
}

RowMatrix gather_rows(const RowMatrix& data, const std::vector<std::size_t>& voxels) {
  RowMatrix out(static_cast<Eigen::Index>(voxels.size()), data.cols());
  for (std::size_t r = 0; r < voxels.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = data.row(static_cast<Eigen::Index>(voxels[r]));
  return out;
}

DwiVolume crop(const DwiVolume& vol, std::array<int, 3> origin, Dims size) {
  if (origin[0] < 0 || origin[1] < 0 || origin[2] < 0 || origin[0] + size.x > vol.dims.x ||
      origin[1] + size.y > vol.dims.y || origin[2] + size.z > vol.dims.z) {
    throw Error("crop region lies outside the volume");
  }
  DwiVolume out;
  out.dims = size;
  out.voxel_size = vol.voxel_size;
  out.b_value = vol.b_value;
  out.dirs = vol.dirs;
  out.data.resize(static_cast<Eigen::Index>(size.voxels()), vol.data.cols());
  out.b0.resize(static_cast<Eigen::Index>(size.voxels()));
  for (int i = 0; i < size.x; ++i) {
    for (int j = 0; j < size.y; ++j) {
      for (int k = 0; k < size.z; ++k) {
        const auto dst = static_cast<Eigen::Index>(size.index(i, j, k));
        const auto src = static_cast<Eigen::Index>(vol.dims.index(i + origin[0], j + origin[1], k + origin[2]));
        out.data.row(dst) = vol.data.row(src);
        out.b0(dst) = vol.b0(src);
      }
    }
  }
  return out;
}

DwiVolume with_channels(const DwiVolume& vol, DirectionSet dirs, RowMatrix data) {
  if (static_cast<std::size_t>(data.rows()) != vol.voxels() ||
      static_cast<std::size_t>(data.cols()) != dirs.size()) {
    throw Error("with_channels: data shape does not match volume and directions");
  }
  DwiVolume out;
  out.dims = vol.dims;
  out.voxel_size = vol.voxel_size;
  out.b_value = vol.b_value;
  out.dirs = std::move(dirs);
  out.data = std::move(data);
  out.b0 = vol.b0;
  return out;
}

}  // namespace qspace
