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

#ifndef QSPACE_IO_HPP
#define QSPACE_IO_HPP

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "qspace/phantom.hpp"
#include "qspace/pipeline.hpp"
#include "qspace/sphere.hpp"
#include "qspace/tract.hpp"
#include "qspace/volume.hpp"

namespace qspace {

namespace fs = std::filesystem;

// Direction sets: CSV with header "theta,phi", one row per direction,
// radians, LF line endings.
void write_directions_csv(const fs::path& path, const DirectionSet& dirs);
DirectionSet read_directions_csv(const fs::path& path);
std::string directions_csv(const DirectionSet& dirs);

// QVOL: a text header (".qvh") plus a raw file of little-endian float32
// samples at ((x*Y + y)*Z + z)*D + d. The b0 reference is written next to
// the volume as a single-channel QVOL named "<stem>_b0.qvh".
void write_qvol(const fs::path& header, const DwiVolume& vol);
DwiVolume read_qvol(const fs::path& header);

// Single-channel QVOL (b0 maps, masks).
void write_scalar_qvol(const fs::path& header, const Dims& dims, const Eigen::VectorXd& values,
                       const std::array<double, 3>& voxel_size = {1.0, 1.0, 1.0});
std::pair<Dims, Eigen::VectorXd> read_scalar_qvol(const fs::path& header);

// QTRK: "QTRK", u32 streamline count, then per streamline a u32 point count
// and little-endian float32 x, y, z triples in voxel coordinates.
void write_qtrk(const fs::path& path, const Tractogram& t);
Tractogram read_qtrk(const fs::path& path);
// Sidecar CSV "index,label".
void write_labels_csv(const fs::path& path, const std::vector<int>& labels);
std::vector<int> read_labels_csv(const fs::path& path);

// Phantom ground truth as JSON (schema documented in the README).
void write_truth(const fs::path& path, const PhantomTruth& truth, const PhantomSpec& spec);
// Rebuilds the full truth (compartments and masks) from the stored spec.
std::pair<PhantomTruth, PhantomSpec> read_truth(const fs::path& path);

void write_recon_params(const fs::path& path, const ReconstructionParams& params);
ReconstructionParams read_recon_params(const fs::path& path);

// Ordered key/value report.
class Report {
 public:
  void add(const std::string& key, const std::string& value);
  void add(const std::string& key, double value);
  void add(const std::string& key, long long value);
  void add_int(const std::string& key, long long value) { add(key, value); }

  const std::vector<std::pair<std::string, std::string>>& fields() const { return fields_; }

  // "key = value" lines.
  std::string text() const;
  // Header row of keys and one row of values.
  std::string csv() const;

  void write_text(const fs::path& path) const;
  void write_csv(const fs::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> fields_;
};

// Shortest text that round-trips the double; "inf" / "-inf" / "nan".
std::string format_double(double value);

std::string read_file(const fs::path& path);
void write_file(const fs::path& path, const std::string& content);

}  // namespace qspace

#endif  // QSPACE_IO_HPP
