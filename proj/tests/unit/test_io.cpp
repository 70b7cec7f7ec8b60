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

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>

#include <gtest/gtest.h>

#include "qspace/error.hpp"
#include "qspace/io.hpp"
#include "qspace/phantom.hpp"
#include "test_util.hpp"

namespace qspace {
namespace {

using testing::TempDir;

DwiVolume small_volume() {
  PhantomSpec spec = parse_preset("crossing:60");
  spec.dims = {16, 17, 18};
  spec.n_dirs = 7;
  return generate_phantom(spec).volume;
}

TEST(FormatDouble, RoundTripsAndSpecials) {
  for (double v : {0.0, -0.0, 1.0, 0.1, 1.0 / 3.0, 6.02214076e23, 4.9e-324, -2.5e-300}) {
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(format_double(std::nan("")), "nan");
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(DirectionsCsv, RoundTripIsExact) {
  TempDir tmp("io");
  const DirectionSet dirs = testing::random_directions(31, 4, 0.0);
  write_directions_csv(tmp / "d.csv", dirs);
  EXPECT_EQ(read_directions_csv(tmp / "d.csv"), dirs);
  EXPECT_EQ(read_file(tmp / "d.csv").rfind("theta,phi\n", 0), 0u);
  EXPECT_EQ(directions_csv(dirs), read_file(tmp / "d.csv"));
}

TEST(DirectionsCsv, Malformed) {
  TempDir tmp("io");
  write_file(tmp / "a.csv", "theta,phi\n0.1\n");
  EXPECT_THROW(read_directions_csv(tmp / "a.csv"), IoError);
  write_file(tmp / "b.csv", "phi,theta\n0.1,0.2\n");
  EXPECT_THROW(read_directions_csv(tmp / "b.csv"), IoError);
  write_file(tmp / "c.csv", "theta,phi\n0.1,abc\n");
  EXPECT_THROW(read_directions_csv(tmp / "c.csv"), IoError);
  EXPECT_THROW(read_directions_csv(tmp / "missing.csv"), IoError);
}

TEST(Qvol, RoundTripAtFloatPrecision) {
  TempDir tmp("io");
  DwiVolume vol = small_volume();
  vol.voxel_size = {1.5, 2.0, 2.5};
  vol.b0(3) = 0.25;
  write_qvol(tmp / "v.qvh", vol);
  EXPECT_TRUE(std::filesystem::exists(tmp / "v_b0.qvh"));
  const DwiVolume back = read_qvol(tmp / "v.qvh");
  EXPECT_EQ(back.dims, vol.dims);
  EXPECT_EQ(back.voxel_size, vol.voxel_size);
  EXPECT_EQ(back.b_value, vol.b_value);
  EXPECT_EQ(back.dirs, vol.dirs);
  ASSERT_EQ(back.data.rows(), vol.data.rows());
  ASSERT_EQ(back.data.cols(), vol.data.cols());
  for (Eigen::Index r = 0; r < vol.data.rows(); ++r)
    for (Eigen::Index c = 0; c < vol.data.cols(); ++c)
      EXPECT_EQ(back.data(r, c), static_cast<double>(static_cast<float>(vol.data(r, c))));
  EXPECT_EQ(back.b0(3), 0.25);
}

TEST(Qvol, RawLayoutIsLittleEndianFloat32) {
  TempDir tmp("io");
  DwiVolume vol = small_volume();
  vol.data(vol.dims.index(1, 2, 3), 4) = 0.75;
  write_qvol(tmp / "v.qvh", vol);
  const std::string raw = read_file(tmp / "v.raw");
  ASSERT_EQ(raw.size(), vol.voxels() * vol.channels() * 4);
  const std::size_t offset = (vol.dims.index(1, 2, 3) * vol.channels() + 4) * 4;
  // 0.75f = 0x3F400000
  EXPECT_EQ(static_cast<unsigned char>(raw[offset + 0]), 0x00);
  EXPECT_EQ(static_cast<unsigned char>(raw[offset + 1]), 0x00);
  EXPECT_EQ(static_cast<unsigned char>(raw[offset + 2]), 0x40);
  EXPECT_EQ(static_cast<unsigned char>(raw[offset + 3]), 0x3F);
}

TEST(Qvol, Malformed) {
  TempDir tmp("io");
  const DwiVolume vol = small_volume();
  write_qvol(tmp / "v.qvh", vol);
  std::string raw = read_file(tmp / "v.raw");
  write_file(tmp / "v.raw", raw.substr(0, raw.size() - 4));
  EXPECT_THROW(read_qvol(tmp / "v.qvh"), IoError);

  write_qvol(tmp / "w.qvh", vol);
  std::string header = read_file(tmp / "w.qvh");
  write_file(tmp / "w.qvh", header + "colour: blue\n");
  EXPECT_THROW(read_qvol(tmp / "w.qvh"), IoError);

  write_file(tmp / "x.qvh", "QVOL 2\n");
  EXPECT_THROW(read_qvol(tmp / "x.qvh"), IoError);
  EXPECT_THROW(read_qvol(tmp / "none.qvh"), IoError);
}

TEST(Qvol, ScalarRoundTrip) {
  TempDir tmp("io");
  const Dims dims{3, 2, 2};
  Eigen::VectorXd v(12);
  for (int i = 0; i < 12; ++i) v(i) = 0.125 * i;
  write_scalar_qvol(tmp / "m.qvh", dims, v);
  const auto [d, back] = read_scalar_qvol(tmp / "m.qvh");
  EXPECT_EQ(d, dims);
  EXPECT_EQ(back, v);
  EXPECT_THROW(write_scalar_qvol(tmp / "n.qvh", dims, Eigen::VectorXd(5)), Error);
}

TEST(Qtrk, RoundTrip) {
  TempDir tmp("io");
  Tractogram t;
  t.streamlines.push_back({Vec3(0.5, 1.25, 2.0), Vec3(1.5, 1.25, 2.0)});
  t.streamlines.push_back({});
  t.streamlines.push_back({Vec3(3, 4, 5)});
  write_qtrk(tmp / "t.qtrk", t);
  const Tractogram back = read_qtrk(tmp / "t.qtrk");
  ASSERT_EQ(back.streamlines.size(), 3u);
  EXPECT_EQ(back.streamlines[0], t.streamlines[0]);
  EXPECT_TRUE(back.streamlines[1].empty());
  EXPECT_EQ(back.streamlines[2], t.streamlines[2]);
  EXPECT_EQ(read_file(tmp / "t.qtrk").size(), 4u + 4u + 3 * 4u + 3 * 4u * 3u);
}

TEST(Qtrk, Malformed) {
  TempDir tmp("io");
  Tractogram t;
  t.streamlines.push_back({Vec3(0, 0, 0), Vec3(1, 1, 1)});
  write_qtrk(tmp / "t.qtrk", t);
  const std::string bytes = read_file(tmp / "t.qtrk");
  write_file(tmp / "short.qtrk", bytes.substr(0, bytes.size() - 1));
  EXPECT_THROW(read_qtrk(tmp / "short.qtrk"), IoError);
  write_file(tmp / "long.qtrk", bytes + "x");
  EXPECT_THROW(read_qtrk(tmp / "long.qtrk"), IoError);
  write_file(tmp / "magic.qtrk", "QTRX" + bytes.substr(4));
  EXPECT_THROW(read_qtrk(tmp / "magic.qtrk"), IoError);
}

TEST(LabelsCsv, RoundTrip) {
  TempDir tmp("io");
  const std::vector<int> labels{0, -1, 1, 1, -1};
  write_labels_csv(tmp / "l.csv", labels);
  EXPECT_EQ(read_labels_csv(tmp / "l.csv"), labels);
  write_file(tmp / "bad.csv", "index,label\n1,0\n");
  EXPECT_THROW(read_labels_csv(tmp / "bad.csv"), IoError);
}

TEST(Truth, RoundTripRebuildsGeometry) {
  TempDir tmp("io");
  for (const char* preset : {"straight", "arc", "crossing:45"}) {
    PhantomSpec spec = parse_preset(preset);
    spec.dims = {20, 20, 16};
    spec.seed = 9;
    const PhantomTruth truth = phantom_truth(spec);
    write_truth(tmp / "t.json", truth, spec);
    const auto [back, back_spec] = read_truth(tmp / "t.json");
    EXPECT_EQ(back.dims, truth.dims);
    EXPECT_EQ(back.preset, truth.preset);
    ASSERT_EQ(back.bundles.size(), truth.bundles.size());
    for (std::size_t b = 0; b < truth.bundles.size(); ++b) {
      EXPECT_EQ(back.bundles[b].radius, truth.bundles[b].radius);
      EXPECT_EQ(back.rois[b][0], truth.rois[b][0]);
      EXPECT_EQ(back.rois[b][1], truth.rois[b][1]);
    }
    EXPECT_EQ(back.fiber_mask(), truth.fiber_mask());
    EXPECT_EQ(back_spec.seed, 9u);
    EXPECT_EQ(preset_name(back_spec), preset_name(spec));
  }
}

TEST(Truth, RejectsForeignJson) {
  TempDir tmp("io");
  write_file(tmp / "a.json", R"({"format": "something-else"})");
  EXPECT_THROW(read_truth(tmp / "a.json"), IoError);
  write_file(tmp / "b.json", "{ not json");
  EXPECT_THROW(read_truth(tmp / "b.json"), IoError);
}

TEST(ReconParams, RoundTripIsExact) {
  TempDir tmp("io");
  ReconstructionParams p;
  p.mode = ReconMode::linear;
  p.weights = Eigen::MatrixXd::Random(5, 3);
  p.bias = Eigen::VectorXd::Random(5);
  write_recon_params(tmp / "p.json", p);
  const ReconstructionParams back = read_recon_params(tmp / "p.json");
  EXPECT_EQ(back.mode, p.mode);
  EXPECT_EQ(back.weights, p.weights);
  EXPECT_EQ(back.bias, p.bias);
}

TEST(Report, TextAndCsv) {
  Report r;
  r.add("name", std::string("run"));
  r.add("psnr", 27.5);
  r.add_int("count", 3);
  EXPECT_EQ(r.text(), "name = run\npsnr = 27.5\ncount = 3\n");
  EXPECT_EQ(r.csv(), "name,psnr,count\nrun,27.5,3\n");
}

TEST(Files, WriteCreatesParents) {
  TempDir tmp("io");
  write_file(tmp / "a/b/c.txt", "hello");
  EXPECT_EQ(read_file(tmp / "a/b/c.txt"), "hello");
  EXPECT_THROW(read_file(tmp / "nope.txt"), IoError);
}

}  // namespace
}  // namespace qspace
