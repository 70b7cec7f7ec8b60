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
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "qspace/design.hpp"
#include "qspace/error.hpp"
#include "qspace/phantom.hpp"
#include "test_util.hpp"

namespace qspace {
namespace {

using std::numbers::pi;

// Cylindrically symmetric tensor: g^T D g = l2 + (l1 - l2) (g.a)^2.
double axial_signal(const Vec3& g, const Vec3& axis, double b, double l1 = 1.7e-3, double l2 = 0.3e-3) {
  const double c = g.dot(axis.normalized());
  return std::exp(-b * (l2 + (l1 - l2) * c * c));
}

Vec3 random_rotation_applied(const Vec3& v, const Eigen::Matrix3d& r) { return r * v; }

Eigen::Matrix3d random_rotation(std::uint64_t seed) {
  const Eigen::Vector4d q = testing::random_vector(4, seed).normalized();
  return Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
}

TEST(TensorSignal, ZeroBValueIsOne) {
  const TensorCompartment t;
  EXPECT_EQ(tensor_signal(Vec3::UnitX(), 0.0, {&t, 1}), 1.0);
}

TEST(TensorSignal, AlongAndAcrossAxis) {
  TensorCompartment t;
  t.axis = Vec3(1, 1, 0).normalized();
  EXPECT_NEAR(tensor_signal(t.axis, 1000.0, {&t, 1}), std::exp(-1.7), 1e-12);
  EXPECT_NEAR(tensor_signal(t.axis, 1000.0, {&t, 1}), 0.18268, 1e-5);
  const Vec3 perp = Vec3(1, -1, 0).normalized();
  EXPECT_NEAR(tensor_signal(perp, 1000.0, {&t, 1}), std::exp(-0.3), 1e-12);
  EXPECT_NEAR(tensor_signal(perp, 1000.0, {&t, 1}), 0.74082, 1e-5);
}

TEST(TensorSignal, RangeAndMonotoneInB) {
  TensorCompartment a, b;
  a.axis = Vec3(0.2, 0.3, 0.9).normalized();
  a.fraction = 0.3;
  b.axis = Vec3(-0.5, 0.8, 0.1).normalized();
  b.eigenvalues = {2.0e-3, 0.5e-3, 0.1e-3};
  b.fraction = 0.7;
  const std::vector<TensorCompartment> comps{a, b};
  for (const auto& d : testing::random_directions(30, 4)) {
    const Vec3 g = sph_to_cart(d);
    double previous = 1.0;
    for (double bv = 0.0; bv <= 5000.0; bv += 250.0) {
      const double s = tensor_signal(g, bv, comps);
      EXPECT_GT(s, 0.0);
      EXPECT_LE(s, 1.0);
      EXPECT_LE(s, previous);
      previous = s;
    }
  }
}

TEST(TensorSignal, RotationInvariant) {
  TensorCompartment t;
  t.axis = Vec3(0.3, -0.4, 0.8).normalized();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Eigen::Matrix3d r = random_rotation(seed + 10);
    TensorCompartment rt = t;
    rt.axis = r * t.axis;
    for (const auto& d : testing::random_directions(10, seed)) {
      const Vec3 g = sph_to_cart(d);
      const double s0 = tensor_signal(g, 1000.0, {&t, 1});
      const double s1 = tensor_signal(random_rotation_applied(g, r), 1000.0, {&rt, 1});
      EXPECT_LT(testing::relative_error(s0, s1), 1e-12);
    }
  }
}

TEST(TensorSignal, MatchesAxialClosedForm) {
  TensorCompartment t;
  t.axis = Vec3(0.1, 0.7, -0.2).normalized();
  for (const auto& d : testing::random_directions(20, 5)) {
    const Vec3 g = sph_to_cart(d);
    EXPECT_NEAR(tensor_signal(g, 1000.0, {&t, 1}), axial_signal(g, t.axis, 1000.0), 1e-13);
  }
}

TEST(Presets, Parse) {
  EXPECT_EQ(parse_preset("straight").preset, PhantomPreset::straight);
  EXPECT_EQ(parse_preset("arc").preset, PhantomPreset::arc);
  const PhantomSpec c = parse_preset("crossing:45");
  EXPECT_EQ(c.preset, PhantomPreset::crossing);
  EXPECT_EQ(c.crossing_angle_deg, 45.0);
  EXPECT_EQ(parse_preset("crossing").crossing_angle_deg, 60.0);
  EXPECT_EQ(preset_name(c), "crossing:45");
  EXPECT_THROW(parse_preset("spiral"), Error);
  EXPECT_THROW(parse_preset("crossing:abc"), Error);
  EXPECT_THROW(parse_preset("crossing:120"), Error);
}

TEST(GeneratePhantom, ShapeAndDirections) {
  PhantomSpec spec = parse_preset("crossing");
  spec.dims = {16, 18, 17};
  spec.n_dirs = 20;
  spec.seed = 3;
  const Phantom p = generate_phantom(spec);
  EXPECT_EQ(p.volume.dims, spec.dims);
  EXPECT_EQ(p.volume.channels(), 20u);
  EXPECT_EQ(p.volume.data.rows(), 16 * 18 * 17);
  EXPECT_EQ(p.volume.b_value, 1000.0);
  DesignConfig cfg;
  cfg.n = 20;
  cfg.seed = 3;
  EXPECT_EQ(p.volume.dirs, electrostatic_design(cfg));
  EXPECT_NO_THROW(p.volume.validate());
  EXPECT_EQ(p.truth.bundles.size(), 2u);
}

TEST(GeneratePhantom, RejectsBadSpecs) {
  PhantomSpec spec;
  spec.dims = {8, 8, 8};
  EXPECT_THROW(generate_phantom(spec), Error);
  spec.dims = {16, 16, 16};
  spec.n_dirs = 5;
  EXPECT_THROW(generate_phantom(spec), Error);
}

TEST(GeneratePhantom, SingleBundleVoxelsFollowTangent) {
  PhantomSpec spec = parse_preset("crossing:60");
  spec.dims = {24, 24, 16};
  spec.n_dirs = 12;
  const Phantom p = generate_phantom(spec);
  const double h = pi / 6.0;
  const std::array<Vec3, 2> axes{Vec3(std::sin(h), std::cos(h), 0), Vec3(-std::sin(h), std::cos(h), 0)};
  int single = 0;
  for (std::size_t b = 0; b < 2; ++b) {
    const Mask own = p.truth.bundle_mask(b);
    const Mask other = p.truth.bundle_mask(1 - b);
    for (std::size_t v = 0; v < own.size(); ++v) {
      if (!own[v] || other[v]) continue;
      ASSERT_EQ(p.truth.compartments[v].size(), 1u);
      const Vec3 a = p.truth.compartments[v][0].axis;
      EXPECT_LT(std::min((a - axes[b]).norm(), (a + axes[b]).norm()), 1e-6);
      ++single;
    }
  }
  EXPECT_GT(single, 100);
}

TEST(GeneratePhantom, StraightAndArcTangents) {
  PhantomSpec spec = parse_preset("straight");
  spec.n_dirs = 6;
  spec.dims = {16, 16, 16};
  const Phantom s = generate_phantom(spec);
  for (const auto& comps : s.truth.compartments) {
    for (const auto& c : comps) EXPECT_LT(std::min((c.axis - Vec3::UnitY()).norm(), (c.axis + Vec3::UnitY()).norm()), 1e-12);
  }
  spec.preset = PhantomPreset::arc;
  const Phantom a = generate_phantom(spec);
  int count = 0;
  for (std::size_t v = 0; v < a.truth.compartments.size(); ++v) {
    if (a.truth.compartments[v].empty()) continue;
    const auto c = a.truth.dims.coords(v);
    // Tangent of the circle about the origin through this voxel.
    const Vec3 tangent = Vec3(-c[1], c[0], 0).normalized();
    const Vec3 axis = a.truth.compartments[v][0].axis;
    EXPECT_GT(std::abs(axis.dot(tangent)), std::cos(0.01));
    ++count;
  }
  EXPECT_GT(count, 50);
}

TEST(GeneratePhantom, CrossingCentreIsTwoTensorAverage) {
  PhantomSpec spec = parse_preset("crossing:90");
  spec.dims = {17, 17, 17};  // odd sizes put the crossing point on a voxel centre
  spec.n_dirs = 30;
  const Phantom p = generate_phantom(spec);
  const std::size_t centre = p.truth.dims.index(8, 8, 8);
  ASSERT_EQ(p.truth.compartments[centre].size(), 2u);
  const double h = pi / 4.0;
  const Vec3 a1(std::sin(h), std::cos(h), 0), a2(-std::sin(h), std::cos(h), 0);
  const auto g = p.volume.dirs.cartesian();
  for (Eigen::Index d = 0; d < g.rows(); ++d) {
    const Vec3 gd = g.row(d).transpose();
    const double expected = 0.5 * axial_signal(gd, a1, 1000.0) + 0.5 * axial_signal(gd, a2, 1000.0);
    EXPECT_NEAR(p.volume.data(static_cast<Eigen::Index>(centre), d), expected, 1e-12);
  }
}

TEST(GeneratePhantom, BackgroundIsIsotropic) {
  PhantomSpec spec = parse_preset("straight");
  spec.n_dirs = 10;
  const Phantom p = generate_phantom(spec);
  const std::size_t corner = p.truth.dims.index(0, 0, 0);
  ASSERT_TRUE(p.truth.compartments[corner].empty());
  for (Eigen::Index d = 0; d < 10; ++d) EXPECT_NEAR(p.volume.data(static_cast<Eigen::Index>(corner), d), std::exp(-3.0), 1e-15);
  EXPECT_EQ(p.volume.b0.minCoeff(), 1.0);
}

TEST(PhantomTruthTest, RoisDisjointAndPerBundle) {
  for (const std::string preset : {"straight", "crossing:60", "crossing:90", "arc"}) {
    PhantomSpec spec = parse_preset(preset);
    const PhantomTruth t = phantom_truth(spec);
    ASSERT_EQ(t.rois.size(), t.bundles.size());
    std::set<std::size_t> seen;
    for (std::size_t b = 0; b < t.rois.size(); ++b) {
      const Mask own = t.bundle_mask(b);
      for (int end = 0; end < 2; ++end) {
        EXPECT_FALSE(t.rois[b][static_cast<std::size_t>(end)].empty()) << preset;
        for (std::size_t v : t.rois[b][static_cast<std::size_t>(end)]) {
          EXPECT_TRUE(seen.insert(v).second) << preset;
          EXPECT_TRUE(own[v]);
        }
      }
    }
    const std::vector<int> lookup = t.roi_lookup();
    std::size_t labelled = 0;
    for (int id : lookup) labelled += id >= 0;
    EXPECT_EQ(labelled, seen.size());
  }
}

TEST(PhantomTruthTest, StraightRoisSitAtTheEnds) {
  const PhantomTruth t = phantom_truth(parse_preset("straight"));
  for (std::size_t v : t.rois[0][0]) EXPECT_LE(t.dims.coords(v)[1], 2);
  for (std::size_t v : t.rois[0][1]) EXPECT_GE(t.dims.coords(v)[1], 29);
}

TEST(RicianNoise, InfiniteSnrIsIdentity) {
  PhantomSpec spec = parse_preset("straight");
  spec.n_dirs = 6;
  spec.dims = {16, 16, 16};
  const Phantom p = generate_phantom(spec);
  const DwiVolume out = add_rician_noise(p.volume, kNoNoise, 3);
  EXPECT_TRUE(out.data == p.volume.data);
  EXPECT_THROW(add_rician_noise(p.volume, 0.0, 3), Error);
}

TEST(RicianNoise, SeededAndVoxelIndependent) {
  PhantomSpec spec = parse_preset("straight");
  spec.n_dirs = 6;
  spec.dims = {16, 16, 16};
  const Phantom p = generate_phantom(spec);
  const DwiVolume a = add_rician_noise(p.volume, 20.0, 3);
  const DwiVolume b = add_rician_noise(p.volume, 20.0, 3);
  EXPECT_TRUE(a.data == b.data);
  EXPECT_FALSE(a.data == add_rician_noise(p.volume, 20.0, 4).data);
  EXPECT_TRUE(a.b0 == p.volume.b0);

  // Noise is keyed by voxel position: a cropped volume receives the same
  // draws at the same coordinates, so the noise does not depend on what
  // happens elsewhere in the volume.
  DwiVolume changed = p.volume;
  changed.data.row(0).setConstant(0.9);
  const DwiVolume c = add_rician_noise(changed, 20.0, 3);
  EXPECT_TRUE(c.data.bottomRows(c.data.rows() - 1) == a.data.bottomRows(a.data.rows() - 1));
}

TEST(RicianNoise, RayleighFloorMean) {
  DwiVolume zero;
  zero.dims = {50, 50, 40};
  zero.dirs = DirectionSet{{0.0, 0.0}};
  zero.data = RowMatrix::Zero(100000, 1);
  zero.b0 = Eigen::VectorXd::Ones(100000);
  const DwiVolume noisy = add_rician_noise(zero, 5.0, 42);
  const double mean = noisy.data.mean();
  EXPECT_NEAR(mean, 0.2 * std::sqrt(pi / 2.0), 2e-3);
  EXPECT_NEAR(mean, 0.2507, 2e-3);
  // Second moment of a Rayleigh variable is 2 sigma^2.
  EXPECT_NEAR(noisy.data.squaredNorm() / 100000.0, 2.0 * 0.04, 2e-3);
}

}  // namespace
}  // namespace qspace
