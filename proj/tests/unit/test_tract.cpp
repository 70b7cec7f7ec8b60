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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <gtest/gtest.h>

#include "qspace/design.hpp"
#include "qspace/error.hpp"
#include "qspace/phantom.hpp"
#include "qspace/score.hpp"
#include "qspace/tract.hpp"
#include "test_util.hpp"

namespace qspace {
namespace {

using std::numbers::pi;
constexpr double kDeg = pi / 180.0;

DirectionSet design(int n, std::uint64_t seed = 1) {
  DesignConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  return electrostatic_design(cfg);
}

// One-voxel volume holding the signal of the given compartments.
DwiVolume voxel(const std::vector<TensorCompartment>& comps, const DirectionSet& dirs) {
  DwiVolume x;
  x.dims = {1, 1, 1};
  x.dirs = dirs;
  x.b0 = Eigen::VectorXd::Ones(1);
  x.data.resize(1, static_cast<Eigen::Index>(dirs.size()));
  for (std::size_t d = 0; d < dirs.size(); ++d)
    x.data(0, static_cast<Eigen::Index>(d)) = tensor_signal(sph_to_cart(dirs[d]), 1000.0, comps);
  return x;
}

// Argmax of the ODF over a dense near-uniform point set.
Vec3 dense_argmax(const ShExpansion& odf) {
  const auto grid = testing::fibonacci_sphere(10000);
  const Eigen::VectorXd values = sh_basis(odf.order, grid) * odf.coeffs;
  Eigen::Index best = 0;
  values.maxCoeff(&best);
  return grid.row(best).transpose();
}

TensorCompartment tensor(const Vec3& axis, double fraction = 1.0) {
  TensorCompartment t;
  t.axis = axis.normalized();
  t.fraction = fraction;
  return t;
}

TEST(Icosphere, Structure) {
  const Tessellation& t = Tessellation::icosphere(4);
  EXPECT_EQ(t.vertices.rows(), 2562);
  EXPECT_EQ(&t, &Tessellation::icosphere(4));
  int upper = 0;
  for (Eigen::Index i = 0; i < t.vertices.rows(); ++i) {
    EXPECT_NEAR(t.vertices.row(i).norm(), 1.0, 1e-12);
    const auto n = t.neighbors[static_cast<std::size_t>(i)].size();
    EXPECT_TRUE(n == 5 || n == 6);
    const int a = t.antipode[static_cast<std::size_t>(i)];
    ASSERT_GE(a, 0);
    EXPECT_LT((t.vertices.row(i) + t.vertices.row(a)).norm(), 1e-12);
    const Vec3 v = t.vertices.row(i).transpose();
    upper += canonicalize_hemisphere(v) == v;
  }
  EXPECT_GE(upper, 362);
  EXPECT_EQ(Tessellation::icosphere(1).vertices.rows(), 42);
}

TEST(CsaOdf, IsotropicSignal) {
  DwiVolume x = voxel({tensor(Vec3::UnitZ())}, design(45));
  x.data.setConstant(std::exp(-3.0));
  const OdfField odf = csa_odf(x, 8, kDefaultShLambda);
  const ShExpansion e = odf.at(0);
  EXPECT_EQ(e.coeffs(0), 0.5 / std::sqrt(pi));
  EXPECT_LT(e.coeffs.tail(e.coeffs.size() - 1).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::VectorXd values = eval_sh(e, testing::random_directions(200, 3));
  EXPECT_LT((values.array() - 1.0 / (4.0 * pi)).abs().maxCoeff(), 1e-12);
  EXPECT_NEAR(values(0), 0.0795775, 1e-7);
}

TEST(CsaOdf, UnitMassCoefficient) {
  const DirectionSet dirs = design(45);
  DwiVolume x = voxel({tensor(Vec3(1, 2, 3)), tensor(Vec3(-2, 1, 0))}, dirs);
  x.data *= 0.8;
  const OdfField odf = csa_odf(x);
  EXPECT_EQ(odf.order, 8);
  EXPECT_EQ(odf.coeffs(0, 0), 0.5 / std::sqrt(pi));
}

TEST(CsaOdf, SingleTensorPeakDirection) {
  const DirectionSet dirs = design(60);
  for (const Vec3& axis : {Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0.3, -0.5, 0.8), Vec3(-0.7, 0.2, 0.1)}) {
    const OdfField odf = csa_odf(voxel({tensor(axis)}, dirs), 8, kDefaultShLambda);
    const Vec3 peak = dense_argmax(odf.at(0));
    EXPECT_LT(angular_distance_antipodal(peak, axis.normalized()), 5.0 * kDeg);
  }
}

TEST(CsaOdf, RotationEquivariance) {
  const DirectionSet dirs = design(60);
  const Vec3 axis = Vec3(0.2, 0.9, 0.3).normalized();
  const Vec3 p0 = dense_argmax(csa_odf(voxel({tensor(axis)}, dirs), 8, kDefaultShLambda).at(0));
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Eigen::Vector4d q = testing::random_vector(4, 50 + seed).normalized();
    const Eigen::Matrix3d r = Eigen::Quaterniond(q(0), q(1), q(2), q(3)).toRotationMatrix();
    const Vec3 p1 = dense_argmax(csa_odf(voxel({tensor(r * axis)}, dirs), 8, kDefaultShLambda).at(0));
    EXPECT_LT(angular_distance_antipodal(p1, r * p0), 5.0 * kDeg);
  }
}

TEST(CsaOdf, TooFewDirections) {
  const DwiVolume x = voxel({tensor(Vec3::UnitZ())}, design(10));
  EXPECT_THROW(csa_odf(x, 4, kDefaultShLambda), Error);
  EXPECT_EQ(csa_odf(x).order, 2);
}

TEST(Gfa, ClosedForms) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(15);
  c(0) = 0.3;
  EXPECT_EQ(gfa(ShExpansion{4, c}), 0.0);
  c(0) = 0.0;
  c(7) = 0.5;
  EXPECT_EQ(gfa(ShExpansion{4, c}), 1.0);
  c.setZero();
  c(0) = 1.0;
  c(14) = 1.0;
  EXPECT_NEAR(gfa(ShExpansion{4, c}), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(gfa(ShExpansion{4, c}), 0.7071, 1e-4);
  EXPECT_EQ(gfa(ShExpansion{4, Eigen::VectorXd::Zero(15)}), 0.0);
}

TEST(Gfa, AnisotropyOrdering) {
  const DirectionSet dirs = design(60);
  DwiVolume iso = voxel({tensor(Vec3::UnitZ())}, dirs);
  iso.data.setConstant(0.05);
  const double g_iso = gfa(csa_odf(iso).at(0));
  const double g_fiber = gfa(csa_odf(voxel({tensor(Vec3::UnitX())}, dirs)).at(0));
  EXPECT_LT(g_iso, 1e-12);
  EXPECT_GT(g_fiber, 0.1);
  EXPECT_LT(g_fiber, 1.0);
}

TEST(FindPeaks, SingleTensor) {
  const Vec3 axis = Vec3(0.4, 0.1, -0.9).normalized();
  const OdfField odf = csa_odf(voxel({tensor(axis)}, design(60)), 8, kDefaultShLambda);
  const auto peaks = find_peaks(odf.at(0), Tessellation::icosphere(4));
  ASSERT_EQ(peaks.size(), 1u);
  EXPECT_LT(angular_distance_antipodal(peaks[0].dir, axis), 5.0 * kDeg);
  EXPECT_EQ(peaks[0].dir, canonicalize_hemisphere(peaks[0].dir));
  EXPECT_GT(peaks[0].value, 0.0);
}

TEST(FindPeaks, RightAngleCrossing) {
  for (int n : {30, 60}) {
    const Vec3 a1 = Vec3(1, 1, 0).normalized(), a2 = Vec3(-1, 1, 0).normalized();
    const OdfField odf = csa_odf(voxel({tensor(a1, 0.5), tensor(a2, 0.5)}, design(n)), -1, kDefaultShLambda);
    const auto peaks = find_peaks(odf.at(0), Tessellation::icosphere(4));
    ASSERT_EQ(peaks.size(), 2u) << n;
    const double d11 = angular_distance_antipodal(peaks[0].dir, a1), d12 = angular_distance_antipodal(peaks[0].dir, a2);
    const Vec3& other_axis = d11 < d12 ? a2 : a1;
    EXPECT_LT(std::min(d11, d12), 10.0 * kDeg);
    EXPECT_LT(angular_distance_antipodal(peaks[1].dir, other_axis), 10.0 * kDeg);
    EXPECT_GE(peaks[0].value, peaks[1].value);
  }
}

TEST(FindPeaks, ThresholdAndSeparationLimits) {
  const Vec3 a1 = Vec3(1, 1, 0).normalized(), a2 = Vec3(-1, 1, 0).normalized();
  const ShExpansion odf = csa_odf(voxel({tensor(a1, 0.5), tensor(a2, 0.5)}, design(60))).at(0);
  PeakOptions strict;
  strict.rel_threshold = 1.0;
  EXPECT_LE(find_peaks(odf, Tessellation::icosphere(4), strict).size(), 1u);
  PeakOptions wide;
  wide.min_separation_deg = 90.0;
  EXPECT_EQ(find_peaks(odf, Tessellation::icosphere(4), wide).size(), 1u);
  PeakOptions one;
  one.max_peaks = 1;
  EXPECT_EQ(find_peaks(odf, Tessellation::icosphere(4), one).size(), 1u);
}

TEST(FindPeaks, FlatOdfHasNoPeaks) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(15);
  c(0) = 0.5 / std::sqrt(pi);
  EXPECT_TRUE(find_peaks(ShExpansion{4, c}, Tessellation::icosphere(4)).empty());
}

TEST(FindPeaks, InvariantToVertexOrder) {
  const Tessellation& base = Tessellation::icosphere(3);
  const auto n = static_cast<std::size_t>(base.vertices.rows());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  SplitMix64 rng(5);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.next() % i]);
  std::vector<int> inverse(n);
  for (std::size_t i = 0; i < n; ++i) inverse[static_cast<std::size_t>(perm[i])] = static_cast<int>(i);
  Tessellation shuffled;
  shuffled.vertices.resize(base.vertices.rows(), 3);
  shuffled.neighbors.resize(n);
  shuffled.antipode.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto old = static_cast<std::size_t>(perm[i]);
    shuffled.vertices.row(static_cast<Eigen::Index>(i)) = base.vertices.row(static_cast<Eigen::Index>(old));
    for (int nb : base.neighbors[old]) shuffled.neighbors[i].push_back(inverse[static_cast<std::size_t>(nb)]);
    shuffled.antipode[i] = inverse[static_cast<std::size_t>(base.antipode[old])];
  }
  const Vec3 a1 = Vec3(1, 0.2, 0.3).normalized(), a2 = Vec3(-0.1, 1, 0.4).normalized();
  const ShExpansion odf = csa_odf(voxel({tensor(a1, 0.6), tensor(a2, 0.4)}, design(60))).at(0);
  const auto p1 = find_peaks(odf, base);
  const auto p2 = find_peaks(odf, shuffled);
  ASSERT_EQ(p1.size(), p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) {
    EXPECT_EQ(p1[i].dir, p2[i].dir);
    EXPECT_EQ(p1[i].value, p2[i].value);
  }
}

// Peak field with +z everywhere and GFA 1.
struct UniformField {
  PeakField peaks;
  std::vector<double> gfa;
};

UniformField uniform_z(Dims dims) {
  UniformField f;
  f.peaks.dims = dims;
  f.peaks.peaks.assign(dims.voxels(), {Peak{Vec3::UnitZ(), 1.0}});
  f.gfa.assign(dims.voxels(), 1.0);
  return f;
}

TEST(Tracking, StraightThroughUniformField) {
  const Dims dims{9, 9, 21};
  const UniformField f = uniform_z(dims);
  const TrackingParams params;
  const Tractogram t = track_streamlines(f.peaks, f.gfa, {Vec3(4, 4, 10)}, params);
  ASSERT_EQ(t.streamlines.size(), 1u);
  const Streamline& s = t.streamlines[0];
  double zmin = 1e9, zmax = -1e9;
  for (const auto& p : s) {
    EXPECT_EQ(p.x(), 4.0);
    EXPECT_EQ(p.y(), 4.0);
    zmin = std::min(zmin, p.z());
    zmax = std::max(zmax, p.z());
  }
  EXPECT_LE(zmin - (-0.5), params.step_size);
  EXPECT_LE((dims.z - 0.5) - zmax, params.step_size);
  for (std::size_t i = 1; i < s.size(); ++i) EXPECT_NEAR((s[i] - s[i - 1]).norm(), params.step_size, 1e-9);
}

TEST(Tracking, GfaThresholdAboveOneGivesNothing) {
  const UniformField f = uniform_z({9, 9, 9});
  TrackingParams params;
  params.gfa_thresh = 1.1;
  EXPECT_TRUE(track_streamlines(f.peaks, f.gfa, {Vec3(4, 4, 4), Vec3(1, 2, 3)}, params).streamlines.empty());
}

TEST(Tracking, ReversedInitialDirectionReversesStreamline) {
  const Phantom p = generate_phantom(parse_preset("arc"));
  const OdfField odf = csa_odf(p.volume);
  const auto g = gfa_map(odf);
  const PeakField peaks = compute_peaks(odf, Tessellation::icosphere(4), PeakOptions{});
  const std::vector<Vec3> seeds = mask_seeds(p.truth.dims, p.truth.fiber_mask());
  int checked = 0;
  for (std::size_t i = 0; i < seeds.size(); i += 97) {
    const std::size_t v = p.truth.dims.index(static_cast<int>(seeds[i].x()), static_cast<int>(seeds[i].y()),
                                             static_cast<int>(seeds[i].z()));
    if (peaks.peaks[v].empty()) continue;
    const Vec3 dir = peaks.peaks[v].front().dir;
    const Streamline a = track_from_seed(peaks, g, seeds[i], dir, TrackingParams{});
    Streamline b = track_from_seed(peaks, g, seeds[i], -dir, TrackingParams{});
    std::reverse(b.begin(), b.end());
    EXPECT_EQ(a, b);
    ++checked;
  }
  EXPECT_GT(checked, 5);
}

TEST(Tracking, AngleThresholdStopsSharpTurns) {
  const Dims dims{9, 9, 9};
  UniformField f = uniform_z(dims);
  // Peaks turn to +x above z = 5.
  for (std::size_t v = 0; v < dims.voxels(); ++v)
    if (dims.coords(v)[2] > 5) f.peaks.peaks[v] = {Peak{Vec3::UnitX(), 1.0}};
  const Streamline s = track_from_seed(f.peaks, f.gfa, Vec3(4, 4, 2), Vec3::UnitZ(), TrackingParams{});
  for (const auto& p : s) EXPECT_LE(p.z(), 5.5);
  EXPECT_EQ(s.back().x(), 4.0);
}

TEST(Tracking, MaxStepsLimitsEachHalf) {
  const UniformField f = uniform_z({5, 5, 101});
  TrackingParams params;
  params.max_steps = 4;
  const Streamline s = track_from_seed(f.peaks, f.gfa, Vec3(2, 2, 50), Vec3::UnitZ(), params);
  EXPECT_EQ(s.size(), 9u);
}

TEST(Tracking, DeterministicAndSeedOrdered) {
  const Phantom p = generate_phantom(parse_preset("crossing"));
  TractographyOptions opts;
  const auto seeds = mask_seeds(p.truth.dims, p.truth.fiber_mask());
  const Tractogram a = run_tractography(p.volume, seeds, opts);
  const Tractogram b = run_tractography(p.volume, seeds, opts);
  EXPECT_EQ(a.streamlines, b.streamlines);
  ASSERT_FALSE(a.streamlines.empty());
  for (const auto& s : a.streamlines) {
    ASSERT_GE(s.size(), 2u);
    for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LE((s[i] - s[i - 1]).norm(), 1.5 * opts.tracking.step_size);
  }
}

TEST(Tracking, StraightPhantomConnectsItsRois) {
  const Phantom p = generate_phantom(parse_preset("straight"));
  const Tractogram t = run_tractography(p.volume, mask_seeds(p.truth.dims, p.truth.bundle_mask(0)));
  ASSERT_FALSE(t.streamlines.empty());
  const LabeledTractogram labeled = assign_bundles(t, p.truth);
  std::size_t valid = 0;
  for (auto c : labeled.classes) valid += c == ConnectionClass::valid;
  EXPECT_GE(static_cast<double>(valid), 0.95 * static_cast<double>(t.streamlines.size()));
}

TEST(Tracking, MaskSeeds) {
  const Dims dims{3, 4, 5};
  Mask m(dims.voxels(), 0);
  m[dims.index(1, 2, 3)] = 1;
  m[dims.index(2, 0, 4)] = 1;
  const auto seeds = mask_seeds(dims, m);
  ASSERT_EQ(seeds.size(), 2u);
  EXPECT_EQ(seeds[0], Vec3(1, 2, 3));
  EXPECT_EQ(seeds[1], Vec3(2, 0, 4));
}

}  // namespace
}  // namespace qspace
