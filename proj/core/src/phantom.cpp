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

#include "qspace/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qspace/design.hpp"
#include "qspace/error.hpp"
#include "qspace/parallel.hpp"
#include "qspace/random.hpp"

namespace qspace {

namespace {

// Unit vector perpendicular to a, chosen against the least aligned axis.
Vec3 perpendicular(const Vec3& a) {
  Vec3 helper = Vec3::UnitX();
  if (std::abs(a.x()) > std::abs(a.y())) helper = Vec3::UnitY();
  if (std::abs(a.z()) < std::min(std::abs(a.x()), std::abs(a.y()))) helper = Vec3::UnitZ();
  return a.cross(helper).normalized();
}

struct Projection {
  double distance;
  double arclength;  // along the polyline, from its first point
  Vec3 tangent;
};

Projection project(const std::vector<Vec3>& line, const Vec3& p) {
  Projection best{std::numeric_limits<double>::infinity(), 0.0, Vec3::UnitZ()};
  double travelled = 0.0;
  for (std::size_t s = 0; s + 1 < line.size(); ++s) {
    const Vec3 seg = line[s + 1] - line[s];
    const double len = seg.norm();
    const double t = std::clamp((p - line[s]).dot(seg) / (len * len), 0.0, 1.0);
    const double dist = (line[s] + t * seg - p).norm();
    if (dist < best.distance) best = {dist, travelled + t * len, seg / len};
    travelled += len;
  }
  return best;
}

double polyline_length(const std::vector<Vec3>& line) {
  double len = 0.0;
  for (std::size_t s = 0; s + 1 < line.size(); ++s) len += (line[s + 1] - line[s]).norm();
  return len;
}

// Segment through centre along u, clipped to the in-plane box [0, dim-1].
std::vector<Vec3> clipped_line(const Dims& dims, const Vec3& centre, const Vec3& u) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  const std::array<double, 3> extent{dims.x - 1.0, dims.y - 1.0, dims.z - 1.0};
  for (int a = 0; a < 3; ++a) {
    if (std::abs(u(a)) < 1e-12) continue;
    double t0 = (0.0 - centre(a)) / u(a);
    double t1 = (extent[a] - centre(a)) / u(a);
    if (t0 > t1) std::swap(t0, t1);
    lo = std::max(lo, t0);
    hi = std::min(hi, t1);
  }
  return {centre + lo * u, centre + hi * u};
}

}  // namespace

double tensor_signal(const Vec3& g, double b, std::span<const TensorCompartment> compartments) {
  if (b == 0.0) return 1.0;
  double s = 0.0;
  for (const auto& c : compartments) {
    const Vec3 e1 = c.axis.normalized();
    const Vec3 e2 = perpendicular(e1);
    const Vec3 e3 = e1.cross(e2);
    const double p1 = g.dot(e1), p2 = g.dot(e2), p3 = g.dot(e3);
    const double adc = c.eigenvalues(0) * p1 * p1 + c.eigenvalues(1) * p2 * p2 + c.eigenvalues(2) * p3 * p3;
    s += c.fraction * std::exp(-b * adc);
  }
  return s;
}

Mask PhantomTruth::bundle_mask(std::size_t bundle) const {
  Mask mask(dims.voxels(), 0);
  const Bundle& bd = bundles.at(bundle);
  for (std::size_t v = 0; v < mask.size(); ++v) {
    const auto c = dims.coords(v);
    const Vec3 p(c[0], c[1], c[2]);
    mask[v] = project(bd.centerline, p).distance <= bd.radius;
  }
  return mask;
}

Mask PhantomTruth::fiber_mask() const {
  Mask mask(dims.voxels(), 0);
  for (std::size_t b = 0; b < bundles.size(); ++b) {
    const Mask m = bundle_mask(b);
    for (std::size_t v = 0; v < mask.size(); ++v) mask[v] |= m[v];
  }
  return mask;
}

std::vector<int> PhantomTruth::roi_lookup() const {
  std::vector<int> lookup(dims.voxels(), -1);
  for (std::size_t b = 0; b < rois.size(); ++b)
    for (int end = 0; end < 2; ++end)
      for (std::size_t v : rois[b][static_cast<std::size_t>(end)]) lookup[v] = static_cast<int>(2 * b) + end;
  return lookup;
}

PhantomSpec parse_preset(const std::string& text) {
  PhantomSpec spec;
  if (text == "straight") {
    spec.preset = PhantomPreset::straight;
  } else if (text == "arc") {
    spec.preset = PhantomPreset::arc;
  } else if (text == "crossing") {
    spec.preset = PhantomPreset::crossing;
  } else if (text.rfind("crossing:", 0) == 0) {
    spec.preset = PhantomPreset::crossing;
    try {
      spec.crossing_angle_deg = std::stod(text.substr(9));
    } catch (const std::exception&) {
      throw Error("invalid crossing angle in preset '" + text + "'");
    }
    if (!(spec.crossing_angle_deg > 0.0 && spec.crossing_angle_deg <= 90.0)) {
      throw Error("crossing angle must lie in (0, 90] degrees");
    }
  } else {
    throw Error("unknown phantom preset '" + text + "' (expected straight, arc, crossing[:deg])");
  }
  return spec;
}

std::string preset_name(const PhantomSpec& spec) {
  switch (spec.preset) {
    case PhantomPreset::straight:
      return "straight";
    case PhantomPreset::arc:
      return "arc";
    case PhantomPreset::crossing: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "crossing:%g", spec.crossing_angle_deg);
      return buf;
    }
  }
  return "unknown";
}

PhantomTruth phantom_truth(const PhantomSpec& spec) {
  const Dims& d = spec.dims;
  if (d.x < 16 || d.y < 16 || d.z < 16) throw Error("phantom dimensions must be at least 16^3");
  PhantomTruth truth;
  truth.preset = preset_name(spec);
  truth.dims = d;
  const double radius = spec.radius > 0.0 ? spec.radius : std::max(2.0, std::min({d.x, d.y, d.z}) / 8.0);
  const Vec3 centre((d.x - 1) / 2.0, (d.y - 1) / 2.0, (d.z - 1) / 2.0);

  switch (spec.preset) {
    case PhantomPreset::straight:
      truth.bundles.push_back({clipped_line(d, centre, Vec3::UnitY()), radius});
      break;
    case PhantomPreset::crossing: {
      const double half = 0.5 * spec.crossing_angle_deg * std::numbers::pi / 180.0;
      truth.bundles.push_back({clipped_line(d, centre, Vec3(std::sin(half), std::cos(half), 0.0)), radius});
      truth.bundles.push_back({clipped_line(d, centre, Vec3(-std::sin(half), std::cos(half), 0.0)), radius});
      break;
    }
    case PhantomPreset::arc: {
      const double rho = 0.6 * (std::min(d.x, d.y) - 1);
      std::vector<Vec3> line;
      constexpr int kSegments = 256;
      for (int s = 0; s <= kSegments; ++s) {
        const double t = 0.5 * std::numbers::pi * s / kSegments;
        line.emplace_back(rho * std::cos(t), rho * std::sin(t), centre.z());
      }
      truth.bundles.push_back({std::move(line), radius});
      break;
    }
  }

  const std::size_t nvox = d.voxels();
  truth.compartments.assign(nvox, {});
  truth.rois.assign(truth.bundles.size(), {});
  std::vector<int> membership(nvox, 0);
  std::vector<std::vector<std::pair<std::size_t, double>>> tube(truth.bundles.size());
  for (std::size_t v = 0; v < nvox; ++v) {
    const auto c = d.coords(v);
    const Vec3 p(c[0], c[1], c[2]);
    for (std::size_t b = 0; b < truth.bundles.size(); ++b) {
      const Projection proj = project(truth.bundles[b].centerline, p);
      if (proj.distance > truth.bundles[b].radius) continue;
      TensorCompartment comp;
      comp.eigenvalues = spec.eigenvalues;
      comp.axis = proj.tangent;
      truth.compartments[v].push_back(comp);
      tube[b].emplace_back(v, proj.arclength);
      ++membership[v];
    }
    for (auto& comp : truth.compartments[v]) comp.fraction = 1.0 / static_cast<double>(truth.compartments[v].size());
  }

  for (std::size_t b = 0; b < truth.bundles.size(); ++b) {
    const double length = polyline_length(truth.bundles[b].centerline);
    for (const auto& [v, s] : tube[b]) {
      if (membership[v] != 1) continue;
      if (s <= spec.roi_depth) truth.rois[b][0].push_back(v);
      else if (s >= length - spec.roi_depth) truth.rois[b][1].push_back(v);
    }
  }
  return truth;
}

Phantom generate_phantom(const PhantomSpec& spec) {
  if (spec.n_dirs < 6) throw Error("phantom needs at least 6 directions");
  Phantom out;
  out.truth = phantom_truth(spec);

  DwiVolume& vol = out.volume;
  vol.dims = spec.dims;
  vol.b_value = spec.b_value;
  if (spec.dirs) {
    vol.dirs = *spec.dirs;
  } else {
    DesignConfig design;
    design.n = spec.n_dirs;
    design.seed = spec.seed;
    vol.dirs = electrostatic_design(design);
  }
  const auto g = vol.dirs.cartesian();
  const std::size_t nvox = vol.voxels();
  vol.data.resize(static_cast<Eigen::Index>(nvox), g.rows());
  vol.b0 = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(nvox));

  TensorCompartment background;
  background.eigenvalues = Eigen::Vector3d::Constant(out.truth.background_diffusivity);
  const std::vector<TensorCompartment> background_list{background};

  parallel_chunks(nvox, 4096, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) {
      const auto& comps = out.truth.compartments[v].empty() ? background_list : out.truth.compartments[v];
      for (Eigen::Index k = 0; k < g.rows(); ++k) {
        vol.data(static_cast<Eigen::Index>(v), k) = tensor_signal(g.row(k).transpose(), spec.b_value, comps);
      }
    }
  });
  return out;
}

DwiVolume add_rician_noise(const DwiVolume& vol, double snr, std::uint64_t seed) {
  if (std::isinf(snr) && snr > 0.0) return vol;
  if (!(snr > 0.0)) throw Error("SNR must be positive");
  const double sigma = 1.0 / snr;
  DwiVolume out = vol;
  const auto channels = static_cast<std::uint64_t>(vol.channels());
  parallel_chunks(vol.voxels(), 4096, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) {
      const auto c = vol.dims.coords(v);
      for (std::uint64_t d = 0; d < channels; ++d) {
        const std::uint64_t base = counter_hash(seed, static_cast<std::uint64_t>(c[0]),
                                                static_cast<std::uint64_t>(c[1]),
                                                static_cast<std::uint64_t>(c[2]), d);
        double e1 = 0.0, e2 = 0.0;
        box_muller(splitmix64(base), splitmix64(base ^ 0xD1B54A32D192ED03ull), e1, e2);
        const double s = vol.data(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(d));
        const double re = s + sigma * e1;
        const double im = sigma * e2;
        out.data(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(d)) = std::sqrt(re * re + im * im);
      }
    }
  });
  return out;
}

}  // namespace qspace
