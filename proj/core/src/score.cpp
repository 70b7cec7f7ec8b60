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

#include "qspace/score.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "qspace/error.hpp"

namespace qspace {

namespace {

int voxel_of(const Dims& dims, const Vec3& p) {
  const int i = static_cast<int>(std::floor(p.x() + 0.5));
  const int j = static_cast<int>(std::floor(p.y() + 0.5));
  const int k = static_cast<int>(std::floor(p.z() + 0.5));
  if (!dims.contains(i, j, k)) return -1;
  return static_cast<int>(dims.index(i, j, k));
}

}  // namespace

double psnr(const DwiVolume& xhat, const DwiVolume& x, const Mask& mask) {
  if (xhat.data.rows() != x.data.rows() || xhat.data.cols() != x.data.cols()) {
    throw Error("psnr: volumes differ in shape");
  }
  if (mask.size() != x.voxels()) throw Error("psnr: mask size does not match volume");
  double peak = -std::numeric_limits<double>::infinity();
  double ssq = 0.0;
  std::size_t count = 0;
  for (std::size_t v = 0; v < mask.size(); ++v) {
    if (!mask[v]) continue;
    const auto r = static_cast<Eigen::Index>(v);
    peak = std::max(peak, x.data.row(r).maxCoeff());
    ssq += (xhat.data.row(r) - x.data.row(r)).squaredNorm();
    count += static_cast<std::size_t>(x.data.cols());
  }
  if (count == 0) throw Error("psnr: empty mask");
  const double rmse = std::sqrt(ssq / static_cast<double>(count));
  if (rmse == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(peak / rmse);
}

double bhattacharyya_distance(const std::vector<Streamline>& a, const std::vector<Streamline>& b, int bins) {
  if (bins < 1) throw Error("bhattacharyya_distance: bins must be >= 1");
  std::size_t na = 0, nb = 0;
  for (const auto& s : a) na += s.size();
  for (const auto& s : b) nb += s.size();
  if (na == 0 || nb == 0) throw Error("bhattacharyya_distance: empty bundle");

  double bc_sum = 0.0;
  for (int axis = 0; axis < 3; ++axis) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto* set : {&a, &b})
      for (const auto& s : *set)
        for (const auto& p : s) {
          lo = std::min(lo, p(axis));
          hi = std::max(hi, p(axis));
        }
    const double width = hi - lo;
    auto histogram = [&](const std::vector<Streamline>& set) {
      std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
      for (const auto& s : set) {
        for (const auto& p : s) {
          int bin = width > 0.0 ? static_cast<int>((p(axis) - lo) / width * bins) : 0;
          bin = std::clamp(bin, 0, bins - 1);
          h[static_cast<std::size_t>(bin)] += 1.0;
        }
      }
      return h;
    };
    // Counts rather than frequencies keep BC(A, A) exactly 1.
    const auto p = histogram(a);
    const auto q = histogram(b);
    double overlap = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) overlap += std::sqrt(p[i] * q[i]);
    const double bc = overlap / std::sqrt(static_cast<double>(na) * static_cast<double>(nb));
    bc_sum += bc;
  }
  const double mean_bc = bc_sum / 3.0;
  if (!(mean_bc > std::exp(-kBhattacharyyaCap))) return kBhattacharyyaCap;
  return std::max(0.0, -std::log(std::min(1.0, mean_bc)));
}

LabeledTractogram assign_bundles(const Tractogram& t, const PhantomTruth& truth) {
  const std::vector<int> lookup = truth.roi_lookup();
  LabeledTractogram out;
  out.tractogram = t;
  out.tractogram.labels.assign(t.streamlines.size(), -1);
  out.classes.reserve(t.streamlines.size());
  out.roi_pairs.reserve(t.streamlines.size());
  for (std::size_t i = 0; i < t.streamlines.size(); ++i) {
    const auto& s = t.streamlines[i];
    auto roi_at = [&](const Vec3& p) {
      const int v = voxel_of(truth.dims, p);
      return v < 0 ? -1 : lookup[static_cast<std::size_t>(v)];
    };
    int r0 = s.empty() ? -1 : roi_at(s.front());
    int r1 = s.empty() ? -1 : roi_at(s.back());
    if (r0 > r1) std::swap(r0, r1);
    out.roi_pairs.emplace_back(r0, r1);
    if (r0 < 0) {
      out.classes.push_back(ConnectionClass::non_connecting);
    } else if (r0 / 2 == r1 / 2 && r0 != r1) {
      out.classes.push_back(ConnectionClass::valid);
      out.tractogram.labels[i] = r0 / 2;
    } else {
      // Includes both endpoints in the same ROI.
      out.classes.push_back(ConnectionClass::invalid);
    }
  }
  return out;
}

ConnectionReport connection_scores(const LabeledTractogram& labeled, const PhantomTruth& truth) {
  ConnectionReport report;
  const std::size_t total = labeled.classes.size();
  report.streamlines = static_cast<int>(total);
  if (total == 0) return report;

  std::size_t valid = 0, invalid = 0, none = 0;
  std::set<std::pair<int, int>> invalid_pairs;
  for (std::size_t i = 0; i < total; ++i) {
    switch (labeled.classes[i]) {
      case ConnectionClass::valid:
        ++valid;
        break;
      case ConnectionClass::invalid:
        ++invalid;
        invalid_pairs.insert(labeled.roi_pairs[i]);
        break;
      case ConnectionClass::non_connecting:
        ++none;
        break;
    }
  }
  report.vc = static_cast<double>(valid) / static_cast<double>(total);
  report.ic = static_cast<double>(invalid) / static_cast<double>(total);
  report.nc = static_cast<double>(none) / static_cast<double>(total);
  report.ib = static_cast<int>(invalid_pairs.size());

  double ol_sum = 0.0, or_sum = 0.0, f1_sum = 0.0;
  for (std::size_t b = 0; b < truth.bundles.size(); ++b) {
    std::set<int> visited;
    for (std::size_t i = 0; i < total; ++i) {
      if (labeled.tractogram.labels[i] != static_cast<int>(b)) continue;
      for (const auto& p : labeled.tractogram.streamlines[i]) {
        const int v = voxel_of(truth.dims, p);
        if (v >= 0) visited.insert(v);
      }
    }
    if (visited.empty()) continue;
    ++report.vb;
    const Mask mask = truth.bundle_mask(b);
    std::size_t mask_size = 0;
    for (auto m : mask) mask_size += m;
    std::size_t hit = 0;
    for (int v : visited) hit += mask[static_cast<std::size_t>(v)];
    const double ms = static_cast<double>(std::max<std::size_t>(mask_size, 1));
    const double ol = static_cast<double>(hit) / ms;
    double ovr = static_cast<double>(visited.size() - hit) / ms;
    if (ovr > 1.0) {
      ovr = 1.0;
      ++report.overreach_capped;
    }
    const double precision = static_cast<double>(hit) / static_cast<double>(visited.size());
    const double f1 = precision + ol > 0.0 ? 2.0 * precision * ol / (precision + ol) : 0.0;
    ol_sum += ol;
    or_sum += ovr;
    f1_sum += f1;
  }
  if (report.vb > 0) {
    report.ol = ol_sum / report.vb;
    report.or_ = or_sum / report.vb;
    report.f1 = f1_sum / report.vb;
  }
  return report;
}

std::vector<Streamline> bundle_streamlines(const LabeledTractogram& labeled, int bundle) {
  std::vector<Streamline> out;
  for (std::size_t i = 0; i < labeled.tractogram.streamlines.size(); ++i)
    if (labeled.tractogram.labels[i] == bundle) out.push_back(labeled.tractogram.streamlines[i]);
  return out;
}

double mean_bundle_distance(const LabeledTractogram& reference, const LabeledTractogram& test,
                            std::size_t bundles, int bins) {
  if (bundles == 0) throw Error("mean_bundle_distance: no bundles");
  double total = 0.0;
  for (std::size_t b = 0; b < bundles; ++b) {
    const auto ref = bundle_streamlines(reference, static_cast<int>(b));
    const auto tst = bundle_streamlines(test, static_cast<int>(b));
    total += (ref.empty() || tst.empty()) ? kBhattacharyyaCap : bhattacharyya_distance(ref, tst, bins);
  }
  return total / static_cast<double>(bundles);
}

}  // namespace qspace
