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

#ifndef QSPACE_SCORE_HPP
#define QSPACE_SCORE_HPP

#include <limits>
#include <utility>
#include <vector>

#include "qspace/phantom.hpp"
#include "qspace/tract.hpp"
#include "qspace/volume.hpp"

namespace qspace {

// 20 log10(max(x over mask) / RMSE over mask and channels). Returns +inf
// when the two volumes agree exactly. Throws Error on an empty mask.
double psnr(const DwiVolume& xhat, const DwiVolume& x, const Mask& mask);

inline constexpr double kBhattacharyyaCap = 50.0;
inline constexpr int kDefaultBhattacharyyaBins = 32;

// Bundle distance from per-axis marginal histograms of all streamline
// points: -ln of the mean per-axis Bhattacharyya coefficient, capped at
// kBhattacharyyaCap.
double bhattacharyya_distance(const std::vector<Streamline>& a, const std::vector<Streamline>& b,
                              int bins = kDefaultBhattacharyyaBins);

enum class ConnectionClass { valid, invalid, non_connecting };

struct LabeledTractogram {
  Tractogram tractogram;  // labels: bundle index for valid streamlines, -1 otherwise
  std::vector<ConnectionClass> classes;
  std::vector<std::pair<int, int>> roi_pairs;  // endpoint ROI ids (sorted), -1 for none
};

// Classifies streamlines by the ROIs containing their two endpoints.
LabeledTractogram assign_bundles(const Tractogram& t, const PhantomTruth& truth);

struct ConnectionReport {
  double vc = 0.0;
  double ic = 0.0;
  double nc = 1.0;
  int vb = 0;
  int ib = 0;
  double ol = 0.0;
  double or_ = 0.0;
  double f1 = 0.0;
  int streamlines = 0;
  int overreach_capped = 0;  // bundles whose overreach exceeded 1
};

ConnectionReport connection_scores(const LabeledTractogram& labeled, const PhantomTruth& truth);

// Streamlines labeled with bundle b.
std::vector<Streamline> bundle_streamlines(const LabeledTractogram& labeled, int bundle);

// Mean over ground-truth bundles of the distance between the bundle as
// recovered in reference and in test. A bundle missing from either side
// counts as kBhattacharyyaCap.
double mean_bundle_distance(const LabeledTractogram& reference, const LabeledTractogram& test,
                            std::size_t bundles, int bins = kDefaultBhattacharyyaBins);

}  // namespace qspace

#endif  // QSPACE_SCORE_HPP
