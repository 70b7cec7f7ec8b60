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

#ifndef QSPACE_EXPERIMENT_HPP
#define QSPACE_EXPERIMENT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "qspace/phantom.hpp"
#include "qspace/pipeline.hpp"
#include "qspace/score.hpp"
#include "qspace/tract.hpp"

namespace qspace {

// A family of noisy copies of one synthetic phantom, split into training
// and validation volumes. Every copy shares the fully sampled directions.
struct PhantomSetConfig {
  PhantomSpec phantom;
  int train_volumes = 8;
  int validation_volumes = 2;
  double snr = 20.0;
  std::uint64_t noise_seed = 1;

  void validate() const;
};

struct PhantomSet {
  Phantom clean;
  Dataset data;
};

// Volume i gets Rician noise keyed by counter_hash(noise_seed, i).
PhantomSet make_phantom_set(const PhantomSetConfig& cfg);

// Mean PSNR over the validation volumes of the reconstruction from the
// acquired directions, scored against the noiseless phantom signal. The
// identity mode is scored after nearest-direction expansion.
double validation_psnr(const PhantomSet& set, const DirectionSet& dirs, const ReconstructionParams& params,
                       const ShSettings& sh);

// Tractography of every validation volume sub-sampled at dirs, without any
// reconstruction, compared bundle by bundle with the tractography of the
// noiseless fully sampled phantom. Returns the mean bundle distance.
double bundle_distance_without_recon(const PhantomSet& set, const DirectionSet& dirs, const ShSettings& sh,
                                     const TractographyOptions& tract = {},
                                     int bins = kDefaultBhattacharyyaBins);

// Tractography seeded at every fiber voxel and labeled against the truth.
LabeledTractogram track_phantom(const DwiVolume& x, const PhantomTruth& truth, const TractographyOptions& tract);

// One row of a learned-versus-fixed comparison.
struct ComparisonRow {
  double af = 0.0;
  std::size_t n = 0;
  TrainResult fixed;
  TrainResult learned;
  double psnr_fixed = 0.0;
  double psnr_learned = 0.0;
  double psnr_identity = 0.0;  // fixed directions, no reconstruction
};

struct ComparisonConfig {
  std::vector<double> afs{3.0, 5.0, 10.0};
  ReconMode recon = ReconMode::linear;
  TrainConfig train;  // af, mode and recon are overwritten per run
};

std::vector<ComparisonRow> compare_designs(const PhantomSet& set, const ComparisonConfig& cfg);

}  // namespace qspace

#endif  // QSPACE_EXPERIMENT_HPP
