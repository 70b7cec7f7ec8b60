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

#include "qspace/experiment.hpp"

#include "qspace/error.hpp"
#include "qspace/random.hpp"

namespace qspace {

void PhantomSetConfig::validate() const {
  if (train_volumes < 1) throw Error("phantom set needs at least one training volume");
  if (validation_volumes < 0) throw Error("validation volume count must be >= 0");
  if (!(snr > 0.0)) throw Error("snr must be positive");
}

PhantomSet make_phantom_set(const PhantomSetConfig& cfg) {
  cfg.validate();
  PhantomSet set;
  set.clean = generate_phantom(cfg.phantom);
  const int total = cfg.train_volumes + cfg.validation_volumes;
  for (int i = 0; i < total; ++i) {
    DwiVolume noisy =
        add_rician_noise(set.clean.volume, cfg.snr, counter_hash(cfg.noise_seed, static_cast<std::uint64_t>(i)));
    (i < cfg.train_volumes ? set.data.train : set.data.validation).push_back(std::move(noisy));
  }
  return set;
}

namespace {

const std::vector<DwiVolume>& scoring_volumes(const PhantomSet& set) {
  return set.data.validation.empty() ? set.data.train : set.data.validation;
}

}  // namespace

double validation_psnr(const PhantomSet& set, const DirectionSet& dirs, const ReconstructionParams& params,
                       const ShSettings& sh) {
  const DwiVolume& truth = set.clean.volume;
  const Mask mask = brain_mask(truth);
  const auto& volumes = scoring_volumes(set);
  double total = 0.0;
  for (const auto& vol : volumes) {
    DwiVolume xhat;
    if (params.mode == ReconMode::identity) {
      const int order = sh.sub_order >= 0 ? sh.sub_order : default_sh_order(vol.channels());
      xhat = expand_nearest(subsample(vol, dirs, order, sh.lambda), vol.dirs);
    } else {
      const JointModel model(vol.dirs, params.mode, sh);
      xhat = with_channels(vol, vol.dirs, model.forward(vol.data, dirs, params));
    }
    total += psnr(xhat, truth, mask);
  }
  return total / static_cast<double>(volumes.size());
}

LabeledTractogram track_phantom(const DwiVolume& x, const PhantomTruth& truth, const TractographyOptions& tract) {
  const Tractogram t = run_tractography(x, mask_seeds(truth.dims, truth.fiber_mask()), tract);
  return assign_bundles(t, truth);
}

double bundle_distance_without_recon(const PhantomSet& set, const DirectionSet& dirs, const ShSettings& sh,
                                     const TractographyOptions& tract, int bins) {
  const PhantomTruth& truth = set.clean.truth;
  const LabeledTractogram reference = track_phantom(set.clean.volume, truth, tract);
  const auto& volumes = scoring_volumes(set);
  double total = 0.0;
  for (const auto& vol : volumes) {
    const int order = sh.sub_order >= 0 ? sh.sub_order : default_sh_order(vol.channels());
    const DwiVolume xt = subsample(vol, dirs, order, sh.lambda);
    total += mean_bundle_distance(reference, track_phantom(xt, truth, tract), truth.bundles.size(), bins);
  }
  return total / static_cast<double>(volumes.size());
}

std::vector<ComparisonRow> compare_designs(const PhantomSet& set, const ComparisonConfig& cfg) {
  std::vector<ComparisonRow> rows;
  const std::size_t big_n = set.clean.volume.channels();
  for (double af : cfg.afs) {
    ComparisonRow row;
    row.af = af;
    row.n = acquired_count(big_n, af);
    TrainConfig tc = cfg.train;
    tc.af = af;
    tc.recon = cfg.recon;
    tc.mode = DirectionMode::fixed;
    row.fixed = train_joint(set.data, tc);
    tc.mode = DirectionMode::learned;
    row.learned = train_joint(set.data, tc);
    row.psnr_fixed = validation_psnr(set, row.fixed.dirs, row.fixed.params, tc.sh);
    row.psnr_learned = validation_psnr(set, row.learned.dirs, row.learned.params, tc.sh);
    ReconstructionParams identity;
    identity.mode = ReconMode::identity;
    row.psnr_identity = validation_psnr(set, row.fixed.dirs, identity, tc.sh);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace qspace
