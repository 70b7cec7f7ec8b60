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

#ifndef QSPACE_PIPELINE_HPP
#define QSPACE_PIPELINE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qspace/design.hpp"
#include "qspace/sphere.hpp"
#include "qspace/volume.hpp"

namespace qspace {

enum class ReconMode { identity, sh_interp, linear };
enum class DirectionMode { fixed, learned };
enum class LossKind { l2, mse };

std::string to_string(ReconMode mode);
std::string to_string(DirectionMode mode);
std::string to_string(LossKind kind);
ReconMode parse_recon_mode(const std::string& text);
DirectionMode parse_direction_mode(const std::string& text);
LossKind parse_loss_kind(const std::string& text);

// Parameters psi of the reconstruction operator. Only the linear mode has
// learnable weights: an affine map from the n acquired channels to the N
// target channels applied independently in every voxel.
struct ReconstructionParams {
  ReconMode mode = ReconMode::linear;
  Eigen::MatrixXd weights;  // N x n
  Eigen::VectorXd bias;     // N

  // Flattened (weights column-major, then bias).
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& psi);
  Eigen::Index parameter_count() const { return weights.size() + bias.size(); }
};

// SH orders and regularization shared by the sub-sampling layer and the
// SH-based reconstruction.
struct ShSettings {
  int sub_order = -1;    // fit of the fully sampled data; -1: default for N
  int recon_order = -1;  // sh-interp reconstruction; -1: default for n
  double lambda = kDefaultShLambda;
};

// Fits every voxel at x.dirs and evaluates at dirs_out. Negative outputs
// are clamped to zero unless clamp is false.
DwiVolume subsample(const DwiVolume& x, const DirectionSet& dirs_out, int order, double lambda,
                    bool clamp = true);

// N x n operator that fits n-direction data with SH of the given order and
// evaluates it at the N target directions.
Eigen::MatrixXd sh_interp_operator(const DirectionSet& acquired, const DirectionSet& target,
                                   int order, double lambda);

// identity passes the input through (channel count stays n); sh-interp and
// linear produce one channel per target direction.
DwiVolume reconstruct(const DwiVolume& xt, const ReconstructionParams& params,
                      const DirectionSet& target_dirs, int order, double lambda);

// Zero-order hold: each target channel copies the acquired channel with the
// nearest direction (up to sign). Used to score identity reconstructions
// against N-channel ground truth.
DwiVolume expand_nearest(const DwiVolume& xt, const DirectionSet& target_dirs);

// |xhat - x|_2 over masked voxels and all channels.
double loss_l2(const DwiVolume& xhat, const DwiVolume& x, const Mask& mask);

struct LossGradients {
  double loss = 0.0;
  Eigen::VectorXd d_theta;
  Eigen::VectorXd d_phi;
  Eigen::VectorXd d_psi;  // layout of ReconstructionParams::flatten
};

// The forward model S followed by R for a fixed fully sampled direction
// set, with reverse-mode gradients. Everything that depends only on the
// fully sampled directions is precomputed.
class JointModel {
 public:
  JointModel(const DirectionSet& full_dirs, ReconMode recon, const ShSettings& sh,
             LossKind loss = LossKind::l2, bool clamp = true);

  const DirectionSet& full_dirs() const { return full_dirs_; }
  int sub_order() const { return sub_order_; }
  int recon_order_for(std::size_t n) const;
  ReconMode recon() const { return recon_; }

  // SH coefficients of fully sampled rows (V x N -> V x R).
  RowMatrix coefficients(const RowMatrix& x) const;

  // Loss of one training example. coeffs must be coefficients(x); pass an
  // empty matrix to have it computed.
  LossGradients evaluate(const RowMatrix& x, const RowMatrix& coeffs, const DirectionSet& dirs,
                         const ReconstructionParams& params, bool with_gradients) const;

  // X_hat for fully sampled rows.
  RowMatrix forward(const RowMatrix& x, const DirectionSet& dirs,
                    const ReconstructionParams& params) const;

  // Initial psi for the linear mode: the sh-interp operator at dirs.
  ReconstructionParams initial_params(const DirectionSet& dirs) const;

 private:
  DirectionSet full_dirs_;
  ReconMode recon_;
  ShSettings sh_;
  LossKind loss_;
  bool clamp_;
  int sub_order_;
  Eigen::MatrixXd fit_full_;  // R x N
};

// Gradients of the loss over the brain-masked voxels of x.
LossGradients loss_gradients(const DwiVolume& x, const DirectionSet& dirs,
                             const ReconstructionParams& params, const ShSettings& sh,
                             LossKind loss = LossKind::l2);

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamMoments {
  double lr = 1e-3;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
};

// Parameter groups theta, phi (directions) and psi (reconstruction).
struct ParamGroups {
  Eigen::VectorXd theta;
  Eigen::VectorXd phi;
  Eigen::VectorXd psi;
};

struct AdamState {
  std::int64_t t = 0;
  AdamHyper hyper;
  AdamMoments theta;
  AdamMoments phi;
  AdamMoments psi;

  AdamState() = default;
  AdamState(const ParamGroups& shapes, double lr_dirs, double lr_recon);
};

// One bias-corrected Adam update of every group (empty groups are skipped).
void adam_step(AdamState& state, ParamGroups& params, const ParamGroups& grads);

inline constexpr double kDefaultLrRecon = 1e-3;
inline constexpr double kDefaultLrDirs = 1e-4;

struct TrainConfig {
  double af = 3.0;
  DirectionMode mode = DirectionMode::learned;
  ReconMode recon = ReconMode::linear;
  double lr_recon = kDefaultLrRecon;
  double lr_dirs = kDefaultLrDirs;
  int epochs = 50;
  int patience = 10;
  double min_improvement = 1e-5;
  std::uint64_t seed = 0;
  ShSettings sh;
  LossKind loss = LossKind::l2;
  // Fixed mode uses these directions when set, else electrostatic_design.
  std::optional<DirectionSet> fixed_dirs;

  void validate() const;
};

// n = round(N / af), at least 1.
std::size_t acquired_count(std::size_t full, double af);

struct Dataset {
  std::vector<DwiVolume> train;
  std::vector<DwiVolume> validation;
};

struct TrainResult {
  DirectionSet initial_dirs;
  // Directions and parameters of the epoch with the lowest validation loss.
  DirectionSet dirs;
  ReconstructionParams params;
  int best_epoch = -1;
  std::vector<double> train_loss;       // mean per-slice loss, per epoch
  std::vector<double> validation_loss;  // mean per-slice loss, per epoch
  std::vector<DirectionSet> dir_history;  // after every epoch
  int steps = 0;
};

// Joint optimization of the acquisition directions and the reconstruction
// parameters, one axial slice per Adam step.
TrainResult train_joint(const Dataset& data, const TrainConfig& cfg);

// Mean per-slice loss over the masked slices of a set of volumes.
double mean_slice_loss(const JointModel& model, const std::vector<DwiVolume>& volumes,
                       const DirectionSet& dirs, const ReconstructionParams& params);

}  // namespace qspace

#endif  // QSPACE_PIPELINE_HPP
