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

#include "qspace/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qspace/error.hpp"
#include "qspace/parallel.hpp"
#include "qspace/random.hpp"

namespace qspace {

namespace {

// Rows per chunk for the deterministic chunked reductions.
constexpr std::size_t kRowChunk = 256;

void clamp_nonnegative(RowMatrix& m) { m = m.cwiseMax(0.0); }

struct ChunkPartial {
  double ssq = 0.0;
  Eigen::MatrixXd d_basis;  // n x R_sub
  Eigen::MatrixXd d_op;     // N x n: dW (linear) or dQ (sh-interp)
  Eigen::VectorXd d_bias;   // N
};

}  // namespace

std::string to_string(ReconMode mode) {
  switch (mode) {
    case ReconMode::identity:
      return "identity";
    case ReconMode::sh_interp:
      return "sh-interp";
    case ReconMode::linear:
      return "linear";
  }
  return "unknown";
}

std::string to_string(DirectionMode mode) { return mode == DirectionMode::fixed ? "fixed" : "learned"; }

std::string to_string(LossKind kind) { return kind == LossKind::l2 ? "l2" : "mse"; }

ReconMode parse_recon_mode(const std::string& text) {
  if (text == "identity") return ReconMode::identity;
  if (text == "sh-interp") return ReconMode::sh_interp;
  if (text == "linear") return ReconMode::linear;
  throw Error("unknown reconstruction mode '" + text + "' (expected identity, sh-interp, linear)");
}

DirectionMode parse_direction_mode(const std::string& text) {
  if (text == "fixed") return DirectionMode::fixed;
  if (text == "learned") return DirectionMode::learned;
  throw Error("unknown direction mode '" + text + "' (expected fixed, learned)");
}

LossKind parse_loss_kind(const std::string& text) {
  if (text == "l2") return LossKind::l2;
  if (text == "mse") return LossKind::mse;
  throw Error("unknown loss '" + text + "' (expected l2, mse)");
}

Eigen::VectorXd ReconstructionParams::flatten() const {
  Eigen::VectorXd psi(parameter_count());
  psi.head(weights.size()) = Eigen::Map<const Eigen::VectorXd>(weights.data(), weights.size());
  psi.tail(bias.size()) = bias;
  return psi;
}

void ReconstructionParams::unflatten(const Eigen::VectorXd& psi) {
  if (psi.size() != parameter_count()) throw Error("parameter vector has the wrong length");
  weights = Eigen::Map<const Eigen::MatrixXd>(psi.data(), weights.rows(), weights.cols());
  bias = psi.tail(bias.size());
}

DwiVolume subsample(const DwiVolume& x, const DirectionSet& dirs_out, int order, double lambda,
                    bool clamp) {
  if (dirs_out.empty()) throw Error("subsample: no output directions");
  if (order < 0) order = default_sh_order(x.dirs.size());
  const Eigen::MatrixXd fit = sh_fit_matrix(sh_basis(order, x.dirs), lambda);
  const Eigen::MatrixXd resample = sh_basis(order, dirs_out) * fit;  // n x N
  RowMatrix out(x.data.rows(), resample.rows());
  parallel_chunks(static_cast<std::size_t>(x.data.rows()), 4096,
                  [&](std::size_t, std::size_t begin, std::size_t end) {
                    const auto rows = static_cast<Eigen::Index>(end - begin);
                    const auto b = static_cast<Eigen::Index>(begin);
                    out.middleRows(b, rows).noalias() = x.data.middleRows(b, rows) * resample.transpose();
                  });
  if (clamp) clamp_nonnegative(out);
  return with_channels(x, dirs_out, std::move(out));
}

Eigen::MatrixXd sh_interp_operator(const DirectionSet& acquired, const DirectionSet& target,
                                   int order, double lambda) {
  if (order < 0) order = default_sh_order(acquired.size());
  return sh_basis(order, target) * sh_fit_matrix(sh_basis(order, acquired), lambda);
}

DwiVolume reconstruct(const DwiVolume& xt, const ReconstructionParams& params,
                      const DirectionSet& target_dirs, int order, double lambda) {
  const auto n = static_cast<Eigen::Index>(xt.channels());
  const auto big_n = static_cast<Eigen::Index>(target_dirs.size());
  switch (params.mode) {
    case ReconMode::identity:
      return xt;
    case ReconMode::sh_interp: {
      const Eigen::MatrixXd op = sh_interp_operator(xt.dirs, target_dirs, order, lambda);
      RowMatrix out = xt.data * op.transpose();
      clamp_nonnegative(out);
      return with_channels(xt, target_dirs, std::move(out));
    }
    case ReconMode::linear: {
      if (params.weights.rows() != big_n || params.weights.cols() != n || params.bias.size() != big_n) {
        throw Error("linear reconstruction expects weights " + std::to_string(big_n) + "x" +
                    std::to_string(n) + " and bias " + std::to_string(big_n));
      }
      RowMatrix out = xt.data * params.weights.transpose();
      out.rowwise() += params.bias.transpose();
      clamp_nonnegative(out);
      return with_channels(xt, target_dirs, std::move(out));
    }
  }
  throw Error("unknown reconstruction mode");
}

DwiVolume expand_nearest(const DwiVolume& xt, const DirectionSet& target_dirs) {
  const auto acquired = xt.dirs.cartesian();
  const auto target = target_dirs.cartesian();
  RowMatrix out(xt.data.rows(), target.rows());
  for (Eigen::Index k = 0; k < target.rows(); ++k) {
    Eigen::Index best = 0;
    double best_dot = -1.0;
    for (Eigen::Index i = 0; i < acquired.rows(); ++i) {
      const double d = std::abs(acquired.row(i).dot(target.row(k)));
      if (d > best_dot) {
        best_dot = d;
        best = i;
      }
    }
    out.col(k) = xt.data.col(best);
  }
  return with_channels(xt, target_dirs, std::move(out));
}

double loss_l2(const DwiVolume& xhat, const DwiVolume& x, const Mask& mask) {
  if (xhat.dims != x.dims || xhat.data.rows() != x.data.rows() || xhat.data.cols() != x.data.cols()) {
    throw Error("loss_l2: volumes differ in shape");
  }
  if (mask.size() != x.voxels()) throw Error("loss_l2: mask size does not match volume");
  double ssq = 0.0;
  for (std::size_t v = 0; v < mask.size(); ++v) {
    if (!mask[v]) continue;
    const auto r = static_cast<Eigen::Index>(v);
    ssq += (xhat.data.row(r) - x.data.row(r)).squaredNorm();
  }
  return std::sqrt(ssq);
}

JointModel::JointModel(const DirectionSet& full_dirs, ReconMode recon, const ShSettings& sh, LossKind loss,
                       bool clamp)
    : full_dirs_(full_dirs), recon_(recon), sh_(sh), loss_(loss), clamp_(clamp) {
  if (full_dirs_.empty()) throw Error("JointModel: no fully sampled directions");
  sub_order_ = sh_.sub_order >= 0 ? sh_.sub_order : default_sh_order(full_dirs_.size());
  fit_full_ = sh_fit_matrix(sh_basis(sub_order_, full_dirs_), sh_.lambda);
}

int JointModel::recon_order_for(std::size_t n) const {
  return sh_.recon_order >= 0 ? sh_.recon_order : default_sh_order(n);
}

RowMatrix JointModel::coefficients(const RowMatrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != full_dirs_.size()) {
    throw Error("JointModel: expected " + std::to_string(full_dirs_.size()) + " channels, got " +
                std::to_string(x.cols()));
  }
  return x * fit_full_.transpose();
}

ReconstructionParams JointModel::initial_params(const DirectionSet& dirs) const {
  ReconstructionParams params;
  params.mode = recon_;
  if (recon_ == ReconMode::linear) {
    params.weights = sh_interp_operator(dirs, full_dirs_, recon_order_for(dirs.size()), sh_.lambda);
    params.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(full_dirs_.size()));
  }
  return params;
}

RowMatrix JointModel::forward(const RowMatrix& x, const DirectionSet& dirs,
                              const ReconstructionParams& params) const {
  const RowMatrix coeffs = coefficients(x);
  RowMatrix xt = coeffs * sh_basis(sub_order_, dirs).transpose();
  if (clamp_) clamp_nonnegative(xt);
  switch (recon_) {
    case ReconMode::identity:
      return xt;
    case ReconMode::sh_interp:
      return xt * sh_interp_operator(dirs, full_dirs_, recon_order_for(dirs.size()), sh_.lambda).transpose();
    case ReconMode::linear: {
      RowMatrix out = xt * params.weights.transpose();
      out.rowwise() += params.bias.transpose();
      return out;
    }
  }
  return xt;
}

LossGradients JointModel::evaluate(const RowMatrix& x, const RowMatrix& coeffs_in, const DirectionSet& dirs,
                                   const ReconstructionParams& params, bool with_gradients) const {
  const auto big_n = static_cast<Eigen::Index>(full_dirs_.size());
  const auto n = static_cast<Eigen::Index>(dirs.size());
  if (n == 0) throw Error("JointModel: no acquired directions");
  if (x.cols() != big_n) throw Error("JointModel: channel count does not match the fully sampled set");
  if (recon_ == ReconMode::identity && n != big_n) {
    throw Error("identity reconstruction needs as many acquired as target directions");
  }
  if (recon_ == ReconMode::linear &&
      (params.weights.rows() != big_n || params.weights.cols() != n || params.bias.size() != big_n)) {
    throw Error("linear reconstruction parameters do not match (N, n)");
  }

  RowMatrix computed;
  if (coeffs_in.size() == 0) computed = coefficients(x);
  const RowMatrix& coeffs = coeffs_in.size() == 0 ? computed : coeffs_in;

  const Eigen::MatrixXd basis = sh_basis(sub_order_, dirs);  // n x R

  // sh-interp operator Q = B_full A^{-1} B^T with A = B^T B + lambda L^2.
  int rec_order = 0;
  Eigen::MatrixXd rec_basis, rec_full, rec_op;
  Eigen::LLT<Eigen::MatrixXd> rec_llt;
  if (recon_ == ReconMode::sh_interp) {
    rec_order = recon_order_for(dirs.size());
    rec_basis = sh_basis(rec_order, dirs);
    rec_full = sh_basis(rec_order, full_dirs_);
    Eigen::MatrixXd normal = rec_basis.transpose() * rec_basis;
    normal.diagonal() += sh_.lambda * laplace_beltrami_weights(rec_order).cwiseAbs2();
    rec_llt.compute(normal);
    if (rec_llt.info() != Eigen::Success || rec_llt.rcond() < 1e-12) {
      throw Error("sh-interp reconstruction is rank deficient; raise lambda or lower the order");
    }
    rec_op = rec_full * rec_llt.solve(rec_basis.transpose());  // N x n
  }

  const std::size_t rows = static_cast<std::size_t>(x.rows());
  RowMatrix pre(x.rows(), n), xt(x.rows(), n), resid(x.rows(), big_n);
  const std::size_t chunks = chunk_count(rows, kRowChunk);
  std::vector<ChunkPartial> partial(chunks);

  parallel_chunks(rows, kRowChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    const auto b = static_cast<Eigen::Index>(begin);
    const auto len = static_cast<Eigen::Index>(end - begin);
    pre.middleRows(b, len).noalias() = coeffs.middleRows(b, len) * basis.transpose();
    xt.middleRows(b, len) = clamp_ ? RowMatrix(pre.middleRows(b, len).cwiseMax(0.0)) : RowMatrix(pre.middleRows(b, len));
    RowMatrix xhat;
    switch (recon_) {
      case ReconMode::identity:
        xhat = xt.middleRows(b, len);
        break;
      case ReconMode::sh_interp:
        xhat = xt.middleRows(b, len) * rec_op.transpose();
        break;
      case ReconMode::linear:
        xhat = xt.middleRows(b, len) * params.weights.transpose();
        xhat.rowwise() += params.bias.transpose();
        break;
    }
    resid.middleRows(b, len) = xhat - x.middleRows(b, len);
    partial[c].ssq = resid.middleRows(b, len).squaredNorm();
  });

  double ssq = 0.0;
  for (const auto& p : partial) ssq += p.ssq;

  LossGradients out;
  const double count = static_cast<double>(x.rows()) * static_cast<double>(big_n);
  out.loss = loss_ == LossKind::l2 ? std::sqrt(ssq) : (count > 0 ? ssq / count : 0.0);
  out.d_theta = Eigen::VectorXd::Zero(n);
  out.d_phi = Eigen::VectorXd::Zero(n);
  out.d_psi = Eigen::VectorXd::Zero(recon_ == ReconMode::linear ? params.parameter_count() : 0);
  if (!with_gradients || rows == 0) return out;

  double scale = 0.0;
  if (loss_ == LossKind::l2) {
    // The un-squared norm is not differentiable at zero residual.
    if (std::sqrt(ssq) < 1e-12) return out;
    scale = 1.0 / std::sqrt(ssq);
  } else {
    scale = 2.0 / count;
  }

  parallel_chunks(rows, kRowChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    const auto b = static_cast<Eigen::Index>(begin);
    const auto len = static_cast<Eigen::Index>(end - begin);
    const RowMatrix g = scale * resid.middleRows(b, len);  // dloss / dxhat
    RowMatrix d_xt;
    ChunkPartial& p = partial[c];
    switch (recon_) {
      case ReconMode::identity:
        d_xt = g;
        break;
      case ReconMode::sh_interp:
        d_xt = g * rec_op;
        p.d_op = g.transpose() * xt.middleRows(b, len);
        break;
      case ReconMode::linear:
        d_xt = g * params.weights;
        p.d_op = g.transpose() * xt.middleRows(b, len);
        p.d_bias = g.colwise().sum().transpose();
        break;
    }
    if (clamp_) d_xt = (pre.middleRows(b, len).array() >= 0.0).select(d_xt, 0.0);
    p.d_basis = d_xt.transpose() * coeffs.middleRows(b, len);
  });

  Eigen::MatrixXd d_basis = Eigen::MatrixXd::Zero(n, basis.cols());
  Eigen::MatrixXd d_op = Eigen::MatrixXd::Zero(big_n, n);
  Eigen::VectorXd d_bias = Eigen::VectorXd::Zero(big_n);
  for (const auto& p : partial) {
    d_basis += p.d_basis;
    if (p.d_op.size() > 0) d_op += p.d_op;
    if (p.d_bias.size() > 0) d_bias += p.d_bias;
  }

  const ShBasisDerivatives dbasis = sh_basis_derivatives(sub_order_, dirs);
  out.d_theta = (d_basis.array() * dbasis.d_theta.array()).rowwise().sum();
  out.d_phi = (d_basis.array() * dbasis.d_phi.array()).rowwise().sum();

  if (recon_ == ReconMode::linear) {
    out.d_psi.head(d_op.size()) = Eigen::Map<const Eigen::VectorXd>(d_op.data(), d_op.size());
    out.d_psi.tail(d_bias.size()) = d_bias;
  } else if (recon_ == ReconMode::sh_interp) {
    // dQ = B_f A^{-1} dB^T - B_f A^{-1} (dB^T B + B^T dB) A^{-1} B^T, so with
    // H = A^{-1} B_f^T dQ and K = H B A^{-1}:  dloss/dB = H^T - B (K + K^T).
    const Eigen::MatrixXd h = rec_llt.solve(rec_full.transpose() * d_op);  // R' x n
    const Eigen::MatrixXd k = rec_llt.solve((h * rec_basis).transpose()).transpose();
    const Eigen::MatrixXd d_rec = h.transpose() - rec_basis * (k + k.transpose());
    const ShBasisDerivatives drec = sh_basis_derivatives(rec_order, dirs);
    out.d_theta += (d_rec.array() * drec.d_theta.array()).rowwise().sum().matrix();
    out.d_phi += (d_rec.array() * drec.d_phi.array()).rowwise().sum().matrix();
  }
  return out;
}

LossGradients loss_gradients(const DwiVolume& x, const DirectionSet& dirs, const ReconstructionParams& params,
                             const ShSettings& sh, LossKind loss) {
  const JointModel model(x.dirs, params.mode, sh, loss);
  const Mask mask = brain_mask(x);
  std::vector<std::size_t> voxels;
  for (std::size_t v = 0; v < mask.size(); ++v)
    if (mask[v]) voxels.push_back(v);
  const RowMatrix rows = gather_rows(x.data, voxels);
  return model.evaluate(rows, RowMatrix(), dirs, params, true);
}

AdamState::AdamState(const ParamGroups& shapes, double lr_dirs, double lr_recon) {
  theta = {lr_dirs, Eigen::VectorXd::Zero(shapes.theta.size()), Eigen::VectorXd::Zero(shapes.theta.size())};
  phi = {lr_dirs, Eigen::VectorXd::Zero(shapes.phi.size()), Eigen::VectorXd::Zero(shapes.phi.size())};
  psi = {lr_recon, Eigen::VectorXd::Zero(shapes.psi.size()), Eigen::VectorXd::Zero(shapes.psi.size())};
}

void adam_step(AdamState& state, ParamGroups& params, const ParamGroups& grads) {
  ++state.t;
  const AdamHyper& h = state.hyper;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));
  auto update = [&](Eigen::VectorXd& p, const Eigen::VectorXd& g, AdamMoments& mom) {
    if (p.size() == 0) return;
    if (g.size() != p.size() || mom.m.size() != p.size() || mom.v.size() != p.size()) {
      throw Error("adam_step: parameter, gradient and moment shapes differ");
    }
    mom.m = h.beta1 * mom.m + (1.0 - h.beta1) * g;
    mom.v = h.beta2 * mom.v + (1.0 - h.beta2) * g.cwiseAbs2();
    p.array() -= mom.lr * (mom.m.array() / c1) / ((mom.v.array() / c2).sqrt() + h.epsilon);
  };
  update(params.theta, grads.theta, state.theta);
  update(params.phi, grads.phi, state.phi);
  update(params.psi, grads.psi, state.psi);
}

void TrainConfig::validate() const {
  if (!(af >= 1.0)) throw Error("acceleration factor must be >= 1");
  if (!(lr_recon > 0.0) || !(lr_dirs > 0.0)) throw Error("learning rates must be positive");
  if (epochs < 1) throw Error("epochs must be >= 1");
  if (patience < 1) throw Error("patience must be >= 1");
  if (!(sh.lambda >= 0.0)) throw Error("SH regularization must be >= 0");
}

std::size_t acquired_count(std::size_t full, double af) {
  const auto n = static_cast<std::size_t>(std::llround(static_cast<double>(full) / af));
  return std::max<std::size_t>(n, 1);
}

double mean_slice_loss(const JointModel& model, const std::vector<DwiVolume>& volumes, const DirectionSet& dirs,
                       const ReconstructionParams& params) {
  struct SliceRef {
    std::size_t volume;
    std::vector<std::size_t> voxels;
  };
  std::vector<SliceRef> slices;
  for (std::size_t i = 0; i < volumes.size(); ++i) {
    const Mask mask = brain_mask(volumes[i]);
    for (int z = 0; z < volumes[i].dims.z; ++z) {
      auto voxels = slice_voxels(volumes[i].dims, mask, z);
      if (!voxels.empty()) slices.push_back({i, std::move(voxels)});
    }
  }
  if (slices.empty()) return 0.0;
  std::vector<double> losses(slices.size());
  parallel_chunks(slices.size(), 1, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) {
      const RowMatrix x = gather_rows(volumes[slices[s].volume].data, slices[s].voxels);
      losses[s] = model.evaluate(x, RowMatrix(), dirs, params, false).loss;
    }
  });
  double total = 0.0;
  for (double l : losses) total += l;
  return total / static_cast<double>(losses.size());
}

TrainResult train_joint(const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.train.empty()) throw Error("train_joint: empty training set");
  const DirectionSet& full = data.train.front().dirs;
  const double b_value = data.train.front().b_value;
  for (const auto* set : {&data.train, &data.validation}) {
    for (const auto& vol : *set) {
      if (!(vol.dirs == full) || vol.b_value != b_value) {
        throw Error("train_joint: all volumes must share directions and b-value");
      }
      vol.validate();
    }
  }
  const std::size_t big_n = full.size();
  const std::size_t n = acquired_count(big_n, cfg.af);
  const JointModel model(full, cfg.recon, cfg.sh, cfg.loss);

  TrainResult result;
  if (cfg.mode == DirectionMode::learned) {
    result.initial_dirs = random_hemisphere(n, cfg.seed);
  } else if (cfg.fixed_dirs) {
    if (cfg.fixed_dirs->size() != n) throw Error("fixed directions do not match round(N / af)");
    result.initial_dirs = *cfg.fixed_dirs;
  } else {
    DesignConfig design;
    design.n = static_cast<int>(n);
    design.seed = cfg.seed;
    result.initial_dirs = electrostatic_design(design);
  }
  DirectionSet dirs = result.initial_dirs;
  ReconstructionParams params = model.initial_params(dirs);

  struct TrainSlice {
    RowMatrix x;
    RowMatrix coeffs;
  };
  std::vector<TrainSlice> slices;
  for (const auto& vol : data.train) {
    const Mask mask = brain_mask(vol);
    for (int z = 0; z < vol.dims.z; ++z) {
      const auto voxels = slice_voxels(vol.dims, mask, z);
      if (voxels.empty()) continue;
      TrainSlice s;
      s.x = gather_rows(vol.data, voxels);
      s.coeffs = model.coefficients(s.x);
      slices.push_back(std::move(s));
    }
  }
  if (slices.empty()) throw Error("train_joint: training volumes have empty brain masks");

  const bool learn_dirs = cfg.mode == DirectionMode::learned;
  const bool learn_psi = cfg.recon == ReconMode::linear;
  ParamGroups groups;
  if (learn_dirs) {
    groups.theta.resize(static_cast<Eigen::Index>(n));
    groups.phi.resize(static_cast<Eigen::Index>(n));
  }
  if (learn_psi) groups.psi = params.flatten();
  AdamState adam(groups, cfg.lr_dirs, cfg.lr_recon);

  const std::vector<DwiVolume>& validation = data.validation.empty() ? data.train : data.validation;
  double best_val = std::numeric_limits<double>::infinity();
  double best_checkpoint = best_val;
  int stale = 0;
  result.dirs = dirs;
  result.params = params;
  std::vector<std::size_t> order(slices.size());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    SplitMix64 rng(counter_hash(cfg.seed, 0x5348554646ull, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.next() % i]);

    double epoch_loss = 0.0;
    for (std::size_t idx : order) {
      const LossGradients g = model.evaluate(slices[idx].x, slices[idx].coeffs, dirs, params, true);
      epoch_loss += g.loss;
      ParamGroups grads;
      if (learn_dirs) {
        for (std::size_t i = 0; i < n; ++i) {
          groups.theta(static_cast<Eigen::Index>(i)) = dirs[i].theta;
          groups.phi(static_cast<Eigen::Index>(i)) = dirs[i].phi;
        }
        grads.theta = g.d_theta;
        grads.phi = g.d_phi;
      }
      if (learn_psi) grads.psi = g.d_psi;
      adam_step(adam, groups, grads);
      if (learn_dirs) {
        for (std::size_t i = 0; i < n; ++i) {
          dirs[i] = wrap_angles(groups.theta(static_cast<Eigen::Index>(i)), groups.phi(static_cast<Eigen::Index>(i)));
        }
      }
      if (learn_psi) params.unflatten(groups.psi);
      ++result.steps;
    }
    result.train_loss.push_back(epoch_loss / static_cast<double>(slices.size()));
    const double val = mean_slice_loss(model, validation, dirs, params);
    result.validation_loss.push_back(val);
    result.dir_history.push_back(dirs);

    if (val < best_checkpoint) {
      best_checkpoint = val;
      result.dirs = dirs;
      result.params = params;
      result.best_epoch = epoch;
    }
    if (val < best_val - cfg.min_improvement) {
      best_val = val;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace qspace
