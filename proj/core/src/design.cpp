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

#include "qspace/design.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "qspace/error.hpp"
#include "qspace/random.hpp"

namespace qspace {

namespace {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3>;

double pair_energy(const Points& g) {
  double energy = 0.0;
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < g.rows(); ++j) {
      const double minus = (g.row(i) - g.row(j)).norm();
      const double plus = (g.row(i) + g.row(j)).norm();
      if (!(minus > 1e-12) || !(plus > 1e-12)) {
        throw Error("coulomb_energy: directions " + std::to_string(i) + " and " +
                    std::to_string(j) + " coincide up to sign");
      }
      energy += 1.0 / minus + 1.0 / plus;
    }
  }
  return energy;
}

DirectionSet step_along(const DirectionSet& dirs, const AngleGradient& grad, double step) {
  DirectionSet out = dirs;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out[i] = wrap_angles(dirs[i].theta - step * grad.d_theta(k), dirs[i].phi - step * grad.d_phi(k));
  }
  return out;
}

}  // namespace

void DesignConfig::validate() const {
  if (n < 1) throw Error("design: n must be >= 1");
  if (max_iters < 1) throw Error("design: max_iters must be >= 1");
  if (!(step_init > 0.0)) throw Error("design: step_init must be > 0");
  if (!(tol >= 0.0)) throw Error("design: tol must be >= 0");
}

double coulomb_energy(const DirectionSet& dirs) { return pair_energy(dirs.cartesian()); }

AngleGradient coulomb_gradient(const DirectionSet& dirs) {
  const Points g = dirs.cartesian();
  const Eigen::Index n = g.rows();
  Points dE = Points::Zero(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Eigen::RowVector3d minus = g.row(i) - g.row(j);
      const Eigen::RowVector3d plus = g.row(i) + g.row(j);
      const double dm = minus.norm();
      const double dp = plus.norm();
      if (!(dm > 1e-12) || !(dp > 1e-12)) {
        throw Error("coulomb_gradient: directions " + std::to_string(i) + " and " +
                    std::to_string(j) + " coincide up to sign");
      }
      const Eigen::RowVector3d fm = minus / (dm * dm * dm);
      const Eigen::RowVector3d fp = plus / (dp * dp * dp);
      dE.row(i) -= fm + fp;
      dE.row(j) += fm - fp;
    }
  }
  AngleGradient out{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& d = dirs[static_cast<std::size_t>(i)];
    const double st = std::sin(d.theta), ct = std::cos(d.theta);
    const double sp = std::sin(d.phi), cp = std::cos(d.phi);
    const Eigen::RowVector3d dtheta(ct * cp, ct * sp, -st);
    const Eigen::RowVector3d dphi(-st * sp, st * cp, 0.0);
    out.d_theta(i) = dE.row(i).dot(dtheta);
    out.d_phi(i) = dE.row(i).dot(dphi);
  }
  return out;
}

DirectionSet random_hemisphere(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<Direction> dirs;
  dirs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = rng.uniform();
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    dirs.push_back(wrap_angles(std::acos(z), phi));
  }
  return DirectionSet(std::move(dirs));
}

DesignTrace electrostatic_design_trace(const DesignConfig& cfg) {
  cfg.validate();
  DesignTrace trace;
  DirectionSet current = random_hemisphere(static_cast<std::size_t>(cfg.n), cfg.seed);
  if (cfg.n == 1) {
    trace.dirs = canonical_sorted(current);
    trace.energies.push_back(0.0);
    return trace;
  }
  // Random draws can land arbitrarily close together; nudge until separated.
  for (std::uint64_t attempt = 1; current.min_separation() < 1e-6; ++attempt) {
    current = random_hemisphere(static_cast<std::size_t>(cfg.n), cfg.seed + attempt * 0x9E3779B97F4A7C15ull);
  }

  double energy = coulomb_energy(current);
  trace.energies.push_back(energy);
  double step = cfg.step_init;
  int quiet = 0;
  int iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    const AngleGradient grad = coulomb_gradient(current);
    bool accepted = false;
    double trial_step = step;
    for (int h = 0; h <= kDesignMaxHalvings; ++h, trial_step *= 0.5) {
      const DirectionSet candidate = step_along(current, grad, trial_step);
      if (candidate.min_separation() < 1e-9) continue;
      const double e = coulomb_energy(candidate);
      if (e < energy) {
        const double rel = (energy - e) / energy;
        current = candidate;
        energy = e;
        accepted = true;
        quiet = rel < cfg.tol ? quiet + 1 : 0;
        break;
      }
    }
    if (!accepted) break;
    trace.energies.push_back(energy);
    // Let the step recover after a run of halvings.
    step = std::min(cfg.step_init, trial_step * 2.0);
    if (quiet >= kDesignPatience) break;
  }
  trace.iterations = iter;
  trace.dirs = canonical_sorted(current);
  return trace;
}

DirectionSet electrostatic_design(const DesignConfig& cfg) { return electrostatic_design_trace(cfg).dirs; }

}  // namespace qspace
