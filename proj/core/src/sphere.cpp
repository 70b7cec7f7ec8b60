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

#include "qspace/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qspace/error.hpp"

namespace qspace {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// sqrt((2l+1)/(4 pi) * (l-m)!/(l+m)!)
double sh_normalization(int l, int m) {
  double ratio = 1.0;
  for (int k = l - m + 1; k <= l + m; ++k) ratio /= k;
  return std::sqrt((2.0 * l + 1.0) / (4.0 * kPi) * ratio);
}

// Fills one basis row (and optionally its angular derivatives) for a single
// direction. Derivatives in theta use
//   dP_l^m/dtheta = (P_l^{m+1} - (l+m)(l-m+1) P_l^{m-1}) / 2,   m >= 1
//   dP_l^0/dtheta = P_l^1
// which has no 1/sin(theta) factor, so the poles need no special case.
void fill_row(int order, double theta, double phi, Eigen::VectorXd& values,
              Eigen::VectorXd* d_theta, Eigen::VectorXd* d_phi) {
  const Eigen::MatrixXd legendre = associated_legendre_table(order, theta);
  const double root2 = std::numbers::sqrt2;
  for (int l = 0; l <= order; l += 2) {
    for (int m = 0; m <= l; ++m) {
      const double norm = sh_normalization(l, m);
      const double p = legendre(l, m);
      double dp = 0.0;
      if (d_theta != nullptr) {
        dp = m == 0 ? legendre(l, 1)
                    : 0.5 * (legendre(l, m + 1) -
                             static_cast<double>(l + m) * (l - m + 1) * legendre(l, m - 1));
      }
      if (m == 0) {
        const int j = sh_index(l, 0);
        values(j) = norm * p;
        if (d_theta != nullptr) (*d_theta)(j) = norm * dp;
        if (d_phi != nullptr) (*d_phi)(j) = 0.0;
        continue;
      }
      const double c = std::cos(m * phi);
      const double s = std::sin(m * phi);
      const int jp = sh_index(l, m);
      const int jn = sh_index(l, -m);
      values(jp) = root2 * norm * p * c;
      values(jn) = root2 * norm * p * s;
      if (d_theta != nullptr) {
        (*d_theta)(jp) = root2 * norm * dp * c;
        (*d_theta)(jn) = root2 * norm * dp * s;
      }
      if (d_phi != nullptr) {
        (*d_phi)(jp) = -m * root2 * norm * p * s;
        (*d_phi)(jn) = m * root2 * norm * p * c;
      }
    }
  }
}

}  // namespace

DirectionSet DirectionSet::from_cartesian(const Eigen::Matrix<double, Eigen::Dynamic, 3>& vecs) {
  std::vector<Direction> dirs;
  dirs.reserve(static_cast<std::size_t>(vecs.rows()));
  for (Eigen::Index i = 0; i < vecs.rows(); ++i) dirs.push_back(cart_to_sph(vecs.row(i).transpose()));
  return DirectionSet(std::move(dirs));
}

Eigen::Matrix<double, Eigen::Dynamic, 3> DirectionSet::cartesian() const {
  Eigen::Matrix<double, Eigen::Dynamic, 3> out(static_cast<Eigen::Index>(size()), 3);
  for (std::size_t i = 0; i < size(); ++i) out.row(static_cast<Eigen::Index>(i)) = sph_to_cart(dirs_[i]).transpose();
  return out;
}

double DirectionSet::min_separation() const {
  double best = std::numeric_limits<double>::infinity();
  const auto vecs = cartesian();
  for (Eigen::Index i = 0; i < vecs.rows(); ++i)
    for (Eigen::Index j = i + 1; j < vecs.rows(); ++j)
      best = std::min(best, angular_distance_antipodal(vecs.row(i), vecs.row(j)));
  return best;
}

Vec3 sph_to_cart(const Direction& d) {
  const double st = std::sin(d.theta);
  return {st * std::cos(d.phi), st * std::sin(d.phi), std::cos(d.theta)};
}

Direction cart_to_sph(const Vec3& v) {
  const double norm = v.norm();
  if (!(std::abs(norm - 1.0) <= 1e-3)) {
    throw Error("cart_to_sph: vector is not unit length (norm " + std::to_string(norm) + ")");
  }
  const Vec3 u = v / norm;
  const double rho = std::hypot(u.x(), u.y());
  Direction d;
  d.theta = std::atan2(rho, u.z());
  if (rho == 0.0) {
    d.phi = 0.0;
  } else {
    double phi = std::atan2(u.y(), u.x());
    if (phi < 0.0) phi += kTwoPi;
    if (phi >= kTwoPi) phi = 0.0;
    d.phi = phi;
  }
  return d;
}

Vec3 canonicalize_hemisphere(const Vec3& v) {
  if (v.z() > 0.0) return v;
  if (v.z() < 0.0) return -v;
  if (v.x() > 0.0) return v;
  if (v.x() < 0.0) return -v;
  return v.y() >= 0.0 ? v : Vec3(-v);
}

double angular_distance_antipodal(const Vec3& u, const Vec3& v) {
  const double c = std::min(1.0, std::abs(u.dot(v)));
  return std::acos(c);
}

Direction wrap_angles(double theta, double phi) {
  theta = std::fmod(theta, kTwoPi);
  if (theta < 0.0) theta += kTwoPi;
  if (theta > kPi) {
    theta = kTwoPi - theta;
    phi += kPi;
  }
  phi = std::fmod(phi, kTwoPi);
  if (phi < 0.0) phi += kTwoPi;
  if (phi >= kTwoPi) phi = 0.0;
  return {theta, phi};
}

DirectionSet canonical_sorted(const DirectionSet& dirs) {
  std::vector<Direction> out;
  out.reserve(dirs.size());
  for (const auto& d : dirs) {
    const Vec3 v = canonicalize_hemisphere(sph_to_cart(d));
    out.push_back(cart_to_sph(v));
  }
  std::sort(out.begin(), out.end(), [](const Direction& a, const Direction& b) {
    return a.theta != b.theta ? a.theta < b.theta : a.phi < b.phi;
  });
  return DirectionSet(std::move(out));
}

int sh_count(int order) {
  if (order < 0 || order % 2 != 0) {
    throw Error("spherical harmonic order must be even and non-negative, got " + std::to_string(order));
  }
  return (order + 1) * (order + 2) / 2;
}

int sh_order_for_count(int count) {
  for (int order = 0; sh_count(order) <= count; order += 2) {
    if (sh_count(order) == count) return order;
  }
  throw Error("no even spherical harmonic order has " + std::to_string(count) + " coefficients");
}

int sh_index(int l, int m) { return l * (l + 1) / 2 + m; }

Eigen::VectorXi sh_degrees(int order) {
  Eigen::VectorXi out(sh_count(order));
  for (int l = 0; l <= order; l += 2)
    for (int m = -l; m <= l; ++m) out(sh_index(l, m)) = l;
  return out;
}

Eigen::VectorXi sh_orders(int order) {
  Eigen::VectorXi out(sh_count(order));
  for (int l = 0; l <= order; l += 2)
    for (int m = -l; m <= l; ++m) out(sh_index(l, m)) = m;
  return out;
}

int default_sh_order(std::size_t n, int max_order) {
  int order = 0;
  while (order + 2 <= max_order && static_cast<std::size_t>(sh_count(order + 2)) <= n) order += 2;
  return order;
}

Eigen::VectorXd laplace_beltrami_weights(int order) {
  const Eigen::VectorXi l = sh_degrees(order);
  Eigen::VectorXd w(l.size());
  for (Eigen::Index j = 0; j < l.size(); ++j) w(j) = static_cast<double>(l(j)) * (l(j) + 1);
  return w;
}

void ShExpansion::validate() const {
  if (coeffs.size() != sh_count(order)) {
    throw Error("SH expansion of order " + std::to_string(order) + " needs " +
                std::to_string(sh_count(order)) + " coefficients, got " +
                std::to_string(coeffs.size()));
  }
}

Eigen::MatrixXd associated_legendre_table(int order, double theta) {
  const double x = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(order + 1, order + 2);
  p(0, 0) = 1.0;
  for (int m = 0; m <= order; ++m) {
    if (m > 0) p(m, m) = -(2.0 * m - 1.0) * s * p(m - 1, m - 1);
    if (m + 1 <= order) p(m + 1, m) = x * (2.0 * m + 1.0) * p(m, m);
    for (int l = m + 2; l <= order; ++l) {
      p(l, m) = ((2.0 * l - 1.0) * x * p(l - 1, m) - (l + m - 1.0) * p(l - 2, m)) / (l - m);
    }
  }
  return p;
}

Eigen::MatrixXd sh_basis(int order, const DirectionSet& dirs) {
  const int count = sh_count(order);
  Eigen::MatrixXd basis(static_cast<Eigen::Index>(dirs.size()), count);
  Eigen::VectorXd row(count);
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    fill_row(order, dirs[i].theta, dirs[i].phi, row, nullptr, nullptr);
    basis.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return basis;
}

Eigen::MatrixXd sh_basis(int order, const Eigen::Matrix<double, Eigen::Dynamic, 3>& vecs) {
  return sh_basis(order, DirectionSet::from_cartesian(vecs));
}

ShBasisDerivatives sh_basis_derivatives(int order, const DirectionSet& dirs) {
  const int count = sh_count(order);
  const auto n = static_cast<Eigen::Index>(dirs.size());
  ShBasisDerivatives out{Eigen::MatrixXd(n, count), Eigen::MatrixXd(n, count)};
  Eigen::VectorXd row(count), dt(count), dp(count);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& d = dirs[static_cast<std::size_t>(i)];
    fill_row(order, d.theta, d.phi, row, &dt, &dp);
    out.d_theta.row(i) = dt.transpose();
    out.d_phi.row(i) = dp.transpose();
  }
  return out;
}

Eigen::MatrixXd sh_fit_matrix(const Eigen::MatrixXd& basis, double lambda) {
  if (lambda < 0.0) throw Error("SH regularization weight must be >= 0");
  const int order = sh_order_for_count(static_cast<int>(basis.cols()));
  const Eigen::VectorXd lb = laplace_beltrami_weights(order);
  Eigen::MatrixXd normal = basis.transpose() * basis;
  normal.diagonal() += lambda * lb.cwiseAbs2();
  Eigen::LLT<Eigen::MatrixXd> llt(normal);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-12) {
    throw Error("SH fit is rank deficient (" + std::to_string(basis.rows()) + " directions, " +
                std::to_string(basis.cols()) +
                " coefficients); use a positive regularization weight or a lower order");
  }
  return llt.solve(basis.transpose());
}

ShExpansion fit_sh(const Eigen::VectorXd& signals, const Eigen::MatrixXd& basis, double lambda) {
  if (signals.size() != basis.rows()) throw Error("fit_sh: signal length does not match basis rows");
  ShExpansion out;
  out.order = sh_order_for_count(static_cast<int>(basis.cols()));
  out.coeffs = sh_fit_matrix(basis, lambda) * signals;
  return out;
}

Eigen::VectorXd eval_sh(const ShExpansion& expansion, const DirectionSet& dirs) {
  expansion.validate();
  return sh_basis(expansion.order, dirs) * expansion.coeffs;
}

Eigen::VectorXd eval_sh(const ShExpansion& expansion,
                        const Eigen::Matrix<double, Eigen::Dynamic, 3>& vecs) {
  expansion.validate();
  return sh_basis(expansion.order, vecs) * expansion.coeffs;
}

}  // namespace qspace
