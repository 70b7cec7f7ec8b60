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

#ifndef QSPACE_SPHERE_HPP
#define QSPACE_SPHERE_HPP

#include <cstddef>
#include <initializer_list>
#include <vector>

#include <Eigen/Dense>

namespace qspace {

using Vec3 = Eigen::Vector3d;

// A diffusion-encoding direction in spherical coordinates: theta is the
// elevation from +z in [0, pi], phi the azimuth in [0, 2*pi).
struct Direction {
  double theta = 0.0;
  double phi = 0.0;

  friend bool operator==(const Direction&, const Direction&) = default;
};

// Ordered list of directions. Row i of every basis matrix built from a
// DirectionSet corresponds to element i.
class DirectionSet {
 public:
  DirectionSet() = default;
  explicit DirectionSet(std::vector<Direction> dirs) : dirs_(std::move(dirs)) {}
  DirectionSet(std::initializer_list<Direction> dirs) : dirs_(dirs) {}

  // Builds a set from Cartesian unit vectors (one per row).
  static DirectionSet from_cartesian(const Eigen::Matrix<double, Eigen::Dynamic, 3>& vecs);

  std::size_t size() const { return dirs_.size(); }
  bool empty() const { return dirs_.empty(); }
  const Direction& operator[](std::size_t i) const { return dirs_[i]; }
  Direction& operator[](std::size_t i) { return dirs_[i]; }
  auto begin() const { return dirs_.begin(); }
  auto end() const { return dirs_.end(); }
  void push_back(const Direction& d) { dirs_.push_back(d); }
  const std::vector<Direction>& values() const { return dirs_; }

  // n x 3 matrix of unit vectors.
  Eigen::Matrix<double, Eigen::Dynamic, 3> cartesian() const;

  // Smallest antipodal angular distance over all pairs; +inf for n < 2.
  double min_separation() const;

  friend bool operator==(const DirectionSet&, const DirectionSet&) = default;

 private:
  std::vector<Direction> dirs_;
};

Vec3 sph_to_cart(const Direction& d);

// Accepts vectors with |norm - 1| <= 1e-3 (renormalized); throws Error
// otherwise. At the poles phi is reported as 0.
Direction cart_to_sph(const Vec3& v);

// Picks the representative of {v, -v} with z > 0, or z == 0 and x > 0, or
// z == x == 0 and y > 0.
Vec3 canonicalize_hemisphere(const Vec3& v);

// arccos(|u.v|), in [0, pi/2].
double angular_distance_antipodal(const Vec3& u, const Vec3& v);

// Brings (theta, phi) back into the canonical ranges: theta is reflected at
// 0 and pi (adding pi to phi on each reflection) and phi is wrapped mod 2*pi.
Direction wrap_angles(double theta, double phi);

// Canonicalizes each direction to the upper hemisphere and sorts by
// (theta, phi).
DirectionSet canonical_sorted(const DirectionSet& dirs);

// ---------------------------------------------------------------------------
// Real symmetric spherical harmonics.
//
// Only even degrees l = 0, 2, ..., L are used. Column j of a basis matrix
// holds degree l and order m with j = l(l+1)/2 + m, m in [-l, l]:
//   m < 0:  sqrt(2) * N_l^|m| P_l^|m|(cos theta) sin(|m| phi)
//   m = 0:  N_l^0 P_l^0(cos theta)
//   m > 0:  sqrt(2) * N_l^m P_l^m(cos theta) cos(m phi)
// with N_l^m = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) and P_l^m including the
// Condon-Shortley phase. The columns are orthonormal on the sphere.

// Number of coefficients (L+1)(L+2)/2; throws Error for odd or negative L.
int sh_count(int order);
// Order L for a coefficient count, or throws Error if count is not valid.
int sh_order_for_count(int count);
int sh_index(int l, int m);
// Degree l of each column, length sh_count(order).
Eigen::VectorXi sh_degrees(int order);
Eigen::VectorXi sh_orders(int order);

// Largest even L with sh_count(L) <= n, capped at max_order (default 8).
int default_sh_order(std::size_t n, int max_order = 8);

// Laplace-Beltrami regularization weights l(l+1) per column.
Eigen::VectorXd laplace_beltrami_weights(int order);

// Default regularization weight for SH fits.
inline constexpr double kDefaultShLambda = 0.006;

struct ShExpansion {
  int order = 0;
  Eigen::VectorXd coeffs;

  // Throws Error when order is odd or coeffs has the wrong length.
  void validate() const;
};

struct ShBasisDerivatives {
  Eigen::MatrixXd d_theta;
  Eigen::MatrixXd d_phi;
};

Eigen::MatrixXd sh_basis(int order, const DirectionSet& dirs);
Eigen::MatrixXd sh_basis(int order, const Eigen::Matrix<double, Eigen::Dynamic, 3>& vecs);
ShBasisDerivatives sh_basis_derivatives(int order, const DirectionSet& dirs);

// Associated Legendre values P_l^m(cos theta) (Condon-Shortley phase) for
// 0 <= m <= l+1 <= order+1, laid out as table(l, m). Exposed for tests.
Eigen::MatrixXd associated_legendre_table(int order, double theta);

// R x n matrix F with coeffs = F * signals solving
//   argmin |B c - s|^2 + lambda |diag(l(l+1)) c|^2.
// Throws Error when the normal equations are numerically singular.
Eigen::MatrixXd sh_fit_matrix(const Eigen::MatrixXd& basis, double lambda);

ShExpansion fit_sh(const Eigen::VectorXd& signals, const Eigen::MatrixXd& basis,
                   double lambda);
Eigen::VectorXd eval_sh(const ShExpansion& expansion, const DirectionSet& dirs);
Eigen::VectorXd eval_sh(const ShExpansion& expansion,
                        const Eigen::Matrix<double, Eigen::Dynamic, 3>& vecs);

}  // namespace qspace

#endif  // QSPACE_SPHERE_HPP
