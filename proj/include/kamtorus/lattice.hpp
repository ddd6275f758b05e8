#pragma once

#include <Eigen/Dense>
#include <memory>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

#include "kamtorus/core.hpp"

namespace kt {

// Dense square integer matrix, row-major. All products are overflow-checked.
class IntMatrix {
 public:
  IntMatrix() = default;
  explicit IntMatrix(int d) : d_(d), a_(static_cast<size_t>(d) * d, 0) {}
  static IntMatrix identity(int d);
  static IntMatrix from_rows(const std::vector<std::vector<i64>>& rows);

  int dim() const { return d_; }
  i64& operator()(int i, int j) { return a_[static_cast<size_t>(i) * d_ + j]; }
  i64 operator()(int i, int j) const { return a_[static_cast<size_t>(i) * d_ + j]; }
  bool operator==(const IntMatrix& o) const { return d_ == o.d_ && a_ == o.a_; }

  IntMatrix operator*(const IntMatrix& o) const;
  IVec operator*(const IVec& v) const;
  IntMatrix transpose() const;
  Eigen::MatrixXd to_double() const;
  std::vector<std::vector<i64>> rows() const;

 private:
  int d_ = 0;
  std::vector<i64> a_;
};

i64 checked_mul(i64 a, i64 b);
i64 checked_add(i64 a, i64 b);

// Exact determinant (fraction-free elimination in arbitrary precision).
i64 determinant(const IntMatrix& m);
// Coefficients of det(x I - M), lowest degree first; leading coefficient 1.
IVec characteristic_polynomial(const IntMatrix& m);

// Eigen-data of a real matrix grouped by modulus relative to 1.
class SpectralSplitting {
 public:
  struct Mode {
    cplx value;
    Eigen::VectorXcd vector;
  };
  explicit SpectralSplitting(const Eigen::MatrixXd& m, double tol = 1e-12);

  const std::vector<Mode>& expanding() const { return exp_; }
  const std::vector<Mode>& contracting() const { return con_; }
  const std::vector<Mode>& neutral() const { return neu_; }
  std::optional<double> rho() const { return rho_; }

  // Eigen-coordinates of x (c = U^{-1} x) and the class of each coordinate:
  // +1 expanding, -1 contracting, 0 neutral.
  Eigen::VectorXcd coords(const Eigen::VectorXd& x) const { return uinv_ * x.cast<cplx>(); }
  const std::vector<int>& classes() const { return cls_; }
  const Eigen::VectorXcd& eigenvalues() const { return vals_; }
  const Eigen::MatrixXcd& basis() const { return u_; }
  const Eigen::MatrixXcd& basis_inverse() const { return uinv_; }

  // Real projections onto the three invariant subspaces.
  Eigen::VectorXd project(const Eigen::VectorXd& x, int cls) const;
  double exp_norm(const Eigen::VectorXd& x) const { return project(x, 1).norm(); }
  double con_norm(const Eigen::VectorXd& x) const { return project(x, -1).norm(); }
  // max of the Euclidean norms of the three projections
  double norm(const Eigen::VectorXd& x) const;
  // sup over the box |x_i| <= 1 of |c_i(x)|, per coordinate
  const std::vector<double>& coord_box_bounds() const { return cbound_; }
  double projection_residual() const { return proj_residual_; }

 private:
  std::vector<Mode> exp_, con_, neu_;
  std::optional<double> rho_;
  Eigen::VectorXcd vals_;
  Eigen::MatrixXcd u_, uinv_;
  std::vector<int> cls_;
  std::vector<double> cbound_;
  double proj_residual_ = 0;
};

class TorusAutomorphism {
 public:
  TorusAutomorphism() = default;
  explicit TorusAutomorphism(const IntMatrix& m);
  static TorusAutomorphism from_rows(const std::vector<std::vector<i64>>& rows) {
    return TorusAutomorphism(IntMatrix::from_rows(rows));
  }
  static TorusAutomorphism identity(int d) { return TorusAutomorphism(IntMatrix::identity(d)); }

  int dim() const { return d_->m.dim(); }
  const IntMatrix& matrix() const { return d_->m; }
  int det() const { return d_->det; }
  // A* = (A^t)^{-1}, the action on Fourier indices, and its inverse A^t.
  const IntMatrix& dual() const { return d_->dual; }
  const IntMatrix& dual_inverse() const { return d_->dual_inv; }

  TorusAutomorphism inverse() const;
  TorusAutomorphism power(int k) const;
  TorusAutomorphism operator*(const TorusAutomorphism& o) const;
  // block diag(A, Id_{d2})
  TorusAutomorphism embed_with_identity(int d2) const;

  // Built on first use; throws JordanCaseError for non-diagonalizable matrices.
  const SpectralSplitting& splitting() const;
  // splitting of A*, used for every norm on Fourier indices
  const SpectralSplitting& dual_splitting() const;
  double eigen_norm(const IVec& n) const;

  // Calibrated constant of the Katznelson-type bound (computed once, lazily).
  double katznelson_constant() const;
  int katznelson_sweep_radius() const;

 private:
  struct Data {
    IntMatrix m, dual, dual_inv;
    int det = 1;
    mutable std::once_flag split_once;
    mutable std::unique_ptr<SpectralSplitting> split, dual_split;
    mutable std::once_flag kz_once;
    mutable double kz_c = 0;
  };
  std::shared_ptr<const Data> d_;
};

bool check_commuting(const TorusAutomorphism& a, const TorusAutomorphism& b);
bool is_ergodic(const TorusAutomorphism& a);

struct HrReport {
  bool pass = true;
  int K = 0;
  std::optional<std::pair<int, int>> witness;  // first non-ergodic (k, l)
};
HrReport check_hr_report(const TorusAutomorphism& a, const TorusAutomorphism& b, int K);
inline bool check_hr(const TorusAutomorphism& a, const TorusAutomorphism& b, int K) {
  return check_hr_report(a, b, K).pass;
}

IVec dual_orbit(const TorusAutomorphism& a, const IVec& n, int k);

struct Pivot {
  IVec point;
  int shift = 0;
};
// Canonical orbit representative: the last orbit point (in the direction of
// A*) whose contracting projection still dominates the expanding one.
Pivot find_pivot(const TorusAutomorphism& a, const IVec& n);
int pivot_search_cap(const TorusAutomorphism& a, const IVec& n);

struct KatznelsonBound {
  double exp_norm = 0;
  double floor = 0;
  double C = 0;
};
KatznelsonBound katznelson_bound(const TorusAutomorphism& a, const IVec& n);

struct OrbitPoint {
  int shift = 0;
  IVec n;
};
// All orbit points (A*)^k n with max-norm <= box, ordered by k.
std::vector<OrbitPoint> orbit_in_box(const TorusAutomorphism& a, const IVec& n, i64 box);
// Range of shifts k for which (A*)^k n can lie in the max-norm box.
std::pair<int, int> orbit_shift_range(const TorusAutomorphism& a, const IVec& n, i64 box);

struct EigenPair {
  cplx lambda;
  cplx mu;
  Eigen::VectorXcd vector;
};
struct SimultaneousBasis {
  std::vector<EigenPair> pairs;
  Eigen::MatrixXcd P;     // columns are the common eigenvectors
  Eigen::MatrixXcd Pinv;
  double condition = 1;
};
SimultaneousBasis simultaneous_eigenbasis(const TorusAutomorphism& a, const TorusAutomorphism& b);

i64 max_abs(const IVec& n);
Eigen::VectorXd to_real(const IVec& n);

}  // namespace kt
