#pragma once

#include <Eigen/Dense>
#include <vector>

#include "kamtorus/core.hpp"
#include "kamtorus/fft.hpp"
#include "kamtorus/lattice.hpp"

namespace kt {

// Coefficients c_{n,m} of sum c_{n,m} e^{2 pi i (n.x + m.theta)}, stored on the
// cube |n_i|, |m_j| <= box (row-major, last axis fastest).
class FourierField {
 public:
  FourierField() = default;
  FourierField(int d1, int d2, int box);
  static FourierField constant(int d1, int d2, cplx c);
  // single coefficient at idx; box defaults to the max-norm of idx
  static FourierField mode(int d1, int d2, const std::vector<int>& idx, cplx c, int box = -1);

  int d1() const { return d1_; }
  int d2() const { return d2_; }
  int dim() const { return d1_ + d2_; }
  int box() const { return box_; }
  int extent() const { return 2 * box_ + 1; }
  size_t size() const { return c_.size(); }

  size_t offset(const int* idx) const;
  void index(size_t off, int* idx) const;
  bool in_box(const int* idx) const;
  cplx get(const std::vector<int>& idx) const;
  void set(const std::vector<int>& idx, cplx c);
  cplx& operator[](size_t off) { return c_[off]; }
  const cplx& operator[](size_t off) const { return c_[off]; }
  std::vector<cplx>& coeffs() { return c_; }
  const std::vector<cplx>& coeffs() const { return c_; }

  // Re-box: pads with zeros or drops everything outside the new cube.
  FourierField with_box(int b) const;
  // smallest radius containing every coefficient with modulus > tol
  int support_radius(double tol = 0) const;
  // max |c_{-k} - conj(c_k)|
  double hermitian_defect() const;
  FourierField conj_reflect() const;
  // Hermitian projection (v + conj_reflect(v)) / 2: the real part of the field
  FourierField real_part() const;
  cplx average() const;
  double max_abs() const;
  double l1() const;
  bool is_zero() const;

  FourierField& operator+=(const FourierField& o);
  FourierField& operator-=(const FourierField& o);
  FourierField& operator*=(cplx s);

 private:
  int d1_ = 0, d2_ = 0, box_ = 0;
  std::vector<cplx> c_;
};

FourierField operator+(FourierField a, const FourierField& b);
FourierField operator-(FourierField a, const FourierField& b);
FourierField operator*(cplx s, FourierField a);
void check_same_dims(const FourierField& a, const FourierField& b);

// Visit every box index: f(offset, idx).
template <class F>
void for_each_index(const FourierField& v, F&& f) {
  const int d = v.dim();
  std::vector<int> idx(d, -v.box());
  for (size_t off = 0; off < v.size(); ++off) {
    f(off, idx.data());
    for (int a = d - 1; a >= 0; --a) {
      if (idx[a] < v.box()) {
        ++idx[a];
        break;
      }
      idx[a] = -v.box();
    }
  }
}

// Norm of (n, m): eigenprojection norm of n under A*, max with |m|_inf.
double lattice_norm(const TorusAutomorphism& a, const int* idx, int d1, int d2);

// T_N keeps indices with lattice norm <= N; N == box keeps the whole cube.
FourierField truncate(const FourierField& v, double N, const TorusAutomorphism& a);
FourierField residue(const FourierField& v, double N, const TorusAutomorphism& a);

// h o f for f(x, theta) = (A x, theta + shift): c_{n,m} = h_{A* n, m} e^{2 pi i <m, shift>}.
// out_box < 0 sizes the result to its support; otherwise escape throws.
FourierField compose_affine(const FourierField& h, const TorusAutomorphism& a,
                            const std::vector<double>& shift, int out_box = -1);

struct CGrid {
  std::vector<int> shape;
  CVec v;
  size_t size() const { return v.size(); }
};
struct RGrid {
  std::vector<int> shape;
  std::vector<double> v;
  size_t size() const { return v.size(); }
};

int default_grid(int box);
CGrid to_grid(const FourierField& v, const std::vector<int>& shape);
CGrid to_grid(const FourierField& v, int G);
// Exact values at the points j / shape for any box: modes are folded modulo the grid.
CGrid sample_on_grid(const FourierField& v, const std::vector<int>& shape);
RGrid to_real_grid(const FourierField& v, int G);
FourierField from_grid(const CGrid& g, int d1, int d2, int box);
FourierField from_real_grid(const RGrid& g, int d1, int d2, int box);
// grid coordinate of axis value j: j / G
std::vector<std::vector<double>> grid_points(const std::vector<int>& shape);
double grid_sup(const RGrid& g);

std::vector<std::vector<int>> multi_indices(int dim, int r);  // max-coordinate <= r
FourierField derivative(const FourierField& v, const std::vector<int>& iota);
// max over iota (max-coordinate <= r) of the grid sup of the derivative
double cr_norm(const FourierField& v, int r, int G = 0);
// max over iota of sum |c_k| prod |2 pi k_a|^{iota_a}; bounds cr_norm from above
double wiener_norm(const FourierField& v, int r);
cplx evaluate_at(const FourierField& v, const double* x);
// pointwise product through the dealiased grid
FourierField multiply(const FourierField& a, const FourierField& b, int out_box);

// R^d-valued field on T^{d1+d2}.
struct VectorField {
  std::vector<FourierField> comp;
  VectorField() = default;
  explicit VectorField(std::vector<FourierField> c) : comp(std::move(c)) {}
  static VectorField zeros(int count, int d1, int d2, int box);
  int size() const { return static_cast<int>(comp.size()); }
  int box() const;
  VectorField with_box(int b) const;
  VectorField& operator+=(const VectorField& o);
  VectorField& operator-=(const VectorField& o);
  VectorField& operator*=(cplx s);
};
VectorField operator+(VectorField a, const VectorField& b);
VectorField operator-(VectorField a, const VectorField& b);
VectorField operator*(cplx s, VectorField a);
double max_cr_norm(const VectorField& v, int r, int G = 0);
double max_wiener_norm(const VectorField& v, int r);

// coords_i = sum_j Pinv(i, j) v_j
VectorField eigen_decompose(const VectorField& v, const Eigen::MatrixXcd& Pinv);
// v_j = Re sum_i P(j, i) coords_i
VectorField eigen_reassemble(const VectorField& coords, const Eigen::MatrixXcd& P);

}  // namespace kt
