#pragma once

#include <vector>

#include "kamtorus/fourier_field.hpp"

namespace kt {

// Evaluates a real band-limited field g at arbitrary points by a Taylor
// expansion around the nearest node of the lattice shift + j / shape. Derivative grids are built by
// FFT on demand and cached; the expansion order is chosen per call from the
// largest node-to-point offset and the coefficient moduli.
class NearGridEvaluator {
 public:
  NearGridEvaluator(const FourierField& g, std::vector<int> shape, std::vector<double> shift = {});

  // pts[a][i] is coordinate a of point i (lifted reals; reduced mod 1 here)
  std::vector<double> evaluate(const std::vector<std::vector<double>>& pts);

  int last_order() const { return last_order_; }
  int cached_grids() const { return static_cast<int>(alphas_.size()); }
  void set_relative_tolerance(double t) { rel_tol_ = t; }
  // remainder target max(relative * l1, absolute)
  void set_absolute_tolerance(double t) { abs_tol_ = t; }
  void set_max_order(int p) { max_order_ = p; }

 private:
  struct Coef {
    cplx c;                 // shifted coefficient c_k e^{2 pi i k.shift}
    std::vector<int> k;
    size_t pos;             // grid position of k mod shape
  };
  int choose_order(const std::vector<double>& rmax) const;
  void ensure_order(int p);

  int d_ = 0;
  std::vector<int> shape_;
  std::vector<double> shift_;
  std::vector<Coef> coefs_;
  double l1_ = 0;
  double rel_tol_ = 1e-17;
  double abs_tol_ = 0;
  int max_order_ = 48;
  int built_order_ = -1;
  int last_order_ = 0;
  std::vector<std::vector<int>> alphas_;   // graded by total degree
  std::vector<int> degree_;
  std::vector<int> parent_, axis_;          // alpha = alphas_[parent] + e_axis
  std::vector<double> inv_;                // 1 / alpha[axis]
  std::vector<double> packed_;             // node-major derivative values
};

}  // namespace kt
