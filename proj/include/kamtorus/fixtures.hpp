#pragma once

#include <utility>
#include <vector>

#include "kamtorus/kam_engine.hpp"

namespace kt {

// [[2, 1], [1, 1]]
TorusAutomorphism cat_map();
// Two multiplicatively independent units of Z[x]/(x^3 - 3x + 1) acting on Z^3:
// the companion matrix A of the polynomial and B = A - I.
std::pair<TorusAutomorphism, TorusAutomorphism> cubic_pair();

// Real trigonometric polynomial given by its nonzero coefficients.
struct SparseField {
  std::vector<std::vector<int>> k;
  std::vector<cplx> c;
  double operator()(const double* x) const;
};
std::vector<SparseField> sparse_components(const VectorField& v);

// Generator of the conjugated-linear fixture on T^3 x T^1: a handful of real
// modes whose images under the transposes of the cubic pair stay in the box
// of radius 2, scaled so that the grid C^1 norm (max-coordinate convention)
// equals `size`.
VectorField cubic_fixture_generator(double size);

// f~ = H0 o f_lin o H0^{-1} evaluated pointwise, H0 = Id + h0, f_lin = lin z + shift.
TorusMap conjugated_map(const TorusAutomorphism& lin, const std::vector<double>& shift, const VectorField& h0);

struct ConjugatedPairOptions {
  int nodes = 64;
  double t_lo = 0, t_hi = 1;
  // < 0: uniform nodes including both ends; otherwise t_lo + (i + offset) (t_hi - t_lo) / nodes.
  // An irrational offset keeps affine frequency curves away from rational values at the nodes.
  double node_offset = -1;
  int box = 4;   // box of the perturbations
  int grid = 16;
  double inverse_tol = 1e-15;
};
struct ConjugatedPair {
  ActionPair pair;
  VectorField h0;
  VectorField h0bar;                 // (Id + h0)^{-1} - Id, t-independent, box grid/4
  std::vector<double> truncation;    // l1 of the dropped tail of df per node (grid estimate)
  std::vector<std::vector<double>> phi_true, psi_true;  // unnormalized frequencies per node
};
// Pair (H0 o f_phi o H0^{-1}, H0 o g_psi o H0^{-1}) with perturbations truncated to the
// box and the elliptic averages moved into per-node frequency samples.
ConjugatedPair conjugated_linear_pair(const TorusAutomorphism& A, const TorusAutomorphism& B, int d2,
                                      const FrequencyFamily& phi, const FrequencyFamily& psi, const VectorField& h0,
                                      const ConjugatedPairOptions& opt = {});

}  // namespace kt
