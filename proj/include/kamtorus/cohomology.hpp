#pragma once

#include <vector>

#include "kamtorus/fourier_field.hpp"
#include "kamtorus/lattice.hpp"

namespace kt {

enum class Regime { Contracting, Neutral, Expanding };  // |lambda| < 1, = 1, > 1

// lambda h - h o f_phi = v with f_phi(x, theta) = (A x, theta + phi).
struct TwistedEquation {
  cplx lambda = 1;
  TorusAutomorphism A;
  std::vector<double> phi;
  double N = 0;
  double b = 3;  // small-divisor exponent

  Regime regime() const;
  int d1() const { return A.dim(); }
  int d2() const { return static_cast<int>(phi.size()); }
  // e^{2 pi i <m, phi>}
  cplx phase(const int* m) const;
};

// Sum_k e_phi^k lambda^{-(k+1)} v_{(A*)^k n, m}; the sum runs over the orbit points in the box of v.
cplx obstruction(const FourierField& v, const TwistedEquation& eq, const IVec& n, const std::vector<int>& m);

struct ObstructionEntry {
  IVec pivot;
  std::vector<int> m;
  cplx value;   // obstruction at the pivot
  double scale; // max|v| times the sum of the orbit weights |lambda|^{-(k+1)}
};
// One entry per (orbit class meeting the support of v, m).
std::vector<ObstructionEntry> obstruction_table(const FourierField& v, const TwistedEquation& eq);

struct SolveOptions {
  double obstruction_tol = 1e-10;  // relative to max|v| times the orbit weight sum
};
struct SolveReport {
  double max_obstruction = 0;     // relative
  double max_disagreement = 0;    // forward vs backward sums, relative
  double min_small_divisor = 0;   // over the n = 0 modes solved (inf if none)
  int orbits = 0;
  int out_box = 0;
};

// Orbitwise solution of the twisted equation. Throws ObstructionError when an
// obstruction does not vanish and SmallDivisorError on an uncertified divisor.
FourierField solve_twisted(const FourierField& v, const TwistedEquation& eq, const SolveOptions& opt = {},
                           SolveReport* rep = nullptr);

// lambda h - h o f_phi on coefficients (result box sized to its support)
FourierField twisted_apply(const FourierField& h, const TwistedEquation& eq);

// v~ supported on pivots with v~_{n*, m} = lambda O_{n*, m}(v), so that every
// obstruction of v - v~ vanishes.
FourierField obstruction_part(const FourierField& v, const TwistedEquation& eq);

struct RemovalOptions {
  double commutation_tol = 1e-9;
  double obstruction_tol = 1e-10;
  bool cross_check = true;  // recompute obstructions through the B-orbit sums of phi_comm
  bool verify = true;       // commutation identity before and residual obstructions after the removal
  int l_cap = 1024;
};
struct RemovalReport {
  double commutation_residual = 0;  // l1 of the coefficient defect
  double max_residual_obstruction = 0;
  double cross_check_forward = 0;   // max |O - O_B| relative, l >= 0 sums
  double cross_check_backward = 0;  // l < 0 sums
  bool cross_checked = false;       // false when the Z^2 orbits are unbounded (pair without rank-two ergodicity)
  double vt_l1 = 0, phi_l1 = 0;
  int pivots = 0;
};

// (lambda w - w o f_phi) - (mu v - v o g_psi)
FourierField commutation_defect(const FourierField& v, const FourierField& w, const TwistedEquation& eqA,
                                const TwistedEquation& eqB);

FourierField remove_obstructions(const FourierField& v, const FourierField& w, const TwistedEquation& eqA,
                                 const TwistedEquation& eqB, const FourierField& phi_comm,
                                 const RemovalOptions& opt = {}, RemovalReport* rep = nullptr);

struct ApproxOptions : RemovalOptions {
  bool check_commutation = true;  // compare the defect of (v, w) with phi_comm
  bool residuals = true;          // coefficient residuals and their norm bounds
};

struct NormBound {
  double lhs = 0, rhs = 0, ratio = 0;
};
struct ApproxReport {
  double N = 0;
  int r = 0, rp = 0;
  NormBound h, res_v, res_w;
  SolveReport solve;
  RemovalReport removal;
};
struct ApproxResult {
  FourierField h, res_v, res_w, vt;
  ApproxReport report;
};

// Truncate, remove obstructions, solve. Norm bounds use Wiener norms with the
// unknown exponent of N set to zero, so the ratios are empirical constants.
ApproxResult approximate_solve(const FourierField& v, const FourierField& w, const TwistedEquation& eqA,
                               const TwistedEquation& eqB, const FourierField& phi_comm, int r = 0, int rp = 2,
                               const ApproxOptions& opt = {});

}  // namespace kt
