#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kamtorus/cohomology.hpp"
#include "kamtorus/exclusion.hpp"
#include "kamtorus/fourier_field.hpp"
#include "kamtorus/lattice.hpp"
#include "kamtorus/param_family.hpp"

namespace kt {

// Perturbed commuting pair over a parameter family:
//   f~_t = A_bar z + (0, phi(t)) + df_t(z),  g~_t = B_bar z + (0, psi(t)) + dg_t(z)
// with A_bar = A (+) Id on T^{d1} x T^{d2}. df, dg hold one real R^{d1+d2}-valued
// field per node.
struct ActionPair {
  int d1 = 0, d2 = 0;
  TorusAutomorphism A, B;
  FrequencyFamily phi, psi;
  ParamFamily df, dg;

  int dim() const { return d1 + d2; }
  void validate() const;
};

// Values of vector fields on a uniform grid, component-major.
using GridVec = std::vector<std::vector<double>>;

struct InverseOptions {
  double tol = 1e-13;        // fixed-point update target
  int max_iter = 60;
  double roundtrip_tol = 1e-11;
  double max_norm = 0.5;     // precondition on the C^1 size of h
  double eval_tol = 1e-17;   // absolute remainder target of the evaluations
  bool newton = true;        // switch to Newton steps when the fixed point contracts slowly
};
struct InverseResult {
  GridVec hbar;              // (Id + h)^{-1} - Id on the grid
  std::vector<int> shape;
  int iterations = 0;
  int newton_steps = 0;
  double last_update = 0;
  double roundtrip = 0;      // sup |hbar + h(z + hbar)|
  double h_norm = 0;         // size used for the precondition
};
// Inverse of Id + h by the fixed point hbar = -h(z + hbar) on the grid, with Newton
// steps once the fixed point contracts by less than a factor 4 per iteration.
InverseResult invert_near_identity(const VectorField& h, const std::vector<int>& shape,
                                   const InverseOptions& opt = {});

struct StepOptions {
  int box = 0;               // box of the new errors (0: box of the input)
  int grid = 0;              // points per axis (0: 4 * box)
  double b = 3;
  bool certify = true;       // require phi(t) in D(N, A) at every node
  double eval_tol = 1e-17;
  InverseOptions inverse;
  bool defects = true;       // commutation defects of the input and output pairs
  bool bookkeeping = false;  // sup |H o f~ - f_new o H| on the grid
  bool cross_check = false;  // B-route recomputation of the obstructions
  bool verify_removal = false;  // commutation and residual-obstruction checks inside the removal
  double obstruction_tol = 1e-10;
  int threads = 1;           // node workers; reports are merged in node order
};

struct NodeStepReport {
  double t = 0;
  bool ok = true;
  std::string failure;             // error code when !ok
  std::string message;
  double eps_in = 0, eps_out = 0;  // max(|df|, |dg|) in the Wiener 0-norm
  double eps1_in = 0, eps1_out = 0;
  double h_norm = 0;               // Wiener 1-norm of h
  int h_box = 0;
  double h_dropped = 0;            // l1 of solution modes beyond the evaluator box
  double dphi = 0, dpsi = 0;       // frequency updates, max over components
  double avg_f = 0, avg_g = 0;     // elliptic averages of the new errors
  double defect_in = -1, defect_out = -1;
  double bookkeeping = -1;
  double removal_l1 = 0;           // l1 of the removed obstruction parts
  double solve_disagreement = 0;
  int inverse_iterations = 0;
  double inverse_roundtrip = 0;
  double min_gap = 0;              // Diophantine certificate margin
  int eval_order = 0;
};

struct StepResult {
  ParamFamily h;
  FrequencyFamily phi_new, psi_new;
  ParamFamily df_new, dg_new;
  std::vector<NodeStepReport> nodes;
  double N = 0;
  double eps_in = 0, eps_out = 0;  // max over nodes that stayed ok
  double max_h_norm = 0;
  int failures = 0;
};

// One Newton step at truncation level N. Failed nodes keep their input data
// and carry the failure code in their report.
StepResult inductive_step(const ActionPair& pair, double N, const StepOptions& opt = {});

// sup over the grid of |f o g - g o f| for the pair at node i
double commutation_defect_grid(const ActionPair& pair, size_t node, const std::vector<int>& shape,
                               double eval_tol = 1e-17);

// Composition H_n o ... o H_1 of the accepted conjugacies of one node.
struct ConjugacyChain {
  std::vector<VectorField> steps;
};

struct ChainCheck {
  double conj_error = 0;   // sup |G o f~ o G^{-1} - f_target|
  double roundtrip = 0;    // sup |G o G^{-1} - Id|
};
// G^{-1} on the grid and the round trip sup |G o G^{-1} - Id|, shared by both maps of a pair.
struct ChainInverse {
  GridVec points;          // G^{-1}(z), lifted
  std::vector<int> shape;
  double roundtrip = 0;
};
ChainInverse invert_chain(const ConjugacyChain& chain, const std::vector<int>& shape, double eval_tol = 1e-17);
// sup |G o f~ o G^{-1} - f_target| with f~ = lin z + shift + delta, f_target = lin z + target_shift
double chain_conjugacy_error(const ConjugacyChain& chain, const ChainInverse& inv, const TorusAutomorphism& lin,
                             const std::vector<double>& shift, const VectorField& delta,
                             const std::vector<double>& target_shift, double eval_tol = 1e-17);
// f~ = lin z + shift + delta; target f = lin z + target_shift.
ChainCheck check_chain(const ConjugacyChain& chain, const TorusAutomorphism& lin, const std::vector<double>& shift,
                       const VectorField& delta, const std::vector<double>& target_shift,
                       const std::vector<int>& shape, double eval_tol = 1e-17);

// Map on T^{d1+d2}: writes the lifted image of x.
using TorusMap = std::function<void(const double* x, double* out)>;

struct RotationEstimate {
  std::vector<double> alpha;
  std::vector<double> spread;  // max deviation between orbits
};
// Birkhoff averages of the elliptic displacement along orbits.
RotationEstimate rotation_vector(const TorusMap& f, int d1, int d2, int orbits, long orbit_length,
                                 unsigned seed = 1);

struct SchemeConfig {
  double N0 = 8;
  int max_iterations = 10;
  double target = 1e-10;       // stop once eps <= target
  double floor = 1e-12;        // no further step below this error
  double M = 4;
  double b = 3;
  double max_exclusion_level = 2000;
  StepOptions step;
  ExclusionOptions exclusion;
  bool exclude = true;
  bool verify_chain = true;
  int verify_grid = 0;         // 0: step grid
};

struct IterationRecord {
  int iteration = 0;
  double N = 0, Ntilde = 0;
  double kept_measure = 0;
  double bound_product = 1;    // prod (1 - 2 d M^2 / Ntilde)
  double eps_in = 0, eps_out = 0;
  double eps1_out = 0;         // Wiener 1-norm of the new errors, max over nodes
  double max_h_norm = 0;
  int alive = 0;
  double seconds = 0;
  ExclusionCert cert;
};

struct NodeVerdict {
  double t = 0;
  bool survived = true;
  std::string reason;
  int steps = 0;
  std::vector<double> eps;           // eps after each accepted step, eps[0] the input
  std::vector<double> phi_inf, psi_inf;
  double conj_error_f = -1, conj_error_g = -1, chain_roundtrip = -1;
  double final_error = -1;           // max(|df|, |dg|) at exit
};

struct SchemeReport {
  std::vector<IterationRecord> iterations;
  std::vector<std::vector<NodeStepReport>> steps;
  std::vector<NodeVerdict> nodes;
  ParamSet kept;
  bool converged = false;
  std::string stop_reason;
  double surviving_fraction = 0;
  double seconds = 0;
};

// Alternates parameter exclusion and inductive steps until the error target
// is met, the iteration budget runs out or no node survives.
SchemeReport run_scheme(const ActionPair& pair, const SchemeConfig& cfg);

}  // namespace kt
