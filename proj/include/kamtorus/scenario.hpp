#pragma once

#include <string>
#include <vector>

#include "kamtorus/kam_engine.hpp"

namespace kt {

// One Fourier coefficient of a real perturbation; the conjugate mode at -index
// is added automatically.
struct CoefficientSpec {
  std::string map = "f";   // "f" or "g"; ignored for generator modes
  int component = 0;
  std::vector<int> index;  // (n, m), length d1 + d2
  double re = 0, im = 0;
};

struct PerturbationSpec {
  std::string kind = "none";  // none | coefficients | conjugated_linear
  std::vector<CoefficientSpec> coefficients;
  std::string generator = "cubic_fixture";  // cubic_fixture | modes (conjugated_linear only)
  double amplitude = 1e-3;    // C^1 size of h0 for cubic_fixture, scale of the modes otherwise
  int box = 4;
  int grid = 16;              // evaluation grid of the conjugated maps
};

struct SchemeSpec {
  double N0 = 8;
  int max_iterations = 6;
  double target = 1e-10;
  double floor = 1e-12;
  double M = 3;
  double b = 3;
  double max_exclusion_level = 2000;
  int grid = 16;
  int box = 0;
  double eval_tol = 1e-17;
  bool exclude = true;
  bool verify_chain = true;
  bool cross_check = false;
  bool bookkeeping = false;
  int bisection_steps = 80;
  double verify_density = 1e-5;
  double conj_tol = 1e-8;     // required conjugation error of surviving nodes
};

struct CheckSpec {
  int K = 5;                  // higher-rank range
  double nu = 0.1;            // Pyartli lower bound
  int pyartli_nodes = 257;
  double t = 0.3819660112501051;  // parameter of the simultaneous Diophantine and N0 checks
  double tau = 2;
  double gamma = 1e-3;
  int K_max = 30;
};

struct SolveSpec {
  double t = 0.3819660112501051;
  int box = 4;
  double amplitude = 1;
  int grid = 32;
  int samples = 1;
  double tol = 1e-9;
};

struct ExcludeSpec {
  double N = 100;
  double M = 3;
  int histogram_bins = 20;
  double gap_step = 1e-4;     // spacing of the gap samples inside kept intervals
};

struct EstimatesSpec {
  int samples = 200;
  std::vector<int> boxes = {8, 16, 32};
  int s = 1;
  double drift_tol = 0.10;
  double ratio_threshold = 1e3;
  double inversion_max = 0.49;
};

struct Scenario {
  unsigned seed = 1;
  int threads = 1;
  std::vector<std::vector<i64>> A, B;       // d1 x d1 hyperbolic blocks
  int d2 = 1;
  std::vector<std::vector<double>> phi, psi; // per component, polynomial in t, lowest degree first
  double t_lo = 0, t_hi = 1;
  int nodes = 64;
  double node_offset = 0.6180339887498949;  // < 0: uniform nodes including both ends
  PerturbationSpec perturbation;
  SchemeSpec scheme;
  CheckSpec check;
  SolveSpec solve;
  ExcludeSpec exclude;
  EstimatesSpec estimates;

  int d1() const { return static_cast<int>(A.size()); }
};

// Reference scenario: the cubic pair times one circle with the conjugated-linear fixture.
Scenario default_scenario();

// Parse and validate. Unknown keys, malformed matrices, det != +-1, non-commuting
// pairs and a linear part outside the (A x Id, B x Id) form raise ConfigError.
// The action may be given as blocks {A, B, d2} or as full linear parts
// {linear_f, linear_g, d2} whose elliptic block is checked and split off.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);
std::string scenario_to_text(const Scenario& s);  // every key with its value

struct NormalFormCheck {
  bool pass = true;
  std::string message;
};
// Linear parts of size d1 + d2 must be block diagonal with the identity on the last d2 axes.
NormalFormCheck check_normal_form(const std::vector<std::vector<i64>>& f, const std::vector<std::vector<i64>>& g,
                                  int d2);

FrequencyFamily scenario_phi(const Scenario& s);
FrequencyFamily scenario_psi(const Scenario& s);
TorusAutomorphism scenario_A(const Scenario& s);
TorusAutomorphism scenario_B(const Scenario& s);
std::vector<double> scenario_nodes(const Scenario& s);

// Perturbed pair at the scenario nodes.
ActionPair build_pair(const Scenario& s);
SchemeConfig build_scheme_config(const Scenario& s);

}  // namespace kt
