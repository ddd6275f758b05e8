#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kamtorus/lattice.hpp"
#include "kamtorus/param_family.hpp"

namespace kt {

struct Interval {
  double lo = 0, hi = 0;
  double length() const { return hi - lo; }
};

// Finite union of disjoint closed intervals, sorted.
class ParamSet {
 public:
  ParamSet() = default;
  explicit ParamSet(std::vector<Interval> iv);
  static ParamSet single(double lo, double hi) { return ParamSet({{lo, hi}}); }

  const std::vector<Interval>& intervals() const { return iv_; }
  double measure() const { return measure_; }
  bool empty() const { return iv_.empty(); }
  bool contains(double t) const;
  // index of the interval containing t, or -1
  int interval_of(double t) const;
  ParamSet intersect(const ParamSet& o) const;

 private:
  std::vector<Interval> iv_;
  double measure_ = 0;
};

// Eigenvalues of A together with 1, duplicates merged.
std::vector<cplx> resonance_set(const TorusAutomorphism& a);

struct GapRecord {
  cplx lambda;
  std::vector<int> k;
  double gap = 0;
};
struct DiophantineCert {
  int N = 0;
  double b = 3;
  double threshold = 0;
  std::string automorphism;
  std::vector<GapRecord> min_gaps;  // one per lambda: smallest gap over k
  bool pass = true;
};

// |lambda - e^{2 pi i <k, alpha>}| >= N^{-b} for all lambda, 0 < |k|_inf <= N.
DiophantineCert in_D(const std::vector<double>& alpha, int N, const TorusAutomorphism& a, double b = 3);
DiophantineCert in_D(const std::vector<double>& alpha, int N, const std::vector<cplx>& E, double b = 3);
// Same predicate without the certificate; skips lambda whose modulus alone clears the threshold.
bool in_D_fast(const std::vector<double>& alpha, int N, const std::vector<cplx>& E, double b = 3);

struct ExclusionOptions {
  int bisection_steps = 80;
  double verify_density = 1e-5;  // 0 disables the post-verification sweep
  double b = 3;
  int derivative_samples = 1024;  // monotonicity check per unit length
};

struct ExclusionCert {
  double N = 0, Ntilde = 0, M = 0;
  int d_count = 0;         // resonating eigenvalue families
  double radius = 0;       // M / Ntilde^3
  double min_fragment = 0; // 1 / (2 M Ntilde^2)
  double input_measure = 0, kept_measure = 0, removed_measure = 0, discarded_measure = 0;
  double bound = 0;        // (1 - 2 d M^2 / Ntilde) |I|
  size_t roots = 0;
  double verify_density = 0;
  size_t verify_points = 0, verify_failures = 0;
};

struct ExclusionResult {
  ParamSet kept;
  ExclusionCert cert;
  std::vector<double> centers;        // resonance roots, sorted
  std::vector<Interval> removed;      // merged removal intervals clipped to I
  std::vector<Interval> discarded;    // short fragments
};

double exclusion_level(double N);  // ceil(N^{3/2}) with exact integer results kept

ExclusionResult exclude_interval(Interval I, const FrequencyFamily& phi, double N, double M,
                                 const TorusAutomorphism& a, const ExclusionOptions& opt = {});
ExclusionResult exclude_interval(Interval I, const FrequencyFamily& phi, double N, double M,
                                 const std::vector<cplx>& E, const ExclusionOptions& opt = {});
// applies exclude_interval to every interval of S and merges the ledgers
ExclusionResult exclude_set(const ParamSet& S, const FrequencyFamily& phi, double N, double M,
                            const std::vector<cplx>& E, const ExclusionOptions& opt = {});

struct PyartliResult {
  bool pass = false;
  double min_det = 0;
  double witness_t = 0;
  double norm = 0;  // max_{j <= d2} sup |rho^{(j)}|
};
PyartliResult pyartli_check(const FrequencyFamily& rho, double nu, int nodes = 257);

struct ExclusionD2Options {
  int bisection_steps = 80;
  int samples = 512;  // sign-change detection per interval
  double verify_density = 1e-3;
};
ExclusionResult exclude_interval_d2(Interval I, const FrequencyFamily& phi, double N, double nu, int d2,
                                    const std::vector<cplx>& E, const ExclusionD2Options& opt = {});

struct SdcResult {
  bool pass = true;
  double min_margin = 0;
  std::vector<int> witness_k;
  int K_max = 0;
};
SdcResult sdc_check(const std::vector<double>& alpha, const std::vector<double>& beta,
                    const std::vector<std::pair<cplx, cplx>>& pairs, double tau, double gamma, int K_max);
SdcResult sdc_check(const std::vector<double>& alpha, const std::vector<double>& beta, cplx lambda, cplx mu,
                    double tau, double gamma, int K_max);

}  // namespace kt
