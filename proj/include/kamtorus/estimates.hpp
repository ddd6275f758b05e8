#pragma once

#include <string>
#include <vector>

#include "kamtorus/kam_engine.hpp"
#include "kamtorus/param_family.hpp"

namespace kt {

// Random families t -> f_t = a + t b on T^{d1+d2}, coefficients of modulus
// amplitude * |(n, m)|^{-decay} with seeded uniform phases. A coefficient depends
// only on (seed, sample, component, k), so the family at a smaller box is the
// truncation of the one at a larger box.
struct SampleSpec {
  int d1 = 1, d2 = 1;
  int components = 1;
  double decay = 10;        // s + 2 with sample smoothness s = 8
  double amplitude = 1;
  double slope = 0.5;       // relative size of the t-dependent part b
  int nodes = 2;            // parameter nodes on [0, 1]
};
ParamFamily random_family(const SampleSpec& spec, int box, unsigned seed, int sample);

struct LabOptions {
  int samples = 200;
  std::vector<int> boxes = {8, 16, 32};
  unsigned seed = 1;
  SampleSpec spec;
  double drift_tol = 0.10;       // relative change of the max ratio between levels
  double ratio_threshold = 1e3;  // finiteness surrogate for the constant
  double eval_tol = 1e-16;
};

struct EstimateSample {
  double lhs = 0, rhs = 0;
  double ratio() const { return rhs > 0 ? lhs / rhs : 0; }
};
struct EstimateLevel {
  int box = 0;
  std::vector<EstimateSample> samples;
  double max_ratio = 0;
  double max_ratio_half = 0;     // over the first half of the samples
};
struct EstimateReport {
  std::string id;
  unsigned seed = 0;
  int sample_count = 0;
  std::vector<EstimateLevel> levels;
  double max_ratio = 0;
  double drift = 0;              // max relative change of the max ratio between box levels
  double sample_drift = 0;       // same between the first half and all samples (reported only)
  double drift_tol = 0.1, ratio_threshold = 0;
  bool pass = false;
  // inversion extras
  double max_roundtrip = 0;
  int max_iterations = 0;
  double max_h_norm = 0;
  int skipped = 0;               // degenerate samples
};

// ||f||_{lip,s} against ||f||_{lip,s1}^{a1} ||f||_{lip,s2}^{a2}, s = a1 s1 + a2 s2 integer.
EstimateReport verify_interpolation(const LabOptions& opt, int s1, int s2, double a1, double a2);
// ||f g||_{lip,s} against ||f||_{lip,s} ||g||_{lip,0} + ||f||_{lip,0} ||g||_{lip,s}
EstimateReport verify_product(const LabOptions& opt, int s);
// h = f(x + g) - f against ||f||_0 ||g||_{s+1} + ||f||_{s+1} ||g||_0 (lip norms)
EstimateReport verify_composition_difference(const LabOptions& opt, int s, double g_size = 0.05);
// k = f(x + g) - f - Df g: ||k||_s against ||f||_{lip,0} ||g||_{lip,s+2} + ||f||_{lip,s+2} ||g||_{lip,0}
EstimateReport verify_composition_remainder(const LabOptions& opt, int s, double g_size = 0.05);
std::vector<EstimateReport> verify_product_and_composition(const LabOptions& opt, int s);
// ||hbar||_{lip,s} against ||h||_{lip,s} for ||h||_{lip,1} drawn in [min_size, max_size]
EstimateReport verify_inversion(const LabOptions& opt, int s, double min_size = 0.01, double max_size = 0.49);

// Grid sup of k = f(x + g) - f - Df g for fixed f and g scaled by each factor.
struct ScalingPoint {
  double g_size = 0;  // ||g||_0
  double k_sup = 0;
};
std::vector<ScalingPoint> composition_remainder_scaling(const VectorField& f, const VectorField& g,
                                                        const std::vector<double>& factors, int grid = 0);

// Inversion constant ||hbar||_{lip,s} / ||h||_{lip,s} for amplitude * h.
struct InversionPoint {
  double amplitude = 0;
  double h_norm1 = 0;     // ||h||_{lip,1}
  double ratio = 0;
  double roundtrip = 0;
  int iterations = 0;
};
std::vector<InversionPoint> inversion_sweep(const ParamFamily& h, const std::vector<double>& amplitudes, int s,
                                            double eval_tol = 1e-16);

// Pointwise f(z + g(z)) on the grid of shape G^d for vector fields f, g.
GridVec compose_on_grid(const VectorField& f, const GridVec& g, int G, double eval_tol = 1e-16);

}  // namespace kt
