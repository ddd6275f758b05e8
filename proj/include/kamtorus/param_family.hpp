#pragma once

#include <vector>

#include "kamtorus/fourier_field.hpp"

namespace kt {

// Frequency curve t -> R^{d2}: a polynomial part plus per-node corrections
// interpolated linearly between nodes (empty corrections = pure polynomial).
struct FrequencyFamily {
  double t_lo = 0, t_hi = 1;
  int d2 = 1;
  std::vector<std::vector<double>> poly;  // per component, lowest degree first
  std::vector<double> nodes;
  std::vector<std::vector<double>> corr;  // corr[node][component]

  static FrequencyFamily polynomial(double lo, double hi, std::vector<std::vector<double>> coeffs);
  static FrequencyFamily constant(std::vector<double> value);

  bool sampled() const { return !nodes.empty(); }
  std::vector<double> at(double t) const;
  double at(double t, int comp) const;
  // first derivative (one-sided slope of the correction between nodes)
  std::vector<double> derivative(double t) const;
  // k-th derivative of the polynomial part only
  std::vector<double> poly_derivative(double t, int k) const;
  // replace the curve values at the given nodes (keeps the polynomial part)
  void set_node_values(const std::vector<double>& t, const std::vector<std::vector<double>>& values);
};

// Per-node vector fields over a parameter interval. Nodes sharing a segment id
// and adjacent in the list enter the Lipschitz quotient.
struct ParamFamily {
  double t_lo = 0, t_hi = 1;
  std::vector<double> nodes;
  std::vector<int> segment;
  std::vector<VectorField> values;

  static ParamFamily uniform(double lo, double hi, int count);
  size_t size() const { return nodes.size(); }
};

struct LipNormOptions {
  int grid = 0;                 // 0: 4*box
  bool require_quotient = true; // throw when fewer than two nodes
};
// max over iota (max-coordinate <= r) of max(sup over nodes, successive quotients)
double lip_norm(const ParamFamily& f, int r, const LipNormOptions& opt = {});
// the two parts separately, for reporting
struct LipParts {
  double sup = 0;
  double lip = 0;
};
LipParts lip_norm_parts(const ParamFamily& f, int r, const LipNormOptions& opt = {});
// parts for every order 0..rmax from one pass over the derivatives
std::vector<LipParts> lip_norm_profile(const ParamFamily& f, int rmax, const LipNormOptions& opt = {});

}  // namespace kt
