#include "kamtorus/param_family.hpp"

#include <algorithm>
#include <cmath>

namespace kt {

FrequencyFamily FrequencyFamily::polynomial(double lo, double hi, std::vector<std::vector<double>> coeffs) {
  FrequencyFamily f;
  f.t_lo = lo;
  f.t_hi = hi;
  f.d2 = static_cast<int>(coeffs.size());
  if (f.d2 == 0) throw DimensionError("frequency family needs at least one component");
  f.poly = std::move(coeffs);
  return f;
}

FrequencyFamily FrequencyFamily::constant(std::vector<double> value) {
  std::vector<std::vector<double>> c;
  for (double v : value) c.push_back({v});
  return polynomial(0, 1, c);
}

double FrequencyFamily::at(double t, int comp) const {
  double s = 0;
  const auto& p = poly[comp];
  for (size_t k = p.size(); k-- > 0;) s = s * t + p[k];
  if (nodes.empty()) return s;
  if (t <= nodes.front()) return s + corr.front()[comp];
  if (t >= nodes.back()) return s + corr.back()[comp];
  auto it = std::upper_bound(nodes.begin(), nodes.end(), t);
  const size_t j = static_cast<size_t>(it - nodes.begin());
  const double u = (t - nodes[j - 1]) / (nodes[j] - nodes[j - 1]);
  return s + (1 - u) * corr[j - 1][comp] + u * corr[j][comp];
}

std::vector<double> FrequencyFamily::at(double t) const {
  std::vector<double> r(d2);
  for (int c = 0; c < d2; ++c) r[c] = at(t, c);
  return r;
}

std::vector<double> FrequencyFamily::poly_derivative(double t, int k) const {
  std::vector<double> r(d2, 0.0);
  for (int c = 0; c < d2; ++c) {
    const auto& p = poly[c];
    double s = 0;
    for (size_t j = p.size(); j-- > static_cast<size_t>(k);) {
      double f = 1;
      for (int q = 0; q < k; ++q) f *= static_cast<double>(j - q);
      s = s * t + f * p[j];
    }
    r[c] = s;
  }
  return r;
}

std::vector<double> FrequencyFamily::derivative(double t) const {
  std::vector<double> r = poly_derivative(t, 1);
  if (nodes.size() < 2) return r;
  size_t j = static_cast<size_t>(std::upper_bound(nodes.begin(), nodes.end(), t) - nodes.begin());
  j = std::clamp<size_t>(j, 1, nodes.size() - 1);
  const double h = nodes[j] - nodes[j - 1];
  for (int c = 0; c < d2; ++c) r[c] += (corr[j][c] - corr[j - 1][c]) / h;
  return r;
}

void FrequencyFamily::set_node_values(const std::vector<double>& t, const std::vector<std::vector<double>>& values) {
  if (t.size() != values.size()) throw DimensionError("frequency samples: size mismatch");
  FrequencyFamily base = *this;
  base.nodes.clear();
  base.corr.clear();
  nodes = t;
  corr.assign(t.size(), std::vector<double>(d2));
  for (size_t i = 0; i < t.size(); ++i)
    for (int c = 0; c < d2; ++c) corr[i][c] = values[i][c] - base.at(t[i], c);
}

ParamFamily ParamFamily::uniform(double lo, double hi, int count) {
  ParamFamily f;
  f.t_lo = lo;
  f.t_hi = hi;
  for (int i = 0; i < count; ++i) {
    f.nodes.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
    f.segment.push_back(0);
  }
  f.values.resize(count);
  return f;
}

namespace {

double sup_derivative(const FourierField& v, const std::vector<int>& iota, int G) {
  CGrid g = to_grid(derivative(v, iota), G);
  double m = 0;
  for (const auto& x : g.v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

std::vector<LipParts> lip_norm_profile(const ParamFamily& f, int rmax, const LipNormOptions& opt) {
  std::vector<LipParts> out(static_cast<size_t>(std::max(rmax, 0)) + 1);
  if (f.values.empty()) return out;
  if (f.values.size() < 2 && opt.require_quotient) throw PreconditionError("lip_norm: need at least two parameter nodes");
  const int box = f.values[0].box();
  const int G = opt.grid > 0 ? opt.grid : default_grid(box);
  const int dim = f.values[0].comp[0].dim();
  const auto iotas = multi_indices(dim, rmax);
  // each derivative enters every level at or above its max coordinate
  std::vector<int> level(iotas.size());
  for (size_t q = 0; q < iotas.size(); ++q) level[q] = *std::max_element(iotas[q].begin(), iotas[q].end());
  auto raise = [&](double LipParts::*part, size_t q, double x) {
    for (int r = level[q]; r <= rmax; ++r) out[r].*part = std::max(out[r].*part, x);
  };
  for (size_t i = 0; i < f.values.size(); ++i) {
    for (const auto& c : f.values[i].comp)
      for (size_t q = 0; q < iotas.size(); ++q) raise(&LipParts::sup, q, sup_derivative(c, iotas[q], G));
    if (i + 1 < f.values.size() && f.segment[i] == f.segment[i + 1]) {
      const double dt = f.nodes[i + 1] - f.nodes[i];
      for (int k = 0; k < f.values[i].size(); ++k) {
        FourierField diff = f.values[i + 1].comp[k] - f.values[i].comp[k];
        for (size_t q = 0; q < iotas.size(); ++q) raise(&LipParts::lip, q, sup_derivative(diff, iotas[q], G) / dt);
      }
    }
  }
  return out;
}

LipParts lip_norm_parts(const ParamFamily& f, int r, const LipNormOptions& opt) {
  return lip_norm_profile(f, r, opt)[r];
}

double lip_norm(const ParamFamily& f, int r, const LipNormOptions& opt) {
  LipParts p = lip_norm_parts(f, r, opt);
  return std::max(p.sup, p.lip);
}

}  // namespace kt
