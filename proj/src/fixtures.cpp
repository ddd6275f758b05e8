#include "kamtorus/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace kt {

TorusAutomorphism cat_map() { return TorusAutomorphism::from_rows({{2, 1}, {1, 1}}); }

std::pair<TorusAutomorphism, TorusAutomorphism> cubic_pair() {
  const TorusAutomorphism A = TorusAutomorphism::from_rows({{0, 0, -1}, {1, 0, 3}, {0, 1, 0}});
  const TorusAutomorphism B = TorusAutomorphism::from_rows({{-1, 0, -1}, {1, -1, 3}, {0, 1, -1}});
  return {A, B};
}

double SparseField::operator()(const double* x) const {
  double s = 0;
  for (size_t j = 0; j < k.size(); ++j) {
    double ph = 0;
    for (size_t a = 0; a < k[j].size(); ++a) ph += k[j][a] * x[a];
    s += c[j].real() * std::cos(kTwoPi * ph) - c[j].imag() * std::sin(kTwoPi * ph);
  }
  return s;
}

std::vector<SparseField> sparse_components(const VectorField& v) {
  std::vector<SparseField> out;
  for (const auto& f : v.comp) {
    SparseField s;
    for_each_index(f, [&](size_t off, const int* idx) {
      if (f[off] == cplx(0)) return;
      s.k.emplace_back(idx, idx + f.dim());
      s.c.push_back(f[off]);
    });
    out.push_back(std::move(s));
  }
  return out;
}

VectorField cubic_fixture_generator(double size) {
  struct Mode {
    int comp;
    std::vector<int> k;
    double amp, phase;
  };
  // spatial parts from {e1, e3, e1 + e3, e1 - e3}, whose images under A^t, B^t have entries <= 2
  const std::vector<Mode> modes = {
      {0, {1, 0, 0, 0}, 1.0, 0.0},   {0, {0, 0, 1, 1}, 0.7, 0.25},  {1, {1, 0, 1, 0}, 0.9, 0.25},
      {1, {0, 0, 0, 1}, 0.6, 0.0},   {2, {0, 0, 1, 0}, 1.0, 0.1},   {2, {1, 0, 0, 1}, 0.5, 0.3},
      {3, {1, 0, 0, 0}, 0.8, 0.25},  {3, {0, 0, 1, -1}, 0.6, 0.0},  {3, {1, 0, -1, 0}, 0.4, 0.15},
  };
  VectorField v = VectorField::zeros(4, 3, 1, 1);
  for (const auto& m : modes) {
    const cplx c = 0.5 * m.amp * std::polar(1.0, kTwoPi * m.phase);
    std::vector<int> neg(m.k.size());
    for (size_t a = 0; a < m.k.size(); ++a) neg[a] = -m.k[a];
    v.comp[m.comp].set(m.k, v.comp[m.comp].get(m.k) + c);
    v.comp[m.comp].set(neg, v.comp[m.comp].get(neg) + std::conj(c));
  }
  v *= size / max_cr_norm(v, 1, 16);
  return v;
}

TorusMap conjugated_map(const TorusAutomorphism& lin, const std::vector<double>& shift, const VectorField& h0) {
  const int d = lin.dim();
  if (h0.size() != d || static_cast<int>(shift.size()) != d) throw DimensionError("conjugated_map: dimension mismatch");
  const std::vector<SparseField> h = sparse_components(h0);
  const IntMatrix m = lin.matrix();
  return [h, m, shift, d](const double* x, double* out) {
    std::vector<double> y(x, x + d), ny(d), u(d);
    for (int it = 0; it < 200; ++it) {
      double upd = 0;
      for (int a = 0; a < d; ++a) {
        ny[a] = x[a] - h[a](y.data());
        upd = std::max(upd, std::abs(ny[a] - y[a]));
      }
      y.swap(ny);
      if (upd <= 1e-16) break;
    }
    for (int a = 0; a < d; ++a) {
      u[a] = shift[a];
      for (int b = 0; b < d; ++b) u[a] += static_cast<double>(m(a, b)) * y[b];
    }
    for (int a = 0; a < d; ++a) out[a] = u[a] + h[a](u.data());
  };
}

ConjugatedPair conjugated_linear_pair(const TorusAutomorphism& A, const TorusAutomorphism& B, int d2,
                                      const FrequencyFamily& phi, const FrequencyFamily& psi, const VectorField& h0,
                                      const ConjugatedPairOptions& opt) {
  const int d1 = A.dim(), d = d1 + d2;
  if (h0.size() != d) throw DimensionError("conjugated_linear_pair: generator has the wrong number of components");
  if (opt.grid < 4 * opt.box) throw PreconditionError("conjugated_linear_pair: grid smaller than 4*box");
  if (opt.nodes < 1) throw PreconditionError("conjugated_linear_pair: no nodes");
  const std::vector<int> shape(d, opt.grid);
  const std::vector<std::vector<double>> z = grid_points(shape);
  const size_t np = z[0].size();
  const std::vector<SparseField> h = sparse_components(h0);

  // hbar = -h0(z + hbar), pointwise
  std::vector<std::vector<double>> hb(d, std::vector<double>(np, 0.0));
  std::vector<double> y(d), ny(d);
  for (size_t i = 0; i < np; ++i) {
    for (int a = 0; a < d; ++a) y[a] = z[a][i];
    for (int it = 0; it < 200; ++it) {
      double upd = 0;
      for (int a = 0; a < d; ++a) {
        ny[a] = z[a][i] - h[a](y.data());
        upd = std::max(upd, std::abs(ny[a] - y[a]));
      }
      y.swap(ny);
      if (upd <= opt.inverse_tol) break;
    }
    for (int a = 0; a < d; ++a) hb[a][i] = y[a] - z[a][i];
  }

  ConjugatedPair out;
  out.h0 = h0;
  for (const auto& c : hb) out.h0bar.comp.push_back(from_real_grid(RGrid{shape, c}, d1, d2, opt.grid / 4));

  ActionPair& p = out.pair;
  p.d1 = d1;
  p.d2 = d2;
  p.A = A;
  p.B = B;
  p.df = ParamFamily::uniform(opt.t_lo, opt.t_hi, opt.nodes);
  if (opt.node_offset >= 0)
    for (int q = 0; q < opt.nodes; ++q) p.df.nodes[q] = opt.t_lo + (q + opt.node_offset) * (opt.t_hi - opt.t_lo) / opt.nodes;
  p.dg = p.df;
  out.truncation.assign(opt.nodes, 0.0);

  // distinct modes of h0 and their coefficients per component
  std::map<std::vector<int>, size_t> index;
  for (const auto& s : h)
    for (const auto& k : s.k) index.emplace(k, index.size());
  std::vector<std::vector<int>> ks(index.size());
  for (const auto& [k, j] : index) ks[j] = k;

  auto build = [&](const TorusAutomorphism& lin, const FrequencyFamily& fam, ParamFamily& target,
                   std::vector<std::vector<double>>& truth) {
    const TorusAutomorphism L = lin.embed_with_identity(d2);
    const IntMatrix m = L.matrix();
    // lin (z + hbar) and lin hbar
    std::vector<std::vector<double>> P(d, std::vector<double>(np, 0.0)), Lh(d, std::vector<double>(np, 0.0));
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        const double c = static_cast<double>(m(a, b));
        if (c == 0) continue;
        for (size_t i = 0; i < np; ++i) {
          P[a][i] += c * (z[b][i] + hb[b][i]);
          Lh[a][i] += c * hb[b][i];
        }
      }
    std::vector<std::vector<cplx>> E(ks.size(), std::vector<cplx>(np));
    for (size_t j = 0; j < ks.size(); ++j)
      for (size_t i = 0; i < np; ++i) {
        double ph = 0;
        for (int a = 0; a < d; ++a) ph += ks[j][a] * P[a][i];
        E[j][i] = std::polar(1.0, kTwoPi * (ph - std::floor(ph)));
      }
    std::vector<std::vector<double>> vals;
    for (int q = 0; q < opt.nodes; ++q) {
      const double t = target.nodes[q];
      const std::vector<double> al = fam.at(t);
      truth.push_back(al);
      VectorField v;
      double tail = 0;
      for (int c = 0; c < d; ++c) {
        std::vector<double> g = Lh[c];
        for (size_t j = 0; j < h[c].k.size(); ++j) {
          double ph = 0;
          for (int e = 0; e < d2; ++e) ph += h[c].k[j][d1 + e] * al[e];
          const cplx w = h[c].c[j] * std::polar(1.0, kTwoPi * ph);
          const std::vector<cplx>& ek = E[index.at(h[c].k[j])];
          for (size_t i = 0; i < np; ++i) g[i] += (w * ek[i]).real();
        }
        FourierField f = from_real_grid(RGrid{shape, g}, d1, d2, opt.box);
        const RGrid back = to_real_grid(f, opt.grid);
        for (size_t i = 0; i < np; ++i) tail = std::max(tail, std::abs(back.v[i] - g[i]));
        v.comp.push_back(std::move(f));
      }
      std::vector<double> eff = al;
      for (int e = 0; e < d2; ++e) {
        FourierField& f = v.comp[d1 + e];
        eff[e] += f.average().real();
        f[f.size() / 2] = 0;
      }
      vals.push_back(eff);
      out.truncation[q] = std::max(out.truncation[q], tail);
      target.values[q] = std::move(v);
    }
    return vals;
  };
  const auto pv = build(A, phi, p.df, out.phi_true);
  const auto sv = build(B, psi, p.dg, out.psi_true);
  p.phi = phi;
  p.psi = psi;
  p.phi.set_node_values(p.df.nodes, pv);
  p.psi.set_node_values(p.dg.nodes, sv);
  return out;
}

}  // namespace kt
