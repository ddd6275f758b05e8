#include "kamtorus/kam_engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include "kamtorus/near_grid.hpp"

namespace kt {

namespace {

// Vector-valued near-grid evaluation, one scalar evaluator per component.
class VecEval {
 public:
  VecEval(const VectorField& f, const std::vector<int>& shape, const std::vector<double>& shift, double tol) {
    for (const auto& c : f.comp) {
      ev_.emplace_back(c, shape, shift);
      ev_.back().set_absolute_tolerance(tol);
    }
  }
  GridVec operator()(const GridVec& pts) {
    GridVec out;
    for (auto& e : ev_) {
      out.push_back(e.evaluate(pts));
      order_ = std::max(order_, e.last_order());
    }
    return out;
  }
  int order() const { return order_; }

 private:
  std::vector<NearGridEvaluator> ev_;
  int order_ = 0;
};

std::vector<double> full_shift(int d1, const std::vector<double>& ell) {
  std::vector<double> s(d1, 0.0);
  s.insert(s.end(), ell.begin(), ell.end());
  return s;
}

// m x for a vector of lifted points
GridVec lin_apply(const IntMatrix& m, const GridVec& x) {
  const int d = m.dim();
  GridVec y(d, std::vector<double>(x[0].size(), 0.0));
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      const double c = static_cast<double>(m(a, b));
      if (c == 0) continue;
      for (size_t i = 0; i < x[b].size(); ++i) y[a][i] += c * x[b][i];
    }
  return y;
}

GridVec add(GridVec a, const GridVec& b) {
  for (size_t c = 0; c < a.size(); ++c)
    for (size_t i = 0; i < a[c].size(); ++i) a[c][i] += b[c][i];
  return a;
}

double sup_diff(const GridVec& a, const GridVec& b) {
  double m = 0;
  for (size_t c = 0; c < a.size(); ++c)
    for (size_t i = 0; i < a[c].size(); ++i) m = std::max(m, std::abs(a[c][i] - b[c][i]));
  return m;
}

double sup(const GridVec& a) {
  double m = 0;
  for (const auto& c : a)
    for (double x : c) m = std::max(m, std::abs(x));
  return m;
}

GridVec shifted_points(const GridVec& base, const std::vector<double>& shift, const GridVec& disp) {
  GridVec p = base;
  for (size_t c = 0; c < p.size(); ++c)
    for (size_t i = 0; i < p[c].size(); ++i) p[c][i] += shift[c] + disp[c][i];
  return p;
}

std::vector<int> cube(int d, int G) { return std::vector<int>(d, G); }

// fn(i) for i < n on up to `threads` workers; fn must only touch slot i
template <class Fn>
void parallel_for(size_t n, int threads, Fn&& fn) {
  const size_t nt = std::min<size_t>(static_cast<size_t>(std::max(threads, 1)), n);
  if (nt <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  for (size_t w = 0; w < nt; ++w)
    pool.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

struct Model {
  int d1, d2;
  TorusAutomorphism A, B, Abar, Bbar;
  Eigen::MatrixXcd P, Pinv;
  std::vector<cplx> lam, mu;
};

Model make_model(const ActionPair& pair) {
  Model m{pair.d1, pair.d2, pair.A, pair.B, pair.A.embed_with_identity(pair.d2), pair.B.embed_with_identity(pair.d2),
          {}, {}, {}, {}};
  const int d = pair.dim();
  const SimultaneousBasis sb = simultaneous_eigenbasis(pair.A, pair.B);
  m.P = Eigen::MatrixXcd::Identity(d, d);
  m.Pinv = Eigen::MatrixXcd::Identity(d, d);
  m.P.topLeftCorner(pair.d1, pair.d1) = sb.P;
  m.Pinv.topLeftCorner(pair.d1, pair.d1) = sb.Pinv;
  for (const auto& ep : sb.pairs) {
    m.lam.push_back(ep.lambda);
    m.mu.push_back(ep.mu);
  }
  for (int j = 0; j < pair.d2; ++j) {
    m.lam.push_back(1.0);
    m.mu.push_back(1.0);
  }
  return m;
}

// Displacement D of H o f o H^{-1} = lin z + shift + D given hbar = H^{-1} - Id on the grid:
// e = lin hbar + delta(z + hbar), D = e + h(lin z + shift + e).
GridVec conjugated_displacement(const IntMatrix& lin, const std::vector<double>& shift, const VectorField& delta,
                                const VectorField& h, const GridVec& z, const GridVec& linz, const GridVec& hbar,
                                const std::vector<int>& shape, double tol, int* order) {
  VecEval de(delta, shape, {}, tol);
  GridVec e = add(lin_apply(lin, hbar), de(add(z, hbar)));
  VecEval he(h, shape, shift, tol);
  GridVec D = add(e, he(shifted_points(linz, shift, e)));
  if (order) *order = std::max({*order, de.order(), he.order()});
  return D;
}

// f o g - g o f for f = lA z + sf + df, g = lB z + sg + dg
double defect_grid(const IntMatrix& lA, const IntMatrix& lB, const std::vector<double>& sf,
                   const std::vector<double>& sg, const VectorField& df, const VectorField& dg, const GridVec& z,
                   const GridVec& Az, const GridVec& Bz, const std::vector<int>& shape, double tol) {
  VecEval ef(df, shape, {}, tol), eg(dg, shape, {}, tol);
  const GridVec fz = ef(z), gz = eg(z);
  VecEval ef_g(df, shape, sg, tol), eg_f(dg, shape, sf, tol);
  const GridVec a = add(lin_apply(lA, gz), ef_g(shifted_points(Bz, sg, gz)));
  const GridVec b = add(lin_apply(lB, fz), eg_f(shifted_points(Az, sf, fz)));
  return sup_diff(a, b);
}

double elliptic_l1_max(const VectorField& v, int d1) {
  double m = 0;
  for (int c = d1; c < v.size(); ++c) m = std::max(m, std::abs(v.comp[c].average()));
  return m;
}

VectorField field_from_grid(const GridVec& g, const std::vector<int>& shape, int d1, int d2, int box) {
  VectorField out;
  for (const auto& c : g) out.comp.push_back(from_real_grid(RGrid{shape, c}, d1, d2, box));
  return out;
}

struct NodeOut {
  VectorField h, df, dg;
  std::vector<double> phi, psi;
};

NodeOut step_node(const Model& m, const std::vector<double>& phi, const std::vector<double>& psi,
                  const VectorField& df, const VectorField& dg, double N, const StepOptions& opt, int box, int G,
                  NodeStepReport& rep) {
  const int d1 = m.d1, d2 = m.d2, d = d1 + d2;
  rep.eps_in = std::max(max_wiener_norm(df, 0), max_wiener_norm(dg, 0));
  rep.eps1_in = std::max(max_wiener_norm(df, 1), max_wiener_norm(dg, 1));
  if (opt.certify) {
    const DiophantineCert cert = in_D(phi, static_cast<int>(std::floor(N)), m.A, opt.b);
    double g = std::numeric_limits<double>::infinity();
    for (const auto& r : cert.min_gaps) g = std::min(g, r.gap);
    rep.min_gap = g;
    if (!cert.pass) throw SmallDivisorError("frequency outside D(N, A) at this node");
  }

  // cohomological equations per common eigen-coordinate
  const VectorField vc = eigen_decompose(df, m.Pinv), wc = eigen_decompose(dg, m.Pinv);
  VectorField hc;
  const int cap = (G - 1) / 2;
  ApproxOptions ao;
  ao.check_commutation = false;
  ao.residuals = false;
  ao.cross_check = opt.cross_check;
  ao.verify = opt.verify_removal;
  ao.obstruction_tol = opt.obstruction_tol;
  for (int i = 0; i < d; ++i) {
    TwistedEquation eqA{m.lam[i], m.A, phi, N, opt.b}, eqB{m.mu[i], m.B, psi, N, opt.b};
    const int bi = std::max(vc.comp[i].box(), wc.comp[i].box());
    ApproxResult r = approximate_solve(vc.comp[i].with_box(bi), wc.comp[i].with_box(bi), eqA, eqB,
                                       FourierField(d1, d2, 0), 0, 2, ao);
    rep.removal_l1 = std::max(rep.removal_l1, r.vt.l1());
    rep.solve_disagreement = std::max(rep.solve_disagreement, r.report.solve.max_disagreement);
    // modes beyond the evaluator box are dropped and accounted for
    if (r.h.box() > cap) {
      FourierField kept = r.h.with_box(cap);
      rep.h_dropped = std::max(rep.h_dropped, r.h.l1() - kept.l1());
      r.h = std::move(kept);
    }
    hc.comp.push_back(std::move(r.h));
  }
  VectorField h = eigen_reassemble(hc, m.P);
  int hb = 0;
  for (const auto& c : h.comp) hb = std::max(hb, c.support_radius(1e-22));
  h = h.with_box(hb);
  rep.h_box = hb;
  rep.h_norm = max_wiener_norm(h, 1);

  const std::vector<int> shape = cube(d, G);
  InverseOptions io = opt.inverse;
  io.eval_tol = opt.eval_tol;
  const InverseResult inv = invert_near_identity(h, shape, io);
  rep.inverse_iterations = inv.iterations;
  rep.inverse_roundtrip = inv.roundtrip;

  const GridVec z = grid_points(shape);
  const GridVec Az = lin_apply(m.Abar.matrix(), z), Bz = lin_apply(m.Bbar.matrix(), z);
  const std::vector<double> sf = full_shift(d1, phi), sg = full_shift(d1, psi);
  int order = 0;
  GridVec Df = conjugated_displacement(m.Abar.matrix(), sf, df, h, z, Az, inv.hbar, shape, opt.eval_tol, &order);
  GridVec Dg = conjugated_displacement(m.Bbar.matrix(), sg, dg, h, z, Bz, inv.hbar, shape, opt.eval_tol, &order);
  rep.eval_order = order;

  NodeOut out;
  out.h = h;
  out.phi = phi;
  out.psi = psi;
  const double npts = static_cast<double>(z[0].size());
  for (int j = 0; j < d2; ++j) {
    double mf = 0, mg = 0;
    for (double x : Df[d1 + j]) mf += x;
    for (double x : Dg[d1 + j]) mg += x;
    mf /= npts;
    mg /= npts;
    for (double& x : Df[d1 + j]) x -= mf;
    for (double& x : Dg[d1 + j]) x -= mg;
    out.phi[j] += mf;
    out.psi[j] += mg;
    rep.dphi = std::max(rep.dphi, std::abs(mf));
    rep.dpsi = std::max(rep.dpsi, std::abs(mg));
  }
  out.df = field_from_grid(Df, shape, d1, d2, box);
  out.dg = field_from_grid(Dg, shape, d1, d2, box);
  rep.avg_f = elliptic_l1_max(out.df, d1);
  rep.avg_g = elliptic_l1_max(out.dg, d1);
  for (int j = 0; j < d2; ++j) {
    out.df.comp[d1 + j][out.df.comp[d1 + j].size() / 2] = 0;
    out.dg.comp[d1 + j][out.dg.comp[d1 + j].size() / 2] = 0;
  }
  rep.eps_out = std::max(max_wiener_norm(out.df, 0), max_wiener_norm(out.dg, 0));
  rep.eps1_out = std::max(max_wiener_norm(out.df, 1), max_wiener_norm(out.dg, 1));

  if (opt.defects) {
    const std::vector<double> sf2 = full_shift(d1, out.phi), sg2 = full_shift(d1, out.psi);
    rep.defect_in = defect_grid(m.Abar.matrix(), m.Bbar.matrix(), sf, sg, df, dg, z, Az, Bz, shape, opt.eval_tol);
    rep.defect_out =
        defect_grid(m.Abar.matrix(), m.Bbar.matrix(), sf2, sg2, out.df, out.dg, z, Az, Bz, shape, opt.eval_tol);
  }
  if (opt.bookkeeping) {
    // H o f~ - f_new o H = df + h(Az + sf + df) - A h - (0, dphi) - df_new(z + h)
    VecEval hz(h, shape, {}, opt.eval_tol), dfz(df, shape, {}, opt.eval_tol);
    const GridVec hv = hz(z), dv = dfz(z);
    VecEval hs(h, shape, sf, opt.eval_tol), dn(out.df, shape, {}, opt.eval_tol);
    GridVec lhs = add(dv, hs(shifted_points(Az, sf, dv)));
    GridVec rhs = add(lin_apply(m.Abar.matrix(), hv), dn(add(z, hv)));
    for (int j = 0; j < d2; ++j)
      for (double& x : rhs[d1 + j]) x += out.phi[j] - phi[j];
    rep.bookkeeping = sup_diff(lhs, rhs);
  }
  return out;
}

}  // namespace

void ActionPair::validate() const {
  if (d1 != A.dim() || d1 != B.dim()) throw DimensionError("action pair: automorphism dimension mismatch");
  if (phi.d2 != d2 || psi.d2 != d2) throw DimensionError("action pair: frequency dimension mismatch");
  if (!check_commuting(A, B)) throw PreconditionError("action pair: A and B do not commute");
  if (df.size() != dg.size() || df.values.size() != df.size() || dg.values.size() != dg.size())
    throw DimensionError("action pair: node count mismatch");
  for (size_t i = 0; i < df.size(); ++i) {
    if (df.nodes[i] != dg.nodes[i]) throw DimensionError("action pair: node mismatch");
    for (const VectorField* v : {&df.values[i], &dg.values[i]}) {
      if (v->size() != dim()) throw DimensionError("action pair: perturbation has the wrong number of components");
      for (const auto& c : v->comp)
        if (c.d1() != d1 || c.d2() != d2) throw DimensionError("action pair: perturbation dimension mismatch");
    }
  }
}

InverseResult invert_near_identity(const VectorField& h, const std::vector<int>& shape, const InverseOptions& opt) {
  InverseResult r;
  r.shape = shape;
  r.h_norm = max_wiener_norm(h, 1);
  if (r.h_norm > opt.max_norm) {
    r.h_norm = max_cr_norm(h, 1, std::max(default_grid(h.box()), 2));
    if (r.h_norm > opt.max_norm) throw PreconditionError("invert_near_identity: h is not small enough");
  }
  const GridVec z = grid_points(shape);
  VecEval he(h, shape, {}, opt.eval_tol);
  GridVec hb = he(z);
  for (auto& c : hb)
    for (double& x : c) x = -x;
  const int d = h.size();
  const size_t np = z[0].size();
  std::vector<VecEval> dh;  // dh[b] evaluates d h / d x_b, built on first Newton step
  double prev = std::numeric_limits<double>::infinity();
  bool newton = false;
  for (int it = 1; it <= opt.max_iter; ++it) {
    const GridVec pts = add(z, hb);
    if (!newton) {
      GridVec nb = he(pts);
      for (auto& c : nb)
        for (double& x : c) x = -x;
      r.last_update = sup_diff(nb, hb);
      hb = std::move(nb);
    } else {
      // (I + Dh(z + hbar)) delta = -(hbar + h(z + hbar)) pointwise
      if (dh.empty())
        for (int b = 0; b < d; ++b) {
          std::vector<int> e(d, 0);
          e[b] = 1;
          VectorField db;
          for (const auto& c : h.comp) db.comp.push_back(derivative(c, e));
          dh.emplace_back(db, shape, std::vector<double>{}, opt.eval_tol);
        }
      const GridVec hv = he(pts);
      std::vector<GridVec> jac;
      for (auto& e : dh) jac.push_back(e(pts));
      Eigen::MatrixXd J(d, d);
      Eigen::VectorXd rhs(d);
      double upd = 0;
      for (size_t i = 0; i < np; ++i) {
        for (int a = 0; a < d; ++a) {
          rhs(a) = -(hb[a][i] + hv[a][i]);
          for (int b = 0; b < d; ++b) J(a, b) = (a == b ? 1.0 : 0.0) + jac[b][a][i];
        }
        const Eigen::VectorXd delta = J.partialPivLu().solve(rhs);
        for (int a = 0; a < d; ++a) {
          hb[a][i] += delta(a);
          upd = std::max(upd, std::abs(delta(a)));
        }
      }
      r.last_update = upd;
      ++r.newton_steps;
    }
    r.iterations = it;
    if (r.last_update <= opt.tol) break;
    // slow contraction: switch to Newton steps
    if (opt.newton && !newton && it >= 3 && r.last_update > 0.25 * prev) newton = true;
    prev = r.last_update;
  }
  const GridVec check = he(add(z, hb));
  r.roundtrip = sup(add(hb, check));
  if (r.last_update > opt.tol && r.roundtrip > opt.roundtrip_tol)
    throw ConvergenceError("invert_near_identity: fixed point did not converge");
  if (r.roundtrip > opt.roundtrip_tol) throw ConvergenceError("invert_near_identity: round trip above tolerance");
  r.hbar = std::move(hb);
  return r;
}

StepResult inductive_step(const ActionPair& pair, double N, const StepOptions& opt) {
  pair.validate();
  const Model m = make_model(pair);
  int box = opt.box;
  if (box <= 0)
    for (size_t i = 0; i < pair.df.size(); ++i)
      box = std::max({box, pair.df.values[i].box(), pair.dg.values[i].box()});
  box = std::max(box, 1);
  const int G = opt.grid > 0 ? opt.grid : default_grid(box);
  if (G < 4 * box) throw PreconditionError("inductive_step: grid smaller than 4*box");

  StepResult res;
  res.N = N;
  res.h = pair.df;
  res.df_new = pair.df;
  res.dg_new = pair.dg;
  res.phi_new = pair.phi;
  res.psi_new = pair.psi;
  const size_t n = pair.df.size();
  std::vector<std::vector<double>> phis(n), psis(n);
  std::vector<NodeStepReport> reps(n);
  auto work = [&](size_t i) {
    const double t = pair.df.nodes[i];
    NodeStepReport& rep = reps[i];
    rep.t = t;
    const std::vector<double> phi = pair.phi.at(t), psi = pair.psi.at(t);
    phis[i] = phi;
    psis[i] = psi;
    try {
      NodeOut o = step_node(m, phi, psi, pair.df.values[i], pair.dg.values[i], N, opt, box, G, rep);
      res.h.values[i] = std::move(o.h);
      res.df_new.values[i] = std::move(o.df);
      res.dg_new.values[i] = std::move(o.dg);
      phis[i] = o.phi;
      psis[i] = o.psi;
    } catch (const Error& e) {
      rep.ok = false;
      rep.failure = e.code();
      rep.message = e.what();
      res.h.values[i] = VectorField::zeros(pair.dim(), pair.d1, pair.d2, 0);
    }
  };
  parallel_for(n, opt.threads, work);
  // merged in node order
  for (size_t i = 0; i < n; ++i) {
    const NodeStepReport& rep = reps[i];
    if (rep.ok) {
      res.eps_in = std::max(res.eps_in, rep.eps_in);
      res.eps_out = std::max(res.eps_out, rep.eps_out);
      res.max_h_norm = std::max(res.max_h_norm, rep.h_norm);
    } else {
      ++res.failures;
    }
  }
  res.nodes = std::move(reps);
  res.phi_new.set_node_values(pair.df.nodes, phis);
  res.psi_new.set_node_values(pair.df.nodes, psis);
  return res;
}

double commutation_defect_grid(const ActionPair& pair, size_t node, const std::vector<int>& shape, double eval_tol) {
  const Model m = make_model(pair);
  const double t = pair.df.nodes.at(node);
  const GridVec z = grid_points(shape);
  const GridVec Az = lin_apply(m.Abar.matrix(), z), Bz = lin_apply(m.Bbar.matrix(), z);
  return defect_grid(m.Abar.matrix(), m.Bbar.matrix(), full_shift(pair.d1, pair.phi.at(t)),
                     full_shift(pair.d1, pair.psi.at(t)), pair.df.values[node], pair.dg.values[node], z, Az, Bz,
                     shape, eval_tol);
}

ChainInverse invert_chain(const ConjugacyChain& chain, const std::vector<int>& shape, double eval_tol) {
  const int d = static_cast<int>(shape.size());
  const GridVec z = grid_points(shape);
  ChainInverse out;
  out.shape = shape;
  // G^{-1}(z) by successive pointwise inversions of the last step first
  GridVec q = z;
  for (size_t k = chain.steps.size(); k-- > 0;) {
    if (chain.steps[k].size() != d) throw DimensionError("invert_chain: step dimension mismatch");
    VecEval he(chain.steps[k], shape, {}, eval_tol);
    GridVec w = q;
    for (int it = 0; it < 100; ++it) {
      const GridVec hv = he(w);
      GridVec nw = q;
      for (int c = 0; c < d; ++c)
        for (size_t i = 0; i < nw[c].size(); ++i) nw[c][i] -= hv[c][i];
      const double upd = sup_diff(nw, w);
      w = std::move(nw);
      if (upd <= 1e-15) break;
    }
    q = std::move(w);
  }
  GridVec p = q;
  for (const auto& h : chain.steps) {
    VecEval he(h, shape, {}, eval_tol);
    p = add(p, he(p));
  }
  out.roundtrip = sup_diff(p, z);
  out.points = std::move(q);
  return out;
}

double chain_conjugacy_error(const ConjugacyChain& chain, const ChainInverse& inv, const TorusAutomorphism& lin,
                             const std::vector<double>& shift, const VectorField& delta,
                             const std::vector<double>& target_shift, double eval_tol) {
  const int d = lin.dim();
  if (static_cast<int>(shift.size()) != d || static_cast<int>(target_shift.size()) != d ||
      static_cast<int>(inv.points.size()) != d)
    throw DimensionError("chain_conjugacy_error: dimension mismatch");
  const std::vector<int>& shape = inv.shape;
  const GridVec z = grid_points(shape);
  const GridVec& q = inv.points;
  // displacement u - (lin z + shift) along f~ then G
  GridVec qz = q;
  for (int c = 0; c < d; ++c)
    for (size_t i = 0; i < qz[c].size(); ++i) qz[c][i] -= z[c][i];
  VecEval de(delta, shape, {}, eval_tol);
  GridVec disp = add(lin_apply(lin.matrix(), qz), de(q));
  const GridVec linz = lin_apply(lin.matrix(), z);
  for (const auto& h : chain.steps) {
    VecEval he(h, shape, shift, eval_tol);
    disp = add(disp, he(shifted_points(linz, shift, disp)));
  }
  double err = 0;
  for (int c = 0; c < d; ++c)
    for (double x : disp[c]) err = std::max(err, std::abs(x + shift[c] - target_shift[c]));
  return err;
}

ChainCheck check_chain(const ConjugacyChain& chain, const TorusAutomorphism& lin, const std::vector<double>& shift,
                       const VectorField& delta, const std::vector<double>& target_shift,
                       const std::vector<int>& shape, double eval_tol) {
  const ChainInverse inv = invert_chain(chain, shape, eval_tol);
  ChainCheck out;
  out.roundtrip = inv.roundtrip;
  out.conj_error = chain_conjugacy_error(chain, inv, lin, shift, delta, target_shift, eval_tol);
  return out;
}

RotationEstimate rotation_vector(const TorusMap& f, int d1, int d2, int orbits, long orbit_length, unsigned seed) {
  if (orbits < 1 || orbit_length < 1) throw PreconditionError("rotation_vector: empty orbit budget");
  const int d = d1 + d2;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<std::vector<double>> avg(orbits, std::vector<double>(d2));
  std::vector<double> x(d), y(d);
  for (int o = 0; o < orbits; ++o) {
    for (auto& v : x) v = U(rng);
    std::vector<double> s(d2, 0.0), comp(d2, 0.0);
    for (long n = 0; n < orbit_length; ++n) {
      f(x.data(), y.data());
      for (int j = 0; j < d2; ++j) {
        // compensated summation of the lifted elliptic displacement
        const double term = (y[d1 + j] - x[d1 + j]) - comp[j];
        const double t = s[j] + term;
        comp[j] = (t - s[j]) - term;
        s[j] = t;
      }
      for (int a = 0; a < d; ++a) x[a] = y[a] - std::floor(y[a]);
    }
    for (int j = 0; j < d2; ++j) avg[o][j] = s[j] / static_cast<double>(orbit_length);
  }
  RotationEstimate r;
  r.alpha.assign(d2, 0.0);
  r.spread.assign(d2, 0.0);
  for (int j = 0; j < d2; ++j) {
    for (int o = 0; o < orbits; ++o) r.alpha[j] += avg[o][j];
    r.alpha[j] /= orbits;
    for (int o = 0; o < orbits; ++o) r.spread[j] = std::max(r.spread[j], std::abs(avg[o][j] - r.alpha[j]));
  }
  return r;
}

namespace {

ActionPair subset(const ActionPair& p, const std::vector<size_t>& idx) {
  ActionPair s = p;
  s.df.nodes.clear();
  s.df.segment.clear();
  s.df.values.clear();
  s.dg.nodes.clear();
  s.dg.segment.clear();
  s.dg.values.clear();
  for (size_t i : idx) {
    s.df.nodes.push_back(p.df.nodes[i]);
    s.df.segment.push_back(p.df.segment.empty() ? 0 : p.df.segment[i]);
    s.df.values.push_back(p.df.values[i]);
    s.dg.nodes.push_back(p.dg.nodes[i]);
    s.dg.segment.push_back(p.dg.segment.empty() ? 0 : p.dg.segment[i]);
    s.dg.values.push_back(p.dg.values[i]);
  }
  return s;
}

}  // namespace

SchemeReport run_scheme(const ActionPair& pair, const SchemeConfig& cfg) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  pair.validate();
  if (pair.df.size() == 0) throw PreconditionError("run_scheme: no parameter nodes");
  const size_t n = pair.df.size();
  const int d = pair.dim();

  SchemeReport rep;
  rep.kept = ParamSet::single(pair.df.t_lo, pair.df.t_hi);
  rep.nodes.resize(n);
  std::vector<ConjugacyChain> chains(n);
  ActionPair cur = pair;  // current data, all nodes
  std::vector<double> eps(n);
  for (size_t i = 0; i < n; ++i) {
    rep.nodes[i].t = pair.df.nodes[i];
    eps[i] = std::max(max_wiener_norm(pair.df.values[i], 0), max_wiener_norm(pair.dg.values[i], 0));
    rep.nodes[i].eps.push_back(eps[i]);
  }
  std::vector<std::vector<double>> phv(n), psv(n);
  for (size_t i = 0; i < n; ++i) {
    phv[i] = pair.phi.at(pair.df.nodes[i]);
    psv[i] = pair.psi.at(pair.df.nodes[i]);
  }
  // frequency curves through the surviving nodes
  auto set_frequencies = [&] {
    std::vector<double> tn;
    std::vector<std::vector<double>> ph, ps;
    for (size_t i = 0; i < n; ++i)
      if (rep.nodes[i].survived) {
        tn.push_back(rep.nodes[i].t);
        ph.push_back(phv[i]);
        ps.push_back(psv[i]);
      }
    if (tn.empty()) return;
    cur.phi = pair.phi;
    cur.psi = pair.psi;
    cur.phi.set_node_values(tn, ph);
    cur.psi.set_node_values(tn, ps);
  };
  const std::vector<cplx> E = resonance_set(pair.A);
  double N = cfg.N0;
  double bound = 1;
  rep.stop_reason = "iteration_budget";
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const auto ti = clock::now();
    std::vector<size_t> alive, active;
    for (size_t i = 0; i < n; ++i)
      if (rep.nodes[i].survived) {
        alive.push_back(i);
        if (eps[i] > cfg.target) active.push_back(i);
      }
    if (alive.empty()) {
      rep.stop_reason = "empty";
      break;
    }
    if (active.empty()) {
      rep.converged = true;
      rep.stop_reason = "target";
      break;
    }
    IterationRecord rec;
    rec.iteration = it;
    rec.N = N;
    rec.Ntilde = exclusion_level(N);
    if (cfg.exclude) {
      if (rec.Ntilde > cfg.max_exclusion_level) {
        rep.stop_reason = "exclusion_budget";
        break;
      }
      ExclusionOptions eo = cfg.exclusion;
      eo.b = cfg.b;
      ExclusionResult ex = exclude_set(rep.kept, cur.phi, N, cfg.M, E, eo);
      rep.kept = ex.kept;
      rec.cert = ex.cert;
      bound *= std::max(0.0, 1.0 - 2.0 * ex.cert.d_count * cfg.M * cfg.M / rec.Ntilde);
      for (size_t i : alive)
        if (!rep.kept.contains(cur.df.nodes[i])) {
          rep.nodes[i].survived = false;
          rep.nodes[i].reason = "excluded_by_resonance";
        }
      std::erase_if(active, [&](size_t i) { return !rep.nodes[i].survived; });
      set_frequencies();
    }
    rec.bound_product = bound;
    rec.kept_measure = rep.kept.measure();
    if (!active.empty()) {
      StepOptions so = cfg.step;
      so.b = cfg.b;
      StepResult sr = inductive_step(subset(cur, active), rec.Ntilde, so);
      rec.eps_in = sr.eps_in;
      rec.eps_out = sr.eps_out;
      rec.max_h_norm = sr.max_h_norm;
      for (size_t q = 0; q < active.size(); ++q) {
        const size_t i = active[q];
        const NodeStepReport& nr = sr.nodes[q];
        if (nr.ok) rec.eps1_out = std::max(rec.eps1_out, nr.eps1_out);
        if (!nr.ok) {
          rep.nodes[i].survived = false;
          rep.nodes[i].reason = nr.failure;
          continue;
        }
        if (!(nr.eps_out < nr.eps_in)) {
          rep.nodes[i].survived = false;
          rep.nodes[i].reason = "no_contraction";
          continue;
        }
        chains[i].steps.push_back(sr.h.values[q]);
        cur.df.values[i] = sr.df_new.values[q];
        cur.dg.values[i] = sr.dg_new.values[q];
        phv[i] = sr.phi_new.at(rep.nodes[i].t);
        psv[i] = sr.psi_new.at(rep.nodes[i].t);
        eps[i] = nr.eps_out;
        rep.nodes[i].eps.push_back(eps[i]);
        rep.nodes[i].steps++;
      }
      set_frequencies();
      rep.steps.push_back(sr.nodes);
    }
    rec.alive = 0;
    for (size_t i = 0; i < n; ++i) rec.alive += rep.nodes[i].survived ? 1 : 0;
    rec.seconds = std::chrono::duration<double>(clock::now() - ti).count();
    rep.iterations.push_back(rec);
    N = rec.Ntilde;
  }
  if (!rep.converged) {
    bool all = true, any = false;
    for (size_t i = 0; i < n; ++i)
      if (rep.nodes[i].survived) {
        any = true;
        all = all && eps[i] <= cfg.target;
      }
    if (any && all) {
      rep.converged = true;
      rep.stop_reason = "target";
    }
  }

  size_t survived = 0;
  const Model m = make_model(pair);
  int box = cfg.step.box;
  if (box <= 0)
    for (size_t i = 0; i < n; ++i) box = std::max({box, pair.df.values[i].box(), pair.dg.values[i].box()});
  box = std::max(box, 1);
  const int G = cfg.verify_grid > 0 ? cfg.verify_grid : (cfg.step.grid > 0 ? cfg.step.grid : default_grid(box));
  for (size_t i = 0; i < n; ++i) {
    NodeVerdict& v = rep.nodes[i];
    v.final_error = eps[i];
    if (!v.survived) continue;
    if (eps[i] > cfg.target) {
      v.survived = false;
      v.reason = "not_converged";
      continue;
    }
    ++survived;
    v.phi_inf = phv[i];
    v.psi_inf = psv[i];
  }
  if (cfg.verify_chain) {
    const std::vector<int> shape = cube(d, G);
    parallel_for(n, cfg.step.threads, [&](size_t i) {
      NodeVerdict& v = rep.nodes[i];
      if (!v.survived) return;
      const double t = v.t;
      try {
        const ChainInverse inv = invert_chain(chains[i], shape, cfg.step.eval_tol);
        v.chain_roundtrip = inv.roundtrip;
        v.conj_error_f = chain_conjugacy_error(chains[i], inv, m.Abar, full_shift(pair.d1, pair.phi.at(t)),
                                               pair.df.values[i], full_shift(pair.d1, v.phi_inf), cfg.step.eval_tol);
        v.conj_error_g = chain_conjugacy_error(chains[i], inv, m.Bbar, full_shift(pair.d1, pair.psi.at(t)),
                                               pair.dg.values[i], full_shift(pair.d1, v.psi_inf), cfg.step.eval_tol);
      } catch (const Error& e) {
        v.reason = std::string("verification_") + e.code();
      }
    });
  }
  rep.surviving_fraction = static_cast<double>(survived) / static_cast<double>(n);
  rep.seconds = std::chrono::duration<double>(clock::now() - t0).count();
  return rep;
}

}  // namespace kt
