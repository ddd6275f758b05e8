#include "kamtorus/cohomology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>

namespace kt {

Regime TwistedEquation::regime() const {
  const double r = std::abs(lambda);
  if (std::abs(r - 1) <= 1e-12) return Regime::Neutral;
  return r < 1 ? Regime::Contracting : Regime::Expanding;
}

cplx TwistedEquation::phase(const int* m) const {
  double s = 0;
  for (size_t j = 0; j < phi.size(); ++j) s += m[j] * phi[j];
  s -= std::floor(s);
  return std::polar(1.0, kTwoPi * s);
}

namespace {

void check_eq(const FourierField& v, const TwistedEquation& eq, const char* who) {
  if (v.d1() != eq.d1() || v.d2() != eq.d2()) throw DimensionError(std::string(who) + ": field and equation dimensions differ");
  if (eq.lambda == cplx(0)) throw PreconditionError(std::string(who) + ": lambda must be nonzero");
}

// Layout helpers for the (n, m) cube of a field: n-offset * mcount + m-offset.
struct Cube {
  int d1, d2, box, ext;
  size_t ncount = 1, mcount = 1;
  Cube(const FourierField& v) : d1(v.d1()), d2(v.d2()), box(v.box()), ext(2 * v.box() + 1) {
    for (int i = 0; i < d1; ++i) ncount *= ext;
    for (int j = 0; j < d2; ++j) mcount *= ext;
  }
  bool in(const IVec& n) const { return max_abs(n) <= box; }
  size_t noff(const IVec& n) const {
    size_t o = 0;
    for (int i = 0; i < d1; ++i) o = o * ext + static_cast<size_t>(n[i] + box);
    return o;
  }
  IVec nidx(size_t o) const {
    IVec n(d1);
    for (int i = d1 - 1; i >= 0; --i) {
      n[i] = static_cast<i64>(o % ext) - box;
      o /= ext;
    }
    return n;
  }
  std::vector<int> midx(size_t o) const {
    std::vector<int> m(d2);
    for (int j = d2 - 1; j >= 0; --j) {
      m[j] = static_cast<int>(o % ext) - box;
      o /= ext;
    }
    return m;
  }
};

struct OrbitClass {
  IVec pivot;
  std::vector<OrbitPoint> pts;  // in-box points, shifts relative to the pivot
};

// All orbit classes of A* through the nonzero points of the max-norm box, cached
// per (A, box) since every solve on the same lattice reuses them.
const std::vector<OrbitClass>& all_orbit_classes(const TorusAutomorphism& a, int box, int d1) {
  static std::mutex mu;
  static std::map<std::pair<std::vector<std::vector<i64>>, int>, std::unique_ptr<std::vector<OrbitClass>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{a.matrix().rows(), box}];
  if (slot) return *slot;
  slot = std::make_unique<std::vector<OrbitClass>>();
  const int ext = 2 * box + 1;
  size_t ncount = 1;
  for (int i = 0; i < d1; ++i) ncount *= ext;
  auto noff = [&](const IVec& n) {
    size_t o = 0;
    for (int i = 0; i < d1; ++i) o = o * ext + static_cast<size_t>(n[i] + box);
    return o;
  };
  std::vector<char> seen(ncount, 0);
  IVec n(d1);
  for (size_t no = 0; no < ncount; ++no) {
    if (seen[no]) continue;
    size_t o = no;
    for (int i = d1 - 1; i >= 0; --i) {
      n[i] = static_cast<i64>(o % ext) - box;
      o /= ext;
    }
    if (max_abs(n) == 0) continue;
    OrbitClass oc;
    oc.pivot = find_pivot(a, n).point;
    oc.pts = orbit_in_box(a, oc.pivot, box);
    for (const auto& p : oc.pts) seen[noff(p.n)] = 1;
    slot->push_back(std::move(oc));
  }
  return *slot;
}

// Orbit classes of A* meeting the n-support of v (n != 0), each listed once.
std::vector<OrbitClass> orbit_classes(const FourierField& v, const TorusAutomorphism& a) {
  Cube c(v);
  std::vector<char> active(c.ncount, 0);
  for (size_t no = 0; no < c.ncount; ++no)
    for (size_t mo = 0; mo < c.mcount && !active[no]; ++mo)
      if (v[no * c.mcount + mo] != cplx(0)) active[no] = 1;
  std::vector<OrbitClass> out;
  for (const auto& oc : all_orbit_classes(a, c.box, c.d1))
    for (const auto& p : oc.pts)
      if (active[c.noff(p.n)]) {
        out.push_back(oc);
        break;
      }
  return out;
}

struct Entry {
  IVec n;
  std::vector<int> m;
  cplx c;
};

FourierField assemble(const std::vector<Entry>& es, int d1, int d2, int min_box) {
  int box = min_box;
  for (const auto& e : es) {
    box = std::max<int>(box, static_cast<int>(max_abs(e.n)));
    for (int x : e.m) box = std::max(box, std::abs(x));
  }
  FourierField r(d1, d2, box);
  std::vector<int> idx(d1 + d2);
  for (const auto& e : es) {
    for (int i = 0; i < d1; ++i) idx[i] = static_cast<int>(e.n[i]);
    for (int j = 0; j < d2; ++j) idx[d1 + j] = e.m[j];
    r[r.offset(idx.data())] += e.c;
  }
  return r;
}

// O at the pivot and its reference size: max|v| times the sum of the orbit weights
// (zero when v vanishes on the orbit)
std::pair<cplx, double> orbit_sum(const FourierField& v, const Cube& c, const OrbitClass& oc, size_t mo, cplx lam,
                                  cplx e, double vmax) {
  cplx s = 0;
  double wsum = 0;
  bool any = false;
  for (const auto& p : oc.pts) {
    const double w = std::pow(std::abs(lam), -(p.shift + 1));
    wsum += w;
    const cplx x = v[c.noff(p.n) * c.mcount + mo];
    if (x == cplx(0)) continue;
    any = true;
    s += std::pow(e, p.shift) * std::pow(lam, -(p.shift + 1)) * x;
  }
  return {s, any ? wsum * vmax : 0.0};
}

}  // namespace

cplx obstruction(const FourierField& v, const TwistedEquation& eq, const IVec& n, const std::vector<int>& m) {
  check_eq(v, eq, "obstruction");
  if (max_abs(n) == 0) throw PreconditionError("obstruction: n must be nonzero");
  if (static_cast<int>(m.size()) != v.d2()) throw DimensionError("obstruction: m dimension mismatch");
  const cplx e = eq.phase(m.data());
  std::vector<int> idx(v.dim());
  for (int j = 0; j < v.d2(); ++j) idx[v.d1() + j] = m[j];
  cplx s = 0;
  for (const auto& p : orbit_in_box(eq.A, n, v.box())) {
    for (int i = 0; i < v.d1(); ++i) idx[i] = static_cast<int>(p.n[i]);
    if (!v.in_box(idx.data())) continue;
    s += std::pow(e, p.shift) * std::pow(eq.lambda, -(p.shift + 1)) * v[v.offset(idx.data())];
  }
  return s;
}

std::vector<ObstructionEntry> obstruction_table(const FourierField& v, const TwistedEquation& eq) {
  check_eq(v, eq, "obstruction_table");
  Cube c(v);
  const double vmax = v.max_abs();
  std::vector<ObstructionEntry> out;
  for (const auto& oc : orbit_classes(v, eq.A))
    for (size_t mo = 0; mo < c.mcount; ++mo) {
      auto m = c.midx(mo);
      auto [s, sc] = orbit_sum(v, c, oc, mo, eq.lambda, eq.phase(m.data()), vmax);
      if (sc == 0) continue;
      out.push_back({oc.pivot, m, s, sc});
    }
  return out;
}

FourierField obstruction_part(const FourierField& v, const TwistedEquation& eq) {
  check_eq(v, eq, "obstruction_part");
  Cube c(v);
  const double vmax = v.max_abs();
  std::vector<Entry> es;
  for (const auto& oc : orbit_classes(v, eq.A))
    for (size_t mo = 0; mo < c.mcount; ++mo) {
      auto m = c.midx(mo);
      auto [s, sc] = orbit_sum(v, c, oc, mo, eq.lambda, eq.phase(m.data()), vmax);
      if (sc == 0) continue;
      es.push_back({oc.pivot, m, eq.lambda * s});
    }
  return assemble(es, v.d1(), v.d2(), v.box());
}

FourierField solve_twisted(const FourierField& v, const TwistedEquation& eq, const SolveOptions& opt,
                           SolveReport* rep) {
  check_eq(v, eq, "solve_twisted");
  SolveReport R;
  R.min_small_divisor = std::numeric_limits<double>::infinity();
  Cube c(v);
  const double vmax = v.max_abs();
  const cplx lam = eq.lambda;
  const bool forward = std::abs(lam) >= 1;
  std::vector<Entry> es;
  std::vector<cplx> hf, hb, vk;
  std::vector<double> sf;
  std::vector<IVec> chain;
  for (const auto& oc : orbit_classes(v, eq.A)) {
    ++R.orbits;
    const int lo = std::min(oc.pts.front().shift, 0), hi = std::max(oc.pts.back().shift, 0);
    const int len = hi - lo + 1;
    chain.assign(1, dual_orbit(eq.A, oc.pivot, lo));
    for (int k = 1; k < len; ++k) chain.push_back(eq.A.dual() * chain.back());
    std::vector<long long> off(len, -1);
    for (int k = 0; k < len; ++k)
      if (c.in(chain[k])) off[k] = static_cast<long long>(c.noff(chain[k]));
    for (size_t mo = 0; mo < c.mcount; ++mo) {
      bool any = false;
      for (int k = 0; k < len && !any; ++k)
        any = off[k] >= 0 && v[static_cast<size_t>(off[k]) * c.mcount + mo] != cplx(0);
      if (!any) continue;
      vk.assign(len, 0);
      for (int k = 0; k < len; ++k)
        if (off[k] >= 0) vk[k] = v[static_cast<size_t>(off[k]) * c.mcount + mo];
      auto m = c.midx(mo);
      const cplx e = eq.phase(m.data());
      // forward sums from the top, backward sums from the bottom
      hf.assign(len + 1, 0);
      sf.assign(len + 1, 0);
      for (int k = len - 1; k >= 0; --k) {
        hf[k] = (vk[k] + e * hf[k + 1]) / lam;
        sf[k] = (vmax + sf[k + 1]) / std::abs(lam);
      }
      hb.assign(len, 0);
      for (int k = 0; k + 1 < len; ++k) hb[k + 1] = (lam * hb[k] - vk[k]) / e;
      const double obs = std::abs(hf[0]) / std::max(sf[0], std::numeric_limits<double>::min());
      R.max_obstruction = std::max(R.max_obstruction, obs);
      if (obs > opt.obstruction_tol)
        throw ObstructionError("solve_twisted: obstruction does not vanish (relative size " + std::to_string(obs) + ")");
      double scale = 0, dis = 0;
      for (int k = 1; k < len; ++k) {
        scale = std::max({scale, std::abs(hf[k]), std::abs(hb[k])});
        dis = std::max(dis, std::abs(hf[k] - hb[k]));
      }
      scale = std::max(scale, vmax);
      if (scale > 0) R.max_disagreement = std::max(R.max_disagreement, dis / scale);
      for (int k = 1; k < len; ++k) {
        const cplx h = forward ? hf[k] : hb[k];
        if (h != cplx(0)) es.push_back({chain[k], m, h});
      }
    }
  }
  // n = 0: a small divisor problem
  const IVec zero(c.d1, 0);
  const size_t z = c.noff(zero);
  const double tiny = std::pow(eq.N, -eq.b);
  const bool neutral = eq.regime() == Regime::Neutral;
  for (size_t mo = 0; mo < c.mcount; ++mo) {
    const cplx x = v[z * c.mcount + mo];
    if (x == cplx(0)) continue;
    auto m = c.midx(mo);
    int mn = 0;
    for (int q : m) mn = std::max(mn, std::abs(q));
    if (mn > eq.N) {
      if (std::abs(x) > opt.obstruction_tol * std::max(1.0, v.l1()))
        throw PreconditionError("solve_twisted: v_{0,m} must vanish for |m| > N");
      continue;
    }
    const cplx div = lam - eq.phase(m.data());
    if (mn == 0 && std::abs(lam - cplx(1)) <= 1e-12) {
      if (std::abs(x) > 1e-12 * std::max(1.0, v.l1()))
        throw ObstructionError("solve_twisted: lambda = 1 requires a zero average");
      continue;
    }
    R.min_small_divisor = std::min(R.min_small_divisor, std::abs(div));
    if (neutral && std::abs(div) < tiny) throw SmallDivisorError("solve_twisted: small divisor below N^{-b}");
    es.push_back({zero, m, x / div});
  }
  FourierField h = assemble(es, c.d1, c.d2, v.box());
  R.out_box = h.box();
  if (rep) *rep = R;
  return h;
}

FourierField twisted_apply(const FourierField& h, const TwistedEquation& eq) {
  check_eq(h, eq, "twisted_apply");
  FourierField r = compose_affine(h, eq.A, eq.phi);
  r *= -1.0;
  FourierField lh = h;
  lh *= eq.lambda;
  r += lh;
  return r;
}

FourierField commutation_defect(const FourierField& v, const FourierField& w, const TwistedEquation& eqA,
                                const TwistedEquation& eqB) {
  return twisted_apply(w, eqA) - twisted_apply(v, eqB);
}

namespace {

// Orbit sums through B* of the A*-obstructions of phi. Enumerates the (k, l)
// with (A*)^k (B*)^l n in the box of phi using common eigen-coordinates of A*, B*.
struct Z2Walker {
  const TorusAutomorphism &A, &B;
  SimultaneousBasis sb;
  std::vector<double> rowl1;
  int l_cap;
  Z2Walker(const TorusAutomorphism& a, const TorusAutomorphism& b, int cap)
      : A(a), B(b), sb(simultaneous_eigenbasis(TorusAutomorphism(a.dual()), TorusAutomorphism(b.dual()))), l_cap(cap) {
    for (int i = 0; i < sb.Pinv.rows(); ++i) rowl1.push_back(sb.Pinv.row(i).cwiseAbs().sum());
  }

  // visits f(k, l, point) for every point of the Z^2-orbit of n inside the box
  template <class F>
  void walk(const IVec& n, int box, F&& f) const {
    const int d = A.dim();
    Eigen::VectorXcd c = sb.Pinv * to_real(n).cast<cplx>();
    std::vector<double> a(d), b(d), r(d);
    std::vector<bool> use(d);
    for (int i = 0; i < d; ++i) {
      a[i] = std::log(std::abs(sb.pairs[i].lambda));
      b[i] = std::log(std::abs(sb.pairs[i].mu));
      use[i] = std::abs(c[i]) > 1e-12 * std::max(1.0, to_real(n).norm());
      if (use[i]) r[i] = std::log((box * rowl1[i] * (1 + 1e-9) + 1e-9) / std::abs(c[i]));
    }
    auto krange = [&](int l, double& lo, double& hi) {
      lo = -std::numeric_limits<double>::infinity();
      hi = std::numeric_limits<double>::infinity();
      for (int i = 0; i < d; ++i) {
        if (!use[i]) continue;
        const double rhs = r[i] - l * b[i];
        if (std::abs(a[i]) < 1e-12) {
          if (rhs < -1e-9) return false;
          continue;
        }
        if (a[i] > 0) hi = std::min(hi, rhs / a[i]);
        else lo = std::max(lo, rhs / a[i]);
      }
      if (!std::isfinite(lo) || !std::isfinite(hi)) throw OrbitEscapeError("Z^2 orbit does not escape the box");
      return lo <= hi + 2;
    };
    double lo, hi;
    if (krange(-l_cap, lo, hi) || krange(l_cap, lo, hi)) throw OrbitEscapeError("Z^2 orbit scan cap exceeded");
    for (int l = -l_cap + 1; l < l_cap; ++l) {
      if (!krange(l, lo, hi)) continue;
      const int k0 = static_cast<int>(std::ceil(lo)) - 1, k1 = static_cast<int>(std::floor(hi)) + 1;
      IVec y = dual_orbit(A, dual_orbit(B, n, l), k0);
      for (int k = k0; k <= k1; ++k) {
        if (max_abs(y) <= box) f(k, l, y);
        if (k < k1) y = A.dual() * y;
      }
    }
  }
};

}  // namespace

FourierField remove_obstructions(const FourierField& v, const FourierField& w, const TwistedEquation& eqA,
                                 const TwistedEquation& eqB, const FourierField& phi_comm, const RemovalOptions& opt,
                                 RemovalReport* rep) {
  check_eq(v, eqA, "remove_obstructions");
  check_eq(w, eqB, "remove_obstructions");
  check_same_dims(v, phi_comm);
  if (!check_commuting(eqA.A, eqB.A)) throw PreconditionError("remove_obstructions: automorphisms do not commute");
  RemovalReport R;
  if (opt.verify) {
    FourierField res = commutation_defect(v, w, eqA, eqB) - phi_comm;
    R.commutation_residual = res.l1();
    if (R.commutation_residual > opt.commutation_tol * std::max(1.0, v.l1() + w.l1()))
      throw PreconditionError("remove_obstructions: commutation identity violated (residual " +
                              std::to_string(R.commutation_residual) + ")");
  }
  FourierField vt = obstruction_part(v, eqA);
  R.vt_l1 = vt.l1();
  R.phi_l1 = phi_comm.l1();
  if (opt.verify) {
    FourierField rest = v - vt;
    for (const auto& e : obstruction_table(rest, eqA))
      R.max_residual_obstruction = std::max(R.max_residual_obstruction, std::abs(e.value) / e.scale);
    if (R.max_residual_obstruction > opt.obstruction_tol)
      throw ObstructionError("remove_obstructions: obstructions survive the removal");
  }

  if (opt.cross_check) try {
    Z2Walker zw(eqA.A, eqB.A, opt.l_cap);
    Cube c(v);
    const double vmax = v.max_abs();
    const int d1 = v.d1(), d2 = v.d2();
    std::vector<int> idx(d1 + d2);
    for (const auto& oc : orbit_classes(v, eqA.A)) {
      ++R.pivots;
      // collect the Z^2 orbit once, reuse for every m
      std::vector<std::tuple<int, int, IVec>> pts;
      zw.walk(oc.pivot, phi_comm.box(), [&](int k, int l, const IVec& y) { pts.emplace_back(k, l, y); });
      for (size_t mo = 0; mo < c.mcount; ++mo) {
        auto m = c.midx(mo);
        auto [O, sc] = orbit_sum(v, c, oc, mo, eqA.lambda, eqA.phase(m.data()), vmax);
        const cplx ea = eqA.phase(m.data()), eb = eqB.phase(m.data());
        cplx fwd = 0, bwd = 0;
        double scb = 0;
        for (int j = 0; j < d2; ++j) idx[d1 + j] = m[j];
        for (const auto& [k, l, y] : pts) {
          for (int i = 0; i < d1; ++i) idx[i] = static_cast<int>(y[i]);
          const cplx p = phi_comm[phi_comm.offset(idx.data())];
          if (p == cplx(0)) continue;
          const cplx t = std::pow(eb, l) * std::pow(eqB.lambda, -(l + 1)) * std::pow(ea, k) *
                         std::pow(eqA.lambda, -(k + 1)) * p;
          scb += std::abs(t);
          if (l >= 0) fwd -= t;
          else bwd += t;
        }
        const double s = std::max({sc, scb, std::numeric_limits<double>::min()});
        R.cross_check_forward = std::max(R.cross_check_forward, std::abs(O - fwd) / s);
        R.cross_check_backward = std::max(R.cross_check_backward, std::abs(O - bwd) / s);
      }
    }
    R.cross_checked = true;
  } catch (const OrbitEscapeError&) {
    R.cross_checked = false;
    R.cross_check_forward = R.cross_check_backward = 0;
  }
  if (rep) *rep = R;
  return vt;
}

ApproxResult approximate_solve(const FourierField& v, const FourierField& w, const TwistedEquation& eqA,
                               const TwistedEquation& eqB, const FourierField& phi_comm, int r, int rp,
                               const ApproxOptions& opt) {
  check_eq(v, eqA, "approximate_solve");
  check_eq(w, eqB, "approximate_solve");
  if (rp <= r) throw PreconditionError("approximate_solve: requires r' > r");
  const bool unit = std::abs(eqA.lambda - cplx(1)) <= 1e-12 && std::abs(eqB.lambda - cplx(1)) <= 1e-12;
  if (unit && (std::abs(v.average()) > 1e-12 * std::max(1.0, v.l1()) ||
               std::abs(w.average()) > 1e-12 * std::max(1.0, w.l1())))
    throw PreconditionError("approximate_solve: (lambda, mu) = (1, 1) requires zero averages");
  const double res0 = opt.check_commutation ? (commutation_defect(v, w, eqA, eqB) - phi_comm).l1() : 0.0;
  if (opt.check_commutation && res0 > opt.commutation_tol * std::max(1.0, v.l1() + w.l1()))
    throw PreconditionError("approximate_solve: commutation identity violated");

  ApproxResult out;
  auto& rp_ = out.report;
  rp_.N = eqA.N;
  rp_.r = r;
  rp_.rp = rp;
  // a level at or above the box keeps the whole cube
  const FourierField vN = truncate(v, std::min<double>(eqA.N, v.box()), eqA.A);
  const FourierField wN = truncate(w, std::min<double>(eqA.N, w.box()), eqA.A);
  // the defect of the truncated pair only feeds the checks
  const bool need_phi = opt.verify || opt.cross_check;
  const FourierField phiN = need_phi ? commutation_defect(vN, wN, eqA, eqB) : FourierField(v.d1(), v.d2(), 0);
  out.vt = remove_obstructions(vN, wN, eqA, eqB, phiN, opt, &rp_.removal);
  rp_.removal.commutation_residual = res0;
  FourierField rhs = vN - out.vt;
  out.h = solve_twisted(rhs, eqA, SolveOptions{opt.obstruction_tol}, &rp_.solve);
  if (!opt.residuals) return out;
  out.res_v = v - twisted_apply(out.h, eqA);
  out.res_w = w - twisted_apply(out.h, eqB);

  const double N = std::max(1.0, eqA.N);
  const int d = v.dim();
  const int r2 = std::max(r - 2, 0);
  auto bound = [](double lhs, double rhs) {
    return NormBound{lhs, rhs, rhs > 0 ? lhs / rhs : (lhs > 0 ? std::numeric_limits<double>::infinity() : 0.0)};
  };
  const double phin = wiener_norm(phi_comm, r2);
  rp_.h = bound(wiener_norm(out.h, r + 1), wiener_norm(v, r) + phin);
  rp_.res_v = bound(wiener_norm(out.res_v, r), std::pow(N, d + r - rp) * wiener_norm(v, rp) + phin);
  rp_.res_w = bound(wiener_norm(out.res_w, r), std::pow(N, d + r - rp) * wiener_norm(w, rp) + phin);
  return out;
}

}  // namespace kt
