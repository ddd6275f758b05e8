#include <cmath>
#include <random>

#include "doctest.h"
#include "kamtorus/cohomology.hpp"
#include "kamtorus/fixtures.hpp"

using namespace kt;

namespace {

const double kGolden = (std::sqrt(5.0) - 1) / 2;

FourierField random_field(int d1, int d2, int box, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  FourierField v(d1, d2, box);
  for (auto& c : v.coeffs()) c = cplx(u(rng), u(rng));
  return v;
}

TwistedEquation equation(const TorusAutomorphism& A, cplx lambda, std::vector<double> phi, double N) {
  TwistedEquation eq;
  eq.A = A;
  eq.lambda = lambda;
  eq.phi = std::move(phi);
  eq.N = N;
  return eq;
}

// sum over every orbit point in the box, by repeated integer matrix application
cplx brute_obstruction(const FourierField& v, const TwistedEquation& eq, const IVec& n, const std::vector<int>& m) {
  double ph = 0;
  for (size_t j = 0; j < m.size(); ++j) ph += m[j] * eq.phi[j];
  const cplx e = std::polar(1.0, kTwoPi * ph);
  auto add = [&](const IVec& p, int k, cplx& s) {
    std::vector<int> idx(p.begin(), p.end());
    idx.insert(idx.end(), m.begin(), m.end());
    if (v.in_box(idx.data())) s += std::pow(e, k) * std::pow(eq.lambda, -(k + 1)) * v.get(idx);
  };
  cplx s = 0;
  IVec p = n;
  for (int k = 0; k <= 80 && max_abs(p) < 1000000; ++k, p = eq.A.dual() * p) add(p, k, s);
  p = eq.A.dual_inverse() * n;
  for (int k = -1; k >= -80 && max_abs(p) < 1000000; --k, p = eq.A.dual_inverse() * p) add(p, k, s);
  return s;
}

cplx eigenvalue(const TorusAutomorphism& A, bool expanding) {
  const auto& sp = A.splitting();
  return expanding ? sp.expanding()[0].value : sp.contracting()[0].value;
}

}  // namespace

TEST_CASE("obstruction sums") {
  const auto A = cat_map();
  const cplx lam = eigenvalue(A, true);
  const TwistedEquation eq = equation(A, lam, {kGolden}, 6);
  SUBCASE("single coefficient") {
    const IVec n0 = find_pivot(A, {1, 0}).point;
    const FourierField v = FourierField::mode(2, 1, {int(n0[0]), int(n0[1]), 1}, 1.0, 6);
    CHECK(std::abs(obstruction(v, eq, n0, {1}) - 1.0 / lam) < 1e-14);
  }
  SUBCASE("zero field") { CHECK(obstruction(FourierField(2, 1, 4), eq, {1, 2}, {0}) == cplx(0)); }
  SUBCASE("against the direct orbit sum") {
    const FourierField v = random_field(2, 1, 6, 3);
    for (IVec n : {IVec{1, 0}, IVec{2, -1}, IVec{-3, 5}, IVec{0, 4}})
      for (int m : {-1, 0, 2}) {
        const cplx want = brute_obstruction(v, eq, n, {m});
        CHECK(std::abs(obstruction(v, eq, n, {m}) - want) < 1e-12 * std::max(1.0, std::abs(want)));
      }
  }
  SUBCASE("coboundaries have no obstruction") {
    const FourierField h = random_field(2, 1, 3, 4);
    const FourierField v = lam * h - compose_affine(h, A, eq.phi);
    for (const auto& e : obstruction_table(v, eq)) CHECK(std::abs(e.value) <= 1e-12 * e.scale);
  }
  SUBCASE("covariance along the orbit") {
    // O_{A* n, m} = lambda e^{-2 pi i m phi} O_{n, m} when the whole orbit lies in the box
    const FourierField v = random_field(2, 1, 8, 5);
    for (IVec n : {IVec{1, 0}, IVec{1, 1}, IVec{2, -3}})
      for (int m : {-1, 1}) {
        const cplx lm = lam * std::polar(1.0, -kTwoPi * m * kGolden);
        const cplx o = obstruction(v, eq, n, {m});
        CHECK(std::abs(obstruction(v, eq, dual_orbit(A, n, 1), {m}) - lm * o) < 1e-12 * std::max(1.0, std::abs(o)));
      }
  }
}

TEST_CASE("twisted solve") {
  const auto A = cat_map();
  SUBCASE("zero right-hand side") {
    const TwistedEquation eq = equation(A, 1.0, {kGolden}, 4);
    CHECK(solve_twisted(FourierField(2, 1, 4), eq).l1() == 0);
  }
  SUBCASE("elliptic mode at lambda = 1") {
    const TwistedEquation eq = equation(A, 1.0, {kGolden}, 4);
    const FourierField v = FourierField::mode(2, 1, {0, 0, 1}, 1.0) + FourierField::mode(2, 1, {0, 0, -1}, 1.0);
    const FourierField h = solve_twisted(v, eq);
    CHECK(std::abs(h.get({0, 0, 1}) - 1.0 / (1.0 - std::polar(1.0, kTwoPi * kGolden))) < 1e-14);
  }
  SUBCASE("coboundary round trip") {
    for (cplx lam : {cplx(1), eigenvalue(A, true), eigenvalue(A, false)}) {
      const TwistedEquation eq = equation(A, lam, {kGolden}, 8);
      FourierField h0 = random_field(2, 1, 4, 6);
      h0.set({0, 0, 0}, 0);
      const FourierField v = twisted_apply(h0, eq);
      const FourierField h = solve_twisted(v, eq);
      const int b = std::max(h.box(), h0.box());
      CHECK((h.with_box(b) - h0.with_box(b)).max_abs() < 1e-10);
    }
  }
  SUBCASE("uncertified divisor") {
    const TwistedEquation eq = equation(A, 1.0, {0.5}, 4);
    const FourierField v = FourierField::mode(2, 1, {0, 0, 2}, 1.0);
    CHECK_THROWS_AS(solve_twisted(v, eq), SmallDivisorError);
  }
  SUBCASE("nonzero obstruction") {
    const TwistedEquation eq = equation(A, eigenvalue(A, true), {kGolden}, 4);
    const FourierField v = FourierField::mode(2, 1, {1, 0, 0}, 1.0, 4);
    CHECK_THROWS_AS(solve_twisted(v, eq), ObstructionError);
  }
}

TEST_CASE("obstruction part") {
  const auto A = cat_map();
  const cplx lam = eigenvalue(A, true);
  const TwistedEquation eq = equation(A, lam, {kGolden}, 6);
  SUBCASE("single orbit") {
    const Pivot p = find_pivot(A, {1, 0});
    // put the unit coefficient two steps after the pivot
    const IVec n0 = dual_orbit(A, p.point, 2);
    const FourierField v = FourierField::mode(2, 1, {int(n0[0]), int(n0[1]), 0}, 1.0, 6);
    const FourierField vt = obstruction_part(v, eq);
    const cplx o = obstruction(v, eq, p.point, {0});
    CHECK(std::abs(vt.get({int(p.point[0]), int(p.point[1]), 0}) - lam * o) < 1e-14);
    CHECK(std::abs(vt.l1() - std::abs(lam * o)) < 1e-14);
  }
  SUBCASE("removal leaves a solvable remainder") {
    const FourierField v = random_field(2, 1, 6, 8);
    const FourierField r = v - obstruction_part(v, eq);
    for (IVec n : {IVec{1, 0}, IVec{3, 1}, IVec{-2, 5}})
      for (int m : {-1, 0, 1}) CHECK(std::abs(brute_obstruction(r, eq, n, {m})) < 1e-12 * r.l1());
    CHECK_NOTHROW(solve_twisted(r, eq));
  }
  SUBCASE("obstruction-free input") {
    const FourierField h = random_field(2, 1, 3, 9);
    const FourierField v = twisted_apply(h, eq);
    CHECK(obstruction_part(v, eq).max_abs() < 1e-12 * v.max_abs());
  }
}

TEST_CASE("removal with a commuting partner") {
  auto [P, Q] = cubic_pair();
  const SimultaneousBasis sb = simultaneous_eigenbasis(P, Q);
  const double alpha = 0.3 + kGolden / 7, beta = kGolden;
  for (const auto& pr : sb.pairs) {
    const TwistedEquation eqA = equation(P, pr.lambda, {alpha}, 6), eqB = equation(Q, pr.mu, {beta}, 6);
    const FourierField h = random_field(3, 1, 2, 10);
    const FourierField v = twisted_apply(h, eqA), w = twisted_apply(h, eqB);
    const int b = std::max(v.box(), w.box());
    const FourierField vb = v.with_box(b), wb = w.with_box(b);
    const FourierField phi = commutation_defect(vb, wb, eqA, eqB);
    CHECK(phi.max_abs() < 1e-12);
    RemovalReport rep;
    const FourierField vt = remove_obstructions(vb, wb, eqA, eqB, phi, {}, &rep);
    CHECK(vt.max_abs() < 1e-10 * vb.max_abs());
    CHECK(rep.cross_checked);
  }
}

TEST_CASE("approximate solve") {
  auto [P, Q] = cubic_pair();
  const SimultaneousBasis sb = simultaneous_eigenbasis(P, Q);
  const auto& pr = sb.pairs[0];
  const TwistedEquation eqA = equation(P, pr.lambda, {0.31}, 8), eqB = equation(Q, pr.mu, {kGolden}, 8);
  SUBCASE("zero data") {
    const FourierField z(3, 1, 3);
    const ApproxResult r = approximate_solve(z, z, eqA, eqB, z);
    CHECK(r.h.l1() == 0);
    CHECK(r.res_v.l1() == 0);
    CHECK(r.res_w.l1() == 0);
  }
  SUBCASE("consistent coboundary pair") {
    const FourierField h = random_field(3, 1, 1, 12);
    const FourierField v = twisted_apply(h, eqA), w = twisted_apply(h, eqB);
    const int b = std::max(v.box(), w.box());
    const FourierField vb = v.with_box(b), wb = w.with_box(b);
    const ApproxResult r = approximate_solve(vb, wb, eqA, eqB, FourierField(3, 1, b));
    CHECK(r.res_v.max_abs() < 1e-10);
    CHECK(r.res_w.max_abs() < 1e-10);
  }
}
