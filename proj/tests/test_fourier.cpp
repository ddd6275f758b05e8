#include <cmath>
#include <random>

#include "doctest.h"
#include "kamtorus/fixtures.hpp"
#include "kamtorus/fourier_field.hpp"
#include "kamtorus/near_grid.hpp"
#include "kamtorus/param_family.hpp"

using namespace kt;

namespace {

FourierField random_real(int d1, int d2, int box, unsigned seed, double decay = 0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  FourierField v(d1, d2, box);
  for_each_index(v, [&](size_t off, const int* idx) {
    double n = 0;
    for (int a = 0; a < v.dim(); ++a) n = std::max(n, std::abs(static_cast<double>(idx[a])));
    v[off] = cplx(u(rng), u(rng)) * std::pow(1 + n, -decay);
  });
  return v.real_part();
}

// direct trigonometric sum
cplx direct(const FourierField& v, const std::vector<double>& x) {
  cplx s = 0;
  for_each_index(v, [&](size_t off, const int* idx) {
    double ph = 0;
    for (int a = 0; a < v.dim(); ++a) ph += idx[a] * x[a];
    s += v[off] * std::polar(1.0, kTwoPi * ph);
  });
  return s;
}

}  // namespace

TEST_CASE("averages and conjugate symmetry") {
  CHECK(FourierField::mode(2, 1, {1, 0, 1}, 1.0).average() == cplx(0));
  CHECK(FourierField::constant(2, 1, cplx(2.5, -1)).average() == cplx(2.5, -1));
  const FourierField v = random_real(2, 1, 3, 4);
  CHECK(v.hermitian_defect() < 1e-15);
  CHECK(std::abs(direct(v, {0.3, 0.1, 0.7}).imag()) < 1e-12);
}

TEST_CASE("truncation and residue") {
  const auto A = cat_map();
  const FourierField v = random_real(2, 1, 4, 1);
  CHECK((truncate(v, v.box(), A) - v).l1() == 0);
  CHECK(residue(v, v.box(), A).l1() == 0);
  const int N = 2;
  const FourierField m = FourierField::mode(2, 1, {0, 0, N + 1}, 1.0, 4);
  CHECK(truncate(m, N, A).l1() == 0);
  CHECK(residue(m, N, A).l1() == 1);
  CHECK((truncate(v, 2.5, A) + residue(v, 2.5, A) - v).l1() < 1e-15);
}

TEST_CASE("affine composition") {
  const auto A = cat_map();
  SUBCASE("elliptic mode picks up the phase") {
    const double alpha = 0.3;
    const FourierField h = FourierField::mode(2, 1, {0, 0, 1}, 1.0);
    const FourierField c = compose_affine(h, A, {alpha});
    CHECK(std::abs(c.get({0, 0, 1}) - std::polar(1.0, kTwoPi * alpha)) < 1e-15);
  }
  SUBCASE("identity with zero shift") {
    const FourierField h = random_real(2, 1, 3, 2);
    CHECK((compose_affine(h, TorusAutomorphism::identity(2), {0.0}) - h).l1() < 1e-15);
  }
  SUBCASE("hyperbolic mode moves to the A^t image") {
    // chi_{(1,0)}(A x) = e^{2 pi i (2 x1 + x2)}: the composed field lives at n with A* n = (1, 0), n = A^t (1, 0)
    const FourierField h = FourierField::mode(2, 1, {1, 0, 0}, 1.0);
    const FourierField c = compose_affine(h, A, {0.0});
    CHECK(std::abs(c.get({2, 1, 0}) - cplx(1)) < 1e-15);
    CHECK(std::abs(c.l1() - 1) < 1e-15);
  }
  SUBCASE("pointwise agreement") {
    auto [P, Q] = cubic_pair();
    const FourierField h = random_real(3, 1, 2, 3);
    const std::vector<double> sh = {0.37};
    const FourierField c = compose_affine(h, P, sh);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> x = {u(rng), u(rng), u(rng), u(rng)};
      std::vector<double> y(4, 0.0);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) y[i] += static_cast<double>(P.matrix()(i, j)) * x[j];
      y[3] = x[3] + sh[0];
      CHECK(std::abs(direct(c, x) - direct(h, y)) < 1e-11);
    }
  }
}

TEST_CASE("grids") {
  SUBCASE("constant field") {
    const CGrid g = to_grid(FourierField::constant(1, 1, cplx(3)), 8);
    for (const auto& z : g.v) CHECK(std::abs(z - cplx(3)) < 1e-15);
  }
  SUBCASE("round trip") {
    const FourierField v = random_real(2, 1, 3, 7);
    const FourierField w = from_grid(to_grid(v, 16), 2, 1, 3);
    CHECK((w - v).l1() < 1e-12);
  }
  SUBCASE("grid values are point values") {
    const FourierField v = random_real(1, 1, 3, 8);
    const CGrid g = to_grid(v, 12);
    const auto pts = grid_points(g.shape);
    for (size_t i = 0; i < g.size(); i += 17) CHECK(std::abs(g.v[i] - direct(v, {pts[0][i], pts[1][i]})) < 1e-12);
  }
}

TEST_CASE("derivatives and norms") {
  const FourierField v = random_real(1, 1, 3, 9, 1);
  const FourierField dv = derivative(v, {1, 0});
  const double h = 1e-5;
  for (double x : {0.1, 0.45, 0.8}) {
    const cplx fd = (direct(v, {x + h, 0.3}) - direct(v, {x - h, 0.3})) / (2 * h);
    CHECK(std::abs(direct(dv, {x, 0.3}) - fd) < 1e-6);
  }
  for (int r = 0; r <= 2; ++r) CHECK(wiener_norm(v, r) >= cr_norm(v, r) - 1e-12);
  // sup of 2 cos(2 pi theta) is 2
  const FourierField c = FourierField::mode(1, 1, {0, 1}, 1.0) + FourierField::mode(1, 1, {0, -1}, 1.0);
  CHECK(cr_norm(c, 0) == doctest::Approx(2).epsilon(1e-12));
  CHECK(cr_norm(c, 1) == doctest::Approx(2 * kTwoPi).epsilon(1e-12));
}

TEST_CASE("dealiased product") {
  const FourierField a = random_real(1, 1, 2, 11), b = random_real(1, 1, 3, 12);
  const FourierField p = multiply(a, b, 5);
  for (auto x : {std::vector<double>{0.2, 0.9}, std::vector<double>{0.61, 0.05}})
    CHECK(std::abs(direct(p, x) - direct(a, x) * direct(b, x)) < 1e-12);
}

TEST_CASE("eigen coordinates") {
  auto [P, Q] = cubic_pair();
  const SimultaneousBasis sb = simultaneous_eigenbasis(P, Q);
  VectorField v;
  for (int c = 0; c < 4; ++c) v.comp.push_back(random_real(3, 1, 2, 20 + c));
  Eigen::MatrixXcd P4 = Eigen::MatrixXcd::Identity(4, 4), Pinv4 = P4;
  P4.topLeftCorner(3, 3) = sb.P;
  Pinv4.topLeftCorner(3, 3) = sb.Pinv;
  const VectorField back = eigen_reassemble(eigen_decompose(v, Pinv4), P4);
  for (int c = 0; c < 4; ++c) CHECK((back.comp[c] - v.comp[c]).l1() < 1e-10);
  VectorField k;
  for (int c = 0; c < 4; ++c) k.comp.push_back(FourierField::constant(3, 1, cplx(c + 1.0)));
  const VectorField kc = eigen_decompose(k, Pinv4);
  for (const auto& f : kc.comp) CHECK(f.l1() == doctest::Approx(std::abs(f.average())));
}

TEST_CASE("Lipschitz norms of parameter families") {
  SUBCASE("constant field") {
    ParamFamily f = ParamFamily::uniform(0, 1, 5);
    f.values.assign(5, VectorField({FourierField::constant(1, 1, cplx(0.75))}));
    for (int r = 0; r <= 2; ++r) CHECK(lip_norm(f, r) == doctest::Approx(0.75).epsilon(1e-14));
  }
  SUBCASE("t times a cosine") {
    // v(t) = t (chi_{0,1} + conj): sup over t in [0, 1] is 2, Lipschitz quotient is sup |2 cos| = 2
    ParamFamily f = ParamFamily::uniform(0, 1, 11);
    for (size_t i = 0; i < f.size(); ++i) {
      const double t = f.nodes[i];
      f.values[i] = VectorField({FourierField::mode(1, 1, {0, 1}, t) + FourierField::mode(1, 1, {0, -1}, t)});
    }
    const LipParts p = lip_norm_parts(f, 0);
    CHECK(p.sup == doctest::Approx(2).epsilon(1e-12));
    CHECK(p.lip == doctest::Approx(2).epsilon(1e-12));
    const std::vector<LipParts> prof = lip_norm_profile(f, 2);
    CHECK(prof[1].lip == doctest::Approx(2 * kTwoPi).epsilon(1e-12));
  }
}

TEST_CASE("near-grid evaluation") {
  const FourierField g = random_real(2, 1, 3, 31, 2);
  NearGridEvaluator ev(g, {12, 12, 12}, {0.1, 0.0, 0.3});
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1), small(-0.01, 0.01);
  std::vector<std::vector<double>> pts(3);
  const std::vector<double> shift = {0.1, 0.0, 0.3};
  for (int i = 0; i < 50; ++i) {
    for (int a = 0; a < 3; ++a) pts[a].push_back(shift[a] + std::floor(u(rng) * 12) / 12 + small(rng));
  }
  const std::vector<double> vals = ev.evaluate(pts);
  for (int i = 0; i < 50; ++i) {
    const cplx want = direct(g, {pts[0][i], pts[1][i], pts[2][i]});
    CHECK(std::abs(vals[i] - want.real()) < 1e-13);
  }
}
