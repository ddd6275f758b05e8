#include <Eigen/Eigenvalues>
#include <cmath>
#include <set>

#include "doctest.h"
#include "kamtorus/fixtures.hpp"
#include "kamtorus/lattice.hpp"

using namespace kt;

namespace {

// independent helpers on plain integer rows
using Rows = std::vector<std::vector<i64>>;

Rows mul(const Rows& a, const Rows& b) {
  const size_t d = a.size();
  Rows c(d, std::vector<i64>(d, 0));
  for (size_t i = 0; i < d; ++i)
    for (size_t j = 0; j < d; ++j)
      for (size_t k = 0; k < d; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

i64 cofactor_det(const Rows& m) {
  if (m.size() == 1) return m[0][0];
  i64 s = 0;
  for (size_t j = 0; j < m.size(); ++j) {
    Rows minor;
    for (size_t i = 1; i < m.size(); ++i) {
      std::vector<i64> r;
      for (size_t k = 0; k < m.size(); ++k)
        if (k != j) r.push_back(m[i][k]);
      minor.push_back(r);
    }
    s += (j % 2 ? -1 : 1) * m[0][j] * cofactor_det(minor);
  }
  return s;
}

// adjugate of a unimodular matrix is +-inverse
Rows inverse2(const Rows& m) {
  const i64 det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  return {{m[1][1] * det, -m[0][1] * det}, {-m[1][0] * det, m[0][0] * det}};
}

bool root_of_unity_eigenvalue(const Rows& m) {
  Eigen::MatrixXd a(m.size(), m.size());
  for (size_t i = 0; i < m.size(); ++i)
    for (size_t j = 0; j < m.size(); ++j) a(i, j) = static_cast<double>(m[i][j]);
  Eigen::EigenSolver<Eigen::MatrixXd> es(a);
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    const cplx z = es.eigenvalues()[i];
    if (std::abs(std::abs(z) - 1) > 1e-9) continue;
    // unimodular eigenvalues of an integer matrix of degree <= 3 are roots of unity of order <= 6
    for (int q = 1; q <= 6; ++q)
      if (std::abs(std::pow(z, q) - cplx(1)) < 1e-9) return true;
  }
  return false;
}

Rows power(const Rows& a, int k) {
  const size_t d = a.size();
  Rows r(d, std::vector<i64>(d, 0));
  for (size_t i = 0; i < d; ++i) r[i][i] = 1;
  Rows base = a;
  if (k < 0) {
    // inverse through the adjugate, exact for unimodular integer matrices of size 3
    const i64 det = cofactor_det(a);
    Rows inv(d, std::vector<i64>(d));
    for (size_t i = 0; i < d; ++i)
      for (size_t j = 0; j < d; ++j) {
        Rows minor;
        for (size_t p = 0; p < d; ++p) {
          if (p == j) continue;
          std::vector<i64> row;
          for (size_t q = 0; q < d; ++q)
            if (q != i) row.push_back(a[p][q]);
          minor.push_back(row);
        }
        inv[i][j] = ((i + j) % 2 ? -1 : 1) * cofactor_det(minor) * det;
      }
    base = inv;
    k = -k;
  }
  for (int i = 0; i < k; ++i) r = mul(r, base);
  return r;
}

}  // namespace

TEST_CASE("determinant and characteristic polynomial") {
  const Rows cat = {{2, 1}, {1, 1}};
  CHECK(determinant(IntMatrix::from_rows(cat)) == cofactor_det(cat));
  const Rows m3 = {{0, 0, -1}, {1, 0, 3}, {0, 1, 0}};
  CHECK(determinant(IntMatrix::from_rows(m3)) == cofactor_det(m3));
  const Rows m4 = {{2, 1, 0, 3}, {1, -1, 4, 0}, {0, 2, 1, 1}, {5, 0, 1, -2}};
  CHECK(determinant(IntMatrix::from_rows(m4)) == cofactor_det(m4));
  // x^2 - 3x + 1
  CHECK(characteristic_polynomial(IntMatrix::from_rows(cat)) == IVec{1, -3, 1});
  // companion of x^3 - 3x + 1
  CHECK(characteristic_polynomial(IntMatrix::from_rows(m3)) == IVec{1, -3, 0, 1});
}

TEST_CASE("integer products are overflow checked") {
  CHECK_THROWS_AS(checked_mul(std::int64_t(1) << 40, std::int64_t(1) << 40), OverflowError);
  CHECK(checked_add(2, 3) == 5);
}

TEST_CASE("commuting pairs") {
  const auto A = cat_map();
  CHECK(check_commuting(A, A * A));
  CHECK(check_commuting(A, TorusAutomorphism::identity(2)));
  const Rows u = {{1, 1}, {0, 1}}, l = {{1, 0}, {1, 1}};
  const bool oracle = mul(u, l) == mul(l, u);
  CHECK_FALSE(oracle);
  CHECK(check_commuting(TorusAutomorphism::from_rows(u), TorusAutomorphism::from_rows(l)) == oracle);
  auto [P, Q] = cubic_pair();
  CHECK(mul(P.matrix().rows(), Q.matrix().rows()) == mul(Q.matrix().rows(), P.matrix().rows()));
  CHECK(check_commuting(P, Q));
}

TEST_CASE("ergodicity") {
  CHECK(is_ergodic(cat_map()));
  CHECK_FALSE(is_ergodic(TorusAutomorphism::identity(2)));
  CHECK_FALSE(is_ergodic(TorusAutomorphism::from_rows({{0, -1}, {1, 0}})));
  CHECK_FALSE(is_ergodic(TorusAutomorphism::from_rows({{1, 1}, {0, 1}})));
  // order 6 rotation
  CHECK_FALSE(is_ergodic(TorusAutomorphism::from_rows({{0, -1}, {1, 1}})));
  auto [P, Q] = cubic_pair();
  CHECK(is_ergodic(P) == !root_of_unity_eigenvalue(P.matrix().rows()));
  CHECK(is_ergodic(Q) == !root_of_unity_eigenvalue(Q.matrix().rows()));
}

TEST_CASE("higher-rank condition") {
  const auto A = cat_map();
  SUBCASE("cyclic pair fails with a witness") {
    const HrReport r = check_hr_report(A, A, 3);
    CHECK_FALSE(r.pass);
    REQUIRE(r.witness.has_value());
    const auto [k, l] = *r.witness;
    CHECK(std::max(std::abs(k), std::abs(l)) <= 3);
    CHECK((k != 0 || l != 0));
    CHECK_FALSE(is_ergodic(A.power(k) * A.power(l)));
  }
  SUBCASE("pair with the identity fails") {
    const HrReport r = check_hr_report(A, TorusAutomorphism::identity(2), 2);
    CHECK_FALSE(r.pass);
    REQUIRE(r.witness.has_value());
    CHECK(r.witness->first == 0);
  }
  SUBCASE("cubic pair passes at K = 5 against an independent sweep") {
    auto [P, Q] = cubic_pair();
    const Rows p = P.matrix().rows(), q = Q.matrix().rows();
    int products = 0;
    bool all = true;
    for (int k = -5; k <= 5; ++k)
      for (int l = -5; l <= 5; ++l) {
        if (k == 0 && l == 0) continue;
        ++products;
        all = all && !root_of_unity_eigenvalue(mul(power(p, k), power(q, l)));
      }
    CHECK(products == 120);
    CHECK(all);
    CHECK(check_hr(P, Q, 5));
  }
}

TEST_CASE("dual orbit") {
  const auto A = cat_map();
  CHECK(dual_orbit(A, {1, 0}, 0) == IVec{1, 0});
  // (A^t)^{-1} = [[1, -1], [-1, 2]] applied twice by hand
  CHECK(dual_orbit(A, {1, 0}, 1) == IVec{1, -1});
  CHECK(dual_orbit(A, {1, 0}, 2) == IVec{2, -3});
  const IVec n = {3, -7};
  CHECK(dual_orbit(A, dual_orbit(A, n, 1), -1) == n);
  CHECK(dual_orbit(A, dual_orbit(A, n, 5), -5) == n);
  const Rows inv = inverse2(A.matrix().transpose().rows());
  CHECK(A.dual().rows() == inv);
}

TEST_CASE("pivot against a projection scan") {
  const auto A = cat_map();
  // A* is symmetric: orthogonal eigenprojections
  Eigen::Matrix2d ad;
  ad << 1, -1, -1, 2;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(ad);
  const Eigen::Vector2d con = es.eigenvectors().col(0), ex = es.eigenvectors().col(1);
  auto oracle = [&](IVec n) {
    int last = 0;
    bool found = false;
    for (int k = -10; k <= 10; ++k) {
      const IVec m = dual_orbit(A, n, k);
      const Eigen::Vector2d x(static_cast<double>(m[0]), static_cast<double>(m[1]));
      if (std::abs(con.dot(x)) >= std::abs(ex.dot(x))) {
        last = k;
        found = true;
      }
    }
    REQUIRE(found);
    return last;
  };
  for (IVec n : {IVec{1, 0}, IVec{0, 1}, IVec{3, -2}, IVec{-5, 8}, IVec{13, 21}}) {
    const Pivot p = find_pivot(A, n);
    const int k = oracle(n);
    CHECK(p.shift == k);
    CHECK(p.point == dual_orbit(A, n, k));
    // a pivot is its own pivot
    const Pivot q = find_pivot(A, p.point);
    CHECK(q.shift == 0);
    CHECK(q.point == p.point);
  }
}

TEST_CASE("orbit points in a box against direct iteration") {
  auto [P, Q] = cubic_pair();
  for (IVec n : {IVec{1, 0, 0}, IVec{2, -1, 3}, IVec{0, 4, -4}}) {
    std::set<IVec> want;
    for (int k = -60; k <= 60; ++k) {
      IVec m = n;
      const IntMatrix& step = k >= 0 ? P.dual() : P.dual_inverse();
      bool escaped = false;
      for (int j = 0; j < std::abs(k) && !escaped; ++j) {
        m = step * m;
        escaped = max_abs(m) > 1000000;
      }
      if (!escaped && max_abs(m) <= 6) want.insert(m);
    }
    std::set<IVec> got;
    for (const auto& o : orbit_in_box(P, n, 6)) {
      got.insert(o.n);
      CHECK(dual_orbit(P, n, o.shift) == o.n);
    }
    CHECK(got == want);
  }
}

TEST_CASE("Katznelson bound for the cat map") {
  const double phi = (1 + std::sqrt(5.0)) / 2;
  const KatznelsonBound kb = katznelson_bound(cat_map(), {1, 0});
  // expanding eigenvector of A* is (1, -phi)
  CHECK(kb.exp_norm == doctest::Approx(1 / std::sqrt(1 + phi * phi)).epsilon(1e-12));
  CHECK(kb.exp_norm >= kb.floor);
  CHECK(kb.C > 0);
}

TEST_CASE("simultaneous eigenbasis") {
  const auto A = cat_map();
  SUBCASE("(A, A^2) pairs (lambda, lambda^2)") {
    const SimultaneousBasis sb = simultaneous_eigenbasis(A, A * A);
    REQUIRE(sb.pairs.size() == 2);
    for (const auto& p : sb.pairs) CHECK(std::abs(p.mu - p.lambda * p.lambda) < 1e-12);
  }
  SUBCASE("(A, Id) pairs (lambda, 1)") {
    const SimultaneousBasis sb = simultaneous_eigenbasis(A, TorusAutomorphism::identity(2));
    for (const auto& p : sb.pairs) CHECK(std::abs(p.mu - cplx(1)) < 1e-12);
  }
  SUBCASE("cubic pair: three real pairs with small residuals") {
    auto [P, Q] = cubic_pair();
    const SimultaneousBasis sb = simultaneous_eigenbasis(P, Q);
    REQUIRE(sb.pairs.size() == 3);
    const Eigen::MatrixXd p = P.matrix().to_double(), q = Q.matrix().to_double();
    for (const auto& e : sb.pairs) {
      CHECK(std::abs(e.lambda.imag()) < 1e-12);
      CHECK(std::abs(e.mu.imag()) < 1e-12);
      CHECK((p.cast<cplx>() * e.vector - e.lambda * e.vector).norm() < 1e-10);
      CHECK((q.cast<cplx>() * e.vector - e.mu * e.vector).norm() < 1e-10);
    }
  }
}
