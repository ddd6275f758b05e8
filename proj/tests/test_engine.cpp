#include <cmath>

#include "doctest.h"
#include "kamtorus/fixtures.hpp"
#include "kamtorus/kam_engine.hpp"

using namespace kt;

namespace {

const double kGolden = 0.6180339887498949;

ActionPair flat_pair(int nodes) {
  auto [A, B] = cubic_pair();
  ActionPair p;
  p.d1 = 3;
  p.d2 = 1;
  p.A = A;
  p.B = B;
  p.phi = FrequencyFamily::polynomial(0, 1, {{0.25, 0.5}});
  p.psi = FrequencyFamily::constant({kGolden});
  p.df = ParamFamily::uniform(0, 1, nodes);
  for (int q = 0; q < nodes; ++q) p.df.nodes[q] = (q + kGolden) / nodes;
  p.df.values.assign(nodes, VectorField::zeros(4, 3, 1, 2));
  p.dg = p.df;
  return p;
}

ConjugatedPair fixture(int nodes) {
  auto [A, B] = cubic_pair();
  ConjugatedPairOptions o;
  o.nodes = nodes;
  o.node_offset = kGolden;
  return conjugated_linear_pair(A, B, 1, FrequencyFamily::polynomial(0, 1, {{0.25, 0.5}}),
                                FrequencyFamily::constant({kGolden}), cubic_fixture_generator(1e-3), o);
}

}  // namespace

TEST_CASE("near-identity inversion") {
  const std::vector<int> shape = {8, 8};
  SUBCASE("zero displacement") {
    const InverseResult r = invert_near_identity(VectorField::zeros(2, 1, 1, 1), shape);
    for (const auto& c : r.hbar)
      for (double x : c) CHECK(x == 0);
  }
  SUBCASE("small sine mode") {
    // h = 1e-3 sin(2 pi x) in the first component
    const double eps = 1e-3;
    VectorField h = VectorField::zeros(2, 1, 1, 1);
    h.comp[0].set({1, 0}, cplx(0, -eps / 2));
    h.comp[0].set({-1, 0}, cplx(0, eps / 2));
    const InverseResult r = invert_near_identity(h, shape);
    CHECK(r.roundtrip <= 1e-11);
    const auto z = grid_points(shape);
    for (size_t i = 0; i < z[0].size(); ++i) {
      const double x = z[0][i] + r.hbar[0][i];
      CHECK(std::abs(r.hbar[0][i] + eps * std::sin(kTwoPi * x)) < 1e-14);
      CHECK(std::abs(r.hbar[1][i]) < 1e-16);
    }
  }
  SUBCASE("large displacement is rejected") {
    VectorField h = VectorField::zeros(2, 1, 1, 1);
    h.comp[0].set({1, 0}, cplx(0, -0.5));
    h.comp[0].set({-1, 0}, cplx(0, 0.5));
    CHECK_THROWS_AS(invert_near_identity(h, shape), PreconditionError);
  }
}

TEST_CASE("step on unperturbed data") {
  const ActionPair p = flat_pair(2);
  StepOptions o;
  o.grid = 8;
  const StepResult r = inductive_step(p, 8, o);
  CHECK(r.failures == 0);
  CHECK(r.eps_out == 0);
  for (size_t i = 0; i < 2; ++i) {
    for (const auto& c : r.h.values[i].comp) CHECK(c.l1() == 0);
    CHECK(r.phi_new.at(p.df.nodes[i])[0] == doctest::Approx(p.phi.at(p.df.nodes[i])[0]).epsilon(1e-15));
    CHECK(r.psi_new.at(p.df.nodes[i])[0] == doctest::Approx(kGolden).epsilon(1e-15));
  }
}

TEST_CASE("one step on the conjugated fixture") {
  const ConjugatedPair cp = fixture(2);
  StepOptions o;
  o.grid = 16;
  o.bookkeeping = true;
  const StepResult r = inductive_step(cp.pair, 8, o);
  CHECK(r.failures == 0);
  for (const auto& n : r.nodes) {
    CHECK(n.eps_out * 10 <= n.eps_in);
    CHECK(n.defect_out <= n.defect_in + 1e-10);
    CHECK(n.avg_f <= 1e-12);
    CHECK(n.avg_g <= 1e-12);
    CHECK(std::abs(n.dphi) <= n.eps_in);
  }
}

TEST_CASE("conjugacy chains") {
  auto [A, B] = cubic_pair();
  const TorusAutomorphism Abar = A.embed_with_identity(1);
  const std::vector<double> shift = {0, 0, 0, 0.3};
  const ChainCheck c = check_chain({}, Abar, shift, VectorField::zeros(4, 3, 1, 1), shift, {8, 8, 8, 8});
  CHECK(c.conj_error == 0);
  CHECK(c.roundtrip == 0);
}

TEST_CASE("scheme on unperturbed data") {
  SchemeConfig cfg;
  cfg.step.grid = 8;
  const SchemeReport r = run_scheme(flat_pair(3), cfg);
  CHECK(r.converged);
  CHECK(r.iterations.empty());
  CHECK(r.surviving_fraction == 1);
  for (const auto& n : r.nodes) {
    CHECK(n.steps == 0);
    CHECK(n.conj_error_f == 0);
    CHECK(n.conj_error_g == 0);
  }
}

TEST_CASE("rotation vector") {
  auto [A, B] = cubic_pair();
  const IntMatrix m = A.matrix();
  const double alpha = 0.3819660112501051;
  SUBCASE("product map") {
    const TorusMap f = [&](const double* x, double* out) {
      for (int i = 0; i < 3; ++i) {
        out[i] = 0;
        for (int j = 0; j < 3; ++j) out[i] += static_cast<double>(m(i, j)) * x[j];
      }
      out[3] = x[3] + alpha;
    };
    const RotationEstimate r = rotation_vector(f, 3, 1, 4, 1000);
    CHECK(std::abs(r.alpha[0] - alpha) <= 1e-12);
    CHECK(r.spread[0] <= 1e-12);
  }
  SUBCASE("conjugated map converges to the same rotation") {
    const TorusMap f = conjugated_map(A.embed_with_identity(1), {0, 0, 0, alpha}, cubic_fixture_generator(1e-3));
    const RotationEstimate r = rotation_vector(f, 3, 1, 4, 4000);
    CHECK(std::abs(r.alpha[0] - alpha) <= 1e-5);
  }
}
