#include <cmath>

#include "doctest.h"
#include "kamtorus/estimates.hpp"

using namespace kt;

namespace {

LabOptions small_lab() {
  LabOptions o;
  o.samples = 4;
  o.boxes = {4, 8};
  return o;
}

VectorField sine_field(int components, double size) {
  // components-valued field on T^2 with a single sine mode in the first component
  VectorField v = VectorField::zeros(components, 1, 1, 1);
  v.comp[0].set({1, 0}, cplx(0, -size / 2));
  v.comp[0].set({-1, 0}, cplx(0, size / 2));
  return v;
}

}  // namespace

TEST_CASE("interpolation with equal orders") {
  const EstimateReport r = verify_interpolation(small_lab(), 1, 1, 0.5, 0.5);
  for (const auto& lv : r.levels)
    for (const auto& s : lv.samples) CHECK(s.ratio() == doctest::Approx(1).epsilon(1e-12));
}

TEST_CASE("interpolation of a constant field") {
  ParamFamily f = ParamFamily::uniform(0, 1, 2);
  f.values.assign(2, VectorField({FourierField::constant(1, 1, cplx(0.3))}));
  const double lhs = lip_norm(f, 1);
  const double rhs = std::pow(lip_norm(f, 0), 0.5) * std::pow(lip_norm(f, 2), 0.5);
  CHECK(lhs / rhs == doctest::Approx(1).epsilon(1e-14));
}

TEST_CASE("composition remainder") {
  const VectorField f = random_family({1, 1, 2}, 3, 7, 0).values[0];
  const VectorField g = random_family({1, 1, 2}, 3, 8, 0).values[0];
  SUBCASE("zero displacement") {
    const auto pts = composition_remainder_scaling(f, g, {0.0});
    CHECK(pts[0].k_sup == 0);
  }
  SUBCASE("quadratic in the displacement") {
    const auto pts = composition_remainder_scaling(f, g, {0.02, 0.01});
    REQUIRE(pts[0].k_sup > 0);
    CHECK(pts[1].k_sup / pts[0].k_sup == doctest::Approx(0.25).epsilon(0.2));
  }
}

TEST_CASE("product estimate is symmetric") {
  const ParamFamily a = random_family({1, 1, 1}, 4, 3, 0), b = random_family({1, 1, 1}, 4, 3, 1);
  auto prod = [](const ParamFamily& x, const ParamFamily& y) {
    ParamFamily p = x;
    for (size_t i = 0; i < p.size(); ++i) p.values[i].comp[0] = multiply(x.values[i].comp[0], y.values[i].comp[0], 8);
    return p;
  };
  const int s = 1;
  auto ratio = [&](const ParamFamily& x, const ParamFamily& y) {
    return lip_norm(prod(x, y), s) / (lip_norm(x, s) * lip_norm(y, 0) + lip_norm(x, 0) * lip_norm(y, s));
  };
  CHECK(ratio(a, b) == doctest::Approx(ratio(b, a)).epsilon(1e-12));
}

TEST_CASE("inversion constants") {
  ParamFamily h = ParamFamily::uniform(0, 1, 2);
  h.values.assign(2, sine_field(2, 1.0));
  SUBCASE("stable under amplitude halving") {
    const auto pts = inversion_sweep(h, {0.02, 0.01}, 1);
    CHECK(pts[1].ratio == doctest::Approx(pts[0].ratio).epsilon(0.05));
    for (const auto& p : pts) CHECK(p.roundtrip <= 1e-11);
  }
  SUBCASE("near the size limit") {
    const double unit = inversion_sweep(h, {1e-3}, 1)[0].h_norm1 / 1e-3;
    const auto pts = inversion_sweep(h, {0.49 / unit}, 1);
    CHECK(pts[0].h_norm1 == doctest::Approx(0.49).epsilon(1e-9));
    CHECK(pts[0].roundtrip <= 1e-11);
  }
}

TEST_CASE("estimate lab reports") {
  const EstimateReport r = verify_composition_difference(small_lab(), 1);
  CHECK(r.levels.size() == 2);
  CHECK(r.sample_count == 4);
  CHECK(r.max_ratio > 0);
  CHECK(r.max_ratio < r.ratio_threshold);
}
