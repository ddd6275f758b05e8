#include <cmath>

#include "doctest.h"
#include "kamtorus/exclusion.hpp"
#include "kamtorus/fixtures.hpp"

using namespace kt;

namespace {

const double kGolden = (std::sqrt(5.0) - 1) / 2;

// min over lambda in E and 0 < |k| <= N of |lambda - e^{2 pi i k alpha}|, one frequency
double brute_gap(double alpha, int N, const std::vector<cplx>& E) {
  double g = 1e300;
  for (const cplx& l : E)
    for (int k = -N; k <= N; ++k)
      if (k != 0) g = std::min(g, std::abs(l - std::polar(1.0, kTwoPi * k * alpha)));
  return g;
}

}  // namespace

TEST_CASE("resonance set of the cat map") {
  const std::vector<cplx> E = resonance_set(cat_map());
  REQUIRE(E.size() == 3);
  int ones = 0;
  for (const auto& l : E) ones += std::abs(l - cplx(1)) < 1e-14;
  CHECK(ones == 1);
}

TEST_CASE("Diophantine membership") {
  const auto A = cat_map();
  CHECK_FALSE(in_D({0.0}, 5, A).pass);
  CHECK_FALSE(in_D({0.5}, 2, A).pass);
  const DiophantineCert c = in_D({kGolden}, 10, A, 3);
  CHECK(c.pass);
  const double want = brute_gap(kGolden, 10, resonance_set(A));
  double got = 1e300;
  for (const auto& g : c.min_gaps) got = std::min(got, g.gap);
  CHECK(got == doctest::Approx(want).epsilon(1e-12));
  CHECK(want >= std::pow(10.0, -3));
  for (double a : {0.1, 0.2345, kGolden / 3})
    CHECK(in_D_fast({a}, 12, resonance_set(A), 3) == (brute_gap(a, 12, resonance_set(A)) >= std::pow(12.0, -3)));
}

TEST_CASE("parameter sets") {
  const ParamSet a({{0, 0.4}, {0.6, 1}}), b({{0.3, 0.7}});
  const ParamSet c = a.intersect(b);
  CHECK(c.measure() == doctest::Approx(0.2));
  CHECK(c.contains(0.35));
  CHECK_FALSE(c.contains(0.5));
  CHECK(c.interval_of(0.65) == 1);
}

TEST_CASE("exclusion on a linear frequency curve") {
  const auto A = cat_map();
  const FrequencyFamily phi = FrequencyFamily::polynomial(0, 1, {{0.0, 1.0}});
  const double N = 20, M = 2;
  const ExclusionResult r = exclude_interval({0, 1}, phi, N, M, A);
  const double Nt = exclusion_level(N);
  CHECK(Nt == 90);
  CHECK(r.cert.kept_measure >= (1 - 2.0 * r.cert.d_count * M * M / Nt) - 1e-12);
  CHECK(r.cert.verify_failures == 0);
  // independent scan: every kept point is in D(Ntilde); excluded points away from
  // the interval ends fail it or lie in a discarded fragment
  const auto E = resonance_set(A);
  const int n = 20000;
  const double step = 1.0 / n;
  int mismatches = 0;
  for (int i = 0; i <= n; ++i) {
    const double t = i * step;
    bool near_end = false;
    for (const auto& iv : r.kept.intervals()) near_end = near_end || std::abs(t - iv.lo) <= step || std::abs(t - iv.hi) <= step;
    if (near_end) continue;
    const bool good = brute_gap(t, static_cast<int>(Nt), E) >= std::pow(Nt, -3);
    if (r.kept.contains(t) && !good) ++mismatches;
  }
  CHECK(mismatches == 0);
  // every removal is centered on a resonance t = j / k
  for (double c : r.centers) {
    bool rational = false;
    for (int k = 1; k <= static_cast<int>(Nt) && !rational; ++k) rational = std::abs(c * k - std::round(c * k)) < 1e-9;
    CHECK(rational);
  }
}

TEST_CASE("exclusion rejects a slope outside (1/M, M)") {
  const FrequencyFamily phi = FrequencyFamily::polynomial(0, 1, {{0.25, 0.5}});
  CHECK_THROWS_AS(exclude_interval({0, 1}, phi, 8, 2, cat_map()), PreconditionError);
  CHECK_NOTHROW(exclude_interval({0, 1}, phi, 8, 3, cat_map()));
}

TEST_CASE("Pyartli condition") {
  CHECK(pyartli_check(FrequencyFamily::polynomial(0, 1, {{0.0, 1.0}}), 1.0).pass);
  const FrequencyFamily curve = FrequencyFamily::polynomial(0, 1, {{0.0, 1.0}, {0.0, 0.0, 0.5}});
  const PyartliResult p = pyartli_check(curve, 1.0);
  CHECK(p.pass);
  CHECK(p.min_det == doctest::Approx(1).epsilon(1e-9));
  CHECK_FALSE(pyartli_check(FrequencyFamily::polynomial(0, 1, {{0.3}}), 0.1).pass);
  // rho(a t + c): first component a t + c, second (a t + c)^2 / 2; determinant scales by a^3
  const double a = 0.5, c = 0.1;
  const FrequencyFamily re = FrequencyFamily::polynomial(0, 1, {{c, a}, {c * c / 2, a * c, a * a / 2}});
  CHECK(pyartli_check(re, 0.01).min_det == doctest::Approx(a * a * a).epsilon(1e-9));
}

TEST_CASE("exclusion for two elliptic frequencies") {
  const auto E = resonance_set(cat_map());
  const FrequencyFamily curve = FrequencyFamily::polynomial(0, 1, {{0.0, 1.0}, {0.0, 0.0, 0.5}});
  CHECK(exclude_interval_d2({0.3, 0.3}, curve, 2, 0.5, 2, E).kept.empty());
  const ExclusionResult r = exclude_interval_d2({0, 1}, curve, 2, 0.5, 2, E);
  CHECK_FALSE(r.kept.empty());
  CHECK(r.cert.verify_failures == 0);
  const int K = static_cast<int>(r.cert.Ntilde);
  const double b = 30.0 * 4;
  for (double t = 0.001; t < 1; t += 0.01) {
    if (!r.kept.contains(t)) continue;
    // brute gap over the square of multi-indices
    double g = 1e300;
    for (const cplx& l : E)
      for (int k1 = -K; k1 <= K; ++k1)
        for (int k2 = -K; k2 <= K; ++k2)
          if (k1 || k2) g = std::min(g, std::abs(l - std::polar(1.0, kTwoPi * (k1 * t + k2 * t * t / 2))));
    CHECK(g >= std::pow(K, -b));
  }
}

TEST_CASE("simultaneous Diophantine condition") {
  CHECK_FALSE(sdc_check({0.0}, {0.0}, 1.0, 1.0, 1, 0.1, 10).pass);
  // the alpha factor alone clears the threshold for the golden mean
  const double tau = 2, gamma = 0.1;
  bool alone = true;
  for (int k = 1; k <= 100; ++k) alone = alone && std::abs(1.0 - std::polar(1.0, kTwoPi * k * kGolden)) >= gamma / (k * k);
  REQUIRE(alone);
  CHECK(sdc_check({kGolden}, {0.0}, 1.0, 1.0, tau, gamma, 100).pass);
  SUBCASE("golden pair against a direct scan") {
    const double b = kGolden * kGolden;
    bool want = true;
    for (int k = -1000; k <= 1000 && want; ++k) {
      if (k == 0) continue;
      const double th = gamma / std::pow(std::abs(k), tau);
      const double x = std::abs(1.0 - std::polar(1.0, kTwoPi * k * kGolden));
      const double y = std::abs(1.0 - std::polar(1.0, kTwoPi * k * b));
      want = std::max(x, y) >= th;
    }
    CHECK(sdc_check({kGolden}, {b}, 1.0, 1.0, tau, gamma, 1000).pass == want);
  }
}
