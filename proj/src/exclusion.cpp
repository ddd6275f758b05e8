#include "kamtorus/exclusion.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace kt {

ParamSet::ParamSet(std::vector<Interval> iv) : iv_(std::move(iv)) {
  for (size_t i = 0; i < iv_.size(); ++i) {
    if (!(iv_[i].lo <= iv_[i].hi)) throw PreconditionError("ParamSet: interval with lo > hi");
    if (i > 0 && iv_[i].lo < iv_[i - 1].hi) throw PreconditionError("ParamSet: intervals overlap or are unsorted");
    measure_ += iv_[i].length();
  }
}

int ParamSet::interval_of(double t) const {
  auto it = std::upper_bound(iv_.begin(), iv_.end(), t, [](double x, const Interval& I) { return x < I.lo; });
  if (it == iv_.begin()) return -1;
  --it;
  return t <= it->hi ? static_cast<int>(it - iv_.begin()) : -1;
}

bool ParamSet::contains(double t) const { return interval_of(t) >= 0; }

ParamSet ParamSet::intersect(const ParamSet& o) const {
  std::vector<Interval> out;
  size_t i = 0, j = 0;
  while (i < iv_.size() && j < o.iv_.size()) {
    const double lo = std::max(iv_[i].lo, o.iv_[j].lo), hi = std::min(iv_[i].hi, o.iv_[j].hi);
    if (lo < hi) out.push_back({lo, hi});
    if (iv_[i].hi < o.iv_[j].hi) ++i;
    else ++j;
  }
  return ParamSet(out);
}

std::vector<cplx> resonance_set(const TorusAutomorphism& a) {
  std::vector<cplx> E{cplx(1)};
  const auto& ev = a.splitting().eigenvalues();
  for (int i = 0; i < ev.size(); ++i) {
    bool dup = false;
    for (const auto& e : E) dup = dup || std::abs(e - ev[i]) < 1e-12;
    if (!dup) E.push_back(ev[i]);
  }
  return E;
}

namespace {

double frac(double x) { return x - std::floor(x); }

double gap_at(cplx lambda, double phase) {
  const double x = frac(phase);
  if (lambda == cplx(1)) return 2 * std::abs(std::sin(M_PI * x));
  return std::abs(lambda - std::polar(1.0, kTwoPi * x));
}

// visit all k in [-N, N]^d \ {0}
void for_each_k(int d, int N, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> k(d, -N);
  while (true) {
    bool zero = std::all_of(k.begin(), k.end(), [](int x) { return x == 0; });
    if (!zero) f(k);
    int i = d - 1;
    while (i >= 0 && k[i] == N) k[i--] = -N;
    if (i < 0) break;
    ++k[i];
  }
}

double kdot(const std::vector<int>& k, const std::vector<double>& a) {
  double s = 0;
  for (size_t i = 0; i < k.size(); ++i) s += k[i] * a[i];
  return s;
}

std::string describe(const TorusAutomorphism& a) {
  std::string s = "[";
  auto rows = a.matrix().rows();
  for (size_t i = 0; i < rows.size(); ++i) {
    s += i ? ",[" : "[";
    for (size_t j = 0; j < rows[i].size(); ++j) s += (j ? "," : "") + std::to_string(rows[i][j]);
    s += "]";
  }
  return s + "]";
}

}  // namespace

DiophantineCert in_D(const std::vector<double>& alpha, int N, const std::vector<cplx>& E, double b) {
  DiophantineCert c;
  c.N = N;
  c.b = b;
  c.threshold = std::pow(static_cast<double>(N), -b);
  const int d = static_cast<int>(alpha.size());
  for (const auto& lam : E) {
    GapRecord best{lam, {}, std::numeric_limits<double>::infinity()};
    if (N >= 1)
      for_each_k(d, N, [&](const std::vector<int>& k) {
        const double g = gap_at(lam, kdot(k, alpha));
        if (g < best.gap) {
          best.gap = g;
          best.k = k;
        }
      });
    if (best.gap < c.threshold) c.pass = false;
    c.min_gaps.push_back(best);
  }
  return c;
}

DiophantineCert in_D(const std::vector<double>& alpha, int N, const TorusAutomorphism& a, double b) {
  DiophantineCert c = in_D(alpha, N, resonance_set(a), b);
  c.automorphism = describe(a);
  return c;
}

bool in_D_fast(const std::vector<double>& alpha, int N, const std::vector<cplx>& E, double b) {
  const double thr = std::pow(static_cast<double>(N), -b);
  const int d = static_cast<int>(alpha.size());
  for (const auto& lam : E) {
    if (std::abs(std::abs(lam) - 1) >= thr) continue;
    if (d == 1 && b <= 6) {
      // rotation recurrence, resynchronized every 32 steps
      const cplx z = std::polar(1.0, kTwoPi * frac(alpha[0]));
      cplx zk(1);
      for (int k = 1; k <= N; ++k) {
        zk = (k % 32 == 0) ? std::polar(1.0, kTwoPi * frac(k * alpha[0])) : zk * z;
        if (std::abs(lam - zk) < thr || std::abs(lam - std::conj(zk)) < thr) return false;
      }
      continue;
    }
    bool ok = true;
    for_each_k(d, N, [&](const std::vector<int>& k) {
      if (ok && gap_at(lam, kdot(k, alpha)) < thr) ok = false;
    });
    if (!ok) return false;
  }
  return true;
}

double exclusion_level(double N) {
  const double t = std::pow(N, 1.5);
  const double r = std::round(t);
  return std::abs(t - r) <= 1e-9 * t ? r : std::ceil(t);
}

namespace {

std::vector<Interval> merge_intervals(std::vector<Interval> v) {
  std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> out;
  for (const auto& I : v) {
    if (!out.empty() && I.lo <= out.back().hi) out.back().hi = std::max(out.back().hi, I.hi);
    else out.push_back(I);
  }
  return out;
}

// complement of the merged removals in I, split into kept and discarded pieces
void fragments(Interval I, const std::vector<Interval>& removed, double min_frag, std::vector<Interval>& kept,
               std::vector<Interval>& discarded) {
  double cur = I.lo;
  auto emit = [&](double lo, double hi) {
    if (hi <= lo) return;
    (hi - lo < min_frag ? discarded : kept).push_back({lo, hi});
  };
  for (const auto& R : removed) {
    emit(cur, R.lo);
    cur = std::max(cur, R.hi);
  }
  emit(cur, I.hi);
}

std::vector<cplx> conj_closure(const std::vector<cplx>& E) {
  std::vector<cplx> out = E;
  for (const auto& l : E) {
    bool has = false;
    for (const auto& m : out) has = has || std::abs(m - std::conj(l)) < 1e-12;
    if (!has) out.push_back(std::conj(l));
  }
  return out;
}

double bisect(const std::function<double(double)>& f, double lo, double hi, int steps) {
  // f(lo) < 0 <= f(hi) up to orientation
  const bool inc = f(hi) >= f(lo);
  for (int s = 0; s < steps; ++s) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double v = f(mid);
    if ((v < 0) == inc) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

ExclusionResult exclude_interval(Interval I, const FrequencyFamily& phi, double N, double M,
                                 const std::vector<cplx>& E, const ExclusionOptions& opt) {
  ExclusionResult res;
  auto& c = res.cert;
  c.N = N;
  c.M = M;
  c.Ntilde = exclusion_level(N);
  c.radius = M / std::pow(c.Ntilde, 3);
  c.min_fragment = 1.0 / (2 * M * c.Ntilde * c.Ntilde);
  c.input_measure = I.length();
  if (I.length() <= 0) {
    res.kept = ParamSet();
    return res;
  }
  if (I.length() < (1 - 1e-12) / (2 * M * N * N))
    throw PreconditionError("exclude_interval: interval shorter than 1/(2 M N^2)");
  const int samples = std::max(64, static_cast<int>(opt.derivative_samples * I.length()));
  for (int i = 0; i <= samples; ++i) {
    const double t = I.lo + I.length() * i / samples;
    const double dp = phi.derivative(t)[0];
    if (!(dp > 1 / M && dp < M)) throw PreconditionError("exclude_interval: frequency is not monotone within (1/M, M)");
  }
  const double thr = std::pow(c.Ntilde, -opt.b);
  std::vector<cplx> res_lams;
  for (const auto& l : conj_closure(E))
    if (std::abs(std::abs(l) - 1) < thr) res_lams.push_back(l);
  c.d_count = static_cast<int>(res_lams.size());
  const int K = static_cast<int>(c.Ntilde);
  std::vector<Interval> rem;
  for (const auto& lam : res_lams) {
    const double theta = frac(std::arg(lam) / kTwoPi);
    for (int k = 1; k <= K; ++k) {
      auto g = [&](double t) { return k * phi.at(t, 0) - theta; };
      const double ga = g(I.lo), gb = g(I.hi);
      double lo = I.lo;
      for (double j = std::ceil(ga); j <= std::floor(gb); j += 1) {
        const double r = bisect([&](double t) { return g(t) - j; }, lo, I.hi, opt.bisection_steps);
        res.centers.push_back(r);
        rem.push_back({std::max(I.lo, r - c.radius), std::min(I.hi, r + c.radius)});
        lo = r;
      }
    }
  }
  c.roots = res.centers.size();
  std::sort(res.centers.begin(), res.centers.end());
  res.removed = merge_intervals(std::move(rem));
  for (const auto& R : res.removed) c.removed_measure += R.length();
  std::vector<Interval> kept;
  fragments(I, res.removed, c.min_fragment, kept, res.discarded);
  for (const auto& D : res.discarded) c.discarded_measure += D.length();
  res.kept = ParamSet(kept);
  c.kept_measure = res.kept.measure();
  c.bound = (1 - 2.0 * c.d_count * M * M / c.Ntilde) * I.length();
  if (c.kept_measure < c.bound - 1e-12)
    throw Error("measure_bound", "exclude_interval: kept measure below the certified bound");
  if (opt.verify_density > 0) {
    c.verify_density = opt.verify_density;
    const long long n = static_cast<long long>(std::floor(I.length() / opt.verify_density));
    for (long long i = 0; i <= n; ++i) {
      const double t = I.lo + i * opt.verify_density;
      if (!res.kept.contains(t)) continue;
      ++c.verify_points;
      if (!in_D_fast(phi.at(t), K, E, opt.b)) ++c.verify_failures;
    }
  }
  return res;
}

ExclusionResult exclude_interval(Interval I, const FrequencyFamily& phi, double N, double M,
                                 const TorusAutomorphism& a, const ExclusionOptions& opt) {
  return exclude_interval(I, phi, N, M, resonance_set(a), opt);
}

ExclusionResult exclude_set(const ParamSet& S, const FrequencyFamily& phi, double N, double M,
                            const std::vector<cplx>& E, const ExclusionOptions& opt) {
  ExclusionResult out;
  auto& c = out.cert;
  c.N = N;
  c.M = M;
  c.Ntilde = exclusion_level(N);
  c.radius = M / std::pow(c.Ntilde, 3);
  c.min_fragment = 1.0 / (2 * M * c.Ntilde * c.Ntilde);
  c.verify_density = opt.verify_density;
  std::vector<Interval> kept;
  for (const auto& I : S.intervals()) {
    c.input_measure += I.length();
    if (I.length() < (1 - 1e-12) / (2 * M * N * N)) {
      out.discarded.push_back(I);
      c.discarded_measure += I.length();
      continue;
    }
    ExclusionResult r = exclude_interval(I, phi, N, M, E, opt);
    for (const auto& k : r.kept.intervals()) kept.push_back(k);
    out.centers.insert(out.centers.end(), r.centers.begin(), r.centers.end());
    out.removed.insert(out.removed.end(), r.removed.begin(), r.removed.end());
    out.discarded.insert(out.discarded.end(), r.discarded.begin(), r.discarded.end());
    c.d_count = std::max(c.d_count, r.cert.d_count);
    c.removed_measure += r.cert.removed_measure;
    c.discarded_measure += r.cert.discarded_measure;
    c.bound += r.cert.bound;
    c.roots += r.cert.roots;
    c.verify_points += r.cert.verify_points;
    c.verify_failures += r.cert.verify_failures;
  }
  out.kept = ParamSet(kept);
  c.kept_measure = out.kept.measure();
  return out;
}

namespace {

double det(std::vector<std::vector<double>> m) {
  const int n = static_cast<int>(m.size());
  double d = 1;
  for (int k = 0; k < n; ++k) {
    int p = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(m[i][k]) > std::abs(m[p][k])) p = i;
    if (m[p][k] == 0) return 0;
    if (p != k) {
      std::swap(m[p], m[k]);
      d = -d;
    }
    d *= m[k][k];
    for (int i = k + 1; i < n; ++i) {
      const double f = m[i][k] / m[k][k];
      for (int j = k; j < n; ++j) m[i][j] -= f * m[k][j];
    }
  }
  return d;
}

// j-th derivative by central differences of step h
std::vector<double> fd_derivative(const FrequencyFamily& rho, double t, int j, double h) {
  std::vector<double> r(rho.d2, 0.0);
  double binom = 1;
  for (int i = 0; i <= j; ++i) {
    const auto v = rho.at(t + (0.5 * j - i) * h);
    const double s = ((i % 2) ? -1.0 : 1.0) * binom;
    for (int c = 0; c < rho.d2; ++c) r[c] += s * v[c];
    binom = binom * (j - i) / (i + 1);
  }
  for (auto& x : r) x /= std::pow(h, j);
  return r;
}

}  // namespace

PyartliResult pyartli_check(const FrequencyFamily& rho, double nu, int nodes) {
  PyartliResult out;
  const int d = rho.d2;
  out.min_det = std::numeric_limits<double>::infinity();
  double h = (rho.t_hi - rho.t_lo) / 64;
  auto derivs = [&](double t, double step) {
    std::vector<std::vector<double>> cols;  // cols[j-1] = rho^{(j)}
    for (int j = 1; j <= d; ++j)
      cols.push_back(rho.sampled() ? fd_derivative(rho, t, j, step) : rho.poly_derivative(t, j));
    return cols;
  };
  auto det_at = [&](double t, double step) {
    auto cols = derivs(t, step);
    std::vector<std::vector<double>> m(d, std::vector<double>(d));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m[i][j] = cols[j][i];
    return std::abs(det(m));
  };
  if (rho.sampled()) {
    // refine until every node's determinant is stable to 1%
    bool stable = false;
    for (int it = 0; it < 12 && !stable; ++it) {
      stable = true;
      for (int i = 0; i < nodes && stable; ++i) {
        const double t = rho.t_lo + (rho.t_hi - rho.t_lo) * i / (nodes - 1);
        const double a = det_at(t, h), b = det_at(t, h / 2);
        if (std::abs(a - b) > 0.01 * std::max(std::abs(b), 1e-300)) stable = false;
      }
      if (!stable) h /= 2;
    }
    if (!stable) throw ConvergenceError("pyartli_check: unstable derivative estimates");
  }
  for (int i = 0; i < nodes; ++i) {
    const double t = rho.t_lo + (rho.t_hi - rho.t_lo) * i / (nodes - 1);
    const double dt = det_at(t, h);
    if (dt < out.min_det) {
      out.min_det = dt;
      out.witness_t = t;
    }
    for (double v : rho.at(t)) out.norm = std::max(out.norm, std::abs(v));
    for (const auto& col : derivs(t, h))
      for (double v : col) out.norm = std::max(out.norm, std::abs(v));
  }
  out.pass = out.min_det >= nu && out.norm <= 1 / nu;
  return out;
}

ExclusionResult exclude_interval_d2(Interval I, const FrequencyFamily& phi, double N, double nu, int d2,
                                    const std::vector<cplx>& E, const ExclusionD2Options& opt) {
  ExclusionResult res;
  auto& c = res.cert;
  c.N = N;
  c.Ntilde = exclusion_level(N);
  c.input_measure = std::max(0.0, I.length());
  if (I.length() <= 0) return res;
  if (phi.d2 != d2) throw DimensionError("exclude_interval_d2: frequency dimension mismatch");
  FrequencyFamily local = phi;
  local.t_lo = I.lo;
  local.t_hi = I.hi;
  if (!pyartli_check(local, nu).pass) throw PreconditionError("exclude_interval_d2: Pyartli condition fails");
  const double a = 4.0 * d2 + 20, b = 30.0 * d2 * d2;
  if (I.length() < std::pow(N, -a)) throw PreconditionError("exclude_interval_d2: interval shorter than N^-a");
  const double len_crit = std::pow(N, -a);
  const double small_slope = std::pow(N, -a * (d2 + 1));
  const double len_res = std::pow(N, a * (d2 + 1) - b);
  c.radius = len_res / 2;
  c.min_fragment = std::pow(c.Ntilde, -a);
  const double thr = std::pow(c.Ntilde, -b);
  std::vector<cplx> lams;
  for (const auto& l : conj_closure(E))
    if (std::abs(std::abs(l) - 1) < thr) lams.push_back(l);
  c.d_count = static_cast<int>(lams.size());
  const int K = static_cast<int>(c.Ntilde);
  std::vector<Interval> rem;
  const int S = opt.samples;
  std::vector<double> ts(S + 1);
  for (int i = 0; i <= S; ++i) ts[i] = I.lo + I.length() * i / S;
  for_each_k(d2, K, [&](const std::vector<int>& k) {
    // k and -k give conjugate resonance sets; keep the first nonzero entry positive
    for (int x : k) {
      if (x < 0) return;
      if (x > 0) break;
    }
    std::vector<double> kd(k.begin(), k.end());
    auto s = [&](double t) { return kdot(k, phi.at(t)); };
    auto sp = [&](double t) { return kdot(k, phi.derivative(t)); };
    std::vector<double> vals(S + 1);
    for (int i = 0; i <= S; ++i) vals[i] = sp(ts[i]);
    std::vector<double> cuts{I.lo};
    for (int i = 0; i < S; ++i) {
      if ((vals[i] < 0) != (vals[i + 1] < 0)) {
        const double r = bisect(sp, ts[i], ts[i + 1], opt.bisection_steps);
        cuts.push_back(r);
        rem.push_back({std::max(I.lo, r - len_crit / 2), std::min(I.hi, r + len_crit / 2)});
      } else if (i > 0 && std::abs(vals[i]) < small_slope && std::abs(vals[i]) <= std::abs(vals[i - 1]) &&
                 std::abs(vals[i]) <= std::abs(vals[i + 1])) {
        rem.push_back({std::max(I.lo, ts[i] - len_crit / 2), std::min(I.hi, ts[i] + len_crit / 2)});
      }
    }
    cuts.push_back(I.hi);
    for (const auto& lam : lams) {
      const double theta = frac(std::arg(lam) / kTwoPi);
      for (size_t br = 0; br + 1 < cuts.size(); ++br) {
        const double lo = cuts[br], hi = cuts[br + 1];
        double ga = s(lo) - theta, gb = s(hi) - theta;
        if (ga > gb) std::swap(ga, gb);
        for (double j = std::ceil(ga); j <= std::floor(gb); j += 1) {
          const double r = bisect([&](double t) { return s(t) - theta - j; }, lo, hi, opt.bisection_steps);
          res.centers.push_back(r);
          rem.push_back({std::max(I.lo, r - len_res / 2), std::min(I.hi, r + len_res / 2)});
        }
      }
    }
  });
  c.roots = res.centers.size();
  std::sort(res.centers.begin(), res.centers.end());
  res.removed = merge_intervals(std::move(rem));
  for (const auto& R : res.removed) c.removed_measure += R.length();
  std::vector<Interval> kept;
  fragments(I, res.removed, c.min_fragment, kept, res.discarded);
  for (const auto& D : res.discarded) c.discarded_measure += D.length();
  res.kept = ParamSet(kept);
  c.kept_measure = res.kept.measure();
  c.bound = (1 - 1 / c.Ntilde) * I.length();
  if (c.kept_measure < c.bound - 1e-12)
    throw Error("measure_bound", "exclude_interval_d2: kept measure below the certified bound");
  if (opt.verify_density > 0) {
    c.verify_density = opt.verify_density;
    const long long n = static_cast<long long>(std::floor(I.length() / opt.verify_density));
    for (long long i = 0; i <= n; ++i) {
      const double t = I.lo + i * opt.verify_density;
      if (!res.kept.contains(t)) continue;
      ++c.verify_points;
      if (!in_D_fast(phi.at(t), K, E, b)) ++c.verify_failures;
    }
  }
  return res;
}

SdcResult sdc_check(const std::vector<double>& alpha, const std::vector<double>& beta,
                    const std::vector<std::pair<cplx, cplx>>& pairs, double tau, double gamma, int K_max) {
  if (alpha.size() != beta.size()) throw DimensionError("sdc_check: alpha and beta dimension mismatch");
  SdcResult r;
  r.K_max = K_max;
  r.min_margin = std::numeric_limits<double>::infinity();
  const int d = static_cast<int>(alpha.size());
  for_each_k(d, K_max, [&](const std::vector<int>& k) {
    int kn = 0;
    for (int x : k) kn = std::max(kn, std::abs(x));
    const double thr = gamma / std::pow(static_cast<double>(kn), tau);
    for (const auto& [lam, mu] : pairs) {
      const double g = std::max(gap_at(lam, kdot(k, alpha)), gap_at(mu, kdot(k, beta)));
      const double margin = g - thr;
      if (margin < r.min_margin) {
        r.min_margin = margin;
        if (margin <= 0) r.witness_k = k;
      }
      if (margin <= 0) r.pass = false;
    }
  });
  return r;
}

SdcResult sdc_check(const std::vector<double>& alpha, const std::vector<double>& beta, cplx lambda, cplx mu,
                    double tau, double gamma, int K_max) {
  return sdc_check(alpha, beta, {{lambda, mu}}, tau, gamma, K_max);
}

}  // namespace kt
