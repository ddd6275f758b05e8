#include "kamtorus/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "kamtorus/near_grid.hpp"

namespace kt {

namespace {

// k is the representative of {k, -k} when its first nonzero entry is positive
bool leading_positive(const int* k, int d) {
  for (int a = 0; a < d; ++a)
    if (k[a] != 0) return k[a] > 0;
  return true;
}

FourierField random_scalar(const SampleSpec& spec, int box, unsigned seed, int sample, int comp, int part,
                           double scale) {
  FourierField f(spec.d1, spec.d2, box);
  const int d = f.dim();
  std::vector<int> neg(d);
  for_each_index(f, [&](size_t off, const int* k) {
    if (!leading_positive(k, d)) return;
    // splitmix64 over the key (seed, sample, component, part, k) gives the phase
    std::uint64_t x = seed;
    auto mix = [&x](std::uint64_t v) {
      x += v + 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      x = z ^ (z >> 31);
    };
    mix(static_cast<std::uint64_t>(sample));
    mix(static_cast<std::uint64_t>(comp));
    mix(static_cast<std::uint64_t>(part));
    double n2 = 0;
    for (int a = 0; a < d; ++a) {
      mix(static_cast<std::uint64_t>(k[a] + 4096));
      n2 += static_cast<double>(k[a]) * k[a];
    }
    const double phase = static_cast<double>(x >> 11) * 0x1.0p-53;
    const double mod = scale * std::pow(std::max(1.0, std::sqrt(n2)), -spec.decay);
    bool zero = true;
    for (int a = 0; a < d; ++a) zero = zero && k[a] == 0;
    if (zero) {
      f[off] = mod * std::cos(kTwoPi * phase);
      return;
    }
    const cplx c = 0.5 * std::polar(mod, kTwoPi * phase);
    f[off] = c;
    for (int a = 0; a < d; ++a) neg[a] = -k[a];
    f.set(neg, std::conj(c));
  });
  return f;
}

double lipn(const ParamFamily& f, int s) { return lip_norm(f, s); }

// ||f||_{lip,r} for r = 0..rmax
std::vector<double> lipv(const ParamFamily& f, int rmax) {
  std::vector<double> out;
  for (const auto& p : lip_norm_profile(f, rmax)) out.push_back(std::max(p.sup, p.lip));
  return out;
}

ParamFamily scaled(ParamFamily f, double s) {
  for (auto& v : f.values) v *= s;
  return f;
}

ParamFamily with_values(const ParamFamily& like, std::vector<VectorField> values) {
  ParamFamily out = like;
  out.values = std::move(values);
  return out;
}

// one component of every node
ParamFamily component(const ParamFamily& f, int c) {
  ParamFamily out = f;
  for (auto& v : out.values) v = VectorField({v.comp[c]});
  return out;
}

double relative_change(double a, double b) {
  if (a == 0 && b == 0) return 0;
  return std::abs(b - a) / std::max(std::abs(a), 1e-300);
}

void finish(EstimateReport& r, const LabOptions& opt) {
  r.seed = opt.seed;
  r.sample_count = opt.samples;
  r.drift_tol = opt.drift_tol;
  r.ratio_threshold = opt.ratio_threshold;
  r.max_ratio = 0;
  r.drift = 0;
  r.sample_drift = 0;
  for (auto& lv : r.levels) {
    lv.max_ratio = 0;
    lv.max_ratio_half = 0;
    for (size_t i = 0; i < lv.samples.size(); ++i) {
      const double q = lv.samples[i].ratio();
      lv.max_ratio = std::max(lv.max_ratio, q);
      if (2 * i < lv.samples.size()) lv.max_ratio_half = std::max(lv.max_ratio_half, q);
    }
    r.max_ratio = std::max(r.max_ratio, lv.max_ratio);
    r.sample_drift = std::max(r.sample_drift, relative_change(lv.max_ratio_half, lv.max_ratio));
  }
  for (size_t j = 1; j < r.levels.size(); ++j)
    r.drift = std::max(r.drift, relative_change(r.levels[j - 1].max_ratio, r.levels[j].max_ratio));
  r.pass = std::isfinite(r.max_ratio) && r.max_ratio <= opt.ratio_threshold && r.drift <= opt.drift_tol;
}

template <class Fn>
EstimateReport run_levels(const std::string& id, const LabOptions& opt, Fn&& sample) {
  if (opt.samples < 1) throw PreconditionError("estimates: no samples");
  if (opt.boxes.empty()) throw PreconditionError("estimates: no box levels");
  EstimateReport r;
  r.id = id;
  for (int box : opt.boxes) {
    EstimateLevel lv;
    lv.box = box;
    for (int i = 0; i < opt.samples; ++i) {
      const EstimateSample s = sample(box, i, r);
      if (!(s.rhs > 0)) {
        ++r.skipped;
        continue;
      }
      lv.samples.push_back(s);
    }
    r.levels.push_back(std::move(lv));
  }
  finish(r, opt);
  return r;
}

GridVec grid_values(const VectorField& f, int G) {
  GridVec out;
  for (const auto& c : f.comp) out.push_back(to_real_grid(c, G).v);
  return out;
}

VectorField field_of(const GridVec& g, int G, int d1, int d2, int box) {
  VectorField out;
  const std::vector<int> shape(d1 + d2, G);
  for (const auto& c : g) out.comp.push_back(from_real_grid(RGrid{shape, c}, d1, d2, box));
  return out;
}

// f(z + g) - f(z) and, when `remainder`, minus Df g as well
VectorField difference_field(const VectorField& f, const VectorField& g, bool remainder, int G, int out_box,
                             double tol) {
  const int d = f.comp[0].dim();
  const GridVec gv = grid_values(g, G);
  GridVec out = compose_on_grid(f, gv, G, tol);
  const GridVec fv = grid_values(f, G);
  for (size_t c = 0; c < out.size(); ++c)
    for (size_t i = 0; i < out[c].size(); ++i) out[c][i] -= fv[c][i];
  if (remainder)
    for (size_t c = 0; c < out.size(); ++c)
      for (int a = 0; a < d; ++a) {
        std::vector<int> e(d, 0);
        e[a] = 1;
        const std::vector<double> da = to_real_grid(derivative(f.comp[c], e), G).v;
        for (size_t i = 0; i < out[c].size(); ++i) out[c][i] -= da[i] * gv[a][i];
      }
  return field_of(out, G, f.comp[0].d1(), f.comp[0].d2(), out_box);
}

}  // namespace

ParamFamily random_family(const SampleSpec& spec, int box, unsigned seed, int sample) {
  if (spec.nodes < 2) throw PreconditionError("random_family: need at least two nodes");
  if (box < 1) throw PreconditionError("random_family: box must be positive");
  std::vector<FourierField> a, b;
  for (int c = 0; c < spec.components; ++c) {
    a.push_back(random_scalar(spec, box, seed, sample, c, 0, spec.amplitude));
    b.push_back(random_scalar(spec, box, seed, sample, c, 1, spec.amplitude * spec.slope));
  }
  ParamFamily f = ParamFamily::uniform(0, 1, spec.nodes);
  for (int j = 0; j < spec.nodes; ++j) {
    const double t = f.nodes[j];
    VectorField v;
    for (int c = 0; c < spec.components; ++c) v.comp.push_back(a[c] + cplx(t) * b[c]);
    f.values[j] = std::move(v);
  }
  return f;
}

GridVec compose_on_grid(const VectorField& f, const GridVec& g, int G, double eval_tol) {
  const int d = f.comp.empty() ? 0 : f.comp[0].dim();
  if (static_cast<int>(g.size()) != d) throw DimensionError("compose_on_grid: displacement dimension mismatch");
  const std::vector<int> shape(d, G);
  GridVec pts = grid_points(shape);
  for (int a = 0; a < d; ++a)
    for (size_t i = 0; i < pts[a].size(); ++i) pts[a][i] += g[a][i];
  GridVec out;
  for (const auto& c : f.comp) {
    NearGridEvaluator ev(c, shape);
    ev.set_absolute_tolerance(eval_tol);
    out.push_back(ev.evaluate(pts));
  }
  return out;
}

EstimateReport verify_interpolation(const LabOptions& opt, int s1, int s2, double a1, double a2) {
  if (a1 < 0 || a2 < 0 || std::abs(a1 + a2 - 1) > 1e-12) throw PreconditionError("interpolation: a1 + a2 must be 1");
  const double sr = a1 * s1 + a2 * s2;
  const int s = static_cast<int>(std::lround(sr));
  if (std::abs(sr - s) > 1e-12 || s1 < 0 || s2 < 0) throw PreconditionError("interpolation: s must be an integer");
  SampleSpec spec = opt.spec;
  spec.components = 1;
  return run_levels("interpolation", opt, [&](int box, int i, EstimateReport&) {
    const std::vector<double> n = lipv(random_family(spec, box, opt.seed, i), std::max(s1, s2));
    return EstimateSample{n[s], std::pow(n[s1], a1) * std::pow(n[s2], a2)};
  });
}

EstimateReport verify_product(const LabOptions& opt, int s) {
  SampleSpec spec = opt.spec;
  spec.components = 2;
  return run_levels("product", opt, [&](int box, int i, EstimateReport&) {
    const ParamFamily fg = random_family(spec, box, opt.seed, i);
    const ParamFamily f = component(fg, 0), g = component(fg, 1);
    std::vector<VectorField> prod;
    for (const auto& v : fg.values) prod.push_back(VectorField({multiply(v.comp[0], v.comp[1], 2 * box)}));
    const ParamFamily p = with_values(f, std::move(prod));
    const std::vector<double> nf = lipv(f, s), ng = lipv(g, s);
    return EstimateSample{lipn(p, s), nf[s] * ng[0] + nf[0] * ng[s]};
  });
}

namespace {

EstimateReport composition_report(const LabOptions& opt, int s, double g_size, bool remainder) {
  SampleSpec spec = opt.spec;
  const int d = spec.d1 + spec.d2;
  spec.components = 2 * d;
  const int shift = remainder ? 2 : 1;
  return run_levels(remainder ? "composition_remainder" : "composition_difference", opt,
                    [&](int box, int i, EstimateReport&) {
                      const ParamFamily fg = random_family(spec, box, opt.seed, i);
                      ParamFamily f = fg, g = fg;
                      for (size_t j = 0; j < fg.values.size(); ++j) {
                        f.values[j].comp.assign(fg.values[j].comp.begin(), fg.values[j].comp.begin() + d);
                        g.values[j].comp.assign(fg.values[j].comp.begin() + d, fg.values[j].comp.end());
                      }
                      std::vector<double> ng = lipv(g, s + shift);
                      const double gs = g_size / std::max(ng[0], 1e-300);
                      for (double& x : ng) x *= gs;
                      g = scaled(g, gs);
                      const int G = default_grid(box), ob = box;
                      std::vector<VectorField> hv;
                      for (size_t j = 0; j < f.values.size(); ++j)
                        hv.push_back(difference_field(f.values[j], g.values[j], remainder, G, ob, opt.eval_tol));
                      const ParamFamily h = with_values(f, std::move(hv));
                      const double lhs = remainder ? lip_norm_parts(h, s).sup : lipn(h, s);
                      const std::vector<double> nf = lipv(f, s + shift);
                      return EstimateSample{lhs, nf[0] * ng[s + shift] + nf[s + shift] * ng[0]};
                    });
}

}  // namespace

EstimateReport verify_composition_difference(const LabOptions& opt, int s, double g_size) {
  return composition_report(opt, s, g_size, false);
}

EstimateReport verify_composition_remainder(const LabOptions& opt, int s, double g_size) {
  return composition_report(opt, s, g_size, true);
}

std::vector<EstimateReport> verify_product_and_composition(const LabOptions& opt, int s) {
  return {verify_product(opt, s), verify_composition_difference(opt, s), verify_composition_remainder(opt, s)};
}

EstimateReport verify_inversion(const LabOptions& opt, int s, double min_size, double max_size) {
  if (!(0 < min_size && min_size <= max_size && max_size < 0.5))
    throw PreconditionError("inversion: sizes must satisfy 0 < min <= max < 1/2");
  SampleSpec spec = opt.spec;
  spec.components = spec.d1 + spec.d2;
  EstimateReport r = run_levels("inversion", opt, [&](int box, int i, EstimateReport& rep) {
    std::seed_seq sq{opt.seed, static_cast<unsigned>(i), 7u};
    std::mt19937_64 rng(sq);
    const double size = std::uniform_real_distribution<double>(min_size, max_size)(rng);
    ParamFamily h = random_family(spec, box, opt.seed, i);
    const std::vector<double> n0 = lipv(h, std::max(s, 1));
    h = scaled(h, size / std::max(n0[1], 1e-300));
    // the inverse is not band-limited: keep twice the box on an 8x grid
    const int G = default_grid(2 * box), ob = 2 * box;
    const std::vector<int> shape(spec.components, G);
    InverseOptions io;
    io.eval_tol = opt.eval_tol;
    std::vector<VectorField> hb;
    for (const auto& v : h.values) {
      const InverseResult inv = invert_near_identity(v, shape, io);
      rep.max_roundtrip = std::max(rep.max_roundtrip, inv.roundtrip);
      rep.max_iterations = std::max(rep.max_iterations, inv.iterations);
      hb.push_back(field_of(inv.hbar, G, spec.d1, spec.d2, ob));
    }
    const double scale = size / std::max(n0[1], 1e-300);
    rep.max_h_norm = std::max(rep.max_h_norm, size);
    return EstimateSample{lipn(with_values(h, std::move(hb)), s), scale * n0[s]};
  });
  r.pass = r.pass && r.max_roundtrip <= 1e-11;
  return r;
}

std::vector<ScalingPoint> composition_remainder_scaling(const VectorField& f, const VectorField& g,
                                                        const std::vector<double>& factors, int grid) {
  if (f.size() != g.size()) throw DimensionError("scaling: f and g differ in size");
  const int box = std::max(f.box(), g.box());
  const int G = grid > 0 ? grid : default_grid(std::max(box, 1));
  std::vector<ScalingPoint> out;
  for (double s : factors) {
    const VectorField gs = cplx(s) * g;
    const GridVec gv = grid_values(gs, G);
    GridVec k = compose_on_grid(f, gv, G);
    const int d = f.comp[0].dim();
    for (size_t c = 0; c < k.size(); ++c) {
      const std::vector<double> fv = to_real_grid(f.comp[c], G).v;
      for (size_t i = 0; i < k[c].size(); ++i) k[c][i] -= fv[i];
      for (int a = 0; a < d; ++a) {
        std::vector<int> e(d, 0);
        e[a] = 1;
        const std::vector<double> da = to_real_grid(derivative(f.comp[c], e), G).v;
        for (size_t i = 0; i < k[c].size(); ++i) k[c][i] -= da[i] * gv[a][i];
      }
    }
    ScalingPoint p;
    for (const auto& c : gv)
      for (double x : c) p.g_size = std::max(p.g_size, std::abs(x));
    for (const auto& c : k)
      for (double x : c) p.k_sup = std::max(p.k_sup, std::abs(x));
    out.push_back(p);
  }
  return out;
}

std::vector<InversionPoint> inversion_sweep(const ParamFamily& h, const std::vector<double>& amplitudes, int s,
                                            double eval_tol) {
  if (h.values.empty()) throw PreconditionError("inversion_sweep: empty family");
  const int d1 = h.values[0].comp[0].d1(), d2 = h.values[0].comp[0].d2();
  const int box = std::max(h.values[0].box(), 1);
  const int G = default_grid(2 * box), ob = 2 * box;
  const std::vector<int> shape(d1 + d2, G);
  InverseOptions io;
  io.eval_tol = eval_tol;
  std::vector<InversionPoint> out;
  for (double a : amplitudes) {
    const ParamFamily ha = scaled(h, a);
    InversionPoint p;
    p.amplitude = a;
    p.h_norm1 = lipn(ha, 1);
    std::vector<VectorField> hb;
    for (const auto& v : ha.values) {
      const InverseResult inv = invert_near_identity(v, shape, io);
      p.roundtrip = std::max(p.roundtrip, inv.roundtrip);
      p.iterations = std::max(p.iterations, inv.iterations);
      hb.push_back(field_of(inv.hbar, G, d1, d2, ob));
    }
    const double rhs = lipn(ha, s);
    p.ratio = rhs > 0 ? lipn(with_values(ha, std::move(hb)), s) / rhs : 0;
    out.push_back(p);
  }
  return out;
}

}  // namespace kt
