#include "kamtorus/near_grid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace kt {

NearGridEvaluator::NearGridEvaluator(const FourierField& g, std::vector<int> shape, std::vector<double> shift)
    : d_(g.dim()), shape_(std::move(shape)), shift_(std::move(shift)) {
  if (static_cast<int>(shape_.size()) != d_) throw DimensionError("evaluator: shape dimension mismatch");
  if (shift_.empty()) shift_.assign(d_, 0.0);
  if (static_cast<int>(shift_.size()) != d_) throw DimensionError("evaluator: shift dimension mismatch");
  for (int s : shape_)
    if (s < 2 * g.box() + 1) throw PreconditionError("evaluator: grid cannot resolve the field");
  const double scale = std::max(1e-300, g.max_abs());
  if (g.hermitian_defect() > 1e-10 * scale) throw PreconditionError("evaluator: field is not real");
  for_each_index(g, [&](size_t off, const int* idx) {
    if (g[off] == cplx(0)) return;
    Coef c;
    c.k.assign(idx, idx + d_);
    double ph = 0;
    size_t pos = 0;
    for (int a = 0; a < d_; ++a) {
      ph += idx[a] * shift_[a];
      pos = pos * shape_[a] + static_cast<size_t>((idx[a] % shape_[a] + shape_[a]) % shape_[a]);
    }
    ph -= std::floor(ph);
    c.c = g[off] * std::polar(1.0, kTwoPi * ph);
    c.pos = pos;
    l1_ += std::abs(g[off]);
    coefs_.push_back(std::move(c));
  });
}

int NearGridEvaluator::choose_order(const std::vector<double>& rmax) const {
  if (coefs_.empty()) return 0;
  std::vector<double> w(coefs_.size()), term(coefs_.size());
  for (size_t i = 0; i < coefs_.size(); ++i) {
    double s = 0;
    for (int a = 0; a < d_; ++a) s += std::abs(coefs_[i].k[a]) * rmax[a];
    w[i] = kTwoPi * s;
    term[i] = std::abs(coefs_[i].c);
  }
  const double tol = std::max(rel_tol_ * l1_, abs_tol_);
  for (int p = 0; p <= max_order_; ++p) {
    // term[i] becomes |c| w^{p+1} / (p+1)!
    double t = 0;
    for (size_t i = 0; i < coefs_.size(); ++i) {
      term[i] *= w[i] / (p + 1);
      t += term[i];
    }
    if (t <= tol) return p;
  }
  throw ConvergenceError("near-grid evaluation needs a Taylor order above the cap");
}

void NearGridEvaluator::ensure_order(int p) {
  if (p <= built_order_) return;
  size_t npts = 1;
  for (int s : shape_) npts *= static_cast<size_t>(s);
  std::vector<std::vector<int>> added;
  std::vector<std::vector<double>> fresh;
  for (int q = built_order_ + 1; q <= p; ++q) {
    std::vector<std::vector<int>> deg;
    std::vector<int> a(d_, 0);
    // all alpha with |alpha|_1 = q
    std::function<void(int, int)> rec = [&](int axis, int left) {
      if (axis == d_ - 1) {
        a[axis] = left;
        deg.push_back(a);
        return;
      }
      for (int v = left; v >= 0; --v) {
        a[axis] = v;
        rec(axis + 1, left - v);
      }
    };
    rec(0, q);
    // (2 pi i k)^alpha = i^q prod (2 pi k_a)^{alpha_a}
    cplx iq(1);
    for (int e = 0; e < q; ++e) iq *= cplx(0, 1);
    std::vector<double> pk(static_cast<size_t>(d_) * (q + 1));
    // two real derivative grids per complex transform
    for (size_t i = 0; i < deg.size(); i += 2) {
      const bool pair = i + 1 < deg.size();
      CVec buf(npts, cplx(0));
      for (const auto& c : coefs_) {
        for (int ax = 0; ax < d_; ++ax) {
          double* w = &pk[static_cast<size_t>(ax) * (q + 1)];
          w[0] = 1;
          for (int e = 1; e <= q; ++e) w[e] = w[e - 1] * kTwoPi * c.k[ax];
        }
        double m1 = 1, m2 = 1;
        for (int ax = 0; ax < d_; ++ax) {
          m1 *= pk[static_cast<size_t>(ax) * (q + 1) + deg[i][ax]];
          if (pair) m2 *= pk[static_cast<size_t>(ax) * (q + 1) + deg[i + 1][ax]];
        }
        buf[c.pos] += c.c * iq * (pair ? cplx(m1, m2) : cplx(m1, 0));
      }
      fft::transform(buf.data(), shape_, +1);
      std::vector<double> g1(npts), g2;
      for (size_t j = 0; j < npts; ++j) g1[j] = buf[j].real();
      added.push_back(deg[i]);
      fresh.push_back(std::move(g1));
      if (pair) {
        g2.resize(npts);
        for (size_t j = 0; j < npts; ++j) g2[j] = buf[j].imag();
        added.push_back(deg[i + 1]);
        fresh.push_back(std::move(g2));
      }
    }
  }
  // repack node-major: all derivatives of one node are contiguous
  const size_t old = alphas_.size(), stride = old + added.size();
  std::vector<double> packed(npts * stride);
  for (size_t j = 0; j < npts; ++j) {
    for (size_t q = 0; q < old; ++q) packed[j * stride + q] = packed_[j * old + q];
    for (size_t q = 0; q < added.size(); ++q) packed[j * stride + old + q] = fresh[q][j];
  }
  packed_ = std::move(packed);
  for (auto& a : added) {
    int deg = 0;
    for (int x : a) deg += x;
    degree_.push_back(deg);
    // parent: alpha minus the unit vector of its first nonzero axis, one degree lower
    int axis = 0;
    while (deg > 0 && a[axis] == 0) ++axis;
    int parent = 0;
    if (deg > 0) {
      std::vector<int> b = a;
      --b[axis];
      parent = static_cast<int>(std::find(alphas_.begin(), alphas_.end(), b) - alphas_.begin());
    }
    parent_.push_back(parent);
    axis_.push_back(axis);
    inv_.push_back(deg > 0 ? 1.0 / a[axis] : 1.0);
    alphas_.push_back(std::move(a));
  }
  built_order_ = p;
}

std::vector<double> NearGridEvaluator::evaluate(const std::vector<std::vector<double>>& pts) {
  if (static_cast<int>(pts.size()) != d_) throw DimensionError("evaluator: point dimension mismatch");
  const size_t n = pts[0].size();
  std::vector<double> out(n, 0.0);
  if (coefs_.empty()) return out;
  std::vector<size_t> off(n, 0);
  std::vector<double> r(n * d_);
  std::vector<double> rmax(d_, 0.0);
  for (int a = 0; a < d_; ++a) {
    const double G = shape_[a];
    for (size_t i = 0; i < n; ++i) {
      double u = (pts[a][i] - shift_[a]) * G;
      double j = std::nearbyint(u);
      const double ri = (u - j) / G;
      r[i * d_ + a] = ri;
      rmax[a] = std::max(rmax[a], std::abs(ri));
      long long jj = static_cast<long long>(j) % shape_[a];
      if (jj < 0) jj += shape_[a];
      off[i] = off[i] * shape_[a] + static_cast<size_t>(jj);
    }
  }
  const int p = choose_order(rmax);
  last_order_ = p;
  ensure_order(p);
  const size_t stride = alphas_.size();
  size_t nq = 0;
  while (nq < stride && degree_[nq] <= p) ++nq;
  // monomials r^alpha / alpha!, each from its parent by one multiplication
  std::vector<double> mono(nq);
  for (size_t i = 0; i < n; ++i) {
    const double* ri = &r[i * d_];
    mono[0] = 1;
    for (size_t q = 1; q < nq; ++q) mono[q] = mono[parent_[q]] * ri[axis_[q]] * inv_[q];
    const double* g = &packed_[off[i] * stride];
    double s = 0;
    for (size_t q = 0; q < nq; ++q) s += g[q] * mono[q];
    out[i] = s;
  }
  return out;
}

}  // namespace kt
