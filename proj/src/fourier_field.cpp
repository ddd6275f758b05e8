#include "kamtorus/fourier_field.hpp"

#include <algorithm>
#include <cmath>

namespace kt {

FourierField::FourierField(int d1, int d2, int box) : d1_(d1), d2_(d2), box_(box) {
  if (d1 < 0 || d2 < 0 || d1 + d2 == 0) throw DimensionError("field needs positive total dimension");
  if (box < 0) throw DimensionError("negative box");
  size_t n = 1;
  for (int a = 0; a < d1 + d2; ++a) n *= static_cast<size_t>(2 * box + 1);
  c_.assign(n, cplx(0));
}

FourierField FourierField::constant(int d1, int d2, cplx c) {
  FourierField f(d1, d2, 0);
  f.c_[0] = c;
  return f;
}

FourierField FourierField::mode(int d1, int d2, const std::vector<int>& idx, cplx c, int box) {
  if (static_cast<int>(idx.size()) != d1 + d2) throw DimensionError("mode index dimension mismatch");
  int b = 0;
  for (int x : idx) b = std::max(b, std::abs(x));
  FourierField f(d1, d2, box < 0 ? b : box);
  f.set(idx, c);
  return f;
}

size_t FourierField::offset(const int* idx) const {
  size_t off = 0;
  const size_t e = static_cast<size_t>(extent());
  for (int a = 0; a < dim(); ++a) off = off * e + static_cast<size_t>(idx[a] + box_);
  return off;
}

void FourierField::index(size_t off, int* idx) const {
  const size_t e = static_cast<size_t>(extent());
  for (int a = dim() - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(off % e) - box_;
    off /= e;
  }
}

bool FourierField::in_box(const int* idx) const {
  for (int a = 0; a < dim(); ++a)
    if (idx[a] < -box_ || idx[a] > box_) return false;
  return true;
}

cplx FourierField::get(const std::vector<int>& idx) const {
  if (static_cast<int>(idx.size()) != dim()) throw DimensionError("index dimension mismatch");
  return in_box(idx.data()) ? c_[offset(idx.data())] : cplx(0);
}

void FourierField::set(const std::vector<int>& idx, cplx c) {
  if (static_cast<int>(idx.size()) != dim()) throw DimensionError("index dimension mismatch");
  if (!in_box(idx.data())) throw OverflowError("index outside the storage box");
  c_[offset(idx.data())] = c;
}

FourierField FourierField::with_box(int b) const {
  if (b == box_) return *this;
  FourierField r(d1_, d2_, b);
  for_each_index(*this, [&](size_t off, const int* idx) {
    if (c_[off] != cplx(0) && r.in_box(idx)) r.c_[r.offset(idx)] = c_[off];
  });
  return r;
}

int FourierField::support_radius(double tol) const {
  int r = 0;
  for_each_index(*this, [&](size_t off, const int* idx) {
    if (std::abs(c_[off]) > tol)
      for (int a = 0; a < dim(); ++a) r = std::max(r, std::abs(idx[a]));
  });
  return r;
}

// With the symmetric cube layout the offset of -k is (size - 1 - offset(k)).
double FourierField::hermitian_defect() const {
  double m = 0;
  const size_t n = c_.size();
  for (size_t i = 0; i < n; ++i) m = std::max(m, std::abs(c_[n - 1 - i] - std::conj(c_[i])));
  return m;
}

FourierField FourierField::conj_reflect() const {
  FourierField r = *this;
  const size_t n = c_.size();
  for (size_t i = 0; i < n; ++i) r.c_[i] = std::conj(c_[n - 1 - i]);
  return r;
}

FourierField FourierField::real_part() const {
  FourierField r = *this;
  const size_t n = c_.size();
  for (size_t i = 0; i < n; ++i) r.c_[i] = 0.5 * (c_[i] + std::conj(c_[n - 1 - i]));
  return r;
}

cplx FourierField::average() const { return c_.empty() ? cplx(0) : c_[c_.size() / 2]; }

double FourierField::max_abs() const {
  double m = 0;
  for (const auto& x : c_) m = std::max(m, std::abs(x));
  return m;
}

double FourierField::l1() const {
  double s = 0;
  for (const auto& x : c_) s += std::abs(x);
  return s;
}

bool FourierField::is_zero() const {
  return std::all_of(c_.begin(), c_.end(), [](cplx x) { return x == cplx(0); });
}

void check_same_dims(const FourierField& a, const FourierField& b) {
  if (a.d1() != b.d1() || a.d2() != b.d2()) throw DimensionError("field dimension mismatch");
}

FourierField& FourierField::operator+=(const FourierField& o) {
  check_same_dims(*this, o);
  if (o.box_ > box_) *this = with_box(o.box_);
  if (o.box_ == box_) {
    for (size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  } else {
    for_each_index(o, [&](size_t off, const int* idx) { c_[offset(idx)] += o.c_[off]; });
  }
  return *this;
}

FourierField& FourierField::operator-=(const FourierField& o) {
  check_same_dims(*this, o);
  if (o.box_ > box_) *this = with_box(o.box_);
  if (o.box_ == box_) {
    for (size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  } else {
    for_each_index(o, [&](size_t off, const int* idx) { c_[offset(idx)] -= o.c_[off]; });
  }
  return *this;
}

FourierField& FourierField::operator*=(cplx s) {
  for (auto& x : c_) x *= s;
  return *this;
}

FourierField operator+(FourierField a, const FourierField& b) { return a += b; }
FourierField operator-(FourierField a, const FourierField& b) { return a -= b; }
FourierField operator*(cplx s, FourierField a) { return a *= s; }

double lattice_norm(const TorusAutomorphism& a, const int* idx, int d1, int d2) {
  if (a.dim() != d1) throw DimensionError("lattice_norm: automorphism acts on the first factor");
  Eigen::VectorXd n(d1);
  for (int i = 0; i < d1; ++i) n[i] = idx[i];
  double r = d1 > 0 ? a.dual_splitting().norm(n) : 0.0;
  for (int j = 0; j < d2; ++j) r = std::max(r, static_cast<double>(std::abs(idx[d1 + j])));
  return r;
}

namespace {

FourierField split_by_norm(const FourierField& v, double N, const TorusAutomorphism& a, bool keep_low) {
  if (N > v.box()) throw PreconditionError("truncate: level exceeds the storage box");
  FourierField r(v.d1(), v.d2(), v.box());
  if (N == v.box()) {
    if (keep_low) r = v;
    return r;
  }
  for_each_index(v, [&](size_t off, const int* idx) {
    const bool low = lattice_norm(a, idx, v.d1(), v.d2()) <= N;
    if (low == keep_low) r[off] = v[off];
  });
  return r;
}

}  // namespace

FourierField truncate(const FourierField& v, double N, const TorusAutomorphism& a) {
  return split_by_norm(v, N, a, true);
}

FourierField residue(const FourierField& v, double N, const TorusAutomorphism& a) {
  return split_by_norm(v, N, a, false);
}

FourierField compose_affine(const FourierField& h, const TorusAutomorphism& a,
                            const std::vector<double>& shift, int out_box) {
  const int d1 = h.d1(), d2 = h.d2();
  if (a.dim() != d1) throw DimensionError("compose_affine: automorphism acts on the first factor");
  if (static_cast<int>(shift.size()) != d2) throw DimensionError("compose_affine: shift dimension mismatch");
  // support of the result is A^t (supp h)
  struct Item {
    std::vector<int> idx;
    cplx c;
  };
  std::vector<Item> items;
  const IntMatrix& at = a.dual_inverse();
  int need = 0;
  IVec p(d1);
  for_each_index(h, [&](size_t off, const int* idx) {
    if (h[off] == cplx(0)) return;
    for (int i = 0; i < d1; ++i) p[i] = idx[i];
    IVec n = at * p;
    Item it{std::vector<int>(idx, idx + d1 + d2), h[off]};
    double ph = 0;
    for (int j = 0; j < d2; ++j) ph += idx[d1 + j] * shift[j];
    it.c *= std::polar(1.0, kTwoPi * ph);
    for (int i = 0; i < d1; ++i) {
      it.idx[i] = static_cast<int>(n[i]);
      need = std::max<int>(need, static_cast<int>(std::abs(n[i])));
    }
    for (int j = 0; j < d2; ++j) need = std::max(need, std::abs(idx[d1 + j]));
    items.push_back(std::move(it));
  });
  if (out_box >= 0 && need > out_box)
    throw OverflowError("compose_affine: support escapes the working box");
  FourierField r(d1, d2, out_box >= 0 ? out_box : std::max(need, 0));
  for (const auto& it : items) r[r.offset(it.idx.data())] = it.c;
  return r;
}

int default_grid(int box) { return std::max(1, 4 * box); }

CGrid to_grid(const FourierField& v, const std::vector<int>& shape) {
  if (static_cast<int>(shape.size()) != v.dim()) throw DimensionError("to_grid: shape dimension mismatch");
  for (int s : shape)
    if (s < 4 * v.box() || s < 1) throw PreconditionError("to_grid: grid smaller than 4*box");
  return sample_on_grid(v, shape);
}

CGrid sample_on_grid(const FourierField& v, const std::vector<int>& shape) {
  const int d = v.dim();
  if (static_cast<int>(shape.size()) != d) throw DimensionError("sample_on_grid: shape dimension mismatch");
  for (int s : shape)
    if (s < 1) throw PreconditionError("sample_on_grid: empty grid");
  CGrid g;
  g.shape = shape;
  size_t n = 1;
  for (int s : shape) n *= static_cast<size_t>(s);
  g.v.assign(n, cplx(0));
  for_each_index(v, [&](size_t off, const int* idx) {
    if (v[off] == cplx(0)) return;
    size_t p = 0;
    for (int a = 0; a < d; ++a) p = p * shape[a] + static_cast<size_t>((idx[a] % shape[a] + shape[a]) % shape[a]);
    g.v[p] += v[off];
  });
  fft::transform(g.v.data(), shape, +1);
  return g;
}

CGrid to_grid(const FourierField& v, int G) { return to_grid(v, std::vector<int>(v.dim(), G)); }

RGrid to_real_grid(const FourierField& v, int G) {
  CGrid c = to_grid(v, G);
  RGrid r{c.shape, std::vector<double>(c.size())};
  for (size_t i = 0; i < c.size(); ++i) r.v[i] = c.v[i].real();
  return r;
}

FourierField from_grid(const CGrid& g, int d1, int d2, int box) {
  const int d = d1 + d2;
  if (static_cast<int>(g.shape.size()) != d) throw DimensionError("from_grid: shape dimension mismatch");
  for (int s : g.shape)
    if (s < 4 * box || s < 1) throw PreconditionError("from_grid: grid smaller than 4*box");
  CVec w = g.v;
  fft::transform(w.data(), g.shape, -1);
  const double scale = 1.0 / static_cast<double>(w.size());
  FourierField r(d1, d2, box);
  for_each_index(r, [&](size_t off, const int* idx) {
    size_t p = 0;
    for (int a = 0; a < d; ++a) p = p * g.shape[a] + static_cast<size_t>((idx[a] % g.shape[a] + g.shape[a]) % g.shape[a]);
    r[off] = w[p] * scale;
  });
  return r;
}

FourierField from_real_grid(const RGrid& g, int d1, int d2, int box) {
  CGrid c{g.shape, CVec(g.v.begin(), g.v.end())};
  return from_grid(c, d1, d2, box).real_part();
}

std::vector<std::vector<double>> grid_points(const std::vector<int>& shape) {
  const int d = static_cast<int>(shape.size());
  size_t n = 1;
  for (int s : shape) n *= static_cast<size_t>(s);
  std::vector<std::vector<double>> pts(d, std::vector<double>(n));
  std::vector<int> j(d, 0);
  for (size_t p = 0; p < n; ++p) {
    for (int a = 0; a < d; ++a) pts[a][p] = static_cast<double>(j[a]) / shape[a];
    for (int a = d - 1; a >= 0; --a) {
      if (++j[a] < shape[a]) break;
      j[a] = 0;
    }
  }
  return pts;
}

double grid_sup(const RGrid& g) {
  double m = 0;
  for (double x : g.v) m = std::max(m, std::abs(x));
  return m;
}

std::vector<std::vector<int>> multi_indices(int dim, int r) {
  std::vector<std::vector<int>> out;
  std::vector<int> a(dim, 0);
  while (true) {
    out.push_back(a);
    int i = dim - 1;
    while (i >= 0 && a[i] == r) a[i--] = 0;
    if (i < 0) break;
    ++a[i];
  }
  return out;
}

FourierField derivative(const FourierField& v, const std::vector<int>& iota) {
  if (static_cast<int>(iota.size()) != v.dim()) throw DimensionError("derivative: multi-index dimension mismatch");
  FourierField r = v;
  for_each_index(v, [&](size_t off, const int* idx) {
    cplx m(1);
    for (int a = 0; a < v.dim(); ++a)
      for (int q = 0; q < iota[a]; ++q) m *= cplx(0, kTwoPi * idx[a]);
    r[off] *= m;
  });
  return r;
}

double cr_norm(const FourierField& v, int r, int G) {
  if (G <= 0) G = default_grid(v.box());
  double best = 0;
  for (const auto& iota : multi_indices(v.dim(), r)) {
    CGrid g = to_grid(derivative(v, iota), G);
    for (const auto& x : g.v) best = std::max(best, std::abs(x));
  }
  return best;
}

double wiener_norm(const FourierField& v, int r) {
  double best = 0;
  for (const auto& iota : multi_indices(v.dim(), r)) {
    double s = 0;
    for_each_index(v, [&](size_t off, const int* idx) {
      double m = std::abs(v[off]);
      if (m == 0) return;
      for (int a = 0; a < v.dim(); ++a) m *= std::pow(kTwoPi * std::abs(idx[a]), iota[a]);
      s += m;
    });
    best = std::max(best, s);
  }
  return best;
}

cplx evaluate_at(const FourierField& v, const double* x) {
  cplx s = 0;
  for_each_index(v, [&](size_t off, const int* idx) {
    if (v[off] == cplx(0)) return;
    double ph = 0;
    for (int a = 0; a < v.dim(); ++a) ph += idx[a] * x[a];
    s += v[off] * std::polar(1.0, kTwoPi * ph);
  });
  return s;
}

FourierField multiply(const FourierField& a, const FourierField& b, int out_box) {
  check_same_dims(a, b);
  const int G = default_grid(std::max({a.box(), b.box(), out_box}));
  CGrid ga = to_grid(a, G), gb = to_grid(b, G);
  for (size_t i = 0; i < ga.size(); ++i) ga.v[i] *= gb.v[i];
  return from_grid(ga, a.d1(), a.d2(), out_box);
}

VectorField VectorField::zeros(int count, int d1, int d2, int box) {
  return VectorField(std::vector<FourierField>(count, FourierField(d1, d2, box)));
}

int VectorField::box() const {
  int b = 0;
  for (const auto& c : comp) b = std::max(b, c.box());
  return b;
}

VectorField VectorField::with_box(int b) const {
  VectorField r;
  for (const auto& c : comp) r.comp.push_back(c.with_box(b));
  return r;
}

VectorField& VectorField::operator+=(const VectorField& o) {
  if (o.size() != size()) throw DimensionError("vector field size mismatch");
  for (int i = 0; i < size(); ++i) comp[i] += o.comp[i];
  return *this;
}

VectorField& VectorField::operator-=(const VectorField& o) {
  if (o.size() != size()) throw DimensionError("vector field size mismatch");
  for (int i = 0; i < size(); ++i) comp[i] -= o.comp[i];
  return *this;
}

VectorField& VectorField::operator*=(cplx s) {
  for (auto& c : comp) c *= s;
  return *this;
}

VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
VectorField operator*(cplx s, VectorField a) { return a *= s; }

double max_cr_norm(const VectorField& v, int r, int G) {
  double m = 0;
  for (const auto& c : v.comp) m = std::max(m, cr_norm(c, r, G));
  return m;
}

double max_wiener_norm(const VectorField& v, int r) {
  double m = 0;
  for (const auto& c : v.comp) m = std::max(m, wiener_norm(c, r));
  return m;
}

VectorField eigen_decompose(const VectorField& v, const Eigen::MatrixXcd& Pinv) {
  const int n = v.size();
  if (Pinv.rows() != n || Pinv.cols() != n) throw DimensionError("eigen_decompose: basis size mismatch");
  const int b = v.box();
  VectorField out = VectorField::zeros(n, v.comp[0].d1(), v.comp[0].d2(), b);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (Pinv(i, j) == cplx(0)) continue;
      FourierField t = v.comp[j].with_box(b);
      t *= Pinv(i, j);
      out.comp[i] += t;
    }
  return out;
}

VectorField eigen_reassemble(const VectorField& coords, const Eigen::MatrixXcd& P) {
  const int n = coords.size();
  if (P.rows() != n || P.cols() != n) throw DimensionError("eigen_reassemble: basis size mismatch");
  const int b = coords.box();
  VectorField out = VectorField::zeros(n, coords.comp[0].d1(), coords.comp[0].d2(), b);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (P(j, i) == cplx(0)) continue;
      FourierField t = coords.comp[i].with_box(b);
      t *= P(j, i);
      out.comp[j] += t;
    }
    out.comp[j] = out.comp[j].real_part();
  }
  return out;
}

}  // namespace kt
