#include "kamtorus/lattice.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <numeric>

namespace kt {

using big = boost::multiprecision::cpp_int;
using Poly = std::vector<big>;  // lowest degree first

i64 checked_mul(i64 a, i64 b) {
  i64 r;
  if (__builtin_mul_overflow(a, b, &r)) throw OverflowError("integer overflow in matrix arithmetic");
  return r;
}

i64 checked_add(i64 a, i64 b) {
  i64 r;
  if (__builtin_add_overflow(a, b, &r)) throw OverflowError("integer overflow in matrix arithmetic");
  return r;
}

IntMatrix IntMatrix::identity(int d) {
  IntMatrix m(d);
  for (int i = 0; i < d; ++i) m(i, i) = 1;
  return m;
}

IntMatrix IntMatrix::from_rows(const std::vector<std::vector<i64>>& rows) {
  const int d = static_cast<int>(rows.size());
  if (d == 0) throw DimensionError("empty matrix");
  IntMatrix m(d);
  for (int i = 0; i < d; ++i) {
    if (static_cast<int>(rows[i].size()) != d) throw DimensionError("matrix must be square");
    for (int j = 0; j < d; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

IntMatrix IntMatrix::operator*(const IntMatrix& o) const {
  if (d_ != o.d_) throw DimensionError("matrix product dimension mismatch");
  IntMatrix r(d_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) {
      i64 s = 0;
      for (int k = 0; k < d_; ++k) s = checked_add(s, checked_mul((*this)(i, k), o(k, j)));
      r(i, j) = s;
    }
  return r;
}

IVec IntMatrix::operator*(const IVec& v) const {
  if (static_cast<int>(v.size()) != d_) throw DimensionError("matrix-vector dimension mismatch");
  IVec r(d_, 0);
  for (int i = 0; i < d_; ++i) {
    i64 s = 0;
    for (int k = 0; k < d_; ++k) s = checked_add(s, checked_mul((*this)(i, k), v[k]));
    r[i] = s;
  }
  return r;
}

IntMatrix IntMatrix::transpose() const {
  IntMatrix r(d_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) r(i, j) = (*this)(j, i);
  return r;
}

Eigen::MatrixXd IntMatrix::to_double() const {
  Eigen::MatrixXd r(d_, d_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) r(i, j) = static_cast<double>((*this)(i, j));
  return r;
}

std::vector<std::vector<i64>> IntMatrix::rows() const {
  std::vector<std::vector<i64>> r(d_, std::vector<i64>(d_));
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) r[i][j] = (*this)(i, j);
  return r;
}

i64 max_abs(const IVec& n) {
  i64 m = 0;
  for (i64 x : n) m = std::max(m, x < 0 ? -x : x);
  return m;
}

Eigen::VectorXd to_real(const IVec& n) {
  Eigen::VectorXd r(n.size());
  for (size_t i = 0; i < n.size(); ++i) r[i] = static_cast<double>(n[i]);
  return r;
}

namespace {

i64 to_i64(const big& x) {
  if (x > big(std::numeric_limits<i64>::max()) || x < big(std::numeric_limits<i64>::min()))
    throw OverflowError("integer result does not fit in 64 bits");
  return static_cast<i64>(x);
}

big bareiss_det(std::vector<std::vector<big>> a) {
  const int n = static_cast<int>(a.size());
  if (n == 0) return 1;
  int sign = 1;
  big prev = 1;
  for (int k = 0; k < n - 1; ++k) {
    if (a[k][k] == 0) {
      int p = k + 1;
      while (p < n && a[p][k] == 0) ++p;
      if (p == n) return 0;
      std::swap(a[p], a[k]);
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i)
      for (int j = k + 1; j < n; ++j) a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
    prev = a[k][k];
  }
  return sign * a[n - 1][n - 1];
}

std::vector<std::vector<big>> to_big(const IntMatrix& m) {
  std::vector<std::vector<big>> a(m.dim(), std::vector<big>(m.dim()));
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) a[i][j] = m(i, j);
  return a;
}

Poly charpoly_big(const IntMatrix& m) {
  // Faddeev-LeVerrier: exact in integers since tr(A M_k) is divisible by k.
  const int n = m.dim();
  auto A = to_big(m);
  std::vector<std::vector<big>> M(n, std::vector<big>(n, 0));
  Poly c(n + 1, 0);
  c[n] = 1;
  for (int k = 1; k <= n; ++k) {
    std::vector<std::vector<big>> AM(n, std::vector<big>(n, 0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        big s = 0;
        for (int l = 0; l < n; ++l) s += A[i][l] * M[l][j];
        AM[i][j] = s;
      }
    for (int i = 0; i < n; ++i) AM[i][i] += c[n - k + 1];
    M = AM;
    big tr = 0;
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < n; ++l) tr += A[i][l] * M[l][i];
    c[n - k] = -tr / k;
  }
  return c;
}

void trim(Poly& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

big content(const Poly& p) {
  big g = 0;
  for (const auto& x : p) g = boost::multiprecision::gcd(g, boost::multiprecision::abs(x));
  return g;
}

Poly primitive(Poly p) {
  trim(p);
  if (p.empty()) return p;
  big g = content(p);
  if (p.back() < 0) g = -g;
  for (auto& x : p) x /= g;
  return p;
}

Poly pseudo_remainder(Poly a, const Poly& b) {
  trim(a);
  const size_t db = b.size() - 1;
  while (!a.empty() && a.size() - 1 >= db) {
    const size_t shift = a.size() - 1 - db;
    const big la = a.back();
    for (auto& x : a) x *= b.back();
    for (size_t i = 0; i <= db; ++i) a[i + shift] -= la * b[i];
    trim(a);
  }
  return a;
}

Poly poly_gcd(Poly a, Poly b) {
  a = primitive(a);
  b = primitive(b);
  while (!b.empty()) {
    Poly r = primitive(pseudo_remainder(a, b));
    a = b;
    b = r;
  }
  return a;
}

// exact division by a monic polynomial
Poly divide_monic(Poly a, const Poly& b) {
  trim(a);
  const size_t db = b.size() - 1;
  if (a.size() - 1 < db) return {0};
  Poly q(a.size() - db, 0);
  for (size_t s = a.size() - 1 - db + 1; s-- > 0;) {
    const big c = a[s + db];
    q[s] = c;
    for (size_t i = 0; i <= db; ++i) a[s + i] -= c * b[i];
  }
  return q;
}

Poly cyclotomic(int k) {
  Poly p(k + 1, 0);
  p[0] = -1;
  p[k] = 1;
  for (int d = 1; d < k; ++d)
    if (k % d == 0) p = divide_monic(p, cyclotomic(d));
  return p;
}

int euler_phi(int k) {
  int r = k;
  int n = k;
  for (int p = 2; p * p <= n; ++p)
    if (n % p == 0) {
      while (n % p == 0) n /= p;
      r -= r / p;
    }
  if (n > 1) r -= r / n;
  return r;
}

IntMatrix integer_inverse(const IntMatrix& m, int det) {
  const int n = m.dim();
  IntMatrix r(n);
  if (n == 1) {
    r(0, 0) = det;
    return r;
  }
  auto a = to_big(m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      std::vector<std::vector<big>> minor;
      for (int p = 0; p < n; ++p) {
        if (p == j) continue;
        std::vector<big> row;
        for (int q = 0; q < n; ++q)
          if (q != i) row.push_back(a[p][q]);
        minor.push_back(row);
      }
      big c = bareiss_det(minor);
      if ((i + j) % 2) c = -c;
      r(i, j) = to_i64(c * det);
    }
  return r;
}

// Normalize so that the largest-modulus component is real and positive.
Eigen::VectorXcd fix_phase(Eigen::VectorXcd v) {
  v /= v.norm();
  Eigen::Index imax = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[imax]) * (1 + 1e-9)) imax = i;
  v *= std::conj(v[imax]) / std::abs(v[imax]);
  return v;
}

struct EigenSystem {
  Eigen::VectorXcd vals;
  Eigen::MatrixXcd vecs;
};

// Eigen-decomposition with real vectors for real eigenvalues, exact conjugate
// partners for complex ones, and a deterministic ordering.
EigenSystem eigen_system(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw JordanCaseError("eigen-decomposition failed");
  const int n = static_cast<int>(m.rows());
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXcd vals = es.eigenvalues();
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ma = std::abs(vals[a]), mb = std::abs(vals[b]);
    if (std::abs(ma - mb) > 1e-12 * scale) return ma > mb;
    if (std::abs(vals[a].real() - vals[b].real()) > 1e-12 * scale) return vals[a].real() > vals[b].real();
    return vals[a].imag() > vals[b].imag();
  });
  EigenSystem out{Eigen::VectorXcd(n), Eigen::MatrixXcd(n, n)};
  for (int i = 0; i < n; ++i) {
    const int j = order[i];
    cplx lam = vals[j];
    Eigen::VectorXcd v = fix_phase(es.eigenvectors().col(j));
    if (std::abs(lam.imag()) <= 1e-13 * scale) {
      lam = lam.real();
      v = v.real().cast<cplx>();
      v /= v.norm();
    } else if (lam.imag() < 0 && i > 0 && std::abs(out.vals[i - 1] - std::conj(lam)) <= 1e-10 * scale) {
      lam = std::conj(out.vals[i - 1]);
      v = out.vecs.col(i - 1).conjugate();
    }
    out.vals[i] = lam;
    out.vecs.col(i) = v;
  }
  return out;
}

double condition_number(const Eigen::MatrixXcd& p) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(p);
  const auto& s = svd.singularValues();
  if (s[s.size() - 1] <= 0) return std::numeric_limits<double>::infinity();
  return s[0] / s[s.size() - 1];
}

}  // namespace

i64 determinant(const IntMatrix& m) { return to_i64(bareiss_det(to_big(m))); }

IVec characteristic_polynomial(const IntMatrix& m) {
  Poly c = charpoly_big(m);
  IVec r;
  for (const auto& x : c) r.push_back(to_i64(x));
  return r;
}

SpectralSplitting::SpectralSplitting(const Eigen::MatrixXd& m, double tol) {
  EigenSystem es = eigen_system(m);
  const int n = static_cast<int>(m.rows());
  vals_ = es.vals;
  u_ = es.vecs;
  if (condition_number(u_) > 1e8) throw JordanCaseError("Jordan case out of scope: eigenvector matrix is ill-conditioned");
  uinv_ = u_.inverse();
  cls_.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    const double r = std::abs(vals_[i]);
    Mode mode{vals_[i], u_.col(i)};
    if (r > 1 + tol) {
      cls_[i] = 1;
      exp_.push_back(mode);
      rho_ = rho_ ? std::min(*rho_, r) : r;
    } else if (r < 1 - tol) {
      cls_[i] = -1;
      con_.push_back(mode);
    } else {
      neu_.push_back(mode);
    }
  }
  cbound_.assign(n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cbound_[i] += std::abs(uinv_(i, j));
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[j] = 1;
    Eigen::VectorXd s = project(e, 1) + project(e, -1) + project(e, 0);
    proj_residual_ = std::max(proj_residual_, (s - e).norm());
  }
  if (proj_residual_ > 1e-10) throw JordanCaseError("spectral projections do not reassemble the identity");
}

Eigen::VectorXd SpectralSplitting::project(const Eigen::VectorXd& x, int cls) const {
  Eigen::VectorXcd c = coords(x);
  Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(x.size());
  for (int i = 0; i < c.size(); ++i)
    if (cls_[i] == cls) acc += c[i] * u_.col(i);
  return acc.real();
}

double SpectralSplitting::norm(const Eigen::VectorXd& x) const {
  Eigen::VectorXcd c = coords(x);
  const int n = static_cast<int>(x.size());
  double best = 0;
  for (int cls = -1; cls <= 1; ++cls) {
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(n);
    for (int i = 0; i < n; ++i)
      if (cls_[i] == cls) acc += c[i] * u_.col(i);
    best = std::max(best, acc.real().norm());
  }
  return best;
}

TorusAutomorphism::TorusAutomorphism(const IntMatrix& m) {
  auto d = std::make_shared<Data>();
  d->m = m;
  const i64 det = determinant(m);
  if (det != 1 && det != -1)
    throw PreconditionError("toral automorphism needs determinant +-1, got " + std::to_string(det));
  d->det = static_cast<int>(det);
  d->dual_inv = m.transpose();
  d->dual = integer_inverse(d->dual_inv, d->det);
  d_ = std::move(d);
}

const SpectralSplitting& TorusAutomorphism::splitting() const {
  std::call_once(d_->split_once, [this] {
    auto split = std::make_unique<SpectralSplitting>(d_->m.to_double());
    d_->dual_split = std::make_unique<SpectralSplitting>(d_->dual.to_double());
    d_->split = std::move(split);
  });
  return *d_->split;
}

const SpectralSplitting& TorusAutomorphism::dual_splitting() const {
  splitting();
  return *d_->dual_split;
}

TorusAutomorphism TorusAutomorphism::inverse() const {
  return TorusAutomorphism(d_->dual.transpose());
}

TorusAutomorphism TorusAutomorphism::power(int k) const {
  IntMatrix base = k >= 0 ? d_->m : d_->dual.transpose();
  unsigned e = static_cast<unsigned>(k >= 0 ? k : -k);
  IntMatrix r = IntMatrix::identity(dim());
  while (e) {
    if (e & 1u) r = r * base;
    e >>= 1u;
    if (e) base = base * base;
  }
  return TorusAutomorphism(r);
}

TorusAutomorphism TorusAutomorphism::operator*(const TorusAutomorphism& o) const {
  return TorusAutomorphism(d_->m * o.d_->m);
}

TorusAutomorphism TorusAutomorphism::embed_with_identity(int d2) const {
  const int d1 = dim();
  IntMatrix r = IntMatrix::identity(d1 + d2);
  for (int i = 0; i < d1; ++i)
    for (int j = 0; j < d1; ++j) r(i, j) = d_->m(i, j);
  return TorusAutomorphism(r);
}

double TorusAutomorphism::eigen_norm(const IVec& n) const { return dual_splitting().norm(to_real(n)); }

int TorusAutomorphism::katznelson_sweep_radius() const {
  // radius 50 where affordable; for higher dimension keep the sweep near 2e6 points
  const int d = dim();
  int r = 50;
  while (r > 1 && std::pow(2.0 * r + 1, d) > 2.2e6) --r;
  return r;
}

double TorusAutomorphism::katznelson_constant() const {
  std::call_once(d_->kz_once, [this] {
    const int d = dim();
    const int R = katznelson_sweep_radius();
    const auto& sp = dual_splitting();
    double best = std::numeric_limits<double>::infinity();
    IVec n(d, -R);
    Eigen::VectorXd x(d);
    while (true) {
      if (max_abs(n) != 0) {
        for (int i = 0; i < d; ++i) x[i] = static_cast<double>(n[i]);
        const double e = sp.exp_norm(x);
        const double nn = sp.norm(x);
        best = std::min(best, e * std::pow(nn, d));
      }
      int i = d - 1;
      while (i >= 0 && n[i] == R) n[i--] = -R;
      if (i < 0) break;
      ++n[i];
    }
    d_->kz_c = best / 2;
  });
  return d_->kz_c;
}

bool check_commuting(const TorusAutomorphism& a, const TorusAutomorphism& b) {
  if (a.dim() != b.dim()) throw DimensionError("check_commuting: dimension mismatch");
  return a.matrix() * b.matrix() == b.matrix() * a.matrix();
}

bool is_ergodic(const TorusAutomorphism& a) {
  const int d = a.dim();
  Poly p = charpoly_big(a.matrix());
  for (int k = 1; k <= 2 * d * d + 2; ++k) {
    if (euler_phi(k) > d) continue;
    Poly g = poly_gcd(p, cyclotomic(k));
    if (g.size() >= 2) return false;
  }
  return true;
}

HrReport check_hr_report(const TorusAutomorphism& a, const TorusAutomorphism& b, int K) {
  if (!check_commuting(a, b)) throw PreconditionError("check_hr: automorphisms do not commute");
  HrReport rep;
  rep.K = K;
  for (int k = -K; k <= K; ++k)
    for (int l = -K; l <= K; ++l) {
      if (k == 0 && l == 0) continue;
      TorusAutomorphism p = a.power(k) * b.power(l);
      if (!is_ergodic(p)) {
        rep.pass = false;
        rep.witness = std::make_pair(k, l);
        return rep;
      }
    }
  return rep;
}

IVec dual_orbit(const TorusAutomorphism& a, const IVec& n, int k) {
  if (static_cast<int>(n.size()) != a.dim()) throw DimensionError("dual_orbit: dimension mismatch");
  IVec r = n;
  const IntMatrix& m = k >= 0 ? a.dual() : a.dual_inverse();
  for (int i = 0; i < std::abs(k); ++i) r = m * r;
  return r;
}

int pivot_search_cap(const TorusAutomorphism& a, const IVec& n) {
  return static_cast<int>(64.0 * (1.0 + std::log(std::max(1.0, a.eigen_norm(n)))));
}

Pivot find_pivot(const TorusAutomorphism& a, const IVec& n) {
  if (max_abs(n) == 0) throw PreconditionError("find_pivot: n must be nonzero");
  const auto& sp = a.dual_splitting();
  const int cap = pivot_search_cap(a, n);
  const Eigen::VectorXcd c = sp.coords(to_real(n));
  const auto& cls = sp.classes();
  const int d = a.dim();
  int last = std::numeric_limits<int>::min();
  for (int k = -cap; k <= cap; ++k) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(d), q = Eigen::VectorXcd::Zero(d);
    for (int i = 0; i < d; ++i) {
      if (cls[i] == 0) continue;
      const cplx ci = c[i] * std::pow(sp.eigenvalues()[i], k);
      (cls[i] > 0 ? e : q) += ci * sp.basis().col(i);
    }
    if (q.real().norm() >= e.real().norm()) last = k;
  }
  if (last == std::numeric_limits<int>::min() || last == cap)
    throw OrbitEscapeError("find_pivot: search bound exceeded");
  return Pivot{dual_orbit(a, n, last), last};
}

KatznelsonBound katznelson_bound(const TorusAutomorphism& a, const IVec& n) {
  if (max_abs(n) == 0) throw PreconditionError("katznelson_bound: n must be nonzero");
  const auto& sp = a.dual_splitting();
  if (sp.expanding().empty()) throw PreconditionError("katznelson_bound: no expanding part");
  KatznelsonBound kb;
  kb.C = a.katznelson_constant();
  const Eigen::VectorXd x = to_real(n);
  kb.exp_norm = sp.exp_norm(x);
  kb.floor = kb.C * std::pow(sp.norm(x), -a.dim());
  if (kb.exp_norm < kb.floor) throw Error("katznelson", "Katznelson bound violated: calibrated constant too large");
  return kb;
}

std::pair<int, int> orbit_shift_range(const TorusAutomorphism& a, const IVec& n, i64 box) {
  const auto& sp = a.dual_splitting();
  const Eigen::VectorXcd c = sp.coords(to_real(n));
  const double scale = std::max(1.0, to_real(n).norm());
  double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  for (int i = 0; i < c.size(); ++i) {
    const double ci = std::abs(c[i]);
    if (ci <= 1e-12 * scale || sp.classes()[i] == 0) continue;
    const double bound = static_cast<double>(box) * sp.coord_box_bounds()[i] * (1 + 1e-9) + 1e-9;
    const double lr = std::log(std::abs(sp.eigenvalues()[i]));
    const double t = std::log(bound / ci) / lr;
    if (lr > 0) hi = std::min(hi, t);
    else lo = std::max(lo, t);
  }
  if (!std::isfinite(lo) || !std::isfinite(hi))
    throw OrbitEscapeError("dual orbit does not escape the box (automorphism not ergodic?)");
  int klo = static_cast<int>(std::ceil(lo)) - 1, khi = static_cast<int>(std::floor(hi)) + 1;
  if (khi - klo > 8192) throw OrbitEscapeError("dual orbit scan cap exceeded");
  return {klo, khi};
}

std::vector<OrbitPoint> orbit_in_box(const TorusAutomorphism& a, const IVec& n, i64 box) {
  auto [lo, hi] = orbit_shift_range(a, n, box);
  std::vector<OrbitPoint> out;
  if (lo > hi) return out;
  IVec p = dual_orbit(a, n, lo);
  for (int k = lo; k <= hi; ++k) {
    if (max_abs(p) <= box) out.push_back({k, p});
    if (k < hi) p = a.dual() * p;
  }
  return out;
}

SimultaneousBasis simultaneous_eigenbasis(const TorusAutomorphism& a, const TorusAutomorphism& b) {
  if (!check_commuting(a, b)) throw PreconditionError("simultaneous_eigenbasis: automorphisms do not commute");
  const Eigen::MatrixXd A = a.matrix().to_double(), B = b.matrix().to_double();
  const double c = 0.5772156649015329;  // generic mixing coefficient
  EigenSystem es = eigen_system(A + c * B);
  SimultaneousBasis sb;
  sb.P = es.vecs;
  sb.condition = condition_number(sb.P);
  if (!(sb.condition <= 1e8)) throw JordanCaseError("Jordan case out of scope: common eigenbasis is ill-conditioned");
  sb.Pinv = sb.P.inverse();
  const Eigen::MatrixXcd DA = sb.Pinv * A.cast<cplx>() * sb.P, DB = sb.Pinv * B.cast<cplx>() * sb.P;
  const int n = a.dim();
  for (int i = 0; i < n; ++i) {
    EigenPair ep{DA(i, i), DB(i, i), sb.P.col(i)};
    if (std::abs(ep.lambda.imag()) < 1e-13) ep.lambda = ep.lambda.real();
    if (std::abs(ep.mu.imag()) < 1e-13) ep.mu = ep.mu.real();
    const double ra = (A.cast<cplx>() * ep.vector - ep.lambda * ep.vector).norm();
    const double rb = (B.cast<cplx>() * ep.vector - ep.mu * ep.vector).norm();
    if (ra > 1e-10 || rb > 1e-10) throw JordanCaseError("Jordan case out of scope: eigen-pair residual too large");
    sb.pairs.push_back(ep);
  }
  return sb;
}

}  // namespace kt
