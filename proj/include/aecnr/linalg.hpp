#pragma once

// Small dense complex linear algebra for per-bin covariance work.
//
// Everything here operates on matrices of dimension M+L (a handful of
// channels), so the routines favour robustness over asymptotic speed:
// Cholesky factorisation, cyclic complex Jacobi for Hermitian eigenproblems,
// and a generalized eigendecomposition built from the two.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace aecnr {

using cplx = std::complex<double>;
using CVector = std::vector<cplx>;
using RVector = std::vector<double>;

class LinalgError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotPositiveDefinite : public LinalgError {
 public:
  NotPositiveDefinite(std::size_t pivot_index, double pivot_value)
      : LinalgError("matrix is not positive definite (pivot " +
                    std::to_string(pivot_index) + " = " +
                    std::to_string(pivot_value) + ")"),
        pivot_index_(pivot_index),
        pivot_value_(pivot_value) {}

  std::size_t pivot_index() const noexcept { return pivot_index_; }
  double pivot_value() const noexcept { return pivot_value_; }

 private:
  std::size_t pivot_index_;
  double pivot_value_;
};

class NotHermitian : public LinalgError {
 public:
  explicit NotHermitian(double asymmetry)
      : LinalgError("matrix is not Hermitian (max asymmetry " +
                    std::to_string(asymmetry) + ")"),
        asymmetry_(asymmetry) {}
  double asymmetry() const noexcept { return asymmetry_; }

 private:
  double asymmetry_;
};

class NoConvergence : public LinalgError {
 public:
  using LinalgError::LinalgError;
};

// Dense row-major complex matrix. Zero-sized dimensions are allowed so that
// degenerate configurations (M = 1 blocking matrices, L = 0 loudspeakers)
// flow through the same code.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols) {}
  ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& row : init) {
      if (row.size() != cols_) {
        throw LinalgError("ragged initializer for ComplexMatrix");
      }
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  static ComplexMatrix identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static ComplexMatrix diagonal(std::span<const double> d) {
    ComplexMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  static ComplexMatrix column(std::span<const cplx> v) {
    ComplexMatrix m(v.size(), 1);
    std::copy(v.begin(), v.end(), m.data_.begin());
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }

  cplx& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::span<cplx> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const cplx> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const cplx> data() const noexcept { return data_; }

  CVector col(std::size_t j) const {
    CVector v(rows_);
    for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
  }
  void set_col(std::size_t j, std::span<const cplx> v) {
    if (v.size() != rows_) throw LinalgError("set_col: length mismatch");
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
  }

  ComplexMatrix block(std::size_t r0, std::size_t c0, std::size_t nr,
                      std::size_t nc) const {
    if (r0 + nr > rows_ || c0 + nc > cols_) {
      throw LinalgError("block out of range");
    }
    ComplexMatrix b(nr, nc);
    for (std::size_t i = 0; i < nr; ++i)
      for (std::size_t j = 0; j < nc; ++j) b(i, j) = (*this)(r0 + i, c0 + j);
    return b;
  }
  void set_block(std::size_t r0, std::size_t c0, const ComplexMatrix& b) {
    if (r0 + b.rows() > rows_ || c0 + b.cols() > cols_) {
      throw LinalgError("set_block out of range");
    }
    for (std::size_t i = 0; i < b.rows(); ++i)
      for (std::size_t j = 0; j < b.cols(); ++j) (*this)(r0 + i, c0 + j) = b(i, j);
  }

  ComplexMatrix adjoint() const {
    ComplexMatrix a(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) a(j, i) = std::conj((*this)(i, j));
    return a;
  }

  cplx trace() const {
    cplx t = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
    return t;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (const auto& x : data_) s += std::norm(x);
    return std::sqrt(s);
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& x : data_) m = std::max(m, std::abs(x));
    return m;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](const cplx& x) {
      return std::isfinite(x.real()) && std::isfinite(x.imag());
    });
  }

  ComplexMatrix& operator+=(const ComplexMatrix& o) {
    check_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  ComplexMatrix& operator-=(const ComplexMatrix& o) {
    check_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  ComplexMatrix& operator*=(cplx s) {
    for (auto& x : data_) x *= s;
    return *this;
  }

  friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) {
    return a += b;
  }
  friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) {
    return a -= b;
  }
  friend ComplexMatrix operator*(ComplexMatrix a, cplx s) { return a *= s; }
  friend ComplexMatrix operator*(cplx s, ComplexMatrix a) { return a *= s; }
  friend ComplexMatrix operator*(ComplexMatrix a, double s) { return a *= s; }
  friend ComplexMatrix operator*(double s, ComplexMatrix a) { return a *= s; }

  friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols_ != b.rows_) throw LinalgError("matrix product: shape mismatch");
    ComplexMatrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const cplx aik = a(i, k);
        if (aik == cplx{}) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend CVector operator*(const ComplexMatrix& a, std::span<const cplx> x) {
    if (a.cols_ != x.size()) throw LinalgError("matrix-vector: shape mismatch");
    CVector y(a.rows_);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      cplx s = 0.0;
      for (std::size_t j = 0; j < a.cols_; ++j) s += a(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }
  friend CVector operator*(const ComplexMatrix& a, const CVector& x) {
    return a * std::span<const cplx>(x);
  }

 private:
  void check_same_shape(const ComplexMatrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) {
      throw LinalgError("elementwise op: shape mismatch");
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

// ---------------------------------------------------------------------------
// Vector helpers.

inline cplx inner(std::span<const cplx> a, std::span<const cplx> b) {
  if (a.size() != b.size()) throw LinalgError("inner: length mismatch");
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

inline double norm2(std::span<const cplx> a) {
  double s = 0.0;
  for (const auto& x : a) s += std::norm(x);
  return std::sqrt(s);
}

inline CVector axpy(cplx alpha, std::span<const cplx> x, std::span<const cplx> y) {
  if (x.size() != y.size()) throw LinalgError("axpy: length mismatch");
  CVector r(y.begin(), y.end());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] += alpha * x[i];
  return r;
}

inline CVector scaled(std::span<const cplx> x, cplx s) {
  CVector r(x.begin(), x.end());
  for (auto& v : r) v *= s;
  return r;
}

inline CVector unit_vector(std::size_t n, std::size_t index) {
  CVector e(n);
  e.at(index) = 1.0;
  return e;
}

// Outer product x·y^H.
inline ComplexMatrix outer(std::span<const cplx> x, std::span<const cplx> y) {
  ComplexMatrix m(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) m(i, j) = x[i] * std::conj(y[j]);
  return m;
}

// Quadratic form x^H·A·x (real part; A is expected Hermitian).
inline double quad_form(const ComplexMatrix& a, std::span<const cplx> x) {
  return std::real(inner(x, a * x));
}

// ---------------------------------------------------------------------------

inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kRegularization = 1e-10;

// Square matrix that is Hermitian to within kHermitianTolerance·max|H|.
// Construction validates the input and then stores the exact Hermitian part,
// so downstream code can rely on H == H^H bit for bit.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(const ComplexMatrix& m) : m_(m) {
    if (!m_.is_square()) throw LinalgError("Hermitian matrix must be square");
    if (!m_.all_finite()) throw LinalgError("non-finite matrix entry");
    const double scale = m_.max_abs();
    double asym = 0.0;
    for (std::size_t i = 0; i < dim(); ++i)
      for (std::size_t j = i; j < dim(); ++j)
        asym = std::max(asym, std::abs(m_(i, j) - std::conj(m_(j, i))));
    if (asym > kHermitianTolerance * scale) throw NotHermitian(asym);
    for (std::size_t i = 0; i < dim(); ++i) {
      m_(i, i) = m_(i, i).real();
      for (std::size_t j = i + 1; j < dim(); ++j) {
        const cplx avg = 0.5 * (m_(i, j) + std::conj(m_(j, i)));
        m_(i, j) = avg;
        m_(j, i) = std::conj(avg);
      }
    }
  }
  HermitianMatrix(std::initializer_list<std::initializer_list<cplx>> init)
      : HermitianMatrix(ComplexMatrix(init)) {}

  static HermitianMatrix identity(std::size_t n) {
    return HermitianMatrix(ComplexMatrix::identity(n));
  }
  static HermitianMatrix zeros(std::size_t n) {
    return HermitianMatrix(ComplexMatrix(n, n));
  }
  static HermitianMatrix diagonal(std::span<const double> d) {
    return HermitianMatrix(ComplexMatrix::diagonal(d));
  }

  std::size_t dim() const noexcept { return m_.rows(); }
  const ComplexMatrix& matrix() const noexcept { return m_; }
  operator const ComplexMatrix&() const noexcept { return m_; }  // NOLINT
  const cplx& operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

  double trace() const { return m_.trace().real(); }
  double frobenius_norm() const { return m_.frobenius_norm(); }

  HermitianMatrix& operator+=(const HermitianMatrix& o) {
    m_ += o.m_;
    return *this;
  }
  HermitianMatrix& operator-=(const HermitianMatrix& o) {
    m_ -= o.m_;
    return *this;
  }
  HermitianMatrix& operator*=(double s) {
    m_ *= s;
    return *this;
  }
  friend HermitianMatrix operator+(HermitianMatrix a, const HermitianMatrix& b) {
    return a += b;
  }
  friend HermitianMatrix operator-(HermitianMatrix a, const HermitianMatrix& b) {
    return a -= b;
  }
  friend HermitianMatrix operator*(double s, HermitianMatrix a) { return a *= s; }
  friend HermitianMatrix operator*(HermitianMatrix a, double s) { return a *= s; }

 private:
  ComplexMatrix m_;
};

// X^H·H·X, symmetrised.
inline HermitianMatrix congruence(const ComplexMatrix& x, const ComplexMatrix& h) {
  return HermitianMatrix(x.adjoint() * h * x);
}

// H + delta·(trace(H)/dim)·I. A zero-trace input receives delta·I.
inline HermitianMatrix regularized(const HermitianMatrix& h,
                                   double delta = kRegularization) {
  const std::size_t n = h.dim();
  if (n == 0) return h;
  double level = std::abs(h.trace()) / static_cast<double>(n);
  if (!(level > 0.0)) level = 1.0;
  ComplexMatrix m = h.matrix();
  for (std::size_t i = 0; i < n; ++i) m(i, i) += delta * level;
  return HermitianMatrix(m);
}

// Lower-triangular L with L·L^H = H.
inline ComplexMatrix cholesky(const HermitianMatrix& h) {
  const std::size_t n = h.dim();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(h(i, i)));
  const double tol = 1e-14 * max_diag;
  ComplexMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = h(j, j).real();
    for (std::size_t k = 0; k < j; ++k) d -= std::norm(l(j, k));
    if (!(d > tol)) throw NotPositiveDefinite(j, d);
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      cplx s = h(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
      l(i, j) = s / ljj;
    }
  }
  return l;
}

// Solves L·x = b for lower-triangular L.
inline CVector forward_substitute(const ComplexMatrix& l, std::span<const cplx> b) {
  const std::size_t n = l.rows();
  CVector x(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    cplx s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x[k];
    x[i] = s / l(i, i);
  }
  return x;
}

// Solves L^H·x = b for lower-triangular L.
inline CVector backward_substitute_adjoint(const ComplexMatrix& l,
                                           std::span<const cplx> b) {
  const std::size_t n = l.rows();
  CVector x(b.begin(), b.end());
  for (std::size_t ii = n; ii-- > 0;) {
    cplx s = x[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= std::conj(l(k, ii)) * x[k];
    x[ii] = s / std::conj(l(ii, ii));
  }
  return x;
}

inline CVector solve_hermitian(const HermitianMatrix& h, std::span<const cplx> b) {
  if (b.size() != h.dim()) throw LinalgError("solve_hermitian: length mismatch");
  const ComplexMatrix l = cholesky(h);
  return backward_substitute_adjoint(l, forward_substitute(l, b));
}

// Solves H·X = B column by column.
inline ComplexMatrix solve_hermitian(const HermitianMatrix& h, const ComplexMatrix& b) {
  if (b.rows() != h.dim()) throw LinalgError("solve_hermitian: shape mismatch");
  const ComplexMatrix l = cholesky(h);
  ComplexMatrix x(b.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    const CVector bj = b.col(j);
    x.set_col(j, backward_substitute_adjoint(l, forward_substitute(l, bj)));
  }
  return x;
}

// Cholesky of H, or of regularized(H) when H is not numerically positive
// definite; `was_regularized` reports which.
inline ComplexMatrix guarded_cholesky(const HermitianMatrix& h, bool* was_regularized = nullptr) {
  if (was_regularized) *was_regularized = false;
  try {
    return cholesky(h);
  } catch (const NotPositiveDefinite&) {
    if (was_regularized) *was_regularized = true;
    return cholesky(regularized(h));
  }
}

inline CVector solve_guarded(const HermitianMatrix& h, std::span<const cplx> b,
                             bool* was_regularized = nullptr) {
  if (b.size() != h.dim()) throw LinalgError("solve_guarded: length mismatch");
  const ComplexMatrix l = guarded_cholesky(h, was_regularized);
  return backward_substitute_adjoint(l, forward_substitute(l, b));
}

inline ComplexMatrix solve_guarded(const HermitianMatrix& h, const ComplexMatrix& b,
                                   bool* was_regularized = nullptr) {
  if (b.rows() != h.dim()) throw LinalgError("solve_guarded: shape mismatch");
  const ComplexMatrix l = guarded_cholesky(h, was_regularized);
  ComplexMatrix x(b.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    const CVector bj = b.col(j);
    x.set_col(j, backward_substitute_adjoint(l, forward_substitute(l, bj)));
  }
  return x;
}

struct HermitianEigen {
  ComplexMatrix vectors;  // unitary, eigenvectors in columns
  RVector values;         // descending
};

namespace detail {

inline double off_diagonal_mass(const ComplexMatrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += std::norm(a(i, j));
  return std::sqrt(s);
}

}  // namespace detail

inline constexpr int kJacobiMaxSweeps = 100;
inline constexpr double kJacobiOffDiagonalTolerance = 1e-14;

// Cyclic complex Jacobi. Each rotation first removes the phase of a(p,q) and
// then applies a real Givens rotation; rotations are skipped once a(p,q) is
// negligible relative to sqrt(|a(p,p)·a(q,q)|), which keeps small eigenvalues
// of graded matrices accurate.
inline HermitianEigen herm_eig(const HermitianMatrix& h) {
  const std::size_t n = h.dim();
  ComplexMatrix a = h.matrix();
  ComplexMatrix u = ComplexMatrix::identity(n);
  const double scale = a.frobenius_norm();
  const double floor = 1e-30 * scale;

  bool converged = scale == 0.0 || n < 2;
  for (int sweep = 0; sweep < kJacobiMaxSweeps && !converged; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = std::abs(a(p, q));
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        if (apq <= floor ||
            apq <= 1e-17 * std::sqrt(std::abs(app * aqq))) {
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          continue;
        }
        rotated = true;
        const cplx phase = std::conj(a(p, q)) / apq;  // e^{-i phi}
        const double theta = (aqq - app) / (2.0 * apq);
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // G = [[c, s], [-s·e^{-i phi}, c·e^{-i phi}]]
        const cplx gpp = c, gpq = s, gqp = -s * phase, gqq = c * phase;
        for (std::size_t k = 0; k < n; ++k) {
          const cplx akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * gpp + akq * gqp;
          a(k, q) = akp * gpq + akq * gqq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const cplx apk = a(p, k), aqk = a(q, k);
          a(p, k) = std::conj(gpp) * apk + std::conj(gqp) * aqk;
          a(q, k) = std::conj(gpq) * apk + std::conj(gqq) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (std::size_t k = 0; k < n; ++k) {
          const cplx ukp = u(k, p), ukq = u(k, q);
          u(k, p) = ukp * gpp + ukq * gqp;
          u(k, q) = ukp * gpq + ukq * gqq;
        }
      }
    }
    converged = !rotated &&
                detail::off_diagonal_mass(a) <= kJacobiOffDiagonalTolerance * scale;
  }
  if (!converged) {
    throw NoConvergence("Jacobi eigensolver exceeded " +
                        std::to_string(kJacobiMaxSweeps) + " sweeps");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return a(i, i).real() > a(j, j).real();
  });
  HermitianEigen out{ComplexMatrix(n, n), RVector(n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]).real();
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = u(i, order[k]);
  }
  return out;
}

// Joint diagonalisation of the pencil {A, B}:
//   A = Q·diag(lambda_a)·Q^H,  B = Q·diag(lambda_b)·Q^H,
// with the normalisation lambda_b = 1 (so B = Q·Q^H). Q is the "mixing"
// matrix, i.e. the inverse adjoint of the matrix of generalized eigenvectors.
// Pairs are ordered by decreasing lambda_a / lambda_b.
struct GevdResult {
  ComplexMatrix q;
  RVector lambda_a;
  RVector lambda_b;

  std::size_t size() const noexcept { return lambda_a.size(); }
  double ratio(std::size_t k) const { return lambda_a[k] / lambda_b[k]; }
};

// Stable permutation of the pairs into non-increasing ratio order.
inline GevdResult ratio_sort(const GevdResult& g) {
  const std::size_t n = g.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return g.ratio(i) > g.ratio(j);
  });
  GevdResult out{ComplexMatrix(g.q.rows(), n), RVector(n), RVector(n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.lambda_a[k] = g.lambda_a[order[k]];
    out.lambda_b[k] = g.lambda_b[order[k]];
    for (std::size_t i = 0; i < g.q.rows(); ++i) out.q(i, k) = g.q(i, order[k]);
  }
  return out;
}

// B = L·L^H, C = L^{-1}·A·L^{-H} = U·diag(lambda)·U^H, Q = L·U.
inline GevdResult gevd(const HermitianMatrix& a, const HermitianMatrix& b) {
  if (a.dim() != b.dim()) throw LinalgError("gevd: dimension mismatch");
  const std::size_t n = a.dim();
  const ComplexMatrix l = cholesky(b);

  // Y = L^{-1}·A, then C = L^{-1}·Y^H (A Hermitian so Y^H = A·L^{-H}).
  ComplexMatrix y(n, n);
  for (std::size_t j = 0; j < n; ++j) y.set_col(j, forward_substitute(l, a.matrix().col(j)));
  const ComplexMatrix yh = y.adjoint();
  ComplexMatrix c(n, n);
  for (std::size_t j = 0; j < n; ++j) c.set_col(j, forward_substitute(l, yh.col(j)));

  // C is Hermitian up to rounding; symmetrise relative to its own scale.
  ComplexMatrix sym(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sym(i, j) = 0.5 * (c(i, j) + std::conj(c(j, i)));
  const HermitianEigen eig = herm_eig(HermitianMatrix(sym));

  GevdResult out{l * eig.vectors, eig.values, RVector(n, 1.0)};
  return ratio_sort(out);
}

// Q·diag(d)·Q^H.
inline HermitianMatrix reconstruct(const ComplexMatrix& q, std::span<const double> d) {
  if (q.cols() != d.size()) throw LinalgError("reconstruct: size mismatch");
  ComplexMatrix m(q.rows(), q.rows());
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (d[k] == 0.0) continue;
    for (std::size_t i = 0; i < q.rows(); ++i) {
      const cplx qik = q(i, k) * d[k];
      for (std::size_t j = 0; j < q.rows(); ++j) m(i, j) += qik * std::conj(q(j, k));
    }
  }
  return HermitianMatrix(m);
}

}  // namespace aecnr
