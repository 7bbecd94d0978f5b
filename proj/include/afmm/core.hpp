#ifndef AFMM_CORE_HPP
#define AFMM_CORE_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace afmm {

template <int D>
using Vec = std::array<double, D>;

template <int D>
inline double dot(const Vec<D>& a, const Vec<D>& b) {
  double s = 0.0;
  for (int i = 0; i < D; ++i) s += a[i] * b[i];
  return s;
}

template <int D>
inline double norm(const Vec<D>& a) {
  return std::sqrt(dot<D>(a, a));
}

template <int D>
inline Vec<D> vadd(const Vec<D>& a, const Vec<D>& b) {
  Vec<D> r;
  for (int i = 0; i < D; ++i) r[i] = a[i] + b[i];
  return r;
}

template <int D>
inline Vec<D> vsub(const Vec<D>& a, const Vec<D>& b) {
  Vec<D> r;
  for (int i = 0; i < D; ++i) r[i] = a[i] - b[i];
  return r;
}

template <int D>
inline Vec<D> vscale(double s, const Vec<D>& a) {
  Vec<D> r;
  for (int i = 0; i < D; ++i) r[i] = s * a[i];
  return r;
}

template <int D>
inline Vec<D> normalized(const Vec<D>& a) {
  const double n = norm<D>(a);
  return n > 0.0 ? vscale<D>(1.0 / n, a) : a;
}

/// Magnitude of the cross product; the scalar cross in 2D.
inline double cross_norm(const Vec<2>& a, const Vec<2>& b) {
  return std::abs(a[0] * b[1] - a[1] * b[0]);
}

inline double cross_norm(const Vec<3>& a, const Vec<3>& b) {
  const Vec<3> c{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
                 a[0] * b[1] - a[1] * b[0]};
  return norm<3>(c);
}

/// Symmetric d-by-d matrix storing unique components only.
/// 2D layout: [xx, yy, xy]; 3D layout: [xx, yy, zz, xy, xz, yz].
template <int D>
struct SymMat {
  static constexpr int ncomp = D * (D + 1) / 2;
  std::array<double, ncomp> a{};

  static constexpr int index(int i, int j) {
    return i == j ? i : D + i + j - 1;
  }
  double& operator()(int i, int j) { return a[index(i, j)]; }
  double operator()(int i, int j) const { return a[index(i, j)]; }

  double trace() const {
    double t = 0.0;
    for (int i = 0; i < D; ++i) t += a[i];
    return t;
  }

  Vec<D> apply(const Vec<D>& v) const {
    Vec<D> r{};
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) r[i] += (*this)(i, j) * v[j];
    return r;
  }

  double max_abs() const {
    double m = 0.0;
    for (double x : a) m = std::max(m, std::abs(x));
    return m;
  }
};

/// Fixed-capacity inline vector; avoids heap traffic in the marching loops.
template <class T, int Cap>
class StaticVec {
 public:
  void push_back(const T& v) { items_[count_++] = v; }
  int size() const { return count_; }
  bool empty() const { return count_ == 0; }
  T& operator[](int i) { return items_[i]; }
  const T& operator[](int i) const { return items_[i]; }
  T* begin() { return items_.data(); }
  T* end() { return items_.data() + count_; }
  const T* begin() const { return items_.data(); }
  const T* end() const { return items_.data() + count_; }

 private:
  std::array<T, Cap> items_{};
  int count_ = 0;
};

/// In-place LU solve with partial pivoting for the small dense systems of the
/// update solvers. Returns false on a singular (or numerically tiny) pivot.
template <int N>
inline bool solve_linear(std::array<double, N * N>& A, std::array<double, N>& b) {
  double scale = 0.0;
  for (double x : A) scale = std::max(scale, std::abs(x));
  const double tiny = (scale > 0.0 ? scale : 1.0) * 1e-14;

  for (int k = 0; k < N; ++k) {
    int piv = k;
    for (int i = k + 1; i < N; ++i)
      if (std::abs(A[i * N + k]) > std::abs(A[piv * N + k])) piv = i;
    if (std::abs(A[piv * N + k]) < tiny) return false;
    if (piv != k) {
      for (int j = 0; j < N; ++j) std::swap(A[k * N + j], A[piv * N + j]);
      std::swap(b[k], b[piv]);
    }
    const double inv = 1.0 / A[k * N + k];
    for (int i = k + 1; i < N; ++i) {
      const double f = A[i * N + k] * inv;
      if (f == 0.0) continue;
      for (int j = k; j < N; ++j) A[i * N + j] -= f * A[k * N + j];
      b[i] -= f * b[k];
    }
  }
  for (int i = N - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < N; ++j) s -= A[i * N + j] * b[j];
    b[i] = s / A[i * N + i];
  }
  return true;
}

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Closest-point projection did not meet its tolerances.
struct NoConvergence : NumericalError {
  using NumericalError::NumericalError;
};

/// No grid cell straddles the zero set of the input field.
struct EmptyInterface : NumericalError {
  using NumericalError::NumericalError;
};

/// A node adjacent to the interface could not be seeded from any cell.
struct InitFailure : NumericalError {
  using NumericalError::NumericalError;
};

/// Every update tier failed at a node; indicates a bug, not bad data.
struct UpdateFailure : NumericalError {
  using NumericalError::NumericalError;
};

struct DegenerateGradient : NumericalError {
  using NumericalError::NumericalError;
};

struct EmptyRegion : NumericalError {
  using NumericalError::NumericalError;
};

struct NonPositiveError : NumericalError {
  using NumericalError::NumericalError;
};

struct OracleUnavailable : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace afmm

#endif  // AFMM_CORE_HPP
