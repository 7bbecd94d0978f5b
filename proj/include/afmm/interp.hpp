#ifndef AFMM_INTERP_HPP
#define AFMM_INTERP_HPP

#include <utility>

#include "afmm/core.hpp"
#include "afmm/grid.hpp"

namespace afmm {

namespace detail {

/// Cubic Hermite basis over [0,1] in monomial form. Column order: value at 0,
/// value at 1, derivative at 0, derivative at 1; rows are monomial powers.
inline constexpr double hermite_monomial[4][4] = {
    {1.0, 0.0, 0.0, 0.0},
    {0.0, 0.0, 1.0, 0.0},
    {-3.0, 3.0, -2.0, -1.0},
    {2.0, -2.0, 1.0, 1.0},
};

/// d^m/du^m of u^p evaluated at u.
inline double power_deriv(double u, int p, int m) {
  if (m > p) return 0.0;
  double c = 1.0;
  for (int k = 0; k < m; ++k) c *= static_cast<double>(p - k);
  double up = 1.0;
  for (int k = 0; k < p - m; ++k) up *= u;
  return c * up;
}

template <int D>
constexpr int patch_coef_count() {
  int c = 1;
  for (int a = 0; a < D; ++a) c *= 4;
  return c;
}

}  // namespace detail

/// Cell-local cubic polynomial in monomial form over [0,1]^D coordinates.
/// Evaluation outside the cell is permitted (polynomial extrapolation).
template <int D>
struct CubicPatch {
  Vec<D> origin{};
  double h = 1.0;
  std::array<double, detail::patch_coef_count<D>()> coef{};

  /// Mixed partial derivative of the given per-axis orders, in physical units.
  double derivative(const Vec<D>& x, const std::array<int, D>& order) const {
    Vec<D> u;
    int total = 0;
    for (int a = 0; a < D; ++a) {
      u[a] = (x[a] - origin[a]) / h;
      total += order[a];
    }
    double table[D][4];
    for (int a = 0; a < D; ++a)
      for (int p = 0; p < 4; ++p) table[a][p] = detail::power_deriv(u[a], p, order[a]);

    double acc = 0.0;
    for (int idx = 0; idx < static_cast<int>(coef.size()); ++idx) {
      double term = coef[idx];
      int rest = idx;
      for (int a = 0; a < D; ++a) {
        term *= table[a][rest & 3];
        rest >>= 2;
      }
      acc += term;
    }
    double scale = 1.0;
    for (int k = 0; k < total; ++k) scale /= h;
    return acc * scale;
  }

  double value(const Vec<D>& x) const { return derivative(x, std::array<int, D>{}); }

  Vec<D> gradient(const Vec<D>& x) const {
    Vec<D> g;
    for (int a = 0; a < D; ++a) {
      std::array<int, D> order{};
      order[a] = 1;
      g[a] = derivative(x, order);
    }
    return g;
  }

  SymMat<D> hessian(const Vec<D>& x) const {
    SymMat<D> m;
    for (int a = 0; a < D; ++a)
      for (int b = a; b < D; ++b) {
        std::array<int, D> order{};
        order[a] += 1;
        order[b] += 1;
        m(a, b) = derivative(x, order);
      }
    return m;
  }
};

/// Fits the bicubic whose value, first, and mixed derivatives match the given
/// corner data exactly. Corner order matches cell_corners (bit 0 -> +x,
/// bit 1 -> +y); derivative inputs are in physical units.
inline CubicPatch<2> fit_bicubic(const std::array<double, 4>& f,
                                 const std::array<double, 4>& fx,
                                 const std::array<double, 4>& fy,
                                 const std::array<double, 4>& fxy,
                                 const Vec<2>& origin, double h) {
  CubicPatch<2> patch;
  patch.origin = origin;
  patch.h = h;

  // Slot s per axis: corner bit s&1, derivative order s>>1; data scaled to
  // local coordinates so conditioning is independent of h.
  double m[4][4];
  for (int su = 0; su < 4; ++su) {
    for (int sv = 0; sv < 4; ++sv) {
      const int corner = (su & 1) | ((sv & 1) << 1);
      const int du = su >> 1, dv = sv >> 1;
      double v;
      if (du == 0 && dv == 0) v = f[corner];
      else if (du == 1 && dv == 0) v = fx[corner];
      else if (du == 0 && dv == 1) v = fy[corner];
      else v = fxy[corner];
      double scale = 1.0;
      for (int k = 0; k < du + dv; ++k) scale *= h;
      m[su][sv] = v * scale;
    }
  }

  const auto& K = detail::hermite_monomial;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double c = 0.0;
      for (int su = 0; su < 4; ++su)
        for (int sv = 0; sv < 4; ++sv) c += K[i][su] * K[j][sv] * m[su][sv];
      patch.coef[i + 4 * j] = c;
    }
  return patch;
}

/// Tricubic counterpart; prescribes value, gradient, the three pairwise mixed
/// derivatives, and the triple mixed derivative at the eight corners.
inline CubicPatch<3> fit_tricubic(const std::array<double, 8>& f,
                                  const std::array<double, 8>& fx,
                                  const std::array<double, 8>& fy,
                                  const std::array<double, 8>& fz,
                                  const std::array<double, 8>& fxy,
                                  const std::array<double, 8>& fxz,
                                  const std::array<double, 8>& fyz,
                                  const std::array<double, 8>& fxyz,
                                  const Vec<3>& origin, double h) {
  CubicPatch<3> patch;
  patch.origin = origin;
  patch.h = h;

  const std::array<const std::array<double, 8>*, 8> data = {
      &f, &fx, &fy, &fxy, &fz, &fxz, &fyz, &fxyz};

  double m[4][4][4];
  for (int su = 0; su < 4; ++su)
    for (int sv = 0; sv < 4; ++sv)
      for (int sw = 0; sw < 4; ++sw) {
        const int corner = (su & 1) | ((sv & 1) << 1) | ((sw & 1) << 2);
        const int du = su >> 1, dv = sv >> 1, dw = sw >> 1;
        const double v = (*data[du | (dv << 1) | (dw << 2)])[corner];
        double scale = 1.0;
        for (int k = 0; k < du + dv + dw; ++k) scale *= h;
        m[su][sv][sw] = v * scale;
      }

  const auto& K = detail::hermite_monomial;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) {
        double c = 0.0;
        for (int su = 0; su < 4; ++su)
          for (int sv = 0; sv < 4; ++sv)
            for (int sw = 0; sw < 4; ++sw)
              c += K[i][su] * K[j][sv] * K[k][sw] * m[su][sv][sw];
        patch.coef[i + 4 * (j + 4 * k)] = c;
      }
  return patch;
}

/// Second-order stencil for the first derivative along one axis: centered in
/// the interior, one-sided at the domain boundary. Weights include 1/h.
template <int D>
inline StaticVec<std::pair<typename GridSpec<D>::Index, double>, 3> axis_stencil(
    const GridSpec<D>& grid, const typename GridSpec<D>::Index& node, int axis) {
  StaticVec<std::pair<typename GridSpec<D>::Index, double>, 3> out;
  auto shifted = [&](int off) {
    auto m = node;
    m[axis] += off;
    return m;
  };
  const double inv2h = 1.0 / (2.0 * grid.h);
  if (node[axis] == 0) {
    out.push_back({shifted(0), -3.0 * inv2h});
    out.push_back({shifted(1), 4.0 * inv2h});
    out.push_back({shifted(2), -1.0 * inv2h});
  } else if (node[axis] == grid.n - 1) {
    out.push_back({shifted(0), 3.0 * inv2h});
    out.push_back({shifted(-1), -4.0 * inv2h});
    out.push_back({shifted(-2), 1.0 * inv2h});
  } else {
    out.push_back({shifted(-1), -inv2h});
    out.push_back({shifted(1), inv2h});
  }
  return out;
}

template <int D, class F>
inline double deriv_axis(const GridSpec<D>& grid, F&& field,
                         const typename GridSpec<D>::Index& node, int axis) {
  double acc = 0.0;
  for (const auto& [idx, w] : axis_stencil<D>(grid, node, axis)) acc += w * field(idx);
  return acc;
}

template <int D, class F>
inline double deriv_cross(const GridSpec<D>& grid, F&& field,
                          const typename GridSpec<D>::Index& node, int a, int b) {
  double acc = 0.0;
  for (const auto& [idx, w] : axis_stencil<D>(grid, node, a))
    acc += w * deriv_axis<D>(grid, field, idx, b);
  return acc;
}

/// Averaged mixed second derivative from the gradient field:
/// phi_ab = (D_a psi^b + D_b psi^a) / 2.
template <int D>
inline double mixed_second(const GridSpec<D>& grid, const std::vector<Vec<D>>& psi,
                           const typename GridSpec<D>::Index& node, int a, int b) {
  auto comp = [&](int c) {
    return [&psi, &grid, c](const typename GridSpec<D>::Index& idx) {
      return psi[grid.linear(idx)][c];
    };
  };
  return 0.5 * (deriv_axis<D>(grid, comp(b), node, a) +
                deriv_axis<D>(grid, comp(a), node, b));
}

inline double cross_derivs_2d(const GridSpec<2>& grid, const std::vector<Vec<2>>& psi,
                              const GridSpec<2>::Index& node) {
  return mixed_second<2>(grid, psi, node, 0, 1);
}

struct MixedDerivs3 {
  double xy, xz, yz, xyz;
};

/// Pairwise mixed derivatives by the 2D averaging rule per coordinate pair;
/// the triple derivative averages the three cross differences of the gradient.
inline MixedDerivs3 cross_derivs_3d(const GridSpec<3>& grid,
                                    const std::vector<Vec<3>>& psi,
                                    const GridSpec<3>::Index& node) {
  auto comp = [&](int c) {
    return [&psi, &grid, c](const GridSpec<3>::Index& idx) {
      return psi[grid.linear(idx)][c];
    };
  };
  MixedDerivs3 out;
  out.xy = mixed_second<3>(grid, psi, node, 0, 1);
  out.xz = mixed_second<3>(grid, psi, node, 0, 2);
  out.yz = mixed_second<3>(grid, psi, node, 1, 2);
  out.xyz = (deriv_cross<3>(grid, comp(0), node, 1, 2) +
             deriv_cross<3>(grid, comp(1), node, 0, 2) +
             deriv_cross<3>(grid, comp(2), node, 0, 1)) /
            3.0;
  return out;
}

}  // namespace afmm

#endif  // AFMM_INTERP_HPP
