#ifndef AFMM_PROJECT_HPP
#define AFMM_PROJECT_HPP

#include <algorithm>
#include <cmath>
#include <limits>

#include "afmm/core.hpp"
#include "afmm/interp.hpp"

namespace afmm {

struct ProjectOptions {
  double tol = 1e-10;  // relative to the patch spacing
  int max_iter = 50;
};

template <int D>
struct Projection {
  Vec<D> point{};    // y with P(y) = 0
  double distance = 0.0;
  double side = 1.0; // sign of P at the query point
  int iterations = 0;
};

namespace detail {

/// The projection is converged when the point sits on the zero set and the
/// offset to the query is parallel to the patch gradient there. The absolute
/// floor keeps the alignment test meaningful when the query is already on the
/// zero set and the offset is rounding noise.
template <int D>
inline bool projection_ok(const CubicPatch<D>& patch, const Vec<D>& x0,
                          const Vec<D>& y, double tol) {
  const double p = patch.value(y);
  if (std::abs(p) > tol * patch.h) return false;
  const Vec<D> g = patch.gradient(y);
  const Vec<D> v = vsub<D>(x0, y);
  const double floor = 1e-13 * (1.0 + norm<D>(x0)) * norm<D>(g);
  return cross_norm(g, v) <= tol * norm<D>(g) * norm<D>(v) + floor;
}

/// A few gradient-direction root steps; cheap way to land near the zero set.
template <int D>
inline Vec<D> root_step(const CubicPatch<D>& patch, Vec<D> y, int steps) {
  for (int k = 0; k < steps; ++k) {
    const double p = patch.value(y);
    const Vec<D> g = patch.gradient(y);
    const double g2 = dot<D>(g, g);
    if (g2 < 1e-30) break;
    y = vsub<D>(y, vscale<D>(p / g2, g));
  }
  return y;
}

/// Orthonormal basis of the plane tangent to the contour (normal to g).
inline StaticVec<Vec<2>, 2> tangent_basis(const Vec<2>& g) {
  StaticVec<Vec<2>, 2> out;
  const double n = norm<2>(g);
  out.push_back(Vec<2>{-g[1] / n, g[0] / n});
  return out;
}

inline StaticVec<Vec<3>, 2> tangent_basis(const Vec<3>& g) {
  StaticVec<Vec<3>, 2> out;
  const Vec<3> gh = normalized<3>(g);
  const Vec<3> seed =
      std::abs(gh[0]) < 0.9 ? Vec<3>{1.0, 0.0, 0.0} : Vec<3>{0.0, 1.0, 0.0};
  Vec<3> t1 = normalized<3>(vsub<3>(seed, vscale<3>(dot<3>(seed, gh), gh)));
  out.push_back(t1);
  out.push_back(Vec<3>{gh[1] * t1[2] - gh[2] * t1[1],
                       gh[2] * t1[0] - gh[0] * t1[2],
                       gh[0] * t1[1] - gh[1] * t1[0]});
  return out;
}

/// Damped Newton on the tangential components of the offset over the zero
/// set, with a finite-difference Jacobian and a Levenberg bump when it turns
/// singular. On the degenerate (double-root) directions that appear at
/// centers of curvature the step keeps halving toward the root, which is
/// exactly the behavior the primary solver loses there.
template <int D>
inline bool tangential_newton(const CubicPatch<D>& patch, const Vec<D>& x0,
                              Vec<D>& y, const ProjectOptions& opt) {
  constexpr int T = D - 1;
  y = root_step<D>(patch, y, 8);
  for (int it = 0; it < 80; ++it) {
    if (projection_ok<D>(patch, x0, y, opt.tol)) return true;
    const Vec<D> g = patch.gradient(y);
    if (dot<D>(g, g) < 1e-30) return false;
    const auto tb = tangent_basis(g);
    auto resid = [&](const Vec<D>& p, std::array<double, T>& s) {
      const Vec<D> v = vsub<D>(x0, p);
      for (int i = 0; i < T; ++i) s[i] = dot<D>(v, tb[i]);
    };
    std::array<double, T> s{};
    resid(y, s);
    double snorm = 0.0;
    for (double v : s) snorm = std::max(snorm, std::abs(v));

    const double delta = 1e-6 * patch.h;
    std::array<double, T * T> jac{};
    for (int j = 0; j < T; ++j) {
      const Vec<D> q =
          root_step<D>(patch, vadd<D>(y, vscale<D>(delta, tb[j])), 4);
      std::array<double, T> sj{};
      resid(q, sj);
      for (int i = 0; i < T; ++i) jac[i * T + j] = (sj[i] - s[i]) / delta;
    }
    std::array<double, T> step = s;
    for (auto& v : step) v = -v;
    {
      auto a = jac;
      if (!solve_linear<T>(a, step)) {
        double scale = 0.0;
        for (double v : jac) scale = std::max(scale, std::abs(v));
        a = jac;
        for (int i = 0; i < T; ++i) a[i * T + i] += 1e-3 * (scale > 0.0 ? scale : 1.0);
        step = s;
        for (auto& v : step) v = -v;
        if (!solve_linear<T>(a, step)) return false;
      }
    }
    bool moved = false;
    double t = 1.0;
    for (int half = 0; half <= 14; ++half) {
      Vec<D> yt = y;
      for (int j = 0; j < T; ++j) yt = vadd<D>(yt, vscale<D>(t * step[j], tb[j]));
      yt = root_step<D>(patch, yt, 4);
      std::array<double, T> st{};
      resid(yt, st);
      double sn = 0.0;
      for (double v : st) sn = std::max(sn, std::abs(v));
      if (sn < snorm) {
        y = yt;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) return projection_ok<D>(patch, x0, y, opt.tol);
  }
  return projection_ok<D>(patch, x0, y, opt.tol);
}

/// Solves the tangential stationarity along the contour: the collinearity
/// residual (offset dotted with the local contour tangent) is scanned along a
/// walk from the start point, every bracketed root is polished by an Illinois
/// iteration, and the admissible stationary point with the smallest distance
/// wins. Handles queries near a center of curvature of the contour, where the
/// primary solver's system is singular and residual roots nearly coalesce.
template <int D>
inline bool contour_stationary(const CubicPatch<D>& patch, const Vec<D>& x0,
                               Vec<D>& y, const ProjectOptions& opt) {
  y = root_step<D>(patch, y, 8);
  auto dist2 = [&](const Vec<D>& p) {
    const Vec<D> v = vsub<D>(x0, p);
    return dot<D>(v, v);
  };
  const int rounds = D == 2 ? 2 : 6;
  for (int round = 0; round < rounds; ++round) {
    if (projection_ok<D>(patch, x0, y, opt.tol)) return true;
    const Vec<D> g0 = patch.gradient(y);
    if (dot<D>(g0, g0) < 1e-30) return false;
    for (const Vec<D>& tau : tangent_basis(g0)) {
      const Vec<D> base = y;
      auto point_at = [&](double t) {
        return root_step<D>(patch, vadd<D>(base, vscale<D>(t, tau)), 6);
      };
      // residual against the travel direction projected on the local tangent
      auto resid = [&](const Vec<D>& p) {
        const Vec<D> g = patch.gradient(p);
        const double g2 = dot<D>(g, g);
        if (g2 < 1e-30) return 0.0;
        Vec<D> tl = vsub<D>(tau, vscale<D>(dot<D>(tau, g) / g2, g));
        const double n = norm<D>(tl);
        if (n < 1e-14) return 0.0;
        return dot<D>(vsub<D>(x0, p), tl) / n;
      };

      constexpr int n_scan = 192;
      std::array<double, n_scan + 1> ts, rs;
      double best_f = dist2(y);
      Vec<D> best_p = y;
      for (int i = 0; i <= n_scan; ++i) {
        ts[i] = patch.h * (4.0 * i / n_scan - 2.0);
        const Vec<D> p = point_at(ts[i]);
        rs[i] = resid(p);
        const double f = dist2(p);
        if (f < best_f) {
          best_f = f;
          best_p = p;
        }
      }
      bool improved = false;
      for (int i = 0; i < n_scan; ++i) {
        if (rs[i] == 0.0 || rs[i] * rs[i + 1] > 0.0) continue;
        double ta = ts[i], ra = rs[i], tb = ts[i + 1], rb = rs[i + 1];
        for (int it = 0; it < 60 && ra != rb; ++it) {
          const double tm = tb - rb * (tb - ta) / (rb - ra);
          const double rm = resid(point_at(tm));
          if (rm * rb < 0.0) {
            ta = tb;
            ra = rb;
          } else {
            ra *= 0.5;  // Illinois scaling keeps the bracket shrinking
          }
          tb = tm;
          rb = rm;
          if (std::abs(tb - ta) < 1e-16 * patch.h || rm == 0.0) break;
        }
        const Vec<D> cand = point_at(tb);
        if (projection_ok<D>(patch, x0, cand, opt.tol)) {
          const double f = dist2(cand);
          if (f <= best_f) {
            best_f = f;
            best_p = cand;
            improved = true;
          }
        }
      }
      y = best_p;
      if (D == 2 && improved) return true;
    }
    if (projection_ok<D>(patch, x0, y, opt.tol)) return true;
  }
  return projection_ok<D>(patch, x0, y, opt.tol);
}

/// Damped Newton on the stationarity system of
///   min |y - x0|^2  subject to  P(y) = 0.
/// Unknowns are (y, lambda); returns false when the iteration budget runs out
/// without meeting the tolerances.
template <int D>
inline bool lagrange_newton(const CubicPatch<D>& patch, const Vec<D>& x0, Vec<D>& y,
                            double& lambda, const ProjectOptions& opt, int& iters) {
  constexpr int N = D + 1;
  for (int it = 0; it < opt.max_iter; ++it) {
    if (projection_ok<D>(patch, x0, y, opt.tol)) {
      iters = it;
      return true;
    }
    const double p = patch.value(y);
    const Vec<D> g = patch.gradient(y);
    const SymMat<D> hess = patch.hessian(y);

    std::array<double, N> r{};
    double rnorm = std::abs(p);
    for (int i = 0; i < D; ++i) {
      r[i] = 2.0 * (y[i] - x0[i]) + lambda * g[i];
      rnorm = std::max(rnorm, std::abs(r[i]));
    }
    r[D] = p;

    std::array<double, N * N> jac{};
    for (int i = 0; i < D; ++i) {
      for (int j = 0; j < D; ++j) jac[i * N + j] = lambda * hess(i, j);
      jac[i * N + i] += 2.0;
      jac[i * N + D] = g[i];
      jac[D * N + i] = g[i];
    }

    std::array<double, N> step = r;
    for (auto& v : step) v = -v;
    {
      auto a = jac;
      if (!solve_linear<N>(a, step)) return false;
    }

    double t = 1.0;
    bool moved = false;
    for (int half = 0; half <= 8; ++half) {
      Vec<D> yt;
      for (int i = 0; i < D; ++i) yt[i] = y[i] + t * step[i];
      const double lt = lambda + t * step[D];
      const double pt = patch.value(yt);
      const Vec<D> gt = patch.gradient(yt);
      double rt = std::abs(pt);
      for (int i = 0; i < D; ++i)
        rt = std::max(rt, std::abs(2.0 * (yt[i] - x0[i]) + lt * gt[i]));
      if (rt < rnorm) {
        y = yt;
        lambda = lt;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) return false;
  }
  return projection_ok<D>(patch, x0, y, opt.tol);
}

}  // namespace detail

/// Closest point on the zero set of a cell patch. Primary solver is damped
/// Lagrange-Newton started from a gradient root step; on failure the cell is
/// scanned on a 32^D lattice of root-projected points and the best candidate
/// is polished. Throws NoConvergence when neither route meets the tolerances.
template <int D>
inline Projection<D> closest_point(const CubicPatch<D>& patch, const Vec<D>& x0,
                                   const ProjectOptions& opt = {}) {
  Projection<D> result;
  const double p0 = patch.value(x0);
  result.side = p0 < 0.0 ? -1.0 : 1.0;

  Vec<D> y = detail::root_step<D>(patch, x0, 1);
  {
    const Vec<D> g = patch.gradient(y);
    const double g2 = dot<D>(g, g);
    double lambda = 0.0;
    if (g2 > 1e-30) lambda = -2.0 * dot<D>(vsub<D>(y, x0), g) / g2;
    int iters = 0;
    if (detail::lagrange_newton<D>(patch, x0, y, lambda, opt, iters)) {
      result.point = y;
      result.distance = norm<D>(vsub<D>(x0, y));
      result.iterations = iters;
      return result;
    }
  }

  // Cheap fallback first: solve the tangential stationarity from the same
  // root-step start the primary used; it handles the degenerate geometry that
  // stalls the stationarity system without scanning anything.
  {
    Vec<D> z = detail::root_step<D>(patch, x0, 8);
    if (detail::tangential_newton<D>(patch, x0, z, opt)) {
      result.point = z;
      result.distance = norm<D>(vsub<D>(x0, z));
      result.iterations = opt.max_iter;
      return result;
    }
  }

  // Fallback: root-project a lattice of points over the cell plus a margin of
  // 1.5 h on every side (the nearest zero-set piece can sit in the patch's
  // extrapolation zone), keep the nearest, polish.
  constexpr int side_pts = 40;
  double best = std::numeric_limits<double>::max();
  Vec<D> best_y{};
  bool found = false;
  std::array<int, D> ix{};
  for (;;) {
    Vec<D> p;
    for (int a = 0; a < D; ++a)
      p[a] = patch.origin[a] - 1.5 * patch.h +
             4.0 * patch.h * (ix[a] + 0.5) / side_pts;
    Vec<D> z = detail::root_step<D>(patch, p, 12);
    if (std::abs(patch.value(z)) < 1e-7 * std::max(1.0, std::abs(p0))) {
      const double d = norm<D>(vsub<D>(x0, z));
      if (d < best) {
        best = d;
        best_y = z;
        found = true;
      }
    }
    int a = 0;
    while (a < D && ++ix[a] == side_pts) ix[a++] = 0;
    if (a == D) break;
  }
  if (found) {
    Vec<D> z = best_y;
    const Vec<D> g = patch.gradient(z);
    const double g2 = dot<D>(g, g);
    double lambda = g2 > 1e-30 ? -2.0 * dot<D>(vsub<D>(z, x0), g) / g2 : 0.0;
    int iters = 0;
    if (detail::lagrange_newton<D>(patch, x0, z, lambda, opt, iters)) {
      result.point = z;
      result.distance = norm<D>(vsub<D>(x0, z));
      result.iterations = iters;
      return result;
    }
    z = best_y;
    if (detail::tangential_newton<D>(patch, x0, z, opt)) {
      result.point = z;
      result.distance = norm<D>(vsub<D>(x0, z));
      result.iterations = opt.max_iter;
      return result;
    }
    z = best_y;
    const bool scan_ok = detail::contour_stationary<D>(patch, x0, z, opt);
    if (!scan_ok && !detail::tangential_newton<D>(patch, x0, z, opt))
      throw NoConvergence("closest-point projection failed on a degenerate patch");
    result.point = z;
    result.distance = norm<D>(vsub<D>(x0, z));
    result.iterations = opt.max_iter;
    return result;
  }
  throw NoConvergence("closest-point projection failed on a degenerate patch");
}

}  // namespace afmm

#endif  // AFMM_PROJECT_HPP
