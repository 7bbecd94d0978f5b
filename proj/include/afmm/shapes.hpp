#ifndef AFMM_SHAPES_HPP
#define AFMM_SHAPES_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "afmm/core.hpp"

namespace afmm {

inline constexpr double kPi = 3.14159265358979323846;

/// A named test interface: the initial level set and gradient fed to the
/// solvers, plus exact signed-distance (and, where available, curvature)
/// oracles for error reporting.
template <int D>
struct Shape {
  std::string name;
  std::function<double(const Vec<D>&)> phi0;
  std::function<Vec<D>(const Vec<D>&)> psi0;
  std::function<double(const Vec<D>&)> distance;
  std::function<Vec<D>(const Vec<D>&)> distance_gradient;
  std::function<double(const Vec<D>&)> curvature;          // null when unknown
  std::function<SymMat<D>(const Vec<D>&)> distance_hessian;  // null when unknown

  /// Error of a computed gradient against the oracle. The default is the
  /// plain difference norm; shapes with exact medial points override it there
  /// (the distance gradient is set-valued at such points, so the error is the
  /// distance to the set).
  std::function<double(const Vec<D>&, const Vec<D>&)> gradient_error;

  double psi_error(const Vec<D>& p, const Vec<D>& computed) const {
    if (gradient_error) return gradient_error(p, computed);
    return norm<D>(vsub<D>(computed, distance_gradient(p)));
  }
};

/// Signed distance plus exact curvature when the shape provides one.
template <int D>
inline std::pair<double, std::optional<double>> exact_oracle(const Shape<D>& shape,
                                                             const Vec<D>& p) {
  std::optional<double> kappa;
  if (shape.curvature) kappa = shape.curvature(p);
  return {shape.distance(p), kappa};
}

namespace detail {

/// Closest sample on a polar curve r(theta), refined by golden-section search
/// around the best of a dense scan.
class PolarCurve {
 public:
  PolarCurve(std::function<double(double)> radius, int samples, double t_lo,
             double t_hi)
      : radius_(std::move(radius)), t_lo_(t_lo), t_hi_(t_hi) {
    ts_.reserve(samples);
    pts_.reserve(samples);
    for (int i = 0; i < samples; ++i) {
      const double t = t_lo + (t_hi - t_lo) * i / samples;
      ts_.push_back(t);
      pts_.push_back(point(t));
    }
  }

  Vec<2> point(double t) const {
    const double r = radius_(t);
    return {r * std::cos(t), r * std::sin(t)};
  }

  /// Parameter of the closest curve point to p.
  double closest_parameter(const Vec<2>& p) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      const double d = (pts_[i][0] - p[0]) * (pts_[i][0] - p[0]) +
                       (pts_[i][1] - p[1]) * (pts_[i][1] - p[1]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    const double step = (t_hi_ - t_lo_) / static_cast<double>(ts_.size());
    double a = ts_[best] - step, b = ts_[best] + step;
    auto dist2 = [&](double t) {
      const Vec<2> q = point(t);
      return (q[0] - p[0]) * (q[0] - p[0]) + (q[1] - p[1]) * (q[1] - p[1]);
    };
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = dist2(x1), f2 = dist2(x2);
    for (int it = 0; it < 90; ++it) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - gr * (b - a);
        f1 = dist2(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b - a);
        f2 = dist2(x2);
      }
    }
    return 0.5 * (a + b);
  }

 private:
  std::function<double(double)> radius_;
  double t_lo_, t_hi_;
  std::vector<double> ts_;
  std::vector<Vec<2>> pts_;
};

inline double sign_of(double v) { return v < 0.0 ? -1.0 : 1.0; }

/// Curvature of the level set of d at distance d from a curve point with
/// curvature k: offsets shrink or grow the radius of curvature by d.
inline double offset_curvature(double k, double d) {
  const double denom = 1.0 + d * k;
  if (std::abs(denom) < 1e-14) return k / sign_of(denom) * 1e14;
  return k / denom;
}

/// Largest-root closest point on an axis-aligned ellipsoid via the standard
/// rational equation in the Lagrange multiplier. Components of p at zero are
/// nudged off the symmetry plane; the distance error that introduces is of
/// the same order as the nudge.
template <int D>
inline Vec<D> ellipsoid_closest(const std::array<double, D>& semi, Vec<D> p) {
  double min_axis = semi[0];
  for (double a : semi) min_axis = std::min(min_axis, a);
  for (int i = 0; i < D; ++i)
    if (std::abs(p[i]) < 1e-9) p[i] = 1e-9;

  auto f = [&](double lam) {
    double s = 0.0;
    for (int i = 0; i < D; ++i) {
      const double t = semi[i] * p[i] / (semi[i] * semi[i] + lam);
      s += t * t;
    }
    return s - 1.0;
  };
  double lo = -min_axis * min_axis;
  double hi = 0.0;
  {
    double norm_p = 0.0;
    for (int i = 0; i < D; ++i) norm_p = std::max(norm_p, std::abs(p[i]));
    double max_axis = semi[0];
    for (double a : semi) max_axis = std::max(max_axis, a);
    hi = max_axis * (norm_p + max_axis);
    while (f(hi) > 0.0) hi *= 2.0;
  }
  // f decreases from +inf near lo to below zero at hi; bisect to the root.
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (f(mid) > 0.0) lo = mid;
    else hi = mid;
  }
  const double lam = 0.5 * (lo + hi);
  Vec<D> q;
  for (int i = 0; i < D; ++i)
    q[i] = semi[i] * semi[i] * p[i] / (semi[i] * semi[i] + lam);
  return q;
}

}  // namespace detail

inline Shape<2> make_shape_2d(const std::string& name) {
  Shape<2> s;
  s.name = name;

  if (name == "circle") {
    // Unit circle posed as an exponential level set.
    s.phi0 = [](const Vec<2>& p) {
      return std::exp(p[0] * p[0] + p[1] * p[1]) - std::exp(1.0);
    };
    s.psi0 = [](const Vec<2>& p) {
      const double e = std::exp(p[0] * p[0] + p[1] * p[1]);
      return Vec<2>{2.0 * p[0] * e, 2.0 * p[1] * e};
    };
    s.distance = [](const Vec<2>& p) { return norm<2>(p) - 1.0; };
    s.distance_gradient = [](const Vec<2>& p) {
      const double r = norm<2>(p);
      return r > 1e-14 ? vscale<2>(1.0 / r, p) : Vec<2>{1.0, 0.0};
    };
    s.curvature = [](const Vec<2>& p) { return 1.0 / std::max(norm<2>(p), 1e-14); };
    s.distance_hessian = [](const Vec<2>& p) {
      const double r = std::max(norm<2>(p), 1e-14);
      const Vec<2> n = vscale<2>(1.0 / r, p);
      SymMat<2> h;
      h(0, 0) = (1.0 - n[0] * n[0]) / r;
      h(1, 1) = (1.0 - n[1] * n[1]) / r;
      h(0, 1) = -n[0] * n[1] / r;
      return h;
    };
    auto grad = s.distance_gradient;
    s.gradient_error = [=](const Vec<2>& p, const Vec<2>& computed) {
      // At the medial center every unit vector is a valid gradient.
      if (norm<2>(p) < 1e-9) return std::abs(norm<2>(computed) - 1.0);
      return norm<2>(vsub<2>(computed, grad(p)));
    };
    return s;
  }

  if (name == "ellipse") {
    const double a = 1.5, b = 0.5;
    s.phi0 = [=](const Vec<2>& p) {
      return (p[0] / a) * (p[0] / a) + (p[1] / b) * (p[1] / b) - 1.0;
    };
    s.psi0 = [=](const Vec<2>& p) {
      return Vec<2>{2.0 * p[0] / (a * a), 2.0 * p[1] / (b * b)};
    };
    struct Foot {
      Vec<2> q;
      double t;
      double d;
    };
    auto foot = [=](const Vec<2>& p) {
      // Dense parameter scan plus golden-section polish; robust across the
      // interior medial segment where the closest point is non-unique.
      static const int kScan = 720;
      double best_t = 0.0;
      double best_d = std::numeric_limits<double>::max();
      for (int i = 0; i < kScan; ++i) {
        const double t = 2.0 * kPi * i / kScan;
        const double dx = a * std::cos(t) - p[0], dy = b * std::sin(t) - p[1];
        const double d2 = dx * dx + dy * dy;
        if (d2 < best_d) {
          best_d = d2;
          best_t = t;
        }
      }
      auto dist2 = [&](double t) {
        const double dx = a * std::cos(t) - p[0], dy = b * std::sin(t) - p[1];
        return dx * dx + dy * dy;
      };
      double lo = best_t - 2.0 * kPi / kScan, hi = best_t + 2.0 * kPi / kScan;
      const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
      double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
      double f1 = dist2(x1), f2 = dist2(x2);
      for (int it = 0; it < 90; ++it) {
        if (f1 < f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - gr * (hi - lo);
          f1 = dist2(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + gr * (hi - lo);
          f2 = dist2(x2);
        }
      }
      Foot r;
      r.t = 0.5 * (lo + hi);
      r.q = Vec<2>{a * std::cos(r.t), b * std::sin(r.t)};
      const double inside = (p[0] / a) * (p[0] / a) + (p[1] / b) * (p[1] / b) - 1.0;
      r.d = detail::sign_of(inside) * norm<2>(vsub<2>(p, r.q));
      return r;
    };
    s.distance = [=](const Vec<2>& p) { return foot(p).d; };
    s.distance_gradient = [=](const Vec<2>& p) {
      const auto f = foot(p);
      if (std::abs(f.d) < 1e-14) return Vec<2>{1.0, 0.0};
      return vscale<2>(1.0 / f.d, vsub<2>(p, f.q));
    };
    s.curvature = [=](const Vec<2>& p) {
      const auto f = foot(p);
      const double st = std::sin(f.t), ct = std::cos(f.t);
      const double k =
          a * b / std::pow(a * a * st * st + b * b * ct * ct, 1.5);
      return detail::offset_curvature(k, f.d);
    };
    s.gradient_error = [=](const Vec<2>& p, const Vec<2>& computed) {
      const auto f = foot(p);
      if (std::abs(f.d) < 1e-14) return 0.0;
      const Vec<2> g = vscale<2>(1.0 / f.d, vsub<2>(p, f.q));
      double err = norm<2>(vsub<2>(computed, g));
      if (std::abs(p[1]) < 1e-9 && std::abs(p[0]) < a) {
        // Interior axis nodes sit on the medial segment; the mirrored foot is
        // an equally valid closest point.
        const Vec<2> qm{f.q[0], -f.q[1]};
        const Vec<2> gm = vscale<2>(1.0 / f.d, vsub<2>(p, qm));
        err = std::min(err, norm<2>(vsub<2>(computed, gm)));
      }
      return err;
    };
    return s;
  }

  if (name == "dual-circles") {
    const Vec<2> c1{0.8125, 0.4125};
    const Vec<2> c2{-0.8125, -0.4125};
    const double radius = 0.75;
    auto nearer = [=](const Vec<2>& p) {
      const double d1 = norm<2>(vsub<2>(p, c1)) - radius;
      const double d2 = norm<2>(vsub<2>(p, c2)) - radius;
      return d1 <= d2 ? c1 : c2;
    };
    s.distance = [=](const Vec<2>& p) {
      return std::min(norm<2>(vsub<2>(p, c1)), norm<2>(vsub<2>(p, c2))) - radius;
    };
    s.phi0 = s.distance;
    s.distance_gradient = [=](const Vec<2>& p) {
      const Vec<2> c = nearer(p);
      const double r = std::max(norm<2>(vsub<2>(p, c)), 1e-14);
      return vscale<2>(1.0 / r, vsub<2>(p, c));
    };
    s.psi0 = s.distance_gradient;
    s.curvature = [=](const Vec<2>& p) {
      const Vec<2> c = nearer(p);
      return 1.0 / std::max(norm<2>(vsub<2>(p, c)), 1e-14);
    };
    s.gradient_error = [=](const Vec<2>& p, const Vec<2>& computed) {
      double best = std::numeric_limits<double>::max();
      for (const Vec<2>& c : {c1, c2}) {
        const double r = std::max(norm<2>(vsub<2>(p, c)), 1e-14);
        const double d = norm<2>(vsub<2>(p, c)) - radius;
        const Vec<2> g = vscale<2>(1.0 / r, vsub<2>(p, c));
        // only the nearer disc (or either on the midline) is admissible
        const double dmin = std::min(norm<2>(vsub<2>(p, c1)),
                                     norm<2>(vsub<2>(p, c2))) - radius;
        if (d <= dmin + 1e-9) best = std::min(best, norm<2>(vsub<2>(computed, g)));
      }
      return best;
    };
    return s;
  }

  if (name == "cassini2d" || name == "cassini3d-section") {
    const double a = name == "cassini2d" ? 0.99 : 1.29;
    const double b = name == "cassini2d" ? 1.01 : 1.3;
    s.phi0 = [=](const Vec<2>& p) {
      const double u = (p[0] - a) * (p[0] - a) + p[1] * p[1];
      const double v = (p[0] + a) * (p[0] + a) + p[1] * p[1];
      return u * v - b * b * b * b;
    };
    s.psi0 = [=](const Vec<2>& p) {
      const double u = (p[0] - a) * (p[0] - a) + p[1] * p[1];
      const double v = (p[0] + a) * (p[0] + a) + p[1] * p[1];
      return Vec<2>{2.0 * (p[0] - a) * v + 2.0 * (p[0] + a) * u,
                    2.0 * p[1] * (u + v)};
    };
    // Single-loop oval (b > a): closed-form polar radius.
    auto radius = [=](double t) {
      const double c2 = std::cos(2.0 * t);
      const double s2 = std::sin(2.0 * t);
      const double inner = b * b * b * b - a * a * a * a * s2 * s2;
      return std::sqrt(a * a * c2 + std::sqrt(std::max(inner, 0.0)));
    };
    auto curve = std::make_shared<detail::PolarCurve>(radius, 1 << 17, 0.0,
                                                      2.0 * kPi);
    auto phi0 = s.phi0;
    s.distance = [=](const Vec<2>& p) {
      const double t = curve->closest_parameter(p);
      return detail::sign_of(phi0(p)) * norm<2>(vsub<2>(p, curve->point(t)));
    };
    s.distance_gradient = [=](const Vec<2>& p) {
      const double t = curve->closest_parameter(p);
      const double d = detail::sign_of(phi0(p)) * norm<2>(vsub<2>(p, curve->point(t)));
      if (std::abs(d) < 1e-14) return Vec<2>{1.0, 0.0};
      return vscale<2>(1.0 / d, vsub<2>(p, curve->point(t)));
    };
    auto psi0 = s.psi0;
    s.curvature = [=](const Vec<2>& p) {
      const double t = curve->closest_parameter(p);
      const Vec<2> q = curve->point(t);
      const double d = detail::sign_of(phi0(p)) * norm<2>(vsub<2>(p, q));
      // Implicit-curve curvature of the input level set at the foot point.
      const double u = (q[0] - a) * (q[0] - a) + q[1] * q[1];
      const double v = (q[0] + a) * (q[0] + a) + q[1] * q[1];
      const double fx = psi0(q)[0], fy = psi0(q)[1];
      const double ux = 2.0 * (q[0] - a), vx = 2.0 * (q[0] + a);
      const double uy = 2.0 * q[1], vy = 2.0 * q[1];
      const double pxx = 2.0 * v + 2.0 * ux * vx + 2.0 * u;
      const double pyy = 2.0 * v + 2.0 * uy * vy + 2.0 * u;
      const double pxy = ux * vy + uy * vx;
      const double g2 = fx * fx + fy * fy;
      const double k =
          (pxx * fy * fy - 2.0 * fx * fy * pxy + pyy * fx * fx) /
          std::max(std::pow(g2, 1.5), 1e-30);
      return detail::offset_curvature(k, d);
    };
    return s;
  }

  if (name == "star") {
    // Five-petal polar perturbation of the unit circle.
    s.phi0 = [](const Vec<2>& p) {
      const double r = norm<2>(p);
      const double t = std::atan2(p[1], p[0]);
      return r - 1.0 + std::sin(5.0 * t) / 4.0;
    };
    s.psi0 = [](const Vec<2>& p) {
      const double r = std::max(norm<2>(p), 1e-14);
      const double t = std::atan2(p[1], p[0]);
      const double c = 1.25 * std::cos(5.0 * t);
      return Vec<2>{p[0] / r - c * p[1] / (r * r), p[1] / r + c * p[0] / (r * r)};
    };
    auto radius = [](double t) { return 1.0 - std::sin(5.0 * t) / 4.0; };
    auto curve = std::make_shared<detail::PolarCurve>(radius, 1 << 17, 0.0,
                                                      2.0 * kPi);
    auto phi0 = s.phi0;
    s.distance = [=](const Vec<2>& p) {
      const double t = curve->closest_parameter(p);
      return detail::sign_of(phi0(p)) * norm<2>(vsub<2>(p, curve->point(t)));
    };
    s.distance_gradient = [=](const Vec<2>& p) {
      const double t = curve->closest_parameter(p);
      const double d = detail::sign_of(phi0(p)) * norm<2>(vsub<2>(p, curve->point(t)));
      if (std::abs(d) < 1e-14) return Vec<2>{1.0, 0.0};
      return vscale<2>(1.0 / d, vsub<2>(p, curve->point(t)));
    };
    s.curvature = [=](const Vec<2>& p) {
      const double t = curve->closest_parameter(p);
      const double r = radius(t);
      const double rp = -1.25 * std::cos(5.0 * t);
      const double rpp = 6.25 * std::sin(5.0 * t);
      const double k = (r * r + 2.0 * rp * rp - r * rpp) /
                       std::pow(r * r + rp * rp, 1.5);
      const double d = detail::sign_of(phi0(p)) * norm<2>(vsub<2>(p, curve->point(t)));
      return detail::offset_curvature(k, d);
    };
    return s;
  }

  throw std::invalid_argument("unknown 2D shape: " + name);
}

inline Shape<3> make_shape_3d(const std::string& name) {
  Shape<3> s;
  s.name = name;

  if (name == "sphere") {
    s.phi0 = [](const Vec<3>& p) { return std::exp(dot<3>(p, p)) - std::exp(1.0); };
    s.psi0 = [](const Vec<3>& p) {
      const double e = std::exp(dot<3>(p, p));
      return vscale<3>(2.0 * e, p);
    };
    s.distance = [](const Vec<3>& p) { return norm<3>(p) - 1.0; };
    s.distance_gradient = [](const Vec<3>& p) {
      const double r = norm<3>(p);
      return r > 1e-14 ? vscale<3>(1.0 / r, p) : Vec<3>{1.0, 0.0, 0.0};
    };
    s.curvature = [](const Vec<3>& p) { return 2.0 / std::max(norm<3>(p), 1e-14); };
    s.distance_hessian = [](const Vec<3>& p) {
      const double r = std::max(norm<3>(p), 1e-14);
      const Vec<3> n = vscale<3>(1.0 / r, p);
      SymMat<3> h;
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j)
          h(i, j) = ((i == j ? 1.0 : 0.0) - n[i] * n[j]) / r;
      return h;
    };
    auto grad = s.distance_gradient;
    s.gradient_error = [=](const Vec<3>& p, const Vec<3>& computed) {
      if (norm<3>(p) < 1e-9) return std::abs(norm<3>(computed) - 1.0);
      return norm<3>(vsub<3>(computed, grad(p)));
    };
    return s;
  }

  if (name == "ellipsoid") {
    const std::array<double, 3> semi{1.6, 1.2, 0.5};
    s.phi0 = [=](const Vec<3>& p) {
      double q = 0.0;
      for (int i = 0; i < 3; ++i) q += (p[i] / semi[i]) * (p[i] / semi[i]);
      return std::sqrt(q) - 1.0;
    };
    s.psi0 = [=](const Vec<3>& p) {
      double q = 0.0;
      for (int i = 0; i < 3; ++i) q += (p[i] / semi[i]) * (p[i] / semi[i]);
      const double r = std::sqrt(q);
      Vec<3> g{};
      if (r < 1e-12) return g;
      for (int i = 0; i < 3; ++i) g[i] = p[i] / (semi[i] * semi[i] * r);
      return g;
    };
    auto phi0 = s.phi0;
    s.distance = [=](const Vec<3>& p) {
      const Vec<3> q = detail::ellipsoid_closest<3>(semi, p);
      return detail::sign_of(phi0(p)) * norm<3>(vsub<3>(p, q));
    };
    s.distance_gradient = [=](const Vec<3>& p) {
      const Vec<3> q = detail::ellipsoid_closest<3>(semi, p);
      const double d = detail::sign_of(phi0(p)) * norm<3>(vsub<3>(p, q));
      if (std::abs(d) < 1e-14) return Vec<3>{1.0, 0.0, 0.0};
      return vscale<3>(1.0 / d, vsub<3>(p, q));
    };
    return s;
  }

  if (name == "cassini3d") {
    const double a = 1.29, b = 1.3;
    s.phi0 = [=](const Vec<3>& p) {
      const double u = (p[0] - a) * (p[0] - a) + p[1] * p[1] + p[2] * p[2];
      const double v = (p[0] + a) * (p[0] + a) + p[1] * p[1] + p[2] * p[2];
      return u * v - b * b * b * b;
    };
    s.psi0 = [=](const Vec<3>& p) {
      const double u = (p[0] - a) * (p[0] - a) + p[1] * p[1] + p[2] * p[2];
      const double v = (p[0] + a) * (p[0] + a) + p[1] * p[1] + p[2] * p[2];
      return Vec<3>{2.0 * (p[0] - a) * v + 2.0 * (p[0] + a) * u,
                    2.0 * p[1] * (u + v), 2.0 * p[2] * (u + v)};
    };
    // Surface of revolution about x: reduce to the 2D oval in (x, rho).
    auto section = std::make_shared<Shape<2>>(make_shape_2d("cassini3d-section"));
    auto phi0 = s.phi0;
    s.distance = [=](const Vec<3>& p) {
      const double rho = std::sqrt(p[1] * p[1] + p[2] * p[2]);
      const double d2 = std::abs(section->distance(Vec<2>{p[0], rho}));
      return detail::sign_of(phi0(p)) * d2;
    };
    s.distance_gradient = [=](const Vec<3>& p) {
      const double rho = std::sqrt(p[1] * p[1] + p[2] * p[2]);
      const Vec<2> g2 = section->distance_gradient(Vec<2>{p[0], rho});
      const double d2s = section->distance(Vec<2>{p[0], rho});
      const double want = detail::sign_of(phi0(p));
      const double flip = detail::sign_of(d2s) == want ? 1.0 : -1.0;
      Vec<3> g{flip * g2[0], 0.0, 0.0};
      if (rho > 1e-14) {
        g[1] = flip * g2[1] * p[1] / rho;
        g[2] = flip * g2[1] * p[2] / rho;
      } else {
        g[1] = flip * g2[1];
      }
      return g;
    };
    return s;
  }

  throw std::invalid_argument("unknown 3D shape: " + name);
}

inline bool is_shape_2d(const std::string& name) {
  return name == "circle" || name == "ellipse" || name == "dual-circles" ||
         name == "cassini2d" || name == "star";
}

inline bool is_shape_3d(const std::string& name) {
  return name == "sphere" || name == "ellipsoid" || name == "cassini3d";
}

}  // namespace afmm

#endif  // AFMM_SHAPES_HPP
