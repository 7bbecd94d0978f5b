#ifndef AFMM_ANALYSIS_HPP
#define AFMM_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "afmm/core.hpp"
#include "afmm/grid.hpp"
#include "afmm/shapes.hpp"

namespace afmm {

/// Divergence of the unit normal expanded in jet data:
///   kappa = (tr(H) |psi|^2 - psi' H psi) / |psi|^3.
/// 1/r for a circle's distance field at radius r, 2/r for a sphere.
template <int D>
inline double curvature(const Vec<D>& psi, const SymMat<D>& hess) {
  const double n = norm<D>(psi);
  if (n <= 0.1) throw DegenerateGradient("gradient norm below 0.1 in curvature");
  const double quad = dot<D>(psi, hess.apply(psi));
  return (hess.trace() * n * n - quad) / (n * n * n);
}

template <int D>
inline std::optional<double> try_curvature(const Vec<D>& psi, const SymMat<D>& hess) {
  if (norm<D>(psi) <= 0.1) return std::nullopt;
  return curvature<D>(psi, hess);
}

enum class Region { Whole, Band };

inline const char* region_name(Region r) {
  return r == Region::Whole ? "whole" : "band";
}

struct NormOptions {
  Region region = Region::Whole;
  double band_width = 9.0;  // band is |phi| <= band_width * h
};

struct ErrorEntry {
  std::string quantity;  // "phi", "psi", "kappa"
  double l2 = 0.0;
  double linf = 0.0;
  std::size_t nodes = 0;
  std::size_t excluded = 0;  // kappa: reference magnitude or gradient too small
};

struct ErrorReport {
  int n = 0;
  double h = 0.0;
  Region region = Region::Whole;
  std::vector<ErrorEntry> entries;

  const ErrorEntry& operator[](const std::string& q) const {
    for (const auto& e : entries)
      if (e.quantity == q) return e;
    throw std::out_of_range("no entry for " + q);
  }
};

namespace detail {

struct Accumulator {
  double sq = 0.0;
  double max = 0.0;
  std::size_t count = 0;

  void add(double err) {
    sq += err * err;
    max = std::max(max, std::abs(err));
    ++count;
  }
  double l2() const { return count ? std::sqrt(sq / count) : 0.0; }
};

}  // namespace detail

/// Node errors against the shape oracles over the whole grid or the near band.
/// The band is selected by the computed field. L2 is the root mean square, so
/// Linf >= L2 on any region. Curvature errors are relative, and nodes whose
/// reference curvature is below 1e-6 (or whose computed gradient is
/// degenerate) are excluded and counted.
template <int D>
inline ErrorReport error_norms(const JetField<D>& field, const Shape<D>& shape,
                               const GridSpec<D>& grid, const NormOptions& opt = {}) {
  detail::Accumulator phi_acc, psi_acc, kap_acc;
  std::size_t excluded = 0;
  const double band = opt.band_width * grid.h;

  const std::size_t nodes = grid.node_count();
  for (std::size_t i = 0; i < nodes; ++i) {
    if (opt.region == Region::Band && std::abs(field.phi[i]) > band) continue;
    const Vec<D> p = grid.position(grid.unlinear(i));
    phi_acc.add(field.phi[i] - shape.distance(p));
    if (shape.distance_gradient) psi_acc.add(shape.psi_error(p, field.psi[i]));
    if (shape.curvature) {
      const double ke = shape.curvature(p);
      const auto k = try_curvature<D>(field.psi[i], field.hess[i]);
      if (std::abs(ke) < 1e-6 || !k) {
        ++excluded;
      } else {
        kap_acc.add((*k - ke) / ke);
      }
    }
  }
  if (phi_acc.count == 0) throw EmptyRegion("no nodes in the requested region");

  ErrorReport report;
  report.n = grid.n;
  report.h = grid.h;
  report.region = opt.region;
  report.entries.push_back({"phi", phi_acc.l2(), phi_acc.max, phi_acc.count, 0});
  if (shape.distance_gradient)
    report.entries.push_back({"psi", psi_acc.l2(), psi_acc.max, psi_acc.count, 0});
  if (shape.curvature)
    report.entries.push_back(
        {"kappa", kap_acc.l2(), kap_acc.max, kap_acc.count, excluded});
  return report;
}

/// Same norms for a value-only field (the classical-march output).
template <int D>
inline ErrorReport error_norms_phi(const std::vector<double>& phi,
                                   const Shape<D>& shape, const GridSpec<D>& grid,
                                   const NormOptions& opt = {}) {
  detail::Accumulator acc;
  const double band = opt.band_width * grid.h;
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    if (opt.region == Region::Band && std::abs(phi[i]) > band) continue;
    acc.add(phi[i] - shape.distance(grid.position(grid.unlinear(i))));
  }
  if (acc.count == 0) throw EmptyRegion("no nodes in the requested region");
  ErrorReport report;
  report.n = grid.n;
  report.h = grid.h;
  report.region = opt.region;
  report.entries.push_back({"phi", acc.l2(), acc.max, acc.count, 0});
  return report;
}

/// Least-squares slope of log(error) against log(h); needs three grids and
/// positive errors.
inline double fit_order(const std::vector<std::pair<double, double>>& h_and_error) {
  if (h_and_error.size() < 3)
    throw std::invalid_argument("order fit needs at least three grids");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [h, err] : h_and_error) {
    if (!(err > 0.0)) throw NonPositiveError("order fit needs positive errors");
    const double x = std::log(h), y = std::log(err);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(h_and_error.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct StencilSample {
  double phi = 0.0;
  double psi = 0.0;  // both components coincide on the diagonal
  double level_error = 0.0;
  double gradient_error = 0.0;
};

/// Closed-form update of the diagonal stencil against a circle of radius r0:
/// the node at (x, x) is solved from exact data at (x+h, x) and (x, x+h).
/// The gradient error tends to (sqrt(2)-1)/sqrt(2) as x -> 0 at any h.
inline StencilSample stencil_study(double x, double h, double r0) {
  if (!(x > 0.0) || !(std::sqrt(2.0) * x < r0) || !(h > 0.0))
    throw std::invalid_argument("stencil study needs 0 < sqrt(2) x < r0 and h > 0");
  StencilSample out;
  const double root = std::sqrt(h * h + 2.0 * h * x + 2.0 * x * x);
  out.phi = 2.0 * x * root / (h + 2.0 * x) - r0;
  out.psi = (h + 2.0 * x) / (2.0 * root);
  const double phi_true = std::sqrt(2.0) * x - r0;
  const double psi_true = 1.0 / std::sqrt(2.0);
  out.level_error = out.phi - phi_true;
  out.gradient_error = std::sqrt(2.0) * std::abs(out.psi - psi_true);
  return out;
}

/// Median and band maximum of | |psi| - 1 |; the run summaries report both.
struct GradientNormStats {
  double median = 0.0;
  double band_max = 0.0;
};

template <int D>
inline GradientNormStats gradient_norm_stats(const JetField<D>& field,
                                             const GridSpec<D>& grid,
                                             double band_width = 9.0) {
  std::vector<double> dev;
  dev.reserve(field.size());
  GradientNormStats out;
  const double band = band_width * grid.h;
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double d = std::abs(norm<D>(field.psi[i]) - 1.0);
    dev.push_back(d);
    if (std::abs(field.phi[i]) <= band) out.band_max = std::max(out.band_max, d);
  }
  std::nth_element(dev.begin(), dev.begin() + dev.size() / 2, dev.end());
  out.median = dev[dev.size() / 2];
  return out;
}

}  // namespace afmm

#endif  // AFMM_ANALYSIS_HPP
