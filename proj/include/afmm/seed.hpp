#ifndef AFMM_SEED_HPP
#define AFMM_SEED_HPP

#include <algorithm>
#include <limits>
#include <unordered_map>
#include <vector>

#include "afmm/core.hpp"
#include "afmm/grid.hpp"
#include "afmm/interp.hpp"
#include "afmm/project.hpp"

namespace afmm {

struct SeedOptions {
  double alpha = 0.1;  // sub-grid spacing as a fraction of h
  ProjectOptions project{};
};

/// Cells whose corner values are not all of one strict sign; a zero corner
/// counts as a crossing. Throws EmptyInterface when no cell qualifies.
template <int D>
inline std::vector<std::size_t> detect_interface_cells(const std::vector<double>& phi0,
                                                       const GridSpec<D>& grid) {
  std::vector<std::size_t> cells;
  const std::size_t total = grid.cell_count();
  for (std::size_t c = 0; c < total; ++c) {
    const auto corners = cell_corners<D>(grid.cell_unlinear(c), grid);
    bool any_pos = false, any_neg = false, any_zero = false;
    for (const auto& corner : corners) {
      const double v = phi0[grid.linear(corner)];
      if (v > 0.0) any_pos = true;
      else if (v < 0.0) any_neg = true;
      else any_zero = true;
    }
    if (any_zero || (any_pos && any_neg)) cells.push_back(c);
  }
  if (cells.empty()) throw EmptyInterface("input field has no sign change");
  return cells;
}

/// Gradient by second-order differences of the level set; used when the input
/// carries no gradient data.
template <int D>
inline std::vector<Vec<D>> numerical_gradient(const std::vector<double>& phi0,
                                              const GridSpec<D>& grid) {
  std::vector<Vec<D>> psi(grid.node_count());
  auto field = [&](const typename GridSpec<D>::Index& idx) {
    return phi0[grid.linear(idx)];
  };
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const auto idx = grid.unlinear(i);
    for (int a = 0; a < D; ++a) psi[i][a] = deriv_axis<D>(grid, field, idx, a);
  }
  return psi;
}

/// Cell interpolant from the corner jets of the input data. Mixed corner
/// derivatives come from the averaged differences of the gradient field.
inline CubicPatch<2> fit_cell_patch(const GridSpec<2>& grid,
                                    const std::vector<double>& phi0,
                                    const std::vector<Vec<2>>& psi0,
                                    std::size_t cell) {
  const auto cell_idx = grid.cell_unlinear(cell);
  const auto corners = cell_corners<2>(cell_idx, grid);
  std::array<double, 4> f{}, fx{}, fy{}, fxy{};
  for (int k = 0; k < 4; ++k) {
    const std::size_t id = grid.linear(corners[k]);
    f[k] = phi0[id];
    fx[k] = psi0[id][0];
    fy[k] = psi0[id][1];
    fxy[k] = cross_derivs_2d(grid, psi0, corners[k]);
  }
  return fit_bicubic(f, fx, fy, fxy, grid.position(cell_idx), grid.h);
}

inline CubicPatch<3> fit_cell_patch(const GridSpec<3>& grid,
                                    const std::vector<double>& phi0,
                                    const std::vector<Vec<3>>& psi0,
                                    std::size_t cell) {
  const auto cell_idx = grid.cell_unlinear(cell);
  const auto corners = cell_corners<3>(cell_idx, grid);
  std::array<double, 8> f{}, fx{}, fy{}, fz{}, fxy{}, fxz{}, fyz{}, fxyz{};
  for (int k = 0; k < 8; ++k) {
    const std::size_t id = grid.linear(corners[k]);
    f[k] = phi0[id];
    fx[k] = psi0[id][0];
    fy[k] = psi0[id][1];
    fz[k] = psi0[id][2];
    const MixedDerivs3 mx = cross_derivs_3d(grid, psi0, corners[k]);
    fxy[k] = mx.xy;
    fxz[k] = mx.xz;
    fyz[k] = mx.yz;
    fxyz[k] = mx.xyz;
  }
  return fit_tricubic(f, fx, fy, fz, fxy, fxz, fyz, fxyz, grid.position(cell_idx),
                      grid.h);
}

namespace detail {

/// Sub-grid offsets around a node. 2D uses the full 3x3 block; 3D drops the
/// eight corners, leaving the 19 points the difference stencils touch.
template <int D>
inline std::vector<std::array<int, D>> subgrid_offsets() {
  std::vector<std::array<int, D>> out;
  std::array<int, D> off{};
  off.fill(-1);
  for (;;) {
    int manhattan = 0;
    for (int a = 0; a < D; ++a) manhattan += std::abs(off[a]);
    if (D == 2 || manhattan <= 2) out.push_back(off);
    int a = 0;
    while (a < D && ++off[a] == 2) off[a++] = -1;
    if (a == D) break;
  }
  return out;
}

template <int D>
inline int subgrid_find(const std::vector<std::array<int, D>>& offsets,
                        const std::array<int, D>& key) {
  for (std::size_t i = 0; i < offsets.size(); ++i)
    if (offsets[i] == key) return static_cast<int>(i);
  return -1;
}

}  // namespace detail

template <int D>
struct Seeded {
  JetField<D> field;
  NodeState states;
  std::vector<std::size_t> seeds;  // ascending node ids

  Seeded(std::size_t nodes) : field(nodes), states(nodes) {}
};

/// Initializes every corner node of every interface cell with a full jet.
///
/// Each node gets a sub-grid of signed distances against the interpolant of
/// one adjacent interface cell (the one whose projected center distance is
/// smallest), then value, gradient, and Hessian come from second-order
/// differences of those distances. The sign of a sub-grid distance is the
/// sign of the interpolant there.
template <int D>
inline Seeded<D> seed_nodes(const std::vector<double>& phi0,
                            const std::vector<Vec<D>>* psi0_opt,
                            const GridSpec<D>& grid, const SeedOptions& opt = {}) {
  const std::vector<Vec<D>> psi0 =
      psi0_opt ? *psi0_opt : numerical_gradient<D>(phi0, grid);

  const std::vector<std::size_t> cells = detect_interface_cells<D>(phi0, grid);
  std::unordered_map<std::size_t, CubicPatch<D>> patches;
  patches.reserve(cells.size());
  for (std::size_t c : cells) patches.emplace(c, fit_cell_patch(grid, phi0, psi0, c));

  // Seed set: corners of interface cells, each with its candidate cells.
  std::unordered_map<std::size_t, std::vector<std::size_t>> node_cells;
  for (std::size_t c : cells)
    for (const auto& corner : cell_corners<D>(grid.cell_unlinear(c), grid))
      node_cells[grid.linear(corner)].push_back(c);

  std::vector<std::size_t> seed_ids;
  seed_ids.reserve(node_cells.size());
  for (const auto& [node, _] : node_cells) seed_ids.push_back(node);
  std::sort(seed_ids.begin(), seed_ids.end());

  const auto offsets = detail::subgrid_offsets<D>();
  const double sub_h = opt.alpha * grid.h;

  Seeded<D> out(grid.node_count());
  for (std::size_t node : seed_ids) {
    const auto node_idx = grid.unlinear(node);
    const Vec<D> center = grid.position(node_idx);

    // Rank candidate cells by the projected distance of the node itself.
    struct Candidate {
      std::size_t cell;
      double dist;
    };
    std::vector<Candidate> ranked;
    for (std::size_t c : node_cells[node]) {
      try {
        const auto proj = closest_point<D>(patches.at(c), center, opt.project);
        ranked.push_back({c, proj.distance});
      } catch (const NoConvergence&) {
        ranked.push_back({c, std::numeric_limits<double>::max()});
      }
    }
    std::sort(ranked.begin(), ranked.end(),
              [](const Candidate& a, const Candidate& b) { return a.dist < b.dist; });

    bool done = false;
    for (const Candidate& cand : ranked) {
      if (cand.dist == std::numeric_limits<double>::max()) break;
      const CubicPatch<D>& patch = patches.at(cand.cell);
      std::vector<double> dist(offsets.size());
      bool ok = true;
      for (std::size_t k = 0; k < offsets.size() && ok; ++k) {
        Vec<D> p = center;
        for (int a = 0; a < D; ++a) p[a] += sub_h * offsets[k][a];
        try {
          const auto proj = closest_point<D>(patch, p, opt.project);
          double side = patch.value(p) > 0.0 ? 1.0
                        : patch.value(p) < 0.0
                            ? -1.0
                            : (phi0[node] >= 0.0 ? 1.0 : -1.0);
          dist[k] = side * proj.distance;
        } catch (const NoConvergence&) {
          ok = false;
        }
      }
      if (!ok) continue;

      auto at = [&](std::array<int, D> key) {
        const int i = detail::subgrid_find<D>(offsets, key);
        return dist[static_cast<std::size_t>(i)];
      };

      const double d0 = at(std::array<int, D>{});
      out.field.phi[node] = d0;
      for (int a = 0; a < D; ++a) {
        std::array<int, D> plus{}, minus{};
        plus[a] = 1;
        minus[a] = -1;
        out.field.psi[node][a] = (at(plus) - at(minus)) / (2.0 * sub_h);
        out.field.hess[node](a, a) =
            (at(plus) - 2.0 * d0 + at(minus)) / (sub_h * sub_h);
      }
      for (int a = 0; a < D; ++a)
        for (int b = a + 1; b < D; ++b) {
          std::array<int, D> pp{}, pm{}, mp{}, mm{};
          pp[a] = 1;
          pp[b] = 1;
          pm[a] = 1;
          pm[b] = -1;
          mp[a] = -1;
          mp[b] = 1;
          mm[a] = -1;
          mm[b] = -1;
          out.field.hess[node](a, b) =
              (at(pp) - at(pm) - at(mp) + at(mm)) / (4.0 * sub_h * sub_h);
        }
      done = true;
      break;
    }
    if (!done)
      throw InitFailure("no adjacent interface cell could seed node " +
                        std::to_string(node));
    out.states.promote(node, Tag::Accepted);
    out.seeds.push_back(node);
  }
  return out;
}

}  // namespace afmm

#endif  // AFMM_SEED_HPP
