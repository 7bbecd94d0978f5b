#ifndef AFMM_MARCH_HPP
#define AFMM_MARCH_HPP

#include <chrono>
#include <cstring>
#include <optional>
#include <vector>

#include "afmm/core.hpp"
#include "afmm/grid.hpp"
#include "afmm/seed.hpp"
#include "afmm/systems.hpp"

namespace afmm {

template <int D>
struct MarchStep {
  std::size_t node = 0;
  UpdateCase<D> cs{};
  int tier = 0;
};

/// Acceptance record of a run: seeds first, then every marched node exactly
/// once in pop order, each with the case its accepted value came from.
template <int D>
struct MarchOrder {
  std::vector<std::size_t> seeds;
  std::vector<MarchStep<D>> steps;
};

struct MarchStats {
  std::size_t nodes = 0;
  std::size_t seeds = 0;
  std::array<std::size_t, 3> tier_count{};
  std::size_t hessian_fallbacks = 0;
  double max_gradient_residual = 0.0;
  double max_hessian_residual = 0.0;
  bool pops_monotone = true;
  double min_pop_delta = 0.0;
  bool hessian_idempotent = true;
  double seed_seconds = 0.0;
  double march_seconds = 0.0;
  double hessian_seconds = 0.0;
};

struct AfmmOptions {
  SeedOptions seed{};
  SolverOptions solver{};
  bool check_invariants = true;  // replay the Hessian pass and compare bitwise
};

template <int D>
struct AfmmResult {
  JetField<D> field;
  MarchOrder<D> order;
  MarchStats stats;

  explicit AfmmResult(std::size_t nodes) : field(nodes) {}
};

namespace detail {

class StopWatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const std::chrono::duration<double> dt = now - last_;
    last_ = now;
    return dt.count();
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

}  // namespace detail

/// Hessian pass: solves the second-derivative system at every marched node in
/// acceptance order, against the case recorded by the gradient pass so both
/// passes see the same upwind topology. Seed Hessians are never touched.
template <int D>
inline void replay_hessian(JetField<D>& field, const MarchOrder<D>& order,
                           const GridSpec<D>& grid, const SolverOptions& opt,
                           MarchStats* stats) {
  constexpr int NH = SymMat<D>::ncomp;
  for (const MarchStep<D>& step : order.steps) {
    const auto nb = detail::gather_jets<D>(step.cs, field);

    std::array<double, NH> guess{};
    for (int s = 0; s < step.cs.count; ++s)
      for (int c = 0; c < NH; ++c) guess[c] += nb[s].j1.hess.a[c];
    for (auto& v : guess) v /= step.cs.count;

    double gmax = 0.0;
    for (double v : guess) gmax = std::max(gmax, std::abs(v));
    const double tol = opt.tol_scale * std::max(1.0, gmax / grid.h);

    const Vec<D> psi = field.psi[step.node];
    auto system = [&](const std::array<double, NH>& hu, std::array<double, NH>& r,
                      std::array<double, NH * NH>* jac) {
      hessian_system<D>(step.cs, nb, grid.h, psi, hu, r, jac);
    };
    const auto result = newton_solve<NH>(system, guess, tol, opt.max_iter);
    if (result.status == NewtonStatus::Converged) {
      field.hess[step.node].a = result.x;
      if (stats)
        stats->max_hessian_residual =
            std::max(stats->max_hessian_residual, result.residual);
    } else {
      field.hess[step.node].a = guess;  // keep the neighbor average
      if (stats) ++stats->hessian_fallbacks;
    }
  }
}

/// Full reinitialization: sub-grid seeding, the ordered gradient march, then
/// the Hessian pass replayed over the recorded acceptance order.
template <int D>
inline AfmmResult<D> run_afmm(const std::vector<double>& phi0,
                              const std::vector<Vec<D>>* psi0,
                              const GridSpec<D>& grid, const AfmmOptions& opt = {}) {
  detail::StopWatch watch;
  Seeded<D> seeded = seed_nodes<D>(phi0, psi0, grid, opt.seed);

  AfmmResult<D> out(grid.node_count());
  out.field = std::move(seeded.field);
  NodeState& states = seeded.states;
  out.order.seeds = seeded.seeds;
  out.stats.seeds = seeded.seeds.size();
  out.stats.nodes = grid.node_count();
  out.stats.seed_seconds = watch.lap();

  std::vector<std::optional<Candidate<D>>> pending(grid.node_count());
  TrialHeap heap(grid.node_count());

  // Re-solves replace the pending candidate outright: the later solve sees a
  // strictly larger accepted set, and a richer case may raise phi toward the
  // true value (a kept single-axis underestimate would freeze its jet into
  // the downwind region).
  auto try_update = [&](std::size_t node) {
    auto cand = update_node<D>(node, out.field, states, grid, opt.solver);
    if (!cand) return;
    const double key = std::abs(cand->phi);
    if (heap.contains(node)) {
      pending[node] = *cand;
      heap.update(node, key);
    } else {
      pending[node] = *cand;
      heap.push(node, key);
      if (states[node] == Tag::Distant) states.promote(node, Tag::Trial);
    }
  };

  for (std::size_t seed : out.order.seeds) {
    for (const auto& nb : neighbors<D>(grid.unlinear(seed), grid)) {
      const std::size_t id = grid.linear(nb.index);
      if (states[id] == Tag::Distant && !heap.contains(id)) try_update(id);
    }
  }

  double prev_key = 0.0;
  out.order.steps.reserve(grid.node_count() - out.order.seeds.size());
  while (!heap.empty()) {
    const auto [node, key] = heap.pop();
    if (key < prev_key - 1e-12 * std::max(1.0, prev_key)) {
      out.stats.pops_monotone = false;
      out.stats.min_pop_delta = std::min(out.stats.min_pop_delta, key - prev_key);
    }
    prev_key = key;

    const Candidate<D>& cand = *pending[node];
    out.field.phi[node] = cand.phi;
    out.field.psi[node] = cand.psi;
    states.promote(node, Tag::Accepted);
    out.order.steps.push_back(MarchStep<D>{node, cand.cs, cand.report.tier});
    ++out.stats.tier_count[static_cast<std::size_t>(cand.report.tier)];
    out.stats.max_gradient_residual =
        std::max(out.stats.max_gradient_residual, cand.report.residual);

    for (const auto& nb : neighbors<D>(grid.unlinear(node), grid)) {
      const std::size_t id = grid.linear(nb.index);
      if (states[id] != Tag::Accepted) try_update(id);
    }
  }

  if (out.order.seeds.size() + out.order.steps.size() != grid.node_count())
    throw UpdateFailure("march terminated before accepting every node");
  out.stats.march_seconds = watch.lap();

  replay_hessian<D>(out.field, out.order, grid, opt.solver, &out.stats);
  if (opt.check_invariants) {
    std::vector<SymMat<D>> first = out.field.hess;
    replay_hessian<D>(out.field, out.order, grid, opt.solver, nullptr);
    out.stats.hessian_idempotent =
        std::memcmp(first.data(), out.field.hess.data(),
                    first.size() * sizeof(SymMat<D>)) == 0;
  }
  out.stats.hessian_seconds = watch.lap();
  return out;
}

template <int D>
struct FmmResult {
  std::vector<double> phi;
  MarchOrder<D> order;
  MarchStats stats;
};

/// Classical one-sided eikonal march. Seeds take the projected cell-patch
/// distance at the node; the quadratic update then marches magnitudes, and the
/// sign of the input field is applied throughout.
template <int D>
inline FmmResult<D> run_standard_fmm(const std::vector<double>& phi0,
                                     const std::vector<Vec<D>>* psi0,
                                     const GridSpec<D>& grid,
                                     const SeedOptions& seed_opt = {}) {
  detail::StopWatch watch;
  const std::vector<Vec<D>> psi =
      psi0 ? *psi0 : numerical_gradient<D>(phi0, grid);

  const std::vector<std::size_t> cells = detect_interface_cells<D>(phi0, grid);
  std::unordered_map<std::size_t, CubicPatch<D>> patches;
  for (std::size_t c : cells)
    patches.emplace(c, fit_cell_patch(grid, phi0, psi, c));

  FmmResult<D> out;
  out.phi.assign(grid.node_count(), 0.0);
  out.stats.nodes = grid.node_count();
  NodeState states(grid.node_count());

  std::unordered_map<std::size_t, std::vector<std::size_t>> node_cells;
  for (std::size_t c : cells)
    for (const auto& corner : cell_corners<D>(grid.cell_unlinear(c), grid))
      node_cells[grid.linear(corner)].push_back(c);

  std::vector<std::size_t> seed_ids;
  for (const auto& [node, _] : node_cells) seed_ids.push_back(node);
  std::sort(seed_ids.begin(), seed_ids.end());

  for (std::size_t node : seed_ids) {
    const Vec<D> p = grid.position(grid.unlinear(node));
    double best = std::numeric_limits<double>::max();
    for (std::size_t c : node_cells[node]) {
      try {
        best = std::min(best, closest_point<D>(patches.at(c), p, seed_opt.project).distance);
      } catch (const NoConvergence&) {
      }
    }
    if (best == std::numeric_limits<double>::max())
      throw InitFailure("no adjacent interface cell could seed node " +
                        std::to_string(node));
    out.phi[node] = best;  // magnitude; sign applied at the end
    states.promote(node, Tag::Accepted);
    out.order.seeds.push_back(node);
  }
  out.stats.seeds = out.order.seeds.size();
  out.stats.seed_seconds = watch.lap();

  std::vector<double> pending_val(grid.node_count(), 0.0);
  std::vector<UpdateCase<D>> pending_case(grid.node_count());
  TrialHeap heap(grid.node_count());

  // Quadratic update on distance magnitudes. A second accepted neighbor in
  // line upwind of the first (same side of the interface, not larger) admits
  // the second-order one-sided difference; otherwise the axis stays first
  // order. Axes drop largest-first until the root dominates its data.
  auto try_update = [&](std::size_t node) {
    const auto node_idx = grid.unlinear(node);
    UpdateCase<D> cs;
    struct AxisData {
      double u1, u2;
      bool second;
    };
    StaticVec<AxisData, D> axes;
    for (int a = 0; a < D; ++a) {
      bool have = false;
      AxisData best{};
      int bestdir = 0;
      std::size_t bestid = 0;
      for (int dir : {+1, -1}) {
        auto m = node_idx;
        m[a] += dir;
        if (!grid.contains(m)) continue;
        const std::size_t id = grid.linear(m);
        if (states[id] != Tag::Accepted) continue;
        if (!have || out.phi[id] < best.u1) {
          have = true;
          best = AxisData{out.phi[id], 0.0, false};
          bestdir = dir;
          bestid = id;
          auto m2 = m;
          m2[a] += dir;
          if (grid.contains(m2)) {
            const std::size_t id2 = grid.linear(m2);
            const bool same_side = (phi0[id2] < 0.0) == (phi0[id] < 0.0);
            if (states[id2] == Tag::Accepted && same_side &&
                out.phi[id2] <= out.phi[id]) {
              best.u2 = out.phi[id2];
              best.second = true;
            }
          }
        }
      }
      if (have) {
        cs.axis[cs.count] = a;
        cs.dir[cs.count] = bestdir;
        cs.neighbor[cs.count] = bestid;
        ++cs.count;
        axes.push_back(best);
      }
    }
    if (cs.count == 0) return;

    // Solve sum_a (c_a u - d_a)^2 = 1 for the largest root; on failure demote
    // every axis to first order, then drop largest-value axes one at a time.
    // A single first-order axis always yields u1 + h, so the cascade ends.
    auto solve_with = [&](bool allow_second) -> std::optional<double> {
      StaticVec<int, D> active;
      for (int s = 0; s < cs.count; ++s) active.push_back(s);
      while (active.size() > 0) {
        double cc = 0.0, cd = 0.0, dd = 0.0, umax = 0.0;
        for (int s : active) {
          const bool second = allow_second && axes[s].second;
          const double c = second ? 1.5 / grid.h : 1.0 / grid.h;
          const double d = second ? (4.0 * axes[s].u1 - axes[s].u2) / (2.0 * grid.h)
                                  : axes[s].u1 / grid.h;
          cc += c * c;
          cd += c * d;
          dd += d * d;
          umax = std::max(umax, axes[s].u1);
        }
        const double disc = cd * cd - cc * (dd - 1.0);
        if (disc >= 0.0) {
          const double root = (cd + std::sqrt(disc)) / cc;
          if (root + 1e-12 * std::max(1.0, root) >= umax) return root;
        }
        int worst = 0;
        for (int i = 1; i < active.size(); ++i)
          if (axes[active[i]].u1 > axes[active[worst]].u1) worst = i;
        StaticVec<int, D> rest;
        for (int i = 0; i < active.size(); ++i)
          if (i != worst) rest.push_back(active[i]);
        active = rest;
      }
      return std::nullopt;
    };
    std::optional<double> root = solve_with(true);
    if (!root) root = solve_with(false);
    double val;
    if (root) {
      val = *root;
    } else {
      double umin = axes[0].u1;
      for (int s = 1; s < cs.count; ++s) umin = std::min(umin, axes[s].u1);
      val = umin + grid.h;
    }

    if (heap.contains(node)) {
      if (val < heap.key_of(node)) {
        pending_val[node] = val;
        pending_case[node] = cs;
        heap.decrease(node, val);
      }
    } else {
      pending_val[node] = val;
      pending_case[node] = cs;
      heap.push(node, val);
      states.promote(node, Tag::Trial);
    }
  };

  for (std::size_t seed : out.order.seeds)
    for (const auto& nb : neighbors<D>(grid.unlinear(seed), grid))
      if (states[grid.linear(nb.index)] == Tag::Distant) try_update(grid.linear(nb.index));

  double prev_key = 0.0;
  while (!heap.empty()) {
    const auto [node, key] = heap.pop();
    if (key < prev_key - 1e-12 * std::max(1.0, prev_key)) {
      out.stats.pops_monotone = false;
      out.stats.min_pop_delta = std::min(out.stats.min_pop_delta, key - prev_key);
    }
    prev_key = key;
    out.phi[node] = pending_val[node];
    states.promote(node, Tag::Accepted);
    out.order.steps.push_back(MarchStep<D>{node, pending_case[node], 2});
    for (const auto& nb : neighbors<D>(grid.unlinear(node), grid))
      if (states[grid.linear(nb.index)] != Tag::Accepted) try_update(grid.linear(nb.index));
  }

  if (out.order.seeds.size() + out.order.steps.size() != grid.node_count())
    throw UpdateFailure("march terminated before accepting every node");

  for (std::size_t i = 0; i < out.phi.size(); ++i)
    if (phi0[i] < 0.0) out.phi[i] = -out.phi[i];
  out.stats.march_seconds = watch.lap();
  return out;
}

}  // namespace afmm

#endif  // AFMM_MARCH_HPP
