#ifndef AFMM_SYSTEMS_HPP
#define AFMM_SYSTEMS_HPP

#include <algorithm>
#include <optional>

#include "afmm/core.hpp"
#include "afmm/grid.hpp"

namespace afmm {

/// Which axes supply upwind information at a node, with the upwind side and
/// the accepted neighbor per used axis. Slots 0..count-1 are in axis order.
/// A slot may carry a second accepted node one step further upwind; the
/// one-sided difference on that axis is then second order.
template <int D>
struct UpdateCase {
  int count = 0;
  std::array<int, D> axis{};
  std::array<int, D> dir{};  // +1: neighbor at node + e_axis
  std::array<std::size_t, D> neighbor{};
  std::array<unsigned char, D> second{};
  std::array<std::size_t, D> neighbor2{};

  int slot_of(int a) const {
    for (int s = 0; s < count; ++s)
      if (axis[s] == a) return s;
    return -1;
  }
  bool uses(int a) const { return slot_of(a) >= 0; }
};

template <int D>
struct NeighborJet {
  double phi = 0.0;
  Vec<D> psi{};
  SymMat<D> hess{};
};

/// Jets backing one case slot; j2 is meaningful only when the slot carries a
/// second upwind node.
template <int D>
struct SlotJets {
  NeighborJet<D> j1{};
  NeighborJet<D> j2{};
};

struct SolveReport {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  bool valid = false;
  int tier = 0;  // 0: full case, 1: reduced case, 2: eikonal quadratic
};

enum class NewtonStatus { Converged, MaxIterations, SingularJacobian };

template <int N>
struct NewtonResult {
  NewtonStatus status = NewtonStatus::MaxIterations;
  int iterations = 0;
  double residual = 0.0;
  std::array<double, N> x{};
};

/// Damped Newton for the small upwind systems. Steps halve (at most eight
/// times) until the residual max-norm drops; convergence is residual-based so
/// a guess that already solves the system is accepted as-is.
template <int N, class Fn>
inline NewtonResult<N> newton_solve(Fn&& system, std::array<double, N> guess,
                                    double tol, int max_iter) {
  NewtonResult<N> out;
  out.x = guess;

  std::array<double, N> r{};
  std::array<double, N * N> jac{};
  auto max_norm = [](const std::array<double, N>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  };

  system(out.x, r, &jac);
  double rnorm = max_norm(r);
  for (int it = 0; it < max_iter; ++it) {
    if (rnorm <= tol) {
      out.status = NewtonStatus::Converged;
      out.iterations = it;
      out.residual = rnorm;
      return out;
    }
    std::array<double, N> step = r;
    for (auto& v : step) v = -v;
    {
      auto a = jac;
      if (!solve_linear<N>(a, step)) {
        out.status = NewtonStatus::SingularJacobian;
        out.iterations = it;
        out.residual = rnorm;
        return out;
      }
    }
    double t = 1.0;
    bool moved = false;
    for (int half = 0; half <= 8; ++half) {
      std::array<double, N> xt = out.x;
      for (int i = 0; i < N; ++i) xt[i] += t * step[i];
      std::array<double, N> rt{};
      system(xt, rt, nullptr);
      if (max_norm(rt) < rnorm) {
        out.x = xt;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) {
      out.iterations = it;
      out.residual = rnorm;
      return out;  // stalled
    }
    system(out.x, r, &jac);
    rnorm = max_norm(r);
  }
  out.iterations = max_iter;
  out.residual = rnorm;
  if (rnorm <= tol) out.status = NewtonStatus::Converged;
  return out;
}

namespace detail {

/// One upwind difference of unknown component w along a used axis slot:
///   D u = dir * (u_neighbor - u_node) / h.
/// Accumulates mult * D into the residual row and, when the multiplier is
/// itself an unknown (mult_index >= 0), the matching Jacobian entries.
template <int NU>
struct SystemAccum {
  std::array<double, NU>& r;
  std::array<double, NU * NU>* jac;

  void advect(int row, double mult, int mult_index, double diff, int comp,
              double ddiff_dcomp) {
    r[row] += mult * diff;
    if (!jac) return;
    if (mult_index >= 0) (*jac)[row * NU + mult_index] += diff;
    (*jac)[row * NU + comp] += mult * ddiff_dcomp;
  }
};

}  // namespace detail

namespace detail {

/// One-sided difference of an unknown at the node against the slot's upwind
/// data: first order from one node, second order when the slot carries two.
template <int D>
struct UpwindDiff {
  const UpdateCase<D>& cs;
  double h;

  double value(int slot, double u_node, double u1, double u2) const {
    if (cs.second[slot])
      return cs.dir[slot] * (-3.0 * u_node + 4.0 * u1 - u2) / (2.0 * h);
    return cs.dir[slot] * (u1 - u_node) / h;
  }
  double d_du(int slot) const {
    return cs.second[slot] ? -1.5 * cs.dir[slot] / h : -cs.dir[slot] / h;
  }
};

}  // namespace detail

/// Residual of the gradient system for the case's first D+1 equations at the
/// trial unknowns u = (phi, psi). Derivatives along missing axes are replaced
/// by in-case derivatives of the matching gradient component, or dropped when
/// no replacement exists.
template <int D>
inline void gradient_system(const UpdateCase<D>& cs,
                            const std::array<SlotJets<D>, D>& nb, double h,
                            const std::array<double, D + 1>& u,
                            std::array<double, D + 1>& r,
                            std::array<double, (D + 1) * (D + 1)>* jac) {
  constexpr int NU = D + 1;
  r.fill(0.0);
  if (jac) jac->fill(0.0);
  detail::SystemAccum<NU> acc{r, jac};
  const detail::UpwindDiff<D> dd{cs, h};

  const double phi = u[0];
  auto psi = [&](int c) { return u[1 + c]; };

  // |grad phi|^2 = 1: used axes difference phi, missing axes contribute psi^2.
  for (int s = 0; s < cs.count; ++s) {
    const int a = cs.axis[s];
    const double diff = dd.value(s, phi, nb[s].j1.phi, nb[s].j2.phi);
    acc.advect(0, psi(a), 1 + a, diff, 0, dd.d_du(s));
  }
  for (int b = 0; b < D; ++b) {
    if (cs.uses(b)) continue;
    r[0] += psi(b) * psi(b);
    if (jac) (*jac)[0 * NU + (1 + b)] += 2.0 * psi(b);
  }
  r[0] -= 1.0;

  // Component rows of grad(|grad phi|^2) = 0.
  for (int c = 0; c < D; ++c) {
    const int row = 1 + c;
    for (int s = 0; s < cs.count; ++s) {
      const int a = cs.axis[s];
      const double diff = dd.value(s, psi(c), nb[s].j1.psi[c], nb[s].j2.psi[c]);
      acc.advect(row, psi(a), 1 + a, diff, 1 + c, dd.d_du(s));
    }
    const int sc = cs.slot_of(c);
    if (sc < 0) continue;
    for (int b = 0; b < D; ++b) {
      if (cs.uses(b)) continue;
      // psi^b d_b psi^c becomes psi^b D_c psi^b by symmetry of the Hessian.
      const double diff = dd.value(sc, psi(b), nb[sc].j1.psi[b], nb[sc].j2.psi[b]);
      acc.advect(row, psi(b), 1 + b, diff, 1 + b, dd.d_du(sc));
    }
  }
}

/// Residual of the Hessian system at trial unknowns hu, given the already
/// solved gradient at the node. Missing-axis derivatives are replaced through
/// the symmetry of third derivatives; when both replacements exist they are
/// averaged, matching the mixed rows of the reduced systems.
template <int D>
inline void hessian_system(const UpdateCase<D>& cs,
                           const std::array<SlotJets<D>, D>& nb, double h,
                           const Vec<D>& psi,
                           const std::array<double, SymMat<D>::ncomp>& hu,
                           std::array<double, SymMat<D>::ncomp>& r,
                           std::array<double, SymMat<D>::ncomp * SymMat<D>::ncomp>* jac) {
  constexpr int NU = SymMat<D>::ncomp;
  r.fill(0.0);
  if (jac) jac->fill(0.0);
  detail::SystemAccum<NU> acc{r, jac};
  const detail::UpwindDiff<D> dd{cs, h};

  auto upwind = [&](int row, double mult, int slot, int comp) {
    const double diff =
        dd.value(slot, hu[comp], nb[slot].j1.hess.a[comp], nb[slot].j2.hess.a[comp]);
    acc.advect(row, mult, -1, diff, comp, dd.d_du(slot));
  };

  for (int a = 0; a < D; ++a) {
    for (int b = a; b < D; ++b) {
      const int row = SymMat<D>::index(a, b);

      // Quadratic part: (H H)_ab.
      for (int c = 0; c < D; ++c) {
        const int e1 = SymMat<D>::index(a, c);
        const int e2 = SymMat<D>::index(c, b);
        r[row] += hu[e1] * hu[e2];
        if (jac) {
          (*jac)[row * NU + e1] += hu[e2];
          (*jac)[row * NU + e2] += hu[e1];
        }
      }

      // Advection of H_ab along the solved gradient.
      for (int c = 0; c < D; ++c) {
        const int sc = cs.slot_of(c);
        if (sc >= 0) {
          upwind(row, psi[c], sc, row);
          continue;
        }
        const int sa = cs.slot_of(a);
        const int sb = cs.slot_of(b);
        if (sa >= 0 && sb >= 0 && a != b) {
          upwind(row, 0.5 * psi[c], sa, SymMat<D>::index(c, b));
          upwind(row, 0.5 * psi[c], sb, SymMat<D>::index(c, a));
        } else if (sa >= 0) {
          upwind(row, psi[c], sa, SymMat<D>::index(c, b));
        } else if (sb >= 0) {
          upwind(row, psi[c], sb, SymMat<D>::index(c, a));
        }
        // Neither index available: the term has no in-case replacement.
      }
    }
  }
}

/// A candidate passes when its magnitude is at least every used neighbor's and
/// its gradient points the same general way as each of them.
template <int D>
inline bool validate_gradient(const std::array<double, D + 1>& u,
                              const UpdateCase<D>& cs,
                              const std::array<SlotJets<D>, D>& nb) {
  const double phi = u[0];
  Vec<D> psi;
  for (int c = 0; c < D; ++c) psi[c] = u[1 + c];
  const double slack = 1e-9 * std::max(1.0, std::abs(phi));
  for (int s = 0; s < cs.count; ++s) {
    if (std::abs(phi) + slack < std::abs(nb[s].j1.phi)) return false;
    if (dot<D>(psi, nb[s].j1.psi) < -slack) return false;
  }
  return true;
}

struct SolverOptions {
  double tol_scale = 1e-10;
  int max_iter = 40;
};

/// Smallest admissible root of the one-sided eikonal quadratic on distance
/// magnitudes: drops the largest neighbor until the root dominates the data.
template <int D>
inline double eikonal_quadratic(StaticVec<double, D> mags, double h) {
  std::sort(mags.begin(), mags.end());
  for (int m = mags.size(); m >= 1; --m) {
    double s = 0.0, q = 0.0;
    for (int i = 0; i < m; ++i) {
      s += mags[i];
      q += mags[i] * mags[i];
    }
    const double disc = s * s - m * (q - h * h);
    if (disc < 0.0) continue;
    const double root = (s + std::sqrt(disc)) / m;
    if (root + 1e-12 * std::max(1.0, root) >= mags[m - 1]) return root;
  }
  return mags[0] + h;  // single-neighbor fallback; cannot fail
}

template <int D>
struct Candidate {
  double phi = 0.0;
  Vec<D> psi{};
  UpdateCase<D> cs{};
  SolveReport report{};
};

namespace detail {

template <int D>
inline std::array<SlotJets<D>, D> gather_jets(const UpdateCase<D>& cs,
                                              const JetField<D>& field) {
  std::array<SlotJets<D>, D> nb{};
  for (int s = 0; s < cs.count; ++s) {
    const std::size_t id = cs.neighbor[s];
    nb[s].j1 = NeighborJet<D>{field.phi[id], field.psi[id], field.hess[id]};
    if (cs.second[s]) {
      const std::size_t id2 = cs.neighbor2[s];
      nb[s].j2 = NeighborJet<D>{field.phi[id2], field.psi[id2], field.hess[id2]};
    }
  }
  return nb;
}

template <int D>
inline std::optional<Candidate<D>> solve_gradient_case(
    const UpdateCase<D>& cs, const std::array<SlotJets<D>, D>& nb, double h,
    const SolverOptions& opt, int tier) {
  std::array<double, D + 1> guess{};
  for (int s = 0; s < cs.count; ++s) {
    guess[0] += nb[s].j1.phi;
    for (int c = 0; c < D; ++c) guess[1 + c] += nb[s].j1.psi[c];
  }
  for (auto& v : guess) v /= cs.count;

  const double tol = opt.tol_scale * std::max(1.0, std::abs(guess[0]) / h);
  auto system = [&](const std::array<double, D + 1>& u, std::array<double, D + 1>& r,
                    std::array<double, (D + 1) * (D + 1)>* jac) {
    gradient_system<D>(cs, nb, h, u, r, jac);
  };
  const auto result = newton_solve<D + 1>(system, guess, tol, opt.max_iter);
  if (result.status != NewtonStatus::Converged) return std::nullopt;
  if (!validate_gradient<D>(result.x, cs, nb)) return std::nullopt;

  Candidate<D> cand;
  cand.phi = result.x[0];
  for (int c = 0; c < D; ++c) cand.psi[c] = result.x[1 + c];
  cand.cs = cs;
  cand.report = SolveReport{true, result.iterations, result.residual, true, tier};
  return cand;
}

}  // namespace detail

/// Gradient-pass update of one node from its accepted neighbors.
///
/// The full case (every axis with an accepted neighbor, smaller-|phi| side
/// when both are accepted, second upwind node attached when causal) is tried
/// first, demoting to one-node differences before giving up on it; on solver
/// or validity failure all reduced axis subsets follow, largest first; the
/// last resort is the eikonal quadratic on magnitudes with the normalized
/// upwind difference gradient. Returns nullopt only when the node has no
/// accepted neighbor.
template <int D>
inline std::optional<Candidate<D>> update_node(std::size_t node,
                                               const JetField<D>& field,
                                               const NodeState& states,
                                               const GridSpec<D>& grid,
                                               const SolverOptions& opt = {}) {
  const auto node_idx = grid.unlinear(node);

  UpdateCase<D> full;
  for (int a = 0; a < D; ++a) {
    bool have = false;
    double best = 0.0;
    int best_dir = 0;
    std::size_t best_id = 0;
    for (int dir : {+1, -1}) {
      auto m = node_idx;
      m[a] += dir;
      if (!grid.contains(m)) continue;
      const std::size_t id = grid.linear(m);
      if (states[id] != Tag::Accepted) continue;
      const double mag = std::abs(field.phi[id]);
      if (!have || mag < best) {
        have = true;
        best = mag;
        best_dir = dir;
        best_id = id;
      }
    }
    if (!have) continue;
    const int s = full.count;
    full.axis[s] = a;
    full.dir[s] = best_dir;
    full.neighbor[s] = best_id;
    ++full.count;
    // A second accepted node straight upwind admits the second-order
    // difference when it is causal (not larger) and on the same side.
    auto m2 = node_idx;
    m2[a] += 2 * best_dir;
    if (grid.contains(m2)) {
      const std::size_t id2 = grid.linear(m2);
      if (states[id2] == Tag::Accepted &&
          std::abs(field.phi[id2]) <= std::abs(field.phi[best_id]) &&
          (field.phi[id2] < 0.0) == (field.phi[best_id] < 0.0)) {
        full.second[s] = 1;
        full.neighbor2[s] = id2;
      }
    }
  }
  if (full.count == 0) return std::nullopt;

  const auto nb_full = detail::gather_jets<D>(full, field);
  if (auto cand = detail::solve_gradient_case<D>(full, nb_full, grid.h, opt, 0))
    return cand;
  bool any_second = false;
  for (int s = 0; s < full.count; ++s) any_second |= full.second[s] != 0;
  if (any_second) {
    UpdateCase<D> first_order = full;
    first_order.second.fill(0);
    const auto nb = detail::gather_jets<D>(first_order, field);
    if (auto cand = detail::solve_gradient_case<D>(first_order, nb, grid.h, opt, 0))
      return cand;
  }

  // Reduced cases: every proper nonempty axis subset, larger subsets first,
  // then closer-to-interface data first; one-node differences only.
  if (full.count > 1) {
    struct Sub {
      unsigned mask;
      int size;
      double phisum;
    };
    StaticVec<Sub, (1 << D)> subs;
    for (unsigned mask = 1; mask + 1 < (1u << full.count); ++mask) {
      Sub s{mask, 0, 0.0};
      for (int i = 0; i < full.count; ++i)
        if (mask & (1u << i)) {
          ++s.size;
          s.phisum += std::abs(nb_full[i].j1.phi);
        }
      subs.push_back(s);
    }
    std::sort(subs.begin(), subs.end(), [](const Sub& a, const Sub& b) {
      if (a.size != b.size) return a.size > b.size;
      return a.phisum < b.phisum;
    });
    for (const Sub& s : subs) {
      UpdateCase<D> cs;
      for (int i = 0; i < full.count; ++i) {
        if (!(s.mask & (1u << i))) continue;
        cs.axis[cs.count] = full.axis[i];
        cs.dir[cs.count] = full.dir[i];
        cs.neighbor[cs.count] = full.neighbor[i];
        ++cs.count;
      }
      const auto nb = detail::gather_jets<D>(cs, field);
      if (auto cand = detail::solve_gradient_case<D>(cs, nb, grid.h, opt, 1))
        return cand;
    }
  }

  // Final fallback: first-order eikonal quadratic on magnitudes; the gradient
  // is the normalized upwind difference.
  StaticVec<double, D> mags;
  double side = nb_full[0].j1.phi;
  for (int s = 0; s < full.count; ++s) {
    mags.push_back(std::abs(nb_full[s].j1.phi));
    if (std::abs(nb_full[s].j1.phi) < std::abs(side)) side = nb_full[s].j1.phi;
  }
  Candidate<D> cand;
  const double mag = eikonal_quadratic<D>(mags, grid.h);
  cand.phi = (side < 0.0 ? -1.0 : 1.0) * mag;
  UpdateCase<D> plain = full;
  plain.second.fill(0);
  for (int s = 0; s < plain.count; ++s) {
    const int a = plain.axis[s];
    cand.psi[a] = plain.dir[s] * (nb_full[s].j1.phi - cand.phi) / grid.h;
  }
  if (norm<D>(cand.psi) < 1e-12) cand.psi[0] = 1.0;
  cand.psi = normalized<D>(cand.psi);
  cand.cs = plain;
  cand.report = SolveReport{true, 0, 0.0, true, 2};
  return cand;
}

}  // namespace afmm

#endif  // AFMM_SYSTEMS_HPP
