#ifndef AFMM_GRID_HPP
#define AFMM_GRID_HPP

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "afmm/core.hpp"

namespace afmm {

/// Uniform Cartesian grid with the same spacing on every axis.
/// Linear node ids run x-fastest: id = i + n*(j + n*k).
template <int D>
struct GridSpec {
  static_assert(D == 2 || D == 3, "grids are 2D or 3D");
  using Index = std::array<int, D>;

  Vec<D> lo{};
  Vec<D> hi{};
  int n = 0;      // nodes per axis
  double h = 0.0; // spacing, (hi - lo) / (n - 1)

  GridSpec(const Vec<D>& lo_, const Vec<D>& hi_, int nodes_per_axis)
      : lo(lo_), hi(hi_), n(nodes_per_axis) {
    if (n < 4) throw std::invalid_argument("grid needs at least 4 nodes per axis");
    h = (hi[0] - lo[0]) / (n - 1);
    if (!(h > 0.0)) throw std::invalid_argument("grid extent must be positive");
    for (int a = 1; a < D; ++a) {
      const double ha = (hi[a] - lo[a]) / (n - 1);
      if (std::abs(ha - h) > 1e-12 * std::abs(h))
        throw std::invalid_argument("grid spacing must match on every axis");
    }
  }

  static GridSpec cube(double a, double b, int nodes_per_axis) {
    Vec<D> lo_, hi_;
    lo_.fill(a);
    hi_.fill(b);
    return GridSpec(lo_, hi_, nodes_per_axis);
  }

  std::size_t node_count() const {
    std::size_t c = 1;
    for (int a = 0; a < D; ++a) c *= static_cast<std::size_t>(n);
    return c;
  }

  std::size_t cell_count() const {
    std::size_t c = 1;
    for (int a = 0; a < D; ++a) c *= static_cast<std::size_t>(n - 1);
    return c;
  }

  bool contains(const Index& id) const {
    for (int a = 0; a < D; ++a)
      if (id[a] < 0 || id[a] >= n) return false;
    return true;
  }

  std::size_t linear(const Index& id) const {
    std::size_t r = static_cast<std::size_t>(id[D - 1]);
    for (int a = D - 2; a >= 0; --a) r = r * n + static_cast<std::size_t>(id[a]);
    return r;
  }

  Index unlinear(std::size_t id) const {
    Index r{};
    for (int a = 0; a < D; ++a) {
      r[a] = static_cast<int>(id % static_cast<std::size_t>(n));
      id /= static_cast<std::size_t>(n);
    }
    return r;
  }

  /// Cells are indexed by their low corner node; (n-1) per axis.
  std::size_t cell_linear(const Index& id) const {
    std::size_t r = static_cast<std::size_t>(id[D - 1]);
    for (int a = D - 2; a >= 0; --a)
      r = r * (n - 1) + static_cast<std::size_t>(id[a]);
    return r;
  }

  Index cell_unlinear(std::size_t id) const {
    Index r{};
    for (int a = 0; a < D; ++a) {
      r[a] = static_cast<int>(id % static_cast<std::size_t>(n - 1));
      id /= static_cast<std::size_t>(n - 1);
    }
    return r;
  }

  Vec<D> position(const Index& id) const {
    Vec<D> p;
    for (int a = 0; a < D; ++a) p[a] = lo[a] + h * id[a];
    return p;
  }
};

template <int D>
struct Neighbor {
  int axis = 0;
  int dir = 0;  // +1: neighbor at node + e_axis, -1: node - e_axis
  typename GridSpec<D>::Index index{};
};

/// Axis-aligned neighbors that exist; boundary nodes return fewer.
template <int D>
inline StaticVec<Neighbor<D>, 2 * D> neighbors(const typename GridSpec<D>::Index& node,
                                               const GridSpec<D>& grid) {
  StaticVec<Neighbor<D>, 2 * D> out;
  for (int a = 0; a < D; ++a) {
    for (int dir : {+1, -1}) {
      auto m = node;
      m[a] += dir;
      if (grid.contains(m)) out.push_back(Neighbor<D>{a, dir, m});
    }
  }
  return out;
}

/// Corner nodes of a cell. Corner k offsets the cell's low node by bit a of k
/// along axis a, so 2D order is (i,j), (i+1,j), (i,j+1), (i+1,j+1).
template <int D>
inline std::array<typename GridSpec<D>::Index, (1 << D)> cell_corners(
    const typename GridSpec<D>::Index& cell, const GridSpec<D>& grid) {
  (void)grid;
  std::array<typename GridSpec<D>::Index, (1 << D)> out{};
  for (int k = 0; k < (1 << D); ++k) {
    auto c = cell;
    for (int a = 0; a < D; ++a) c[a] += (k >> a) & 1;
    out[k] = c;
  }
  return out;
}

/// Per-node value, gradient, and symmetric Hessian of the distance field.
template <int D>
struct JetField {
  std::vector<double> phi;
  std::vector<Vec<D>> psi;
  std::vector<SymMat<D>> hess;

  JetField() = default;
  explicit JetField(std::size_t nodes)
      : phi(nodes, 0.0), psi(nodes, Vec<D>{}), hess(nodes) {}

  std::size_t size() const { return phi.size(); }
};

enum class Tag : unsigned char { Distant = 0, Trial = 1, Accepted = 2 };

/// Node tags with guarded forward-only transitions.
class NodeState {
 public:
  explicit NodeState(std::size_t nodes) : tags_(nodes, Tag::Distant) {}

  Tag operator[](std::size_t i) const { return tags_[i]; }
  std::size_t size() const { return tags_.size(); }

  void promote(std::size_t i, Tag to) {
    if (static_cast<int>(to) <= static_cast<int>(tags_[i]))
      throw std::logic_error("node tags only advance Distant -> Trial -> Accepted");
    tags_[i] = to;
  }

  std::size_t count(Tag t) const {
    std::size_t c = 0;
    for (Tag x : tags_)
      if (x == t) ++c;
    return c;
  }

 private:
  std::vector<Tag> tags_;
};

/// Binary min-heap over (|phi| key, node id) with a handle table so a pending
/// node's key can be lowered in place. Each node appears at most once.
class TrialHeap {
 public:
  explicit TrialHeap(std::size_t nodes) : pos_(nodes, npos) {}

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  bool contains(std::size_t node) const { return pos_[node] != npos; }

  double key_of(std::size_t node) const { return heap_[pos_[node]].key; }

  void push(std::size_t node, double key) {
    if (contains(node)) throw std::logic_error("node already pending");
    heap_.push_back(Entry{key, node});
    pos_[node] = heap_.size() - 1;
    sift_up(heap_.size() - 1);
  }

  void decrease(std::size_t node, double key) {
    const std::size_t i = pos_[node];
    if (i == npos) throw std::logic_error("node not pending");
    if (key > heap_[i].key) throw std::logic_error("decrease-key may only lower a key");
    heap_[i].key = key;
    sift_up(i);
  }

  /// Re-keys a pending node in either direction; a re-solve against a grown
  /// accepted set may legitimately raise a candidate.
  void update(std::size_t node, double key) {
    const std::size_t i = pos_[node];
    if (i == npos) throw std::logic_error("node not pending");
    const double old = heap_[i].key;
    heap_[i].key = key;
    if (key < old) sift_up(i);
    else sift_down(i);
  }

  std::pair<std::size_t, double> pop() {
    const Entry top = heap_.front();
    swap_entries(0, heap_.size() - 1);
    heap_.pop_back();
    pos_[top.node] = npos;
    if (!heap_.empty()) sift_down(0);
    return {top.node, top.key};
  }

 private:
  struct Entry {
    double key;
    std::size_t node;
  };
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  void swap_entries(std::size_t i, std::size_t j) {
    std::swap(heap_[i], heap_[j]);
    pos_[heap_[i].node] = i;
    pos_[heap_[j].node] = j;
  }

  void sift_up(std::size_t i) {
    while (i > 0) {
      const std::size_t parent = (i - 1) / 2;
      if (heap_[parent].key <= heap_[i].key) break;
      swap_entries(i, parent);
      i = parent;
    }
  }

  void sift_down(std::size_t i) {
    for (;;) {
      std::size_t best = i;
      const std::size_t l = 2 * i + 1, r = 2 * i + 2;
      if (l < heap_.size() && heap_[l].key < heap_[best].key) best = l;
      if (r < heap_.size() && heap_[r].key < heap_[best].key) best = r;
      if (best == i) return;
      swap_entries(i, best);
      i = best;
    }
  }

  std::vector<Entry> heap_;
  std::vector<std::size_t> pos_;
};

}  // namespace afmm

#endif  // AFMM_GRID_HPP
