#include <random>

#include "afmm/grid.hpp"
#include "doctest.h"

using namespace afmm;

TEST_CASE("grid spacing and validation") {
  auto g = GridSpec<2>::cube(-2.0, 2.0, 41);
  CHECK(g.h == doctest::Approx(0.1));
  CHECK(g.node_count() == 41 * 41);
  CHECK(g.cell_count() == 40 * 40);
  CHECK_THROWS_AS(GridSpec<2>::cube(-2.0, 2.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(GridSpec<2>::cube(2.0, -2.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(GridSpec<2>({0.0, 0.0}, {1.0, 2.0}, 5), std::invalid_argument);
}

TEST_CASE("linear index round trip is x-fastest") {
  auto g = GridSpec<3>::cube(0.0, 1.0, 5);
  CHECK(g.linear({1, 0, 0}) == 1);
  CHECK(g.linear({0, 1, 0}) == 5);
  CHECK(g.linear({0, 0, 1}) == 25);
  for (std::size_t id = 0; id < g.node_count(); ++id)
    CHECK(g.linear(g.unlinear(id)) == id);
}

TEST_CASE("neighbors of corner, edge, interior nodes") {
  auto g2 = GridSpec<2>::cube(-2.0, 2.0, 5);
  auto corner = neighbors<2>({0, 0}, g2);
  REQUIRE(corner.size() == 2);
  CHECK(corner[0].axis == 0);
  CHECK(corner[0].dir == 1);
  CHECK(corner[0].index == GridSpec<2>::Index{1, 0});
  CHECK(corner[1].axis == 1);
  CHECK(corner[1].index == GridSpec<2>::Index{0, 1});

  CHECK(neighbors<2>({2, 2}, g2).size() == 4);
  CHECK(neighbors<2>({2, 0}, g2).size() == 3);

  auto g3 = GridSpec<3>::cube(-2.0, 2.0, 5);
  CHECK(neighbors<3>({2, 2, 2}, g3).size() == 6);
  CHECK(neighbors<3>({0, 0, 0}, g3).size() == 3);
}

TEST_CASE("cell corners order") {
  auto g = GridSpec<2>::cube(-2.0, 2.0, 5);
  auto c = cell_corners<2>({1, 2}, g);
  CHECK(c[0] == GridSpec<2>::Index{1, 2});
  CHECK(c[1] == GridSpec<2>::Index{2, 2});
  CHECK(c[2] == GridSpec<2>::Index{1, 3});
  CHECK(c[3] == GridSpec<2>::Index{2, 3});

  auto g3 = GridSpec<3>::cube(-2.0, 2.0, 5);
  auto c3 = cell_corners<3>({0, 0, 0}, g3);
  CHECK(c3[0] == GridSpec<3>::Index{0, 0, 0});
  CHECK(c3[7] == GridSpec<3>::Index{1, 1, 1});

  auto last = cell_corners<2>({3, 3}, g);
  CHECK(last[3] == GridSpec<2>::Index{4, 4});
}

TEST_CASE("symmetric component layout") {
  CHECK(SymMat<2>::index(0, 0) == 0);
  CHECK(SymMat<2>::index(1, 1) == 1);
  CHECK(SymMat<2>::index(0, 1) == 2);
  CHECK(SymMat<2>::index(1, 0) == 2);
  CHECK(SymMat<3>::index(2, 2) == 2);
  CHECK(SymMat<3>::index(0, 1) == 3);
  CHECK(SymMat<3>::index(0, 2) == 4);
  CHECK(SymMat<3>::index(1, 2) == 5);
}

TEST_CASE("node tags advance forward only") {
  NodeState s(4);
  s.promote(0, Tag::Trial);
  s.promote(0, Tag::Accepted);
  s.promote(1, Tag::Accepted);  // seeds skip Trial
  CHECK_THROWS_AS(s.promote(0, Tag::Trial), std::logic_error);
  CHECK_THROWS_AS(s.promote(1, Tag::Accepted), std::logic_error);
  CHECK(s.count(Tag::Accepted) == 2);
  CHECK(s.count(Tag::Distant) == 2);
}

TEST_CASE("trial heap pops nondecreasing keys with re-keying") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> ur(0.0, 10.0);
  TrialHeap heap(500);
  std::vector<std::size_t> pending;
  for (std::size_t n = 0; n < 500; ++n) {
    heap.push(n, ur(rng));
    pending.push_back(n);
  }
  // random decreases and raises
  for (int k = 0; k < 300; ++k) {
    const std::size_t n = pending[static_cast<std::size_t>(rng()) % pending.size()];
    if (!heap.contains(n)) continue;
    if (k % 3 == 0) heap.update(n, heap.key_of(n) + ur(rng));
    else heap.decrease(n, heap.key_of(n) * 0.5);
  }
  double last = -1.0;
  std::size_t count = 0;
  while (!heap.empty()) {
    auto [node, key] = heap.pop();
    CHECK(key >= last);
    last = key;
    ++count;
  }
  CHECK(count == 500);
}

TEST_CASE("trial heap rejects duplicates and bad rekeys") {
  TrialHeap heap(4);
  heap.push(1, 2.0);
  CHECK_THROWS_AS(heap.push(1, 1.0), std::logic_error);
  CHECK_THROWS_AS(heap.decrease(1, 3.0), std::logic_error);
  CHECK_THROWS_AS(heap.decrease(2, 1.0), std::logic_error);
}
