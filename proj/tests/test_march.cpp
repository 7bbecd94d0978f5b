#include <cmath>
#include <cstring>
#include <random>

#include "afmm/analysis.hpp"
#include "afmm/march.hpp"
#include "afmm/shapes.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace afmm;
using namespace afmm::testing;

TEST_CASE("classical march reproduces a plane along grid lines") {
  auto grid = GridSpec<2>::cube(-2.0, 2.0, 41);
  const Vec<2> n{1.0, 0.0};
  auto in = sample_plane<2>(n, -0.3, grid);
  auto res = run_standard_fmm<2>(in.phi0, &in.psi0, grid);
  CHECK(res.stats.pops_monotone);
  CHECK(res.order.seeds.size() + res.order.steps.size() == grid.node_count());
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.node_count(); ++i)
    worst = std::max(worst, std::abs(res.phi[i] - in.phi0[i]));
  CHECK(worst < 1e-7);
}

TEST_CASE("classical march converges on the circle") {
  auto shape = make_shape_2d("circle");
  double prev = 0.0;
  for (int k = 0; k < 2; ++k) {
    const int n = k == 0 ? 25 : 50;
    auto grid = GridSpec<2>::cube(-2.0, 2.0, n);
    auto in = sample_shape<2>(shape, grid);
    auto res = run_standard_fmm<2>(in.phi0, &in.psi0, grid);
    auto report = error_norms_phi<2>(res.phi, shape, grid, {Region::Whole});
    if (k == 1) CHECK(prev / report["phi"].linf > 2.0);
    prev = report["phi"].linf;
  }
}

TEST_CASE("full jet march is exact on planes") {
  std::mt19937 rng(2718);
  auto grid = GridSpec<2>::cube(-2.0, 2.0, 20);
  for (int trial = 0; trial < 3; ++trial) {
    const Vec<2> n = random_unit<2>(rng);
    auto in = sample_plane<2>(n, 0.23, grid);
    auto res = run_afmm<2>(in.phi0, &in.psi0, grid);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.node_count(); ++i) {
      worst = std::max(worst, std::abs(res.field.phi[i] - in.phi0[i]));
      worst = std::max(worst, norm<2>(vsub<2>(res.field.psi[i], n)));
      worst = std::max(worst, res.field.hess[i].max_abs());
    }
    CHECK(worst < 1e-8);
    CHECK(res.stats.pops_monotone);
    CHECK(res.stats.hessian_idempotent);
  }
}

TEST_CASE("circle run: band accuracy, causality, statistics") {
  auto shape = make_shape_2d("circle");
  auto grid = GridSpec<2>::cube(-2.0, 2.0, 100);
  auto in = sample_shape<2>(shape, grid);
  auto res = run_afmm<2>(in.phi0, &in.psi0, grid);

  CHECK(res.stats.pops_monotone);
  CHECK(res.stats.hessian_idempotent);
  CHECK(res.order.seeds.size() + res.order.steps.size() == grid.node_count());

  // the eikonal-quadratic fallback stays rare
  const double frac2 = static_cast<double>(res.stats.tier_count[2]) /
                       static_cast<double>(res.order.steps.size());
  CHECK(frac2 < 0.01);

  auto band = error_norms<2>(res.field, shape, grid, {Region::Band, 9.0});
  CHECK(band["phi"].linf < 1e-3);
  CHECK(band["psi"].linf < 2e-2);
  CHECK(std::isfinite(band["kappa"].linf));

  // unit-gradient residual inside the band
  auto gstats = gradient_norm_stats<2>(res.field, grid, 9.0);
  CHECK(gstats.band_max < 1e-2);
  CHECK(gstats.median < 5e-3);

  // whole-domain gradient error approaches the fixed medial limit
  auto whole = error_norms<2>(res.field, shape, grid, {Region::Whole});
  CHECK(whole["psi"].linf > 0.05);
  CHECK(whole["psi"].linf < 0.5);
}

TEST_CASE("march order is a permutation of non-seed nodes") {
  auto shape = make_shape_2d("circle");
  auto grid = GridSpec<2>::cube(-2.0, 2.0, 31);
  auto in = sample_shape<2>(shape, grid);
  auto res = run_afmm<2>(in.phi0, &in.psi0, grid);
  std::vector<char> seen(grid.node_count(), 0);
  for (std::size_t s : res.order.seeds) seen[s] = 1;
  for (const auto& step : res.order.steps) {
    CHECK(!seen[step.node]);
    seen[step.node] = 1;
  }
  for (char c : seen) CHECK(c == 1);
}

TEST_CASE("sign is preserved away from the interface") {
  auto shape = make_shape_2d("circle");
  auto grid = GridSpec<2>::cube(-2.0, 2.0, 50);
  auto in = sample_shape<2>(shape, grid);
  auto res = run_afmm<2>(in.phi0, &in.psi0, grid);
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    const auto p = grid.position(grid.unlinear(i));
    if (std::abs(shape.distance(p)) > grid.h)
      CHECK(std::signbit(res.field.phi[i]) == std::signbit(in.phi0[i]));
  }
}

TEST_CASE("repeating the second-derivative pass is bitwise idempotent") {
  auto shape = make_shape_2d("circle");
  auto grid = GridSpec<2>::cube(-2.0, 2.0, 41);
  auto in = sample_shape<2>(shape, grid);
  AfmmOptions opt;
  opt.check_invariants = false;
  auto res = run_afmm<2>(in.phi0, &in.psi0, grid, opt);
  auto first = res.field.hess;
  replay_hessian<2>(res.field, res.order, grid, opt.solver, nullptr);
  CHECK(std::memcmp(first.data(), res.field.hess.data(),
                    first.size() * sizeof(SymMat<2>)) == 0);
}

TEST_CASE("seed Hessians survive the replay pass") {
  auto shape = make_shape_2d("circle");
  auto grid = GridSpec<2>::cube(-2.0, 2.0, 41);
  auto in = sample_shape<2>(shape, grid);
  auto seeded = seed_nodes<2>(in.phi0, &in.psi0, grid);
  auto res = run_afmm<2>(in.phi0, &in.psi0, grid);
  for (std::size_t id : seeded.seeds)
    for (int c = 0; c < 3; ++c)
      CHECK(res.field.hess[id].a[c] == seeded.field.hess[id].a[c]);
}

TEST_CASE("empty interface is rejected") {
  auto grid = GridSpec<2>::cube(-2.0, 2.0, 12);
  std::vector<double> phi0(grid.node_count(), 2.0);
  CHECK_THROWS_AS(run_afmm<2>(phi0, nullptr, grid), EmptyInterface);
  CHECK_THROWS_AS(run_standard_fmm<2>(phi0, nullptr, grid), EmptyInterface);
}

TEST_CASE("3D plane march is exact") {
  std::mt19937 rng(999);
  auto grid = GridSpec<3>::cube(-2.0, 2.0, 12);
  const Vec<3> n = random_unit<3>(rng);
  auto in = sample_plane<3>(n, -0.11, grid);
  auto res = run_afmm<3>(in.phi0, &in.psi0, grid);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    worst = std::max(worst, std::abs(res.field.phi[i] - in.phi0[i]));
    worst = std::max(worst, norm<3>(vsub<3>(res.field.psi[i], n)));
    worst = std::max(worst, res.field.hess[i].max_abs());
  }
  CHECK(worst < 1e-8);
  CHECK(res.stats.pops_monotone);
  CHECK(res.stats.hessian_idempotent);
}
