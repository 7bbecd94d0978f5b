// Batch front-end: reinitialize named shapes or structured-points input
// fields, emit field dumps, convergence tables, and stencil-study curves.

#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "afmm/afmm.hpp"
#include "json.hpp"

#ifndef AFMM_BUILD_ID
#define AFMM_BUILD_ID "unversioned"
#endif

namespace {

using nlohmann::json;

struct CommonOptions {
  std::string shape;
  std::string input;
  int n = 100;
  std::string method = "afmm";
  std::string region = "both";
  double band_width = 9.0;
  double alpha = 0.1;
  double tol = 1e-10;
  std::string out;
  int workers = 1;
};

json params_json(const CommonOptions& o) {
  return json{{"shape", o.shape},     {"input", o.input},
              {"n", o.n},             {"method", o.method},
              {"region", o.region},   {"band_width", o.band_width},
              {"alpha", o.alpha},     {"tol", o.tol},
              {"out", o.out},         {"workers", o.workers}};
}

template <int D>
afmm::AfmmOptions solver_options(const CommonOptions& o) {
  afmm::AfmmOptions opt;
  opt.seed.alpha = o.alpha;
  opt.seed.project.tol = o.tol;
  opt.solver.tol_scale = o.tol;
  return opt;
}

template <int D>
std::vector<double> curvature_field(const afmm::JetField<D>& field) {
  std::vector<double> kappa(field.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < field.size(); ++i)
    if (auto k = afmm::try_curvature<D>(field.psi[i], field.hess[i])) kappa[i] = *k;
  return kappa;
}

template <int D>
int run_reinit_impl(const CommonOptions& o, const std::vector<double>& phi0,
                    const std::vector<afmm::Vec<D>>* psi0, const afmm::GridSpec<D>& grid,
                    bool raw) {
  using namespace afmm;
  const std::string out =
      o.out.empty() ? (o.shape.empty() ? std::string("field") : o.shape) + "_" +
                          o.method + "_" + std::to_string(grid.n) + ".vtk"
                    : o.out;
  json summary;
  summary["build"] = AFMM_BUILD_ID;
  summary["params"] = params_json(o);

  if (o.method == "fmm") {
    auto res = run_standard_fmm<D>(phi0, psi0, grid, solver_options<D>(o).seed);
    std::ofstream vtk(out);
    if (!vtk) throw std::runtime_error("cannot write " + out);
    write_vtk_phi<D>(vtk, grid, res.phi, "classical reinitialization");
    summary["stats"] = {{"seeds", res.stats.seeds},
                        {"pops_monotone", res.stats.pops_monotone},
                        {"seed_seconds", res.stats.seed_seconds},
                        {"march_seconds", res.stats.march_seconds}};
  } else {
    auto res = run_afmm<D>(phi0, psi0, grid, solver_options<D>(o));
    const auto kappa = curvature_field<D>(res.field);
    std::ofstream vtk(out);
    if (!vtk) throw std::runtime_error("cannot write " + out);
    write_vtk<D>(vtk, grid, res.field, &kappa, "jet reinitialization");
    if (raw) {
      std::ofstream rawfile(out + ".raw", std::ios::binary);
      write_raw<D>(rawfile, grid, res.field, &kappa);
    }
    const auto gstats = gradient_norm_stats<D>(res.field, grid, o.band_width);
    summary["stats"] = {{"seeds", res.stats.seeds},
                        {"tier_counts", res.stats.tier_count},
                        {"hessian_fallbacks", res.stats.hessian_fallbacks},
                        {"max_gradient_residual", res.stats.max_gradient_residual},
                        {"max_hessian_residual", res.stats.max_hessian_residual},
                        {"pops_monotone", res.stats.pops_monotone},
                        {"hessian_idempotent", res.stats.hessian_idempotent},
                        {"seed_seconds", res.stats.seed_seconds},
                        {"march_seconds", res.stats.march_seconds},
                        {"hessian_seconds", res.stats.hessian_seconds},
                        {"unit_gradient_median", gstats.median},
                        {"unit_gradient_band_max", gstats.band_max}};
  }
  summary["output"] = out;
  std::ofstream sfile(out + ".summary.json");
  sfile << summary.dump(2) << "\n";
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int run_reinit(const CommonOptions& o, bool raw) {
  using namespace afmm;
  if (!o.input.empty()) {
    std::ifstream in(o.input);
    if (!in) {
      std::cerr << "cannot open input field: " << o.input << "\n";
      return 2;
    }
    auto parsed = read_vtk(in);
    if (std::holds_alternative<InputField<2>>(parsed)) {
      auto& f = std::get<InputField<2>>(parsed);
      return run_reinit_impl<2>(o, f.phi, f.psi ? &*f.psi : nullptr, f.grid, raw);
    }
    auto& f = std::get<InputField<3>>(parsed);
    return run_reinit_impl<3>(o, f.phi, f.psi ? &*f.psi : nullptr, f.grid, raw);
  }
  if (is_shape_2d(o.shape)) {
    auto shape = make_shape_2d(o.shape);
    auto grid = GridSpec<2>::cube(-2.0, 2.0, o.n);
    std::vector<double> phi0(grid.node_count());
    std::vector<Vec<2>> psi0(grid.node_count());
    for (std::size_t i = 0; i < grid.node_count(); ++i) {
      const auto p = grid.position(grid.unlinear(i));
      phi0[i] = shape.phi0(p);
      psi0[i] = shape.psi0(p);
    }
    return run_reinit_impl<2>(o, phi0, &psi0, grid, raw);
  }
  auto shape = make_shape_3d(o.shape);
  auto grid = GridSpec<3>::cube(-2.0, 2.0, o.n);
  std::vector<double> phi0(grid.node_count());
  std::vector<Vec<3>> psi0(grid.node_count());
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    const auto p = grid.position(grid.unlinear(i));
    phi0[i] = shape.phi0(p);
    psi0[i] = shape.psi0(p);
  }
  return run_reinit_impl<3>(o, phi0, &psi0, grid, raw);
}

template <int D>
std::vector<afmm::CsvRow> convergence_rows(const CommonOptions& o, int n) {
  using namespace afmm;
  Shape<D> shape;
  if constexpr (D == 2) shape = make_shape_2d(o.shape);
  else shape = make_shape_3d(o.shape);

  auto grid = GridSpec<D>::cube(-2.0, 2.0, n);
  std::vector<double> phi0(grid.node_count());
  std::vector<Vec<D>> psi0(grid.node_count());
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    const auto p = grid.position(grid.unlinear(i));
    phi0[i] = shape.phi0(p);
    psi0[i] = shape.psi0(p);
  }
  std::vector<CsvRow> rows;
  auto push_report = [&](const ErrorReport& rep, const char* region) {
    for (const auto& e : rep.entries) {
      rows.push_back({"error", o.shape, o.method, region, e.quantity, "l2", n, grid.h,
                      e.l2, e.nodes, e.excluded});
      rows.push_back({"error", o.shape, o.method, region, e.quantity, "linf", n,
                      grid.h, e.linf, e.nodes, e.excluded});
    }
  };
  const bool whole = o.region == "whole" || o.region == "both";
  const bool band = o.region == "band" || o.region == "both";
  if (o.method == "fmm") {
    auto res = run_standard_fmm<D>(phi0, &psi0, grid, solver_options<D>(o).seed);
    if (whole) push_report(error_norms_phi<D>(res.phi, shape, grid, {Region::Whole}),
                           "whole");
    if (band)
      push_report(
          error_norms_phi<D>(res.phi, shape, grid, {Region::Band, o.band_width}),
          "band");
  } else {
    auto res = run_afmm<D>(phi0, &psi0, grid, solver_options<D>(o));
    if (whole)
      push_report(error_norms<D>(res.field, shape, grid, {Region::Whole}), "whole");
    if (band)
      push_report(error_norms<D>(res.field, shape, grid, {Region::Band, o.band_width}),
                  "band");
  }
  return rows;
}

int run_convergence(const CommonOptions& o, const std::vector<int>& ns) {
  using namespace afmm;
  const bool is2d = is_shape_2d(o.shape);
  if (!is2d && !is_shape_3d(o.shape)) {
    std::cerr << "unknown shape: " << o.shape << "\n";
    return 2;
  }

  std::vector<std::future<std::vector<CsvRow>>> futures;
  std::vector<std::vector<CsvRow>> results(ns.size());
  const int workers = std::max(1, o.workers);
  for (std::size_t i = 0; i < ns.size(); i += workers) {
    futures.clear();
    for (std::size_t j = i; j < std::min(ns.size(), i + workers); ++j)
      futures.push_back(std::async(std::launch::async, [&, j] {
        return is2d ? convergence_rows<2>(o, ns[j]) : convergence_rows<3>(o, ns[j]);
      }));
    for (std::size_t j = 0; j < futures.size(); ++j) results[i + j] = futures[j].get();
  }

  std::vector<CsvRow> rows;
  for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());

  // fitted orders per (region, quantity, norm) when three or more grids ran
  if (ns.size() >= 3) {
    for (const char* region : {"whole", "band"}) {
      for (const char* quantity : {"phi", "psi", "kappa"}) {
        for (const char* norm_name : {"l2", "linf"}) {
          std::vector<std::pair<double, double>> data;
          for (const auto& r : rows)
            if (r.kind == "error" && r.region == region && r.quantity == quantity &&
                r.norm == norm_name && r.value > 0.0)
              data.push_back({r.h, r.value});
          if (data.size() >= 3)
            rows.push_back({"order", o.shape, o.method, region, quantity, norm_name, 0,
                            0.0, fit_order(data), 0, 0});
        }
      }
    }
  }

  if (o.out.empty()) {
    write_csv(std::cout, rows);
  } else {
    std::ofstream file(o.out);
    if (!file) throw std::runtime_error("cannot write " + o.out);
    write_csv(file, rows);
    std::cout << "wrote " << o.out << " (" << rows.size() << " rows, build "
              << AFMM_BUILD_ID << ")\n";
  }
  return 0;
}

int run_stencil_study(double x_min, double x_max, int x_count,
                      const std::vector<double>& hs, double r0,
                      const std::string& out) {
  using namespace afmm;
  std::ostringstream body;
  body << "x,h,r0,phi,psi,level_error,gradient_error\n";
  body.precision(12);
  for (double h : hs) {
    for (int i = 0; i < x_count; ++i) {
      const double x =
          x_count == 1 ? x_min : x_min + (x_max - x_min) * i / (x_count - 1);
      const auto s = stencil_study(x, h, r0);
      body << x << ',' << h << ',' << r0 << ',' << s.phi << ',' << s.psi << ','
           << s.level_error << ',' << s.gradient_error << "\n";
    }
  }
  if (out.empty()) {
    std::cout << body.str();
  } else {
    std::ofstream file(out);
    if (!file) throw std::runtime_error("cannot write " + out);
    file << body.str();
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Jet-carrying fast-marching reinitialization"};
  // config keys live under a [reinit] / [convergence] / [stencil-study]
  // section; explicit flags win over file values
  app.set_config("--config", "", "Read options from a config file; flags win");
  app.require_subcommand(1);

  CommonOptions o;
  bool raw = false;

  auto* reinit = app.add_subcommand("reinit", "Reinitialize one field and dump it");
  reinit->add_option("--shape", o.shape,
                     "circle | ellipse | dual-circles | cassini2d | star | sphere | "
                     "ellipsoid | cassini3d");
  reinit->add_option("--input", o.input, "structured-points input file (phi required)");
  reinit->add_option("--n", o.n, "nodes per axis (shapes only)");
  reinit->add_option("--method", o.method, "fmm | afmm")
      ->check(CLI::IsMember({"fmm", "afmm"}));
  reinit->add_option("--alpha", o.alpha, "sub-grid spacing factor");
  reinit->add_option("--tol", o.tol, "solver tolerance scale");
  reinit->add_option("--band-width", o.band_width, "band half-width in units of h");
  reinit->add_option("--out", o.out, "output path (.vtk)");
  reinit->add_flag("--raw", raw, "also write a raw binary dump next to the vtk");

  std::vector<int> ns;
  auto* conv = app.add_subcommand("convergence", "Error table over a grid sweep");
  conv->add_option("--shape", o.shape, "shape name")->required();
  conv->add_option("--n", ns, "grid sizes (repeat or comma-separate)")
      ->required()
      ->delimiter(',');
  conv->add_option("--method", o.method, "fmm | afmm")
      ->check(CLI::IsMember({"fmm", "afmm"}));
  conv->add_option("--region", o.region, "whole | band | both")
      ->check(CLI::IsMember({"whole", "band", "both"}));
  conv->add_option("--band-width", o.band_width, "band half-width in units of h");
  conv->add_option("--alpha", o.alpha, "sub-grid spacing factor");
  conv->add_option("--tol", o.tol, "solver tolerance scale");
  conv->add_option("--out", o.out, "CSV path (stdout when empty)");
  conv->add_option("--workers", o.workers, "parallel grid runs");

  double x_min = 0.005, x_max = 0.5, r0 = 1.0;
  int x_count = 100;
  std::vector<double> hs{0.1, 0.05, 0.025};
  auto* stencil =
      app.add_subcommand("stencil-study", "Closed-form diagonal-stencil error curves");
  stencil->add_option("--x-min", x_min, "smallest diagonal position");
  stencil->add_option("--x-max", x_max, "largest diagonal position");
  stencil->add_option("--x-count", x_count, "number of positions");
  stencil->add_option("--h-list", hs, "grid spacings")->delimiter(',');
  stencil->add_option("--r0", r0, "circle radius");
  stencil->add_option("--out", o.out, "CSV path (stdout when empty)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help exits cleanly; anything else is usage
  }

  try {
    if (reinit->parsed()) {
      if (o.shape.empty() == o.input.empty()) {
        std::cerr << "reinit needs exactly one of --shape or --input\n";
        return 2;
      }
      if (!o.shape.empty() && !afmm::is_shape_2d(o.shape) &&
          !afmm::is_shape_3d(o.shape)) {
        std::cerr << "unknown shape: " << o.shape << "\n";
        return 2;
      }
      return run_reinit(o, raw);
    }
    if (conv->parsed()) return run_convergence(o, ns);
    if (stencil->parsed()) {
      if (!(x_min > 0.0) || x_max < x_min || x_count < 1 ||
          r0 <= std::sqrt(2.0) * x_max) {
        std::cerr << "need 0 < x-min <= x-max, x-count >= 1, r0 > sqrt(2) x-max\n";
        return 2;
      }
      return run_stencil_study(x_min, x_max, x_count, hs, r0, o.out);
    }
  } catch (const afmm::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const afmm::ParseError& e) {
    std::cerr << "input format error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
