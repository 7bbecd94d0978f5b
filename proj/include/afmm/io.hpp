#ifndef AFMM_IO_HPP
#define AFMM_IO_HPP

#include <cstdint>
#include <cstring>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "afmm/core.hpp"
#include "afmm/grid.hpp"

namespace afmm {

namespace detail {

inline void write_doubles(std::ostream& os, const double* data, std::size_t count,
                          int per_line) {
  os << std::setprecision(17);
  for (std::size_t i = 0; i < count; ++i) {
    os << data[i];
    os << (((i + 1) % per_line == 0 || i + 1 == count) ? '\n' : ' ');
  }
}

template <int D>
inline const char* hess_label(int comp) {
  static const char* two[] = {"hess_xx", "hess_yy", "hess_xy"};
  static const char* three[] = {"hess_xx", "hess_yy", "hess_zz",
                                "hess_xy", "hess_xz", "hess_yz"};
  return D == 2 ? two[comp] : three[comp];
}

}  // namespace detail

/// Legacy structured-points dump readable by standard scientific viewers.
/// Arrays: phi scalars, psi vectors, one scalar array per Hessian component,
/// and optionally a curvature array.
template <int D>
inline void write_vtk(std::ostream& os, const GridSpec<D>& grid,
                      const JetField<D>& field,
                      const std::vector<double>* kappa = nullptr,
                      const std::string& title = "reinitialized field") {
  const std::size_t nodes = grid.node_count();
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\n";
  os << "DATASET STRUCTURED_POINTS\n";
  os << "DIMENSIONS " << grid.n << " " << grid.n << " " << (D == 3 ? grid.n : 1)
     << "\n";
  os << std::setprecision(17);
  os << "ORIGIN " << grid.lo[0] << " " << grid.lo[1] << " "
     << (D == 3 ? grid.lo[2] : 0.0) << "\n";
  os << "SPACING " << grid.h << " " << grid.h << " " << grid.h << "\n";
  os << "POINT_DATA " << nodes << "\n";

  os << "SCALARS phi double 1\nLOOKUP_TABLE default\n";
  detail::write_doubles(os, field.phi.data(), nodes, 6);

  os << "VECTORS psi double\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < nodes; ++i) {
    os << field.psi[i][0] << " " << field.psi[i][1] << " "
       << (D == 3 ? field.psi[i][2] : 0.0) << "\n";
  }

  for (int c = 0; c < SymMat<D>::ncomp; ++c) {
    os << "SCALARS " << detail::hess_label<D>(c) << " double 1\nLOOKUP_TABLE default\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < nodes; ++i) os << field.hess[i].a[c] << "\n";
  }

  if (kappa) {
    os << "SCALARS kappa double 1\nLOOKUP_TABLE default\n";
    detail::write_doubles(os, kappa->data(), nodes, 6);
  }
}

/// Value-only variant for the classical march.
template <int D>
inline void write_vtk_phi(std::ostream& os, const GridSpec<D>& grid,
                          const std::vector<double>& phi,
                          const std::string& title = "reinitialized field") {
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\n";
  os << "DATASET STRUCTURED_POINTS\n";
  os << "DIMENSIONS " << grid.n << " " << grid.n << " " << (D == 3 ? grid.n : 1)
     << "\n";
  os << std::setprecision(17);
  os << "ORIGIN " << grid.lo[0] << " " << grid.lo[1] << " "
     << (D == 3 ? grid.lo[2] : 0.0) << "\n";
  os << "SPACING " << grid.h << " " << grid.h << " " << grid.h << "\n";
  os << "POINT_DATA " << grid.node_count() << "\n";
  os << "SCALARS phi double 1\nLOOKUP_TABLE default\n";
  detail::write_doubles(os, phi.data(), grid.node_count(), 6);
}

template <int D>
struct InputField {
  GridSpec<D> grid;
  std::vector<double> phi;
  std::optional<std::vector<Vec<D>>> psi;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

struct VtkRaw {
  int nx = 0, ny = 0, nz = 1;
  Vec<3> origin{};
  Vec<3> spacing{};
  std::vector<double> phi;
  std::vector<double> psi_flat;  // 3 per node when present
};

inline VtkRaw parse_vtk_stream(std::istream& is) {
  VtkRaw raw;
  std::string line;
  // Two header lines, format line, dataset line.
  std::getline(is, line);
  if (line.rfind("# vtk DataFile", 0) != 0)
    throw ParseError("not a legacy VTK file");
  std::getline(is, line);
  std::getline(is, line);
  if (line.find("ASCII") == std::string::npos)
    throw ParseError("only ASCII VTK input is supported");
  std::getline(is, line);
  if (line.find("STRUCTURED_POINTS") == std::string::npos)
    throw ParseError("expected a STRUCTURED_POINTS dataset");

  std::size_t npoints = 0;
  std::string tok;
  while (is >> tok) {
    if (tok == "DIMENSIONS") {
      is >> raw.nx >> raw.ny >> raw.nz;
    } else if (tok == "ORIGIN") {
      is >> raw.origin[0] >> raw.origin[1] >> raw.origin[2];
    } else if (tok == "SPACING") {
      is >> raw.spacing[0] >> raw.spacing[1] >> raw.spacing[2];
    } else if (tok == "POINT_DATA") {
      is >> npoints;
    } else if (tok == "SCALARS") {
      std::string name, type, next;
      is >> name >> type >> next;
      int ncomp = 1;
      if (next != "LOOKUP_TABLE") {
        ncomp = std::stoi(next);  // optional component count
        is >> next;
        if (next != "LOOKUP_TABLE")
          throw ParseError("expected LOOKUP_TABLE after SCALARS");
      }
      std::string lut_name;
      is >> lut_name;
      std::vector<double> values(npoints * static_cast<std::size_t>(ncomp));
      for (auto& v : values)
        if (!(is >> v)) throw ParseError("truncated SCALARS array " + name);
      if (name == "phi") raw.phi = std::move(values);
    } else if (tok == "VECTORS") {
      std::string name, type;
      is >> name >> type;
      std::vector<double> values(npoints * 3);
      for (auto& v : values)
        if (!(is >> v)) throw ParseError("truncated VECTORS array " + name);
      if (name == "psi") raw.psi_flat = std::move(values);
    } else {
      throw ParseError("unsupported VTK keyword: " + tok);
    }
  }
  if (raw.phi.empty()) throw ParseError("input file carries no phi array");
  if (raw.phi.size() != npoints) throw ParseError("phi array length mismatch");
  return raw;
}

template <int D>
inline InputField<D> raw_to_field(const VtkRaw& raw) {
  if (raw.nx != raw.ny || (D == 3 && raw.nx != raw.nz))
    throw ParseError("grids must have the same node count on every axis");
  for (int a = 1; a < (D == 3 ? 3 : 2); ++a)
    if (std::abs(raw.spacing[a] - raw.spacing[0]) > 1e-12 * raw.spacing[0])
      throw ParseError("grid spacing must match on every axis");
  Vec<D> lo, hi;
  for (int a = 0; a < D; ++a) {
    lo[a] = raw.origin[a];
    hi[a] = raw.origin[a] + raw.spacing[a] * (raw.nx - 1);
  }
  InputField<D> out{GridSpec<D>(lo, hi, raw.nx), raw.phi, std::nullopt};
  if (!raw.psi_flat.empty()) {
    std::vector<Vec<D>> psi(raw.phi.size());
    for (std::size_t i = 0; i < psi.size(); ++i)
      for (int a = 0; a < D; ++a) psi[i][a] = raw.psi_flat[3 * i + a];
    out.psi = std::move(psi);
  }
  return out;
}

}  // namespace detail

/// Reads a structured-points field written by this tool (or by hand): phi is
/// required, psi optional, other arrays are skipped. 2D when the z-dimension
/// is one.
inline std::variant<InputField<2>, InputField<3>> read_vtk(std::istream& is) {
  const detail::VtkRaw raw = detail::parse_vtk_stream(is);
  if (raw.nz == 1) return detail::raw_to_field<2>(raw);
  return detail::raw_to_field<3>(raw);
}

/// Raw sidecar format: one ASCII header line, then little-endian doubles in
/// node order (x fastest): phi, then psi components per node, then Hessian
/// components per node, then curvature when present.
template <int D>
inline void write_raw(std::ostream& os, const GridSpec<D>& grid,
                      const JetField<D>& field,
                      const std::vector<double>* kappa = nullptr) {
  static_assert(sizeof(double) == 8);
  os << std::setprecision(17);
  os << "afmm-raw 1 dim=" << D << " n=" << grid.n << " h=" << grid.h << " lo=";
  for (int a = 0; a < D; ++a) os << (a ? "," : "") << grid.lo[a];
  os << " fields=phi,psi,hess" << (kappa ? ",kappa" : "") << "\n";
  const std::size_t nodes = grid.node_count();
  auto put = [&](const double* p, std::size_t count) {
    os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(count * 8));
  };
  put(field.phi.data(), nodes);
  for (std::size_t i = 0; i < nodes; ++i) put(field.psi[i].data(), D);
  for (std::size_t i = 0; i < nodes; ++i) put(field.hess[i].a.data(), SymMat<D>::ncomp);
  if (kappa) put(kappa->data(), nodes);
}

template <int D>
struct RawField {
  GridSpec<D> grid;
  JetField<D> field;
  std::optional<std::vector<double>> kappa;
};

template <int D>
inline RawField<D> read_raw(std::istream& is) {
  std::string header;
  std::getline(is, header);
  if (header.rfind("afmm-raw 1", 0) != 0) throw ParseError("not an afmm raw dump");
  auto grab = [&](const std::string& key) {
    const auto pos = header.find(" " + key + "=");
    if (pos == std::string::npos) throw ParseError("raw header misses " + key);
    const auto start = pos + key.size() + 2;
    return header.substr(start, header.find(' ', start) - start);
  };
  if (std::stoi(grab("dim")) != D) throw ParseError("raw dump dimension mismatch");
  const int n = std::stoi(grab("n"));
  const double h = std::stod(grab("h"));
  const std::string lo_str = grab("lo");
  Vec<D> lo;
  {
    std::stringstream ss(lo_str);
    std::string piece;
    for (int a = 0; a < D; ++a) {
      std::getline(ss, piece, ',');
      lo[a] = std::stod(piece);
    }
  }
  Vec<D> hi;
  for (int a = 0; a < D; ++a) hi[a] = lo[a] + h * (n - 1);
  RawField<D> out{GridSpec<D>(lo, hi, n), JetField<D>(0), std::nullopt};
  const std::size_t nodes = out.grid.node_count();
  out.field = JetField<D>(nodes);
  auto get = [&](double* p, std::size_t count) {
    is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(count * 8));
    if (!is) throw ParseError("truncated raw dump");
  };
  get(out.field.phi.data(), nodes);
  for (std::size_t i = 0; i < nodes; ++i) get(out.field.psi[i].data(), D);
  for (std::size_t i = 0; i < nodes; ++i)
    get(out.field.hess[i].a.data(), SymMat<D>::ncomp);
  if (grab("fields").find("kappa") != std::string::npos) {
    std::vector<double> kappa(nodes);
    get(kappa.data(), nodes);
    out.kappa = std::move(kappa);
  }
  return out;
}

/// One measurement (or fitted-order) row of a convergence table.
struct CsvRow {
  std::string kind;      // "error" or "order"
  std::string shape;
  std::string method;
  std::string region;
  std::string quantity;
  std::string norm;      // "l2" or "linf"
  int n = 0;             // 0 for order rows
  double h = 0.0;
  double value = 0.0;
  std::size_t nodes = 0;
  std::size_t excluded = 0;
};

inline void write_csv(std::ostream& os, const std::vector<CsvRow>& rows) {
  os << "kind,shape,method,region,quantity,norm,n,h,value,nodes,excluded\n";
  os << std::setprecision(12);
  for (const auto& r : rows) {
    os << r.kind << ',' << r.shape << ',' << r.method << ',' << r.region << ','
       << r.quantity << ',' << r.norm << ',';
    if (r.n > 0) os << r.n;
    os << ',';
    if (r.h > 0.0) os << r.h;
    os << ',' << r.value << ',' << r.nodes << ',' << r.excluded << '\n';
  }
}

}  // namespace afmm

#endif  // AFMM_IO_HPP
