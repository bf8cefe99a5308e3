#include "bigrid/mesh.hpp"

#include "bigrid/errors.hpp"

#include <cmath>
#include <fstream>
#include <string>

namespace bigrid {

namespace {

std::uint8_t lattice_tags(int i, int j, int n) {
  std::uint8_t t = tag::interior;
  if (j == 0) t |= tag::bottom;
  if (j == n) t |= tag::top;
  if (i == 0) t |= tag::left;
  if (i == n) t |= tag::right;
  const bool vertical_side = (i == 0 || i == n);
  const bool horizontal_side = (j == 0 || j == n);
  if (vertical_side && horizontal_side) t |= tag::corner;
  return t;
}

} // namespace

TriMesh build_uniform_mesh(int n) {
  if (n < 2) throw InvalidParameter("build_uniform_mesh: n must be >= 2, got " + std::to_string(n));

  TriMesh m;
  m.n_ = n;
  const int nv = (n + 1) * (n + 1);
  m.vertices_.reserve(nv);
  m.vertex_tags_.reserve(nv);
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      m.vertices_.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
      m.vertex_tags_.push_back(lattice_tags(i, j, n));
    }
  }

  // Edge numbering: horizontal (i, j)-(i+1, j), vertical (i, j)-(i, j+1),
  // diagonal (i, j)-(i+1, j+1).
  const int n_h = n * (n + 1);
  const int n_v = n * (n + 1);
  auto h_edge = [n](int i, int j) { return j * n + i; };
  auto v_edge = [n, n_h](int i, int j) { return n_h + j * (n + 1) + i; };
  auto d_edge = [n, n_h, n_v](int i, int j) { return n_h + n_v + j * n + i; };

  m.edges_.resize(n_h + n_v + n * n);
  auto set_edge = [&](int e, int i0, int j0, int i1, int j1) {
    Edge& ed = m.edges_[e];
    ed.v = {m.vertex_index(i0, j0), m.vertex_index(i1, j1)};
    // Exact: numerator and denominator are small integers.
    ed.midpoint = {static_cast<double>(i0 + i1) / (2.0 * n), static_cast<double>(j0 + j1) / (2.0 * n)};
    ed.tags = lattice_tags(i0, j0, n) & lattice_tags(i1, j1, n) & ~tag::corner;
  };
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i < n; ++i) set_edge(h_edge(i, j), i, j, i + 1, j);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= n; ++i) set_edge(v_edge(i, j), i, j, i, j + 1);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) set_edge(d_edge(i, j), i, j, i + 1, j + 1);

  m.triangles_.reserve(2 * n * n);
  m.triangle_edges_.reserve(2 * n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int v00 = m.vertex_index(i, j);
      const int v10 = m.vertex_index(i + 1, j);
      const int v11 = m.vertex_index(i + 1, j + 1);
      const int v01 = m.vertex_index(i, j + 1);
      // Below the diagonal: (v00, v10, v11); edges v00-v10, v10-v11, v11-v00.
      m.triangles_.push_back({v00, v10, v11});
      m.triangle_edges_.push_back({h_edge(i, j), v_edge(i + 1, j), d_edge(i, j)});
      // Above the diagonal: (v00, v11, v01); edges v00-v11, v11-v01, v01-v00.
      m.triangles_.push_back({v00, v11, v01});
      m.triangle_edges_.push_back({d_edge(i, j), h_edge(i, j + 1), v_edge(i, j)});
    }
  }
  return m;
}

double TriMesh::triangle_area(int t) const {
  const auto& tri = triangles_[t];
  const Point& a = vertices_[tri[0]];
  const Point& b = vertices_[tri[1]];
  const Point& c = vertices_[tri[2]];
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

int TriMesh::parent_triangle(int t) const {
  const int square = t / 2;
  const int i = square % n_;
  const int j = square / n_;
  const int li = i % 2;
  const int lj = j % 2;
  bool above = (t % 2) == 1;
  if (li == 1 && lj == 0) above = false;
  if (li == 0 && lj == 1) above = true;
  const int nc = n_ / 2;
  return 2 * ((j / 2) * nc + i / 2) + (above ? 1 : 0);
}

bool verify_nested(const TriMesh& coarse, const TriMesh& fine) {
  if (fine.n() != 2 * coarse.n()) {
    throw InvalidParameter("verify_nested: fine.n (" + std::to_string(fine.n()) + ") must equal 2 * coarse.n (" +
                           std::to_string(coarse.n()) + ")");
  }
  const int nf = fine.n();
  const auto& fv = fine.vertices();
  auto contained = [&](const Point& p) {
    const double sx = p.x * nf;
    const double sy = p.y * nf;
    const long ix = std::lround(sx);
    const long iy = std::lround(sy);
    if (ix < 0 || iy < 0 || ix > nf || iy > nf) return false;
    const Point& q = fv[fine.vertex_index(static_cast<int>(ix), static_cast<int>(iy))];
    return q.x == p.x && q.y == p.y;
  };
  for (const Point& p : coarse.vertices())
    if (!contained(p)) return false;
  for (const Edge& e : coarse.edges())
    if (!contained(e.midpoint)) return false;
  return true;
}

void write_vtk_mesh(const TriMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "# vtk DataFile Version 3.0\nbigrid mesh n=" << mesh.n() << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.vertices().size() << " double\n";
  out.precision(17);
  for (const Point& p : mesh.vertices()) out << p.x << ' ' << p.y << " 0\n";
  const auto& tris = mesh.triangles();
  out << "CELLS " << tris.size() << ' ' << 4 * tris.size() << '\n';
  for (const auto& t : tris) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << tris.size() << '\n';
  for (std::size_t k = 0; k < tris.size(); ++k) out << "5\n";
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

} // namespace bigrid
