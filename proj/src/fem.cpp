#include "bigrid/fem.hpp"

#include "bigrid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bigrid {

const QuadratureRule& degree4_rule() {
  static const QuadratureRule rule = [] {
    QuadratureRule r;
    r.degree = 4;
    const double a1 = 0.44594849091596488632;
    const double w1 = 0.22338158967801146570;
    const double a2 = 0.091576213509770743460;
    const double w2 = 0.10995174365532186764;
    for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
      const double b = 1.0 - 2.0 * a;
      r.points.push_back({a, a, b});
      r.points.push_back({a, b, a});
      r.points.push_back({b, a, a});
      for (int k = 0; k < 3; ++k) r.weights.push_back(0.5 * w);
    }
    return r;
  }();
  return rule;
}

CellGeometry cell_geometry(const TriMesh& mesh, int t) {
  const auto& tri = mesh.triangles()[t];
  const Point& a = mesh.vertices()[tri[0]];
  const Point& b = mesh.vertices()[tri[1]];
  const Point& c = mesh.vertices()[tri[2]];
  CellGeometry g;
  const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
  g.area = 0.5 * det;
  g.grad_lambda[0] = {(b.y - c.y) / det, (c.x - b.x) / det};
  g.grad_lambda[1] = {(c.y - a.y) / det, (a.x - c.x) / det};
  g.grad_lambda[2] = {(a.y - b.y) / det, (b.x - a.x) / det};
  return g;
}

FeSpace::FeSpace(std::shared_ptr<const TriMesh> mesh, ElementKind kind) : mesh_(std::move(mesh)), kind_(kind) {
  if (!mesh_) throw InvalidParameter("FeSpace: null mesh");
  const int n = mesh_->n();
  const int scale = kind_ == ElementKind::P1 ? 1 : 2;
  lattice_ = scale * n + 1;
  const int m = scale * n;
  coords_.reserve(static_cast<std::size_t>(lattice_) * lattice_);
  tags_.reserve(coords_.capacity());
  for (int j = 0; j < lattice_; ++j) {
    for (int i = 0; i < lattice_; ++i) {
      coords_.push_back({static_cast<double>(i) / m, static_cast<double>(j) / m});
      std::uint8_t t = tag::interior;
      if (j == 0) t |= tag::bottom;
      if (j == m) t |= tag::top;
      if (i == 0) t |= tag::left;
      if (i == m) t |= tag::right;
      if ((i == 0 || i == m) && (j == 0 || j == m)) t |= tag::corner;
      tags_.push_back(t);
    }
  }
  for (int d = 0; d < static_cast<int>(tags_.size()); ++d)
    if (tags_[d] != tag::interior) boundary_.push_back(d);

  // Vertex v = (i, j) sits at lattice (scale*i, scale*j).
  auto lattice_of_vertex = [&](int v) { return std::pair{scale * (v % (n + 1)), scale * (v / (n + 1))}; };
  const int nl = dofs_per_cell();
  cell_dofs_.reserve(static_cast<std::size_t>(cell_count()) * nl);
  for (const auto& tri : mesh_->triangles()) {
    std::array<std::pair<int, int>, 3> lv;
    for (int k = 0; k < 3; ++k) lv[k] = lattice_of_vertex(tri[k]);
    for (int k = 0; k < 3; ++k) cell_dofs_.push_back(lv[k].second * lattice_ + lv[k].first);
    if (kind_ == ElementKind::P2) {
      for (int k = 0; k < 3; ++k) {
        const auto& p = lv[k];
        const auto& q = lv[(k + 1) % 3];
        cell_dofs_.push_back(((p.second + q.second) / 2) * lattice_ + (p.first + q.first) / 2);
      }
    }
  }

  std::vector<Eigen::Triplet<double, int>> trips;
  trips.reserve(static_cast<std::size_t>(cell_count()) * nl * nl);
  for (int t = 0; t < cell_count(); ++t) {
    auto dofs = cell_dofs(t);
    for (int a = 0; a < nl; ++a)
      for (int b = 0; b < nl; ++b) trips.emplace_back(dofs[a], dofs[b], 0.0);
  }
  pattern_.resize(dof_count(), dof_count());
  pattern_.setFromTriplets(trips.begin(), trips.end());
  pattern_.makeCompressed();

  cell_positions_.resize(static_cast<std::size_t>(cell_count()) * nl * nl);
  const int* outer = pattern_.outerIndexPtr();
  const int* inner = pattern_.innerIndexPtr();
  for (int t = 0; t < cell_count(); ++t) {
    auto dofs = cell_dofs(t);
    for (int a = 0; a < nl; ++a) {
      const int row = dofs[a];
      for (int b = 0; b < nl; ++b) {
        const int* it = std::lower_bound(inner + outer[row], inner + outer[row + 1], dofs[b]);
        cell_positions_[(static_cast<std::size_t>(t) * nl + a) * nl + b] = static_cast<int>(it - inner);
      }
    }
  }
}

void FeSpace::shape_values(const std::array<double, 3>& l, std::span<double> out) const {
  if (kind_ == ElementKind::P1) {
    out[0] = l[0];
    out[1] = l[1];
    out[2] = l[2];
    return;
  }
  for (int k = 0; k < 3; ++k) out[k] = l[k] * (2.0 * l[k] - 1.0);
  out[3] = 4.0 * l[0] * l[1];
  out[4] = 4.0 * l[1] * l[2];
  out[5] = 4.0 * l[2] * l[0];
}

void FeSpace::shape_gradients(const std::array<double, 3>& l, const CellGeometry& g,
                              std::span<std::array<double, 2>> out) const {
  const auto& gl = g.grad_lambda;
  if (kind_ == ElementKind::P1) {
    for (int k = 0; k < 3; ++k) out[k] = gl[k];
    return;
  }
  for (int k = 0; k < 3; ++k) {
    const double s = 4.0 * l[k] - 1.0;
    out[k] = {s * gl[k][0], s * gl[k][1]};
  }
  for (int k = 0; k < 3; ++k) {
    const int a = k;
    const int b = (k + 1) % 3;
    out[3 + k] = {4.0 * (l[b] * gl[a][0] + l[a] * gl[b][0]), 4.0 * (l[b] * gl[a][1] + l[a] * gl[b][1])};
  }
}

Vector FeSpace::interpolate(const std::function<double(double, double)>& f) const {
  Vector c(dof_count());
  for (int d = 0; d < dof_count(); ++d) c[d] = f(coords_[d].x, coords_[d].y);
  return c;
}

std::pair<int, std::array<double, 3>> FeSpace::locate(Point p) const {
  const int n = mesh_->n();
  const double sx = p.x * n;
  const double sy = p.y * n;
  const int i = std::clamp(static_cast<int>(std::floor(sx)), 0, n - 1);
  const int j = std::clamp(static_cast<int>(std::floor(sy)), 0, n - 1);
  const bool below = (sy - j) <= (sx - i);
  const int t = 2 * (j * n + i) + (below ? 0 : 1);
  const CellGeometry g = cell_geometry(*mesh_, t);
  const Point& a = mesh_->vertices()[mesh_->triangles()[t][0]];
  const double dx = p.x - a.x;
  const double dy = p.y - a.y;
  std::array<double, 3> l{};
  l[1] = g.grad_lambda[1][0] * dx + g.grad_lambda[1][1] * dy;
  l[2] = g.grad_lambda[2][0] * dx + g.grad_lambda[2][1] * dy;
  l[0] = 1.0 - l[1] - l[2];
  return {t, l};
}

double FeSpace::evaluate(const Vector& c, Point p) const {
  auto [t, l] = locate(p);
  std::array<double, 6> phi{};
  shape_values(l, phi);
  auto dofs = cell_dofs(t);
  double v = 0.0;
  for (int a = 0; a < dofs_per_cell(); ++a) v += c[dofs[a]] * phi[a];
  return v;
}

namespace {

// Shape values at the quadrature points, shared by every cell.
struct ReferenceTable {
  int nq = 0;
  int nl = 0;
  std::vector<double> phi; // [q * nl + a]
};

ReferenceTable reference_table(const FeSpace& s) {
  const auto& rule = degree4_rule();
  ReferenceTable tab;
  tab.nq = static_cast<int>(rule.points.size());
  tab.nl = s.dofs_per_cell();
  tab.phi.resize(static_cast<std::size_t>(tab.nq) * tab.nl);
  for (int q = 0; q < tab.nq; ++q) s.shape_values(rule.points[q], std::span<double>(&tab.phi[q * tab.nl], tab.nl));
  return tab;
}

void require_velocity_on(const FeSpace& space, const VelocityField& w, const char* who) {
  if (!w.space || !w.space->compatible(space)) {
    throw InvalidParameter(std::string(who) + ": velocity field does not live on the assembly space "
                                               "(prolong coarse fields first)");
  }
  if (w.ux.size() != space.dof_count() || w.uy.size() != space.dof_count())
    throw InvalidParameter(std::string(who) + ": coefficient length mismatch");
}

template <class CellKernel>
SparseMatrix assemble_on_pattern(const FeSpace& space, CellKernel&& kernel) {
  SparseMatrix a = space.pattern();
  double* values = a.valuePtr();
  const int nl = space.dofs_per_cell();
  std::array<double, 36> local{};
  for (int t = 0; t < space.cell_count(); ++t) {
    std::fill(local.begin(), local.end(), 0.0);
    kernel(t, local);
    auto pos = space.cell_positions(t);
    for (int k = 0; k < nl * nl; ++k) values[pos[k]] += local[k];
  }
  return a;
}

} // namespace

SparseMatrix assemble_mass(const FeSpace& space) {
  const auto& rule = degree4_rule();
  const ReferenceTable tab = reference_table(space);
  const int nl = tab.nl;
  return assemble_on_pattern(space, [&](int t, std::array<double, 36>& local) {
    const double scale = 2.0 * space.mesh().triangle_area(t);
    for (int q = 0; q < tab.nq; ++q) {
      const double* phi = &tab.phi[q * nl];
      const double w = rule.weights[q] * scale;
      for (int a = 0; a < nl; ++a)
        for (int b = 0; b < nl; ++b) local[a * nl + b] += w * phi[a] * phi[b];
    }
  });
}

SparseMatrix assemble_stiffness(const FeSpace& space) {
  const auto& rule = degree4_rule();
  const int nl = space.dofs_per_cell();
  return assemble_on_pattern(space, [&](int t, std::array<double, 36>& local) {
    const CellGeometry g = cell_geometry(space.mesh(), t);
    std::array<std::array<double, 2>, 6> grad{};
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      space.shape_gradients(rule.points[q], g, grad);
      const double w = rule.weights[q] * 2.0 * g.area;
      for (int a = 0; a < nl; ++a)
        for (int b = 0; b < nl; ++b) local[a * nl + b] += w * (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1]);
    }
  });
}

void assemble_convection_matrix_into(const FeSpace& space, const VelocityField& w, SparseMatrix& out) {
  require_velocity_on(space, w, "assemble_convection_matrix");
  if (out.nonZeros() != space.pattern().nonZeros() || out.rows() != space.dof_count())
    out = space.pattern();
  const auto& rule = degree4_rule();
  const ReferenceTable tab = reference_table(space);
  const int nl = tab.nl;
  double* values = out.valuePtr();
  std::fill(values, values + out.nonZeros(), 0.0);
  std::array<double, 36> local{};
  std::array<std::array<double, 2>, 6> grad{};
  for (int t = 0; t < space.cell_count(); ++t) {
    std::fill(local.begin(), local.end(), 0.0);
    const CellGeometry g = cell_geometry(space.mesh(), t);
    auto dofs = space.cell_dofs(t);
    for (int q = 0; q < tab.nq; ++q) {
      const double* phi = &tab.phi[q * nl];
      space.shape_gradients(rule.points[q], g, grad);
      double wx = 0.0;
      double wy = 0.0;
      for (int a = 0; a < nl; ++a) {
        wx += w.ux[dofs[a]] * phi[a];
        wy += w.uy[dofs[a]] * phi[a];
      }
      const double wq = rule.weights[q] * 2.0 * g.area;
      for (int b = 0; b < nl; ++b) {
        const double adv = wq * (wx * grad[b][0] + wy * grad[b][1]);
        for (int a = 0; a < nl; ++a) local[a * nl + b] += adv * phi[a];
      }
    }
    auto pos = space.cell_positions(t);
    for (int k = 0; k < nl * nl; ++k) values[pos[k]] += local[k];
  }
}

SparseMatrix assemble_convection_matrix(const FeSpace& space, const VelocityField& w) {
  SparseMatrix out = space.pattern();
  assemble_convection_matrix_into(space, w, out);
  return out;
}

std::pair<Vector, Vector> assemble_convection_vector(const FeSpace& space, const VelocityField& w,
                                                     const VelocityField& u) {
  require_velocity_on(space, w, "assemble_convection_vector");
  require_velocity_on(space, u, "assemble_convection_vector");
  const auto& rule = degree4_rule();
  const ReferenceTable tab = reference_table(space);
  const int nl = tab.nl;
  Vector bx = Vector::Zero(space.dof_count());
  Vector by = Vector::Zero(space.dof_count());
  std::array<std::array<double, 2>, 6> grad{};
  for (int t = 0; t < space.cell_count(); ++t) {
    const CellGeometry g = cell_geometry(space.mesh(), t);
    auto dofs = space.cell_dofs(t);
    for (int q = 0; q < tab.nq; ++q) {
      const double* phi = &tab.phi[q * nl];
      space.shape_gradients(rule.points[q], g, grad);
      double wx = 0.0, wy = 0.0;
      double uxx = 0.0, uxy = 0.0, uyx = 0.0, uyy = 0.0;
      for (int a = 0; a < nl; ++a) {
        const int d = dofs[a];
        wx += w.ux[d] * phi[a];
        wy += w.uy[d] * phi[a];
        uxx += u.ux[d] * grad[a][0];
        uxy += u.ux[d] * grad[a][1];
        uyx += u.uy[d] * grad[a][0];
        uyy += u.uy[d] * grad[a][1];
      }
      const double wq = rule.weights[q] * 2.0 * g.area;
      const double cx = wq * (wx * uxx + wy * uxy);
      const double cy = wq * (wx * uyx + wy * uyy);
      for (int a = 0; a < nl; ++a) {
        bx[dofs[a]] += cx * phi[a];
        by[dofs[a]] += cy * phi[a];
      }
    }
  }
  return {std::move(bx), std::move(by)};
}

Vector assemble_div_rhs(const FeSpace& pspace, const VelocityField& u) {
  if (pspace.kind() != ElementKind::P1 || !u.space || u.space->kind() != ElementKind::P2 ||
      u.space->mesh().n() != pspace.mesh().n())
    throw InvalidParameter("assemble_div_rhs: expected P1 pressure space and P2 velocity on the same mesh");
  const FeSpace& vs = *u.space;
  const auto& rule = degree4_rule();
  const ReferenceTable ptab = reference_table(pspace);
  Vector d = Vector::Zero(pspace.dof_count());
  std::array<std::array<double, 2>, 6> grad{};
  for (int t = 0; t < vs.cell_count(); ++t) {
    const CellGeometry g = cell_geometry(vs.mesh(), t);
    auto vd = vs.cell_dofs(t);
    auto pd = pspace.cell_dofs(t);
    for (int q = 0; q < ptab.nq; ++q) {
      vs.shape_gradients(rule.points[q], g, grad);
      double div = 0.0;
      for (int a = 0; a < 6; ++a) div += u.ux[vd[a]] * grad[a][0] + u.uy[vd[a]] * grad[a][1];
      const double wq = rule.weights[q] * 2.0 * g.area * div;
      for (int a = 0; a < 3; ++a) d[pd[a]] += wq * ptab.phi[q * 3 + a];
    }
  }
  return d;
}

namespace {

// Mixed P2/P1 derivative couplings. When `grad_on_pressure` the derivative
// falls on the P1 trial function and rows are P2; otherwise the derivative
// falls on the P2 trial function and rows are P1.
std::pair<SparseMatrix, SparseMatrix> mixed_coupling(const FeSpace& vspace, const FeSpace& pspace,
                                                     bool grad_on_pressure) {
  if (vspace.kind() != ElementKind::P2 || pspace.kind() != ElementKind::P1 ||
      vspace.mesh().n() != pspace.mesh().n())
    throw InvalidParameter("mixed coupling: expected P2 and P1 spaces on the same mesh");
  const auto& rule = degree4_rule();
  const ReferenceTable vtab = reference_table(vspace);
  const ReferenceTable ptab = reference_table(pspace);
  std::vector<Eigen::Triplet<double, int>> tx, ty;
  tx.reserve(static_cast<std::size_t>(vspace.cell_count()) * 18);
  ty.reserve(tx.capacity());
  std::array<std::array<double, 2>, 6> vgrad{};
  std::array<std::array<double, 2>, 6> pgrad{};
  for (int t = 0; t < vspace.cell_count(); ++t) {
    const CellGeometry g = cell_geometry(vspace.mesh(), t);
    auto vd = vspace.cell_dofs(t);
    auto pd = pspace.cell_dofs(t);
    std::array<double, 18> lx{}, ly{};
    for (int q = 0; q < vtab.nq; ++q) {
      const double wq = rule.weights[q] * 2.0 * g.area;
      const double* vphi = &vtab.phi[q * 6];
      const double* pphi = &ptab.phi[q * 3];
      if (grad_on_pressure) {
        pspace.shape_gradients(rule.points[q], g, pgrad);
        for (int i = 0; i < 6; ++i)
          for (int j = 0; j < 3; ++j) {
            lx[i * 3 + j] += wq * pgrad[j][0] * vphi[i];
            ly[i * 3 + j] += wq * pgrad[j][1] * vphi[i];
          }
      } else {
        vspace.shape_gradients(rule.points[q], g, vgrad);
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 6; ++j) {
            lx[j * 3 + i] += wq * vgrad[j][0] * pphi[i];
            ly[j * 3 + i] += wq * vgrad[j][1] * pphi[i];
          }
      }
    }
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 3; ++j) {
        if (grad_on_pressure) {
          tx.emplace_back(vd[i], pd[j], lx[i * 3 + j]);
          ty.emplace_back(vd[i], pd[j], ly[i * 3 + j]);
        } else {
          tx.emplace_back(pd[j], vd[i], lx[i * 3 + j]);
          ty.emplace_back(pd[j], vd[i], ly[i * 3 + j]);
        }
      }
  }
  const int rows = grad_on_pressure ? vspace.dof_count() : pspace.dof_count();
  const int cols = grad_on_pressure ? pspace.dof_count() : vspace.dof_count();
  SparseMatrix gx(rows, cols), gy(rows, cols);
  gx.setFromTriplets(tx.begin(), tx.end());
  gy.setFromTriplets(ty.begin(), ty.end());
  gx.makeCompressed();
  gy.makeCompressed();
  return {std::move(gx), std::move(gy)};
}

} // namespace

std::pair<SparseMatrix, SparseMatrix> assemble_grad_coupling(const FeSpace& vspace, const FeSpace& pspace) {
  return mixed_coupling(vspace, pspace, true);
}

std::pair<SparseMatrix, SparseMatrix> assemble_div_coupling(const FeSpace& pspace, const FeSpace& vspace) {
  return mixed_coupling(vspace, pspace, false);
}

Vector assemble_load(const FeSpace& space, const std::function<double(double, double)>& f) {
  auto [lx, ly] = assemble_load(space, [&f](double x, double y) { return std::array<double, 2>{f(x, y), 0.0}; });
  return lx;
}

std::pair<Vector, Vector> assemble_load(const FeSpace& space,
                                        const std::function<std::array<double, 2>(double, double)>& f) {
  const auto& rule = degree4_rule();
  const ReferenceTable tab = reference_table(space);
  const int nl = tab.nl;
  Vector lx = Vector::Zero(space.dof_count());
  Vector ly = Vector::Zero(space.dof_count());
  const TriMesh& mesh = space.mesh();
  for (int t = 0; t < space.cell_count(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const Point& a = mesh.vertices()[tri[0]];
    const Point& b = mesh.vertices()[tri[1]];
    const Point& c = mesh.vertices()[tri[2]];
    const double scale = 2.0 * mesh.triangle_area(t);
    auto dofs = space.cell_dofs(t);
    for (int q = 0; q < tab.nq; ++q) {
      const auto& l = rule.points[q];
      const double x = l[0] * a.x + l[1] * b.x + l[2] * c.x;
      const double y = l[0] * a.y + l[1] * b.y + l[2] * c.y;
      const auto fv = f(x, y);
      const double w = rule.weights[q] * scale;
      for (int k = 0; k < nl; ++k) {
        lx[dofs[k]] += w * fv[0] * tab.phi[q * nl + k];
        ly[dofs[k]] += w * fv[1] * tab.phi[q * nl + k];
      }
    }
  }
  return {std::move(lx), std::move(ly)};
}

BoundaryData make_boundary_data(const FeSpace& space, const std::function<double(Point, std::uint8_t)>& g) {
  BoundaryData bc;
  bc.dofs = space.boundary_dofs();
  bc.values.reserve(bc.dofs.size());
  for (int d : bc.dofs) bc.values.push_back(g(space.dof_coords()[d], space.dof_tags()[d]));
  return bc;
}

std::pair<BoundaryData, BoundaryData> cavity_lid_data(const FeSpace& vspace) {
  BoundaryData bx = make_boundary_data(vspace, [](Point, std::uint8_t t) { return (t & tag::top) ? 1.0 : 0.0; });
  return {std::move(bx), zero_boundary_data(vspace)};
}

BoundaryData zero_boundary_data(const FeSpace& space) {
  return make_boundary_data(space, [](Point, std::uint8_t) { return 0.0; });
}

DirichletSystem::DirichletSystem(const SparseMatrix& a, const std::vector<int>& constrained) {
  if (a.rows() != a.cols()) throw InvalidParameter("DirichletSystem: matrix must be square");
  const int n = static_cast<int>(a.rows());
  is_constrained_.assign(n, 0);
  for (int d : constrained) {
    if (d < 0 || d >= n) throw InvalidParameter("DirichletSystem: constrained dof out of range");
    is_constrained_[d] = 1;
  }
  std::vector<Eigen::Triplet<double, int>> keep, lift;
  keep.reserve(a.nonZeros());
  for (int r = 0; r < n; ++r) {
    if (is_constrained_[r]) {
      keep.emplace_back(r, r, 1.0);
      continue;
    }
    for (SparseMatrix::InnerIterator it(a, r); it; ++it) {
      if (is_constrained_[it.col()])
        lift.emplace_back(r, static_cast<int>(it.col()), it.value());
      else
        keep.emplace_back(r, static_cast<int>(it.col()), it.value());
    }
  }
  reduced_.resize(n, n);
  reduced_.setFromTriplets(keep.begin(), keep.end());
  reduced_.makeCompressed();
  lift_.resize(n, n);
  lift_.setFromTriplets(lift.begin(), lift.end());
  lift_.makeCompressed();

  auto find = [](const SparseMatrix& m, int r, int c) {
    const int* begin = m.innerIndexPtr() + m.outerIndexPtr()[r];
    const int* end = m.innerIndexPtr() + m.outerIndexPtr()[r + 1];
    const int* it = std::lower_bound(begin, end, c);
    return static_cast<int>(it - m.innerIndexPtr());
  };
  SparseMatrix src = a;
  src.makeCompressed();
  source_map_.assign(static_cast<std::size_t>(src.nonZeros()), -1);
  for (int r = 0; r < n; ++r) {
    if (is_constrained_[r]) continue;
    for (int k = src.outerIndexPtr()[r]; k < src.outerIndexPtr()[r + 1]; ++k) {
      const int col = src.innerIndexPtr()[k];
      source_map_[k] = is_constrained_[col] ? -2 - find(lift_, r, col) : find(reduced_, r, col);
    }
  }
}

void DirichletSystem::update(const SparseMatrix& a) {
  if (!a.isCompressed() || static_cast<std::size_t>(a.nonZeros()) != source_map_.size() || a.rows() != reduced_.rows())
    throw InvalidParameter("DirichletSystem::update: sparsity differs from the original matrix");
  const double* v = a.valuePtr();
  double* red = reduced_.valuePtr();
  double* lif = lift_.valuePtr();
  for (std::size_t k = 0; k < source_map_.size(); ++k) {
    const int m = source_map_[k];
    if (m >= 0)
      red[m] = v[k];
    else if (m <= -2)
      lif[-2 - m] = v[k];
  }
}

Vector DirichletSystem::rhs(const Vector& b, const BoundaryData& bc) const {
  if (b.size() != reduced_.rows()) throw InvalidParameter("DirichletSystem::rhs: length mismatch");
  Vector g = Vector::Zero(b.size());
  for (std::size_t k = 0; k < bc.dofs.size(); ++k) g[bc.dofs[k]] = bc.values[k];
  Vector r = b - lift_ * g;
  for (std::size_t k = 0; k < bc.dofs.size(); ++k) r[bc.dofs[k]] = bc.values[k];
  return r;
}

std::pair<SparseMatrix, Vector> apply_dirichlet(const FeSpace& space, const SparseMatrix& a, const Vector& b,
                                                const BoundaryData& bc) {
  if (bc.dofs.size() != bc.values.size()) throw InvalidParameter("apply_dirichlet: dofs/values size mismatch");
  if (a.rows() != space.dof_count() || b.size() != space.dof_count())
    throw InvalidParameter("apply_dirichlet: system size does not match the space");
  std::vector<int> sorted = bc.dofs;
  std::sort(sorted.begin(), sorted.end());
  for (int d : space.boundary_dofs()) {
    if (!std::binary_search(sorted.begin(), sorted.end(), d))
      throw InvalidParameter("apply_dirichlet: boundary dof " + std::to_string(d) + " has no prescribed value");
  }
  DirichletSystem sys(a, bc.dofs);
  Vector rhs = sys.rhs(b, bc);
  return {sys.matrix(), std::move(rhs)};
}

void impose(Vector& c, const BoundaryData& bc) {
  for (std::size_t k = 0; k < bc.dofs.size(); ++k) c[bc.dofs[k]] = bc.values[k];
}

Vector dof_integrals(const FeSpace& space) {
  const auto& rule = degree4_rule();
  const ReferenceTable tab = reference_table(space);
  Vector w = Vector::Zero(space.dof_count());
  for (int t = 0; t < space.cell_count(); ++t) {
    const double scale = 2.0 * space.mesh().triangle_area(t);
    auto dofs = space.cell_dofs(t);
    for (int q = 0; q < tab.nq; ++q)
      for (int a = 0; a < tab.nl; ++a) w[dofs[a]] += rule.weights[q] * scale * tab.phi[q * tab.nl + a];
  }
  return w;
}

void zero_mean_inplace(Vector& p, const Vector& integrals) {
  const double mean = integrals.dot(p) / integrals.sum();
  p.array() -= mean;
}

PressureField zero_mean(const PressureField& p) {
  if (!p.space) throw InvalidParameter("zero_mean: pressure field without a space");
  PressureField out = p;
  zero_mean_inplace(out.p, dof_integrals(*p.space));
  return out;
}

double l2_norm(const SparseMatrix& mass, const Vector& coeffs) {
  if (coeffs.size() != mass.rows()) throw InvalidParameter("l2_norm: coefficient length does not match the space");
  return std::sqrt(std::max(0.0, coeffs.dot(mass * coeffs)));
}

double l2_norm(const FeSpace& space, const Vector& coeffs) {
  if (coeffs.size() != space.dof_count())
    throw InvalidParameter("l2_norm: coefficient length does not match the space");
  return l2_norm(assemble_mass(space), coeffs);
}

} // namespace bigrid
