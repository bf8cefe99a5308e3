#include "bigrid/transfer.hpp"

#include "bigrid/errors.hpp"

#include <array>

namespace bigrid {

namespace {

const FeSpace& checked(const std::shared_ptr<const FeSpace>& coarse, const std::shared_ptr<const FeSpace>& fine) {
  if (!coarse || !fine) throw InvalidParameter("build_transfer: null space");
  if (coarse->kind() != ElementKind::P2 || fine->kind() != ElementKind::P2)
    throw InvalidParameter("build_transfer: both spaces must be P2");
  if (fine->mesh().n() != 2 * coarse->mesh().n() || !verify_nested(coarse->mesh(), fine->mesh()))
    throw InvalidParameter("build_transfer: meshes are not nested");
  return *coarse;
}

// Barycentric coordinates of p in triangle t of `mesh`.
std::array<double, 3> barycentric(const TriMesh& mesh, int t, Point p) {
  const CellGeometry g = cell_geometry(mesh, t);
  const Point& a = mesh.vertices()[mesh.triangles()[t][0]];
  const double dx = p.x - a.x;
  const double dy = p.y - a.y;
  std::array<double, 3> l{};
  l[1] = g.grad_lambda[1][0] * dx + g.grad_lambda[1][1] * dy;
  l[2] = g.grad_lambda[2][0] * dx + g.grad_lambda[2][1] * dy;
  l[0] = 1.0 - l[1] - l[2];
  return l;
}

SparseMatrix build_prolongation(const FeSpace& coarse, const FeSpace& fine) {
  const TriMesh& fm = fine.mesh();
  std::vector<char> done(fine.dof_count(), 0);
  std::vector<Eigen::Triplet<double, int>> trips;
  trips.reserve(static_cast<std::size_t>(fine.dof_count()) * 6);
  std::array<double, 6> phi{};
  for (int t = 0; t < fine.cell_count(); ++t) {
    const int parent = fm.parent_triangle(t);
    auto fd = fine.cell_dofs(t);
    auto cd = coarse.cell_dofs(parent);
    for (int a = 0; a < 6; ++a) {
      const int d = fd[a];
      if (done[d]) continue;
      done[d] = 1;
      coarse.shape_values(barycentric(coarse.mesh(), parent, fine.dof_coords()[d]), phi);
      for (int b = 0; b < 6; ++b)
        if (phi[b] != 0.0) trips.emplace_back(d, cd[b], phi[b]);
    }
  }
  SparseMatrix p(fine.dof_count(), coarse.dof_count());
  p.setFromTriplets(trips.begin(), trips.end());
  p.makeCompressed();
  return p;
}

SparseMatrix build_cross_mass(const FeSpace& coarse, const FeSpace& fine) {
  const auto& rule = degree4_rule();
  const TriMesh& fm = fine.mesh();
  std::vector<Eigen::Triplet<double, int>> trips;
  trips.reserve(static_cast<std::size_t>(fine.cell_count()) * 36);
  std::array<double, 6> fphi{}, cphi{};
  for (int t = 0; t < fine.cell_count(); ++t) {
    const int parent = fm.parent_triangle(t);
    const auto& tri = fm.triangles()[t];
    const Point& a = fm.vertices()[tri[0]];
    const Point& b = fm.vertices()[tri[1]];
    const Point& c = fm.vertices()[tri[2]];
    const double scale = 2.0 * fm.triangle_area(t);
    auto fd = fine.cell_dofs(t);
    auto cd = coarse.cell_dofs(parent);
    std::array<double, 36> local{};
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& l = rule.points[q];
      const Point x{l[0] * a.x + l[1] * b.x + l[2] * c.x, l[0] * a.y + l[1] * b.y + l[2] * c.y};
      fine.shape_values(l, fphi);
      coarse.shape_values(barycentric(coarse.mesh(), parent, x), cphi);
      const double w = rule.weights[q] * scale;
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) local[i * 6 + j] += w * cphi[i] * fphi[j];
    }
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) trips.emplace_back(cd[i], fd[j], local[i * 6 + j]);
  }
  SparseMatrix m(coarse.dof_count(), fine.dof_count());
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

} // namespace

TransferOps::TransferOps(std::shared_ptr<const FeSpace> coarse, std::shared_ptr<const FeSpace> fine)
    : coarse_((checked(coarse, fine), std::move(coarse))),
      fine_(std::move(fine)),
      coarse_mass_(assemble_mass(*coarse_)),
      cross_mass_(build_cross_mass(*coarse_, *fine_)),
      prolong_(build_prolongation(*coarse_, *fine_)),
      coarse_mass_factor_(coarse_mass_, SolverMethod::direct_ldlt, 1e-13),
      constrained_(coarse_mass_, coarse_->boundary_dofs()),
      constrained_factor_(constrained_.matrix(), SolverMethod::direct_ldlt, 1e-13) {
  const int lc = coarse_->lattice_size();
  const int lf = fine_->lattice_size();
  embed_.resize(coarse_->dof_count());
  for (int d = 0; d < coarse_->dof_count(); ++d) {
    const int a = d % lc;
    const int b = d / lc;
    embed_[d] = (2 * b) * lf + 2 * a;
  }
}

Vector TransferOps::prolong(const Vector& coarse) const {
  if (coarse.size() != coarse_->dof_count()) throw InvalidParameter("prolong: vector is not on the coarse space");
  return prolong_ * coarse;
}

Vector TransferOps::restrict_l2(const Vector& fine) const {
  if (fine.size() != fine_->dof_count()) throw InvalidParameter("restrict_l2: vector is not on the fine space");
  return coarse_mass_factor_.solve(cross_mass_ * fine);
}

Vector TransferOps::restrict_l2(const Vector& fine, const BoundaryData& bc) const {
  if (fine.size() != fine_->dof_count()) throw InvalidParameter("restrict_l2: vector is not on the fine space");
  return constrained_factor_.solve(constrained_.rhs(cross_mass_ * fine, bc));
}

TransferOps build_transfer(std::shared_ptr<const FeSpace> coarse, std::shared_ptr<const FeSpace> fine) {
  return TransferOps(std::move(coarse), std::move(fine));
}

VelocityField prolong(const TransferOps& t, const VelocityField& uH) {
  if (!uH.space || !uH.space->compatible(t.coarse_space()))
    throw InvalidParameter("prolong: field does not live on the coarse space");
  return {t.fine_ptr(), t.prolong(uH.ux), t.prolong(uH.uy)};
}

VelocityField restrict_l2(const TransferOps& t, const VelocityField& uh) {
  if (!uh.space || !uh.space->compatible(t.fine_space()))
    throw InvalidParameter("restrict_l2: field does not live on the fine space");
  return {t.coarse_ptr(), t.restrict_l2(uh.ux), t.restrict_l2(uh.uy)};
}

} // namespace bigrid
