#pragma once

#include "bigrid/linalg_types.hpp"
#include "bigrid/mesh.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace bigrid {

enum class ElementKind { P1, P2 };

/// Quadrature on the reference triangle, points in barycentric coordinates.
struct QuadratureRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights; ///< sum to 1/2, the reference area
  int degree = 0;
};

/// Six-point rule, exact for polynomials of total degree <= 4.
const QuadratureRule& degree4_rule();

/// Affine data of one triangle: area and the (constant) barycentric gradients.
struct CellGeometry {
  double area = 0.0;
  std::array<std::array<double, 2>, 3> grad_lambda{};
};

CellGeometry cell_geometry(const TriMesh& mesh, int t);

/// Scalar Lagrange space on a TriMesh.
///
/// P1 dofs are the mesh vertices. P2 dofs are the vertices and the edge
/// midpoints; they are numbered on the (2n+1)x(2n+1) lattice of half-step
/// points, row-major in y then x, so vertex (i, j) owns dof (2i, 2j).
/// Local P2 ordering on a triangle: the three vertices, then the midpoints
/// of local edges 0-1, 1-2, 2-0.
class FeSpace {
public:
  FeSpace(std::shared_ptr<const TriMesh> mesh, ElementKind kind);

  ElementKind kind() const noexcept { return kind_; }
  const TriMesh& mesh() const noexcept { return *mesh_; }
  const std::shared_ptr<const TriMesh>& mesh_ptr() const noexcept { return mesh_; }
  int dof_count() const noexcept { return static_cast<int>(coords_.size()); }
  int dofs_per_cell() const noexcept { return kind_ == ElementKind::P1 ? 3 : 6; }
  int cell_count() const noexcept { return static_cast<int>(mesh_->triangles().size()); }
  /// Number of dof lattice points per side (n+1 for P1, 2n+1 for P2).
  int lattice_size() const noexcept { return lattice_; }

  const std::vector<Point>& dof_coords() const noexcept { return coords_; }
  const std::vector<std::uint8_t>& dof_tags() const noexcept { return tags_; }
  std::span<const int> cell_dofs(int t) const {
    return {cell_dofs_.data() + static_cast<std::size_t>(t) * dofs_per_cell(), static_cast<std::size_t>(dofs_per_cell())};
  }
  /// Sorted indices of dofs on the boundary.
  const std::vector<int>& boundary_dofs() const noexcept { return boundary_; }

  /// Square matrix with the dof-coupling structure and zero values.
  const SparseMatrix& pattern() const noexcept { return pattern_; }
  /// Offsets into pattern().valuePtr() for cell t, local (a, b) at a*nloc+b.
  std::span<const int> cell_positions(int t) const {
    const std::size_t nl = static_cast<std::size_t>(dofs_per_cell()) * dofs_per_cell();
    return {cell_positions_.data() + t * nl, nl};
  }

  /// Basis values at barycentric point lambda.
  void shape_values(const std::array<double, 3>& lambda, std::span<double> out) const;
  /// Basis gradients at lambda on a cell with the given geometry.
  void shape_gradients(const std::array<double, 3>& lambda, const CellGeometry& g,
                       std::span<std::array<double, 2>> out) const;

  /// Nodal interpolant of f.
  Vector interpolate(const std::function<double(double, double)>& f) const;

  /// Triangle containing p and the barycentric coordinates of p in it.
  std::pair<int, std::array<double, 3>> locate(Point p) const;
  /// Value of the finite element function with coefficients c at p.
  double evaluate(const Vector& c, Point p) const;

  /// Same mesh parameter and element kind.
  bool compatible(const FeSpace& other) const noexcept {
    return kind_ == other.kind_ && mesh_->n() == other.mesh_->n();
  }

private:
  std::shared_ptr<const TriMesh> mesh_;
  ElementKind kind_;
  int lattice_ = 0;
  std::vector<Point> coords_;
  std::vector<std::uint8_t> tags_;
  std::vector<int> cell_dofs_;
  std::vector<int> boundary_;
  SparseMatrix pattern_;
  std::vector<int> cell_positions_;
};

/// Two scalar P2 components.
struct VelocityField {
  std::shared_ptr<const FeSpace> space;
  Vector ux;
  Vector uy;

  static VelocityField zero(std::shared_ptr<const FeSpace> s) {
    const int n = s->dof_count();
    return {std::move(s), Vector::Zero(n), Vector::Zero(n)};
  }
};

struct PressureField {
  std::shared_ptr<const FeSpace> space;
  Vector p;
};

// Assembly. All forms use degree4_rule(); the returned matrices share the
// space's pattern() unless noted.

/// M_ij = (phi_j, phi_i).
SparseMatrix assemble_mass(const FeSpace& space);
/// K_ij = (grad phi_j, grad phi_i).
SparseMatrix assemble_stiffness(const FeSpace& space);
/// N(w)_ij = ((w . grad) phi_j, phi_i). w must live on a space compatible
/// with `space`; a coarse field has to be prolonged first.
SparseMatrix assemble_convection_matrix(const FeSpace& space, const VelocityField& w);
/// Same values as assemble_convection_matrix but written into `out`, which
/// must already carry the space pattern. Avoids reallocating per call.
void assemble_convection_matrix_into(const FeSpace& space, const VelocityField& w, SparseMatrix& out);
/// b_i = ((w . grad) u, phi_i) for both components of u.
std::pair<Vector, Vector> assemble_convection_vector(const FeSpace& space, const VelocityField& w,
                                                     const VelocityField& u);
/// d_i = (div u, chi_i) over the pressure test functions.
Vector assemble_div_rhs(const FeSpace& pspace, const VelocityField& u);
/// (G^x)_ij = (d/dx chi_j, phi_i), (G^y) analogous: P1 coefficients to P2 loads.
std::pair<SparseMatrix, SparseMatrix> assemble_grad_coupling(const FeSpace& vspace, const FeSpace& pspace);
/// (B^x)_ij = (d/dx phi_j, chi_i): the matrix form of assemble_div_rhs.
std::pair<SparseMatrix, SparseMatrix> assemble_div_coupling(const FeSpace& pspace, const FeSpace& vspace);
/// l_i = (f, phi_i).
Vector assemble_load(const FeSpace& space, const std::function<double(double, double)>& f);
/// Both components of a vector load in one pass over the quadrature points.
std::pair<Vector, Vector> assemble_load(const FeSpace& space,
                                        const std::function<std::array<double, 2>(double, double)>& f);

/// Prescribed values on boundary dofs; dofs sorted ascending.
struct BoundaryData {
  std::vector<int> dofs;
  std::vector<double> values;
};

/// Samples g at every boundary dof of the space.
BoundaryData make_boundary_data(const FeSpace& space, const std::function<double(Point, std::uint8_t)>& g);

/// Lid-driven cavity data: (1, 0) on every dof with y = 1, corners included
/// (leaky lid), zero elsewhere.
std::pair<BoundaryData, BoundaryData> cavity_lid_data(const FeSpace& vspace);
/// Homogeneous data on every boundary dof.
BoundaryData zero_boundary_data(const FeSpace& space);

/// Symmetric elimination of a fixed set of constrained dofs for a matrix
/// that is reused with many right-hand sides.
///
/// Constrained rows and columns become identity; the removed column entries
/// are kept so that rhs() can lift prescribed values onto the free rows.
class DirichletSystem {
public:
  DirichletSystem(const SparseMatrix& a, const std::vector<int>& constrained);

  const SparseMatrix& matrix() const noexcept { return reduced_; }
  /// b - A[:, D] g on free rows, g on constrained rows.
  Vector rhs(const Vector& b, const BoundaryData& bc) const;
  /// Refreshes values from a matrix with exactly the sparsity of the one
  /// given at construction.
  void update(const SparseMatrix& a);

private:
  SparseMatrix reduced_;
  SparseMatrix lift_; ///< free-row couplings to constrained columns
  std::vector<char> is_constrained_;
  std::vector<int> source_map_; ///< per source entry: reduced index, or -2-lift index, or -1
};

/// One-shot elimination. Throws InvalidParameter if bc does not cover every
/// boundary dof of the space.
std::pair<SparseMatrix, Vector> apply_dirichlet(const FeSpace& space, const SparseMatrix& a, const Vector& b,
                                                const BoundaryData& bc);

/// Writes bc values into c.
void impose(Vector& c, const BoundaryData& bc);

/// (phi_i, 1) for every dof; the row sums of the mass matrix.
Vector dof_integrals(const FeSpace& space);

/// p - (p, 1)/(1, 1).
PressureField zero_mean(const PressureField& p);
void zero_mean_inplace(Vector& p, const Vector& integrals);

/// sqrt(c^T M c). Throws InvalidParameter on a length mismatch.
double l2_norm(const FeSpace& space, const Vector& coeffs);
double l2_norm(const SparseMatrix& mass, const Vector& coeffs);

} // namespace bigrid
