#pragma once

#include "bigrid/fem.hpp"
#include "bigrid/linalg.hpp"

#include <memory>
#include <vector>

namespace bigrid {

/// Coarse/fine transfer between nested P2 spaces.
///
/// Prolongation is nodal interpolation of the coarse function at the fine
/// dofs, which is exact because the coarse space is contained in the fine
/// one. Restriction is the L2 projection M_H u_H = M_Hh u_h. The fluctuation
/// u_h - prolong(restrict(u_h)) is never stored.
class TransferOps {
public:
  TransferOps(std::shared_ptr<const FeSpace> coarse, std::shared_ptr<const FeSpace> fine);

  const FeSpace& coarse_space() const noexcept { return *coarse_; }
  const FeSpace& fine_space() const noexcept { return *fine_; }
  const std::shared_ptr<const FeSpace>& coarse_ptr() const noexcept { return coarse_; }
  const std::shared_ptr<const FeSpace>& fine_ptr() const noexcept { return fine_; }

  /// embed_map()[i] is the fine dof located at coarse dof i.
  const std::vector<int>& embed_map() const noexcept { return embed_; }
  /// M_H.
  const SparseMatrix& coarse_mass() const noexcept { return coarse_mass_; }
  /// M_Hh, rows coarse, columns fine: (M_Hh)_ij = (phi^h_j, psi^H_i).
  const SparseMatrix& cross_mass() const noexcept { return cross_mass_; }
  /// Interpolation matrix, rows fine, columns coarse.
  const SparseMatrix& prolongation() const noexcept { return prolong_; }

  Vector prolong(const Vector& coarse) const;
  /// Unconstrained L2 projection onto the coarse space.
  Vector restrict_l2(const Vector& fine) const;
  /// L2 projection with coarse boundary dofs pinned to `bc` and interior
  /// rows tested against interior coarse basis functions only.
  Vector restrict_l2(const Vector& fine, const BoundaryData& bc) const;

private:
  std::shared_ptr<const FeSpace> coarse_;
  std::shared_ptr<const FeSpace> fine_;
  std::vector<int> embed_;
  SparseMatrix coarse_mass_;
  SparseMatrix cross_mass_;
  SparseMatrix prolong_;
  Factorization coarse_mass_factor_;
  DirichletSystem constrained_;
  Factorization constrained_factor_;
};

/// Throws InvalidParameter unless both spaces are P2 on nested meshes.
TransferOps build_transfer(std::shared_ptr<const FeSpace> coarse, std::shared_ptr<const FeSpace> fine);

VelocityField prolong(const TransferOps& t, const VelocityField& uH);
VelocityField restrict_l2(const TransferOps& t, const VelocityField& uh);

} // namespace bigrid
