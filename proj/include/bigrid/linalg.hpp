#pragma once

#include "bigrid/linalg_types.hpp"

#include <memory>
#include <mutex>

namespace bigrid {

enum class SolverMethod {
  direct_lu,       ///< sparse LU, any nonsingular matrix
  direct_ldlt,     ///< sparse LDL^T, symmetric matrices
  cg_jacobi,       ///< conjugate gradients, diagonal preconditioner (SPD only)
  bicgstab_jacobi, ///< BiCGSTAB, diagonal preconditioner; falls back to LU
};

const char* to_string(SolverMethod m);

/// A reusable solver bound to one matrix.
///
/// Direct methods factor at construction; every solve is a triangular
/// substitution followed by one step of iterative refinement when the
/// residual exceeds rtol. Iterative methods store the matrix and accept an
/// initial guess. A BiCGSTAB solve that stalls is redone with a sparse LU,
/// built on first use and kept.
class Factorization {
public:
  Factorization(const SparseMatrix& a, SolverMethod method, double rtol = 1e-10);
  ~Factorization();
  Factorization(Factorization&&) noexcept;
  Factorization& operator=(Factorization&&) noexcept;

  Vector solve(const Vector& b) const;
  Vector solve(const Vector& b, const Vector& guess) const;

  SolverMethod method() const noexcept { return method_; }
  long rows() const noexcept { return rows_; }
  double rtol() const noexcept { return rtol_; }
  /// Krylov iterations of the last iterative solve (0 for direct methods).
  long last_iterations() const noexcept;
  /// Number of times an iterative solve fell back to LU.
  long fallback_count() const noexcept;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  SolverMethod method_;
  long rows_ = 0;
  double rtol_;
};

/// Throws SingularMatrix for a structurally empty row or a zero pivot.
Factorization factorize(const SparseMatrix& a, SolverMethod method, double rtol = 1e-10);

/// Outcome of a pure-Neumann Poisson solve.
struct NeumannSolution {
  Vector p;
  /// |sum_i d_i| before any correction.
  double compatibility_defect = 0.0;
  /// True when the defect exceeded 1e-8 ||d|| and d was projected.
  bool projected = false;
};

/// Solves K p = d for a stiffness matrix whose kernel is the constants.
///
/// Dof 0 is grounded (its row and column replaced by identity), the grounded
/// matrix is factored once, and each solution is shifted so that its mean
/// with respect to `dof_integrals` (the integrals of the basis functions)
/// vanishes.
class NeumannPoisson {
public:
  NeumannPoisson(const SparseMatrix& k, Vector dof_integrals, SolverMethod method = SolverMethod::direct_ldlt);

  NeumannSolution solve(const Vector& d) const;
  const Factorization& factorization() const noexcept { return grounded_; }

private:
  Factorization grounded_;
  Vector integrals_;
};

/// One-shot form of NeumannPoisson::solve. Throws NumericalError on
/// non-finite input.
NeumannSolution solve_neumann_poisson(const SparseMatrix& k, const Vector& d, const Vector& dof_integrals);

} // namespace bigrid
