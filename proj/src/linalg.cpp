#include "bigrid/linalg.hpp"

#include "bigrid/errors.hpp"
#include "bigrid/fem.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <sstream>
#include <string>
#include <variant>

namespace bigrid {

namespace {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using LU = Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>>;
using LDLT = Eigen::SimplicialLDLT<ColMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;
using CG = Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>>;
using BiCG = Eigen::BiCGSTAB<SparseMatrix, Eigen::DiagonalPreconditioner<double>>;

void check_structure(const SparseMatrix& a) {
  if (a.rows() != a.cols()) throw InvalidParameter("factorize: matrix must be square");
  for (int r = 0; r < a.outerSize(); ++r) {
    bool any = false;
    for (SparseMatrix::InnerIterator it(a, r); it; ++it) {
      if (!std::isfinite(it.value())) throw NumericalError("factorize: non-finite entry in row " + std::to_string(r));
      if (it.value() != 0.0) any = true;
    }
    if (!any) throw SingularMatrix("factorize: row " + std::to_string(r) + " is identically zero", r);
  }
}

long trailing_index(const std::string& msg) {
  std::size_t end = msg.find_last_of("0123456789");
  if (end == std::string::npos) return -1;
  std::size_t begin = msg.find_last_not_of("0123456789", end);
  begin = (begin == std::string::npos) ? 0 : begin + 1;
  return std::stol(msg.substr(begin, end - begin + 1));
}

std::unique_ptr<LU> make_lu(const ColMatrix& a) {
  auto lu = std::make_unique<LU>();
  lu->analyzePattern(a);
  lu->factorize(a);
  if (lu->info() != Eigen::Success) {
    const std::string msg = lu->lastErrorMessage();
    throw SingularMatrix("sparse LU failed: " + msg, trailing_index(msg));
  }
  return lu;
}

void require_finite(const Vector& b, const char* who) {
  if (!b.allFinite()) throw NumericalError(std::string(who) + ": non-finite right-hand side");
}

} // namespace

const char* to_string(SolverMethod m) {
  switch (m) {
  case SolverMethod::direct_lu: return "direct-lu";
  case SolverMethod::direct_ldlt: return "direct-ldlt";
  case SolverMethod::cg_jacobi: return "cg-jacobi";
  case SolverMethod::bicgstab_jacobi: return "bicgstab-jacobi";
  }
  return "unknown";
}

struct Factorization::Impl {
  SparseMatrix a;
  std::variant<std::monostate, std::unique_ptr<LU>, std::unique_ptr<LDLT>, std::unique_ptr<CG>, std::unique_ptr<BiCG>>
      solver;
  mutable std::mutex fallback_mutex;
  mutable std::unique_ptr<LU> fallback;
  mutable long fallbacks = 0;
  mutable long last_iterations = 0;
};

Factorization::Factorization(const SparseMatrix& a, SolverMethod method, double rtol)
    : impl_(std::make_unique<Impl>()), method_(method), rows_(a.rows()), rtol_(rtol) {
  check_structure(a);
  impl_->a = a;
  switch (method) {
  case SolverMethod::direct_lu: {
    impl_->solver = make_lu(ColMatrix(a));
    break;
  }
  case SolverMethod::direct_ldlt: {
    auto f = std::make_unique<LDLT>();
    f->compute(ColMatrix(a));
    if (f->info() != Eigen::Success) throw SingularMatrix("sparse LDLT failed", -1);
    const Vector& d = f->vectorD();
    for (Eigen::Index k = 0; k < d.size(); ++k) {
      if (d[k] == 0.0 || !std::isfinite(d[k])) {
        const long row = f->permutationPinv().indices()[k];
        throw SingularMatrix("sparse LDLT: zero pivot at row " + std::to_string(row), row);
      }
    }
    impl_->solver = std::move(f);
    break;
  }
  case SolverMethod::cg_jacobi: {
    auto s = std::make_unique<CG>();
    s->setTolerance(rtol);
    s->setMaxIterations(std::max<long>(1000, 4 * a.rows()));
    s->compute(impl_->a);
    impl_->solver = std::move(s);
    break;
  }
  case SolverMethod::bicgstab_jacobi: {
    auto s = std::make_unique<BiCG>();
    s->setTolerance(rtol);
    s->setMaxIterations(500);
    s->compute(impl_->a);
    impl_->solver = std::move(s);
    break;
  }
  }
}

Factorization::~Factorization() = default;
Factorization::Factorization(Factorization&&) noexcept = default;
Factorization& Factorization::operator=(Factorization&&) noexcept = default;

long Factorization::last_iterations() const noexcept { return impl_->last_iterations; }
long Factorization::fallback_count() const noexcept { return impl_->fallbacks; }

Vector Factorization::solve(const Vector& b) const { return solve(b, Vector::Zero(b.size())); }

Vector Factorization::solve(const Vector& b, const Vector& guess) const {
  if (b.size() != rows_) throw InvalidParameter("Factorization::solve: length mismatch");
  require_finite(b, "Factorization::solve");
  const double bnorm = b.norm();
  if (bnorm == 0.0) return Vector::Zero(rows_);

  auto refine = [&](auto& direct, Vector x) {
    Vector r = b - impl_->a * x;
    if (r.norm() > rtol_ * bnorm) x += direct.solve(r);
    return x;
  };

  Vector x;
  switch (method_) {
  case SolverMethod::direct_lu: {
    auto& f = *std::get<std::unique_ptr<LU>>(impl_->solver);
    x = refine(f, f.solve(b));
    break;
  }
  case SolverMethod::direct_ldlt: {
    auto& f = *std::get<std::unique_ptr<LDLT>>(impl_->solver);
    x = refine(f, f.solve(b));
    break;
  }
  case SolverMethod::cg_jacobi: {
    auto& s = *std::get<std::unique_ptr<CG>>(impl_->solver);
    x = s.solveWithGuess(b, guess);
    impl_->last_iterations = s.iterations();
    if (s.info() != Eigen::Success) throw NumericalError("conjugate gradients did not converge");
    break;
  }
  case SolverMethod::bicgstab_jacobi: {
    auto& s = *std::get<std::unique_ptr<BiCG>>(impl_->solver);
    x = s.solveWithGuess(b, guess);
    impl_->last_iterations = s.iterations();
    if (s.info() != Eigen::Success || (impl_->a * x - b).norm() > 10.0 * rtol_ * bnorm) {
      std::lock_guard lock(impl_->fallback_mutex);
      if (!impl_->fallback) impl_->fallback = make_lu(ColMatrix(impl_->a));
      ++impl_->fallbacks;
      x = refine(*impl_->fallback, impl_->fallback->solve(b));
    }
    break;
  }
  }
  if (!x.allFinite()) throw NumericalError("Factorization::solve produced non-finite values");
  return x;
}

Factorization factorize(const SparseMatrix& a, SolverMethod method, double rtol) {
  return Factorization(a, method, rtol);
}

namespace {

SparseMatrix ground_first_dof(const SparseMatrix& k) {
  DirichletSystem sys(k, {0});
  return sys.matrix();
}

} // namespace

NeumannPoisson::NeumannPoisson(const SparseMatrix& k, Vector dof_integrals, SolverMethod method)
    : grounded_(ground_first_dof(k), method, 1e-12), integrals_(std::move(dof_integrals)) {
  if (integrals_.size() != k.rows()) throw InvalidParameter("NeumannPoisson: integrals length mismatch");
}

NeumannSolution NeumannPoisson::solve(const Vector& d) const {
  if (d.size() != grounded_.rows()) throw InvalidParameter("NeumannPoisson::solve: length mismatch");
  require_finite(d, "solve_neumann_poisson");
  NeumannSolution out;
  out.compatibility_defect = std::abs(d.sum());
  Vector rhs = d;
  if (out.compatibility_defect > 1e-8 * d.norm()) {
    rhs.array() -= d.mean();
    out.projected = true;
  }
  rhs[0] = 0.0;
  out.p = grounded_.solve(rhs);
  zero_mean_inplace(out.p, integrals_);
  return out;
}

NeumannSolution solve_neumann_poisson(const SparseMatrix& k, const Vector& d, const Vector& dof_integrals) {
  return NeumannPoisson(k, dof_integrals).solve(d);
}

} // namespace bigrid
