#include "bigrid/errors.hpp"
#include "bigrid/scalar_bigrid.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace bigrid;

namespace {

RdConfig rd(double dt, double tau, double T, RdConfig::Nonlinearity f,
            RdConfig::Boundary b = RdConfig::Boundary::dirichlet_zero) {
  RdConfig c;
  c.dt = dt;
  c.tau = tau;
  c.T = T;
  c.f = f;
  c.boundary = b;
  return c;
}

double bump(double x, double y) {
  const double pi = std::numbers::pi;
  return 0.1 * std::sin(pi * x) * std::sin(pi * y);
}

double l2(const SparseMatrix& m, const Vector& v) { return std::sqrt(v.dot(m * v)); }

} // namespace

TEST(Reaction, Nonlinearity) {
  using N = RdConfig::Nonlinearity;
  EXPECT_EQ(rd_f(N::cubic, 1.0), 0.0);
  EXPECT_EQ(rd_f(N::cubic, -1.0), 0.0);
  EXPECT_EQ(rd_f(N::cubic, 2.0), 6.0);
  EXPECT_EQ(rd_df(N::cubic, 0.0), -1.0);
  EXPECT_EQ(rd_f(N::zero, 3.0), 0.0);
  EXPECT_EQ(rd_df(N::zero, 3.0), 0.0);
}

TEST(Reaction, NonlinearLoadAndJacobian) {
  const auto s = std::make_shared<const FeSpace>(std::make_shared<const TriMesh>(build_uniform_mesh(6)), ElementKind::P2);
  const Vector c = s->interpolate([](double x, double y) { return x + y; });
  // (u^2, 1) for u = x + y is 7/6, exact under the degree four rule.
  EXPECT_NEAR(assemble_nonlinear_load(*s, c, [](double u) { return u * u; }).sum(), 7.0 / 6.0, 1e-13);
  const SparseMatrix one = assemble_weighted_mass(*s, c, [](double) { return 1.0; });
  EXPECT_LT((one - assemble_mass(*s)).norm(), 1e-14);
  // Finite-difference check of the Jacobian of the cubic load.
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  Vector v(s->dof_count()), dir(s->dof_count());
  for (auto& x : v) x = u(rng);
  for (auto& x : dir) x = u(rng);
  auto f = [](double z) { return rd_f(RdConfig::Nonlinearity::cubic, z); };
  const double h = 1e-6;
  const Vector fd = (assemble_nonlinear_load(*s, v + h * dir, f) - assemble_nonlinear_load(*s, v - h * dir, f)) / (2 * h);
  const Vector jv = assemble_weighted_mass(*s, v, [](double z) { return rd_df(RdConfig::Nonlinearity::cubic, z); }) * dir;
  EXPECT_LT((fd - jv).norm(), 1e-7 * jv.norm());
}

TEST(Reaction, ConfigValidation) {
  EXPECT_THROW(rd(0.0, 0, 1, RdConfig::Nonlinearity::cubic).validate(), InvalidParameter);
  EXPECT_THROW(rd(0.1, -1, 1, RdConfig::Nonlinearity::cubic).validate(), InvalidParameter);
  EXPECT_THROW(RdSolver(rd(0.1, 0, 1, RdConfig::Nonlinearity::cubic), 4, 6, bump), InvalidParameter);
}

TEST(Reaction, HeatEquationDissipates) {
  for (bool stabilized : {false, true}) {
    RdSolver s(rd(0.01, 5.0, 0.2, RdConfig::Nonlinearity::zero), 4, 8, bump);
    double last = l2(s.fine_mass(), s.state().uh);
    for (int k = 0; k < 20; ++k) {
      const RdStepReport r = stabilized ? rd_step_bigrid_stabilized(s) : rd_step_bigrid_plain(s);
      EXPECT_LE(r.l2_fine, last * (1 + 1e-12));
      last = r.l2_fine;
    }
  }
}

TEST(Reaction, EquilibriaAreExact) {
  for (double v : {1.0, -1.0})
    for (bool stabilized : {false, true}) {
      RdSolver s(rd(0.05, 3.0, 1, RdConfig::Nonlinearity::cubic, RdConfig::Boundary::neumann), 4, 8,
                 [v](double, double) { return v; });
      for (int k = 0; k < 5; ++k) stabilized ? s.step_stabilized() : s.step_plain();
      EXPECT_LT((s.state().uh.array() - v).abs().maxCoeff(), 1e-12);
      EXPECT_LT((s.state().uH.array() - v).abs().maxCoeff(), 1e-12);
    }
}

TEST(Reaction, PlainSchemeTracksImplicitFineSolution) {
  // Subcritical data decays; the bi-grid error against fully implicit fine
  // time stepping is first order in dt.
  auto gap = [](double dt) {
    const double T = 0.4;
    RdSolver a(rd(dt, 0, T, RdConfig::Nonlinearity::cubic), 8, 16, bump);
    RdSolver b(rd(dt, 0, T, RdConfig::Nonlinearity::cubic), 8, 16, bump);
    const long n = a.config().step_count();
    for (long k = 0; k < n; ++k) {
      a.step_plain();
      b.step_implicit_fine();
    }
    EXPECT_LT(l2(a.fine_mass(), a.state().uh), 0.1 * l2(a.fine_mass(), RdSolver(a.config(), 8, 16, bump).state().uh));
    return l2(a.fine_mass(), a.state().uh - b.state().uh);
  };
  const double g1 = gap(0.02), g2 = gap(0.01);
  EXPECT_GT(g1 / g2, 1.6);
}

TEST(Reaction, ZeroTauStabilizedIsSemiImplicit) {
  // Oracle: (M/dt + K) u' = M u/dt - F(u) with the fine operator alone.
  RdSolver s(rd(0.02, 0.0, 1, RdConfig::Nonlinearity::cubic), 4, 8, bump);
  const auto& fs = s.transfer().fine_space();
  const SparseMatrix M = assemble_mass(fs);
  const DirichletSystem sys(SparseMatrix((1 / 0.02) * M + assemble_stiffness(fs)), fs.boundary_dofs());
  const Factorization f(sys.matrix(), SolverMethod::direct_lu);
  Vector u = s.state().uh;
  for (int k = 0; k < 5; ++k) {
    const Vector b = (1 / 0.02) * (M * u) -
                     assemble_nonlinear_load(fs, u, [](double z) { return rd_f(RdConfig::Nonlinearity::cubic, z); });
    u = f.solve(sys.rhs(b, zero_boundary_data(fs)));
    s.step_stabilized();
    EXPECT_LT((s.state().uh - u).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Reaction, FixedPointIsTauIndependent) {
  // At a joint fixed point both increments vanish; the stabilization
  // contributes nothing for any tau.
  for (double tau : {0.0, 1.0, 50.0}) {
    RdSolver s(rd(0.1, tau, 1, RdConfig::Nonlinearity::cubic), 4, 8, [](double, double) { return 0.0; });
    s.step_stabilized();
    EXPECT_LE(s.state().uh.cwiseAbs().maxCoeff(), 1e-12);
  }
  for (double tau : {0.0, 2.0, 40.0}) {
    RdSolver s(rd(0.1, tau, 1, RdConfig::Nonlinearity::cubic, RdConfig::Boundary::neumann), 4, 8,
               [](double, double) { return -1.0; });
    s.step_stabilized();
    EXPECT_LE((s.state().uh.array() + 1.0).abs().maxCoeff(), 1e-12);
  }
}

TEST(Reaction, StabilizedEnergyNonincreasingWithFrozenCoarse) {
  // f = 0 and a zero coarse state keep the coarse increment at zero; every
  // fine step is then an L2 contraction whatever tau is.
  for (double tau : {0.0, 1.0, 100.0}) {
    RdSolver s(rd(0.5, tau, 1, RdConfig::Nonlinearity::zero), 4, 8, bump);
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> u(-1, 1);
    RdState st = s.state();
    for (auto& x : st.uh) x = u(rng);
    impose(st.uh, zero_boundary_data(s.transfer().fine_space()));
    st.uH.setZero();
    s.set_state(st);
    double last = l2(s.fine_mass(), s.state().uh);
    for (int k = 0; k < 10; ++k) {
      const RdStepReport r = s.step_stabilized();
      EXPECT_EQ(s.state().uH.cwiseAbs().maxCoeff(), 0.0);
      EXPECT_LE(r.l2_fine, last * (1 + 1e-13));
      last = r.l2_fine;
    }
  }
}

TEST(Reaction, StabilizedFactorsOnce) {
  RdSolver s(rd(0.05, 2.0, 1, RdConfig::Nonlinearity::cubic), 4, 8, bump);
  for (int k = 0; k < 8; ++k) s.step_stabilized();
  EXPECT_EQ(s.fine_factorizations(), 1);
}

TEST(Reaction, StabilizationExtendsStableStep) {
  // Large data with an explicit cubic: the unstabilized fine step blows up
  // where tau = 10 stays bounded.
  auto stable = [](double dt, double tau) {
    RdConfig c = rd(dt, tau, 2.0, RdConfig::Nonlinearity::cubic);
    RdSolver s(c, 4, 8, [](double x, double y) { return 10.0 * std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y); });
    for (long k = 0; k < c.step_count(); ++k)
      if (!s.step_stabilized().stable) return false;
    return true;
  };
  EXPECT_TRUE(stable(0.02, 0.0));
  EXPECT_FALSE(stable(0.05, 0.0));
  EXPECT_TRUE(stable(0.05, 10.0));
}
