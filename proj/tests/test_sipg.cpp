#include <doctest.h>

#include <cmath>
#include <random>

#include <hpdg/adapt.hpp>
#include <hpdg/sipg.hpp>

#include "test_helpers.hpp"

using namespace hpdg;
using namespace hpdg::testing;

namespace {

ProblemData homogeneousData(double gamma = 10.0)
{
  ProblemData data;
  data.source = [](Vec2) { return 0.0; };
  data.boundaryValues = [](Vec2) { return 0.0; };
  data.gamma = gamma;
  return data;
}

double maxAsymmetry(const SparseMatrix &matrix)
{
  double worst = 0.0;
  for (int row = 0; row < matrix.rows(); ++row) {
    const auto cols = matrix.rowColumns(row);
    const auto vals = matrix.rowValues(row);
    for (std::size_t o = 0; o < cols.size(); ++o)
      worst = std::max(worst, std::abs(vals[o] - matrix.value(cols[o], row)));
  }
  return worst;
}

} // namespace

TEST_SUITE_BEGIN("sipg");

TEST_CASE("penalty values")
{
  CHECK(penalty(0.5, 3, 3, 10.0) == doctest::Approx(180.0));
  CHECK(penalty(0.25, 3, std::nullopt, 10.0) == doctest::Approx(360.0));
  CHECK(penalty(0.5, 3, 3, 20.0) == doctest::Approx(2.0 * penalty(0.5, 3, 3, 10.0)));
  CHECK_THROWS_AS(penalty(0.0, 3, 3, 10.0), std::invalid_argument);
}

TEST_CASE("penalty scaling: doubling all degrees quadruples sigma")
{
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> h(0.01, 2.0);
  std::uniform_int_distribution<int> k(1, 5);
  for (int trial = 0; trial < 50; ++trial) {
    const double length = h(rng);
    const int kIn = k(rng), kOut = k(rng);
    CHECK(penalty(length, 2 * kIn, 2 * kOut, 10.0) ==
          doctest::Approx(4.0 * penalty(length, kIn, kOut, 10.0)));
    CHECK(penalty(length, 2 * kIn, std::nullopt, 10.0) ==
          doctest::Approx(4.0 * penalty(length, kIn, std::nullopt, 10.0)));
  }
}

TEST_CASE("assembled matrix is symmetric and zero data gives a zero rhs")
{
  HierarchicalMesh mesh(loadMacroGrid(squareGridMacro(2)));
  // refine one element so the check covers hanging facets
  AdaptationMarks marks;
  marks[mesh.leafElements()[0].id] = Mark::Refine;
  mesh.adapt(marks);
  DiscreteFunctionSpace space(mesh, basisFamily(BasisFamilyKind::Orthonormal), Key::iso(2));

  const LinearSystem system = assemble(space, homogeneousData());
  CHECK(maxAsymmetry(system.matrix) < 1e-11);
  for (const double v : system.rhs)
    CHECK(v == 0.0);
}

TEST_CASE("one-element manufactured solution: linears are reproduced exactly")
{
  HierarchicalMesh mesh(loadMacroGrid(unitSquareMacro()));
  DiscreteFunctionSpace space(mesh, basisFamily(BasisFamilyKind::Orthonormal), Key::iso(1));
  DiscreteFunction uh(space);

  auto exact = [](Vec2 p) { return 1.0 + 2.0 * p.x - 3.0 * p.y; };
  ProblemData data;
  data.source = [](Vec2) { return 0.0; };
  data.boundaryValues = exact;
  data.exactSolution = exact;
  data.exactGradient = [](Vec2) { return Vec2{2.0, -3.0}; };
  data.gamma = 10.0;

  const LinearSystem system = assemble(space, data);
  const BlockJacobiPreconditioner preconditioner(system.matrix, space);
  const SolveResult result =
      solveCg(system.matrix, system.rhs, uh.dofs(), preconditioner, 1e-12, 1000);
  CHECK(result.converged);

  const ErrorNorms norms = errorNorms(space, uh, data);
  CHECK(norms.l2 < 1e-10);
}

TEST_CASE("conjugate gradients on the identity")
{
  SparseMatrix identity(4, {{0}, {1}, {2}, {3}});
  for (int i = 0; i < 4; ++i)
    identity.entry(i, i) = 1.0;

  HierarchicalMesh mesh(loadMacroGrid(unitSquareMacro()));
  DiscreteFunctionSpace space(mesh, basisFamily(BasisFamilyKind::Orthonormal), Key::iso(1));
  // block preconditioner over a fabricated matrix: use identity blocks via the space
  // (the space has one element with 3 DOFs; build a matching 3x3 identity instead)
  SparseMatrix identity3(3, {{0}, {1}, {2}});
  for (int i = 0; i < 3; ++i)
    identity3.entry(i, i) = 1.0;
  const BlockJacobiPreconditioner preconditioner(identity3, space);

  std::vector<double> b{1.0, -2.0, 3.0};
  std::vector<double> x(3, 0.0);
  const SolveResult result = solveCg(identity3, b, x, preconditioner, 1e-14, 10);
  CHECK(result.converged);
  CHECK(result.iterations == 1);
  for (int i = 0; i < 3; ++i)
    CHECK(x[i] == doctest::Approx(b[i]));

  // warm start with the exact solution converges without iterating
  const SolveResult warm = solveCg(identity3, b, x, preconditioner, 1e-14, 10);
  CHECK(warm.converged);
  CHECK(warm.iterations == 0);
}

TEST_CASE("negative curvature is detected")
{
  HierarchicalMesh mesh(loadMacroGrid(unitSquareMacro()));
  DiscreteFunctionSpace space(mesh, basisFamily(BasisFamilyKind::Orthonormal), Key::iso(1));
  SparseMatrix indefinite(3, {{0}, {1}, {2}});
  indefinite.entry(0, 0) = 1.0;
  indefinite.entry(1, 1) = 1.0;
  indefinite.entry(2, 2) = -1.0;
  std::vector<double> b{0.0, 0.0, 1.0};
  std::vector<double> x(3, 0.0);
  // the preconditioner rejects the indefinite diagonal block already
  CHECK_THROWS_AS(BlockJacobiPreconditioner(indefinite, space), std::runtime_error);

  SparseMatrix spd(3, {{0}, {1}, {2}});
  for (int i = 0; i < 3; ++i)
    spd.entry(i, i) = 1.0;
  const BlockJacobiPreconditioner preconditioner(spd, space);
  CHECK_THROWS_AS(solveCg(indefinite, b, x, preconditioner, 1e-12, 10), std::runtime_error);
}

TEST_CASE("Galerkin residual and coercivity probe on the benchmark mesh")
{
  HierarchicalMesh mesh(loadMacroGrid(squareGridMacro(2)));
  DiscreteFunctionSpace space(mesh, basisFamily(BasisFamilyKind::Orthonormal), Key::iso(3));
  DiscreteFunction uh(space);

  auto exact = [](Vec2 p) { return std::sin(M_PI * p.x) * std::sin(M_PI * p.y); };
  ProblemData data;
  data.source = [](Vec2 p) { return 2.0 * M_PI * M_PI * std::sin(M_PI * p.x) * std::sin(M_PI * p.y); };
  data.boundaryValues = [](Vec2) { return 0.0; };
  data.exactSolution = exact;
  data.exactGradient = [](Vec2 p) {
    return Vec2{M_PI * std::cos(M_PI * p.x) * std::sin(M_PI * p.y),
                M_PI * std::sin(M_PI * p.x) * std::cos(M_PI * p.y)};
  };
  data.gamma = 10.0;

  const LinearSystem system = assemble(space, data);
  const BlockJacobiPreconditioner preconditioner(system.matrix, space);
  const double tol = 1e-10;
  const SolveResult result = solveCg(system.matrix, system.rhs, uh.dofs(), preconditioner, tol, 10000);
  CHECK(result.converged);

  // residual at convergence
  std::vector<double> residual(space.size());
  system.matrix.multiply(uh.dofs(), residual);
  double normB = 0.0, worst = 0.0;
  for (int i = 0; i < space.size(); ++i) {
    normB += system.rhs[i] * system.rhs[i];
    worst = std::max(worst, std::abs(system.rhs[i] - residual[i]));
  }
  CHECK(worst <= 10.0 * tol * std::sqrt(normB));

  // coercivity: y^T A y > 0 for random nonzero y
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> y(space.size()), Ay(space.size());
  for (int trial = 0; trial < 20; ++trial) {
    for (double &v : y)
      v = dist(rng);
    system.matrix.multiply(y, Ay);
    double yAy = 0.0;
    for (int i = 0; i < space.size(); ++i)
      yAy += y[i] * Ay[i];
    CHECK(yAy > 0.0);
  }
}

TEST_CASE("DG norm basics")
{
  HierarchicalMesh mesh(loadMacroGrid(squareGridMacro(2)));
  DiscreteFunctionSpace space(mesh, basisFamily(BasisFamilyKind::Orthonormal), Key::iso(2));
  DiscreteFunction v(space);

  CHECK(dgNorm(space, v, 10.0) == 0.0);

  projectFunction([](Vec2) { return 3.0; }, v);
  // constant: zero gradient and interior jump, positive boundary contribution;
  // each of the 8 boundary facets contributes sigma c^2 h_e = gamma k^2 c^2
  const double norm = dgNorm(space, v, 10.0);
  const double expected = std::sqrt(10.0 * 4.0 * 9.0 * 8);
  CHECK(norm == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("smooth manufactured convergence rates for k = 1, 2, 3")
{
  auto exact = [](Vec2 p) { return std::sin(M_PI * p.x) * std::sin(M_PI * p.y); };
  ProblemData data;
  data.source = [](Vec2 p) { return 2.0 * M_PI * M_PI * std::sin(M_PI * p.x) * std::sin(M_PI * p.y); };
  data.boundaryValues = [](Vec2) { return 0.0; };
  data.exactSolution = exact;
  data.exactGradient = [](Vec2 p) {
    return Vec2{M_PI * std::cos(M_PI * p.x) * std::sin(M_PI * p.y),
                M_PI * std::sin(M_PI * p.x) * std::cos(M_PI * p.y)};
  };
  data.gamma = 10.0;

  for (int k = 1; k <= 3; ++k) {
    double previousL2 = 0.0, previousDg = 0.0, previousH = 0.0;
    double l2Eoc = 0.0, dgEoc = 0.0;
    for (int level = 0; level < 3; ++level) {
      HierarchicalMesh mesh(loadMacroGrid(squareGridMacro(2)));
      AdaptationMarks marks;
      for (int extra = 0; extra < level; ++extra) {
        marks.clear();
        for (const Element &e : mesh.leafElements())
          marks[e.id] = Mark::Refine;
        mesh.adapt(marks);
      }
      DiscreteFunctionSpace space(mesh, basisFamily(BasisFamilyKind::Orthonormal), Key::iso(k));
      DiscreteFunction uh(space);
      const LinearSystem system = assemble(space, data);
      const BlockJacobiPreconditioner preconditioner(system.matrix, space);
      REQUIRE(solveCg(system.matrix, system.rhs, uh.dofs(), preconditioner, 1e-12, 20000).converged);
      const ErrorNorms norms = errorNorms(space, uh, data);

      const double h = mesh.leafElements()[0].diameter;
      if (level > 0) {
        l2Eoc = std::log(previousL2 / norms.l2) / std::log(previousH / h);
        dgEoc = std::log(previousDg / norms.dg) / std::log(previousH / h);
      }
      previousL2 = norms.l2;
      previousDg = norms.dg;
      previousH = h;
    }
    CHECK(l2Eoc > k + 0.8);
    CHECK(l2Eoc < k + 1.3);
    CHECK(dgEoc > k - 0.2);
    CHECK(dgEoc < k + 0.3);
  }
}

TEST_SUITE_END();
