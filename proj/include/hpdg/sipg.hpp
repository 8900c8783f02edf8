#ifndef HPDG_SIPG_HPP
#define HPDG_SIPG_HPP

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <hpdg/space.hpp>

namespace hpdg {

// Compressed row storage, square, structurally symmetric.
class SparseMatrix
{
public:
  SparseMatrix() = default;
  // rows i holds the sorted unique column indices columns[i]
  SparseMatrix(int n, const std::vector<std::vector<int>> &columns);

  int rows() const { return n_; }
  std::span<const int> rowColumns(int row) const;
  std::span<const double> rowValues(int row) const;

  double &entry(int row, int col); // must exist in the sparsity pattern
  double value(int row, int col) const;

  void multiply(std::span<const double> x, std::span<double> y) const;

private:
  int n_ = 0;
  std::vector<int> rowOffsets_;
  std::vector<int> cols_;
  std::vector<double> vals_;
};

struct ProblemData
{
  std::function<double(Vec2)> source;            // f
  std::function<double(Vec2)> boundaryValues;    // g
  std::function<double(Vec2)> exactSolution;     // optional, for error norms
  std::function<Vec2(Vec2)> exactGradient;       // optional
  double gamma = 10.0;                           // penalty constant
};

// sigma_e = gamma (k_E^2 + k_E'^2) / (2 h_e) on interior facets and
// gamma k_E^2 / h_e on boundary facets
double penalty(double facetLength, int insideDegree, std::optional<int> outsideDegree, double gamma);

struct LinearSystem
{
  SparseMatrix matrix;
  std::vector<double> rhs;
};

// Assembles the symmetric interior penalty discretization of -Laplace u = f
// with Dirichlet data g. Every local degree must be >= 1. Each interior facet
// is integrated once, on the finer side's segment, and scattered to all four
// element blocks.
LinearSystem assemble(const DiscreteFunctionSpace &space, const ProblemData &data);

// Per-element-block diagonal inverse of a matrix in the space's block layout.
class BlockJacobiPreconditioner
{
public:
  BlockJacobiPreconditioner(const SparseMatrix &matrix, const DiscreteFunctionSpace &space);
  void apply(std::span<const double> r, std::span<double> z) const;

private:
  struct Block
  {
    std::vector<int> dofs;
    std::vector<double> choleskyLower; // row-major lower factor
  };
  std::vector<Block> blocks_;
};

struct SolveResult
{
  int iterations = 0;
  double residual = 0.0; // relative
  bool converged = false;
};

// Preconditioned conjugate gradients; x is the initial guess and receives the
// solution. Throws on detected negative curvature (gamma too small).
SolveResult solveCg(const SparseMatrix &matrix, std::span<const double> b, std::span<double> x,
                    const BlockJacobiPreconditioner &preconditioner, double tolerance, int maxIterations);

// options for integrating errors against a (possibly corner-singular) exact solution
struct ErrorIntegrationOptions
{
  std::optional<Vec2> singularPoint;
  int subdivisionLevels = 3; // dyadic integration-only refinement of elements touching the point
  int extraOrder = 4;        // quadrature order 2k + extraOrder
};

struct ErrorNorms
{
  double l2 = 0.0;
  double dg = 0.0;
};

// ||u - u_h||_L2 and the energy norm ||u - u_h||_DG; interior jump terms use
// u_h's jumps (the exact solution is continuous), boundary terms use u_h - g.
ErrorNorms errorNorms(const DiscreteFunctionSpace &space, const DiscreteFunction &uh,
                      const ProblemData &data, const ErrorIntegrationOptions &options = {});

// energy norm of a discrete function itself (boundary term with the function's
// own trace)
double dgNorm(const DiscreteFunctionSpace &space, const DiscreteFunction &v, double gamma);

} // namespace hpdg

#endif // HPDG_SIPG_HPP
