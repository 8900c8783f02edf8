#ifndef HPDG_BENCHMARK_HPP
#define HPDG_BENCHMARK_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <hpdg/adapt.hpp>

namespace hpdg {

// Reentrant-corner benchmark: -Laplace u = 0 on the L-shaped domain
// (-1,1)^2 minus the closed quadrant [0,1] x [-1,0], with u = g on the
// boundary chosen so that u(x,y) = r^(2/3) sin(2 phi / 3).
double reentrantExactSolution(Vec2 p);
Vec2 reentrantExactGradient(Vec2 p); // singular at the origin

// built-in macro grids: 3 quadrants x 4x4 quads (48 cells), or each quad split
// along the diagonal toward the reentrant corner (96 triangles)
std::string lshapeMacroText(CellType cellType);

struct BenchmarkConfig
{
  CellType grid = CellType::Quad;
  double tol = 8.0e-3;
  double gamma = 10.0;
  int kMin = 3;
  int kMax = 8;
  int maxIterations = 9;
  double solverTol = 1e-10;
  std::string outputDir;      // empty: no VTK/CSV files
  std::string macroFile;      // optional macro-grid override
  std::optional<double> etaStar;  // eta_* override
  std::optional<double> etaUpper; // eta^* override
  std::ostream *log = nullptr;    // per-iteration progress
};

struct IterationRecord
{
  int elements = 0;
  int dofs = 0;
  double l2Error = 0.0;
  double dgError = 0.0;
  double eta = 0.0;
  double effIndex = 0.0;
  std::optional<double> l2Eoc; // empty on the first row
  std::optional<double> dgEoc;
  bool storageBoundOk = true; // peak transient index space <= |D^m| + |D^m+1|
};

// EOC = -log(e^(m)/e^(m+1)) / log((N^(m)/N^(m+1))^(1/2)); requires strictly
// changing DOF counts between consecutive records.
void computeEoc(std::vector<IterationRecord> &records);

// solve -> estimate -> (stop if eta <= TOL or the iteration cap) -> mark ->
// adapt; writes mesh_<iter>.vtk and table.csv into outputDir when set.
std::vector<IterationRecord> runBenchmark(const BenchmarkConfig &config);

std::string formatTable(const std::vector<IterationRecord> &records);
std::string formatCsv(const std::vector<IterationRecord> &records);

} // namespace hpdg

#endif // HPDG_BENCHMARK_HPP
