#include <hpdg/benchmark.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <hpdg/quadrature.hpp>
#include <hpdg/vtk.hpp>

namespace hpdg {

// ---------------------------------------------------------------------------
// exact solution
// ---------------------------------------------------------------------------

namespace {

// angle measured counterclockwise from the positive x-axis, in [0, 2 pi);
// on the L-shaped domain this lands in [0, 3 pi / 2] so that u vanishes on
// both legs of the reentrant corner
double cornerAngle(Vec2 p)
{
  double phi = std::atan2(p.y, p.x);
  if (phi < 0.0)
    phi += 2.0 * M_PI;
  return phi;
}

} // namespace

double reentrantExactSolution(Vec2 p)
{
  const double r = p.norm();
  if (r == 0.0)
    return 0.0;
  return std::pow(r, 2.0 / 3.0) * std::sin(2.0 * cornerAngle(p) / 3.0);
}

Vec2 reentrantExactGradient(Vec2 p)
{
  const double r = p.norm();
  if (r == 0.0)
    throw std::domain_error("exact gradient is singular at the reentrant corner");
  const double phi = cornerAngle(p);
  const double a = 2.0 * phi / 3.0;
  const double s = (2.0 / 3.0) * std::pow(r, -1.0 / 3.0);
  const Vec2 er{std::cos(phi), std::sin(phi)};
  const Vec2 ephi{-std::sin(phi), std::cos(phi)};
  return s * (std::sin(a) * er + std::cos(a) * ephi);
}

// ---------------------------------------------------------------------------
// macro grids
// ---------------------------------------------------------------------------

std::string lshapeMacroText(CellType cellType)
{
  // three retained quadrants of (-1,1)^2, each split into 4x4 cells
  std::vector<Vec2> vertices;
  auto vertexIndex = [&](double x, double y) {
    for (std::size_t i = 0; i < vertices.size(); ++i)
      if (vertices[i].x == x && vertices[i].y == y)
        return static_cast<int>(i);
    vertices.push_back({x, y});
    return static_cast<int>(vertices.size() - 1);
  };

  struct QuadCell
  {
    int ll, lr, ur, ul;
    Vec2 corner[4];
  };
  std::vector<QuadCell> quads;
  const double h = 0.25;
  for (int j = 0; j < 8; ++j)
    for (int i = 0; i < 8; ++i) {
      const double x0 = -1.0 + i * h;
      const double y0 = -1.0 + j * h;
      const double cx = x0 + 0.5 * h, cy = y0 + 0.5 * h;
      if (cx > 0.0 && cy < 0.0)
        continue; // removed quadrant
      QuadCell cell;
      cell.corner[0] = {x0, y0};
      cell.corner[1] = {x0 + h, y0};
      cell.corner[2] = {x0 + h, y0 + h};
      cell.corner[3] = {x0, y0 + h};
      cell.ll = vertexIndex(x0, y0);
      cell.lr = vertexIndex(x0 + h, y0);
      cell.ur = vertexIndex(x0 + h, y0 + h);
      cell.ul = vertexIndex(x0, y0 + h);
      quads.push_back(cell);
    }

  std::ostringstream out;
  out << "# L-shaped domain (-1,1)^2 minus the quadrant x>0, y<0\n";
  out << "DIM 2\n";
  out << "CELLTYPE " << (cellType == CellType::Quad ? "quad" : "triangle") << "\n";
  char buffer[80];
  for (const Vec2 &v : vertices) {
    std::snprintf(buffer, sizeof(buffer), "VERTEX %.10g %.10g\n", v.x, v.y);
    out << buffer;
  }
  for (const QuadCell &cell : quads) {
    if (cellType == CellType::Quad) {
      out << "CELL " << cell.ll << " " << cell.lr << " " << cell.ur << " " << cell.ul << "\n";
    }
    else {
      // split along the diagonal through the corner nearest the origin
      int nearest = 0;
      for (int c = 1; c < 4; ++c)
        if (cell.corner[c].norm2() < cell.corner[nearest].norm2())
          nearest = c;
      if (nearest == 0 || nearest == 2) {
        out << "CELL " << cell.ll << " " << cell.lr << " " << cell.ur << "\n";
        out << "CELL " << cell.ll << " " << cell.ur << " " << cell.ul << "\n";
      }
      else {
        out << "CELL " << cell.ll << " " << cell.lr << " " << cell.ul << "\n";
        out << "CELL " << cell.lr << " " << cell.ur << " " << cell.ul << "\n";
      }
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// records and formatting
// ---------------------------------------------------------------------------

void computeEoc(std::vector<IterationRecord> &records)
{
  for (std::size_t i = 1; i < records.size(); ++i) {
    const IterationRecord &prev = records[i - 1];
    IterationRecord &cur = records[i];
    if (cur.dofs == prev.dofs)
      throw std::invalid_argument("EOC undefined: equal DOF counts in consecutive iterations");
    const double denom = 0.5 * std::log(double(prev.dofs) / double(cur.dofs));
    cur.l2Eoc = -std::log(prev.l2Error / cur.l2Error) / denom;
    cur.dgEoc = -std::log(prev.dgError / cur.dgError) / denom;
  }
}

namespace {

std::string formatField(const char *format, double value)
{
  char buffer[48];
  std::snprintf(buffer, sizeof(buffer), format, value);
  return buffer;
}

std::array<std::string, 8> rowFields(const IterationRecord &r)
{
  return {std::to_string(r.elements),
          std::to_string(r.dofs),
          formatField("%.6e", r.l2Error),
          r.l2Eoc ? formatField("%.2f", *r.l2Eoc) : std::string("---"),
          formatField("%.6e", r.dgError),
          r.dgEoc ? formatField("%.2f", *r.dgEoc) : std::string("---"),
          formatField("%.6e", r.eta),
          formatField("%.2f", r.effIndex)};
}

const std::array<std::string, 8> columnNames = {"elements", "dofs",    "l2_error", "l2_eoc",
                                                "dg_error", "dg_eoc",  "eta",      "eff_index"};

} // namespace

std::string formatTable(const std::vector<IterationRecord> &records)
{
  std::array<std::size_t, 8> width;
  for (std::size_t c = 0; c < 8; ++c)
    width[c] = columnNames[c].size();
  std::vector<std::array<std::string, 8>> rows;
  for (const IterationRecord &r : records) {
    rows.push_back(rowFields(r));
    for (std::size_t c = 0; c < 8; ++c)
      width[c] = std::max(width[c], rows.back()[c].size());
  }

  std::ostringstream out;
  for (std::size_t c = 0; c < 8; ++c)
    out << (c ? "  " : "") << std::string(width[c] - columnNames[c].size(), ' ') << columnNames[c];
  out << "\n";
  for (const auto &fields : rows) {
    for (std::size_t c = 0; c < 8; ++c)
      out << (c ? "  " : "") << std::string(width[c] - fields[c].size(), ' ') << fields[c];
    out << "\n";
  }
  return out.str();
}

std::string formatCsv(const std::vector<IterationRecord> &records)
{
  std::ostringstream out;
  out << "elements,dofs,l2_error,l2_eoc,dg_error,dg_eoc,eta,eff_index\n";
  for (const IterationRecord &r : records) {
    const auto fields = rowFields(r);
    for (std::size_t c = 0; c < 8; ++c)
      out << (c ? "," : "") << fields[c];
    out << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// driver
// ---------------------------------------------------------------------------

namespace {

std::vector<double> cellMeans(const DiscreteFunctionSpace &space, const DiscreteFunction &uh)
{
  std::vector<double> means;
  for (const Element &e : space.mesh().leafElements()) {
    const BasisFunctionSet set = space.basisFunctionSet(e);
    const int order = std::min(maxQuadratureOrder, set.key().maxDegree() + 1);
    const QuadratureRule &rule =
        e.cellType == CellType::Quad ? tensorSquare(order) : triangleRule(order);
    std::vector<double> values(set.size()), local(set.size());
    uh.localDofs(e.id, local);
    double integral = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      set.evaluateAll(rule.points[q], values);
      double u = 0.0;
      for (std::size_t i = 0; i < local.size(); ++i)
        u += local[i] * values[i];
      integral += rule.weights[q] * u;
    }
    means.push_back(integral * e.map.jacobianDeterminant() / e.area);
  }
  return means;
}

} // namespace

std::vector<IterationRecord> runBenchmark(const BenchmarkConfig &config)
{
  if (!(config.tol > 0.0))
    throw std::invalid_argument("benchmark: TOL must be positive");
  if (config.kMin < 1 || config.kMin > config.kMax)
    throw std::invalid_argument("benchmark: require 1 <= kmin <= kmax");

  std::string macroText;
  if (!config.macroFile.empty()) {
    std::ifstream in(config.macroFile);
    if (!in)
      throw std::runtime_error("cannot read macro grid file '" + config.macroFile + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    macroText = buf.str();
  }
  else {
    macroText = lshapeMacroText(config.grid);
  }

  const MacroGrid macro = loadMacroGrid(macroText);
  HierarchicalMesh mesh(macro);
  DiscreteFunctionSpace space(mesh, basisFamily(BasisFamilyKind::Orthonormal), Key::iso(config.kMin));
  DiscreteFunction uh(space);

  ProblemData data;
  data.source = [](Vec2) { return 0.0; }; // the exact solution is harmonic
  data.boundaryValues = reentrantExactSolution;
  data.exactSolution = reentrantExactSolution;
  data.exactGradient = reentrantExactGradient;
  data.gamma = config.gamma;

  ErrorIntegrationOptions errorOptions;
  errorOptions.singularPoint = Vec2{0.0, 0.0};

  const bool writeFiles = !config.outputDir.empty();
  if (writeFiles)
    std::filesystem::create_directories(config.outputDir);

  std::vector<IterationRecord> records;
  space.clearTransactionLog();

  for (int m = 0; m < config.maxIterations; ++m) {
    LinearSystem system = assemble(space, data);
    const BlockJacobiPreconditioner preconditioner(system.matrix, space);
    const SolveResult solve =
        solveCg(system.matrix, system.rhs, uh.dofs(), preconditioner, config.solverTol, 100000);
    if (!solve.converged)
      throw std::runtime_error("benchmark iteration " + std::to_string(m) +
                               ": CG did not converge (residual " + std::to_string(solve.residual) + ")");

    const EstimatorResult estimator = estimate(space, uh, data);
    const ErrorNorms norms = errorNorms(space, uh, data, errorOptions);

    IterationRecord record;
    record.elements = mesh.leafCount();
    record.dofs = space.size();
    record.l2Error = norms.l2;
    record.dgError = norms.dg;
    record.eta = estimator.globalEta;
    record.effIndex = estimator.globalEta / norms.dg;
    for (const auto &t : space.transactionLog())
      if (t.intermediateSize > t.oldSize + t.newSize)
        record.storageBoundOk = false;
    space.clearTransactionLog();
    records.push_back(record);

    if (config.log)
      (*config.log) << "iteration " << m << ": " << record.elements << " elements, " << record.dofs
                    << " DOFs, eta " << formatField("%.4e", record.eta) << ", CG iterations "
                    << solve.iterations << "\n";

    if (writeFiles) {
      std::vector<double> degrees, etas;
      for (const Element &e : mesh.leafElements()) {
        degrees.push_back(space.key(e.id).maxDegree());
        etas.push_back(estimator.local.at(e.id).total());
      }
      writeLegacyVtk(config.outputDir + "/mesh_" + std::to_string(m) + ".vtk", mesh,
                     {{"degree", degrees}, {"eta", etas}, {"u_mean", cellMeans(space, uh)}});
    }

    if (estimator.globalEta <= config.tol || m + 1 == config.maxIterations)
      break;

    MarkingParameters marking;
    marking.tol = config.tol;
    marking.kMin = config.kMin;
    marking.kMax = config.kMax;
    marking.etaCoarsen = config.etaStar;
    marking.etaRefine = config.etaUpper;
    const HpMarks marks = markHp(space, estimator, uh, marking);
    if (!marks.any())
      break;
    hpAdaptCycle(space, uh, marks);
  }

  computeEoc(records);

  if (writeFiles) {
    std::ofstream csv(config.outputDir + "/table.csv");
    csv << formatCsv(records);
  }
  return records;
}

} // namespace hpdg
