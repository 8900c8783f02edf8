#include <hpdg/sipg.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <hpdg/quadrature.hpp>

namespace hpdg {

// ---------------------------------------------------------------------------
// SparseMatrix
// ---------------------------------------------------------------------------

SparseMatrix::SparseMatrix(int n, const std::vector<std::vector<int>> &columns) : n_(n)
{
  rowOffsets_.resize(n + 1, 0);
  for (int i = 0; i < n; ++i)
    rowOffsets_[i + 1] = rowOffsets_[i] + static_cast<int>(columns[i].size());
  cols_.reserve(rowOffsets_[n]);
  for (int i = 0; i < n; ++i)
    cols_.insert(cols_.end(), columns[i].begin(), columns[i].end());
  vals_.assign(cols_.size(), 0.0);
}

std::span<const int> SparseMatrix::rowColumns(int row) const
{
  return {cols_.data() + rowOffsets_[row], static_cast<std::size_t>(rowOffsets_[row + 1] - rowOffsets_[row])};
}

std::span<const double> SparseMatrix::rowValues(int row) const
{
  return {vals_.data() + rowOffsets_[row], static_cast<std::size_t>(rowOffsets_[row + 1] - rowOffsets_[row])};
}

double &SparseMatrix::entry(int row, int col)
{
  const int begin = rowOffsets_[row], end = rowOffsets_[row + 1];
  const auto it = std::lower_bound(cols_.begin() + begin, cols_.begin() + end, col);
  if (it == cols_.begin() + end || *it != col)
    throw std::logic_error("entry outside sparsity pattern");
  return vals_[it - cols_.begin()];
}

double SparseMatrix::value(int row, int col) const
{
  const int begin = rowOffsets_[row], end = rowOffsets_[row + 1];
  const auto it = std::lower_bound(cols_.begin() + begin, cols_.begin() + end, col);
  return (it == cols_.begin() + end || *it != col) ? 0.0 : vals_[it - cols_.begin()];
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const
{
  for (int i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (int o = rowOffsets_[i]; o < rowOffsets_[i + 1]; ++o)
      acc += vals_[o] * x[cols_[o]];
    y[i] = acc;
  }
}

// ---------------------------------------------------------------------------
// assembly
// ---------------------------------------------------------------------------

double penalty(double facetLength, int insideDegree, std::optional<int> outsideDegree, double gamma)
{
  if (!(facetLength > 0.0))
    throw std::invalid_argument("penalty: facet length must be positive");
  if (outsideDegree)
    return gamma * (insideDegree * insideDegree + *outsideDegree * *outsideDegree) / (2.0 * facetLength);
  return gamma * insideDegree * insideDegree / facetLength;
}

namespace {

struct LocalTraces
{
  std::vector<double> values;
  std::vector<Vec2> refGradients;
  std::vector<Vec2> gradients;

  void compute(const BasisFunctionSet &set, Vec2 ref)
  {
    const int n = set.size();
    values.resize(n);
    refGradients.resize(n);
    gradients.resize(n);
    set.evaluateAll(ref, values);
    set.gradientAll(ref, refGradients);
    for (int i = 0; i < n; ++i)
      gradients[i] = set.physicalGradient(refGradients[i]);
  }
};

int facetQuadratureOrder(int degIn, int degOut)
{
  return std::min(maxQuadratureOrder, 2 * std::max(degIn, degOut) + 2);
}

} // namespace

LinearSystem assemble(const DiscreteFunctionSpace &space, const ProblemData &data)
{
  const HierarchicalMesh &mesh = space.mesh();
  const auto &leaves = mesh.leafElements();
  const int n = space.size();

  // element-block sparsity: diagonal block plus one block per interior neighbor
  std::vector<std::vector<int>> columns(n);
  for (const Element &e : leaves) {
    const auto own = space.dofIndices(e.id);
    std::vector<int> coupled(own.begin(), own.end());
    for (const Intersection &facet : mesh.intersections(e.id))
      if (!facet.boundary()) {
        const auto other = space.dofIndices(*facet.outside);
        coupled.insert(coupled.end(), other.begin(), other.end());
      }
    std::sort(coupled.begin(), coupled.end());
    coupled.erase(std::unique(coupled.begin(), coupled.end()), coupled.end());
    for (const int row : own)
      columns[row] = coupled;
  }

  LinearSystem system;
  system.matrix = SparseMatrix(n, columns);
  system.rhs.assign(n, 0.0);
  SparseMatrix &A = system.matrix;
  std::vector<double> &b = system.rhs;

  LocalTraces inside, outside;
  std::vector<double> block;

  for (const Element &e : leaves) {
    const BasisFunctionSet set = space.basisFunctionSet(e);
    const int nE = set.size();
    const int degE = set.key().maxDegree();
    if (degE < 1)
      throw std::invalid_argument("SIPG requires local degree >= 1");
    const auto idx = space.dofIndices(e.id);
    const double detJ = e.map.jacobianDeterminant();

    // volume terms: grad u . grad psi and the source
    const QuadratureRule &rule = e.cellType == CellType::Quad
                                     ? tensorSquare(std::min(maxQuadratureOrder, 2 * degE + 2))
                                     : triangleRule(std::min(maxQuadratureOrder, 2 * degE + 2));
    block.assign(static_cast<std::size_t>(nE) * nE, 0.0);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      inside.compute(set, rule.points[q]);
      const double w = rule.weights[q] * detJ;
      for (int i = 0; i < nE; ++i) {
        for (int j = 0; j < nE; ++j)
          block[i * nE + j] += w * inside.gradients[i].dot(inside.gradients[j]);
        b[idx[i]] += w * data.source(e.map.apply(rule.points[q])) * inside.values[i];
      }
    }
    for (int i = 0; i < nE; ++i)
      for (int j = 0; j < nE; ++j)
        A.entry(idx[i], idx[j]) += block[i * nE + j];
  }

  // facet terms, each interior facet integrated once from the side that owns it
  std::vector<double> bII, bIO, bOI, bOO;
  for (const Element &e : leaves) {
    const BasisFunctionSet setIn = space.basisFunctionSet(e);
    const int nIn = setIn.size();
    const int degIn = setIn.key().maxDegree();
    const auto idxIn = space.dofIndices(e.id);

    for (const Intersection &facet : mesh.intersections(e.id)) {
      if (facet.boundary()) {
        const double sigma = penalty(facet.length, degIn, std::nullopt, data.gamma);
        const SegmentRule &rule = gaussSegment(facetQuadratureOrder(degIn, degIn));
        bII.assign(static_cast<std::size_t>(nIn) * nIn, 0.0);
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
          const Vec2 x = facet.p0 + rule.points[q] * (facet.p1 - facet.p0);
          inside.compute(setIn, e.map.applyInverse(x));
          const double w = rule.weights[q] * facet.length;
          const double g = data.boundaryValues(x);
          for (int i = 0; i < nIn; ++i) {
            const double dnI = facet.normal.dot(inside.gradients[i]);
            for (int j = 0; j < nIn; ++j) {
              const double dnJ = facet.normal.dot(inside.gradients[j]);
              bII[i * nIn + j] +=
                  w * (-(inside.values[j] * dnI + inside.values[i] * dnJ) + sigma * inside.values[i] * inside.values[j]);
            }
            b[idxIn[i]] += w * (-g * dnI + sigma * g * inside.values[i]);
          }
        }
        for (int i = 0; i < nIn; ++i)
          for (int j = 0; j < nIn; ++j)
            A.entry(idxIn[i], idxIn[j]) += bII[i * nIn + j];
        continue;
      }

      // interior: owned by the side that comes first in leaf order
      if (!elementBefore(facet.inside, *facet.outside))
        continue;
      const Element &eOut = mesh.element(*facet.outside);
      const BasisFunctionSet setOut = space.basisFunctionSet(eOut);
      const int nOut = setOut.size();
      const int degOut = setOut.key().maxDegree();
      const auto idxOut = space.dofIndices(eOut.id);

      const double sigma = penalty(facet.length, degIn, degOut, data.gamma);
      const SegmentRule &rule = gaussSegment(facetQuadratureOrder(degIn, degOut));
      const Vec2 nu = facet.normal; // outer normal of the inside element

      bII.assign(static_cast<std::size_t>(nIn) * nIn, 0.0);
      bIO.assign(static_cast<std::size_t>(nIn) * nOut, 0.0);
      bOI.assign(static_cast<std::size_t>(nOut) * nIn, 0.0);
      bOO.assign(static_cast<std::size_t>(nOut) * nOut, 0.0);

      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const Vec2 x = facet.p0 + rule.points[q] * (facet.p1 - facet.p0);
        inside.compute(setIn, e.map.applyInverse(x));
        outside.compute(setOut, eOut.map.applyInverse(x));
        const double w = rule.weights[q] * facet.length;

        // jump [phi^t] = sgn(t) phi^t nu, average {grad phi^s} = grad phi^s / 2
        auto couple = [&](std::vector<double> &target, const LocalTraces &test, double signTest, int nTest,
                          const LocalTraces &trial, double signTrial, int nTrial) {
          for (int i = 0; i < nTest; ++i) {
            const double dnI = nu.dot(test.gradients[i]);
            for (int j = 0; j < nTrial; ++j) {
              const double dnJ = nu.dot(trial.gradients[j]);
              target[i * nTrial + j] +=
                  w * (-0.5 * (signTrial * trial.values[j] * dnI + signTest * test.values[i] * dnJ) +
                       sigma * signTest * signTrial * test.values[i] * trial.values[j]);
            }
          }
        };
        couple(bII, inside, 1.0, nIn, inside, 1.0, nIn);
        couple(bIO, inside, 1.0, nIn, outside, -1.0, nOut);
        couple(bOI, outside, -1.0, nOut, inside, 1.0, nIn);
        couple(bOO, outside, -1.0, nOut, outside, -1.0, nOut);
      }

      for (int i = 0; i < nIn; ++i)
        for (int j = 0; j < nIn; ++j)
          A.entry(idxIn[i], idxIn[j]) += bII[i * nIn + j];
      for (int i = 0; i < nIn; ++i)
        for (int j = 0; j < nOut; ++j)
          A.entry(idxIn[i], idxOut[j]) += bIO[i * nOut + j];
      for (int i = 0; i < nOut; ++i)
        for (int j = 0; j < nIn; ++j)
          A.entry(idxOut[i], idxIn[j]) += bOI[i * nIn + j];
      for (int i = 0; i < nOut; ++i)
        for (int j = 0; j < nOut; ++j)
          A.entry(idxOut[i], idxOut[j]) += bOO[i * nOut + j];
    }
  }

  return system;
}

// ---------------------------------------------------------------------------
// solver
// ---------------------------------------------------------------------------

BlockJacobiPreconditioner::BlockJacobiPreconditioner(const SparseMatrix &matrix,
                                                     const DiscreteFunctionSpace &space)
{
  for (const Element &e : space.mesh().leafElements()) {
    const auto idx = space.dofIndices(e.id);
    Block block;
    block.dofs.assign(idx.begin(), idx.end());
    const int n = static_cast<int>(idx.size());
    std::vector<double> dense(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        dense[i * n + j] = matrix.value(idx[i], idx[j]);
    // in-place Cholesky (blocks of an SPD matrix are SPD)
    for (int j = 0; j < n; ++j) {
      double d = dense[j * n + j];
      for (int t = 0; t < j; ++t)
        d -= dense[j * n + t] * dense[j * n + t];
      if (!(d > 0.0))
        throw std::runtime_error("block-Jacobi: non-positive diagonal block (gamma too small?)");
      dense[j * n + j] = std::sqrt(d);
      for (int i = j + 1; i < n; ++i) {
        double s = dense[i * n + j];
        for (int t = 0; t < j; ++t)
          s -= dense[i * n + t] * dense[j * n + t];
        dense[i * n + j] = s / dense[j * n + j];
      }
    }
    block.choleskyLower = std::move(dense);
    blocks_.push_back(std::move(block));
  }
}

void BlockJacobiPreconditioner::apply(std::span<const double> r, std::span<double> z) const
{
  std::vector<double> local;
  for (const Block &block : blocks_) {
    const int n = static_cast<int>(block.dofs.size());
    const double *L = block.choleskyLower.data();
    local.resize(n);
    for (int i = 0; i < n; ++i)
      local[i] = r[block.dofs[i]];
    for (int i = 0; i < n; ++i) {
      double s = local[i];
      for (int j = 0; j < i; ++j)
        s -= L[i * n + j] * local[j];
      local[i] = s / L[i * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
      double s = local[i];
      for (int j = i + 1; j < n; ++j)
        s -= L[j * n + i] * local[j];
      local[i] = s / L[i * n + i];
    }
    for (int i = 0; i < n; ++i)
      z[block.dofs[i]] = local[i];
  }
}

SolveResult solveCg(const SparseMatrix &matrix, std::span<const double> b, std::span<double> x,
                    const BlockJacobiPreconditioner &preconditioner, double tolerance, int maxIterations)
{
  const int n = matrix.rows();
  std::vector<double> r(n), z(n), p(n), q(n);

  double normB = 0.0;
  for (int i = 0; i < n; ++i)
    normB += b[i] * b[i];
  normB = std::sqrt(normB);
  if (normB == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return {0, 0.0, true};
  }

  matrix.multiply(x, q);
  for (int i = 0; i < n; ++i)
    r[i] = b[i] - q[i];

  auto dot = [n](std::span<const double> a, std::span<const double> c) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      s += a[i] * c[i];
    return s;
  };

  double normR = std::sqrt(dot(r, r));
  if (normR / normB <= tolerance)
    return {0, normR / normB, true};

  preconditioner.apply(r, z);
  p = z;
  double rz = dot(r, z);

  for (int it = 1; it <= maxIterations; ++it) {
    matrix.multiply(p, q);
    const double pq = dot(p, q);
    if (!(pq > 0.0))
      throw std::runtime_error("CG breakdown: negative curvature, matrix not SPD (gamma too small?)");
    const double alpha = rz / pq;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    normR = std::sqrt(dot(r, r));
    if (normR / normB <= tolerance)
      return {it, normR / normB, true};
    preconditioner.apply(r, z);
    const double rzNew = dot(r, z);
    const double beta = rzNew / rz;
    rz = rzNew;
    for (int i = 0; i < n; ++i)
      p[i] = z[i] + beta * p[i];
  }
  return {maxIterations, normR / normB, false};
}

// ---------------------------------------------------------------------------
// norms
// ---------------------------------------------------------------------------

namespace {

// integrates over one (virtual) subcell of a leaf element
struct VolumeErrorIntegrator
{
  const BasisFunctionSet &set;
  const std::vector<double> &localDofs;
  const ProblemData &data;
  const QuadratureRule &rule;
  double l2 = 0.0;
  double h1 = 0.0;

  // cell: geometry of the integration domain (subset of the element)
  void integrate(const Element &element, const Element &cell)
  {
    LocalTraces traces;
    const double detJ = cell.map.jacobianDeterminant();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec2 x = cell.map.apply(rule.points[q]);
      const Vec2 ref = element.map.applyInverse(x);
      traces.compute(set, ref);
      double value = 0.0;
      Vec2 gradient{0.0, 0.0};
      for (std::size_t i = 0; i < localDofs.size(); ++i) {
        value += localDofs[i] * traces.values[i];
        gradient += localDofs[i] * traces.gradients[i];
      }
      const double dv = value - data.exactSolution(x);
      const Vec2 dg = gradient - data.exactGradient(x);
      const double w = rule.weights[q] * detJ;
      l2 += w * dv * dv;
      h1 += w * dg.norm2();
    }
  }
};

bool touchesPoint(const Element &e, Vec2 p)
{
  const double tol = 1e-12 * std::max(1.0, e.diameter);
  for (int i = 0; i < e.cornerCount(); ++i)
    if ((e.corners[i] - p).norm() <= tol)
      return true;
  return false;
}

} // namespace

ErrorNorms errorNorms(const DiscreteFunctionSpace &space, const DiscreteFunction &uh,
                      const ProblemData &data, const ErrorIntegrationOptions &options)
{
  if (!data.exactSolution || !data.exactGradient)
    throw std::invalid_argument("errorNorms requires the exact solution and gradient");

  const HierarchicalMesh &mesh = space.mesh();
  ErrorNorms norms;
  double dg2 = 0.0;

  for (const Element &e : mesh.leafElements()) {
    const BasisFunctionSet set = space.basisFunctionSet(e);
    const int deg = set.key().maxDegree();
    const int order = std::min(maxQuadratureOrder, 2 * deg + options.extraOrder);
    const QuadratureRule &rule = e.cellType == CellType::Quad ? tensorSquare(order) : triangleRule(order);

    std::vector<double> local(set.size());
    uh.localDofs(e.id, local);
    VolumeErrorIntegrator integrator{set, local, data, rule};

    if (options.singularPoint && touchesPoint(e, *options.singularPoint)) {
      // graded virtual subdivision toward the singular corner
      Element cell = e;
      for (int level = 0; level < options.subdivisionLevels; ++level) {
        const auto children = HierarchicalMesh::childElements(cell);
        int containing = -1;
        for (int c = 0; c < 4; ++c) {
          if (touchesPoint(children[c], *options.singularPoint) && containing < 0)
            containing = c;
          else
            integrator.integrate(e, children[c]);
        }
        if (containing < 0)
          break;
        cell = children[containing];
      }
      integrator.integrate(e, cell);
    }
    else {
      integrator.integrate(e, e);
    }
    norms.l2 += integrator.l2;
    dg2 += integrator.h1;
  }

  // jump and boundary penalty terms
  LocalTraces inside, outside;
  for (const Element &e : mesh.leafElements()) {
    const BasisFunctionSet setIn = space.basisFunctionSet(e);
    const int degIn = setIn.key().maxDegree();
    std::vector<double> localIn(setIn.size());
    uh.localDofs(e.id, localIn);

    for (const Intersection &facet : mesh.intersections(e.id)) {
      if (facet.boundary()) {
        const double sigma = penalty(facet.length, degIn, std::nullopt, data.gamma);
        const SegmentRule &rule = gaussSegment(std::min(maxQuadratureOrder, 2 * degIn + options.extraOrder));
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
          const Vec2 x = facet.p0 + rule.points[q] * (facet.p1 - facet.p0);
          inside.compute(setIn, e.map.applyInverse(x));
          double value = 0.0;
          for (std::size_t i = 0; i < localIn.size(); ++i)
            value += localIn[i] * inside.values[i];
          const double d = value - data.boundaryValues(x);
          dg2 += rule.weights[q] * facet.length * sigma * d * d;
        }
        continue;
      }
      if (!elementBefore(facet.inside, *facet.outside))
        continue;
      const Element &eOut = mesh.element(*facet.outside);
      const BasisFunctionSet setOut = space.basisFunctionSet(eOut);
      const int degOut = setOut.key().maxDegree();
      std::vector<double> localOut(setOut.size());
      uh.localDofs(eOut.id, localOut);

      const double sigma = penalty(facet.length, degIn, degOut, data.gamma);
      const SegmentRule &rule = gaussSegment(facetQuadratureOrder(degIn, degOut));
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const Vec2 x = facet.p0 + rule.points[q] * (facet.p1 - facet.p0);
        inside.compute(setIn, e.map.applyInverse(x));
        outside.compute(setOut, eOut.map.applyInverse(x));
        double vIn = 0.0, vOut = 0.0;
        for (std::size_t i = 0; i < localIn.size(); ++i)
          vIn += localIn[i] * inside.values[i];
        for (std::size_t i = 0; i < localOut.size(); ++i)
          vOut += localOut[i] * outside.values[i];
        const double jump = vIn - vOut;
        dg2 += rule.weights[q] * facet.length * sigma * jump * jump;
      }
    }
  }

  norms.dg = std::sqrt(dg2);
  norms.l2 = std::sqrt(norms.l2);
  return norms;
}

double dgNorm(const DiscreteFunctionSpace &space, const DiscreteFunction &v, double gamma)
{
  const HierarchicalMesh &mesh = space.mesh();
  double dg2 = 0.0;
  LocalTraces inside, outside;

  for (const Element &e : mesh.leafElements()) {
    const BasisFunctionSet set = space.basisFunctionSet(e);
    const int deg = set.key().maxDegree();
    std::vector<double> local(set.size());
    v.localDofs(e.id, local);

    const int order = std::min(maxQuadratureOrder, 2 * deg + 2);
    const QuadratureRule &rule = e.cellType == CellType::Quad ? tensorSquare(order) : triangleRule(order);
    const double detJ = e.map.jacobianDeterminant();
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      inside.compute(set, rule.points[q]);
      Vec2 gradient{0.0, 0.0};
      for (std::size_t i = 0; i < local.size(); ++i)
        gradient += local[i] * inside.gradients[i];
      dg2 += rule.weights[q] * detJ * gradient.norm2();
    }

    for (const Intersection &facet : mesh.intersections(e.id)) {
      if (facet.boundary()) {
        const double sigma = penalty(facet.length, deg, std::nullopt, gamma);
        const SegmentRule &srule = gaussSegment(std::min(maxQuadratureOrder, 2 * deg + 2));
        for (std::size_t q = 0; q < srule.points.size(); ++q) {
          const Vec2 x = facet.p0 + srule.points[q] * (facet.p1 - facet.p0);
          inside.compute(set, e.map.applyInverse(x));
          double value = 0.0;
          for (std::size_t i = 0; i < local.size(); ++i)
            value += local[i] * inside.values[i];
          dg2 += srule.weights[q] * facet.length * sigma * value * value;
        }
        continue;
      }
      if (!elementBefore(facet.inside, *facet.outside))
        continue;
      const Element &eOut = mesh.element(*facet.outside);
      const BasisFunctionSet setOut = space.basisFunctionSet(eOut);
      std::vector<double> localOut(setOut.size());
      v.localDofs(eOut.id, localOut);
      const double sigma = penalty(facet.length, deg, setOut.key().maxDegree(), gamma);
      const SegmentRule &srule = gaussSegment(facetQuadratureOrder(deg, setOut.key().maxDegree()));
      for (std::size_t q = 0; q < srule.points.size(); ++q) {
        const Vec2 x = facet.p0 + srule.points[q] * (facet.p1 - facet.p0);
        inside.compute(set, e.map.applyInverse(x));
        outside.compute(setOut, eOut.map.applyInverse(x));
        double vIn = 0.0, vOut = 0.0;
        for (std::size_t i = 0; i < local.size(); ++i)
          vIn += local[i] * inside.values[i];
        for (std::size_t i = 0; i < localOut.size(); ++i)
          vOut += localOut[i] * outside.values[i];
        dg2 += srule.weights[q] * facet.length * sigma * (vIn - vOut) * (vIn - vOut);
      }
    }
  }
  return std::sqrt(dg2);
}

} // namespace hpdg
