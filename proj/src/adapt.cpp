#include <hpdg/adapt.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <hpdg/quadrature.hpp>

namespace hpdg {

double ElementIndicator::total() const
{
  return std::sqrt(squared());
}

namespace {

int clampOrder(int order)
{
  return std::min(maxQuadratureOrder, order);
}

struct LocalField
{
  BasisFunctionSet set;
  std::vector<double> dofs;
  std::vector<double> values;
  std::vector<Vec2> refGradients;

  void bind(const DiscreteFunctionSpace &space, const DiscreteFunction &uh, const Element &e)
  {
    set = space.basisFunctionSet(e);
    dofs.resize(set.size());
    uh.localDofs(e.id, dofs);
    values.resize(set.size());
    refGradients.resize(set.size());
  }

  double value(Vec2 ref)
  {
    set.evaluateAll(ref, values);
    double acc = 0.0;
    for (std::size_t i = 0; i < dofs.size(); ++i)
      acc += dofs[i] * values[i];
    return acc;
  }

  Vec2 gradient(Vec2 ref)
  {
    set.gradientAll(ref, refGradients);
    Vec2 acc{0.0, 0.0};
    for (std::size_t i = 0; i < dofs.size(); ++i)
      acc += dofs[i] * set.physicalGradient(refGradients[i]);
    return acc;
  }
};

} // namespace

EstimatorResult estimate(const DiscreteFunctionSpace &space, const DiscreteFunction &uh,
                         const ProblemData &data)
{
  const HierarchicalMesh &mesh = space.mesh();
  const BasisFamily &orthonormal = basisFamily(BasisFamilyKind::Orthonormal);
  EstimatorResult result;
  double sum = 0.0;

  LocalField inside, outside;
  std::vector<std::array<double, 3>> hessians;

  for (const Element &e : mesh.leafElements()) {
    const int k = space.key(e.id).maxDegree();
    if (k < 1)
      throw std::invalid_argument("estimator requires local degree >= 1");
    const double h = e.diameter;
    ElementIndicator indicator;

    inside.bind(space, uh, e);
    hessians.resize(inside.set.size());

    // volume residual projected onto P^{k-1}(E)
    {
      const BasisFunctionSet lower = orthonormal.basisFunctionSet(e, Key::iso(k - 1));
      const int nLow = lower.size();
      const int order = clampOrder(2 * k + 2);
      const QuadratureRule &rule = e.cellType == CellType::Quad ? tensorSquare(order) : triangleRule(order);
      std::vector<double> rhs(nLow, 0.0), lowValues(nLow);
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const Vec2 ref = rule.points[q];
        inside.set.hessianAll(ref, hessians);
        double laplace = 0.0;
        for (std::size_t i = 0; i < inside.dofs.size(); ++i)
          laplace += inside.dofs[i] *
                     e.map.laplacianToPhysical(hessians[i][0], hessians[i][1], hessians[i][2]);
        const double residual = data.source(e.map.apply(ref)) + laplace;
        lower.evaluateAll(ref, lowValues);
        for (int i = 0; i < nLow; ++i)
          rhs[i] += rule.weights[q] * residual * lowValues[i];
      }
      std::vector<double> coeff = rhs;
      lower.solveReferenceMass(coeff);
      double integral = 0.0; // int_E (Pi r)^2 = detJ * c . rhs
      for (int i = 0; i < nLow; ++i)
        integral += coeff[i] * rhs[i];
      integral *= e.map.jacobianDeterminant();
      indicator.volume = (h * h) / (double(k) * k) * integral;
    }

    for (const Intersection &facet : mesh.intersections(e.id)) {
      if (facet.boundary()) {
        const SegmentRule &rule = gaussSegment(clampOrder(2 * k + 2));
        double mismatch = 0.0;
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
          const Vec2 x = facet.p0 + rule.points[q] * (facet.p1 - facet.p0);
          const double d = inside.value(e.map.applyInverse(x)) - data.boundaryValues(x);
          mismatch += rule.weights[q] * d * d;
        }
        indicator.boundary += double(k) * k * k / h * facet.length * mismatch;
        continue;
      }

      const Element &eOut = mesh.element(*facet.outside);
      outside.bind(space, uh, eOut);
      const int kOut = space.key(eOut.id).maxDegree();
      const int ke = std::max(k, kOut); // facet degree
      const SegmentRule &rule = gaussSegment(clampOrder(2 * ke + 2));

      // flux jump projected onto P^{k_e - 1}(e) via normalized Legendre on the segment
      std::vector<double> fluxCoeff(ke, 0.0), legendre(ke);
      double valueJump = 0.0;
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const double s = rule.points[q];
        const Vec2 x = facet.p0 + s * (facet.p1 - facet.p0);
        const Vec2 refIn = e.map.applyInverse(x);
        const Vec2 refOut = eOut.map.applyInverse(x);
        const double jumpFlux = facet.normal.dot(inside.gradient(refIn) - outside.gradient(refOut));
        const double jumpValue = inside.value(refIn) - outside.value(refOut);
        normalizedShiftedLegendre(ke - 1, s, legendre.data());
        for (int i = 0; i < ke; ++i)
          fluxCoeff[i] += rule.weights[q] * jumpFlux * legendre[i];
        valueJump += rule.weights[q] * jumpValue * jumpValue;
      }
      double fluxProjected = 0.0; // int_e (Pi jump)^2 = h_e sum c_i^2
      for (int i = 0; i < ke; ++i)
        fluxProjected += fluxCoeff[i] * fluxCoeff[i];
      indicator.fluxJump += h / k * facet.length * fluxProjected;
      indicator.valueJump += double(k) * k * k / h * facet.length * valueJump;
    }

    sum += indicator.squared();
    result.local.emplace(e.id, indicator);
  }

  result.globalEta = std::sqrt(sum);
  return result;
}

double regularityIndex(const DiscreteFunctionSpace &space, const DiscreteFunction &uh,
                       const Element &element)
{
  const Key key = space.key(element.id);
  const int k = key.maxDegree();
  if (k < 3)
    throw std::invalid_argument("regularity index requires local degree >= 3");

  // modal expansion of u_h|_E in the orthonormal basis
  std::vector<double> coeff;
  if (space.family().kind() == BasisFamilyKind::Orthonormal) {
    coeff.resize(space.dofIndices(element.id).size());
    uh.localDofs(element.id, coeff);
  }
  else {
    const BasisFunctionSet ortho =
        basisFamily(BasisFamilyKind::Orthonormal).basisFunctionSet(element, Key::iso(k));
    LocalField field;
    field.bind(space, uh, element);
    coeff = localL2Project([&](Vec2 x) { return field.value(element.map.applyInverse(x)); }, ortho,
                           clampOrder(2 * k + 2));
  }

  auto sliceNorm = [&](int degree) {
    double s = 0.0;
    for (int i = totalDegreeSpaceSize(degree - 1); i < totalDegreeSpaceSize(degree); ++i)
      s += coeff[i] * coeff[i];
    return std::sqrt(s);
  };
  const double bLower = sliceNorm(k - 1);
  const double bTop = sliceNorm(k);

  constexpr double floor = 1e-14;
  constexpr double qMax = 100.0;
  if (bTop <= floor)
    return qMax; // spectrally resolved, treat as analytic
  if (bLower <= floor)
    return 1.0;
  const double q = 1.0 + std::log(bLower / bTop) / std::log(double(k) / (k - 1));
  return std::clamp(q, 1.0, qMax);
}

namespace {

Key lowerKey(const Key &key, int kMin)
{
  auto down = [kMin](int k) { return std::max(k - 1, kMin); };
  return key.anisotropic() ? Key::aniso(down(key.degreeX()), down(key.degreeY()))
                           : Key::iso(down(key.degreeX()));
}

Key raiseKey(const Key &key, int kMax)
{
  auto up = [kMax](int k) { return std::min(k + 1, kMax); };
  return key.anisotropic() ? Key::aniso(up(key.degreeX()), up(key.degreeY()))
                           : Key::iso(up(key.degreeX()));
}

} // namespace

HpMarks markHp(const DiscreteFunctionSpace &space, const EstimatorResult &indicators,
               const DiscreteFunction &uh, const MarkingParameters &params)
{
  if (!(params.tol > 0.0))
    throw std::invalid_argument("marking tolerance must be positive");

  const HierarchicalMesh &mesh = space.mesh();
  const double count = static_cast<double>(mesh.leafCount());
  const double etaCoarsen = params.etaCoarsen.value_or(params.tol / count);
  const double etaRefine = params.etaRefine.value_or(params.tol / std::sqrt(count));

  HpMarks marks;
  for (const Element &e : mesh.leafElements()) {
    const double eta = indicators.local.at(e.id).total();
    const Key key = space.key(e.id);

    if (eta < etaCoarsen) {
      if (mesh.canCoarsen(e.id)) {
        marks.meshMarks[e.id] = Mark::Coarsen;
      }
      else {
        const Key lowered = lowerKey(key, params.kMin);
        if (!(lowered == key))
          marks.keyMarks.emplace_back(e.id, lowered);
      }
    }
    else if (eta > etaRefine) {
      const bool smooth =
          key.maxDegree() >= 3 && regularityIndex(space, uh, e) > key.maxDegree() + 1;
      if (smooth) {
        const Key raised = raiseKey(key, params.kMax);
        if (!(raised == key))
          marks.keyMarks.emplace_back(e.id, raised);
      }
      else {
        marks.meshMarks[e.id] = Mark::Refine;
      }
    }
  }
  return marks;
}

std::vector<std::pair<ElementId, Key>> transferDegrees(const AdaptationReport &report,
                                                       const DiscreteFunctionSpace &space)
{
  const DegreeMap &degrees = space.degrees();
  std::vector<std::pair<ElementId, Key>> keys;

  for (const auto &refinement : report.refinements) {
    if (!degrees.contains(refinement.father))
      throw std::invalid_argument("degree transfer: missing source degree");
    const Key inherited = degrees.key(refinement.father);
    for (const ElementId child : refinement.children)
      keys.emplace_back(child, inherited);
  }

  for (const auto &coarsening : report.coarsenings) {
    bool first = true;
    bool aniso = false;
    int kx = 0, ky = 0;
    for (const ElementId child : coarsening.children) {
      if (!degrees.contains(child))
        throw std::invalid_argument("degree transfer: missing source degree");
      const Key key = degrees.key(child);
      if (first) {
        aniso = key.anisotropic();
        kx = key.degreeX();
        ky = key.degreeY();
        first = false;
      }
      else {
        if (key.anisotropic() != aniso)
          throw std::invalid_argument("degree transfer: mixed key types among siblings");
        kx = std::max(kx, key.degreeX());
        ky = std::max(ky, key.degreeY());
      }
    }
    keys.emplace_back(coarsening.father, aniso ? Key::aniso(kx, ky) : Key::iso(kx));
  }
  return keys;
}

bool hpAdaptCycle(DiscreteFunctionSpace &space, DiscreteFunction &uh, const HpMarks &marks)
{
  DefaultDataProjection projection(uh);
  DataProjection *projections[] = {&projection};
  bool changed = false;

  const AdaptationReport report = space.mesh().adapt(marks.meshMarks);
  if (report.changed()) {
    const auto newKeys = transferDegrees(report, space);
    changed |= space.finishMeshAdaptation(report, newKeys, projections);
  }

  for (const auto &[id, key] : marks.keyMarks)
    if (space.mesh().isLeaf(id)) // p-marked elements survive the h-stage
      space.mark(key, id);
  changed |= space.adapt(projections);

  return changed;
}

} // namespace hpdg
