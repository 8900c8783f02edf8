#include <hpdg/space.hpp>

#include <algorithm>
#include <stdexcept>

#include <hpdg/quadrature.hpp>

namespace hpdg {

const Key &DegreeMap::key(ElementId id) const
{
  const auto it = keys_.find(id);
  if (it == keys_.end())
    throw std::invalid_argument("no key stored for element");
  return it->second;
}

// ---------------------------------------------------------------------------
// local projection
// ---------------------------------------------------------------------------

std::vector<double> localL2Project(const std::function<double(Vec2)> &source,
                                   const BasisFunctionSet &target, int quadratureOrder)
{
  const Element &element = target.element();
  const QuadratureRule &rule = element.cellType == CellType::Quad
                                   ? tensorSquare(quadratureOrder)
                                   : triangleRule(quadratureOrder);
  const int n = target.size();
  std::vector<double> rhs(n, 0.0);
  std::vector<double> values(n);
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const Vec2 ref = rule.points[q];
    const double f = source(element.map.apply(ref));
    target.evaluateAll(ref, values);
    const double w = rule.weights[q];
    for (int i = 0; i < n; ++i)
      rhs[i] += w * f * values[i];
  }
  // M_E = |det DF_E| Mhat, and the |det| cancels against the integral element
  target.solveReferenceMass(rhs);
  return rhs;
}

// ---------------------------------------------------------------------------
// DiscreteFunction
// ---------------------------------------------------------------------------

DiscreteFunction::DiscreteFunction(DiscreteFunctionSpace &space) : space_(space)
{
  space_.registerDofVector(dofs_);
}

DiscreteFunction::~DiscreteFunction()
{
  space_.unregisterDofVector(dofs_);
}

void DiscreteFunction::setZero()
{
  std::fill(dofs_.begin(), dofs_.end(), 0.0);
}

double DiscreteFunction::evaluate(const Element &element, Vec2 ref) const
{
  const BasisFunctionSet set = space_.basisFunctionSet(element);
  const auto idx = space_.dofIndices(element.id);
  std::vector<double> values(set.size());
  set.evaluateAll(ref, values);
  double acc = 0.0;
  for (int i = 0; i < set.size(); ++i)
    acc += dofs_[idx[i]] * values[i];
  return acc;
}

void DiscreteFunction::localDofs(ElementId id, std::span<double> out) const
{
  const auto idx = space_.dofIndices(id);
  for (std::size_t i = 0; i < idx.size(); ++i)
    out[i] = dofs_[idx[i]];
}

// ---------------------------------------------------------------------------
// DefaultDataProjection
// ---------------------------------------------------------------------------

void DefaultDataProjection::operator()(const Element &element, const BasisFunctionSet &former,
                                       const BasisFunctionSet &future, std::span<const int> origin,
                                       std::span<const int> destination)
{
  std::vector<double> &u = function_->dofs();
  scratch_.resize(origin.size());
  for (std::size_t i = 0; i < origin.size(); ++i)
    scratch_[i] = u[origin[i]];

  std::vector<double> values(former.size());
  auto oldLocal = [&](Vec2 physical) {
    former.evaluateAll(element.map.applyInverse(physical), values);
    double acc = 0.0;
    for (std::size_t i = 0; i < scratch_.size(); ++i)
      acc += scratch_[i] * values[i];
    return acc;
  };

  const int order = 2 * std::max(former.key().maxDegree(), future.key().maxDegree()) + 2;
  const std::vector<double> dofs = localL2Project(oldLocal, future, order);
  for (std::size_t i = 0; i < destination.size(); ++i)
    u[destination[i]] = dofs[i];
}

void DefaultDataProjection::prolongToChildren(const LocalSlot &father, std::span<const LocalSlot> children)
{
  std::vector<double> &u = function_->dofs();
  scratch_.resize(father.dofs.size());
  for (std::size_t i = 0; i < father.dofs.size(); ++i)
    scratch_[i] = u[father.dofs[i]];

  std::vector<double> values(father.set->size());
  auto fatherLocal = [&](Vec2 physical) {
    father.set->evaluateAll(father.element->map.applyInverse(physical), values);
    double acc = 0.0;
    for (std::size_t i = 0; i < scratch_.size(); ++i)
      acc += scratch_[i] * values[i];
    return acc;
  };

  for (const LocalSlot &child : children) {
    const int order = 2 * std::max(father.set->key().maxDegree(), child.set->key().maxDegree()) + 2;
    const std::vector<double> dofs = localL2Project(fatherLocal, *child.set, order);
    for (std::size_t i = 0; i < child.dofs.size(); ++i)
      u[child.dofs[i]] = dofs[i];
  }
}

void DefaultDataProjection::restrictToFather(std::span<const LocalSlot> children, const LocalSlot &father)
{
  std::vector<double> &u = function_->dofs();
  const int n = father.set->size();
  std::vector<double> rhs(n, 0.0);
  std::vector<double> fatherValues(n);

  int maxDegree = father.set->key().maxDegree();
  for (const LocalSlot &child : children)
    maxDegree = std::max(maxDegree, child.set->key().maxDegree());
  const int order = 2 * maxDegree + 2;

  const double fatherDet = father.element->map.jacobianDeterminant();
  for (const LocalSlot &child : children) {
    scratch_.resize(child.dofs.size());
    for (std::size_t i = 0; i < child.dofs.size(); ++i)
      scratch_[i] = u[child.dofs[i]];
    std::vector<double> childValues(child.set->size());

    const QuadratureRule &rule = child.element->cellType == CellType::Quad
                                     ? tensorSquare(order)
                                     : triangleRule(order);
    const double scale = child.element->map.jacobianDeterminant() / fatherDet;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec2 childRef = rule.points[q];
      child.set->evaluateAll(childRef, childValues);
      double value = 0.0;
      for (std::size_t i = 0; i < scratch_.size(); ++i)
        value += scratch_[i] * childValues[i];

      const Vec2 fatherRef = father.element->map.applyInverse(child.element->map.apply(childRef));
      father.set->evaluateAll(fatherRef, fatherValues);
      const double w = rule.weights[q] * scale;
      for (int i = 0; i < n; ++i)
        rhs[i] += w * value * fatherValues[i];
    }
  }

  father.set->solveReferenceMass(rhs);
  for (std::size_t i = 0; i < father.dofs.size(); ++i)
    u[father.dofs[i]] = rhs[i];
}

// ---------------------------------------------------------------------------
// DiscreteFunctionSpace
// ---------------------------------------------------------------------------

DiscreteFunctionSpace::DiscreteFunctionSpace(HierarchicalMesh &mesh, const BasisFamily &family,
                                             const Key &initialKey)
  : mesh_(mesh), family_(family)
{
  if (!family.admissible(mesh.cellType(), initialKey))
    throw std::invalid_argument("initial key not admissible for basis family and cell type");
  std::vector<DofChange> sizes;
  sizes.reserve(mesh.leafElements().size());
  for (const Element &e : mesh.leafElements()) {
    degrees_.set(e.id, initialKey);
    sizes.push_back({e.id, family.blocks(mesh.cellType(), initialKey)});
  }
  mapper_ = DofMapper::freshEnumeration(sizes);
}

void DiscreteFunctionSpace::mark(const Key &key, ElementId id)
{
  if (!mesh_.isLeaf(id))
    throw std::invalid_argument("p-mark on a non-leaf element");
  if (!family_.admissible(mesh_.cellType(), key))
    throw std::invalid_argument("key not admissible for basis family and cell type");
  if (key == degrees_.key(id))
    degrees_.erasePending(id);
  else
    degrees_.markPending(id, key);
}

void DiscreteFunctionSpace::registerDofVector(std::vector<double> &v)
{
  v.assign(mapper_.size(), 0.0);
  dependents_.push_back(&v);
}

void DiscreteFunctionSpace::unregisterDofVector(std::vector<double> &v)
{
  std::erase(dependents_, &v);
}

bool DiscreteFunctionSpace::runTransaction(const std::vector<DofChange> &changes,
                                           const std::function<void()> &runProjections)
{
  if (changes.empty())
    return false;
  mapper_.beginAdapt(changes);
  for (std::vector<double> *v : dependents_)
    v->resize(mapper_.intermediateSize(), 0.0);
  runProjections();
  mapper_.markProjectionsComplete();
  const CommitResult result = mapper_.commit();
  for (std::vector<double> *v : dependents_) {
    for (const DofRelocation &move : result.relocations)
      (*v)[move.to] = (*v)[move.from];
    v->resize(result.newSize);
  }
  transactionLog_.push_back({result.oldSize, result.intermediateSize, result.newSize});
  return true;
}

bool DiscreteFunctionSpace::adapt(std::span<DataProjection *const> projections)
{
  if (!degrees_.hasPending())
    return false;

  std::vector<DofChange> changes;
  std::vector<std::pair<ElementId, Key>> newKeys;
  for (const Element &e : mesh_.leafElements()) {
    const auto it = degrees_.pending().find(e.id);
    if (it == degrees_.pending().end() || it->second == degrees_.key(e.id))
      continue;
    changes.push_back({e.id, family_.blocks(mesh_.cellType(), it->second)});
    newKeys.emplace_back(e.id, it->second);
  }
  degrees_.clearPending();

  const bool changed = runTransaction(changes, [&]() {
    for (const auto &[id, newKey] : newKeys) {
      const Element &element = mesh_.element(id);
      const BasisFunctionSet former = family_.basisFunctionSet(element, degrees_.key(id));
      const BasisFunctionSet future = family_.basisFunctionSet(element, newKey);
      for (DataProjection *projection : projections)
        (*projection)(element, former, future, mapper_.originIndices(id), mapper_.destinationIndices(id));
    }
  });
  for (const auto &[id, newKey] : newKeys)
    degrees_.set(id, newKey);
  return changed;
}

bool DiscreteFunctionSpace::adapt()
{
  return adapt(std::span<DataProjection *const>{});
}

bool DiscreteFunctionSpace::finishMeshAdaptation(const AdaptationReport &report,
                                                 std::span<const std::pair<ElementId, Key>> newKeys,
                                                 std::span<DataProjection *const> projections)
{
  if (!report.changed())
    return false;

  std::unordered_map<ElementId, Key, ElementIdHash> keyOf;
  for (const auto &[id, key] : newKeys)
    keyOf.emplace(id, key);
  auto newKey = [&](ElementId id) -> const Key & {
    const auto it = keyOf.find(id);
    if (it == keyOf.end())
      throw std::invalid_argument("missing key for element created by mesh adaptation");
    return it->second;
  };

  // insertions in new-grid leaf order, then removals of vanished elements
  std::vector<DofChange> changes;
  for (const Element &e : mesh_.leafElements())
    if (!mapper_.contains(e.id))
      changes.push_back({e.id, family_.blocks(mesh_.cellType(), newKey(e.id))});
  for (const auto &refinement : report.refinements)
    changes.push_back({refinement.father, 0});
  for (const auto &coarsening : report.coarsenings)
    for (const ElementId child : coarsening.children)
      changes.push_back({child, 0});

  const bool changed = runTransaction(changes, [&]() {
    for (const auto &refinement : report.refinements) {
      const Element &father = mesh_.element(refinement.father);
      const BasisFunctionSet fatherSet = family_.basisFunctionSet(father, degrees_.key(refinement.father));
      const LocalSlot fatherSlot{&father, &fatherSet, mapper_.originIndices(refinement.father)};

      std::array<BasisFunctionSet, 4> childSets;
      std::array<LocalSlot, 4> childSlots;
      std::array<const Element *, 4> childElems{};
      for (int c = 0; c < 4; ++c) {
        const ElementId id = refinement.children[c];
        childElems[c] = &mesh_.element(id);
        childSets[c] = family_.basisFunctionSet(*childElems[c], newKey(id));
        childSlots[c] = {childElems[c], &childSets[c], mapper_.destinationIndices(id)};
      }
      for (DataProjection *projection : projections)
        projection->prolongToChildren(fatherSlot, childSlots);
    }

    for (const auto &coarsening : report.coarsenings) {
      const Element &father = mesh_.element(coarsening.father);
      const BasisFunctionSet fatherSet = family_.basisFunctionSet(father, newKey(coarsening.father));
      const LocalSlot fatherSlot{&father, &fatherSet, mapper_.destinationIndices(coarsening.father)};

      // the children are gone from the tree; their geometry is a pure
      // function of the father
      const std::array<Element, 4> childElems = HierarchicalMesh::childElements(father);
      std::array<BasisFunctionSet, 4> childSets;
      std::array<LocalSlot, 4> childSlots;
      for (int c = 0; c < 4; ++c) {
        const ElementId id = coarsening.children[c];
        childSets[c] = family_.basisFunctionSet(childElems[c], degrees_.key(id));
        childSlots[c] = {&childElems[c], &childSets[c], mapper_.originIndices(id)};
      }
      for (DataProjection *projection : projections)
        projection->restrictToFather(childSlots, fatherSlot);
    }
  });

  for (const auto &refinement : report.refinements)
    degrees_.erase(refinement.father);
  for (const auto &coarsening : report.coarsenings)
    for (const ElementId child : coarsening.children)
      degrees_.erase(child);
  for (const auto &[id, key] : newKeys)
    degrees_.set(id, key);
  return changed;
}

void projectFunction(const std::function<double(Vec2)> &source, DiscreteFunction &target,
                     int extraQuadratureOrder)
{
  DiscreteFunctionSpace &space = target.space();
  std::vector<double> &u = target.dofs();
  for (const Element &e : space.mesh().leafElements()) {
    const BasisFunctionSet set = space.basisFunctionSet(e);
    const int order = std::min(maxQuadratureOrder, 2 * set.key().maxDegree() + extraQuadratureOrder);
    const std::vector<double> dofs = localL2Project(source, set, order);
    const auto idx = space.dofIndices(e.id);
    for (int i = 0; i < set.size(); ++i)
      u[idx[i]] = dofs[i];
  }
}

} // namespace hpdg
