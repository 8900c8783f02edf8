#ifndef HPDG_SPACE_HPP
#define HPDG_SPACE_HPP

#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include <hpdg/basis.hpp>
#include <hpdg/dof.hpp>
#include <hpdg/mesh.hpp>

namespace hpdg {

// Per-element keys k_E plus pending re-assignments.
class DegreeMap
{
public:
  bool contains(ElementId id) const { return keys_.count(id) > 0; }
  const Key &key(ElementId id) const;
  void set(ElementId id, const Key &key) { keys_[id] = key; }
  void erase(ElementId id) { keys_.erase(id); }

  void markPending(ElementId id, const Key &key) { pending_[id] = key; }
  void erasePending(ElementId id) { pending_.erase(id); }
  bool hasPending() const { return !pending_.empty(); }
  const std::unordered_map<ElementId, Key, ElementIdHash> &pending() const { return pending_; }
  void clearPending() { pending_.clear(); }

private:
  std::unordered_map<ElementId, Key, ElementIdHash> keys_;
  std::unordered_map<ElementId, Key, ElementIdHash> pending_;
};

// element + basis set + global DOF indices of one side of a transfer
struct LocalSlot
{
  const Element *element = nullptr;
  const BasisFunctionSet *set = nullptr;
  std::span<const int> dofs;
};

// Callback bundle encapsulating how user data is projected between local
// spaces during an adaptation transaction. Destination indices are valid in
// the enlarged intermediate DOF layout.
class DataProjection
{
public:
  virtual ~DataProjection() = default;

  // local space of a surviving element changed (p-adaptation)
  virtual void operator()(const Element &element, const BasisFunctionSet &former,
                          const BasisFunctionSet &future, std::span<const int> origin,
                          std::span<const int> destination) = 0;

  // h-refinement: initialize the children from the father's local function
  virtual void prolongToChildren(const LocalSlot &father, std::span<const LocalSlot> children) = 0;

  // h-coarsening: initialize the father from the children's local functions
  virtual void restrictToFather(std::span<const LocalSlot> children, const LocalSlot &father) = 0;
};

// Local L^2(E)-projection of an arbitrary (physical-coordinate) function onto
// the span of a basis function set; returns the local DOF vector.
std::vector<double> localL2Project(const std::function<double(Vec2)> &source,
                                   const BasisFunctionSet &target, int quadratureOrder);

class DiscreteFunctionSpace;

// Global coefficient vector bound to a space; resized and relocated
// automatically across adaptation transactions.
class DiscreteFunction
{
public:
  explicit DiscreteFunction(DiscreteFunctionSpace &space);
  ~DiscreteFunction();

  DiscreteFunction(const DiscreteFunction &) = delete;
  DiscreteFunction &operator=(const DiscreteFunction &) = delete;

  DiscreteFunctionSpace &space() { return space_; }
  const DiscreteFunctionSpace &space() const { return space_; }
  std::vector<double> &dofs() { return dofs_; }
  const std::vector<double> &dofs() const { return dofs_; }

  void setZero();
  // value of the local function; the element must be a leaf
  double evaluate(const Element &element, Vec2 ref) const;
  void localDofs(ElementId id, std::span<double> out) const;

private:
  DiscreteFunctionSpace &space_;
  std::vector<double> dofs_;
};

// The default Step-2 projection: copy the origin local DOFs, evaluate the old
// local function through the former basis set, L^2-project onto the future set.
// For h-events the source is the father/children local function composed with
// the affine reference maps.
class DefaultDataProjection final : public DataProjection
{
public:
  explicit DefaultDataProjection(DiscreteFunction &function) : function_(&function) {}

  void operator()(const Element &element, const BasisFunctionSet &former,
                  const BasisFunctionSet &future, std::span<const int> origin,
                  std::span<const int> destination) override;
  void prolongToChildren(const LocalSlot &father, std::span<const LocalSlot> children) override;
  void restrictToFather(std::span<const LocalSlot> children, const LocalSlot &father) override;

private:
  DiscreteFunction *function_;
  std::vector<double> scratch_; // per-element copy of the local DOF vector
};

// Discrete function space: mesh + basis family + per-element keys + DOF
// mapping, and the registered DOF vectors it resizes and relocates.
//
// adapt() and finishMeshAdaptation() are exclusive; per-element projections
// write to disjoint destination blocks and may run concurrently in principle.
class DiscreteFunctionSpace
{
public:
  DiscreteFunctionSpace(HierarchicalMesh &mesh, const BasisFamily &family, const Key &initialKey);

  HierarchicalMesh &mesh() { return mesh_; }
  const HierarchicalMesh &mesh() const { return mesh_; }
  const BasisFamily &family() const { return family_; }
  const DofMapper &mapper() const { return mapper_; }
  const DegreeMap &degrees() const { return degrees_; }

  int size() const { return mapper_.size(); }
  const Key &key(ElementId id) const { return degrees_.key(id); }
  std::span<const int> dofIndices(ElementId id) const { return mapper_.indices(id); }
  BasisFunctionSet basisFunctionSet(const Element &element) const
  {
    return family_.basisFunctionSet(element, degrees_.key(element.id));
  }

  // records a pending key; marking the current key clears the pending entry
  void mark(const Key &key, ElementId id);
  bool marked(ElementId id) const { return degrees_.pending().count(id) > 0; }

  void registerDofVector(std::vector<double> &v);
  void unregisterDofVector(std::vector<double> &v);

  // p-adaptation transaction over all pending keys; returns whether anything
  // changed. The overload without projections zero-initializes newly inserted
  // DOFs and is not data-conserving.
  bool adapt(std::span<DataProjection *const> projections);
  bool adapt();

  // second half of an h-adaptation: after HierarchicalMesh::adapt, transfers
  // data father<->children and rebuilds the DOF mapping. newKeys must assign a
  // key to every element created by the mesh adaptation.
  bool finishMeshAdaptation(const AdaptationReport &report,
                            std::span<const std::pair<ElementId, Key>> newKeys,
                            std::span<DataProjection *const> projections);

  // storage-bound instrumentation of the most recent transaction
  int lastPeakIndexSpace() const { return mapper_.lastPeakIndexSpace(); }

  struct TransactionStats
  {
    int oldSize = 0;
    int intermediateSize = 0; // peak transient index space
    int newSize = 0;
  };
  const std::vector<TransactionStats> &transactionLog() const { return transactionLog_; }
  void clearTransactionLog() { transactionLog_.clear(); }

private:
  bool runTransaction(const std::vector<DofChange> &changes,
                      const std::function<void()> &runProjections);

  HierarchicalMesh &mesh_;
  const BasisFamily &family_;
  DegreeMap degrees_;
  DofMapper mapper_;
  std::vector<std::vector<double> *> dependents_;
  std::vector<TransactionStats> transactionLog_;
};

// convenience: global L^2 projection of a (physical-coordinate) function
void projectFunction(const std::function<double(Vec2)> &source, DiscreteFunction &target,
                     int extraQuadratureOrder = 2);

} // namespace hpdg

#endif // HPDG_SPACE_HPP
