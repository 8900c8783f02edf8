#ifndef HPDG_DOF_HPP
#define HPDG_DOF_HPP

#include <span>
#include <unordered_map>
#include <vector>

#include <hpdg/mesh.hpp>

namespace hpdg {

// One element's requested local size for an adaptation: newSize == 0 removes
// the element from the mapping (refined father or coarsened child).
struct DofChange
{
  ElementId element;
  int newSize = 0;
};

struct DofRelocation
{
  int from = 0;
  int to = 0;
};

struct CommitResult
{
  int oldSize = 0;          // N^(m)
  int intermediateSize = 0; // N^(m+1/2)
  int newSize = 0;          // N^(m+1)
  // surviving DOFs above the new size, moved into the ascending hole list;
  // apply to the (still enlarged) DOF storage, then truncate to newSize
  std::vector<DofRelocation> relocations;
};

// Global DOF set and injective mapping onto {0, ..., N-1}, with the three-stage
// adaptation transaction: (1) new DOFs are appended past the current end so all
// existing indices stay valid, (2) data is projected while both index sets are
// alive, (3) surviving out-of-range indices are relocated into the freed holes
// and the image is compacted to {0, ..., N^(m+1)-1}.
//
// Transactions are exclusive; index lookup is concurrent-safe outside of them.
class DofMapper
{
public:
  DofMapper() = default;

  // consecutive enumeration in the given (leaf) order: mu_E(i) = sum n_E' + i
  static DofMapper freshEnumeration(const std::vector<DofChange> &sizesInLeafOrder);

  int size() const { return size_; }
  bool contains(ElementId id) const { return blocks_.count(id) > 0; }
  int blockSize(ElementId id) const;
  std::span<const int> indices(ElementId id) const;
  int index(ElementId id, int local) const { return indices(id)[local]; }

  bool inTransaction() const { return inTransaction_; }
  int intermediateSize() const;

  // Step 1: append new DOFs in the order of the change list (callers pass new
  // leaves in leaf order), local index ascending. Existing indices of shrunk
  // or removed elements stay readable until commit.
  void beginAdapt(const std::vector<DofChange> &changes);

  std::span<const int> originIndices(ElementId id) const;      // former indices
  std::span<const int> destinationIndices(ElementId id) const; // continued-mapping indices
  const std::vector<ElementId> &changedElements() const;

  // guard for commit(): all data projections must have run
  void markProjectionsComplete();

  // Step 3: hole compaction; indices below N^(m+1) are preserved verbatim,
  // surviving indices above, taken in ascending order, fill the ascending
  // hole list.
  CommitResult commit();

  // instrumentation for the storage-cost bound: the peak transient index
  // space of the most recent transaction
  int lastPeakIndexSpace() const { return lastPeak_; }

private:
  std::unordered_map<ElementId, std::vector<int>, ElementIdHash> blocks_;
  int size_ = 0;

  bool inTransaction_ = false;
  bool projectionsComplete_ = false;
  int txnSize_ = 0; // N^(m+1/2)
  int lastPeak_ = 0;
  std::vector<ElementId> changed_;
  std::unordered_map<ElementId, std::vector<int>, ElementIdHash> origin_;
  std::unordered_map<ElementId, std::vector<int>, ElementIdHash> destination_;
};

} // namespace hpdg

#endif // HPDG_DOF_HPP
