#include <hpdg/dof.hpp>

#include <algorithm>
#include <stdexcept>

namespace hpdg {

DofMapper DofMapper::freshEnumeration(const std::vector<DofChange> &sizesInLeafOrder)
{
  DofMapper mapper;
  int next = 0;
  for (const DofChange &entry : sizesInLeafOrder) {
    if (entry.newSize < 0)
      throw std::invalid_argument("negative block size");
    if (mapper.blocks_.count(entry.element))
      throw std::invalid_argument("duplicate element in enumeration");
    std::vector<int> idx(entry.newSize);
    for (int i = 0; i < entry.newSize; ++i)
      idx[i] = next++;
    mapper.blocks_.emplace(entry.element, std::move(idx));
  }
  mapper.size_ = next;
  return mapper;
}

int DofMapper::blockSize(ElementId id) const
{
  return static_cast<int>(indices(id).size());
}

std::span<const int> DofMapper::indices(ElementId id) const
{
  if (inTransaction_) {
    // continuation mapping mu^(m+1/2)
    const auto it = destination_.find(id);
    if (it != destination_.end())
      return it->second;
  }
  const auto it = blocks_.find(id);
  if (it == blocks_.end())
    throw std::invalid_argument("element not in DOF mapping");
  return it->second;
}

int DofMapper::intermediateSize() const
{
  if (!inTransaction_)
    throw std::logic_error("intermediateSize outside of a transaction");
  return txnSize_;
}

void DofMapper::beginAdapt(const std::vector<DofChange> &changes)
{
  if (inTransaction_)
    throw std::logic_error("nested DOF transaction");

  inTransaction_ = true;
  projectionsComplete_ = false;
  changed_.clear();
  origin_.clear();
  destination_.clear();

  int next = size_;
  for (const DofChange &change : changes) {
    if (change.newSize < 0)
      throw std::invalid_argument("negative block size");
    if (origin_.count(change.element))
      throw std::invalid_argument("duplicate element in change list");
    const auto it = blocks_.find(change.element);
    if (it == blocks_.end() && change.newSize == 0)
      throw std::invalid_argument("removal of unknown element");

    const std::vector<int> old = it != blocks_.end() ? it->second : std::vector<int>{};
    std::vector<int> dest;
    dest.reserve(change.newSize);
    const int keep = std::min<int>(static_cast<int>(old.size()), change.newSize);
    for (int i = 0; i < keep; ++i)
      dest.push_back(old[i]);
    for (int i = keep; i < change.newSize; ++i)
      dest.push_back(next++); // appended past the current end
    origin_.emplace(change.element, old);
    destination_.emplace(change.element, std::move(dest));
    changed_.push_back(change.element);
  }
  txnSize_ = next;
  lastPeak_ = next;
}

std::span<const int> DofMapper::originIndices(ElementId id) const
{
  if (!inTransaction_)
    throw std::logic_error("no active transaction");
  return origin_.at(id);
}

std::span<const int> DofMapper::destinationIndices(ElementId id) const
{
  if (!inTransaction_)
    throw std::logic_error("no active transaction");
  return destination_.at(id);
}

const std::vector<ElementId> &DofMapper::changedElements() const
{
  if (!inTransaction_)
    throw std::logic_error("no active transaction");
  return changed_;
}

void DofMapper::markProjectionsComplete()
{
  if (!inTransaction_)
    throw std::logic_error("no active transaction");
  projectionsComplete_ = true;
}

CommitResult DofMapper::commit()
{
  if (!inTransaction_)
    throw std::logic_error("commit without transaction");
  if (!projectionsComplete_)
    throw std::logic_error("commit before data projections completed");

  CommitResult result;
  result.oldSize = size_;
  result.intermediateSize = txnSize_;

  auto next = blocks_;
  for (const ElementId id : changed_) {
    auto &dest = destination_.at(id);
    if (dest.empty())
      next.erase(id);
    else
      next[id] = dest;
  }

  int newSize = 0;
  for (const auto &[id, idx] : next)
    newSize += static_cast<int>(idx.size());
  result.newSize = newSize;

  // holes: freed valid indices below the new size
  std::vector<bool> used(newSize, false);
  std::vector<std::pair<int, std::pair<ElementId, int>>> overflow;
  for (auto &[id, idx] : next) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      if (idx[i] < newSize)
        used[idx[i]] = true;
      else
        overflow.push_back({idx[i], {id, static_cast<int>(i)}});
    }
  }
  std::vector<int> holes;
  for (int i = 0; i < newSize; ++i)
    if (!used[i])
      holes.push_back(i);
  std::sort(overflow.begin(), overflow.end());
  if (overflow.size() != holes.size())
    throw std::logic_error("DOF compaction: hole/overflow mismatch");

  // ascending overflow offsets fill the ascending hole list
  result.relocations.reserve(overflow.size());
  for (std::size_t t = 0; t < overflow.size(); ++t) {
    const auto [from, slot] = overflow[t];
    next[slot.first][slot.second] = holes[t];
    result.relocations.push_back({from, holes[t]});
  }

  blocks_ = std::move(next);
  size_ = newSize;
  inTransaction_ = false;
  projectionsComplete_ = false;
  changed_.clear();
  origin_.clear();
  destination_.clear();
  return result;
}

} // namespace hpdg
