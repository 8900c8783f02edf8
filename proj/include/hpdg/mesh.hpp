#ifndef HPDG_MESH_HPP
#define HPDG_MESH_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <hpdg/geometry.hpp>

namespace hpdg {

enum class CellType { Quad, Triangle };

// Stable element identifier: macro cell index plus the path of child indices
// taken from the macro cell down to the element (2 bits per level). Identifiers
// never change while an element exists in the refinement tree.
struct ElementId
{
  std::uint32_t macro = 0;
  std::uint32_t level = 0;
  std::uint64_t path = 0;

  std::uint32_t childIndex(std::uint32_t depth) const
  {
    return static_cast<std::uint32_t>((path >> (2 * depth)) & 3u);
  }

  ElementId child(std::uint32_t index) const
  {
    return {macro, level + 1, path | (std::uint64_t(index) << (2 * level))};
  }

  ElementId father() const
  {
    const std::uint64_t mask = (std::uint64_t(1) << (2 * (level - 1))) - 1;
    return {macro, level - 1, path & mask};
  }

  std::uint32_t ownChildIndex() const { return childIndex(level - 1); }

  bool operator==(const ElementId &) const = default;
};

// Strict total order: macro index first, then child path lexicographically with
// ancestors ordered before their descendants. Restricted to the leaf set this
// is the traversal order of leafElements().
bool elementBefore(ElementId a, ElementId b);

struct ElementIdHash
{
  std::size_t operator()(const ElementId &id) const
  {
    std::size_t h = std::hash<std::uint64_t>()(id.path);
    h ^= std::hash<std::uint64_t>()((std::uint64_t(id.macro) << 8) | id.level) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
  }
};

struct Element
{
  ElementId id;
  CellType cellType = CellType::Quad;
  // quads: LL, LR, UR, UL (axis-aligned rectangle); triangles: first three, counterclockwise
  std::array<Vec2, 4> corners{};
  AffineMap map; // reference element onto this element
  double diameter = 0.0;
  double area = 0.0;

  int cornerCount() const { return cellType == CellType::Quad ? 4 : 3; }
  Vec2 center() const;
};

struct Intersection
{
  ElementId inside;
  std::optional<ElementId> outside; // empty marks a boundary facet
  Vec2 p0, p1;                      // facet segment, counterclockwise as seen from inside
  Vec2 normal;                      // unit outer normal of the inside element
  double length = 0.0;              // h_e

  bool boundary() const { return !outside.has_value(); }
};

enum class Mark { Keep, Refine, Coarsen };

using AdaptationMarks = std::unordered_map<ElementId, Mark, ElementIdHash>;

struct AdaptationReport
{
  struct Refinement
  {
    ElementId father;
    std::array<ElementId, 4> children;
  };
  struct Coarsening
  {
    ElementId father;
    std::array<ElementId, 4> children;
  };

  std::vector<Refinement> refinements; // new leaves and their father
  std::vector<Coarsening> coarsenings; // re-exposed father and its former children

  bool changed() const { return !refinements.empty() || !coarsenings.empty(); }
};

struct MacroGrid
{
  CellType cellType = CellType::Quad;
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 4>> cells; // fourth index -1 for triangles
};

// Parses the macro-grid text format: `DIM 2`, `CELLTYPE quad|triangle`,
// `VERTEX x y`, `CELL i0 i1 i2 [i3]` (counterclockwise), `#` comments.
// Throws std::runtime_error with a line number on malformed input, wrong
// orientation, or inconsistent cell connectivity.
MacroGrid loadMacroGrid(const std::string &text);

// Hierarchical 2D mesh: conforming macro grid plus a quadtree-style refinement
// forest. Quads split into 4 congruent children, triangles into 4 children by
// red (edge-midpoint) refinement. Hanging nodes of arbitrary level difference
// are allowed; facet integrals always live on the finer side's edge.
//
// adapt() is exclusive single-writer; all read-only traversal may be used
// concurrently from multiple threads between mutations.
class HierarchicalMesh
{
public:
  explicit HierarchicalMesh(const MacroGrid &macro);

  CellType cellType() const { return cellType_; }
  double domainArea() const { return domainArea_; }
  std::uint64_t version() const { return version_; }

  int leafCount() const { return static_cast<int>(leaves_.size()); }
  const std::vector<Element> &leafElements() const { return leaves_; }

  bool contains(ElementId id) const { return nodes_.count(id) > 0; }
  bool isLeaf(ElementId id) const;
  const Element &element(ElementId id) const; // leaf or interior node

  // true if the element has a father and the complete sibling set is on the leaf level
  bool canCoarsen(ElementId id) const;

  // Executes all refine marks and every complete sibling set of coarsen marks;
  // incomplete coarsen sets are demoted to keep. Marks on non-leaf elements
  // are an error.
  AdaptationReport adapt(const AdaptationMarks &marks);

  // Facets of a leaf element in deterministic order (local edge, then position
  // along the edge). Interior facets appear from both sides with opposite
  // normals; hanging facets appear from the finer side as full edges and from
  // the coarser side as the matching sub-segments.
  const std::vector<Intersection> &intersections(ElementId leaf) const;

  // Child geometry is a pure function of the father element.
  static std::array<Element, 4> childElements(const Element &father);

private:
  struct Node
  {
    Element element;
    bool hasChildren = false;
  };

  void rebuildLeaves();
  void buildIntersections() const;

  CellType cellType_;
  double domainArea_ = 0.0;
  std::uint64_t version_ = 0;
  std::unordered_map<ElementId, Node, ElementIdHash> nodes_;
  std::vector<Element> leaves_; // deterministic leaf order

  mutable bool intersectionsValid_ = false;
  mutable std::unordered_map<ElementId, std::vector<Intersection>, ElementIdHash> intersections_;
};

} // namespace hpdg

#endif // HPDG_MESH_HPP
