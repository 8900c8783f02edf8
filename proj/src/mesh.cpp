#include <hpdg/mesh.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>
#include <stdexcept>

namespace hpdg {

bool elementBefore(ElementId a, ElementId b)
{
  if (a.macro != b.macro)
    return a.macro < b.macro;
  const std::uint32_t common = std::min(a.level, b.level);
  for (std::uint32_t d = 0; d < common; ++d) {
    const auto ca = a.childIndex(d);
    const auto cb = b.childIndex(d);
    if (ca != cb)
      return ca < cb;
  }
  return a.level < b.level; // ancestors precede descendants
}

Vec2 Element::center() const
{
  Vec2 c{0.0, 0.0};
  const int n = cornerCount();
  for (int i = 0; i < n; ++i)
    c += corners[i];
  return c * (1.0 / n);
}

namespace {

Element makeQuad(ElementId id, Vec2 lower, Vec2 upper)
{
  Element e;
  e.id = id;
  e.cellType = CellType::Quad;
  e.corners = {Vec2{lower.x, lower.y}, Vec2{upper.x, lower.y}, Vec2{upper.x, upper.y}, Vec2{lower.x, upper.y}};
  const double hx = upper.x - lower.x;
  const double hy = upper.y - lower.y;
  e.map = AffineMap({hx, 0.0}, {0.0, hy}, lower);
  e.area = hx * hy;
  e.diameter = std::hypot(hx, hy);
  return e;
}

Element makeTriangle(ElementId id, Vec2 v0, Vec2 v1, Vec2 v2)
{
  Element e;
  e.id = id;
  e.cellType = CellType::Triangle;
  e.corners = {v0, v1, v2, Vec2{}};
  e.map = AffineMap(v1 - v0, v2 - v0, v0);
  e.area = 0.5 * e.map.jacobianDeterminant();
  e.diameter = std::max({(v1 - v0).norm(), (v2 - v1).norm(), (v0 - v2).norm()});
  return e;
}

[[noreturn]] void parseError(int line, const std::string &what)
{
  throw std::runtime_error("macro grid, line " + std::to_string(line) + ": " + what);
}

} // namespace

MacroGrid loadMacroGrid(const std::string &text)
{
  MacroGrid grid;
  bool haveDim = false;
  bool haveCellType = false;

  std::istringstream stream(text);
  std::string rawLine;
  int lineNo = 0;
  while (std::getline(stream, rawLine)) {
    ++lineNo;
    const auto hash = rawLine.find('#');
    if (hash != std::string::npos)
      rawLine.erase(hash);
    std::istringstream line(rawLine);
    std::string keyword;
    if (!(line >> keyword))
      continue;
    if (keyword == "DIM") {
      int dim = 0;
      if (!(line >> dim) || dim != 2)
        parseError(lineNo, "expected 'DIM 2'");
      haveDim = true;
    }
    else if (keyword == "CELLTYPE") {
      std::string type;
      if (!(line >> type))
        parseError(lineNo, "missing cell type");
      if (type == "quad")
        grid.cellType = CellType::Quad;
      else if (type == "triangle")
        grid.cellType = CellType::Triangle;
      else
        parseError(lineNo, "unknown cell type '" + type + "'");
      haveCellType = true;
    }
    else if (keyword == "VERTEX") {
      Vec2 v;
      if (!(line >> v.x >> v.y))
        parseError(lineNo, "vertex needs two coordinates");
      grid.vertices.push_back(v);
    }
    else if (keyword == "CELL") {
      if (!haveCellType)
        parseError(lineNo, "CELL before CELLTYPE");
      std::array<int, 4> c{-1, -1, -1, -1};
      const int want = grid.cellType == CellType::Quad ? 4 : 3;
      for (int i = 0; i < want; ++i)
        if (!(line >> c[i]))
          parseError(lineNo, "cell needs " + std::to_string(want) + " vertex indices");
      int extra;
      if (line >> extra)
        parseError(lineNo, "too many vertex indices");
      for (int i = 0; i < want; ++i)
        if (c[i] < 0 || c[i] >= static_cast<int>(grid.vertices.size()))
          parseError(lineNo, "vertex index out of range");
      // positive orientation (counterclockwise)
      double signedArea = 0.0;
      for (int i = 0; i < want; ++i) {
        const Vec2 a = grid.vertices[c[i]];
        const Vec2 b = grid.vertices[c[(i + 1) % want]];
        signedArea += 0.5 * a.cross(b);
      }
      if (!(signedArea > 0.0))
        parseError(lineNo, "orientation error: cell is not counterclockwise");
      if (grid.cellType == CellType::Quad) {
        // Legendre-type bases require axis-aligned rectangles
        double x0 = grid.vertices[c[0]].x, x1 = x0, y0 = grid.vertices[c[0]].y, y1 = y0;
        for (int i = 1; i < 4; ++i) {
          x0 = std::min(x0, grid.vertices[c[i]].x);
          x1 = std::max(x1, grid.vertices[c[i]].x);
          y0 = std::min(y0, grid.vertices[c[i]].y);
          y1 = std::max(y1, grid.vertices[c[i]].y);
        }
        const double tol = 1e-12 * std::max({1.0, x1 - x0, y1 - y0});
        for (int i = 0; i < 4; ++i) {
          const Vec2 v = grid.vertices[c[i]];
          if ((std::abs(v.x - x0) > tol && std::abs(v.x - x1) > tol) ||
              (std::abs(v.y - y0) > tol && std::abs(v.y - y1) > tol))
            parseError(lineNo, "quad cell is not an axis-aligned rectangle");
        }
      }
      grid.cells.push_back(c);
    }
    else {
      parseError(lineNo, "unknown keyword '" + keyword + "'");
    }
  }

  if (!haveDim)
    throw std::runtime_error("macro grid: missing 'DIM 2'");
  if (grid.cells.empty())
    throw std::runtime_error("macro grid: no cells");

  // conforming connectivity: every undirected edge is used at most twice and
  // with opposite directions (catches overlapping or flipped cells)
  std::map<std::pair<int, int>, int> edgeUse; // (lo,hi) -> net direction count
  std::map<std::pair<int, int>, int> edgeCount;
  for (std::size_t ci = 0; ci < grid.cells.size(); ++ci) {
    const int n = grid.cellType == CellType::Quad ? 4 : 3;
    for (int i = 0; i < n; ++i) {
      const int a = grid.cells[ci][i];
      const int b = grid.cells[ci][(i + 1) % n];
      const auto key = std::minmax(a, b);
      edgeUse[key] += (a < b) ? 1 : -1;
      edgeCount[key] += 1;
    }
  }
  for (const auto &[key, count] : edgeCount) {
    if (count > 2 || (count == 2 && edgeUse[key] != 0))
      throw std::runtime_error("macro grid: overlap error at edge (" + std::to_string(key.first) + "," +
                               std::to_string(key.second) + ")");
  }
  return grid;
}

HierarchicalMesh::HierarchicalMesh(const MacroGrid &macro) : cellType_(macro.cellType)
{
  for (std::size_t i = 0; i < macro.cells.size(); ++i) {
    const ElementId id{static_cast<std::uint32_t>(i), 0, 0};
    const auto &c = macro.cells[i];
    Element element;
    if (cellType_ == CellType::Quad) {
      Vec2 lower = macro.vertices[c[0]];
      Vec2 upper = lower;
      for (int k = 1; k < 4; ++k) {
        lower.x = std::min(lower.x, macro.vertices[c[k]].x);
        lower.y = std::min(lower.y, macro.vertices[c[k]].y);
        upper.x = std::max(upper.x, macro.vertices[c[k]].x);
        upper.y = std::max(upper.y, macro.vertices[c[k]].y);
      }
      element = makeQuad(id, lower, upper);
    }
    else {
      element = makeTriangle(id, macro.vertices[c[0]], macro.vertices[c[1]], macro.vertices[c[2]]);
    }
    domainArea_ += element.area;
    nodes_.emplace(id, Node{element, false});
  }
  rebuildLeaves();
}

bool HierarchicalMesh::isLeaf(ElementId id) const
{
  const auto it = nodes_.find(id);
  return it != nodes_.end() && !it->second.hasChildren;
}

const Element &HierarchicalMesh::element(ElementId id) const
{
  const auto it = nodes_.find(id);
  if (it == nodes_.end())
    throw std::invalid_argument("unknown element id");
  return it->second.element;
}

bool HierarchicalMesh::canCoarsen(ElementId id) const
{
  if (id.level == 0)
    return false;
  const ElementId father = id.father();
  for (std::uint32_t c = 0; c < 4; ++c)
    if (!isLeaf(father.child(c)))
      return false;
  return true;
}

std::array<Element, 4> HierarchicalMesh::childElements(const Element &father)
{
  std::array<Element, 4> children;
  if (father.cellType == CellType::Quad) {
    const Vec2 lower = father.corners[0];
    const Vec2 upper = father.corners[2];
    const Vec2 mid{0.5 * (lower.x + upper.x), 0.5 * (lower.y + upper.y)};
    children[0] = makeQuad(father.id.child(0), lower, mid);
    children[1] = makeQuad(father.id.child(1), {mid.x, lower.y}, {upper.x, mid.y});
    children[2] = makeQuad(father.id.child(2), {lower.x, mid.y}, {mid.x, upper.y});
    children[3] = makeQuad(father.id.child(3), mid, upper);
  }
  else {
    const Vec2 v0 = father.corners[0], v1 = father.corners[1], v2 = father.corners[2];
    const Vec2 m01 = (v0 + v1) * 0.5, m12 = (v1 + v2) * 0.5, m20 = (v2 + v0) * 0.5;
    children[0] = makeTriangle(father.id.child(0), v0, m01, m20);
    children[1] = makeTriangle(father.id.child(1), m01, v1, m12);
    children[2] = makeTriangle(father.id.child(2), m20, m12, v2);
    children[3] = makeTriangle(father.id.child(3), m01, m12, m20);
  }
  return children;
}

AdaptationReport HierarchicalMesh::adapt(const AdaptationMarks &marks)
{
  std::vector<std::pair<ElementId, Mark>> ordered;
  ordered.reserve(marks.size());
  for (const auto &[id, mark] : marks) {
    if (!contains(id) || !isLeaf(id))
      throw std::invalid_argument("adaptation mark on a non-leaf element");
    if (mark != Mark::Keep)
      ordered.emplace_back(id, mark);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const auto &a, const auto &b) { return elementBefore(a.first, b.first); });

  AdaptationReport report;

  // coarsening: honor only complete sibling sets, else demote to keep
  std::vector<ElementId> coarsenFathers;
  for (const auto &[id, mark] : ordered) {
    if (mark != Mark::Coarsen || id.level == 0)
      continue;
    const ElementId father = id.father();
    if (id.ownChildIndex() != 0)
      continue; // handle each sibling set once, via child 0
    bool complete = true;
    for (std::uint32_t c = 0; c < 4 && complete; ++c) {
      const ElementId sibling = father.child(c);
      const auto it = marks.find(sibling);
      complete = isLeaf(sibling) && it != marks.end() && it->second == Mark::Coarsen;
    }
    if (complete)
      coarsenFathers.push_back(father);
  }
  for (const ElementId father : coarsenFathers) {
    AdaptationReport::Coarsening record{father, {}};
    for (std::uint32_t c = 0; c < 4; ++c) {
      record.children[c] = father.child(c);
      nodes_.erase(record.children[c]);
    }
    nodes_.at(father).hasChildren = false;
    report.coarsenings.push_back(record);
  }

  for (const auto &[id, mark] : ordered) {
    if (mark != Mark::Refine)
      continue;
    Node &node = nodes_.at(id);
    const auto children = childElements(node.element);
    AdaptationReport::Refinement record{id, {}};
    for (std::uint32_t c = 0; c < 4; ++c) {
      record.children[c] = children[c].id;
      nodes_.emplace(children[c].id, Node{children[c], false});
    }
    node.hasChildren = true;
    report.refinements.push_back(record);
  }

  if (report.changed()) {
    ++version_;
    intersectionsValid_ = false;
    rebuildLeaves();
  }
  return report;
}

void HierarchicalMesh::rebuildLeaves()
{
  leaves_.clear();
  std::uint32_t macroCount = 0;
  for (const auto &[id, node] : nodes_)
    if (id.level == 0)
      macroCount = std::max(macroCount, id.macro + 1);

  // depth-first traversal, children in path order: this defines the leaf order
  struct Walker
  {
    const std::unordered_map<ElementId, Node, ElementIdHash> &nodes;
    std::vector<Element> &out;
    void visit(ElementId id)
    {
      const Node &node = nodes.at(id);
      if (!node.hasChildren) {
        out.push_back(node.element);
        return;
      }
      for (std::uint32_t c = 0; c < 4; ++c)
        visit(id.child(c));
    }
  } walker{nodes_, leaves_};

  for (std::uint32_t m = 0; m < macroCount; ++m)
    walker.visit(ElementId{m, 0, 0});
}

namespace {

struct EdgeRecord
{
  ElementId element;
  int localEdge = 0;
  Vec2 p0, p1;
  bool matched = false;
};

struct EdgeKey
{
  double ax, ay, bx, by;
  bool operator==(const EdgeKey &) const = default;
};

struct EdgeKeyHash
{
  std::size_t operator()(const EdgeKey &k) const
  {
    auto mix = [](std::size_t h, double v) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      h ^= std::hash<std::uint64_t>()(bits) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      return h;
    };
    std::size_t h = 0;
    h = mix(h, k.ax);
    h = mix(h, k.ay);
    h = mix(h, k.bx);
    h = mix(h, k.by);
    return h;
  }
};

EdgeKey canonicalKey(Vec2 p, Vec2 q)
{
  const bool swap = (q.x < p.x) || (q.x == p.x && q.y < p.y);
  if (swap)
    std::swap(p, q);
  return {p.x, p.y, q.x, q.y};
}

Vec2 outerNormal(Vec2 p0, Vec2 p1)
{
  const Vec2 d = p1 - p0;
  const double len = d.norm();
  return {d.y / len, -d.x / len};
}

struct PendingFacet
{
  int localEdge;
  double position; // midpoint parameter along the element's own edge
  Intersection intersection;
};

} // namespace

void HierarchicalMesh::buildIntersections() const
{
  intersections_.clear();

  std::vector<EdgeRecord> edges;
  edges.reserve(leaves_.size() * 4);
  for (const Element &e : leaves_) {
    const int n = e.cornerCount();
    for (int i = 0; i < n; ++i)
      edges.push_back({e.id, i, e.corners[i], e.corners[(i + 1) % n]});
  }

  std::unordered_map<ElementId, std::vector<PendingFacet>, ElementIdHash> pending;
  for (const Element &e : leaves_)
    pending[e.id];

  auto emitPair = [&](const EdgeRecord &fine, const EdgeRecord &coarse) {
    const Vec2 n = outerNormal(fine.p0, fine.p1);
    const double len = (fine.p1 - fine.p0).norm();
    Intersection fromFine{fine.element, coarse.element, fine.p0, fine.p1, n, len};
    Intersection fromCoarse{coarse.element, fine.element, fine.p1, fine.p0, {-n.x, -n.y}, len};

    const Vec2 df = fine.p1 - fine.p0;
    const Vec2 dc = coarse.p1 - coarse.p0;
    const Vec2 mid = (fine.p0 + fine.p1) * 0.5;
    pending[fine.element].push_back({fine.localEdge, (mid - fine.p0).dot(df) / df.norm2(), fromFine});
    pending[coarse.element].push_back({coarse.localEdge, (mid - coarse.p0).dot(dc) / dc.norm2(), fromCoarse});
  };

  // phase 1: exact endpoint matching resolves all conforming facets
  std::unordered_map<EdgeKey, std::vector<int>, EdgeKeyHash> buckets;
  for (std::size_t i = 0; i < edges.size(); ++i)
    buckets[canonicalKey(edges[i].p0, edges[i].p1)].push_back(static_cast<int>(i));
  for (const auto &[key, ids] : buckets) {
    if (ids.size() == 1)
      continue;
    if (ids.size() > 2)
      throw std::logic_error("mesh: more than two elements share a facet");
    EdgeRecord &a = edges[ids[0]];
    EdgeRecord &b = edges[ids[1]];
    if ((a.p1 - a.p0).dot(b.p1 - b.p0) >= 0.0)
      throw std::logic_error("mesh: overlapping elements detected");
    emitPair(a, b);
    a.matched = b.matched = true;
  }

  // phase 2: hanging facets, fine edge strictly contained in a coarser edge
  std::vector<int> open;
  for (std::size_t i = 0; i < edges.size(); ++i)
    if (!edges[i].matched)
      open.push_back(static_cast<int>(i));

  const double distTol = 1e-12;
  const double paramTol = 1e-10;
  std::vector<bool> covered(open.size(), false);
  auto contains = [&](const EdgeRecord &coarse, const EdgeRecord &fine, double &t0, double &t1) {
    const Vec2 d = coarse.p1 - coarse.p0;
    const double len = d.norm();
    if ((fine.p1 - fine.p0).norm() > len * (1.0 + paramTol))
      return false;
    if (std::abs(d.cross(fine.p0 - coarse.p0)) > distTol * len || std::abs(d.cross(fine.p1 - coarse.p0)) > distTol * len)
      return false;
    t0 = (fine.p0 - coarse.p0).dot(d) / (len * len);
    t1 = (fine.p1 - coarse.p0).dot(d) / (len * len);
    if (t0 < t1)
      return false; // same orientation: not a facing pair
    return t1 > -paramTol && t0 < 1.0 + paramTol && (t0 - t1) * len > distTol;
  };

  // an edge acts either as the contained (fine) side once or as the containing
  // (coarse) side for one or more fine edges, never as both
  for (std::size_t i = 0; i < open.size(); ++i) {
    if (covered[i])
      continue;
    for (std::size_t j = 0; j < open.size(); ++j) {
      if (i == j)
        continue;
      const EdgeRecord &fine = edges[open[i]];
      const EdgeRecord &coarse = edges[open[j]];
      double t0, t1;
      if (contains(coarse, fine, t0, t1)) {
        emitPair(fine, coarse);
        covered[i] = true;
        covered[j] = true;
        break;
      }
    }
  }

  // remaining edges lie on the domain boundary
  for (std::size_t i = 0; i < open.size(); ++i) {
    if (covered[i])
      continue;
    const EdgeRecord &e = edges[open[i]];
    const double len = (e.p1 - e.p0).norm();
    pending[e.element].push_back({e.localEdge, 0.5, Intersection{e.element, std::nullopt, e.p0, e.p1, outerNormal(e.p0, e.p1), len}});
  }

  for (auto &[id, facets] : pending) {
    std::sort(facets.begin(), facets.end(), [](const PendingFacet &a, const PendingFacet &b) {
      if (a.localEdge != b.localEdge)
        return a.localEdge < b.localEdge;
      return a.position < b.position;
    });
    auto &list = intersections_[id];
    list.reserve(facets.size());
    for (auto &f : facets)
      list.push_back(f.intersection);
  }

  intersectionsValid_ = true;
}

const std::vector<Intersection> &HierarchicalMesh::intersections(ElementId leaf) const
{
  if (!isLeaf(leaf))
    throw std::invalid_argument("intersections requested for a non-leaf element");
  if (!intersectionsValid_)
    buildIntersections();
  return intersections_.at(leaf);
}

} // namespace hpdg
