#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <hpdg/benchmark.hpp>
#include <hpdg/mesh.hpp>

#include "test_helpers.hpp"

using namespace hpdg;
using namespace hpdg::testing;

TEST_SUITE_BEGIN("mesh");

TEST_CASE("parses a 2x1 rectangle of two unit squares")
{
  const MacroGrid grid = loadMacroGrid(twoSquaresMacro());
  CHECK(grid.vertices.size() == 6);
  CHECK(grid.cells.size() == 2);
  CHECK(grid.cellType == CellType::Quad);
}

TEST_CASE("built-in L-shape macro grids have 48 quads and 96 triangles")
{
  const MacroGrid quads = loadMacroGrid(lshapeMacroText(CellType::Quad));
  CHECK(quads.cells.size() == 48);
  const MacroGrid triangles = loadMacroGrid(lshapeMacroText(CellType::Triangle));
  CHECK(triangles.cells.size() == 96);

  const HierarchicalMesh mesh(quads);
  CHECK(mesh.domainArea() == doctest::Approx(3.0).epsilon(1e-13));
}

TEST_CASE("parse errors carry line numbers")
{
  CHECK_THROWS_WITH_AS(loadMacroGrid("DIM 2\nWHAT 1\n"), doctest::Contains("line 2"),
                       std::runtime_error);
  // clockwise cell: orientation error
  const std::string cw = "DIM 2\nCELLTYPE quad\nVERTEX 0 0\nVERTEX 1 0\nVERTEX 1 1\nVERTEX 0 1\n"
                         "CELL 0 3 2 1\n";
  CHECK_THROWS_WITH_AS(loadMacroGrid(cw), doctest::Contains("orientation"), std::runtime_error);
  // duplicated cell: overlap error
  const std::string dup = unitSquareMacro() + "CELL 0 1 2 3\n";
  CHECK_THROWS_WITH_AS(loadMacroGrid(dup), doctest::Contains("overlap"), std::runtime_error);
  // missing DIM
  CHECK_THROWS_AS(loadMacroGrid("CELLTYPE quad\n"), std::runtime_error);
}

TEST_CASE("refining a unit square produces four congruent children")
{
  HierarchicalMesh mesh(loadMacroGrid(unitSquareMacro()));
  REQUIRE(mesh.leafCount() == 1);
  const ElementId root = mesh.leafElements()[0].id;

  AdaptationMarks marks;
  marks[root] = Mark::Refine;
  const AdaptationReport report = mesh.adapt(marks);
  CHECK(report.refinements.size() == 1);
  CHECK(mesh.leafCount() == 4);
  for (const Element &e : mesh.leafElements()) {
    CHECK(e.diameter == doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-14));
    CHECK(e.area == doctest::Approx(0.25).epsilon(1e-14));
  }

  SUBCASE("marking a non-leaf element is an error")
  {
    AdaptationMarks bad;
    bad[root] = Mark::Refine;
    CHECK_THROWS_AS(mesh.adapt(bad), std::invalid_argument);
  }

  SUBCASE("coarsening a complete sibling set restores the father")
  {
    AdaptationMarks coarsen;
    for (const Element &e : mesh.leafElements())
      coarsen[e.id] = Mark::Coarsen;
    const AdaptationReport r = mesh.adapt(coarsen);
    CHECK(r.coarsenings.size() == 1);
    CHECK(mesh.leafCount() == 1);
    CHECK(mesh.leafElements()[0].id == root);
  }

  SUBCASE("three of four coarsen marks are demoted to keep")
  {
    AdaptationMarks partial;
    for (int c = 0; c < 3; ++c)
      partial[mesh.leafElements()[c].id] = Mark::Coarsen;
    const AdaptationReport r = mesh.adapt(partial);
    CHECK_FALSE(r.changed());
    CHECK(mesh.leafCount() == 4);
  }
}

TEST_CASE("triangle red refinement preserves area and orientation")
{
  HierarchicalMesh mesh(loadMacroGrid(twoTrianglesMacro()));
  AdaptationMarks marks;
  marks[mesh.leafElements()[0].id] = Mark::Refine;
  mesh.adapt(marks);
  CHECK(mesh.leafCount() == 5);
  double area = 0.0;
  for (const Element &e : mesh.leafElements()) {
    CHECK(e.area > 0.0);
    area += e.area;
  }
  CHECK(area == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("leaf order is macro index, then child path")
{
  HierarchicalMesh mesh(loadMacroGrid(twoSquaresMacro()));
  AdaptationMarks marks;
  marks[mesh.leafElements()[1].id] = Mark::Refine;
  mesh.adapt(marks);
  const auto &leaves = mesh.leafElements();
  REQUIRE(leaves.size() == 5);
  CHECK(leaves[0].id.macro == 0);
  for (std::size_t i = 1; i < leaves.size(); ++i) {
    CHECK(leaves[i].id.macro == 1);
    CHECK(leaves[i].id.ownChildIndex() == i - 1);
    CHECK(elementBefore(leaves[i - 1].id, leaves[i].id));
  }
}

TEST_CASE("single element reports four unit boundary intersections")
{
  HierarchicalMesh mesh(loadMacroGrid(unitSquareMacro()));
  const auto &facets = mesh.intersections(mesh.leafElements()[0].id);
  REQUIRE(facets.size() == 4);
  for (const Intersection &facet : facets) {
    CHECK(facet.boundary());
    CHECK(facet.length == doctest::Approx(1.0));
    CHECK(facet.normal.norm() == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("two squares share one interior facet with opposite normals")
{
  HierarchicalMesh mesh(loadMacroGrid(twoSquaresMacro()));
  const auto &leaves = mesh.leafElements();
  int interior = 0;
  for (const Element &e : leaves) {
    int boundary = 0;
    for (const Intersection &facet : mesh.intersections(e.id)) {
      if (facet.boundary()) {
        ++boundary;
      }
      else {
        ++interior;
        CHECK(*facet.outside == (e.id == leaves[0].id ? leaves[1].id : leaves[0].id));
      }
    }
    CHECK(boundary == 3);
  }
  CHECK(interior == 2);

  const auto &left = mesh.intersections(leaves[0].id);
  const auto it = std::find_if(left.begin(), left.end(), [](const Intersection &f) { return !f.boundary(); });
  REQUIRE(it != left.end());
  CHECK(it->normal.x == doctest::Approx(1.0));
  CHECK(it->normal.y == doctest::Approx(0.0));
}

TEST_CASE("hanging facets: the coarse side reports the matching sub-segments")
{
  HierarchicalMesh mesh(loadMacroGrid(twoSquaresMacro()));
  const ElementId left = mesh.leafElements()[0].id;
  const ElementId right = mesh.leafElements()[1].id;
  AdaptationMarks marks;
  marks[left] = Mark::Refine;
  mesh.adapt(marks);

  int subSegments = 0;
  for (const Intersection &facet : mesh.intersections(right)) {
    if (facet.boundary())
      continue;
    ++subSegments;
    CHECK(facet.length == doctest::Approx(0.5));
    CHECK(facet.normal.x == doctest::Approx(-1.0));
  }
  CHECK(subSegments == 2);

  // and the fine side sees the full edges of the children
  int fine = 0;
  for (const Element &e : mesh.leafElements()) {
    if (e.id.level == 0)
      continue;
    for (const Intersection &facet : mesh.intersections(e.id))
      if (!facet.boundary() && *facet.outside == right) {
        ++fine;
        CHECK(facet.length == doctest::Approx(0.5));
        CHECK(facet.normal.x == doctest::Approx(1.0));
      }
  }
  CHECK(fine == 2);
}

namespace {

AdaptationMarks randomMarks(const HierarchicalMesh &mesh, std::mt19937 &rng, int maxElements)
{
  AdaptationMarks marks;
  std::uniform_int_distribution<int> coin(0, 5);
  for (const Element &e : mesh.leafElements()) {
    const int value = coin(rng);
    if (value == 0 && mesh.leafCount() < maxElements)
      marks[e.id] = Mark::Refine;
    else if (value == 1)
      marks[e.id] = Mark::Coarsen;
  }
  return marks;
}

} // namespace

TEST_CASE("area is conserved under random adaptation sequences")
{
  for (const bool triangles : {false, true}) {
    HierarchicalMesh mesh(
        loadMacroGrid(triangles ? lshapeMacroText(CellType::Triangle) : lshapeMacroText(CellType::Quad)));
    std::mt19937 rng(triangles ? 3 : 4);
    for (int round = 0; round < 6; ++round) {
      mesh.adapt(randomMarks(mesh, rng, 400));
      double area = 0.0;
      for (const Element &e : mesh.leafElements())
        area += e.area;
      CHECK(std::abs(area - mesh.domainArea()) < 1e-12);
    }
  }
}

TEST_CASE("facet pairing: every interior intersection exists reversed")
{
  HierarchicalMesh mesh(loadMacroGrid(lshapeMacroText(CellType::Quad)));
  std::mt19937 rng(17);
  mesh.adapt(randomMarks(mesh, rng, 300));
  mesh.adapt(randomMarks(mesh, rng, 300));

  for (const Element &e : mesh.leafElements()) {
    for (const Intersection &facet : mesh.intersections(e.id)) {
      if (facet.boundary())
        continue;
      const auto &other = mesh.intersections(*facet.outside);
      bool found = false;
      for (const Intersection &reversed : other) {
        if (reversed.boundary() || !(*reversed.outside == e.id))
          continue;
        if ((reversed.p0 - facet.p1).norm() < 1e-12 && (reversed.p1 - facet.p0).norm() < 1e-12) {
          found = true;
          CHECK(std::abs(reversed.normal.x + facet.normal.x) < 1e-14);
          CHECK(std::abs(reversed.normal.y + facet.normal.y) < 1e-14);
        }
      }
      CHECK(found);
    }
  }
}

TEST_CASE("nestedness: children lie inside their father")
{
  std::mt19937 rng(29);
  for (const bool triangles : {false, true}) {
    HierarchicalMesh mesh(
        loadMacroGrid(triangles ? twoTrianglesMacro() : unitSquareMacro()));
    const Element father = mesh.leafElements()[0];
    AdaptationMarks marks;
    marks[father.id] = Mark::Refine;
    mesh.adapt(marks);

    for (const Element &child : mesh.leafElements()) {
      if (child.id.level == 0)
        continue;
      for (int trial = 0; trial < 100; ++trial) {
        const Vec2 ref = randomPoint(rng, child.cellType);
        const Vec2 x = child.map.apply(ref);
        const Vec2 inFather = father.map.applyInverse(x);
        CHECK(inFather.x > -1e-12);
        CHECK(inFather.y > -1e-12);
        if (triangles)
          CHECK(inFather.x + inFather.y < 1.0 + 1e-12);
        else {
          CHECK(inFather.x < 1.0 + 1e-12);
          CHECK(inFather.y < 1.0 + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("refine then coarsen restores the identical leaf set and order")
{
  HierarchicalMesh mesh(loadMacroGrid(lshapeMacroText(CellType::Quad)));
  std::mt19937 rng(31);
  mesh.adapt(randomMarks(mesh, rng, 200));

  std::vector<ElementId> before;
  for (const Element &e : mesh.leafElements())
    before.push_back(e.id);

  const ElementId target = mesh.leafElements()[mesh.leafCount() / 2].id;
  AdaptationMarks refine;
  refine[target] = Mark::Refine;
  const AdaptationReport report = mesh.adapt(refine);
  REQUIRE(report.refinements.size() == 1);

  AdaptationMarks coarsen;
  for (const ElementId child : report.refinements[0].children)
    coarsen[child] = Mark::Coarsen;
  mesh.adapt(coarsen);

  std::vector<ElementId> after;
  for (const Element &e : mesh.leafElements())
    after.push_back(e.id);
  CHECK(before == after);
}

TEST_SUITE_END();
