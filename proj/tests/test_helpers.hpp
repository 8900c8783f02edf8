#ifndef HPDG_TEST_HELPERS_HPP
#define HPDG_TEST_HELPERS_HPP

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include <hpdg/mesh.hpp>

namespace hpdg::testing {

inline Element quadElement(double x0, double y0, double hx, double hy)
{
  Element e;
  e.id = ElementId{0, 0, 0};
  e.cellType = CellType::Quad;
  e.corners = {Vec2{x0, y0}, Vec2{x0 + hx, y0}, Vec2{x0 + hx, y0 + hy}, Vec2{x0, y0 + hy}};
  e.map = AffineMap({hx, 0.0}, {0.0, hy}, {x0, y0});
  e.area = hx * hy;
  e.diameter = std::hypot(hx, hy);
  return e;
}

inline Element triangleElement(Vec2 v0, Vec2 v1, Vec2 v2)
{
  Element e;
  e.id = ElementId{0, 0, 0};
  e.cellType = CellType::Triangle;
  e.corners = {v0, v1, v2, Vec2{}};
  e.map = AffineMap(v1 - v0, v2 - v0, v0);
  e.area = 0.5 * e.map.jacobianDeterminant();
  e.diameter = std::max({(v1 - v0).norm(), (v2 - v1).norm(), (v0 - v2).norm()});
  return e;
}

inline std::string unitSquareMacro()
{
  return "DIM 2\nCELLTYPE quad\n"
         "VERTEX 0 0\nVERTEX 1 0\nVERTEX 1 1\nVERTEX 0 1\n"
         "CELL 0 1 2 3\n";
}

inline std::string twoSquaresMacro()
{
  return "DIM 2\nCELLTYPE quad\n"
         "VERTEX 0 0\nVERTEX 1 0\nVERTEX 2 0\n"
         "VERTEX 0 1\nVERTEX 1 1\nVERTEX 2 1\n"
         "CELL 0 1 4 3\nCELL 1 2 5 4\n";
}

inline std::string squareGridMacro(int cells, double extent = 1.0)
{
  std::ostringstream out;
  out << "DIM 2\nCELLTYPE quad\n";
  const double h = extent / cells;
  for (int j = 0; j <= cells; ++j)
    for (int i = 0; i <= cells; ++i)
      out << "VERTEX " << i * h << " " << j * h << "\n";
  auto v = [cells](int i, int j) { return j * (cells + 1) + i; };
  for (int j = 0; j < cells; ++j)
    for (int i = 0; i < cells; ++i)
      out << "CELL " << v(i, j) << " " << v(i + 1, j) << " " << v(i + 1, j + 1) << " " << v(i, j + 1)
          << "\n";
  return out.str();
}

inline std::string twoTrianglesMacro()
{
  return "DIM 2\nCELLTYPE triangle\n"
         "VERTEX 0 0\nVERTEX 1 0\nVERTEX 1 1\nVERTEX 0 1\n"
         "CELL 0 1 2\nCELL 0 2 3\n";
}

inline Vec2 randomPoint(std::mt19937 &rng, CellType cellType)
{
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Vec2 p{dist(rng), dist(rng)};
  if (cellType == CellType::Triangle && p.x + p.y > 1.0)
    p = {1.0 - p.x, 1.0 - p.y};
  return p;
}

} // namespace hpdg::testing

#endif
