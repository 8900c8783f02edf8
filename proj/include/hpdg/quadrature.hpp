#ifndef HPDG_QUADRATURE_HPP
#define HPDG_QUADRATURE_HPP

#include <vector>

#include <hpdg/geometry.hpp>

namespace hpdg {

// Gauss rule on the reference segment [0,1].
struct SegmentRule
{
  std::vector<double> points;
  std::vector<double> weights;
  int order = 0;
};

// Rule on the reference square [0,1]^2 or the reference triangle {x,y >= 0, x+y <= 1}.
struct QuadratureRule
{
  std::vector<Vec2> points;
  std::vector<double> weights;
  int order = 0;
};

// All rules are exact for polynomials up to the requested order and are cached;
// the returned references stay valid for the lifetime of the program.
const SegmentRule &gaussSegment(int order);
const QuadratureRule &tensorSquare(int order);
const QuadratureRule &triangleRule(int order);

constexpr int maxQuadratureOrder = 30;

} // namespace hpdg

#endif // HPDG_QUADRATURE_HPP
