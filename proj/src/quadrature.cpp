#include <hpdg/quadrature.hpp>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace hpdg {

namespace {

void checkOrder(int order)
{
  if (order < 0 || order > maxQuadratureOrder)
    throw std::invalid_argument("quadrature order out of range [0, 30]: " + std::to_string(order));
}

// Gauss-Legendre nodes on [-1,1] by Newton iteration on P_n, then mapped to [0,1].
SegmentRule makeGaussSegment(int order)
{
  const int n = order / 2 + 1; // exact up to degree 2n-1 >= order
  SegmentRule rule;
  rule.order = 2 * n - 1;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    long double x = std::cos(M_PI * (i + 0.75L) / (n + 0.5L));
    long double p0 = 0.0L, p1 = 0.0L;
    for (int it = 0; it < 100; ++it) {
      p0 = 1.0L;
      p1 = x;
      for (int j = 1; j < n; ++j) {
        const long double p2 = ((2 * j + 1) * x * p1 - j * p0) / (j + 1);
        p0 = p1;
        p1 = p2;
      }
      const long double dp = n * (x * p1 - p0) / (x * x - 1.0L);
      const long double dx = p1 / dp;
      x -= dx;
      if (std::abs((double)dx) < 1e-19)
        break;
    }
    p0 = 1.0L;
    p1 = x;
    for (int j = 1; j < n; ++j) {
      const long double p2 = ((2 * j + 1) * x * p1 - j * p0) / (j + 1);
      p0 = p1;
      p1 = p2;
    }
    const long double dp = n * (x * p1 - p0) / (x * x - 1.0L);
    const long double w = 2.0L / ((1.0L - x * x) * dp * dp);
    // nodes come out in descending order; store ascending on [0,1]
    rule.points[n - 1 - i] = (double)((x + 1.0L) / 2.0L);
    rule.weights[n - 1 - i] = (double)(w / 2.0L);
  }
  return rule;
}

QuadratureRule makeTensorSquare(int order)
{
  const SegmentRule &g = gaussSegment(order);
  QuadratureRule rule;
  rule.order = g.order;
  for (std::size_t j = 0; j < g.points.size(); ++j)
    for (std::size_t i = 0; i < g.points.size(); ++i) {
      rule.points.push_back({g.points[i], g.points[j]});
      rule.weights.push_back(g.weights[i] * g.weights[j]);
    }
  return rule;
}

// Collapsed (Duffy) rule: (x, y) in [0,1]^2 -> (x, y (1-x)), Jacobian (1-x).
// A polynomial of total degree k becomes degree k+1 in x (with the Jacobian)
// and degree k in y.
QuadratureRule makeTriangle(int order)
{
  const SegmentRule &gx = gaussSegment(order + 1);
  const SegmentRule &gy = gaussSegment(order);
  QuadratureRule rule;
  rule.order = order;
  for (std::size_t i = 0; i < gx.points.size(); ++i)
    for (std::size_t j = 0; j < gy.points.size(); ++j) {
      const double x = gx.points[i];
      const double y = gy.points[j] * (1.0 - x);
      rule.points.push_back({x, y});
      rule.weights.push_back(gx.weights[i] * gy.weights[j] * (1.0 - x));
    }
  return rule;
}

template <int Tag, class Rule, class Factory>
const Rule &cached(int order, Factory &&factory)
{
  static std::mutex mutex;
  static std::map<int, Rule> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end())
    it = cache.emplace(order, factory(order)).first;
  return it->second;
}

} // namespace

const SegmentRule &gaussSegment(int order)
{
  checkOrder(order);
  return cached<0, SegmentRule>(order, makeGaussSegment);
}

const QuadratureRule &tensorSquare(int order)
{
  checkOrder(order);
  return cached<1, QuadratureRule>(order, makeTensorSquare);
}

const QuadratureRule &triangleRule(int order)
{
  checkOrder(order);
  return cached<2, QuadratureRule>(order, makeTriangle);
}

} // namespace hpdg
