#include <doctest.h>

#include <cmath>

#include <hpdg/quadrature.hpp>

using namespace hpdg;

namespace {

double analyticSquare(int a, int b)
{
  return 1.0 / ((a + 1) * (b + 1));
}

double analyticTriangle(int a, int b)
{
  // a! b! / (a+b+2)!
  double value = 1.0;
  for (int i = 1; i <= a; ++i)
    value *= i;
  for (int i = 1; i <= b; ++i)
    value *= i;
  for (int i = 1; i <= a + b + 2; ++i)
    value /= i;
  return value;
}

} // namespace

TEST_SUITE_BEGIN("quadrature");

TEST_CASE("segment rule integrates x^3 exactly")
{
  const SegmentRule &rule = gaussSegment(3);
  double integral = 0.0;
  for (std::size_t q = 0; q < rule.points.size(); ++q)
    integral += rule.weights[q] * std::pow(rule.points[q], 3);
  CHECK(integral == doctest::Approx(0.25).epsilon(0).scale(1e-15));
}

TEST_CASE("tensor rule integrates x^2 y^2 exactly")
{
  const QuadratureRule &rule = tensorSquare(4);
  double integral = 0.0;
  for (std::size_t q = 0; q < rule.points.size(); ++q)
    integral += rule.weights[q] * rule.points[q].x * rule.points[q].x * rule.points[q].y * rule.points[q].y;
  CHECK(std::abs(integral - 1.0 / 9.0) < 1e-15);
}

TEST_CASE("triangle rule of order 0 integrates constants")
{
  const QuadratureRule &rule = triangleRule(0);
  double integral = 0.0;
  for (const double w : rule.weights)
    integral += w;
  CHECK(std::abs(integral - 0.5) < 1e-15);
}

TEST_CASE("weights are positive and sum to the reference measure")
{
  for (int order = 0; order <= 30; order += 3) {
    double sum = 0.0;
    for (const double w : gaussSegment(order).weights) {
      CHECK(w > 0.0);
      sum += w;
    }
    CHECK(std::abs(sum - 1.0) < 1e-14);

    sum = 0.0;
    for (const double w : tensorSquare(order).weights) {
      CHECK(w > 0.0);
      sum += w;
    }
    CHECK(std::abs(sum - 1.0) < 1e-14);

    sum = 0.0;
    for (const double w : triangleRule(order).weights) {
      CHECK(w > 0.0);
      sum += w;
    }
    CHECK(std::abs(sum - 0.5) < 1e-14);
  }
}

TEST_CASE("exactness sweep against the analytic monomial integrals")
{
  for (int order = 1; order <= 21; order += 4) {
    const QuadratureRule &square = tensorSquare(order);
    const QuadratureRule &triangle = triangleRule(order);
    for (int a = 0; a + 0 <= order; ++a)
      for (int b = 0; a + b <= order; ++b) {
        double sq = 0.0, tr = 0.0;
        for (std::size_t q = 0; q < square.points.size(); ++q)
          sq += square.weights[q] * std::pow(square.points[q].x, a) * std::pow(square.points[q].y, b);
        for (std::size_t q = 0; q < triangle.points.size(); ++q)
          tr += triangle.weights[q] * std::pow(triangle.points[q].x, a) * std::pow(triangle.points[q].y, b);
        CHECK(std::abs(sq - analyticSquare(a, b)) < 1e-13);
        CHECK(std::abs(tr - analyticTriangle(a, b)) < 1e-13);
      }
  }
}

TEST_CASE("order limits are enforced")
{
  CHECK_THROWS_AS(gaussSegment(31), std::invalid_argument);
  CHECK_THROWS_AS(tensorSquare(-1), std::invalid_argument);
  CHECK_THROWS_AS(triangleRule(31), std::invalid_argument);
}

TEST_SUITE_END();
