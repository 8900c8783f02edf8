#ifndef HPDG_GEOMETRY_HPP
#define HPDG_GEOMETRY_HPP

#include <array>
#include <cmath>

namespace hpdg {

struct Vec2
{
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 other) const { return {x + other.x, y + other.y}; }
  Vec2 operator-(Vec2 other) const { return {x - other.x, y - other.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 &operator+=(Vec2 other) { x += other.x; y += other.y; return *this; }

  double dot(Vec2 other) const { return x * other.x + y * other.y; }
  double cross(Vec2 other) const { return x * other.y - y * other.x; }
  double norm() const { return std::hypot(x, y); }
  double norm2() const { return x * x + y * y; }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

// Affine map x = A x_ref + b from a reference element onto a physical element.
class AffineMap
{
public:
  AffineMap() : AffineMap({1.0, 0.0}, {0.0, 1.0}, {0.0, 0.0}) {}

  AffineMap(Vec2 column0, Vec2 column1, Vec2 offset)
    : a00_(column0.x), a10_(column0.y), a01_(column1.x), a11_(column1.y), b_(offset)
  {
    det_ = a00_ * a11_ - a01_ * a10_;
    const double inv = 1.0 / det_;
    i00_ = a11_ * inv;
    i01_ = -a01_ * inv;
    i10_ = -a10_ * inv;
    i11_ = a00_ * inv;
  }

  Vec2 apply(Vec2 ref) const
  {
    return {a00_ * ref.x + a01_ * ref.y + b_.x, a10_ * ref.x + a11_ * ref.y + b_.y};
  }

  Vec2 applyInverse(Vec2 physical) const
  {
    const Vec2 d = physical - b_;
    return {i00_ * d.x + i01_ * d.y, i10_ * d.x + i11_ * d.y};
  }

  // (DF)^{-T} applied to a reference gradient
  Vec2 gradientToPhysical(Vec2 refGradient) const
  {
    return {i00_ * refGradient.x + i10_ * refGradient.y,
            i01_ * refGradient.x + i11_ * refGradient.y};
  }

  // trace of (DF)^{-T} H (DF)^{-1} for a reference Hessian (hxx, hxy, hyy)
  double laplacianToPhysical(double hxx, double hxy, double hyy) const
  {
    const double c00 = i00_ * i00_ + i10_ * i10_;
    const double c01 = i00_ * i01_ + i10_ * i11_;
    const double c11 = i01_ * i01_ + i11_ * i11_;
    return c00 * hxx + 2.0 * c01 * hxy + c11 * hyy;
  }

  double jacobianDeterminant() const { return det_; }

private:
  double a00_, a10_, a01_, a11_;
  Vec2 b_;
  double det_;
  double i00_, i01_, i10_, i11_;
};

} // namespace hpdg

#endif // HPDG_GEOMETRY_HPP
