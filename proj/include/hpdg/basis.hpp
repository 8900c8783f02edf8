#ifndef HPDG_BASIS_HPP
#define HPDG_BASIS_HPP

#include <array>
#include <memory>
#include <span>
#include <vector>

#include <hpdg/mesh.hpp>

namespace hpdg {

constexpr int maxBasisDegree = 10;

// Local polynomial degree, either a single (total or per-direction) degree or
// one degree per spatial direction.
class Key
{
public:
  Key() = default;

  static Key iso(int k) { return Key(k, k, false); }
  static Key aniso(int kx, int ky) { return Key(kx, ky, true); }

  bool anisotropic() const { return aniso_; }
  int degreeX() const { return kx_; }
  int degreeY() const { return ky_; }
  int maxDegree() const { return kx_ > ky_ ? kx_ : ky_; }

  bool operator==(const Key &) const = default;

private:
  Key(int kx, int ky, bool aniso) : kx_(kx), ky_(ky), aniso_(aniso) {}

  int kx_ = 0;
  int ky_ = 0;
  bool aniso_ = false;
};

enum class BasisFamilyKind { Orthonormal, LegendreTensor, AnisotropicLegendre };

// Immutable per-(family, cell type, key) evaluation data. All sets evaluate as
// linear combinations of products of normalized shifted Legendre polynomials;
// for the tensor families the combination degenerates to a per-function scale.
struct ModalTable
{
  BasisFamilyKind familyKind = BasisFamilyKind::Orthonormal;
  CellType cellType = CellType::Quad;
  Key key;
  int size = 0;
  int maxDegree1d = 0;
  std::vector<std::array<int, 2>> products; // 1D degree pair per product function
  std::vector<double> coeff;                // row-major size x products.size(); empty = diagonal
  std::vector<double> scale;                // used when coeff is empty
  std::vector<double> referenceMassCholesky; // lower factor, row-major size x size
};

// Evaluable local basis B_{E,k} on one element. The physical functions are the
// reference functions composed with the inverse reference map.
class BasisFunctionSet
{
public:
  BasisFunctionSet() = default;
  BasisFunctionSet(const Element &element, std::shared_ptr<const ModalTable> table)
    : element_(element), table_(std::move(table))
  {
  }

  int size() const { return table_->size; }
  const Key &key() const { return table_->key; }
  const Element &element() const { return element_; }
  const AffineMap &geometry() const { return element_.map; }
  const ModalTable &table() const { return *table_; }

  // values of all functions at a reference point
  void evaluateAll(Vec2 ref, std::span<double> values) const;
  // reference gradients of all functions
  void gradientAll(Vec2 ref, std::span<Vec2> refGradients) const;
  // reference Hessians (xx, xy, yy) of all functions
  void hessianAll(Vec2 ref, std::span<std::array<double, 3>> refHessians) const;

  Vec2 physicalGradient(Vec2 refGradient) const { return element_.map.gradientToPhysical(refGradient); }

  // solves M c = rhs with the reference mass matrix
  void solveReferenceMass(std::span<double> rhs) const;

private:
  Element element_;
  std::shared_ptr<const ModalTable> table_;
};

// A family of local basis function sets: everything a discrete function space
// needs to know about its local ansatz spaces. The size of a set depends only
// on the reference element and the key.
class BasisFamily
{
public:
  virtual ~BasisFamily() = default;

  virtual BasisFamilyKind kind() const = 0;
  virtual bool admissible(CellType cellType, const Key &key) const = 0;
  virtual int blocks(CellType cellType, const Key &key) const = 0;
  virtual BasisFunctionSet basisFunctionSet(const Element &element, const Key &key) const = 0;
};

// L^2(R)-orthonormalized monomials, ordered by total degree ascending with
// ties broken by descending x-exponent. Supports quads and triangles, iso keys.
class OrthonormalBasisFamily final : public BasisFamily
{
public:
  BasisFamilyKind kind() const override { return BasisFamilyKind::Orthonormal; }
  bool admissible(CellType cellType, const Key &key) const override;
  int blocks(CellType cellType, const Key &key) const override;
  BasisFunctionSet basisFunctionSet(const Element &element, const Key &key) const override;
};

// Products of shifted Legendre polynomials p_i on [0,1] with 0 <= alpha_i <= k,
// restricted to axis-aligned quads.
class LegendreTensorBasisFamily final : public BasisFamily
{
public:
  BasisFamilyKind kind() const override { return BasisFamilyKind::LegendreTensor; }
  bool admissible(CellType cellType, const Key &key) const override;
  int blocks(CellType cellType, const Key &key) const override;
  BasisFunctionSet basisFunctionSet(const Element &element, const Key &key) const override;
};

// Tensor Legendre basis with a separate degree bound per direction.
class AnisotropicLegendreBasisFamily final : public BasisFamily
{
public:
  BasisFamilyKind kind() const override { return BasisFamilyKind::AnisotropicLegendre; }
  bool admissible(CellType cellType, const Key &key) const override;
  int blocks(CellType cellType, const Key &key) const override;
  BasisFunctionSet basisFunctionSet(const Element &element, const Key &key) const override;
};

const BasisFamily &basisFamily(BasisFamilyKind kind);

// Shifted Legendre polynomial p_i(x) = (1/i!) d^i/dx^i [(x^2-x)^i] on [0,1]
// and its first derivative; \int_0^1 p_i p_j = delta_ij / (2i+1).
double shiftedLegendreValue(int i, double x);
double shiftedLegendreDerivative(int i, double x);

// Values (and optional derivatives) of sqrt(2i+1) p_i(x) for i = 0..maxDegree.
void normalizedShiftedLegendre(int maxDegree, double x, double *values, double *d1 = nullptr, double *d2 = nullptr);

// number of monomials of total degree <= k in two variables
constexpr int totalDegreeSpaceSize(int k) { return (k + 1) * (k + 2) / 2; }

} // namespace hpdg

#endif // HPDG_BASIS_HPP
