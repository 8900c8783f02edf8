#include <hpdg/basis.hpp>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

#include <hpdg/quadrature.hpp>

namespace hpdg {

// ---------------------------------------------------------------------------
// 1D shifted Legendre polynomials
// ---------------------------------------------------------------------------

namespace {

// values and derivatives of the standard Legendre polynomials at t via the
// derivative-safe recurrences P'_{i+1} = (2i+1) P_i + P'_{i-1}
void legendreStandard(int maxDegree, double t, double *v, double *d1, double *d2)
{
  v[0] = 1.0;
  if (d1)
    d1[0] = 0.0;
  if (d2)
    d2[0] = 0.0;
  if (maxDegree == 0)
    return;
  v[1] = t;
  if (d1)
    d1[1] = 1.0;
  if (d2)
    d2[1] = 0.0;
  for (int i = 1; i < maxDegree; ++i) {
    v[i + 1] = ((2 * i + 1) * t * v[i] - i * v[i - 1]) / (i + 1);
    if (d1)
      d1[i + 1] = (2 * i + 1) * v[i] + d1[i - 1];
    if (d2)
      d2[i + 1] = (2 * i + 1) * d1[i] + d2[i - 1];
  }
}

thread_local std::vector<double> tlsA, tlsB, tlsC, tlsD, tlsE, tlsF;

} // namespace

void normalizedShiftedLegendre(int maxDegree, double x, double *values, double *d1, double *d2)
{
  const double t = 2.0 * x - 1.0;
  legendreStandard(maxDegree, t, values, d1, d2);
  for (int i = 0; i <= maxDegree; ++i) {
    const double norm = std::sqrt(2.0 * i + 1.0);
    values[i] *= norm;
    if (d1)
      d1[i] *= 2.0 * norm; // chain rule dt/dx = 2
    if (d2)
      d2[i] *= 4.0 * norm;
  }
}

double shiftedLegendreValue(int i, double x)
{
  std::vector<double> v(i + 1);
  legendreStandard(i, 2.0 * x - 1.0, v.data(), nullptr, nullptr);
  return v[i];
}

double shiftedLegendreDerivative(int i, double x)
{
  std::vector<double> v(i + 1), d(i + 1);
  legendreStandard(i, 2.0 * x - 1.0, v.data(), d.data(), nullptr);
  return 2.0 * d[i];
}

// ---------------------------------------------------------------------------
// table construction
// ---------------------------------------------------------------------------

namespace {

using qfloat = __float128;

qfloat qsqrt(qfloat x)
{
  qfloat s = static_cast<qfloat>(std::sqrt(static_cast<double>(x)));
  for (int it = 0; it < 3; ++it)
    s = static_cast<qfloat>(0.5) * (s + x / s);
  return s;
}

// monomials x^a y^b with a+b <= k: total degree ascending, x-exponent descending
std::vector<std::array<int, 2>> monomialOrder(int k)
{
  std::vector<std::array<int, 2>> out;
  for (int d = 0; d <= k; ++d)
    for (int a = d; a >= 0; --a)
      out.push_back({a, d - a});
  return out;
}

void referenceMassCholesky(ModalTable &table)
{
  const int n = table.size;
  const int order = 2 * table.maxDegree1d + 2;
  const QuadratureRule &rule =
      table.cellType == CellType::Quad ? tensorSquare(order) : triangleRule(order);

  // temporary set on the reference element itself
  Element ref;
  ref.cellType = table.cellType;
  BasisFunctionSet set(ref, std::shared_ptr<const ModalTable>(&table, [](const ModalTable *) {}));

  std::vector<double> mass(static_cast<std::size_t>(n) * n, 0.0);
  std::vector<double> values(n);
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    set.evaluateAll(rule.points[q], values);
    const double w = rule.weights[q];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j)
        mass[i * n + j] += w * values[i] * values[j];
  }

  // in-place Cholesky of the lower triangle
  for (int j = 0; j < n; ++j) {
    double d = mass[j * n + j];
    for (int t = 0; t < j; ++t)
      d -= mass[j * n + t] * mass[j * n + t];
    if (!(d > 0.0))
      throw std::runtime_error("basis: singular reference mass matrix");
    const double lj = std::sqrt(d);
    mass[j * n + j] = lj;
    for (int i = j + 1; i < n; ++i) {
      double s = mass[i * n + j];
      for (int t = 0; t < j; ++t)
        s -= mass[i * n + t] * mass[j * n + t];
      mass[i * n + j] = s / lj;
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      mass[i * n + j] = 0.0;
  table.referenceMassCholesky = std::move(mass);
}

// Gram-Schmidt orthonormalization of the lexicographically ordered monomials,
// realized as a Cholesky factorization of the analytic monomial Gram matrix in
// quadruple precision; the result is expressed over products of normalized
// shifted Legendre polynomials for numerically stable evaluation.
std::shared_ptr<ModalTable> buildOrthonormalTable(CellType cell, int k)
{
  const auto mons = monomialOrder(k);
  const int n = static_cast<int>(mons.size());

  std::vector<qfloat> fact(4 * k + 4);
  fact[0] = static_cast<qfloat>(1);
  for (std::size_t i = 1; i < fact.size(); ++i)
    fact[i] = fact[i - 1] * static_cast<qfloat>(i);

  std::vector<qfloat> G(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int a = mons[i][0] + mons[j][0];
      const int b = mons[i][1] + mons[j][1];
      if (cell == CellType::Quad)
        G[i * n + j] = static_cast<qfloat>(1) / static_cast<qfloat>((a + 1) * (b + 1));
      else
        G[i * n + j] = fact[a] * fact[b] / fact[a + b + 2];
    }

  // Cholesky G = L L^T
  std::vector<qfloat> L(static_cast<std::size_t>(n) * n, static_cast<qfloat>(0));
  for (int j = 0; j < n; ++j) {
    qfloat d = G[j * n + j];
    for (int t = 0; t < j; ++t)
      d -= L[j * n + t] * L[j * n + t];
    L[j * n + j] = qsqrt(d);
    for (int i = j + 1; i < n; ++i) {
      qfloat s = G[i * n + j];
      for (int t = 0; t < j; ++t)
        s -= L[i * n + t] * L[j * n + t];
      L[i * n + j] = s / L[j * n + j];
    }
  }

  // C = L^{-1}, lower triangular with positive diagonal: fixes the
  // leading-coefficient-positive sign convention
  std::vector<qfloat> C(static_cast<std::size_t>(n) * n, static_cast<qfloat>(0));
  for (int i = 0; i < n; ++i) {
    C[i * n + i] = static_cast<qfloat>(1) / L[i * n + i];
    for (int j = i - 1; j >= 0; --j) {
      qfloat s = static_cast<qfloat>(0);
      for (int t = j; t < i; ++t)
        s += L[i * n + t] * C[t * n + j];
      C[i * n + j] = -s / L[i * n + i];
    }
  }

  // monomial-to-Legendre transfer: x^a = sum_i s[a][i] p_i(x) with
  // s[a][i] = (2i+1) (a!)^2 / ((a-i)! (a+i+1)!)
  std::vector<std::vector<qfloat>> s(k + 1, std::vector<qfloat>(k + 1, static_cast<qfloat>(0)));
  for (int a = 0; a <= k; ++a)
    for (int i = 0; i <= a; ++i)
      s[a][i] = static_cast<qfloat>(2 * i + 1) * fact[a] * fact[a] / (fact[a - i] * fact[a + i + 1]);

  auto table = std::make_shared<ModalTable>();
  table->familyKind = BasisFamilyKind::Orthonormal;
  table->cellType = cell;
  table->key = Key::iso(k);
  table->size = n;
  table->maxDegree1d = k;
  table->products = mons; // the product index set {(i,l) : i+l <= k}

  std::vector<qfloat> W(static_cast<std::size_t>(n) * n, static_cast<qfloat>(0));
  for (int r = 0; r < n; ++r)
    for (int q = 0; q < n; ++q) {
      const int pi = mons[q][0], pl = mons[q][1];
      qfloat acc = static_cast<qfloat>(0);
      for (int j = 0; j <= r; ++j) {
        const int a = mons[j][0], b = mons[j][1];
        if (pi <= a && pl <= b)
          acc += C[r * n + j] * s[a][pi] * s[b][pl];
      }
      W[r * n + q] = acc / qsqrt(static_cast<qfloat>((2 * pi + 1) * (2 * pl + 1)));
    }

  table->coeff.resize(W.size());
  for (std::size_t i = 0; i < W.size(); ++i)
    table->coeff[i] = static_cast<double>(W[i]);

  referenceMassCholesky(*table);
  return table;
}

std::shared_ptr<ModalTable> buildTensorTable(BasisFamilyKind kind, int kx, int ky)
{
  auto table = std::make_shared<ModalTable>();
  table->familyKind = kind;
  table->cellType = CellType::Quad;
  table->key = kind == BasisFamilyKind::AnisotropicLegendre ? Key::aniso(kx, ky) : Key::iso(kx);
  table->size = (kx + 1) * (ky + 1);
  table->maxDegree1d = std::max(kx, ky);
  for (int b = 0; b <= ky; ++b)
    for (int a = 0; a <= kx; ++a) {
      table->products.push_back({a, b});
      // unnormalized products p_a p_b
      table->scale.push_back(1.0 / std::sqrt(static_cast<double>((2 * a + 1) * (2 * b + 1))));
    }
  referenceMassCholesky(*table);
  return table;
}

std::shared_ptr<const ModalTable> tableFor(BasisFamilyKind kind, CellType cell, const Key &key)
{
  using CacheKey = std::tuple<int, int, int, int, int>;
  static std::mutex mutex;
  static std::map<CacheKey, std::shared_ptr<const ModalTable>> cache;

  const CacheKey ck{static_cast<int>(kind), static_cast<int>(cell), key.degreeX(), key.degreeY(),
                    key.anisotropic() ? 1 : 0};
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(ck);
  if (it == cache.end()) {
    std::shared_ptr<const ModalTable> table;
    if (kind == BasisFamilyKind::Orthonormal)
      table = buildOrthonormalTable(cell, key.degreeX());
    else
      table = buildTensorTable(kind, key.degreeX(), key.degreeY());
    it = cache.emplace(ck, std::move(table)).first;
  }
  return it->second;
}

void checkDegreeRange(const Key &key)
{
  if (key.degreeX() < 0 || key.degreeY() < 0 || key.maxDegree() > maxBasisDegree)
    throw std::invalid_argument("basis degree out of supported range [0, 10]");
}

} // namespace

// ---------------------------------------------------------------------------
// BasisFunctionSet evaluation
// ---------------------------------------------------------------------------

void BasisFunctionSet::evaluateAll(Vec2 ref, std::span<double> values) const
{
  const ModalTable &t = *table_;
  const int n1 = t.maxDegree1d + 1;
  tlsA.resize(n1);
  tlsB.resize(n1);
  normalizedShiftedLegendre(t.maxDegree1d, ref.x, tlsA.data());
  normalizedShiftedLegendre(t.maxDegree1d, ref.y, tlsB.data());

  const std::size_t np = t.products.size();
  if (t.coeff.empty()) {
    for (std::size_t q = 0; q < np; ++q)
      values[q] = t.scale[q] * tlsA[t.products[q][0]] * tlsB[t.products[q][1]];
    return;
  }
  tlsC.resize(np);
  for (std::size_t q = 0; q < np; ++q)
    tlsC[q] = tlsA[t.products[q][0]] * tlsB[t.products[q][1]];
  for (int r = 0; r < t.size; ++r) {
    const double *row = t.coeff.data() + static_cast<std::size_t>(r) * np;
    double acc = 0.0;
    for (std::size_t q = 0; q < np; ++q)
      acc += row[q] * tlsC[q];
    values[r] = acc;
  }
}

void BasisFunctionSet::gradientAll(Vec2 ref, std::span<Vec2> refGradients) const
{
  const ModalTable &t = *table_;
  const int n1 = t.maxDegree1d + 1;
  tlsA.resize(n1);
  tlsB.resize(n1);
  tlsC.resize(n1);
  tlsD.resize(n1);
  normalizedShiftedLegendre(t.maxDegree1d, ref.x, tlsA.data(), tlsC.data());
  normalizedShiftedLegendre(t.maxDegree1d, ref.y, tlsB.data(), tlsD.data());

  const std::size_t np = t.products.size();
  if (t.coeff.empty()) {
    for (std::size_t q = 0; q < np; ++q) {
      const int a = t.products[q][0], b = t.products[q][1];
      refGradients[q] = {t.scale[q] * tlsC[a] * tlsB[b], t.scale[q] * tlsA[a] * tlsD[b]};
    }
    return;
  }
  tlsE.resize(np);
  tlsF.resize(np);
  for (std::size_t q = 0; q < np; ++q) {
    const int a = t.products[q][0], b = t.products[q][1];
    tlsE[q] = tlsC[a] * tlsB[b];
    tlsF[q] = tlsA[a] * tlsD[b];
  }
  for (int r = 0; r < t.size; ++r) {
    const double *row = t.coeff.data() + static_cast<std::size_t>(r) * np;
    double gx = 0.0, gy = 0.0;
    for (std::size_t q = 0; q < np; ++q) {
      gx += row[q] * tlsE[q];
      gy += row[q] * tlsF[q];
    }
    refGradients[r] = {gx, gy};
  }
}

void BasisFunctionSet::hessianAll(Vec2 ref, std::span<std::array<double, 3>> refHessians) const
{
  const ModalTable &t = *table_;
  const int n1 = t.maxDegree1d + 1;
  std::vector<double> vx(n1), dx(n1), hx(n1), vy(n1), dy(n1), hy(n1);
  normalizedShiftedLegendre(t.maxDegree1d, ref.x, vx.data(), dx.data(), hx.data());
  normalizedShiftedLegendre(t.maxDegree1d, ref.y, vy.data(), dy.data(), hy.data());

  const std::size_t np = t.products.size();
  auto productHessian = [&](std::size_t q) -> std::array<double, 3> {
    const int a = t.products[q][0], b = t.products[q][1];
    return {hx[a] * vy[b], dx[a] * dy[b], vx[a] * hy[b]};
  };
  if (t.coeff.empty()) {
    for (std::size_t q = 0; q < np; ++q) {
      auto h = productHessian(q);
      refHessians[q] = {t.scale[q] * h[0], t.scale[q] * h[1], t.scale[q] * h[2]};
    }
    return;
  }
  std::vector<std::array<double, 3>> e(np);
  for (std::size_t q = 0; q < np; ++q)
    e[q] = productHessian(q);
  for (int r = 0; r < t.size; ++r) {
    const double *row = t.coeff.data() + static_cast<std::size_t>(r) * np;
    std::array<double, 3> acc{0.0, 0.0, 0.0};
    for (std::size_t q = 0; q < np; ++q) {
      acc[0] += row[q] * e[q][0];
      acc[1] += row[q] * e[q][1];
      acc[2] += row[q] * e[q][2];
    }
    refHessians[r] = acc;
  }
}

void BasisFunctionSet::solveReferenceMass(std::span<double> rhs) const
{
  const ModalTable &t = *table_;
  const int n = t.size;
  const double *L = t.referenceMassCholesky.data();
  // L y = rhs
  for (int i = 0; i < n; ++i) {
    double s = rhs[i];
    for (int j = 0; j < i; ++j)
      s -= L[i * n + j] * rhs[j];
    rhs[i] = s / L[i * n + i];
  }
  // L^T c = y
  for (int i = n - 1; i >= 0; --i) {
    double s = rhs[i];
    for (int j = i + 1; j < n; ++j)
      s -= L[j * n + i] * rhs[j];
    rhs[i] = s / L[i * n + i];
  }
}

// ---------------------------------------------------------------------------
// families
// ---------------------------------------------------------------------------

bool OrthonormalBasisFamily::admissible(CellType, const Key &key) const
{
  return !key.anisotropic() && key.degreeX() >= 0 && key.maxDegree() <= maxBasisDegree;
}

int OrthonormalBasisFamily::blocks(CellType, const Key &key) const
{
  if (key.anisotropic())
    throw std::invalid_argument("orthonormal basis requires an iso key");
  checkDegreeRange(key);
  return totalDegreeSpaceSize(key.degreeX());
}

BasisFunctionSet OrthonormalBasisFamily::basisFunctionSet(const Element &element, const Key &key) const
{
  if (key.anisotropic())
    throw std::invalid_argument("orthonormal basis requires an iso key");
  checkDegreeRange(key);
  return {element, tableFor(BasisFamilyKind::Orthonormal, element.cellType, key)};
}

bool LegendreTensorBasisFamily::admissible(CellType cellType, const Key &key) const
{
  return cellType == CellType::Quad && !key.anisotropic() && key.maxDegree() <= maxBasisDegree;
}

int LegendreTensorBasisFamily::blocks(CellType cellType, const Key &key) const
{
  if (cellType != CellType::Quad)
    throw std::invalid_argument("Legendre tensor basis requires axis-aligned quad cells");
  if (key.anisotropic())
    throw std::invalid_argument("Legendre tensor basis requires an iso key");
  checkDegreeRange(key);
  const int k = key.degreeX();
  return (k + 1) * (k + 1);
}

BasisFunctionSet LegendreTensorBasisFamily::basisFunctionSet(const Element &element, const Key &key) const
{
  blocks(element.cellType, key); // validates
  return {element, tableFor(BasisFamilyKind::LegendreTensor, CellType::Quad, key)};
}

bool AnisotropicLegendreBasisFamily::admissible(CellType cellType, const Key &key) const
{
  return cellType == CellType::Quad && key.maxDegree() <= maxBasisDegree;
}

int AnisotropicLegendreBasisFamily::blocks(CellType cellType, const Key &key) const
{
  if (cellType != CellType::Quad)
    throw std::invalid_argument("anisotropic Legendre basis requires axis-aligned quad cells");
  checkDegreeRange(key);
  return (key.degreeX() + 1) * (key.degreeY() + 1);
}

BasisFunctionSet AnisotropicLegendreBasisFamily::basisFunctionSet(const Element &element, const Key &key) const
{
  blocks(element.cellType, key);
  return {element, tableFor(BasisFamilyKind::AnisotropicLegendre, CellType::Quad, key)};
}

const BasisFamily &basisFamily(BasisFamilyKind kind)
{
  static const OrthonormalBasisFamily orthonormal;
  static const LegendreTensorBasisFamily legendre;
  static const AnisotropicLegendreBasisFamily anisotropic;
  switch (kind) {
  case BasisFamilyKind::Orthonormal:
    return orthonormal;
  case BasisFamilyKind::LegendreTensor:
    return legendre;
  default:
    return anisotropic;
  }
}

} // namespace hpdg
