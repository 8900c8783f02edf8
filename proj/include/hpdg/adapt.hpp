#ifndef HPDG_ADAPT_HPP
#define HPDG_ADAPT_HPP

#include <optional>
#include <unordered_map>
#include <vector>

#include <hpdg/sipg.hpp>
#include <hpdg/space.hpp>

namespace hpdg {

struct ElementIndicator
{
  // squared contributions
  double volume = 0.0;
  double fluxJump = 0.0;
  double valueJump = 0.0;
  double boundary = 0.0;

  double squared() const { return volume + fluxJump + valueJump + boundary; }
  double total() const;
};

struct EstimatorResult
{
  std::unordered_map<ElementId, ElementIndicator, ElementIdHash> local;
  double globalEta = 0.0; // (sum eta_E^2)^(1/2)
};

// Residual-type indicator: volume residual h_E^2/k_E^2 (Pi_{E,k-1}(f + Lap u_h))^2,
// facet flux-jump and value-jump terms, and the boundary mismatch, with the
// flux jump projected onto one degree lower along each facet. Requires k_E >= 1.
EstimatorResult estimate(const DiscreteFunctionSpace &space, const DiscreteFunction &uh,
                         const ProblemData &data);

// Sobolev-index estimate from the decay of the two highest total-degree
// coefficient slices of the local modal expansion; requires k_E >= 3.
// A spectrally resolved expansion (vanishing top slice) returns 100.
double regularityIndex(const DiscreteFunctionSpace &space, const DiscreteFunction &uh,
                       const Element &element);

struct MarkingParameters
{
  double tol = 0.0;
  int kMin = 3;
  int kMax = 8;
  std::optional<double> etaCoarsen; // eta_*,  default TOL / |G|
  std::optional<double> etaRefine;  // eta^*, default TOL / sqrt(|G|)
};

struct HpMarks
{
  AdaptationMarks meshMarks;
  std::vector<std::pair<ElementId, Key>> keyMarks;

  bool any() const { return !meshMarks.empty() || !keyMarks.empty(); }
};

// Marking: eta_E < eta_* coarsens (h if the sibling set allows it, else p);
// eta_E > eta^* refines, in p when the regularity estimate exceeds k_E + 1
// and in h otherwise. h-coarsening is preferred over p-coarsening.
HpMarks markHp(const DiscreteFunctionSpace &space, const EstimatorResult &indicators,
               const DiscreteFunction &uh, const MarkingParameters &params);

// Key transfer under mesh adaptation: refined children inherit the father's
// key, coarsened fathers take the (componentwise) maximum over the children.
std::vector<std::pair<ElementId, Key>> transferDegrees(const AdaptationReport &report,
                                                       const DiscreteFunctionSpace &space);

// Two-stage combined adaptation: (1) adapt the mesh and transfer u_h and the
// keys under the old degrees, (2) apply the pending key marks with the default
// data projection. Returns whether anything changed.
bool hpAdaptCycle(DiscreteFunctionSpace &space, DiscreteFunction &uh, const HpMarks &marks);

} // namespace hpdg

#endif // HPDG_ADAPT_HPP
