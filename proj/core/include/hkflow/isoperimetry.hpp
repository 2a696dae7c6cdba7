#pragma once

// Weighted sets under a conjugate kernel measure: mass, perimeter, the
// Gaussian-profile comparison, exact enlargement, two-set and one-sided
// concentration, Lipschitz quantiles with exponential tails, and a Cheeger
// constant certificate. Every set lives on the 1-D reduced coordinate, so
// each region is a finite union of coordinate intervals and its geometry
// (boundary atoms, metric neighborhoods, distances) is exact rather than
// rasterized.

#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

#include "hkflow/flow.hpp"
#include "hkflow/heat.hpp"

namespace hkflow::iso {

enum class SetKind { Empty, Full, Interval, Cap, SubLevel, Union };

// Region at one flow time. Interval sets wrap on the torus when lo > hi;
// the Euclidean window models the line, so there they must not wrap. Caps
// are polar sets {theta <= angle} on sphere kinds. SubLevel is {h < level}
// of a nodal field with boundary located by linear interpolation inside
// crossing cells.
struct WeightedSet {
  SetKind kind = SetKind::Empty;
  double time = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double angle = 0.0;
  geom::DiscreteField level_field;
  double level = 0.0;
  std::vector<std::pair<double, double>> pieces;  // Union kind only
};

WeightedSet empty_set(double s);
WeightedSet full_set(double s);
WeightedSet interval_set(double lo, double hi, double s);
WeightedSet lower_set(double c, double s);  // {x <= c} on flat kinds
WeightedSet upper_set(double c, double s);  // {x >= c} on flat kinds
WeightedSet cap_set(double angle, double s);
WeightedSet sub_level_set(const geom::DiscreteField& h, double level);

// Canonical realization of the set on a metric sample: disjoint sorted
// coordinate intervals clipped to the domain. Pieces meeting at the torus
// wrap stay split here; boundary extraction glues them.
std::vector<std::pair<double, double>> region_pieces(
    const WeightedSet& set, const geom::MetricSample& m);

// Kernel mass of the set. The density is integrated between exact region
// endpoints with per-cell Gauss-Legendre panels: closed forms on the flat
// kinds, cubic interpolation of the stored density on sphere kinds.
// Monotone under set inclusion by construction.
double nu_measure(const geom::FlowFamily& flow,
                  const heat::KernelMeasure& nu, const WeightedSet& set);

// Integral of a pointwise coordinate function against the kernel measure
// over the whole domain, with the same per-cell panels and density
// evaluation as nu_measure. `breaks` lists coordinates where the integrand
// kinks so panels split there instead of straddling the kink.
double nu_integral(const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
                   const std::function<double(double)>& g,
                   const std::vector<double>& breaks = {});

// Same integral restricted to the region described by the set. The set must
// live at the measure time.
double nu_integral(const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
                   const std::function<double(double)>& g,
                   const WeightedSet& set, const std::vector<double>& breaks = {});

// Metric volume of the region at the set's time slice: piece lengths on the
// flat kinds, the area-weighted integral on sphere kinds.
double set_volume(const geom::FlowFamily& flow, const WeightedSet& set);

// Boundary integral of the kernel density with metric boundary weights:
// point atoms on the flat kinds, parallel-circle lengths on spheres. A set
// whose description yields more boundary components than the local route
// can resolve falls back to the relaxation liminf and notes it on stderr.
double weighted_perimeter(const geom::FlowFamily& flow,
                          const heat::KernelMeasure& nu,
                          const WeightedSet& set);

// Mollified-gradient relaxation of the perimeter. The indicator is relaxed
// to Phi(d/w) with d the signed metric distance to the boundary, the exact
// mollifier gradient phi(d/w)/w is integrated against the measure at widths
// {4h, 2h, h}, `extrapolated` cancels the leading O(w^2) term from the two
// coarser widths, and `liminf` is the schedule minimum.
struct RelaxationSchedule {
  std::vector<double> width;
  std::vector<double> value;
  double extrapolated = 0.0;
  double liminf = 0.0;
};
RelaxationSchedule relaxed_perimeter(const geom::FlowFamily& flow,
                                     const heat::KernelMeasure& nu,
                                     const WeightedSet& set);

// Sharp Gaussian comparison: perimeter >= profile(mass) / sqrt(2 tau), with
// tau the kernel's time gap. Halfspaces on the flat window attain equality.
struct ProfileReport {
  double mass = 0.0;
  double perimeter = 0.0;
  double bound = 0.0;
  double margin = 0.0;  // perimeter - bound
};
ProfileReport profile_check(const geom::FlowFamily& flow,
                            const heat::KernelMeasure& nu,
                            const WeightedSet& set);

// Open metric r-neighborhood, computed exactly on the interval-union
// representation (endpoints advanced by metric arc length r, overlaps
// merged, wrap handled on the torus). r = 0 returns the set unchanged.
WeightedSet enlarge(const geom::FlowFamily& flow, const WeightedSet& set,
                    double r);

// Enlargement against the Gaussian drift: nu(E_r) >= Phi(Phi^{-1}(nu(E)) +
// r / sqrt(2 tau)). `drift` = Phi^{-1}(nu(E_r)) - r / sqrt(2 tau) is
// nondecreasing in r up to quadrature error.
struct EnlargementRow {
  double r = 0.0;
  double mass = 0.0;
  double bound = 0.0;
  double margin = 0.0;  // mass - bound
  double drift = 0.0;
};
std::vector<EnlargementRow> enlargement_check(
    const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
    const WeightedSet& set, const std::vector<double>& radii);

// Metric distance between the regions: 0 when they overlap or touch,
// +infinity when either is empty.
double set_distance(const geom::FlowFamily& flow, const WeightedSet& a,
                    const WeightedSet& b);

// Separated-set concentration. Quantile form: Phi^{-1}(nu(A)) +
// Phi^{-1}(nu(B)) <= -d / sqrt(2 tau). Product form: nu(A) nu(B) <=
// Phi(-d / (2 sqrt(2 tau)))^2 <= exp(-d^2 / (8 tau)). Touching sets are a
// domain error; an empty side satisfies both forms trivially.
struct TwoSetReport {
  double dist = 0.0;
  double mass_a = 0.0;
  double mass_b = 0.0;
  double quantile_lhs = 0.0;
  double quantile_rhs = 0.0;
  double product = 0.0;
  double product_bound = 0.0;
  double product_exp_bound = 0.0;
  bool quantile_ok = false;
  bool product_ok = false;
};
TwoSetReport two_set_check(const geom::FlowFamily& flow,
                           const heat::KernelMeasure& nu,
                           const WeightedSet& a, const WeightedSet& b);

// One-sided form: if nu(B) >= beta then nu(A) <= 1 - Phi(Phi^{-1}(beta) +
// d / sqrt(2 tau)). beta outside (0, nu(B)] violates the precondition.
struct OneSidedReport {
  double dist = 0.0;
  double mass_a = 0.0;
  double mass_b = 0.0;
  double beta = 0.0;
  double bound = 0.0;
  double margin = 0.0;  // bound - mass_a
};
OneSidedReport one_sided_check(const geom::FlowFamily& flow,
                               const heat::KernelMeasure& nu,
                               const WeightedSet& a, const WeightedSet& b,
                               double beta);

// a-quantile of a nodal observable under nu with the left-continuous
// infimum convention: value = inf{r : nu(F <= r) >= a}, located by
// bisection on the continuous sub-level mass.
struct QuantileRecord {
  double level = 0.0;
  double value = 0.0;
};
QuantileRecord quantile_of(const geom::FlowFamily& flow,
                           const heat::KernelMeasure& nu,
                           const geom::DiscreteField& F, double a);

// Quantile gaps, symmetric median tails, and exponential integrability for
// an L-Lipschitz observable. The Lipschitz constant is verified cell by
// cell against metric cell lengths (the Euclidean window's wrap cell is an
// artifact of the surrogate and is exempt). Tail rows bound the symmetric
// tail nu(|F - m| >= r) by 2 (1 - Phi(r / (L sqrt(2 tau)))); the
// exponential row bounds int exp(lambda |F - m|) dnu by
// 2 exp(tau L^2 lambda^2) Phi(lambda L sqrt(2 tau)).
struct QuantilePairRow {
  double a = 0.0;
  double b = 0.0;
  double qa = 0.0;
  double qb = 0.0;
  double gap = 0.0;
  double bound = 0.0;
  double margin = 0.0;  // bound - gap
};
struct TailRow {
  double r = 0.0;
  double mass = 0.0;
  double bound = 0.0;
  double margin = 0.0;  // bound - mass
};
struct LipschitzReport {
  double lip = 0.0;
  double median = 0.0;
  std::vector<QuantilePairRow> pairs;
  std::vector<TailRow> tails;
  double exp_lambda = 0.0;
  double exp_value = 0.0;
  double exp_bound = 0.0;
  double exp_margin = 0.0;  // exp_bound - exp_value
};
LipschitzReport lipschitz_quantile_check(
    const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
    const geom::DiscreteField& F, double lip,
    const std::vector<std::pair<double, double>>& level_pairs,
    const std::vector<double>& tail_radii, double exp_lambda);

// Cheeger ratio Per / min(mass, 1 - mass) minimized over a candidate
// family, certified against the model lower bound 1 / sqrt(pi tau).
// Candidates of degenerate mass violate the precondition.
struct CheegerRow {
  double mass = 0.0;
  double perimeter = 0.0;
  double ratio = 0.0;
};
struct CheegerReport {
  double best = 0.0;
  double bound = 0.0;
  std::vector<CheegerRow> rows;
};
CheegerReport cheeger_constant(const geom::FlowFamily& flow,
                               const heat::KernelMeasure& nu,
                               const std::vector<WeightedSet>& candidates);

// CSV table (r,mass,bound,margin,drift), header line included.
void write_enlargement_csv(const std::vector<EnlargementRow>& rows,
                           std::ostream& out);

}  // namespace hkflow::iso
