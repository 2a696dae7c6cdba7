#pragma once

// H_n-centers of a conjugate kernel measure: points whose mean squared
// distance to the measure stays within the dimensional budget H_n * tau.
// The search minimizes the second distance moment in the reduced
// coordinate; the checks compare measured ball tails, distance quantiles,
// and exponential moments of the excess distance against the
// Gaussian-profile bounds the budget implies.

#include <iosfwd>
#include <vector>

#include "hkflow/flow.hpp"
#include "hkflow/heat.hpp"

namespace hkflow::hn {

// Dimensional budget constant 4 + (n - 1) pi^2 / 2, n >= 1.
double hn_constant(int n);

// Minimizer of z -> int d_s(z, .)^2 dnu together with its moment and the
// budget it is held against. within_budget records whether the defining
// inequality second_moment <= hn * tau holds at the minimizer; on these
// models a failure means the grid or the supplied measure is too coarse,
// so it is reported rather than thrown.
struct HnCenter {
  double z = 0.0;
  double second_moment = 0.0;
  double hn = 0.0;
  double budget = 0.0;  // hn * (t0 - s)
  bool within_budget = false;
};

// Grid scan of the second distance moment followed by golden-section
// refinement of the best bracket. Sphere kinds restrict the scan to the
// symmetry axis (the two poles of the reduced coordinate), which the
// minimizer inherits from the axisymmetric measure. The Euclidean window
// with dim >= 2 models the isotropic Gaussian in dim coordinates: the grid
// carries the marginal along the axis and the moment follows the
// parallel-axis rule (z - x0)^2 + 2 dim tau. Product tori (FlatTorus with
// dim >= 2) are not reduced to one coordinate and are rejected.
HnCenter find_hn_center(const geom::FlowFamily& flow,
                        const heat::KernelMeasure& nu);

// Measured mass outside the ball of radius r around the center against the
// three bounds the budget implies. profile_bound optimizes the Chebyshev
// split 1 - Phi(Phi^{-1}(1 - 1/A) + (r - sqrt(A hn tau)) / sqrt(2 tau))
// over admissible A > 1 (profile_a = 0 and bound 1 when none is
// admissible); median_bound = Phi(-(r - r2) / sqrt(2 tau)) with
// r2 = sqrt(2 hn tau), NaN below r2; exp_bound = exp(-((r - r2)_+)^2 /
// (4 tau)), clamping to 1 below r2. margin is the tightest applicable
// bound minus the measured tail.
struct TailBoundRow {
  double r = 0.0;
  double tail = 0.0;
  double profile_a = 0.0;
  double profile_bound = 1.0;
  double median_bound = 0.0;
  double exp_bound = 1.0;
  double margin = 0.0;
};
std::vector<TailBoundRow> hn_tail_check(const geom::FlowFamily& flow,
                                        const heat::KernelMeasure& nu,
                                        const HnCenter& c,
                                        const std::vector<double>& radii);

// b-quantile of the distance to the center, inf{r : nu(B(z, r)) >= b},
// against the localization bound sqrt(2 hn tau) + sqrt(2 tau) Phi^{-1}(b).
// Requires 1/2 <= b < 1; b = 1/2 is the Chebyshev case whose bound is
// sqrt(2 hn tau) itself.
struct QuantileLocRow {
  double b = 0.0;
  double q = 0.0;
  double bound = 0.0;
  double margin = 0.0;
};
std::vector<QuantileLocRow> quantile_localization_check(
    const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
    const HnCenter& c, const std::vector<double>& bs);

// Exponential moments of the excess distance Y = (d_s(z, .) - r2)_+ with
// r2 = sqrt(2 hn tau). exp_rows: int e^{lambda Y} dnu against the
// half-Gaussian moment 1/2 + e^{tau lambda^2} Phi(lambda sqrt(2 tau));
// distance_rows: int e^{lambda d} dnu against e^{lambda r2} times the
// same; square_rows: int e^{beta Y^2 / tau} dnu against
// 1/2 + (1 - 4 beta)^{-1/2} / 2. lambda < 0 is rejected; beta >= 1/4
// propagates the half-Gaussian domain error.
struct ExcessMomentRow {
  double parameter = 0.0;  // lambda, or beta for square_rows
  double value = 0.0;
  double bound = 0.0;
  double margin = 0.0;
};
struct ExcessMomentReport {
  double offset = 0.0;  // r2 = sqrt(2 hn tau)
  std::vector<ExcessMomentRow> exp_rows;
  std::vector<ExcessMomentRow> distance_rows;
  std::vector<ExcessMomentRow> square_rows;
};
ExcessMomentReport excess_moment_check(const geom::FlowFamily& flow,
                                       const heat::KernelMeasure& nu,
                                       const HnCenter& c,
                                       const std::vector<double>& lambdas,
                                       const std::vector<double>& betas);

// Stochastic domination behind the moment bounds: nu(Y > r) against
// Phi(-r / sqrt(2 tau)) on a radius grid of r > 0.
struct DominationRow {
  double r = 0.0;
  double tail = 0.0;
  double bound = 0.0;
  double margin = 0.0;
};
std::vector<DominationRow> excess_domination_scan(
    const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
    const HnCenter& c, const std::vector<double>& radii);

// CSV tables (17 significant digits) and an SVG of tail vs. bound curves.
void write_tail_csv(const std::vector<TailBoundRow>& rows, std::ostream& out);
void write_quantile_csv(const std::vector<QuantileLocRow>& rows,
                        std::ostream& out);
void write_tail_svg(const std::vector<TailBoundRow>& rows, std::ostream& out);

}  // namespace hkflow::hn
