#pragma once

#include <iosfwd>
#include <vector>

#include "hkflow/flow.hpp"
#include "hkflow/heat.hpp"
#include "hkflow/isoperimetry.hpp"

namespace hkflow::score {

// Directional derivative of the log kernel in the basepoint, evaluated on
// the time-s slice: S_v(y) = <grad_x log K(x,t; y,s), v> with v a unit
// vector at x in the time-t metric. In the reduced geometries the tangent
// line at the basepoint is one dimensional, so v is a sign.
//
// Representation by kind:
//  - window: exact closed form S(y) = direction * (y - x0) / (2 tau),
//    stored nodally with step = 0. In ambient dimension n >= 2 this is the
//    score of the first coordinate; all directional functionals reduce to
//    the stored one dimensional marginal.
//  - torus: central differences of the wrapped log density in the
//    basepoint, steps {4h, 2h}, Richardson extrapolated.
//  - round sphere: the basepoint sits at the pole, so rotation equivariance
//    forces the exact separable form S(theta, phi) = W(theta) cos(phi)
//    where phi is the azimuth of y against the direction of v. `values`
//    stores the meridian factor W, obtained by differencing the log of the
//    stored radial density with steps {4h, 2h} (poles handled by even
//    reflection) and dividing by the time-t radius.
//  - warped sphere: rejected. Off-axis basepoints leave the reduced
//    axisymmetric representation, so the basepoint derivative is not
//    computable from the stored slice.
struct ScoreField {
  int direction = 1;
  double x0 = 0.0;
  double t0 = 0.0;
  double s = 0.0;
  double step = 0.0;       // basepoint differencing step; 0 means closed form
  bool separable = false;  // sphere kinds: S = values(theta) * cos(phi)
  geom::DiscreteField values;
};

// Builds the score field of the measure's kernel. `direction` must be +1 or
// -1. `step_hint` overrides the coarse differencing step (the fine step is
// half of it); a hint below the grid spacing is an error, as is a kernel
// whose stored density is not strictly positive where it is differenced.
ScoreField score_field(const geom::FlowFamily& flow,
                       const heat::KernelMeasure& nu, int direction = 1,
                       double step_hint = 0.0);

// Pointwise score at a coordinate: closed form when available, cubic
// interpolation of the stored values otherwise. On sphere kinds this is the
// meridian factor W(theta); the azimuthal cosine is the caller's business.
double score_eval(const ScoreField& f, double x);

// Mean of the score against its own measure. Exactly zero by symmetry on
// sphere kinds (the azimuthal factor integrates out); a quadrature residual
// elsewhere.
double score_mean(const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
                  const ScoreField& f);

// Set average bound: |int_X S_v dnu| <= I(nu(X)) / sqrt(2 tau) with I the
// Gaussian isoperimetric profile. On sphere kinds the left side vanishes
// for the band sets the region machinery represents.
struct SetBoundReport {
  double mass = 0.0;
  double lhs = 0.0;
  double bound = 0.0;
  double margin = 0.0;
};
SetBoundReport set_bound_check(const geom::FlowFamily& flow,
                               const heat::KernelMeasure& nu,
                               const ScoreField& f, const iso::WeightedSet& X);

// Partial integrals of the decreasing rearrangement of the score under its
// measure: G(a) = int_0^a S*(r) dr, computed by sorting quadrature atoms
// weighted by the measure (sub-panel Gauss nodes; on sphere kinds a tensor
// grid in theta and phi). Bound: I(a) / sqrt(2 tau), attained by the
// Gaussian law N(0, 1/(2 tau)). Each a must lie in (0, 1).
struct PartialSumRow {
  double a = 0.0;
  double value = 0.0;
  double bound = 0.0;
  double margin = 0.0;
};
std::vector<PartialSumRow> rearrangement_partial_sums(
    const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
    const ScoreField& f, const std::vector<double>& a_grid);

// Convex test functions for the comparison with the Gaussian law
// N(0, 1/(2 tau)): |r|^p (p >= 1), (r - c)_+, exp(theta r), max(r, c).
// AbsPow with p < 1 is rejected as non-convex.
struct ConvexPsi {
  enum class Kind { AbsPow, HingePos, Exp, MaxC };
  Kind kind = Kind::AbsPow;
  double param = 2.0;
};

// Convex order against the Gaussian law: int psi(S_v) dnu <= E psi(Z) for
// Z ~ N(0, 1/(2 tau)), with the right side in closed form.
struct ConvexOrderRow {
  ConvexPsi psi;
  double value = 0.0;
  double bound = 0.0;
  double margin = 0.0;
};
std::vector<ConvexOrderRow> convex_order_check(
    const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
    const ScoreField& f, const std::vector<ConvexPsi>& family);

// Directional moment: tau^{p/2} int |S_v|^p dnu <= Gamma((p+1)/2) /
// sqrt(pi), with equality for the Gaussian law. p >= 1.
struct MomentReport {
  double p = 0.0;
  double value = 0.0;
  double bound = 0.0;
  double margin = 0.0;
};
MomentReport moment_check(const geom::FlowFamily& flow,
                          const heat::KernelMeasure& nu, const ScoreField& f,
                          double p);

// Full-gradient moment: tau^{p/2} int |grad_x log K|^p dnu <=
// Gamma((n+p)/2) / Gamma(n/2) in ambient dimension n. `weighted_form`
// recomputes the integral as int |grad_x K|^p / K^{p-1} dg_s through an
// independent quadrature route; the two agree because the integrands are
// the same function re-weighted.
struct GradientMomentReport {
  double p = 0.0;
  double value = 0.0;
  double weighted_form = 0.0;
  double bound = 0.0;
  double margin = 0.0;
};
GradientMomentReport gradient_moment_check(const geom::FlowFamily& flow,
                                           const heat::KernelMeasure& nu,
                                           const ScoreField& f, double p);

// Localized moment: for X of measure a, int_X |S_v|^p dnu <=
// (2 tau)^{-p/2} * 2 int_{b_a}^inf r^p phi(r) dr with b_a the two-sided
// Gaussian tail quantile Phi^{-1}(1 - a/2). At a = 1 this reduces to the
// directional moment bound; at a = 0 both sides vanish. `envelope_ratio`
// reports tau^{p/2} value / (a (log(2/a))^{p/2}), the shape of the bound
// for small sets; no sharp constant is asserted for it.
struct LocalizedMomentReport {
  double p = 0.0;
  double mass = 0.0;
  double value = 0.0;
  double bound = 0.0;
  double margin = 0.0;
  double envelope_ratio = 0.0;
};
LocalizedMomentReport localized_moment_check(const geom::FlowFamily& flow,
                                             const heat::KernelMeasure& nu,
                                             const ScoreField& f,
                                             const iso::WeightedSet& X,
                                             double p);

// Kernel mass upper bound from a distant anchor: if nu(B) >= beta > 0 and
// D = d_s(A, B) > 0 then int_A K dg_s <= 1 - Phi(Phi^{-1}(beta) +
// D / sqrt(2 tau)). With v0 > 0 the averaged form divides the left side by
// |A|_{g_s}, requires |A| >= v0 tau^{n/2}, and divides the bound by
// v0 tau^{n/2}.
struct AverageBoundReport {
  double mass_b = 0.0;
  double beta = 0.0;
  double dist = 0.0;
  double lhs = 0.0;
  double bound = 0.0;
  double margin = 0.0;
  bool averaged = false;
  double volume_a = 0.0;
  double avg_lhs = 0.0;
  double avg_bound = 0.0;
};
AverageBoundReport average_hk_upper_check(const geom::FlowFamily& flow,
                                          double x0, double t0, double s,
                                          const iso::WeightedSet& A,
                                          const iso::WeightedSet& B,
                                          double beta, double v0 = 0.0);

void write_partial_sum_csv(const std::vector<PartialSumRow>& rows,
                           std::ostream& out);
void write_convex_order_csv(const std::vector<ConvexOrderRow>& rows,
                            std::ostream& out);
void write_partial_sum_svg(const std::vector<PartialSumRow>& rows,
                           std::ostream& out);

}  // namespace hkflow::score
