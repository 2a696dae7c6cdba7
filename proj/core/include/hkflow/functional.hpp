#pragma once

// Functional-inequality checks against the conjugate kernel measure: coarea
// lower bound through the Gaussian isoperimetric profile, nonincreasing
// rearrangement onto the line with Polya-Szego, log-Sobolev in both the
// squared and positive forms, a local reverse log-Sobolev at the kernel
// basepoint, sharp L^p Poincare, small-support and median Poincare,
// weighted Faber-Krahn via a discrete Dirichlet Rayleigh quotient, and
// reverse hypercontractivity along a Gross exponent schedule.
//
// Every check reports both sides and the margin; nothing asserts. Gradients
// are fourth-order nodal derivatives scaled by the conformal factor, level
// occupation masses come from the exact region quadrature in the
// isoperimetry layer, and level integrals run on an adaptively refined grid
// so that steep stretches of the distribution function get their own
// panels.

#include <iosfwd>
#include <string>
#include <vector>

#include "hkflow/flow.hpp"
#include "hkflow/heat.hpp"
#include "hkflow/isoperimetry.hpp"

namespace hkflow::fi {

// Nonincreasing rearrangement of a grid field onto (R, gamma_tau), stored
// as a level table: mass[k] is the kernel measure of {h > level[k]}, with
// levels increasing and masses nonincreasing. Between table rows the
// quantile is linear in mass.
struct RearrangedFunction {
  double tau = 0.0;
  std::vector<double> level;
  std::vector<double> mass;

  // h degrees(z): the rearranged value at line coordinate z.
  double eval(double z) const;
  // Quantile: the value exceeded on a set of measure exactly a, a in (0,1).
  double value_at_mass(double a) const;
  // gamma_tau({h degrees > r}), read off the table.
  double superlevel_mass(double r) const;
};

// Build the rearrangement. scale overrides tau when positive; by default
// tau is the measure's time gap. The level grid starts at 512 uniform
// levels and refines any interval whose mass change exceeds 1/2048.
RearrangedFunction gaussian_rearrange(const geom::FlowFamily& flow,
                                      const heat::KernelMeasure& nu,
                                      const geom::DiscreteField& h,
                                      double scale = 0.0);

struct CheckReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // oriented so that nonnegative means the bound holds
};

// Total variation against the profile of the occupation masses:
// int |grad h| dnu >= (2 tau)^{-1/2} int I(nu({h > r})) dr.
CheckReport coarea_profile_check(const geom::FlowFamily& flow,
                                 const heat::KernelMeasure& nu,
                                 const geom::DiscreteField& h);

// Rearrangement decreases gradient p-norms:
// int |(h degrees)'|^p dgamma_tau <= int |grad h|^p dnu, p >= 1. The left
// side is the level integral of I(mu)^p / (-mu')^(p-1) with mu' summed
// over level crossings.
CheckReport polya_szego_check(const geom::FlowFamily& flow,
                              const heat::KernelMeasure& nu,
                              const geom::DiscreteField& h, double p);

struct LsiReport {
  double entropy = 0.0;
  double dirichlet = 0.0;  // the full right-hand side, prefactor included
  double ratio = 0.0;      // entropy / rhs, 0 when the rhs vanishes
};

// Ent_nu(u^2) <= 4 tau int |grad u|^2 dnu.
LsiReport lsi_check(const geom::FlowFamily& flow,
                    const heat::KernelMeasure& nu,
                    const geom::DiscreteField& u);

// Positive form: Ent_nu(w) <= tau int |grad w|^2 / w dnu, w > 0.
LsiReport lsi_w_check(const geom::FlowFamily& flow,
                      const heat::KernelMeasure& nu,
                      const geom::DiscreteField& w);

// Entropy of a nonnegative field under the kernel measure, with the
// conventions 0 log 0 = 0 and a 1e-300 floor inside logarithms.
double entropy_of(const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
                  const geom::DiscreteField& w);

// Pointwise reverse bound at the basepoint: for positive f at time s,
// Ent_nu(f) >= tau |grad_x P_{s,t} f|^2(x) / P_{s,t} f(x), the x-gradient
// by Richardson basepoint differencing of the evolved field.
CheckReport reverse_lsi_check(const geom::FlowFamily& flow,
                              const geom::DiscreteField& f, double x,
                              double t, double s);

struct PoincareReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  bool sharp = false;  // constant known in closed form (p = 1 and p = 2)
};

// ||h - nu h||_p <= sqrt(2 tau) Lambda_p ||grad h||_p.
PoincareReport lp_poincare_check(const geom::FlowFamily& flow,
                                 const heat::KernelMeasure& nu,
                                 const geom::DiscreteField& h, double p);

struct SupportPoincareReport {
  double mass = 0.0;  // nu({u > 0}), or the median for the median form
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
};

// ||u||_p <= p sqrt(2 tau) (a / I(a)) ||grad u||_p for u >= 0 supported on
// mass a <= 1/2. Throws when the support carries more than half the mass.
SupportPoincareReport small_support_poincare_check(
    const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
    const geom::DiscreteField& u, double p);

// ||h - med_nu(h)||_p <= p sqrt(pi tau) ||grad h||_p; mass reports the
// median value.
SupportPoincareReport median_poincare_check(const geom::FlowFamily& flow,
                                            const heat::KernelMeasure& nu,
                                            const geom::DiscreteField& h,
                                            double p);

struct FaberKrahnReport {
  double mass = 0.0;
  double lambda1 = 0.0;
  double bound = 0.0;       // (1 / 8 tau) (I(a) / a)^2
  double margin = 0.0;
  double asymptotic = 0.0;  // log(1/a) / (4 tau), reported when a <= 1e-3
  int iterations = 0;
};

struct RayleighOptions {
  double tol = 1e-10;   // eigenvalue increment tolerance
  int max_iter = 20000;
};

// Smallest Dirichlet eigenvalue of the weighted Rayleigh quotient over grid
// functions vanishing outside the region, by inverse-power iteration on the
// tridiagonal stiffness matrix of each region piece. Requires
// 0 < nu(Omega) <= 1/2; non-convergence throws.
FaberKrahnReport faber_krahn_check(const geom::FlowFamily& flow,
                                   const heat::KernelMeasure& nu,
                                   const iso::WeightedSet& omega,
                                   const RayleighOptions& opt = {});

// Exponent schedule alpha(t) = 1 - c / (t0 - t) with c = (1 - q) tau2:
// alpha equals q at gap tau2 and climbs to p at gap tau1_star =
// tau2 (1 - q) / (1 - p) >= tau1. Requires 0 < p <= q < 1, 0 < tau1 <=
// tau2, and the gap ratio tau2 / tau1 at least (1 - p) / (1 - q).
struct ExponentSchedule {
  double p = 0.0;
  double q = 0.0;
  double tau1 = 0.0;
  double tau2 = 0.0;
  double c = 0.0;
  double tau1_star = 0.0;
};

ExponentSchedule make_schedule(double p, double q, double tau1, double tau2);

// alpha(t) for a check anchored at basepoint time t0.
double schedule_alpha(const ExponentSchedule& sched, double t0, double t);

struct MonitorRow {
  double t = 0.0;
  double alpha = 0.0;
  double norm = 0.0;
};

struct HypercontractivityReport {
  double norm_late = 0.0;   // ||u(s1)||_{L^p(nu_{s1})}
  double norm_early = 0.0;  // ||u(s2)||_{L^q(nu_{s2})}
  double margin = 0.0;      // norm_late - norm_early
  double monitor_margin = 0.0;  // smallest consecutive increment of rows
  std::vector<MonitorRow> rows;
};

// Evolve a positive field from s2 = t0 - tau2 and verify
// ||u(s1)||_p >= ||u(s2)||_q, monitoring the Gross quantity
// ||u(t)||_{L^{alpha(t)}(nu_t)} at interior times: the variable-exponent
// segment up to gap tau1_star, then the plain L^p segment down to gap tau1.
HypercontractivityReport reverse_hypercontractivity_check(
    const geom::FlowFamily& flow, double x0, double t0,
    const geom::DiscreteField& u0, const ExponentSchedule& sched,
    int monitor_points = 9);

struct InequalityRow {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  double tolerance = 0.0;
};

// Consolidated machine-readable report of check outcomes.
void write_inequality_json(const std::vector<InequalityRow>& rows,
                           std::ostream& out);

// Level table as CSV: columns level,mass.
void write_level_csv(const RearrangedFunction& rf, std::ostream& out);

// Gross monitor rows as CSV (columns t,alpha,norm) and as an SVG line plot.
void write_monitor_csv(const std::vector<MonitorRow>& rows,
                       std::ostream& out);
void write_monitor_svg(const std::vector<MonitorRow>& rows,
                       std::ostream& out);

}  // namespace hkflow::fi
