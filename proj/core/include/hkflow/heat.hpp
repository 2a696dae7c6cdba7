#pragma once

// Conjugate heat-kernel measures and the forward heat semigroup coupled to
// a model flow. Expectations against a kernel measure go through duality
// (evolve the observable forward, read it at the basepoint); the density
// field itself comes from closed forms where they exist and from a
// bump-initialized conjugate solve on the numeric kind.

#include <iosfwd>

#include "hkflow/flow.hpp"

namespace hkflow::heat {

// Probability density of the conjugate kernel based at (x0, t0), evaluated
// at an earlier time s. density holds the kernel values with respect to the
// metric measure dg_s on the reduced grid; sphere kinds require x0 = 0 (the
// pole), the axis of the reduced symmetry.
struct KernelMeasure {
  geom::FlowKind kind = geom::FlowKind::FlatTorus;
  double x0 = 0.0;
  double t0 = 0.0;
  double s = 0.0;
  geom::DiscreteField density;
  double truncation_error = 0.0;  // spectral tail / image-sum cutoff bound
  double mass_drift = 0.0;        // numeric kind: |mass - 1| before rescale
  double init_error = 0.0;        // numeric kind: two-bump-width difference
};

double time_gap(const KernelMeasure& nu);  // t0 - s

// Forward Markov evolution P_{s,t} along the flow, Crank-Nicolson in time.
// dt_hint = 0 picks the largest step that keeps the update positivity
// preserving: stability holds for any step, but the discrete maximum
// principle needs dt <= h^2 a_min / 2 over the span (a_min the smallest
// conformal factor, with an extra factor 2 at the sphere poles).
struct SemigroupOperator {
  const geom::FlowFamily* flow = nullptr;
  double s = 0.0;
  double t = 0.0;
  double dt_hint = 0.0;
};

geom::DiscreteField apply(const SemigroupOperator& op,
                          const geom::DiscreteField& f);

// Convenience wrapper: evolve f from its own sample time to t_target.
geom::DiscreteField heat_evolve(const geom::FlowFamily& flow,
                                const geom::DiscreteField& f,
                                double t_target);

// Conjugate kernel at evaluation time s < t0. Closed forms: Gaussian window
// (EuclideanExact), wrapped-Gaussian image sum (FlatTorus), Legendre series
// with a time-dependent normalization absorbing the constant-curvature term
// (RoundSphere, truncated at lmax with the tail recorded). WarpedS2 has no
// closed form: the conjugate equation is solved forward in the gap from a
// Gaussian bump of width tau_init = 10 h^2 at the pole, the discrete mass
// is rescaled to one (drift recorded), and the initialization error is
// estimated by re-running with twice the bump width.
KernelMeasure conjugate_kernel(const geom::FlowFamily& flow, double x0,
                               double t0, double s, int lmax = 64);

// int h d(nu) for h sampled on the kernel's grid at time s. Closed-form
// kinds integrate h against the stored density with the high-order
// quadrature weights; the numeric kind evolves h forward to t0 and reads it
// at the basepoint, bypassing the bump-initialized density entirely.
double nu_expect(const geom::FlowFamily& flow, const KernelMeasure& nu,
                 const geom::DiscreteField& h);

// Cubic Lagrange point evaluation of a nodal field, wrap-aware on periodic
// grids, one-sided stencils at interval ends.
double eval_field(const geom::DiscreteField& f, double x);

// Flat 1-D closed forms, exposed for oracles: the heat density at gap tau
// and its periodized image sum.
double gauss_heat_density(double x, double x0, double tau);
double wrapped_gauss_density(double x, double x0, double tau, double period);

// Two-column CSV snapshot (coordinate, density), header line included.
void write_kernel_csv(const KernelMeasure& nu, std::ostream& out);

}  // namespace hkflow::heat
