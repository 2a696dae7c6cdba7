#pragma once

// The Bobkov functional Q = sqrt(I(u)^2 + a(t)|grad u|^2) along the flow,
// its pointwise defect, the monotonicity scan of the kernel-averaged value,
// the widened-coefficient family, and the equality/rigidity probes.

#include <functional>
#include <iosfwd>
#include <vector>

#include "hkflow/flow.hpp"
#include "hkflow/heat.hpp"

namespace hkflow::bobkov {

// Evolving observable u = P_{s,t} f together with the coefficient data:
// a(t) = lambda + 2 (t0 - t). The clamp eps is the band the values are
// required to live in, mirroring the reduction f -> (1-2eps) f + eps.
struct BobkovState {
  geom::DiscreteField u;
  double t0 = 0.0;
  double lambda = 0.0;
  double eps = 1e-6;
};

double coefficient(const BobkovState& st);  // lambda + 2 (t0 - u.time)

// Throws std::domain_error if u leaves [eps, 1-eps] or a(t) < 0.
void validate(const BobkovState& st);

// (1 - 2 eps) f + eps, the clamp used by the inequality checks.
geom::DiscreteField clamp_field(const geom::DiscreteField& f, double eps);

// Q pointwise. Q >= I(u) and Q >= sqrt(a) |grad u| hold by construction.
geom::DiscreteField q_value(const BobkovState& st,
                            const geom::MetricSample& m);

// Pointwise defect -Box Q, written through w = Phi^{-1}(u) and the
// orthonormal-frame Hessian so the nonnegativity is structural:
//   defect = (a I(u)/L) (h_mer^2 / L^2 + h_par^2),  L^2 = 1 + a |grad w|^2.
// floor is the strengthened lower bound (a I(u)/L^3) |Hess w|^2.
struct DefectField {
  geom::DiscreteField defect;
  geom::DiscreteField floor;
};

DefectField bobkov_defect(const BobkovState& st, const geom::MetricSample& m);

// t |-> int Q(., t) d nu_t on an evenly spaced time grid from f.time to t0.
// The final entry is the delta limit I(u(t0, x0)). worst_step indexes the
// largest consecutive increase (none -> -1, max_violation 0).
struct ScanSeries {
  std::vector<double> t;
  std::vector<double> value;
  int worst_step = -1;
  double max_violation = 0.0;

  double drop() const { return value.front() - value.back(); }
};

ScanSeries monotone_scan(const geom::FlowFamily& flow, double x0, double t0,
                         const geom::DiscreteField& f, int steps,
                         double lambda = 0.0);

// Throws std::runtime_error naming the offending step if the series
// increases by more than tol anywhere.
void require_monotone(const ScanSeries& series, double tol);

struct CheckResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
};

// I(int f d nu) <= int sqrt(I(f)^2 + 2 tau |grad f|^2) d nu on the kernel's
// time slice. f is clamped internally; sharp = true extrapolates the margin
// over clamp values {1e-4, 1e-5, 1e-6}.
CheckResult bobkov_inequality_check(const geom::FlowFamily& flow,
                                    const heat::KernelMeasure& nu,
                                    const geom::DiscreteField& f,
                                    bool sharp = false);

// Widened coefficient: sqrt(I(Pf)^2 + lambda |grad Pf|^2)(x0) against
// P[sqrt(I(f)^2 + (2 tau + lambda)|grad f|^2)](x0). lambda = 0 reduces to
// bobkov_inequality_check; lambda -> infinity recovers the gradient
// contraction after dividing both sides by sqrt(lambda).
CheckResult lambda_family_check(const geom::FlowFamily& flow,
                                const heat::KernelMeasure& nu,
                                const geom::DiscreteField& f, double lambda,
                                bool sharp = false);

// Static Euclidean closed forms, quadrature in the standard-normal variable:
// no grid, no semigroup solver. f and fp are the observable and its
// derivative; the sharp constant is attained on f = Phi(affine).
CheckResult euclid_bobkov_closed_form(double x0, double tau,
                                      const std::function<double(double)>& f,
                                      const std::function<double(double)>& fp,
                                      double lambda = 0.0);

// Scan drop against the time-integrated defect expectation (the two agree
// for the continuum functional), plus the strengthened Hessian floor.
struct RigidityReport {
  ScanSeries series;
  double drop = 0.0;
  double defect_integral = 0.0;
  double hessian_floor = 0.0;
  double relative_gap = 0.0;  // |drop - defect_integral| rel. defect_integral
};

RigidityReport rigidity_probe(const geom::FlowFamily& flow, double x0,
                              double t0, const geom::DiscreteField& f,
                              int steps = 16);

// Two-column CSV (t, value) of a scan series, header line included.
void write_scan_csv(const ScanSeries& series, std::ostream& out);

}  // namespace hkflow::bobkov
