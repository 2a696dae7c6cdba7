#include "hkflow/bobkov.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "hkflow/gaussian.hpp"
#include "hkflow/numerics.hpp"

namespace hkflow::bobkov {

namespace {

bool needs_duality(geom::FlowKind k) { return k == geom::FlowKind::WarpedS2; }

// int q d nu_t for a field living at time t: quadrature against the
// closed-form density where one exists, forward evolution to the basepoint
// on the numeric kind.
double kernel_expect(const geom::FlowFamily& flow, double x0, double t0,
                     const geom::DiscreteField& q) {
  if (needs_duality(flow.spec().kind)) {
    heat::SemigroupOperator op{&flow, q.time, t0, 0.0};
    return heat::eval_field(heat::apply(op, q), x0);
  }
  const auto nu = heat::conjugate_kernel(flow, x0, t0, q.time);
  return heat::nu_expect(flow, nu, q);
}

}  // namespace

double coefficient(const BobkovState& st) {
  return st.lambda + 2.0 * (st.t0 - st.u.time);
}

void validate(const BobkovState& st) {
  if (st.eps <= 0.0 || st.eps >= 0.5) {
    throw std::domain_error("BobkovState: clamp outside (0, 1/2)");
  }
  if (coefficient(st) < 0.0) {
    throw std::domain_error("BobkovState: negative coefficient a(t)");
  }
  // solver roundoff can graze the band edge; the max principle is exact
  // only up to tridiagonal roundoff
  for (double v : st.u.values) {
    if (v < st.eps - 1e-12 || v > 1.0 - st.eps + 1e-12) {
      throw std::domain_error("BobkovState: u leaves the clamp band");
    }
  }
}

geom::DiscreteField clamp_field(const geom::DiscreteField& f, double eps) {
  geom::DiscreteField out = f;
  for (double& v : out.values) v = (1.0 - 2.0 * eps) * v + eps;
  return out;
}

geom::DiscreteField q_value(const BobkovState& st,
                            const geom::MetricSample& m) {
  validate(st);
  const double a = coefficient(st);
  const auto grad = geom::gradient_norm(st.u, m);
  geom::DiscreteField q{st.u.grid, st.u.time, {}};
  q.values.resize(st.u.values.size());
  const double sa = std::sqrt(a);
  for (std::size_t i = 0; i < q.values.size(); ++i) {
    q.values[i] =
        std::hypot(gauss::profile(st.u.values[i]), sa * grad.values[i]);
  }
  return q;
}

DefectField bobkov_defect(const BobkovState& st, const geom::MetricSample& m) {
  validate(st);
  const double a = coefficient(st);
  geom::DiscreteField w{st.u.grid, st.u.time, {}};
  w.values.resize(st.u.values.size());
  for (std::size_t i = 0; i < w.values.size(); ++i) {
    w.values[i] = gauss::phi_quantile(st.u.values[i]);
  }
  const auto hess = geom::axisym_hessian(w, m);
  DefectField out;
  out.defect = geom::DiscreteField{st.u.grid, st.u.time, {}};
  out.floor = geom::DiscreteField{st.u.grid, st.u.time, {}};
  out.defect.values.resize(w.values.size());
  out.floor.values.resize(w.values.size());
  for (std::size_t i = 0; i < w.values.size(); ++i) {
    const double gw2 = hess.grad_norm[i] * hess.grad_norm[i];
    const double l2 = 1.0 + a * gw2;
    const double l = std::sqrt(l2);
    const double mer2 = hess.h_meridian[i] * hess.h_meridian[i];
    const double par2 = hess.h_parallel[i] * hess.h_parallel[i];
    const double iu = gauss::profile(st.u.values[i]);
    out.defect.values[i] = (a * iu / l) * (mer2 / l2 + par2);
    out.floor.values[i] = (a * iu / (l * l2)) * (mer2 + par2);
  }
  return out;
}

ScanSeries monotone_scan(const geom::FlowFamily& flow, double x0, double t0,
                         const geom::DiscreteField& f, int steps,
                         double lambda) {
  if (steps < 1) throw std::invalid_argument("monotone_scan: steps < 1");
  if (!(f.time < t0)) {
    throw std::invalid_argument("monotone_scan: field time must precede t0");
  }
  const double eps_pre = 1e-6;
  for (double v : f.values) {
    if (v < eps_pre - 1e-12 || v > 1.0 - eps_pre + 1e-12) {
      throw std::invalid_argument(
          "monotone_scan: field must be pre-clamped into [eps, 1-eps]");
    }
  }
  ScanSeries out;
  out.t.resize(steps + 1);
  out.value.resize(steps + 1);
  const double s = f.time;
  geom::DiscreteField u = f;
  for (int j = 0; j <= steps; ++j) {
    const double tj = s + (t0 - s) * static_cast<double>(j) / steps;
    if (j > 0) u = heat::heat_evolve(flow, u, tj);
    out.t[j] = tj;
    if (j == steps) {
      // a(t0) = 0 and nu_{t0} is the point mass at the basepoint
      out.value[j] = gauss::profile(heat::eval_field(u, x0));
      break;
    }
    BobkovState st{u, t0, lambda, eps_pre};
    const auto q = q_value(st, flow.metric_at(tj));
    out.value[j] = kernel_expect(flow, x0, t0, q);
  }
  for (int j = 0; j + 1 <= steps; ++j) {
    const double rise = out.value[j + 1] - out.value[j];
    if (rise > out.max_violation) {
      out.max_violation = rise;
      out.worst_step = j;
    }
  }
  return out;
}

void require_monotone(const ScanSeries& series, double tol) {
  if (series.max_violation > tol) {
    throw std::runtime_error(
        "monotone_scan: series rises by " +
        std::to_string(series.max_violation) + " at step " +
        std::to_string(series.worst_step) + " (t = " +
        std::to_string(series.t[series.worst_step]) + "), above tolerance " +
        std::to_string(tol));
  }
}

namespace {

CheckResult check_at_clamp(const geom::FlowFamily& flow,
                           const heat::KernelMeasure& nu,
                           const geom::DiscreteField& f, double lambda,
                           double eps) {
  const auto fe = clamp_field(f, eps);
  BobkovState st{fe, nu.t0, lambda, eps};
  const auto q = q_value(st, flow.metric_at(nu.s));
  CheckResult r;
  r.rhs = heat::nu_expect(flow, nu, q);
  if (lambda == 0.0) {
    r.lhs = gauss::profile(heat::nu_expect(flow, nu, fe));
  } else {
    const auto u = heat::heat_evolve(flow, fe, nu.t0);
    const auto grad = geom::gradient_norm(u, flow.metric_at(nu.t0));
    const double u0 = heat::eval_field(u, nu.x0);
    const double g0 = heat::eval_field(grad, nu.x0);
    r.lhs = std::hypot(gauss::profile(u0), std::sqrt(lambda) * g0);
  }
  r.margin = r.rhs - r.lhs;
  return r;
}

CheckResult sharpen(const geom::FlowFamily& flow,
                    const heat::KernelMeasure& nu,
                    const geom::DiscreteField& f, double lambda, bool sharp) {
  if (!sharp) return check_at_clamp(flow, nu, f, lambda, 1e-6);
  const CheckResult a = check_at_clamp(flow, nu, f, lambda, 1e-4);
  const CheckResult b = check_at_clamp(flow, nu, f, lambda, 1e-5);
  CheckResult c = check_at_clamp(flow, nu, f, lambda, 1e-6);
  c.margin = num::aitken(a.margin, b.margin, c.margin);
  c.lhs = num::aitken(a.lhs, b.lhs, c.lhs);
  c.rhs = c.lhs + c.margin;
  return c;
}

}  // namespace

CheckResult bobkov_inequality_check(const geom::FlowFamily& flow,
                                    const heat::KernelMeasure& nu,
                                    const geom::DiscreteField& f, bool sharp) {
  return sharpen(flow, nu, f, 0.0, sharp);
}

CheckResult lambda_family_check(const geom::FlowFamily& flow,
                                const heat::KernelMeasure& nu,
                                const geom::DiscreteField& f, double lambda,
                                bool sharp) {
  if (lambda < 0.0) {
    throw std::invalid_argument("lambda_family_check: lambda < 0");
  }
  return sharpen(flow, nu, f, lambda, sharp);
}

CheckResult euclid_bobkov_closed_form(double x0, double tau,
                                      const std::function<double(double)>& f,
                                      const std::function<double(double)>& fp,
                                      double lambda) {
  if (tau <= 0.0) {
    throw std::invalid_argument("euclid_bobkov_closed_form: tau <= 0");
  }
  const double sig = std::sqrt(2.0 * tau);
  const double coef = 2.0 * tau + lambda;
  auto against_normal = [&](const std::function<double(double)>& g) {
    return num::integrate_panels(
        [&](double z) { return g(x0 + sig * z) * gauss::phi_pdf(z); }, -10.0,
        10.0, 40);
  };
  CheckResult r;
  r.rhs = against_normal([&](double y) {
    return std::hypot(gauss::profile(f(y)), std::sqrt(coef) * fp(y));
  });
  const double mean = against_normal(f);
  if (lambda == 0.0) {
    r.lhs = gauss::profile(mean);
  } else {
    const double dmean = against_normal(fp);
    r.lhs = std::hypot(gauss::profile(mean), std::sqrt(lambda) * dmean);
  }
  r.margin = r.rhs - r.lhs;
  return r;
}

RigidityReport rigidity_probe(const geom::FlowFamily& flow, double x0,
                              double t0, const geom::DiscreteField& f,
                              int steps) {
  RigidityReport rep;
  rep.series = monotone_scan(flow, x0, t0, f, steps);
  rep.drop = rep.series.drop();

  // time-integrated defect expectation, trapezoid over the scan times; the
  // t0 endpoint vanishes with the coefficient a(t0) = 0
  const double s = f.time;
  geom::DiscreteField u = f;
  double acc_defect = 0.0, acc_floor = 0.0;
  const double dt = (t0 - s) / steps;
  for (int j = 0; j < steps; ++j) {
    const double tj = s + dt * static_cast<double>(j);
    if (j > 0) u = heat::heat_evolve(flow, u, tj);
    BobkovState st{u, t0, 0.0, 1e-6};
    const auto fields = bobkov_defect(st, flow.metric_at(tj));
    const double wj = (j == 0) ? 0.5 : 1.0;
    acc_defect += wj * kernel_expect(flow, x0, t0, fields.defect);
    acc_floor += wj * kernel_expect(flow, x0, t0, fields.floor);
  }
  rep.defect_integral = acc_defect * dt;
  rep.hessian_floor = acc_floor * dt;
  rep.relative_gap = std::abs(rep.drop - rep.defect_integral) /
                     std::max(rep.defect_integral, 1e-300);
  return rep;
}

void write_scan_csv(const ScanSeries& series, std::ostream& out) {
  out << "t,value\n";
  out.precision(17);
  for (std::size_t i = 0; i < series.t.size(); ++i) {
    out << series.t[i] << ',' << series.value[i] << '\n';
  }
}

}  // namespace hkflow::bobkov
