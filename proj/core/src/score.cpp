#include "hkflow/score.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hkflow/gaussian.hpp"
#include "hkflow/numerics.hpp"
#include "hkflow/plot.hpp"

namespace hkflow::score {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrtPi = 1.7724538509055160273;

struct Ctx {
  geom::MetricSample m;
  double tau = 0.0;
  int n = 1;  // ambient dimension
  bool sphere = false;
};

Ctx make_ctx(const geom::FlowFamily& flow, const heat::KernelMeasure& nu) {
  Ctx c;
  c.tau = heat::time_gap(nu);
  if (c.tau <= 0.0) throw std::invalid_argument("score: measure needs t0 > s");
  c.m = flow.metric_at(nu.s);
  c.n = c.m.dim;
  c.sphere = c.m.kind == geom::FlowKind::RoundSphere ||
             c.m.kind == geom::FlowKind::WarpedS2;
  return c;
}

// phi-average of |cos|^p over the circle.
double cos_abs_moment(double p) {
  return std::tgamma(0.5 * (p + 1.0)) /
         (kSqrtPi * std::tgamma(0.5 * p + 1.0));
}

double directional_bound(double p) {
  return std::tgamma(0.5 * (p + 1.0)) / kSqrtPi;
}

double vector_bound(double p, int n) {
  return std::tgamma(0.5 * (n + p)) / std::tgamma(0.5 * n);
}

// Coordinates where the nodal score crosses the level, by linear
// interpolation between neighbouring nodes. Panel cuts for kinked
// integrands.
std::vector<double> crossings(const ScoreField& f, double level) {
  const auto& g = f.values.grid;
  const int nn = g.node_count();
  const bool wrap = g.topology == geom::Topology::Periodic;
  std::vector<double> out;
  const int edges = wrap ? nn : nn - 1;
  for (int i = 0; i < edges; ++i) {
    const double a = f.values.values[i] - level;
    const double b = f.values.values[(i + 1) % nn] - level;
    if (a == 0.0) out.push_back(g.node(i));
    if (a * b < 0.0) {
      out.push_back(g.node(i) + g.spacing() * a / (a - b));
    }
  }
  return out;
}

// Even reflection of an angle into [0, pi]; the radial kernel profile is
// symmetric at both poles.
double reflect_angle(double th) {
  th = std::fabs(th);
  if (th > kPi) th = 2.0 * kPi - th;
  return th;
}

double log_density_at(const heat::KernelMeasure& nu, double th) {
  const double v = heat::eval_field(nu.density, reflect_angle(th));
  if (!(v > 0.0)) {
    throw std::domain_error("score_field: kernel must stay positive");
  }
  return std::log(v);
}

// Closed-form density of the measure's reduced coordinate on flat kinds.
std::function<double(double)> flat_density(const heat::KernelMeasure& nu,
                                           const Ctx& c) {
  if (nu.kind == geom::FlowKind::EuclideanExact) {
    return [x0 = nu.x0, tau = c.tau](double x) {
      return heat::gauss_heat_density(x, x0, tau);
    };
  }
  return [x0 = nu.x0, tau = c.tau, P = c.m.grid.length](double x) {
    return heat::wrapped_gauss_density(x, x0, tau, P);
  };
}

// Quadrature atoms (value, weight) of the score's law under the measure.
// Flat kinds: Gauss nodes on sub-panels of every cell against the closed
// density. Sphere kinds: the same in theta tensored with azimuthal
// midpoints carrying the cos(phi) factor.
struct Atoms {
  std::vector<std::pair<double, double>> vw;  // value, weight
  double total = 0.0;
};

Atoms score_atoms(const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
                  const ScoreField& f, const Ctx& c) {
  static const double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                               0.5384693101056831, 0.9061798459386640};
  static const double gw[5] = {0.2369268850561891, 0.4786286704993665,
                               0.5688888888888889, 0.4786286704993665,
                               0.2369268850561891};
  const auto& g = c.m.grid;
  const double h = g.spacing();
  const int cells = g.n;
  Atoms at;
  if (!c.sphere) {
    const auto dens = flat_density(nu, c);
    const int nsub = 32;
    at.vw.reserve(static_cast<size_t>(cells) * nsub * 5);
    for (int k = 0; k < cells; ++k) {
      const double xl = k * h;
      for (int j = 0; j < nsub; ++j) {
        const double a = xl + j * h / nsub;
        const double half = 0.5 * h / nsub;
        const double mid = a + half;
        for (int q = 0; q < 5; ++q) {
          const double x = mid + half * gx[q];
          at.vw.emplace_back(score_eval(f, x), gw[q] * half * dens(x));
        }
      }
    }
  } else {
    const int nsub = 2;
    const int nphi = 128;
    at.vw.reserve(static_cast<size_t>(cells) * nsub * 5 * nphi);
    std::vector<double> cphi(nphi);
    for (int j = 0; j < nphi; ++j) {
      cphi[j] = std::cos(2.0 * kPi * (j + 0.5) / nphi);
    }
    for (int k = 0; k < cells; ++k) {
      const double xl = k * h;
      for (int j = 0; j < nsub; ++j) {
        const double a = xl + j * h / nsub;
        const double half = 0.5 * h / nsub;
        const double mid = a + half;
        for (int q = 0; q < 5; ++q) {
          const double th = mid + half * gx[q];
          const double dens = heat::eval_field(nu.density, th);
          const double area =
              2.0 * kPi * geom::conformal_at(c.m, th) * std::sin(th);
          const double wth = gw[q] * half * std::max(dens, 0.0) * area / nphi;
          const double w = score_eval(f, th);
          for (int jj = 0; jj < nphi; ++jj) {
            at.vw.emplace_back(w * cphi[jj], wth);
          }
        }
      }
    }
  }
  (void)flow;
  for (const auto& a : at.vw) at.total += a.second;
  return at;
}

// E psi(Z) in closed form for Z ~ N(0, sigma^2).
double gaussian_psi_moment(const ConvexPsi& psi, double sigma) {
  switch (psi.kind) {
    case ConvexPsi::Kind::AbsPow: {
      const double p = psi.param;
      return std::pow(sigma, p) * std::pow(2.0, 0.5 * p) *
             std::tgamma(0.5 * (p + 1.0)) / kSqrtPi;
    }
    case ConvexPsi::Kind::HingePos: {
      const double ch = psi.param / sigma;
      return sigma * (gauss::phi_pdf(ch) - ch * (1.0 - gauss::phi_cdf(ch)));
    }
    case ConvexPsi::Kind::Exp: {
      const double t = psi.param * sigma;
      return std::exp(0.5 * t * t);
    }
    case ConvexPsi::Kind::MaxC: {
      const double ch = psi.param / sigma;
      return sigma * gauss::phi_pdf(ch) + psi.param * gauss::phi_cdf(ch);
    }
  }
  throw std::logic_error("score: unknown psi kind");
}

std::function<double(double)> psi_eval(const ConvexPsi& psi) {
  switch (psi.kind) {
    case ConvexPsi::Kind::AbsPow:
      return [p = psi.param](double r) { return std::pow(std::fabs(r), p); };
    case ConvexPsi::Kind::HingePos:
      return [c = psi.param](double r) { return std::max(r - c, 0.0); };
    case ConvexPsi::Kind::Exp:
      return [t = psi.param](double r) { return std::exp(t * r); };
    case ConvexPsi::Kind::MaxC:
      return [c = psi.param](double r) { return std::max(r, c); };
  }
  throw std::logic_error("score: unknown psi kind");
}

void validate_psi(const ConvexPsi& psi) {
  if (psi.kind == ConvexPsi::Kind::AbsPow && psi.param < 1.0) {
    throw std::invalid_argument("convex_order_check: |r|^p needs p >= 1");
  }
}

// Kink levels of psi(S(.)): panel cuts where the composition loses
// smoothness.
std::vector<double> psi_kinks(const ConvexPsi& psi) {
  switch (psi.kind) {
    case ConvexPsi::Kind::AbsPow:
      return psi.param < 2.0 ? std::vector<double>{0.0}
                             : std::vector<double>{};
    case ConvexPsi::Kind::HingePos:
    case ConvexPsi::Kind::MaxC:
      return {psi.param};
    case ConvexPsi::Kind::Exp:
      return {};
  }
  return {};
}

// int psi(S) dnu. Sphere kinds average the azimuthal factor per node first.
double psi_expectation(const geom::FlowFamily& flow,
                       const heat::KernelMeasure& nu, const ScoreField& f,
                       const Ctx& c, const ConvexPsi& psi,
                       const iso::WeightedSet* X = nullptr) {
  const auto eval = psi_eval(psi);
  if (!c.sphere) {
    std::vector<double> breaks;
    for (double lvl : psi_kinks(psi)) {
      for (double x : crossings(f, lvl)) breaks.push_back(x);
    }
    const auto g = [&](double x) { return eval(score_eval(f, x)); };
    if (X) return iso::nu_integral(flow, nu, g, *X, breaks);
    return iso::nu_integral(flow, nu, g, breaks);
  }
  const int nphi = 512;
  std::vector<double> cphi(nphi);
  for (int j = 0; j < nphi; ++j) {
    cphi[j] = std::cos(2.0 * kPi * (j + 0.5) / nphi);
  }
  auto phi_avg = [&](double w) {
    double s = 0.0;
    for (int j = 0; j < nphi; ++j) s += eval(w * cphi[j]);
    return s / nphi;
  };
  if (X) {
    const auto g = [&](double th) { return phi_avg(score_eval(f, th)); };
    return iso::nu_integral(flow, nu, g, *X);
  }
  geom::DiscreteField field;
  field.grid = c.m.grid;
  field.time = nu.s;
  field.values.resize(c.m.grid.node_count());
  for (int i = 0; i < c.m.grid.node_count(); ++i) {
    field.values[i] = phi_avg(f.values.values[i]);
  }
  return heat::nu_expect(flow, nu, field);
}

// Radial speed density of an isotropic Gaussian of scale sqrt(2 tau) in
// dimension n, for the full-gradient moments on higher-dimensional windows.
double radial_moment(double p, int n, double tau) {
  const double c =
      2.0 / (std::tgamma(0.5 * n) * std::pow(4.0 * tau, 0.5 * n));
  const double cut = std::sqrt(2.0 * n * tau) + (12.0 + 2.0 * p) *
                                                    std::sqrt(2.0 * tau);
  return num::integrate(
      [&](double r) {
        return std::pow(r, p) * c * std::pow(r, n - 1) *
               std::exp(-r * r / (4.0 * tau));
      },
      0.0, cut, 1e-13);
}

double two_sided_tail_moment(double p, double b) {
  const double cut = b + 12.0 + 2.0 * std::sqrt(std::max(p, 1.0));
  return 2.0 * num::integrate(
                   [&](double r) { return std::pow(r, p) * gauss::phi_pdf(r); },
                   b, cut, 1e-13);
}

}  // namespace

ScoreField score_field(const geom::FlowFamily& flow,
                       const heat::KernelMeasure& nu, int direction,
                       double step_hint) {
  if (direction != 1 && direction != -1) {
    throw std::invalid_argument("score_field: direction must be +1 or -1");
  }
  const Ctx c = make_ctx(flow, nu);
  if (c.m.kind == geom::FlowKind::WarpedS2) {
    throw std::invalid_argument(
        "score_field: warped kind has no reduced basepoint derivative");
  }
  const auto& g = c.m.grid;
  const double h = g.spacing();
  double coarse = 4.0 * h;
  if (step_hint != 0.0) {
    if (step_hint < h) {
      throw std::invalid_argument(
          "score_field: differencing step below grid resolution");
    }
    coarse = step_hint;
  }
  ScoreField f;
  f.direction = direction;
  f.x0 = nu.x0;
  f.t0 = nu.t0;
  f.s = nu.s;
  f.values.grid = g;
  f.values.time = nu.s;
  f.values.values.resize(g.node_count());
  const double sgn = static_cast<double>(direction);
  if (c.m.kind == geom::FlowKind::EuclideanExact) {
    f.step = 0.0;
    for (int i = 0; i < g.node_count(); ++i) {
      f.values.values[i] = sgn * (g.node(i) - nu.x0) / (2.0 * c.tau);
    }
    return f;
  }
  const double fine = 0.5 * coarse;
  f.step = fine;
  if (c.m.kind == geom::FlowKind::FlatTorus) {
    const double P = g.length;
    auto diff = [&](double y, double d) {
      const double lp =
          std::log(heat::wrapped_gauss_density(y, nu.x0 + d, c.tau, P));
      const double lm =
          std::log(heat::wrapped_gauss_density(y, nu.x0 - d, c.tau, P));
      return (lp - lm) / (2.0 * d);
    };
    for (int i = 0; i < g.node_count(); ++i) {
      const double y = g.node(i);
      const double s4 = diff(y, coarse);
      const double s2 = diff(y, fine);
      f.values.values[i] = sgn * (4.0 * s2 - s4) / 3.0;
    }
    return f;
  }
  // Round sphere: basepoint differencing along the meridian shifts the
  // argument of the radial profile; the azimuthal cosine is restored by
  // the separable representation.
  f.separable = true;
  const double rho_t = std::sqrt(flow.metric_at(nu.t0).a_coef[0]);
  auto diff = [&](double th, double d) {
    return (log_density_at(nu, th - d) - log_density_at(nu, th + d)) /
           (2.0 * d * rho_t);
  };
  for (int i = 0; i < g.node_count(); ++i) {
    const double th = g.node(i);
    const double s4 = diff(th, coarse);
    const double s2 = diff(th, fine);
    f.values.values[i] = sgn * (4.0 * s2 - s4) / 3.0;
  }
  return f;
}

double score_eval(const ScoreField& f, double x) {
  if (f.step == 0.0 && !f.separable) {
    const double tau = f.t0 - f.s;
    return f.direction * (x - f.x0) / (2.0 * tau);
  }
  return heat::eval_field(f.values, x);
}

double score_mean(const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
                  const ScoreField& f) {
  const Ctx c = make_ctx(flow, nu);
  if (c.sphere) return 0.0;
  return iso::nu_integral(flow, nu,
                          [&](double x) { return score_eval(f, x); });
}

SetBoundReport set_bound_check(const geom::FlowFamily& flow,
                               const heat::KernelMeasure& nu,
                               const ScoreField& f,
                               const iso::WeightedSet& X) {
  const Ctx c = make_ctx(flow, nu);
  SetBoundReport r;
  r.mass = iso::nu_measure(flow, nu, X);
  r.bound = gauss::profile(std::clamp(r.mass, 0.0, 1.0)) /
            std::sqrt(2.0 * c.tau);
  if (c.sphere) {
    r.lhs = 0.0;  // azimuthal factor integrates out over band sets
  } else {
    r.lhs = iso::nu_integral(
        flow, nu, [&](double x) { return score_eval(f, x); }, X);
  }
  r.margin = r.bound - std::fabs(r.lhs);
  return r;
}

std::vector<PartialSumRow> rearrangement_partial_sums(
    const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
    const ScoreField& f, const std::vector<double>& a_grid) {
  const Ctx c = make_ctx(flow, nu);
  for (double a : a_grid) {
    if (!(a > 0.0 && a < 1.0)) {
      throw std::invalid_argument(
          "rearrangement_partial_sums: a must lie in (0, 1)");
    }
  }
  Atoms at = score_atoms(flow, nu, f, c);
  std::sort(at.vw.begin(), at.vw.end(),
            [](const auto& l, const auto& r) { return l.first > r.first; });
  std::vector<double> cumw(at.vw.size() + 1, 0.0);
  std::vector<double> cums(at.vw.size() + 1, 0.0);
  for (size_t i = 0; i < at.vw.size(); ++i) {
    cumw[i + 1] = cumw[i] + at.vw[i].second;
    cums[i + 1] = cums[i] + at.vw[i].first * at.vw[i].second;
  }
  std::vector<PartialSumRow> rows;
  rows.reserve(a_grid.size());
  const double inv_tau = 1.0 / std::sqrt(2.0 * c.tau);
  for (double a : a_grid) {
    const double target = a * at.total;
    const auto it = std::lower_bound(cumw.begin(), cumw.end(), target);
    const size_t k = static_cast<size_t>(it - cumw.begin());
    PartialSumRow row;
    row.a = a;
    if (k == 0) {
      row.value = 0.0;
    } else if (k > at.vw.size()) {
      row.value = cums.back();
    } else {
      row.value = cums[k - 1] + at.vw[k - 1].first * (target - cumw[k - 1]);
    }
    row.bound = gauss::profile(a) * inv_tau;
    row.margin = row.bound - row.value;
    rows.push_back(row);
  }
  return rows;
}

std::vector<ConvexOrderRow> convex_order_check(
    const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
    const ScoreField& f, const std::vector<ConvexPsi>& family) {
  const Ctx c = make_ctx(flow, nu);
  const double sigma = 1.0 / std::sqrt(2.0 * c.tau);
  std::vector<ConvexOrderRow> rows;
  rows.reserve(family.size());
  for (const auto& psi : family) {
    validate_psi(psi);
    ConvexOrderRow row;
    row.psi = psi;
    row.value = psi_expectation(flow, nu, f, c, psi);
    row.bound = gaussian_psi_moment(psi, sigma);
    row.margin = row.bound - row.value;
    rows.push_back(row);
  }
  return rows;
}

MomentReport moment_check(const geom::FlowFamily& flow,
                          const heat::KernelMeasure& nu, const ScoreField& f,
                          double p) {
  if (p < 1.0) throw std::invalid_argument("moment_check: p >= 1 required");
  const Ctx c = make_ctx(flow, nu);
  ConvexPsi psi{ConvexPsi::Kind::AbsPow, p};
  MomentReport r;
  r.p = p;
  r.value = std::pow(c.tau, 0.5 * p) * psi_expectation(flow, nu, f, c, psi);
  r.bound = directional_bound(p);
  r.margin = r.bound - r.value;
  return r;
}

GradientMomentReport gradient_moment_check(const geom::FlowFamily& flow,
                                           const heat::KernelMeasure& nu,
                                           const ScoreField& f, double p) {
  if (p < 1.0) {
    throw std::invalid_argument("gradient_moment_check: p >= 1 required");
  }
  const Ctx c = make_ctx(flow, nu);
  const double tp = std::pow(c.tau, 0.5 * p);
  GradientMomentReport r;
  r.p = p;
  r.bound = vector_bound(p, c.n);
  if (c.m.kind == geom::FlowKind::EuclideanExact && c.n >= 2) {
    // Isotropic model: |grad log K| = |y - x| / (2 tau), a radial law.
    r.value = tp * radial_moment(p, c.n, c.tau) / std::pow(2.0 * c.tau, p);
    r.weighted_form = r.bound;  // closed form of the same integral
  } else if (c.sphere) {
    geom::DiscreteField mag;
    mag.grid = c.m.grid;
    mag.time = nu.s;
    mag.values.resize(c.m.grid.node_count());
    for (int i = 0; i < c.m.grid.node_count(); ++i) {
      mag.values[i] = std::pow(std::fabs(f.values.values[i]), p);
    }
    r.value = tp * heat::nu_expect(flow, nu, mag);
    r.weighted_form =
        tp * iso::nu_integral(flow, nu, [&](double th) {
          return std::pow(std::fabs(score_eval(f, th)), p);
        });
  } else {
    std::vector<double> breaks = crossings(f, 0.0);
    r.value = tp * iso::nu_integral(
                       flow, nu,
                       [&](double x) {
                         return std::pow(std::fabs(score_eval(f, x)), p);
                       },
                       breaks);
    // Same integrand as int |grad K|^p / K^{p-1} dg_s, re-weighted; the
    // second route goes through the nodal quadrature weights.
    geom::DiscreteField gfield;
    gfield.grid = c.m.grid;
    gfield.time = nu.s;
    gfield.values.resize(c.m.grid.node_count());
    for (int i = 0; i < c.m.grid.node_count(); ++i) {
      const double K = nu.density.values[i];
      const double gradK = std::fabs(f.values.values[i]) * K;
      gfield.values[i] =
          K > 0.0 ? std::pow(gradK, p) / std::pow(K, p - 1.0) : 0.0;
    }
    r.weighted_form = tp * geom::volume_integral(gfield, c.m);
  }
  r.margin = r.bound - r.value;
  return r;
}

LocalizedMomentReport localized_moment_check(const geom::FlowFamily& flow,
                                             const heat::KernelMeasure& nu,
                                             const ScoreField& f,
                                             const iso::WeightedSet& X,
                                             double p) {
  if (p < 1.0) {
    throw std::invalid_argument("localized_moment_check: p >= 1 required");
  }
  const Ctx c = make_ctx(flow, nu);
  LocalizedMomentReport r;
  r.p = p;
  r.mass = std::clamp(iso::nu_measure(flow, nu, X), 0.0, 1.0);
  if (r.mass <= 0.0) return r;  // empty set: both sides vanish
  const double b = gauss::phi_quantile(1.0 - 0.5 * r.mass);
  r.bound = two_sided_tail_moment(p, b) / std::pow(2.0 * c.tau, 0.5 * p);
  if (c.sphere) {
    const double w_int = iso::nu_integral(
        flow, nu,
        [&](double th) { return std::pow(std::fabs(score_eval(f, th)), p); },
        X);
    r.value = w_int * cos_abs_moment(p);
  } else {
    std::vector<double> breaks = crossings(f, 0.0);
    r.value = iso::nu_integral(
        flow, nu,
        [&](double x) { return std::pow(std::fabs(score_eval(f, x)), p); },
        X, breaks);
  }
  r.margin = r.bound - r.value;
  const double lg = std::log(2.0 / r.mass);
  r.envelope_ratio = std::pow(c.tau, 0.5 * p) * r.value /
                     (r.mass * std::pow(lg, 0.5 * p));
  return r;
}

AverageBoundReport average_hk_upper_check(const geom::FlowFamily& flow,
                                          double x0, double t0, double s,
                                          const iso::WeightedSet& A,
                                          const iso::WeightedSet& B,
                                          double beta, double v0) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument(
        "average_hk_upper_check: beta must lie in (0, 1)");
  }
  const auto nu = heat::conjugate_kernel(flow, x0, t0, s);
  const double tau = heat::time_gap(nu);
  AverageBoundReport r;
  r.beta = beta;
  r.mass_b = iso::nu_measure(flow, nu, B);
  if (r.mass_b + 1e-12 < beta) {
    throw std::invalid_argument(
        "average_hk_upper_check: anchor set carries less mass than beta");
  }
  r.dist = iso::set_distance(flow, A, B);
  if (!(r.dist > 0.0) || !std::isfinite(r.dist)) {
    throw std::invalid_argument(
        "average_hk_upper_check: sets must be a positive distance apart");
  }
  r.lhs = iso::nu_measure(flow, nu, A);
  r.bound = 1.0 - gauss::phi_cdf(gauss::phi_quantile(beta) +
                                 r.dist / std::sqrt(2.0 * tau));
  r.margin = r.bound - r.lhs;
  if (v0 > 0.0) {
    const int n = flow.metric_at(s).dim;
    const double vmin = v0 * std::pow(tau, 0.5 * n);
    r.volume_a = iso::set_volume(flow, A);
    if (r.volume_a + 1e-12 * vmin < vmin) {
      throw std::invalid_argument(
          "average_hk_upper_check: set volume below the averaging floor");
    }
    r.averaged = true;
    r.avg_lhs = r.lhs / r.volume_a;
    r.avg_bound = r.bound / vmin;
  }
  return r;
}

void write_partial_sum_csv(const std::vector<PartialSumRow>& rows,
                           std::ostream& out) {
  out << "a,value,bound,margin\n";
  out.precision(17);
  for (const auto& r : rows) {
    out << r.a << ',' << r.value << ',' << r.bound << ',' << r.margin << '\n';
  }
}

namespace {

const char* psi_name(ConvexPsi::Kind k) {
  switch (k) {
    case ConvexPsi::Kind::AbsPow:
      return "abs_pow";
    case ConvexPsi::Kind::HingePos:
      return "hinge";
    case ConvexPsi::Kind::Exp:
      return "exp";
    case ConvexPsi::Kind::MaxC:
      return "max";
  }
  return "unknown";
}

}  // namespace

void write_convex_order_csv(const std::vector<ConvexOrderRow>& rows,
                            std::ostream& out) {
  out << "psi,param,value,bound,margin\n";
  out.precision(17);
  for (const auto& r : rows) {
    out << psi_name(r.psi.kind) << ',' << r.psi.param << ',' << r.value << ','
        << r.bound << ',' << r.margin << '\n';
  }
}

void write_partial_sum_svg(const std::vector<PartialSumRow>& rows,
                           std::ostream& out) {
  plot::Series measured{"partial sum", {}, {}};
  plot::Series bound{"profile bound", {}, {}};
  for (const auto& r : rows) {
    measured.x.push_back(r.a);
    measured.y.push_back(r.value);
    bound.x.push_back(r.a);
    bound.y.push_back(r.bound);
  }
  plot::write_line_svg("score rearrangement partial sums", {measured, bound},
                       out);
}

}  // namespace hkflow::score
