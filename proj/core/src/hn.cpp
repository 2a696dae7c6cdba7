#include "hkflow/hn.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "hkflow/gaussian.hpp"
#include "hkflow/isoperimetry.hpp"
#include "hkflow/numerics.hpp"
#include "hkflow/plot.hpp"

namespace hkflow::hn {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_sphere(geom::FlowKind k) {
  return k == geom::FlowKind::RoundSphere || k == geom::FlowKind::WarpedS2;
}

// Euclidean window with dim >= 2: the grid holds the marginal along the
// axis, so distance functionals around an axis point go through the radial
// density of the isotropic Gaussian instead of the grid quadrature.
bool radial_model(const geom::MetricSample& m) {
  return m.kind == geom::FlowKind::EuclideanExact && m.dim >= 2;
}

std::function<double(double)> radial_density(int n, double tau) {
  const double c = 2.0 / (std::tgamma(0.5 * n) * std::pow(4.0 * tau, 0.5 * n));
  return [c, n, tau](double r) {
    return c * std::pow(r, n - 1) * std::exp(-r * r / (4.0 * tau));
  };
}

double radial_tail(int n, double tau, double r) {
  if (r <= 0.0) return 1.0;
  const double cut =
      r + std::sqrt(2.0 * n * tau) + 16.0 * std::sqrt(2.0 * tau);
  return num::integrate(radial_density(n, tau), r, cut, 1e-14);
}

// Frozen per-call state shared by the checks.
struct MeasureContext {
  const geom::FlowFamily* flow = nullptr;
  const heat::KernelMeasure* nu = nullptr;
  geom::MetricSample m;
  double tau = 0.0;
  double total = 1.0;  // measured full mass on grid kinds
  bool radial = false;
};

MeasureContext make_context(const geom::FlowFamily& flow,
                            const heat::KernelMeasure& nu) {
  MeasureContext c;
  c.flow = &flow;
  c.nu = &nu;
  c.m = flow.metric_at(nu.s);
  c.tau = heat::time_gap(nu);
  if (!(c.tau > 0.0)) {
    throw std::invalid_argument("hn: measure needs t0 > s");
  }
  if (c.m.kind == geom::FlowKind::FlatTorus && c.m.dim != 1) {
    throw std::invalid_argument(
        "hn: product tori are not reduced to one coordinate");
  }
  c.radial = radial_model(c.m);
  if (!c.radial) {
    c.total = iso::nu_measure(flow, nu, iso::full_set(nu.s));
  }
  return c;
}

// Reduced-coordinate region of the metric ball {d_s(z, .) <= r}. full_out
// reports the ball swallowing the whole model.
iso::WeightedSet ball_set(const geom::MetricSample& m, double s, double z,
                          double r, bool* full_out) {
  *full_out = false;
  if (m.kind == geom::FlowKind::EuclideanExact) {
    return iso::interval_set(z - r, z + r, s);
  }
  if (m.kind == geom::FlowKind::FlatTorus) {
    const double p = m.grid.length;
    if (r >= 0.5 * p) {
      *full_out = true;
      return iso::full_set(s);
    }
    auto wrap = [p](double x) {
      x = std::fmod(x, p);
      return x < 0.0 ? x + p : x;
    };
    return iso::interval_set(wrap(z - r), wrap(z + r), s);
  }
  // sphere kinds: the center sits on a pole, the ball is a polar cap
  const bool north = z < 0.5 * kPi;
  const double far = north ? kPi : 0.0;
  if (geom::distance(m, z, far) <= r) {
    *full_out = true;
    return iso::full_set(s);
  }
  double theta;
  if (m.kind == geom::FlowKind::RoundSphere) {
    const double rho = std::sqrt(m.a_coef[0]);
    theta = north ? r / rho : kPi - r / rho;
  } else {
    double a = z;
    double b = far;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (a + b);
      (geom::distance(m, z, mid) < r ? a : b) = mid;
    }
    theta = 0.5 * (a + b);
  }
  return north ? iso::interval_set(0.0, theta, s)
               : iso::interval_set(theta, kPi, s);
}

double ball_mass(const MeasureContext& c, double z, double r) {
  if (r <= 0.0) return 0.0;
  if (c.radial) return 1.0 - radial_tail(c.m.dim, c.tau, r);
  bool full = false;
  const auto set = ball_set(c.m, c.nu->s, z, r, &full);
  if (full) return c.total;
  return iso::nu_measure(*c.flow, *c.nu, set);
}

double ball_tail(const MeasureContext& c, double z, double r) {
  if (c.radial) return radial_tail(c.m.dim, c.tau, r);
  return std::max(0.0, c.total - ball_mass(c, z, r));
}

// Largest radius the quantile bisection needs to consider.
double reach(const MeasureContext& c, double z) {
  switch (c.m.kind) {
    case geom::FlowKind::EuclideanExact:
      if (c.radial) {
        return std::sqrt(2.0 * c.m.dim * c.tau) + 40.0 * std::sqrt(c.tau);
      }
      return std::max(z, c.m.grid.length - z);
    case geom::FlowKind::FlatTorus:
      return 0.5 * c.m.grid.length;
    default:
      return geom::distance(c.m, z, z < 0.5 * kPi ? kPi : 0.0);
  }
}

// inf{r : nu(B(z, r)) >= b nu(M)} by bisection; the ball mass is continuous
// and increasing in r, so the limit is the left-continuous quantile.
double distance_quantile(const MeasureContext& c, double z, double b) {
  double lo = 0.0;
  double hi = reach(c, z);
  const double target = b * c.total;
  if (ball_mass(c, z, hi) < target) return hi;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ball_mass(c, z, mid) >= target ? hi : lo) = mid;
  }
  return hi;
}

double moment_at(const MeasureContext& c, double z) {
  if (c.radial) {
    const double d = z - c.nu->x0;
    return d * d + 2.0 * c.m.dim * c.tau;
  }
  geom::DiscreteField f{c.m.grid, c.nu->s, {}};
  const int nn = c.m.grid.node_count();
  f.values.resize(nn);
  for (int i = 0; i < nn; ++i) {
    const double d = geom::distance(c.m, z, c.m.grid.node(i));
    f.values[i] = d * d;
  }
  return heat::nu_expect(*c.flow, *c.nu, f);
}

// Chebyshev-split tail bound at parameter a_par > 1, admissible while
// sqrt(a_par hn tau) <= r.
double split_bound(double a_par, double r, double hn_val, double tau) {
  const double head = gauss::phi_quantile(1.0 - 1.0 / a_par);
  const double shift =
      (r - std::sqrt(a_par * hn_val * tau)) / std::sqrt(2.0 * tau);
  return std::clamp(1.0 - gauss::phi_cdf(head + shift), 0.0, 1.0);
}

// Minimize the split bound over a log grid of admissible parameters. The
// median split A = 2 joins the candidates whenever admissible so the
// optimum never exceeds the median bound; a local refinement sharpens the
// grid winner.
void optimal_split(double r, double hn_val, double tau, double* a_out,
                   double* bound_out) {
  const double amax = std::min(r * r / (hn_val * tau), 1e12);
  *a_out = 0.0;
  *bound_out = 1.0;
  if (!(amax > 1.0 + 1e-9)) return;
  std::vector<double> cand;
  const int grid_points = 96;
  const double u0 = std::log(1.0 + 1e-6);
  const double u1 = std::log(amax);
  for (int j = 0; j <= grid_points; ++j) {
    cand.push_back(std::exp(u0 + (u1 - u0) * j / grid_points));
  }
  if (amax >= 2.0 * (1.0 - 1e-12)) cand.push_back(std::min(2.0, amax));
  double best_a = cand[0];
  double best = split_bound(cand[0], r, hn_val, tau);
  for (double a_par : cand) {
    const double v = split_bound(a_par, r, hn_val, tau);
    if (v < best) {
      best = v;
      best_a = a_par;
    }
  }
  const double lo = std::max(1.0 + 1e-9, best_a * 0.8);
  const double hi = std::min(amax, best_a * 1.25);
  if (hi > lo) {
    const double a_ref = num::golden_section_min(
        [&](double a_par) { return split_bound(a_par, r, hn_val, tau); }, lo,
        hi, 1e-10);
    const double v = split_bound(a_ref, r, hn_val, tau);
    if (v < best) {
      best = v;
      best_a = a_ref;
    }
  }
  *a_out = best_a;
  *bound_out = best;
}

// Kink coordinates of d(z, .) and of the excess (d - r2)_+ in the reduced
// coordinate: the center, the excess crossing points, and the torus
// antipode.
std::vector<double> kink_points(const MeasureContext& c, double z,
                                double r2) {
  std::vector<double> pts{z};
  bool full = false;
  const auto set = ball_set(c.m, c.nu->s, z, r2, &full);
  if (!full) {
    for (const auto& p : iso::region_pieces(set, c.m)) {
      pts.push_back(p.first);
      pts.push_back(p.second);
    }
  }
  if (c.m.kind == geom::FlowKind::FlatTorus) {
    const double p = c.m.grid.length;
    pts.push_back(std::fmod(z + 0.5 * p, p));
  }
  return pts;
}

}  // namespace

double hn_constant(int n) {
  if (n < 1) throw std::invalid_argument("hn_constant: n must be >= 1");
  return 4.0 + 0.5 * (n - 1) * kPi * kPi;
}

HnCenter find_hn_center(const geom::FlowFamily& flow,
                        const heat::KernelMeasure& nu) {
  const auto c = make_context(flow, nu);
  double z = 0.0;
  double moment = 0.0;
  if (is_sphere(c.m.kind)) {
    const double m0 = moment_at(c, 0.0);
    const double m1 = moment_at(c, kPi);
    z = m0 <= m1 ? 0.0 : kPi;
    moment = std::min(m0, m1);
  } else {
    const int nn = c.m.grid.node_count();
    int best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nn; ++i) {
      const double v = moment_at(c, c.m.grid.node(i));
      if (v < best_val) {
        best_val = v;
        best = i;
      }
    }
    const double h = c.m.grid.spacing();
    const double x = c.m.grid.node(best);
    z = num::golden_section_min([&](double zz) { return moment_at(c, zz); },
                                x - h, x + h, 1e-10);
    if (c.m.kind == geom::FlowKind::FlatTorus) {
      const double p = c.m.grid.length;
      z = std::fmod(z + p, p);
    } else {
      z = std::clamp(z, 0.0, c.m.grid.length);
    }
    moment = moment_at(c, z);
  }
  HnCenter out;
  out.z = z;
  out.second_moment = moment;
  out.hn = hn_constant(c.m.dim);
  out.budget = out.hn * c.tau;
  out.within_budget = moment <= out.budget * (1.0 + 1e-9) + 1e-12;
  return out;
}

std::vector<TailBoundRow> hn_tail_check(const geom::FlowFamily& flow,
                                        const heat::KernelMeasure& nu,
                                        const HnCenter& c,
                                        const std::vector<double>& radii) {
  const auto ctx = make_context(flow, nu);
  const double r2 = std::sqrt(2.0 * c.hn * ctx.tau);
  const double root = std::sqrt(2.0 * ctx.tau);
  std::vector<TailBoundRow> rows;
  rows.reserve(radii.size());
  for (double r : radii) {
    if (r < 0.0) {
      throw std::invalid_argument("hn_tail_check: negative radius");
    }
    TailBoundRow row;
    row.r = r;
    row.tail = ball_tail(ctx, c.z, r);
    optimal_split(r, c.hn, ctx.tau, &row.profile_a, &row.profile_bound);
    row.median_bound = r >= r2
                           ? gauss::phi_cdf(-(r - r2) / root)
                           : std::numeric_limits<double>::quiet_NaN();
    const double excess = std::max(0.0, r - r2);
    row.exp_bound = std::exp(-excess * excess / (4.0 * ctx.tau));
    double tight = std::min(row.profile_bound, row.exp_bound);
    if (r >= r2) tight = std::min(tight, row.median_bound);
    row.margin = tight - row.tail;
    rows.push_back(row);
  }
  return rows;
}

std::vector<QuantileLocRow> quantile_localization_check(
    const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
    const HnCenter& c, const std::vector<double>& bs) {
  const auto ctx = make_context(flow, nu);
  const double r2 = std::sqrt(2.0 * c.hn * ctx.tau);
  const double root = std::sqrt(2.0 * ctx.tau);
  std::vector<QuantileLocRow> rows;
  rows.reserve(bs.size());
  for (double b : bs) {
    if (!(b >= 0.5) || !(b < 1.0)) {
      throw std::invalid_argument(
          "quantile_localization_check: b must lie in [1/2, 1)");
    }
    QuantileLocRow row;
    row.b = b;
    row.q = distance_quantile(ctx, c.z, b);
    row.bound = r2 + root * gauss::phi_quantile(b);
    row.margin = row.bound - row.q;
    rows.push_back(row);
  }
  return rows;
}

ExcessMomentReport excess_moment_check(const geom::FlowFamily& flow,
                                       const heat::KernelMeasure& nu,
                                       const HnCenter& c,
                                       const std::vector<double>& lambdas,
                                       const std::vector<double>& betas) {
  const auto ctx = make_context(flow, nu);
  const double r2 = std::sqrt(2.0 * c.hn * ctx.tau);
  std::vector<double> breaks;
  if (!ctx.radial) breaks = kink_points(ctx, c.z, r2);

  // Integrate g(d(z, .)) against the measure: radial quadrature on the
  // dim >= 2 window, panel quadrature with kink breaks on grid kinds.
  // peak + tail_scale size the radial truncation.
  auto moment_of = [&](const std::function<double(double)>& g_of_d,
                       double peak, double tail_scale) {
    if (ctx.radial) {
      const int n = ctx.m.dim;
      const auto pdf = radial_density(n, ctx.tau);
      const double cut =
          std::max(r2, peak) + std::sqrt(2.0 * n * ctx.tau) +
          20.0 * std::max(tail_scale, std::sqrt(ctx.tau));
      return num::integrate(
          [&](double r) { return g_of_d(r) * pdf(r); }, 0.0, cut, 1e-13);
    }
    return iso::nu_integral(
        *ctx.flow, *ctx.nu,
        [&](double x) { return g_of_d(geom::distance(ctx.m, c.z, x)); },
        breaks);
  };

  ExcessMomentReport rep;
  rep.offset = r2;
  for (double lam : lambdas) {
    if (lam < 0.0) {
      throw std::invalid_argument("excess_moment_check: lambda must be >= 0");
    }
    ExcessMomentRow row;
    row.parameter = lam;
    row.value = moment_of(
        [&](double d) { return std::exp(lam * std::max(0.0, d - r2)); },
        r2 + 2.0 * ctx.tau * lam, std::sqrt(2.0 * ctx.tau));
    row.bound = gauss::halfgaussian_exp_moment(lam, ctx.tau);
    row.margin = row.bound - row.value;
    rep.exp_rows.push_back(row);

    ExcessMomentRow drow;
    drow.parameter = lam;
    drow.value =
        moment_of([&](double d) { return std::exp(lam * d); },
                  r2 + 2.0 * ctx.tau * lam, std::sqrt(2.0 * ctx.tau));
    drow.bound = std::exp(lam * r2) * row.bound;
    drow.margin = drow.bound - drow.value;
    rep.distance_rows.push_back(drow);
  }
  for (double beta : betas) {
    if (beta < 0.0) {
      throw std::invalid_argument("excess_moment_check: beta must be >= 0");
    }
    ExcessMomentRow row;
    row.parameter = beta;
    row.bound = gauss::halfgaussian_square_moment(beta, ctx.tau);
    row.value = moment_of(
        [&](double d) {
          const double y = std::max(0.0, d - r2);
          return std::exp(beta * y * y / ctx.tau);
        },
        r2, std::sqrt(ctx.tau / std::max(0.25 - beta, 1e-6)));
    row.margin = row.bound - row.value;
    rep.square_rows.push_back(row);
  }
  return rep;
}

std::vector<DominationRow> excess_domination_scan(
    const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
    const HnCenter& c, const std::vector<double>& radii) {
  const auto ctx = make_context(flow, nu);
  const double r2 = std::sqrt(2.0 * c.hn * ctx.tau);
  const double root = std::sqrt(2.0 * ctx.tau);
  std::vector<DominationRow> rows;
  rows.reserve(radii.size());
  for (double r : radii) {
    if (!(r > 0.0)) {
      throw std::invalid_argument(
          "excess_domination_scan: radii must be > 0");
    }
    DominationRow row;
    row.r = r;
    row.tail = ball_tail(ctx, c.z, r2 + r);
    row.bound = gauss::phi_cdf(-r / root);
    row.margin = row.bound - row.tail;
    rows.push_back(row);
  }
  return rows;
}

void write_tail_csv(const std::vector<TailBoundRow>& rows,
                    std::ostream& out) {
  out << "r,tail,profile_a,profile_bound,median_bound,exp_bound,margin\n";
  out.precision(17);
  for (const auto& row : rows) {
    out << row.r << ',' << row.tail << ',' << row.profile_a << ','
        << row.profile_bound << ',' << row.median_bound << ','
        << row.exp_bound << ',' << row.margin << '\n';
  }
}

void write_quantile_csv(const std::vector<QuantileLocRow>& rows,
                        std::ostream& out) {
  out << "b,q,bound,margin\n";
  out.precision(17);
  for (const auto& row : rows) {
    out << row.b << ',' << row.q << ',' << row.bound << ',' << row.margin
        << '\n';
  }
}

void write_tail_svg(const std::vector<TailBoundRow>& rows,
                    std::ostream& out) {
  plot::Series tail{"measured tail", {}, {}};
  plot::Series prof{"profile bound", {}, {}};
  plot::Series med{"median bound", {}, {}};
  plot::Series expo{"exponential bound", {}, {}};
  for (const auto& row : rows) {
    tail.x.push_back(row.r);
    tail.y.push_back(row.tail);
    prof.x.push_back(row.r);
    prof.y.push_back(row.profile_bound);
    med.x.push_back(row.r);
    med.y.push_back(row.median_bound);
    expo.x.push_back(row.r);
    expo.y.push_back(row.exp_bound);
  }
  plot::write_line_svg("ball tail vs localization bounds",
                       {tail, prof, med, expo}, out);
}

}  // namespace hkflow::hn
