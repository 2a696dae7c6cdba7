#include "hkflow/functional.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hkflow/gaussian.hpp"
#include "hkflow/numerics.hpp"
#include "hkflow/plot.hpp"

namespace hkflow::fi {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kFloor = 1e-300;  // entropy / power floor, 0 log 0 = 0

const std::vector<double>& gl5_nodes() {
  static std::vector<double> nodes, weights;
  if (nodes.empty()) num::gauss_legendre(5, nodes, weights);
  return nodes;
}
const std::vector<double>& gl5_weights() {
  static std::vector<double> nodes, weights;
  if (weights.empty()) num::gauss_legendre(5, nodes, weights);
  return weights;
}

void check_time(const heat::KernelMeasure& nu, const geom::DiscreteField& f,
                const char* where) {
  if (std::abs(f.time - nu.s) > 1e-12) {
    throw std::invalid_argument(std::string(where) +
                                ": field time does not match the measure");
  }
}

// Fourth-order nodal derivative in the reduced coordinate. Periodic wrap on
// the torus; even reflection at interval ends, which pins the derivative to
// zero at the poles (axisymmetric regularity).
geom::DiscreteField deriv4_field(const geom::DiscreteField& f) {
  const int nn = f.grid.node_count();
  const double h = f.grid.spacing();
  geom::DiscreteField out{f.grid, f.time, std::vector<double>(nn)};
  const bool wrap = f.grid.topology == geom::Topology::Periodic;
  auto at = [&](int j) {
    if (wrap) return f.values[((j % nn) + nn) % nn];
    if (j < 0) j = -j;
    if (j >= nn) j = 2 * (nn - 1) - j;
    return f.values[j];
  };
  for (int i = 0; i < nn; ++i) {
    out.values[i] =
        (-at(i + 2) + 8.0 * at(i + 1) - 8.0 * at(i - 1) + at(i - 2)) /
        (12.0 * h);
  }
  return out;
}

// Coordinates where the nodal field crosses the level, linear between nodes.
std::vector<double> crossings(const geom::DiscreteField& f, double level) {
  const int cells = f.grid.n;
  const double h = f.grid.spacing();
  const bool wrap = f.grid.topology == geom::Topology::Periodic;
  std::vector<double> out;
  auto value = [&](int i) {
    return f.values[wrap ? i % cells : i] - level;
  };
  for (int i = 0; i < cells; ++i) {
    const double a = value(i);
    const double b = value(i + 1);
    if ((a < 0.0) != (b < 0.0)) out.push_back((i + a / (a - b)) * h);
  }
  return out;
}

bool is_sphere(geom::FlowKind k) {
  return k == geom::FlowKind::RoundSphere || k == geom::FlowKind::WarpedS2;
}

// Kernel density and volume element per unit coordinate, matching the
// conventions of the region quadrature in the isoperimetry layer.
std::function<double(double)> density_eval(const heat::KernelMeasure& nu,
                                           const geom::MetricSample& m) {
  const double tau = heat::time_gap(nu);
  switch (m.kind) {
    case geom::FlowKind::EuclideanExact:
      return [x0 = nu.x0, tau](double x) {
        return heat::gauss_heat_density(x, x0, tau);
      };
    case geom::FlowKind::FlatTorus:
      return [x0 = nu.x0, tau, p = m.grid.length](double x) {
        return heat::wrapped_gauss_density(x, x0, tau, p);
      };
    default:
      return [&nu](double x) {
        return std::max(heat::eval_field(nu.density, x), 0.0);
      };
  }
}

std::function<double(double)> area_eval(const geom::MetricSample& m) {
  if (!is_sphere(m.kind)) {
    return [](double) { return 1.0; };
  }
  // By-value capture: the closure outlives the caller's metric sample.
  return [m](double th) {
    return 2.0 * kPi * geom::conformal_at(m, th) * std::sin(th);
  };
}

struct Ctx {
  geom::MetricSample m;
  double tau = 0.0;
  std::function<double(double)> dens;
  std::function<double(double)> area;
};

Ctx make_ctx(const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
             const char* where) {
  Ctx c;
  c.tau = heat::time_gap(nu);
  if (!(c.tau > 0.0)) {
    throw std::invalid_argument(std::string(where) +
                                ": measure needs t0 > s");
  }
  c.m = flow.metric_at(nu.s);
  c.dens = density_eval(nu, c.m);
  c.area = area_eval(c.m);
  return c;
}

// |grad h|(x) from the nodal derivative and the conformal factor.
double grad_at(const geom::DiscreteField& dh, const geom::MetricSample& m,
               double x) {
  return std::abs(heat::eval_field(dh, x)) /
         std::sqrt(geom::conformal_at(m, x));
}

// int |grad h|^p dnu, panels split where the derivative changes sign so
// the absolute value stays smooth inside each panel.
double grad_lp_raw(const geom::FlowFamily& flow,
                   const heat::KernelMeasure& nu, const Ctx& c,
                   const geom::DiscreteField& h, double p) {
  const auto dh = deriv4_field(h);
  const auto breaks = crossings(dh, 0.0);
  const double v = iso::nu_integral(
      flow, nu,
      [&](double x) { return std::pow(grad_at(dh, c.m, x), p); }, breaks);
  return std::max(v, 0.0);
}

double grad_lp(const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
               const Ctx& c, const geom::DiscreteField& h, double p) {
  return std::pow(grad_lp_raw(flow, nu, c, h, p), 1.0 / p);
}

// (int |h - shift|^p dnu)^{1/p} with panels split at the level crossings.
double centered_lp(const geom::FlowFamily& flow,
                   const heat::KernelMeasure& nu,
                   const geom::DiscreteField& h, double shift, double p) {
  const auto breaks = crossings(h, shift);
  const double v = iso::nu_integral(
      flow, nu,
      [&](double x) {
        return std::pow(std::abs(heat::eval_field(h, x) - shift), p);
      },
      breaks);
  return std::pow(std::max(v, 0.0), 1.0 / p);
}

// nu({h > r}) through the exact region quadrature.
double superlevel_measure(const geom::FlowFamily& flow,
                          const heat::KernelMeasure& nu,
                          const geom::DiscreteField& neg_h, double r) {
  return iso::nu_measure(flow, nu, iso::sub_level_set(neg_h, -r));
}

// -d/dr nu({h > r}): one term per level crossing, with the cell slope of
// the linear interpolant so the sum is the exact derivative of the measured
// occupation mass.
double occupation_rate(const Ctx& c, const geom::DiscreteField& h, double r) {
  const int cells = h.grid.n;
  const double step = h.grid.spacing();
  const bool wrap = h.grid.topology == geom::Topology::Periodic;
  auto value = [&](int i) { return h.values[wrap ? i % cells : i]; };
  double sum = 0.0;
  for (int i = 0; i < cells; ++i) {
    const double a = value(i) - r;
    const double b = value(i + 1) - r;
    if ((a < 0.0) == (b < 0.0)) continue;
    const double x = (i + a / (a - b)) * step;
    const double slope = std::abs(value(i + 1) - value(i)) / step;
    if (slope < 1e-300) continue;
    sum += c.dens(x) * c.area(x) / slope;
  }
  return sum;
}

struct LevelTable {
  std::vector<double> level;
  std::vector<double> mass;
};

// Level grid for occupation-mass integrals: 512 uniform levels between the
// field extremes, bisected while the mass change exceeds 1/2048. A positive
// defect threshold additionally bisects intervals whose midpoint mass
// deviates from the chord, which bounds the interpolation error of the
// stored table.
LevelTable build_level_table(const geom::FlowFamily& flow,
                             const heat::KernelMeasure& nu,
                             const geom::DiscreteField& h, double defect) {
  const double hmin = *std::min_element(h.values.begin(), h.values.end());
  const double hmax = *std::max_element(h.values.begin(), h.values.end());
  geom::DiscreteField neg = h;
  for (auto& v : neg.values) v = -v;
  auto mu = [&](double r) { return superlevel_measure(flow, nu, neg, r); };

  LevelTable table;
  if (hmax - hmin < 1e-14) {
    table.level = {hmin};
    table.mass = {mu(hmin)};
    return table;
  }
  const double width_floor = (hmax - hmin) * 1e-9;
  std::map<double, double> rows;
  const int base = 512;
  for (int k = 0; k <= base; ++k) {
    const double r = hmin + (hmax - hmin) * k / base;
    rows.emplace(r, mu(r));
  }
  std::vector<std::pair<double, double>> stack(rows.begin(), rows.end());
  std::vector<std::pair<std::pair<double, double>, std::pair<double, double>>>
      work;
  for (std::size_t i = 0; i + 1 < stack.size(); ++i) {
    work.push_back({stack[i], stack[i + 1]});
  }
  while (!work.empty()) {
    const auto [lo, hi] = work.back();
    work.pop_back();
    if (hi.first - lo.first <= width_floor) continue;
    const double rm = 0.5 * (lo.first + hi.first);
    const bool coarse = std::abs(lo.second - hi.second) > 1.0 / 2048.0;
    if (!coarse && defect <= 0.0) continue;
    const double mm = mu(rm);
    rows.emplace(rm, mm);
    if (!coarse &&
        std::abs(mm - 0.5 * (lo.second + hi.second)) <= defect) {
      continue;
    }
    work.push_back({lo, {rm, mm}});
    work.push_back({{rm, mm}, hi});
  }
  table.level.reserve(rows.size());
  table.mass.reserve(rows.size());
  for (const auto& [r, a] : rows) {
    table.level.push_back(r);
    table.mass.push_back(a);
  }
  // Monotone cleanup: quadrature jitter of order 1e-15 must not break the
  // nonincreasing invariant of the mass column.
  for (std::size_t i = 1; i < table.mass.size(); ++i) {
    table.mass[i] = std::min(table.mass[i], table.mass[i - 1]);
  }
  return table;
}

// Integral over the level range of a function of r, on GL5 panels laid out
// by the table so steep stretches of the occupation mass get their own
// panels.
double level_integral(const LevelTable& table,
                      const std::function<double(double)>& f) {
  const auto& gx = gl5_nodes();
  const auto& gw = gl5_weights();
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < table.level.size(); ++i) {
    const double a = table.level[i], b = table.level[i + 1];
    const double half = 0.5 * (b - a);
    if (half <= 0.0) continue;
    const double mid = 0.5 * (a + b);
    for (int q = 0; q < 5; ++q) {
      sum += gw[q] * half * f(mid + half * gx[q]);
    }
  }
  return sum;
}

double piecewise_interp(const std::vector<double>& xs,
                        const std::vector<double>& ys, double x,
                        bool decreasing) {
  if (xs.size() == 1) return ys[0];
  if (!decreasing) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::lower_bound(xs.begin(), xs.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - xs.begin());
    const double w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    return (1.0 - w) * ys[k - 1] + w * ys[k];
  }
  // xs nonincreasing: same lookup against the reversed order.
  if (x >= xs.front()) return ys.front();
  if (x <= xs.back()) return ys.back();
  const auto it = std::lower_bound(xs.begin(), xs.end(), x,
                                   [](double a, double b) { return a > b; });
  const std::size_t k = static_cast<std::size_t>(it - xs.begin());
  const double span = xs[k] - xs[k - 1];
  if (std::abs(span) < 1e-300) return ys[k];
  const double w = (x - xs[k - 1]) / span;
  return (1.0 - w) * ys[k - 1] + w * ys[k];
}

}  // namespace

double RearrangedFunction::eval(double z) const {
  return value_at_mass(gauss::phi_cdf(z / std::sqrt(2.0 * tau)));
}

double RearrangedFunction::value_at_mass(double a) const {
  return piecewise_interp(mass, level, a, /*decreasing=*/true);
}

double RearrangedFunction::superlevel_mass(double r) const {
  return piecewise_interp(level, mass, r, /*decreasing=*/false);
}

RearrangedFunction gaussian_rearrange(const geom::FlowFamily& flow,
                                      const heat::KernelMeasure& nu,
                                      const geom::DiscreteField& h,
                                      double scale) {
  check_time(nu, h, "gaussian_rearrange");
  const auto c = make_ctx(flow, nu, "gaussian_rearrange");
  RearrangedFunction rf;
  rf.tau = scale > 0.0 ? scale : c.tau;
  auto table = build_level_table(flow, nu, h, 2.5e-7);
  rf.level = std::move(table.level);
  rf.mass = std::move(table.mass);
  return rf;
}

CheckReport coarea_profile_check(const geom::FlowFamily& flow,
                                 const heat::KernelMeasure& nu,
                                 const geom::DiscreteField& h) {
  check_time(nu, h, "coarea_profile_check");
  const auto c = make_ctx(flow, nu, "coarea_profile_check");
  CheckReport rep;
  const auto dh = deriv4_field(h);
  rep.lhs = iso::nu_integral(
      flow, nu, [&](double x) { return grad_at(dh, c.m, x); },
      crossings(dh, 0.0));

  const auto table = build_level_table(flow, nu, h, 0.0);
  if (table.level.size() > 1) {
    geom::DiscreteField neg = h;
    for (auto& v : neg.values) v = -v;
    rep.rhs = level_integral(table, [&](double r) {
                return gauss::profile(superlevel_measure(flow, nu, neg, r));
              }) /
              std::sqrt(2.0 * c.tau);
  }
  rep.margin = rep.lhs - rep.rhs;
  return rep;
}

CheckReport polya_szego_check(const geom::FlowFamily& flow,
                              const heat::KernelMeasure& nu,
                              const geom::DiscreteField& h, double p) {
  check_time(nu, h, "polya_szego_check");
  if (!(p >= 1.0)) {
    throw std::invalid_argument("polya_szego_check: needs p >= 1");
  }
  const auto c = make_ctx(flow, nu, "polya_szego_check");
  CheckReport rep;
  rep.rhs = grad_lp_raw(flow, nu, c, h, p);

  // Rearranged side: the chain rule turns |(h deg)'|^p dgamma into
  // I(mu(r))^p / (-mu'(r))^(p-1) dr, evaluated level by level.
  const auto table = build_level_table(flow, nu, h, 0.0);
  if (table.level.size() > 1) {
    geom::DiscreteField neg = h;
    for (auto& v : neg.values) v = -v;
    rep.lhs = level_integral(table, [&](double r) {
                const double rate = occupation_rate(c, h, r);
                if (rate < 1e-300) return 0.0;
                const double mass = superlevel_measure(flow, nu, neg, r);
                // A mass within machine noise of 0 or 1 leaves the profile
                // catastrophically cancelled while the rate stays honest;
                // the dropped contribution is below the unresolvable tail.
                if (std::min(mass, 1.0 - mass) < 1e-13) return 0.0;
                return std::pow(gauss::profile(mass), p) *
                       std::pow(rate, 1.0 - p);
              }) /
              std::pow(2.0 * c.tau, 0.5 * p);
  }
  rep.margin = rep.rhs - rep.lhs;
  return rep;
}

double entropy_of(const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
                  const geom::DiscreteField& w) {
  check_time(nu, w, "entropy_of");
  auto clip = [](double v) { return std::max(v, kFloor); };
  const double m = iso::nu_integral(flow, nu, [&](double x) {
    return clip(heat::eval_field(w, x));
  });
  const double wlogw = iso::nu_integral(flow, nu, [&](double x) {
    const double v = clip(heat::eval_field(w, x));
    return v * std::log(v);
  });
  if (m < kFloor) return 0.0;
  return wlogw - m * std::log(m);
}

LsiReport lsi_check(const geom::FlowFamily& flow,
                    const heat::KernelMeasure& nu,
                    const geom::DiscreteField& u) {
  check_time(nu, u, "lsi_check");
  const auto c = make_ctx(flow, nu, "lsi_check");
  geom::DiscreteField usq = u;
  for (auto& v : usq.values) v *= v;
  LsiReport rep;
  rep.entropy = entropy_of(flow, nu, usq);
  const auto du = deriv4_field(u);
  const double energy = iso::nu_integral(flow, nu, [&](double x) {
    const double g = grad_at(du, c.m, x);
    return g * g;
  });
  rep.dirichlet = 4.0 * c.tau * energy;
  rep.ratio = rep.dirichlet > 0.0 ? rep.entropy / rep.dirichlet : 0.0;
  return rep;
}

LsiReport lsi_w_check(const geom::FlowFamily& flow,
                      const heat::KernelMeasure& nu,
                      const geom::DiscreteField& w) {
  check_time(nu, w, "lsi_w_check");
  if (*std::min_element(w.values.begin(), w.values.end()) <= 0.0) {
    throw std::invalid_argument("lsi_w_check: field must be positive");
  }
  const auto c = make_ctx(flow, nu, "lsi_w_check");
  LsiReport rep;
  rep.entropy = entropy_of(flow, nu, w);
  const auto dw = deriv4_field(w);
  // Interpolation can overshoot below zero next to steep features; the
  // quotient floors at the smallest nodal value, positive by precondition.
  const double wmin =
      *std::min_element(w.values.begin(), w.values.end());
  const double energy = iso::nu_integral(flow, nu, [&](double x) {
    const double g = grad_at(dw, c.m, x);
    return g * g / std::max(heat::eval_field(w, x), wmin);
  });
  rep.dirichlet = c.tau * energy;
  rep.ratio = rep.dirichlet > 0.0 ? rep.entropy / rep.dirichlet : 0.0;
  return rep;
}

CheckReport reverse_lsi_check(const geom::FlowFamily& flow,
                              const geom::DiscreteField& f, double x,
                              double t, double s) {
  if (!(t > s)) {
    throw std::invalid_argument("reverse_lsi_check: needs t > s");
  }
  if (std::abs(f.time - s) > 1e-12) {
    throw std::invalid_argument(
        "reverse_lsi_check: field time does not match s");
  }
  if (*std::min_element(f.values.begin(), f.values.end()) <= 0.0) {
    throw std::invalid_argument("reverse_lsi_check: field must be positive");
  }
  const double tau = t - s;
  const auto nu = heat::conjugate_kernel(flow, x, t, s);
  CheckReport rep;
  rep.lhs = entropy_of(flow, nu, f);

  const auto evolved = heat::heat_evolve(flow, f, t);
  const auto mt = flow.metric_at(t);
  const double value = heat::eval_field(evolved, x);
  const double step = evolved.grid.spacing();
  auto diff = [&](double d) {
    // Even reflection at interval ends matches axisymmetric regularity.
    auto reflect = [&](double y) {
      if (evolved.grid.topology == geom::Topology::Periodic) return y;
      const double len = evolved.grid.length;
      y = std::abs(y);
      return y <= len ? y : 2.0 * len - y;
    };
    return (heat::eval_field(evolved, reflect(x + d)) -
            heat::eval_field(evolved, reflect(x - d))) /
           (2.0 * d);
  };
  const double grad =
      (4.0 * diff(step) - diff(2.0 * step)) / 3.0 /
      std::sqrt(geom::conformal_at(mt, x));
  rep.rhs = value > kFloor ? tau * grad * grad / value : 0.0;
  rep.margin = rep.lhs - rep.rhs;
  return rep;
}

PoincareReport lp_poincare_check(const geom::FlowFamily& flow,
                                 const heat::KernelMeasure& nu,
                                 const geom::DiscreteField& h, double p) {
  check_time(nu, h, "lp_poincare_check");
  const auto c = make_ctx(flow, nu, "lp_poincare_check");
  const auto lam = gauss::lambda_p(p);
  PoincareReport rep;
  rep.sharp = lam.exact;
  const double mean = heat::nu_expect(flow, nu, h);
  rep.lhs = centered_lp(flow, nu, h, mean, p);
  rep.rhs = std::sqrt(2.0 * c.tau) * lam.value * grad_lp(flow, nu, c, h, p);
  rep.margin = rep.rhs - rep.lhs;
  return rep;
}

SupportPoincareReport small_support_poincare_check(
    const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
    const geom::DiscreteField& u, double p) {
  check_time(nu, u, "small_support_poincare_check");
  if (!(p >= 1.0)) {
    throw std::invalid_argument("small_support_poincare_check: needs p >= 1");
  }
  const auto c = make_ctx(flow, nu, "small_support_poincare_check");
  geom::DiscreteField neg = u;
  for (auto& v : neg.values) v = -v;
  SupportPoincareReport rep;
  rep.mass = iso::nu_measure(flow, nu, iso::sub_level_set(neg, 0.0));
  if (rep.mass <= 0.0) return rep;
  if (rep.mass > 0.5 + 1e-12) {
    throw std::invalid_argument(
        "small_support_poincare_check: support carries more than half the "
        "mass");
  }
  rep.lhs = centered_lp(flow, nu, u, 0.0, p);
  rep.rhs = p * std::sqrt(2.0 * c.tau) * rep.mass /
            gauss::profile(rep.mass) * grad_lp(flow, nu, c, u, p);
  rep.margin = rep.rhs - rep.lhs;
  return rep;
}

SupportPoincareReport median_poincare_check(const geom::FlowFamily& flow,
                                            const heat::KernelMeasure& nu,
                                            const geom::DiscreteField& h,
                                            double p) {
  check_time(nu, h, "median_poincare_check");
  if (!(p >= 1.0)) {
    throw std::invalid_argument("median_poincare_check: needs p >= 1");
  }
  const auto c = make_ctx(flow, nu, "median_poincare_check");
  geom::DiscreteField neg = h;
  for (auto& v : neg.values) v = -v;
  double lo = *std::min_element(h.values.begin(), h.values.end());
  double hi = *std::max_element(h.values.begin(), h.values.end());
  // Bisection on the occupation mass; any median value works when the mass
  // jumps through 1/2.
  for (int k = 0; k < 100 && hi - lo > 1e-13 * (1.0 + std::abs(hi)); ++k) {
    const double mid = 0.5 * (lo + hi);
    if (superlevel_measure(flow, nu, neg, mid) > 0.5) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  SupportPoincareReport rep;
  rep.mass = 0.5 * (lo + hi);
  rep.lhs = centered_lp(flow, nu, h, rep.mass, p);
  rep.rhs = p * std::sqrt(kPi * c.tau) * grad_lp(flow, nu, c, h, p);
  rep.margin = rep.rhs - rep.lhs;
  return rep;
}

namespace {

struct Tridiag {
  std::vector<double> diag;
  std::vector<double> off;  // off[i] couples i and i+1
};

// Thomas solve of (tridiagonal) A x = b.
std::vector<double> solve_tridiag(const Tridiag& a, std::vector<double> b) {
  const std::size_t n = a.diag.size();
  std::vector<double> c(n, 0.0);
  double d = a.diag[0];
  b[0] /= d;
  for (std::size_t i = 1; i < n; ++i) {
    c[i - 1] = a.off[i - 1] / d;
    d = a.diag[i] - a.off[i - 1] * c[i - 1];
    b[i] = (b[i] - a.off[i - 1] * b[i - 1]) / d;
  }
  for (std::size_t i = n - 1; i > 0; --i) b[i - 1] -= c[i - 1] * b[i];
  return b;
}

std::vector<double> mat_apply(const Tridiag& a, const std::vector<double>& x) {
  const std::size_t n = a.diag.size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = a.diag[i] * x[i];
    if (i > 0) y[i] += a.off[i - 1] * x[i - 1];
    if (i + 1 < n) y[i] += a.off[i] * x[i + 1];
  }
  return y;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double gl5_integral(const std::function<double(double)>& f, double a,
                    double b) {
  const auto& gx = gl5_nodes();
  const auto& gw = gl5_weights();
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double s = 0.0;
  for (int q = 0; q < 5; ++q) s += gw[q] * half * f(mid + half * gx[q]);
  return s;
}

// Smallest generalized eigenvalue of the piecewise-linear Dirichlet pencil
// on one region piece. Hat functions vanish exactly at the piece endpoints
// (shortened boundary stubs), so the discrete Rayleigh quotient minimizes
// over a conforming subspace and can only overshoot the continuum value.
double piece_lambda(const Ctx& c, double lo, double hi,
                    const RayleighOptions& opt, int& iterations) {
  const double h = c.m.grid.spacing();
  const int i0 = static_cast<int>(std::floor(lo / h)) + 1;
  const int i1 = static_cast<int>(std::ceil(hi / h)) - 1;
  if (i1 < i0) return std::numeric_limits<double>::infinity();
  const int count = i1 - i0 + 1;

  auto stiff_w = [&](double x) { return c.dens(x) * c.area(x) /
                                        geom::conformal_at(c.m, x); };
  auto mass_w = [&](double x) { return c.dens(x) * c.area(x); };

  Tridiag A{std::vector<double>(count, 0.0),
            std::vector<double>(std::max(count - 1, 0), 0.0)};
  Tridiag B = A;

  const double ll = i0 * h - lo;
  if (ll > 1e-300) {
    A.diag[0] += gl5_integral(stiff_w, lo, i0 * h) / (ll * ll);
    B.diag[0] += gl5_integral(
        [&](double x) {
          const double t = (x - lo) / ll;
          return t * t * mass_w(x);
        },
        lo, i0 * h);
  }
  const double lr = hi - i1 * h;
  if (lr > 1e-300) {
    A.diag[count - 1] += gl5_integral(stiff_w, i1 * h, hi) / (lr * lr);
    B.diag[count - 1] += gl5_integral(
        [&](double x) {
          const double t = (hi - x) / lr;
          return t * t * mass_w(x);
        },
        i1 * h, hi);
  }
  for (int j = 0; j + 1 < count; ++j) {
    const double xa = (i0 + j) * h, xb = xa + h;
    const double wc = gl5_integral(stiff_w, xa, xb) / (h * h);
    A.diag[j] += wc;
    A.diag[j + 1] += wc;
    A.off[j] -= wc;
    B.diag[j] += gl5_integral(
        [&](double x) {
          const double t = (xb - x) / h;
          return t * t * mass_w(x);
        },
        xa, xb);
    B.diag[j + 1] += gl5_integral(
        [&](double x) {
          const double t = (x - xa) / h;
          return t * t * mass_w(x);
        },
        xa, xb);
    B.off[j] += gl5_integral(
        [&](double x) {
          const double t = (x - xa) / h;
          return t * (1.0 - t) * mass_w(x);
        },
        xa, xb);
  }

  std::vector<double> z(count);
  for (int j = 0; j < count; ++j) {
    z[j] = std::sin(kPi * (j + 1) / (count + 1));
  }
  double lambda = 0.0;
  for (int it = 0; it < opt.max_iter; ++it) {
    ++iterations;
    auto w = solve_tridiag(A, mat_apply(B, z));
    const double bn = std::sqrt(dot(w, mat_apply(B, w)));
    if (!(bn > 0.0)) {
      throw std::runtime_error(
          "faber_krahn_check: inverse iteration lost the mass norm");
    }
    for (auto& v : w) v /= bn;
    const double next = dot(w, mat_apply(A, w));
    z = std::move(w);
    if (it > 0 && std::abs(next - lambda) <= opt.tol * std::max(1.0, next)) {
      return next;
    }
    lambda = next;
  }
  throw std::runtime_error(
      "faber_krahn_check: inverse iteration did not converge");
}

}  // namespace

FaberKrahnReport faber_krahn_check(const geom::FlowFamily& flow,
                                   const heat::KernelMeasure& nu,
                                   const iso::WeightedSet& omega,
                                   const RayleighOptions& opt) {
  const auto c = make_ctx(flow, nu, "faber_krahn_check");
  FaberKrahnReport rep;
  rep.mass = iso::nu_measure(flow, nu, omega);
  if (rep.mass <= 0.0) {
    throw std::invalid_argument("faber_krahn_check: region carries no mass");
  }
  if (rep.mass > 0.5 + 1e-12) {
    throw std::invalid_argument(
        "faber_krahn_check: region carries more than half the mass");
  }
  rep.lambda1 = std::numeric_limits<double>::infinity();
  for (const auto& [lo, hi] : iso::region_pieces(omega, c.m)) {
    rep.lambda1 =
        std::min(rep.lambda1, piece_lambda(c, lo, hi, opt, rep.iterations));
  }
  if (!std::isfinite(rep.lambda1)) {
    throw std::invalid_argument(
        "faber_krahn_check: region has no interior nodes");
  }
  const double ratio = gauss::profile(rep.mass) / rep.mass;
  rep.bound = ratio * ratio / (8.0 * c.tau);
  rep.margin = rep.lambda1 - rep.bound;
  if (rep.mass <= 1e-3) {
    rep.asymptotic = std::log(1.0 / rep.mass) / (4.0 * c.tau);
  }
  return rep;
}

ExponentSchedule make_schedule(double p, double q, double tau1, double tau2) {
  if (!(p > 0.0 && p <= q && q < 1.0)) {
    throw std::invalid_argument(
        "make_schedule: needs exponents 0 < p <= q < 1");
  }
  if (!(tau1 > 0.0 && tau1 <= tau2)) {
    throw std::invalid_argument("make_schedule: needs 0 < tau1 <= tau2");
  }
  if (tau2 / tau1 < (1.0 - p) / (1.0 - q) - 1e-12) {
    throw std::invalid_argument(
        "make_schedule: gap ratio tau2/tau1 below the reverse threshold "
        "(1-p)/(1-q)");
  }
  ExponentSchedule s;
  s.p = p;
  s.q = q;
  s.tau1 = tau1;
  s.tau2 = tau2;
  s.c = (1.0 - q) * tau2;
  s.tau1_star = tau2 * (1.0 - q) / (1.0 - p);
  return s;
}

double schedule_alpha(const ExponentSchedule& sched, double t0, double t) {
  return 1.0 - sched.c / (t0 - t);
}

HypercontractivityReport reverse_hypercontractivity_check(
    const geom::FlowFamily& flow, double x0, double t0,
    const geom::DiscreteField& u0, const ExponentSchedule& sched,
    int monitor_points) {
  const double s2 = t0 - sched.tau2;
  if (std::abs(u0.time - s2) > 1e-12) {
    throw std::invalid_argument(
        "reverse_hypercontractivity_check: field time must be t0 - tau2");
  }
  if (*std::min_element(u0.values.begin(), u0.values.end()) <= 0.0) {
    throw std::invalid_argument(
        "reverse_hypercontractivity_check: field must be positive");
  }
  monitor_points = std::max(monitor_points, 2);

  auto norm_at = [&](const geom::DiscreteField& u, double t, double alpha) {
    const auto nu = heat::conjugate_kernel(flow, x0, t0, t);
    const double v = iso::nu_integral(flow, nu, [&](double x) {
      return std::pow(std::max(heat::eval_field(u, x), kFloor), alpha);
    });
    return std::pow(v, 1.0 / alpha);
  };

  const double t_mid = t0 - sched.tau1_star;
  const double s1 = t0 - sched.tau1;
  std::vector<std::pair<double, double>> points;  // (t, alpha)
  const int var_points = t_mid - s2 > 1e-14 ? monitor_points : 1;
  for (int k = 0; k < var_points; ++k) {
    const double t = s2 + (t_mid - s2) * k / std::max(var_points - 1, 1);
    points.emplace_back(t, schedule_alpha(sched, t0, t));
  }
  if (s1 - t_mid > 1e-14) {
    const int extra = monitor_points / 2 + 1;
    for (int k = 1; k <= extra; ++k) {
      points.emplace_back(t_mid + (s1 - t_mid) * k / extra, sched.p);
    }
  }

  HypercontractivityReport rep;
  geom::DiscreteField cur = u0;
  for (const auto& [t, alpha] : points) {
    if (t - cur.time > 1e-14) cur = heat::heat_evolve(flow, cur, t);
    rep.rows.push_back({t, alpha, norm_at(cur, t, alpha)});
  }
  rep.norm_early = rep.rows.front().norm;
  rep.norm_late = rep.rows.back().norm;
  rep.margin = rep.norm_late - rep.norm_early;
  rep.monitor_margin = 0.0;
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    const double inc = rep.rows[i].norm - rep.rows[i - 1].norm;
    if (i == 1 || inc < rep.monitor_margin) rep.monitor_margin = inc;
  }
  return rep;
}

void write_inequality_json(const std::vector<InequalityRow>& rows,
                           std::ostream& out) {
  nlohmann::json doc;
  doc["version"] = 1;
  doc["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    doc["rows"].push_back({{"name", r.name},
                           {"lhs", r.lhs},
                           {"rhs", r.rhs},
                           {"margin", r.margin},
                           {"tolerance", r.tolerance}});
  }
  out << doc.dump(2) << '\n';
}

void write_level_csv(const RearrangedFunction& rf, std::ostream& out) {
  out << "level,mass\n";
  out.precision(17);
  for (std::size_t i = 0; i < rf.level.size(); ++i) {
    out << rf.level[i] << ',' << rf.mass[i] << '\n';
  }
}

void write_monitor_csv(const std::vector<MonitorRow>& rows,
                       std::ostream& out) {
  out << "t,alpha,norm\n";
  out.precision(17);
  for (const auto& r : rows) {
    out << r.t << ',' << r.alpha << ',' << r.norm << '\n';
  }
}

void write_monitor_svg(const std::vector<MonitorRow>& rows,
                       std::ostream& out) {
  plot::Series norm{"monitor norm", {}, {}};
  plot::Series alpha{"exponent", {}, {}};
  for (const auto& r : rows) {
    norm.x.push_back(r.t);
    norm.y.push_back(r.norm);
    alpha.x.push_back(r.t);
    alpha.y.push_back(r.alpha);
  }
  plot::write_line_svg("reverse hypercontractivity monitor", {norm, alpha},
                       out);
}

}  // namespace hkflow::fi
