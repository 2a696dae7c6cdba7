#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "hkflow/flow.hpp"
#include "hkflow/heat.hpp"
#include "hkflow/numerics.hpp"

using namespace hkflow;
using namespace hkflow::geom;
using namespace hkflow::heat;

namespace {

constexpr double kPi = std::numbers::pi;

FlowFamily torus_flow(double period, double t_max, int n = 512) {
  FlowSpec s;
  s.kind = FlowKind::FlatTorus;
  s.dim = 1;
  s.periods = {period};
  return FlowFamily(s, t_max, n);
}

FlowFamily window_flow(double period, double t_max, int n = 512) {
  FlowSpec s;
  s.kind = FlowKind::EuclideanExact;
  s.dim = 1;
  s.periods = {period};
  return FlowFamily(s, t_max, n);
}

FlowFamily sphere_flow(double r0, double t_max, int n = 256) {
  FlowSpec s;
  s.kind = FlowKind::RoundSphere;
  s.dim = 2;
  s.radius0 = r0;
  return FlowFamily(s, t_max, n);
}

FlowFamily warped_flow(double amplitude, double t_max, int n = 192,
                       int mode = 2) {
  FlowSpec s;
  s.kind = FlowKind::WarpedS2;
  s.dim = 2;
  s.warp_amplitude = amplitude;
  s.warp_mode = mode;
  return FlowFamily(s, t_max, n);
}

DiscreteField field_on(const FlowFamily& flow, double t,
                       const std::function<double(double)>& f) {
  const auto m = flow.metric_at(t);
  DiscreteField out{m.grid, t, {}};
  out.values.resize(m.grid.node_count());
  for (int i = 0; i < m.grid.node_count(); ++i) {
    out.values[i] = f(m.grid.node(i));
  }
  return out;
}

double legendre(int l, double x) {
  double p0 = 1.0, p1 = x;
  if (l == 0) return 1.0;
  for (int k = 1; k < l; ++k) {
    const double p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a[i] - b[i]));
  }
  return m;
}

}  // namespace

// ==========================================================================
// Kernel densities: closed forms
// ==========================================================================

TEST_CASE("euclidean window kernel is the flat gaussian density") {
  const auto flow = window_flow(32.0, 1.0);
  const auto nu = conjugate_kernel(flow, 16.0, 0.75, 0.25);
  CHECK(time_gap(nu) == doctest::Approx(0.5).epsilon(1e-15));
  // density of N(x0, 2 tau) = N(16, 1) in the window coordinate
  const auto m = flow.metric_at(0.25);
  for (int i = 0; i < m.grid.node_count(); i += 37) {
    const double x = m.grid.node(i);
    const double want =
        std::exp(-(x - 16.0) * (x - 16.0) / 2.0) / std::sqrt(2.0 * kPi);
    CHECK(nu.density.values[i] == doctest::Approx(want).epsilon(1e-14));
  }
  DiscreteField one{nu.density.grid, 0.25,
                    std::vector<double>(nu.density.grid.node_count(), 1.0)};
  CHECK(nu_expect(flow, nu, one) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("wide torus kernel matches the euclidean density near the base") {
  const auto flow = torus_flow(100.0, 1.0, 512);
  const double x0 = 50.0, t0 = 0.75, s = 0.25, tau = t0 - s;
  const auto nu = conjugate_kernel(flow, x0, t0, s);
  const auto m = flow.metric_at(s);
  for (int i = 0; i < m.grid.node_count(); ++i) {
    const double x = m.grid.node(i);
    if (std::abs(x - x0) > 5.0) continue;
    CHECK(std::abs(nu.density.values[i] - gauss_heat_density(x, x0, tau)) <
          1e-12);
  }
}

TEST_CASE("torus kernel equals a directly wrapped image sum") {
  const auto flow = torus_flow(2.0 * kPi, 1.0, 256);
  const double x0 = 1.3, tau = 0.6;
  const auto nu = conjugate_kernel(flow, x0, 0.9, 0.3);
  const auto m = flow.metric_at(0.3);
  for (int i = 0; i < m.grid.node_count(); i += 11) {
    const double x = m.grid.node(i);
    double oracle = 0.0;
    for (int k = -10; k <= 10; ++k) {
      oracle += gauss_heat_density(x + 2.0 * kPi * k, x0, tau);
    }
    CHECK(nu.density.values[i] == doctest::Approx(oracle).epsilon(1e-12));
  }
  DiscreteField one{nu.density.grid, 0.3,
                    std::vector<double>(nu.density.grid.node_count(), 1.0)};
  CHECK(nu_expect(flow, nu, one) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("shrinking sphere kernel: positivity, unit mass, spectral moments") {
  const auto flow = sphere_flow(1.0, 0.45, 256);
  const double t0 = 0.3, s = 0.1;
  const auto nu = conjugate_kernel(flow, 0.0, t0, s);
  CHECK(nu.truncation_error < 1e-14);
  const auto m = flow.metric_at(s);
  double mass = 0.0;
  for (int i = 0; i < m.grid.node_count(); ++i) {
    CHECK(nu.density.values[i] > 0.0);
    mass += nu.density.values[i] * m.quad_weight[i];
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-13));

  // int P_l d(nu) must reproduce the forward decay factor exactly: by
  // duality it equals the evolved harmonic at the pole, and modes decay by
  // (rho^2(t0)/rho^2(s))^{l(l+1)/2}.
  const double q = (1.0 - 2.0 * t0) / (1.0 - 2.0 * s);
  for (int l : {1, 2, 5}) {
    auto pl = field_on(flow, s,
                       [&](double th) { return legendre(l, std::cos(th)); });
    const double want = std::pow(q, 0.5 * l * (l + 1.0));
    CHECK(nu_expect(flow, nu, pl) == doctest::Approx(want).epsilon(1e-11));
  }
}

TEST_CASE("short-gap sphere kernel concentrates at the basepoint") {
  const auto flow = sphere_flow(1.0, 0.1, 512);
  const double t0 = 0.05, s = 0.04, tau = t0 - s;
  const auto nu = conjugate_kernel(flow, 0.0, t0, s);
  const auto m = flow.metric_at(s);
  const double rho = std::sqrt(1.0 - 2.0 * s);
  const double theta_ball = 5.0 * std::sqrt(tau) / rho;
  double inside = 0.0;
  for (int i = 0; i < m.grid.node_count(); ++i) {
    if (m.grid.node(i) <= theta_ball) {
      inside += nu.density.values[i] * m.quad_weight[i];
    }
  }
  CHECK(inside >= 0.99);
}

TEST_CASE("kernel domain errors") {
  const auto flow = sphere_flow(1.0, 0.4, 64);
  CHECK_THROWS_AS(conjugate_kernel(flow, 0.0, 0.1, 0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(conjugate_kernel(flow, 0.0, 0.1, 0.3),
                  std::invalid_argument);
  CHECK_THROWS_AS(conjugate_kernel(flow, 0.5, 0.3, 0.1),
                  std::invalid_argument);
  const auto torus = torus_flow(2.0 * kPi, 0.5, 64);
  CHECK_THROWS_AS(conjugate_kernel(torus, 1.0, 0.8, 0.1),
                  std::invalid_argument);
}

// ==========================================================================
// Forward semigroup
// ==========================================================================

TEST_CASE("constants are fixed points and mass-one is preserved") {
  const auto flow = sphere_flow(1.0, 0.4, 128);
  auto f = field_on(flow, 0.05, [](double) { return 2.5; });
  const auto u = heat_evolve(flow, f, 0.35);
  for (double v : u.values) CHECK(std::abs(v - 2.5) < 1e-12);
}

TEST_CASE("flat torus modes decay like exp(-k^2 (t-s))") {
  const auto flow = torus_flow(2.0 * kPi, 0.5, 512);
  const int k = 3;
  const double tau = 0.1;
  auto f = field_on(flow, 0.0, [&](double x) { return std::sin(k * x); });
  const auto u = heat_evolve(flow, f, tau);
  const double decay = std::exp(-double(k * k) * tau);
  const auto m = flow.metric_at(tau);
  double worst = 0.0;
  for (int i = 0; i < m.grid.node_count(); ++i) {
    worst = std::max(
        worst, std::abs(u.values[i] - decay * std::sin(k * m.grid.node(i))));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("sphere harmonics decay with the time-rescaled eigenvalue") {
  // mode l on the shrinking sphere: factor (rho^2(t)/rho^2(s))^{l(l+1)/2}
  const int l = 2;
  const double t = 0.2;
  const double want = std::pow(1.0 - 2.0 * t, 0.5 * l * (l + 1.0));
  double err_coarse = 0.0, err_fine = 0.0;
  for (int n : {128, 256}) {
    const auto flow = sphere_flow(1.0, 0.25, n);
    auto f = field_on(flow, 0.0,
                      [&](double th) { return legendre(l, std::cos(th)); });
    const auto u = heat_evolve(flow, f, t);
    double worst = 0.0;
    const auto m = flow.metric_at(t);
    for (int i = 0; i < m.grid.node_count(); ++i) {
      worst = std::max(worst,
                       std::abs(u.values[i] -
                                want * legendre(l, std::cos(m.grid.node(i)))));
    }
    (n == 128 ? err_coarse : err_fine) = worst;
  }
  CHECK(err_fine < 5e-4);
  CHECK(err_fine < err_coarse / 2.5);  // second-order spatial convergence
}

TEST_CASE("semigroup property: stopping halfway changes nothing") {
  const auto flow = torus_flow(2.0 * kPi, 0.6, 512);
  auto f = field_on(flow, 0.1, [](double x) {
    return std::sin(x) + 0.4 * std::cos(3.0 * x) + 0.2 * std::sin(5.0 * x);
  });
  const auto direct = heat_evolve(flow, f, 0.5);
  const auto mid = heat_evolve(flow, f, 0.27);
  const auto two_leg = heat_evolve(flow, mid, 0.5);
  CHECK(sup_diff(direct.values, two_leg.values) < 1e-7);

  const auto sflow = sphere_flow(1.0, 0.4, 192);
  auto g = field_on(sflow, 0.0, [](double th) {
    return legendre(2, std::cos(th)) + 0.3 * legendre(4, std::cos(th));
  });
  const auto d2 = heat_evolve(sflow, g, 0.3);
  const auto m2 = heat_evolve(sflow, g, 0.13);
  const auto t2 = heat_evolve(sflow, m2, 0.3);
  CHECK(sup_diff(d2.values, t2.values) < 1e-5);
}

TEST_CASE("maximum principle with 1e-10 slack on all kinds") {
  std::mt19937_64 rng(0x6ea7);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  auto run = [&](const FlowFamily& flow, double s, double t) {
    const auto m = flow.metric_at(s);
    DiscreteField f{m.grid, s, {}};
    f.values.resize(m.grid.node_count());
    const double a1 = amp(rng), a2 = amp(rng), a3 = amp(rng);
    const bool periodic = m.grid.topology == Topology::Periodic;
    for (int i = 0; i < m.grid.node_count(); ++i) {
      const double x = m.grid.node(i);
      const double y =
          periodic ? 2.0 * kPi * x / m.grid.length : std::cos(x);
      f.values[i] = a1 * std::sin(2.0 * y) + a2 * y + a3 * std::cos(y);
    }
    const double lo = *std::min_element(f.values.begin(), f.values.end());
    const double hi = *std::max_element(f.values.begin(), f.values.end());
    const auto u = heat_evolve(flow, f, t);
    for (double v : u.values) {
      CHECK(v >= lo - 1e-10);
      CHECK(v <= hi + 1e-10);
    }
  };
  run(torus_flow(2.0 * kPi, 0.4, 256), 0.0, 0.4);
  run(sphere_flow(1.0, 0.4, 128), 0.05, 0.35);
  run(warped_flow(0.05, 0.25, 96), 0.02, 0.2);
}

TEST_CASE("oversized explicit step is rejected with a remedy") {
  const auto flow = torus_flow(2.0 * kPi, 0.2, 128);
  auto f = field_on(flow, 0.0, [](double x) { return std::sin(x); });
  const double h = 2.0 * kPi / 128.0;
  SemigroupOperator op{&flow, 0.0, 0.1, h * h};  // twice the bound
  CHECK_THROWS_WITH_AS(apply(op, f),
                       doctest::Contains("use dt <="), std::runtime_error);
  op.dt_hint = 0.4 * h * h;
  CHECK_NOTHROW(apply(op, f));
}

TEST_CASE("gradient contraction against the evolved gradient norm") {
  auto check_contraction = [](const FlowFamily& flow, double s, double t,
                              const std::function<double(double)>& f0,
                              double slack) {
    auto f = field_on(flow, s, f0);
    const auto ms = flow.metric_at(s);
    const auto grad0 = gradient_norm(f, ms);
    DiscreteField g{ms.grid, s, grad0.values};
    const auto lhs_f = heat_evolve(flow, f, t);
    const auto rhs = heat_evolve(flow, g, t);
    const auto mt = flow.metric_at(t);
    const auto lhs = gradient_norm(lhs_f, mt);
    double worst = 0.0;
    for (std::size_t i = 0; i < lhs.values.size(); ++i) {
      worst = std::max(worst, lhs.values[i] - rhs.values[i]);
    }
    CHECK(worst < slack);
  };
  const auto torus = torus_flow(2.0 * kPi, 0.3, 256);
  check_contraction(torus, 0.0, 0.25,
                    [](double x) { return std::sin(3.0 * x); },
                    20.0 * std::pow(2.0 * kPi / 256.0, 2));
  const auto sphere = sphere_flow(1.0, 0.35, 192);
  check_contraction(sphere, 0.0, 0.3,
                    [](double th) { return legendre(3, std::cos(th)); },
                    30.0 * std::pow(kPi / 192.0, 2));
}

// ==========================================================================
// Duality and the adjoint identity
// ==========================================================================

TEST_CASE("nu_expect on the flat window: gaussian moments") {
  const auto flow = window_flow(32.0, 1.0);
  const double x0 = 16.0, t0 = 0.8, s = 0.3, tau = t0 - s;
  const auto nu = conjugate_kernel(flow, x0, t0, s);
  auto sq = field_on(flow, s, [&](double x) { return (x - x0) * (x - x0); });
  CHECK(nu_expect(flow, nu, sq) == doctest::Approx(2.0 * tau).epsilon(1e-10));
  auto quart = field_on(flow, s, [&](double x) {
    const double d = x - x0;
    return d * d * d * d;
  });
  CHECK(nu_expect(flow, nu, quart) ==
        doctest::Approx(12.0 * tau * tau).epsilon(1e-10));
}

TEST_CASE("duality: torus expectation equals the exact forward evolution") {
  const auto flow = torus_flow(2.0 * kPi, 1.0, 512);
  const double x0 = 2.2, t0 = 0.7, s = 0.2, tau = t0 - s;
  const auto nu = conjugate_kernel(flow, x0, t0, s);
  std::mt19937_64 rng(0xd0a1);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    double a0 = amp(rng);
    std::vector<double> ac(4), as(4);
    for (int k = 1; k <= 3; ++k) {
      ac[k] = amp(rng);
      as[k] = amp(rng);
    }
    auto f = field_on(flow, s, [&](double x) {
      double v = a0;
      for (int k = 1; k <= 3; ++k) {
        v += ac[k] * std::cos(k * x) + as[k] * std::sin(k * x);
      }
      return v;
    });
    double forward = a0;
    for (int k = 1; k <= 3; ++k) {
      forward += std::exp(-double(k * k) * tau) *
                 (ac[k] * std::cos(k * x0) + as[k] * std::sin(k * x0));
    }
    CHECK(nu_expect(flow, nu, f) == doctest::Approx(forward).epsilon(1e-8));
  }
}

TEST_CASE("adjoint identity: d/ds int h d(nu_s) = int (d_s - Lap) h d(nu_s)") {
  const auto flow = torus_flow(2.0 * kPi, 1.0, 512);
  const double x0 = 1.0, t0 = 0.9;
  // h(x, t) = cos(2x)(1 + 0.3 sin(3t)) + 0.2 sin(x) cos(t)
  auto h_at = [&](double s) {
    return field_on(flow, s, [&](double x) {
      return std::cos(2.0 * x) * (1.0 + 0.3 * std::sin(3.0 * s)) +
             0.2 * std::sin(x) * std::cos(s);
    });
  };
  const double s = 0.35;
  auto F = [&](double sv) {
    auto nu = conjugate_kernel(flow, x0, t0, sv);
    auto h = h_at(sv);
    return nu_expect(flow, nu, h);
  };
  const double ds = 5e-4;
  const double lhs = (F(s + ds) - F(s - ds)) / (2.0 * ds);
  // d_s h - Lap h, both analytic for the trig field
  auto rhs_field = field_on(flow, s, [&](double x) {
    const double dt_part = std::cos(2.0 * x) * 0.9 * std::cos(3.0 * s) -
                           0.2 * std::sin(x) * std::sin(s);
    const double lap_part =
        -4.0 * std::cos(2.0 * x) * (1.0 + 0.3 * std::sin(3.0 * s)) -
        0.2 * std::sin(x) * std::cos(s);
    return dt_part - lap_part;
  });
  auto nu = conjugate_kernel(flow, x0, t0, s);
  const double rhs = nu_expect(flow, nu, rhs_field);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
}

TEST_CASE("adjoint identity on the shrinking sphere") {
  const auto flow = sphere_flow(1.0, 0.45, 256);
  const double t0 = 0.4;
  const double s = 0.15;
  const int l = 2;
  auto h_at = [&](double sv) {
    return field_on(flow, sv, [&](double th) {
      return (1.0 + 0.5 * sv) * legendre(l, std::cos(th));
    });
  };
  auto F = [&](double sv) {
    auto nu = conjugate_kernel(flow, 0.0, t0, sv);
    auto h = h_at(sv);
    return nu_expect(flow, nu, h);
  };
  // F''' is large this close to extinction; keep the difference step small
  const double ds = 1e-4;
  const double lhs = (F(s + ds) - F(s - ds)) / (2.0 * ds);
  const double rho2 = 1.0 - 2.0 * s;
  auto rhs_field = field_on(flow, s, [&](double th) {
    const double pl = legendre(l, std::cos(th));
    const double dt_part = 0.5 * pl;
    const double lap_part =
        -double(l * (l + 1)) / rho2 * (1.0 + 0.5 * s) * pl;
    return dt_part - lap_part;
  });
  auto nu = conjugate_kernel(flow, 0.0, t0, s);
  const double rhs = nu_expect(flow, nu, rhs_field);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
}

// ==========================================================================
// Numeric kind: bump-initialized conjugate solve
// ==========================================================================

TEST_CASE("warped kernel at zero amplitude reproduces the round sphere") {
  const double t0 = 0.3, s = 0.1;
  const auto wflow = warped_flow(0.0, 0.35, 192);
  const auto rflow = sphere_flow(1.0, 0.35, 192);
  const auto wnu = conjugate_kernel(wflow, 0.0, t0, s);
  const auto rnu = conjugate_kernel(rflow, 0.0, t0, s);
  const double gap = sup_diff(wnu.density.values, rnu.density.values);
  const double peak =
      *std::max_element(rnu.density.values.begin(), rnu.density.values.end());
  CHECK(gap < 0.05 * peak);
  // the two-width estimate sees the same error scale as the true gap
  CHECK(gap < 6.0 * wnu.init_error + 20.0 * std::pow(kPi / 192.0, 2));
  CHECK(wnu.mass_drift < 5e-3);
  // delivered measure is exactly normalized
  const auto m = wflow.metric_at(s);
  double mass = 0.0;
  for (int i = 0; i < m.grid.node_count(); ++i) {
    mass += wnu.density.values[i] * m.quad_weight[i];
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  for (double v : wnu.density.values) CHECK(v > 0.0);
}

TEST_CASE("warped duality is step-size robust and near the density route") {
  const auto flow = warped_flow(0.04, 0.3, 128);
  const double t0 = 0.25, s = 0.05;
  const auto nu = conjugate_kernel(flow, 0.0, t0, s);
  auto f = field_on(flow, s, [](double th) {
    return std::cos(th) + 0.3 * std::cos(2.0 * th);
  });
  const double by_duality = nu_expect(flow, nu, f);

  // same evolution at half the default step
  const auto m = flow.metric_at(s);
  const double h = m.grid.spacing();
  double a_min = 1e300;
  for (double a : m.a_coef) a_min = std::min(a_min, a);
  SemigroupOperator op{&flow, s, t0, 0.2 * h * h * a_min};
  const double refined = eval_field(apply(op, f), 0.0);
  CHECK(std::abs(by_duality - refined) < 1e-7);

  // quadrature against the bump-built density only carries the
  // initialization error, not more
  double by_density = 0.0;
  for (int i = 0; i < m.grid.node_count(); ++i) {
    by_density += f.values[i] * nu.density.values[i] * m.quad_weight[i];
  }
  CHECK(std::abs(by_duality - by_density) < 0.02);
}

TEST_CASE("warped kernel rejects gaps the bump cannot resolve") {
  const auto flow = warped_flow(0.05, 0.3, 64);
  const double h = kPi / 64.0;
  CHECK_THROWS_AS(conjugate_kernel(flow, 0.0, 0.2, 0.2 - 15.0 * h * h),
                  std::invalid_argument);
}

// ==========================================================================
// Point evaluation and export
// ==========================================================================

TEST_CASE("eval_field: cubic interpolation hits nodes and cubics exactly") {
  Grid1D g{64, 2.0 * kPi, Topology::Periodic};
  DiscreteField f{g, 0.0, {}};
  f.values.resize(64);
  for (int i = 0; i < 64; ++i) f.values[i] = std::sin(g.node(i));
  CHECK(eval_field(f, g.node(17)) == doctest::Approx(f.values[17]).epsilon(1e-15));
  CHECK(eval_field(f, 1.234) == doctest::Approx(std::sin(1.234)).epsilon(1e-5));
  // wrap across zero
  CHECK(eval_field(f, -0.3) == doctest::Approx(std::sin(-0.3)).epsilon(1e-5));

  Grid1D gi{64, kPi, Topology::Interval};
  DiscreteField p{gi, 0.0, {}};
  p.values.resize(65);
  for (int i = 0; i <= 64; ++i) {
    const double x = gi.node(i);
    p.values[i] = 1.0 + x - 0.5 * x * x + 0.25 * x * x * x;
  }
  for (double x : {0.0, 0.013, 1.7, kPi - 1e-3, kPi}) {
    const double want = 1.0 + x - 0.5 * x * x + 0.25 * x * x * x;
    CHECK(eval_field(p, x) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("kernel csv snapshot round-trips its first row") {
  const auto flow = torus_flow(2.0 * kPi, 0.5, 64);
  const auto nu = conjugate_kernel(flow, 1.0, 0.4, 0.1);
  std::ostringstream out;
  write_kernel_csv(nu, out);
  std::istringstream in(out.str());
  std::string header, row;
  std::getline(in, header);
  CHECK(header == "coordinate,density");
  std::getline(in, row);
  const auto comma = row.find(',');
  CHECK(std::stod(row.substr(0, comma)) == doctest::Approx(0.0));
  CHECK(std::stod(row.substr(comma + 1)) ==
        doctest::Approx(nu.density.values[0]).epsilon(1e-15));
  int rows = 1;
  while (std::getline(in, row)) ++rows;
  CHECK(rows == 64);
}

// ==========================================================================
// Solver building block
// ==========================================================================

TEST_CASE("cyclic tridiagonal solve matches dense elimination") {
  std::mt19937_64 rng(0x7a3b);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 9;
  std::vector<double> low(n), mid(n), up(n), rhs(n);
  for (int i = 0; i < n; ++i) {
    low[i] = u(rng);
    up[i] = u(rng);
    mid[i] = 4.0 + u(rng);  // diagonally dominant
    rhs[i] = u(rng);
  }
  // dense copy
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  std::vector<double> b = rhs;
  for (int i = 0; i < n; ++i) {
    a[i][i] = mid[i];
    a[i][(i + 1) % n] = up[i];
    a[i][(i - 1 + n) % n] = low[i];
  }
  for (int col = 0; col < n; ++col) {  // plain gaussian elimination
    int piv = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (int r = col + 1; r < n; ++r) {
      const double m = a[r][col] / a[col][col];
      for (int c2 = col; c2 < n; ++c2) a[r][c2] -= m * a[col][c2];
      b[r] -= m * b[col];
    }
  }
  std::vector<double> x(n);
  for (int i = n - 1; i >= 0; --i) {
    double acc = b[i];
    for (int c2 = i + 1; c2 < n; ++c2) acc -= a[i][c2] * x[c2];
    x[i] = acc / a[i][i];
  }
  hkflow::num::solve_cyclic_tridiagonal(low, mid, up, rhs);
  for (int i = 0; i < n; ++i) {
    CHECK(rhs[i] == doctest::Approx(x[i]).epsilon(1e-12));
  }
}
