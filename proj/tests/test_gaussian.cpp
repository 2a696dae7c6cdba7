#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hkflow/gaussian.hpp"
#include "hkflow/numerics.hpp"

using namespace hkflow;
using namespace hkflow::gauss;

namespace {

// Independent distribution-function oracle: quadrature of the density,
// avoiding the erfc path used by the implementation.
double phi_cdf_oracle(double r) {
  const double lo = std::min(r, -10.0) - 2.0;
  return num::integrate([](double z) { return phi_pdf(z); }, lo, r, 1e-14);
}

}  // namespace

// ============================================================
// Distribution calculus
// ============================================================

TEST_CASE("normal cdf matches frozen references and quadrature oracle") {
  // 20-digit references computed with extended-precision arithmetic.
  CHECK(phi_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(phi_cdf(1.0) == doctest::Approx(0.84134474606854294859).epsilon(1e-15));
  CHECK(phi_cdf(2.0) == doctest::Approx(0.97724986805182079280).epsilon(1e-15));
  CHECK(phi_cdf(0.5) == doctest::Approx(0.69146246127401310364).epsilon(1e-15));
  CHECK(phi_cdf(-1.0) == doctest::Approx(0.15865525393145705141).epsilon(1e-15));

  for (double r : {-8.0, -3.2, -0.7, 0.0, 0.3, 1.9, 4.5}) {
    CHECK(phi_cdf(r) == doctest::Approx(phi_cdf_oracle(r)).epsilon(1e-12));
  }
  // Symmetry identity.
  for (double r : {0.25, 1.0, 2.5, 6.0}) {
    CHECK(phi_cdf(r) + phi_cdf(-r) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("quantile inverts the cdf to near machine precision") {
  CHECK(phi_quantile(0.5) == 0.0);
  CHECK(phi_quantile(0.84134474606854294859) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(phi_quantile(0.975) == doctest::Approx(1.9599639845400542355).epsilon(1e-13));
  CHECK(phi_quantile(0.995) == doctest::Approx(2.5758293035489007610).epsilon(1e-13));
  CHECK(phi_quantile(0.1) == doctest::Approx(-1.2815515655446004670).epsilon(1e-13));
  CHECK(phi_quantile(1e-9) == doctest::Approx(-5.9978070150076868716).epsilon(1e-13));

  // Round trips across the full working range.
  for (double a = 1e-12; a < 1.0; a = (a < 0.5 ? a * 3.7 : 1.0 - (1.0 - a) / 3.7)) {
    const double x = phi_quantile(a);
    CHECK(phi_cdf(x) == doctest::Approx(a).epsilon(1e-13));
  }
  // Upper-direction round trips are bounded by the spacing of doubles near
  // cdf values close to 1, so keep x moderate on the right.
  for (double x : {-7.0, -2.0, -0.1, 0.4, 3.3}) {
    CHECK(phi_quantile(phi_cdf(x)) == doctest::Approx(x).epsilon(1e-13));
  }

  CHECK(std::isinf(phi_quantile(0.0)));
  CHECK(phi_quantile(0.0) < 0.0);
  CHECK(std::isinf(phi_quantile(1.0)));
  CHECK(phi_quantile(1.0) > 0.0);
  CHECK_THROWS_AS((void)phi_quantile(-0.1), std::domain_error);
  CHECK_THROWS_AS((void)phi_quantile(1.2), std::domain_error);
}

// ============================================================
// Isoperimetric profile
// ============================================================

TEST_CASE("profile values, symmetry, endpoints") {
  CHECK(profile(0.5) == doctest::Approx(0.39894228040143267794).epsilon(1e-15));
  CHECK(profile(0.1) == doctest::Approx(0.17549833193248680663).epsilon(1e-13));
  CHECK(profile(0.3) == doctest::Approx(0.34769261420007376313).epsilon(1e-13));
  CHECK(profile(0.01) == doctest::Approx(0.026652142203458048132).epsilon(1e-13));
  CHECK(profile(0.0) == 0.0);
  CHECK(profile(1.0) == 0.0);
  for (double a : {0.02, 0.2, 0.37, 0.45}) {
    CHECK(profile(a) == doctest::Approx(profile(1.0 - a)).epsilon(1e-14));
    CHECK(profile(a) > 0.0);
    CHECK(profile(a) <= profile(0.5));
  }
}

TEST_CASE("profile derivative identities hold under central differencing") {
  const double h = 1e-6;
  for (double a : {0.05, 0.2, 0.5, 0.65, 0.93}) {
    const double d1 = (profile(a + h) - profile(a - h)) / (2.0 * h);
    CHECK(d1 == doctest::Approx(-phi_quantile(a)).epsilon(1e-6));
    const double d2 = (profile(a + h) - 2.0 * profile(a) + profile(a - h)) / (h * h);
    CHECK(profile(a) * d2 == doctest::Approx(-1.0).epsilon(1e-4));
  }
}

TEST_CASE("profile equals the integral of the upper-tail quantile") {
  // profile(a) = int_0^a phi_quantile(1-r) dr; the integrand has a mild
  // logarithmic singularity at r = 0, so start the quadrature just above it.
  for (double a : {0.05, 0.3, 0.5}) {
    const double eps = 1e-12;
    const double integral =
        num::integrate([](double r) { return phi_quantile(1.0 - r); }, eps, a,
                       1e-12) +
        eps * phi_quantile(1.0 - eps / 2.0);
    CHECK(integral == doctest::Approx(profile(a)).epsilon(1e-9));
  }
}

TEST_CASE("profile small-mass asymptotics with Mills-ratio correction") {
  double prev_gap = 1.0, prev_diff = 1.0;
  for (double a : {1e-4, 1e-6, 1e-8}) {
    const double x = -phi_quantile(a);
    const double corrected = a * x / (1.0 - 1.0 / (x * x) + 3.0 / (x * x * x * x));
    const double gap = std::abs(profile(a) / corrected - 1.0);
    CHECK(gap < prev_gap);
    prev_gap = gap;
    // Leading-order difference vanishes along the sweep.
    const double diff = std::abs(profile(a) - a * std::sqrt(2.0 * std::log(1.0 / a)));
    CHECK(diff < prev_diff);
    prev_diff = diff;
  }
  CHECK(prev_gap < 1e-3);   // tightest point of the sweep, a = 1e-8
  CHECK(prev_diff < 5e-9);
}

// ============================================================
// Half-space references
// ============================================================

TEST_CASE("half-space reference at a=1/2 is centered with peak perimeter") {
  const auto ref = halfspace_reference(MassFraction(0.5), GaussianScale(0.5, 2));
  CHECK(ref.offset == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(ref.perimeter == doctest::Approx(0.39894228040143267794).epsilon(1e-13));
}

TEST_CASE("half-space reference matches frozen offsets and perimeters") {
  const auto r1 = halfspace_reference(MassFraction(0.1), GaussianScale(1.0, 3));
  CHECK(r1.offset == doctest::Approx(-1.8123876048736464401).epsilon(1e-13));
  CHECK(r1.perimeter == doctest::Approx(0.12409606059638903452).epsilon(1e-13));

  const auto r2 = halfspace_reference(MassFraction(0.3), GaussianScale(0.25, 1));
  CHECK(r2.offset == doctest::Approx(-0.37080715859355792906).epsilon(1e-13));
  CHECK(r2.perimeter == doctest::Approx(0.49171161053870049008).epsilon(1e-13));
}

TEST_CASE("half-space perimeter equals density quadrature over the boundary") {
  // dim = 2: integrate the model density along the boundary line x1 = c.
  const double tau = 0.7, a = 0.35;
  const auto ref = halfspace_reference(MassFraction(a), GaussianScale(tau, 2));
  const double c = ref.offset;
  const double direct = num::integrate(
      [&](double y) {
        return std::exp(-(c * c + y * y) / (4.0 * tau)) /
               (4.0 * std::numbers::pi * tau);
      },
      -40.0, 40.0, 1e-14);
  CHECK(ref.perimeter == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("half-space reference degenerates cleanly at the endpoints") {
  const auto r0 = halfspace_reference(MassFraction(0.0), GaussianScale(1.0, 1));
  CHECK(std::isinf(r0.offset));
  CHECK(r0.perimeter == 0.0);
  const auto r1 = halfspace_reference(MassFraction(1.0), GaussianScale(1.0, 1));
  CHECK(std::isinf(r1.offset));
  CHECK(r1.offset > 0.0);
  CHECK(r1.perimeter == 0.0);
  CHECK_THROWS_AS(MassFraction(1.5), std::domain_error);
  CHECK_THROWS_AS(GaussianScale(-1.0, 1), std::domain_error);
  CHECK_THROWS_AS(GaussianScale(1.0, 0), std::domain_error);
}

// ============================================================
// Moment formulas
// ============================================================

TEST_CASE("model score moments match gamma-function values") {
  CHECK(model_abs_moment(2.0, GaussianScale(1.0, 1)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(model_abs_moment(1.0, GaussianScale(1.0, 1)) ==
        doctest::Approx(0.56418958354775628695).epsilon(1e-14));
  CHECK(model_abs_moment(3.0, GaussianScale(0.5, 1)) ==
        doctest::Approx(1.5957691216057307118).epsilon(1e-14));
  CHECK(model_abs_moment(2.0, GaussianScale(1.0, 3)) == doctest::Approx(1.5).epsilon(1e-14));
  // dim = 2, p = 2 reduces to n/2 over tau.
  CHECK(model_abs_moment(2.0, GaussianScale(0.5, 2)) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS((void)model_abs_moment(0.5, GaussianScale(1.0, 1)), std::domain_error);
}

TEST_CASE("model score moments agree with direct quadrature") {
  // dim = 1: E|Z|^p with Z ~ N(0, 1/(2 tau)).
  for (double p : {1.0, 2.0, 3.5}) {
    for (double tau : {0.25, 1.0}) {
      const double sigma = 1.0 / std::sqrt(2.0 * tau);
      const double direct = num::integrate(
          [&](double z) {
            return std::pow(std::abs(z), p) * phi_pdf(z / sigma) / sigma;
          },
          -14.0 * sigma, 14.0 * sigma, 1e-13);
      CHECK(model_abs_moment(p, GaussianScale(tau, 1)) ==
            doctest::Approx(direct).epsilon(1e-10));
    }
  }
}

TEST_CASE("half-gaussian exponential moments") {
  CHECK(halfgaussian_exp_moment(1.0, 1.0) ==
        doctest::Approx(3.0044900403811417332).epsilon(1e-14));
  CHECK(halfgaussian_exp_moment(1.0, 0.5) ==
        doctest::Approx(1.8871429788350047752).epsilon(1e-14));
  // Quadrature oracle: E exp(lambda*max(G,0)), G ~ N(0, 2 tau).
  for (double lambda : {0.5, 1.0}) {
    for (double tau : {0.5, 1.0}) {
      const double sigma = std::sqrt(2.0 * tau);
      const double direct = num::integrate(
          [&](double g) {
            return std::exp(lambda * std::max(g, 0.0)) * phi_pdf(g / sigma) / sigma;
          },
          -14.0 * sigma, (14.0 + 2.0 * lambda * sigma) * sigma, 1e-13);
      CHECK(halfgaussian_exp_moment(lambda, tau) ==
            doctest::Approx(direct).epsilon(1e-10));
    }
  }
  CHECK(halfgaussian_exp_moment(0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("half-gaussian squared-exponential moments") {
  CHECK(halfgaussian_square_moment(0.1, 1.0) ==
        doctest::Approx(1.1454972243679028142).epsilon(1e-14));
  CHECK(halfgaussian_square_moment(3.0 / 16.0, 0.5) == doctest::Approx(1.5).epsilon(1e-14));
  // Scale invariance in tau.
  CHECK(halfgaussian_square_moment(0.2, 0.25) ==
        doctest::Approx(halfgaussian_square_moment(0.2, 4.0)).epsilon(1e-15));
  CHECK_THROWS_AS((void)halfgaussian_square_moment(0.25, 1.0), std::domain_error);
  CHECK_THROWS_AS((void)halfgaussian_square_moment(0.3, 1.0), std::domain_error);
}

// ============================================================
// L^p Poincare constants
// ============================================================

TEST_CASE("closed-form Poincare constants") {
  const auto l1 = lambda_p(1.0);
  CHECK(l1.exact);
  CHECK(l1.value == doctest::Approx(1.2533141373155002512).epsilon(1e-14));
  const auto l2 = lambda_p(2.0);
  CHECK(l2.exact);
  CHECK(l2.value == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS((void)lambda_p(0.5), std::domain_error);
}

TEST_CASE("numerical Poincare constant dominates the linear candidate") {
  // The linear function gives ||g||_4/||g'||_4 = 3^{1/4}; the maximizer can
  // only improve on it. Deterministic across calls.
  const auto l4 = lambda_p(4.0);
  CHECK_FALSE(l4.exact);
  CHECK(l4.value >= 1.3160740129524924608 - 1e-6);
  CHECK(l4.value < 3.0);
  const auto again = lambda_p(4.0);
  CHECK(again.value == l4.value);
}
