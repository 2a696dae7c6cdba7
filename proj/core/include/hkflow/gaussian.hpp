#pragma once

// Flat Gaussian reference model: the centered Gaussian measure with
// covariance 2*tau*Id_n, its distribution calculus, the isoperimetric
// profile, half-space extremizers, and the sharp moment/Poincare constants
// that every comparison suite measures against.

#include <limits>
#include <stdexcept>

namespace hkflow::gauss {

// A measure fraction in [0,1]. Constructed values are validated once so the
// rest of the code can treat them as trusted.
class MassFraction {
 public:
  explicit MassFraction(double a) : a_(a) {
    if (!(a >= 0.0 && a <= 1.0)) {
      throw std::domain_error("MassFraction: value outside [0,1]");
    }
  }
  double value() const { return a_; }

 private:
  double a_;
};

// Scale of the model measure: covariance 2*tau*Id_dim.
struct GaussianScale {
  double tau;
  int dim;

  GaussianScale(double tau_, int dim_) : tau(tau_), dim(dim_) {
    if (!(tau > 0.0)) throw std::domain_error("GaussianScale: tau must be > 0");
    if (dim < 1) throw std::domain_error("GaussianScale: dim must be >= 1");
  }
};

// Standard normal density.
double phi_pdf(double r);

// Standard normal distribution function, accurate in both tails.
double phi_cdf(double r);

// Inverse of phi_cdf. Returns -inf at 0 and +inf at 1; relative accuracy
// ~1e-15 on [1e-12, 1-1e-12].
double phi_quantile(double a);

// Gaussian isoperimetric profile I(a) = phi_pdf(phi_quantile(a)).
// I(0) = I(1) = 0; symmetric about a = 1/2 where it peaks at 1/sqrt(2*pi).
double profile(double a);

// Half-space of prescribed measure under the scaled model.
struct HalfspaceReference {
  double offset;     // boundary coordinate c with measure({x1 < c}) = a
  double mass;       // the requested fraction a
  double perimeter;  // weighted boundary measure, profile(a)/sqrt(2*tau)
};

// The half-space {x1 < c} with model measure a; perimeter is the model
// density integrated over the boundary hyperplane. Degenerates to
// offset -/+inf and perimeter 0 at a = 0 or 1.
HalfspaceReference halfspace_reference(MassFraction a, const GaussianScale& s);

// p-th absolute moment of the model score: tau^{-p/2} *
// Gamma((dim+p)/2) / Gamma(dim/2). With dim = 1 this is
// tau^{-p/2} * Gamma((p+1)/2) / sqrt(pi). Requires p >= 1.
double model_abs_moment(double p, const GaussianScale& s);

// Exponential moment of the positive part of a centered Gaussian with
// variance 2*tau: E exp(lambda * G_+) = 1/2 + exp(tau*lambda^2) *
// phi_cdf(lambda*sqrt(2*tau)).
double halfgaussian_exp_moment(double lambda, double tau);

// Squared-exponential moment E exp(beta * G_+^2 / tau) =
// 1/2 + 1/2 * (1-4*beta)^{-1/2}; requires beta < 1/4.
double halfgaussian_square_moment(double beta, double tau);

// Sharp constant in the one-dimensional Gaussian L^p Poincare inequality
// ||g - mean||_p <= Lambda_p ||g'||_p under the standard Gaussian.
struct PoincareConstant {
  double value;
  bool exact;  // closed form (p = 1, 2) vs cached numerical maximization
};

// Lambda_1 = sqrt(pi/2) and Lambda_2 = 1 in closed form; other p >= 1 are
// estimated by maximizing the Rayleigh ratio over a low-degree Hermite
// polynomial family and flagged as approximate lower bounds.
PoincareConstant lambda_p(double p);

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace hkflow::gauss
