#pragma once

// Monte Carlo verification of the path-space Bobkov inequality and its
// ingredients on static flat geometries, where stochastic parallel
// transport is the identity and Brownian increments are exact in law.
// Paths are sampled under the generator-Laplacian convention (variance
// 2 dt per step and coordinate), so the one-time marginal at sigma = tau
// is the conjugate kernel measure with time gap tau.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hkflow/flow.hpp"

namespace hkflow::path {

// A sampled ensemble of based backward Brownian paths. Positions are stored
// for every path on the uniform time grid sigma_j = j dt, path-major, so
// position(p, j, d) is coordinate d of path p at grid index j. On the torus
// positions are wrapped into [0, period).
struct PathEnsemble {
  geom::FlowKind kind = geom::FlowKind::EuclideanExact;
  int dim = 1;
  double x = 0.0;       // base coordinate, placed on the first axis
  double horizon = 0.0; // total path duration T
  double dt = 0.0;
  int steps = 0;        // horizon / dt, so steps + 1 stored times
  int paths = 0;
  std::uint64_t seed = 0;
  std::string algorithm;
  double period = 0.0;  // torus circumference, 0 on the line
  std::vector<double> pos;

  double position(int p, int j, int d) const {
    return pos[(static_cast<std::size_t>(p) * (steps + 1) + j) * dim + d];
  }
  // Grid index of an observation time; throws when tau misses the grid.
  int grid_index(double tau) const;
};

// Samples `paths` Euler-Maruyama paths from (x, 0) to duration T with step
// dt. Chunked sampling with per-chunk seeds derived from `seed` through a
// splitmix64 stream, so the ensemble is reproducible and chunk order is
// immaterial. Only static flat kinds are supported.
PathEnsemble sample_paths(const geom::FlowFamily& flow, double x, double T,
                          double dt, int paths, std::uint64_t seed);

// Cylinder function F(omega) = u(X_{t_1}, ..., X_{t_k}) with k <= 3 strictly
// increasing positive observation times. `value` and `gradient` receive the
// k observation points packed coordinate-major (k * dim doubles); `gradient`
// returns all k * dim partial derivatives.
struct CylinderFunction {
  std::vector<double> times;
  std::function<double(const std::vector<double>&)> value;
  std::function<std::vector<double>(const std::vector<double>&)> gradient;
};

// Squared Malliavin H-gradient of F along one sampled path: the integral
// over sigma of |sum of the partial gradients at times >= sigma|^2, a
// piecewise-constant suffix sum over the inter-observation intervals. For
// one-time functions this is tau |grad f|^2(X_tau).
double h_gradient_sq(const PathEnsemble& e, const CylinderFunction& F, int p);

// Path-space Bobkov check: I(E F) <= E sqrt(I(F)^2 + 2 |grad_H F|^2).
// `band` is three combined Monte Carlo standard errors (delta method on the
// left side, sample error on the right); margin = rhs - lhs.
struct PathBobkovReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double band = 0.0;
  double margin = 0.0;
};
PathBobkovReport pathspace_bobkov_check(const PathEnsemble& e,
                                        const CylinderFunction& F);

// Conditional expectation through the first observation time on flat static
// kinds: g(y) = E[u(y, Y_2, ...)] with the future slots integrated against
// their exact Gaussian increments (phi-weighted composite Gauss-Legendre).
// conditional_grad returns |g'(y)|. One-dimensional ensembles only.
double conditional_mean(const PathEnsemble& e, const CylinderFunction& F,
                        double y);
double conditional_grad(const PathEnsemble& e, const CylinderFunction& F,
                        double y);

// First-step gradient check on equal-count bins of X_{t_1}. Per sampled
// path the paired difference |grad^par F| - |grad g|(X_{t_1}) has
// nonnegative conditional mean, so each bin must satisfy
// rhs - lhs + band >= 0 with lhs the bin mean of |grad g| at the sampled
// first-slot positions, rhs the bin mean of the parallel gradient, and
// band three standard errors of the paired difference. margin is the worst
// bin slack including the allowance; for affine u it vanishes to rounding.
// Paths are strided down to at most max_samples for the exact conditional
// quadratures.
struct FirstStepBin {
  double center = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double band = 0.0;
};
struct FirstStepReport {
  std::vector<FirstStepBin> bins;
  double margin = 0.0;
};
FirstStepReport first_step_gradient_check(const PathEnsemble& e,
                                          const CylinderFunction& F,
                                          int bins = 16,
                                          int max_samples = 20000);

// Mollified perimeter of the cylinder set {v < level} against the Gaussian
// isoperimetric bound I(mass) / sqrt(2). The indicator is relaxed through
// Phi((level - v) / w) on the width schedule {4, 2, 1} w0 with w0 the
// one-step diffusion length sqrt(2 dt). The mollified values approach the
// perimeter from below with an O(w^2) deficit, so the limit estimate
// `extrapolated` is the Richardson combination of the two finest widths;
// the coarser value documents the convergence trend. liminf is the
// smaller of the finest value and the extrapolation.
struct PathPerimeterReport {
  double mass = 0.0;
  std::vector<double> width;
  std::vector<double> value;
  double extrapolated = 0.0;
  double liminf = 0.0;
  double bound = 0.0;
  double band = 0.0;
};
PathPerimeterReport pathspace_perimeter_check(const PathEnsemble& e,
                                              const CylinderFunction& v,
                                              double level);

// Ensemble summary as versioned JSON: base data, seed, algorithm tag, and
// final-time first/second moments per coordinate. Raw paths are not
// persisted.
void write_ensemble_json(const PathEnsemble& e, std::ostream& out);

}  // namespace hkflow::path
