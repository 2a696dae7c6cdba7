#pragma once

// Model geometries and their curvature flows, reduced to one spatial
// dimension by symmetry: the flat line/torus, the round shrinking sphere,
// and rotationally symmetric sphere metrics evolved numerically. Supplies
// the discrete calculus (gradient, Laplace-Beltrami, volume integrals,
// distances) every downstream suite runs on.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hkflow::geom {

enum class Topology { Periodic, Interval };

// Uniform 1-D grid. Periodic grids have n nodes over [0, length); interval
// grids have n+1 nodes over [0, length] including both endpoints.
struct Grid1D {
  int n = 512;
  double length = 1.0;
  Topology topology = Topology::Periodic;

  double spacing() const { return length / n; }
  int node_count() const { return topology == Topology::Periodic ? n : n + 1; }
  double node(int i) const { return i * spacing(); }
};

// Scalar field sampled on a grid at one flow time.
struct DiscreteField {
  Grid1D grid;
  double time = 0.0;
  std::vector<double> values;
};

enum class FlowKind { EuclideanExact, FlatTorus, RoundSphere, WarpedS2 };

// Construction-time description of a model flow.
struct FlowSpec {
  FlowKind kind = FlowKind::FlatTorus;
  int dim = 1;                     // ambient dimension
  std::vector<double> periods{6.283185307179586};  // FlatTorus only
  double radius0 = 1.0;            // RoundSphere initial radius
  // WarpedS2 initial conformal exponent u0 with metric e^{2 u0} g_round:
  // amplitude times the Legendre mode in cos(theta); a custom profile on the
  // bake grid may be supplied instead.
  double warp_amplitude = 0.0;
  int warp_mode = 2;
  std::vector<double> warp_profile;  // optional, overrides amplitude/mode
};

// Frozen geometry at one time. The reduced coordinate is x in [0, period)
// for the torus and the polar angle theta in [0, pi] for sphere kinds.
// Metric in reduced form: g = a_coef dx^2 (+ b_coef dphi^2 on surfaces).
struct MetricSample {
  FlowKind kind;
  int dim;
  double t = 0.0;
  Grid1D grid;
  std::vector<double> a_coef;
  std::vector<double> b_coef;        // empty for 1-D kinds
  std::vector<double> scalar_curv;   // scalar curvature at nodes
  std::vector<double> cell_volume;   // finite-volume cell measures
  std::vector<double> quad_weight;   // high-order weights for expectations
  double total_volume = 0.0;
};

class FlowSingularityError : public std::runtime_error {
 public:
  explicit FlowSingularityError(const std::string& what)
      : std::runtime_error(what) {}
};

// A curvature flow over [0, t_max]. Closed-form kinds evaluate on demand;
// WarpedS2 is integrated once at construction and interpolated in time.
class FlowFamily {
 public:
  // Closed-form kinds (EuclideanExact, FlatTorus, RoundSphere). grid_n sets
  // the reduced grid resolution; t_max must stay below the sphere's
  // extinction time radius0^2 / (2 (dim-1)).
  FlowFamily(const FlowSpec& spec, double t_max, int grid_n = 512);

  const FlowSpec& spec() const { return spec_; }
  double t_max() const { return t_max_; }
  int grid_n() const { return grid_n_; }

  MetricSample metric_at(double t) const;

  // WarpedS2 conformal exponent at time t (interpolated between snapshots).
  std::vector<double> warp_exponent_at(double t) const;

  // Snapshot times of the baked numeric flow (empty for closed forms).
  const std::vector<double>& snapshot_times() const { return snap_times_; }

 private:
  void bake_warped(int grid_n);
  FlowSpec spec_;
  double t_max_;
  int grid_n_;
  std::vector<double> snap_times_;
  std::vector<std::vector<double>> snap_profiles_;  // u(theta) per snapshot
};

// Pointwise |grad f|_g. Centered differences; even reflection across the
// poles of sphere kinds (axisymmetric smooth fields have f_theta = 0 there).
DiscreteField gradient_norm(const DiscreteField& f, const MetricSample& m);

// Laplace-Beltrami via the finite-volume stencil, symmetric with respect to
// cell_volume weights; poles get the regularized one-sided flux limit.
DiscreteField laplacian(const DiscreteField& f, const MetricSample& m);

// sum_i f_i g_i cell_volume_i: the inner product under which `laplacian`
// is symmetric.
double fv_inner_product(const DiscreteField& f, const DiscreteField& g,
                        const MetricSample& m);

// Face-based Dirichlet pairing int <grad f, grad g> dV. Satisfies the exact
// discrete identity fv_inner_product(laplacian(f), g) = -dirichlet_pairing.
double dirichlet_pairing(const DiscreteField& f, const DiscreteField& g,
                         const MetricSample& m);

// High-order volume integral of a nodal field (Clenshaw-Curtis weights on
// sphere kinds, periodic trapezoid on the torus).
double volume_integral(const DiscreteField& f, const MetricSample& m);

// Geodesic distance in the reduced coordinate: wrap-aware on the torus,
// meridian arc length on sphere kinds.
double distance(const MetricSample& m, double x, double y);

// Conformal coefficient at an off-node coordinate, linearly interpolated
// between grid nodes (wrap-aware on the torus, clamped on intervals).
double conformal_at(const MetricSample& m, double x);

// Principal curvature data of an axisymmetric Hessian in an orthonormal
// frame: meridian component, parallel component, and |grad w|.
struct AxisymHessian {
  std::vector<double> h_meridian;
  std::vector<double> h_parallel;  // zero-filled for 1-D kinds
  std::vector<double> grad_norm;
};

AxisymHessian axisym_hessian(const DiscreteField& w, const MetricSample& m);

// Gauss curvature of the warped metric e^{2u} g_round at the sample nodes.
std::vector<double> warped_gauss_curvature(const std::vector<double>& u,
                                           const Grid1D& grid);

// Finite-volume stencil behind `laplacian`: face_weight[i] sits between
// nodes i and i+1, cell[i] is the node's cell measure, and the operator row
// is [w_{i-1}(f_{i-1}-f_i) + w_i(f_{i+1}-f_i)] / (cell_i h a_i). Interval
// grids carry the unit-sphere sines and cosine-difference cells; periodic
// grids have unit faces and h cells. Time steppers assemble their matrices
// from this so implicit and explicit applications agree row for row.
struct FvStencil {
  std::vector<double> face_weight;
  std::vector<double> cell;
};

FvStencil fv_stencil(const Grid1D& g);

}  // namespace hkflow::geom
