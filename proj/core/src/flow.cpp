#include "hkflow/flow.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>

#include "hkflow/numerics.hpp"

#include <map>
#include <mutex>

namespace hkflow::geom {

namespace {

constexpr double kPi = std::numbers::pi;

// metric_at sits in time-stepping loops; the O(n^2) weight construction is
// shared per grid size.
const std::vector<double>& cc_weights_cached(int n) {
  static std::mutex mu;
  static std::map<int, std::vector<double>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) {
    it = cache.emplace(n, num::clenshaw_curtis_weights(n)).first;
  }
  return it->second;
}

bool is_sphere_kind(FlowKind k) {
  return k == FlowKind::RoundSphere || k == FlowKind::WarpedS2;
}

// Face sines and cell measures of the unit-sphere finite-volume stencil on
// an interval grid over [0, pi]. Cell i is [theta_i - h/2, theta_i + h/2]
// clipped to the poles; measures are exact cosine differences, so they sum
// to the exact total measure 2.
struct SphereStencil {
  std::vector<double> face_sin;  // size n, face between nodes i and i+1
  std::vector<double> cell;      // size n+1

  explicit SphereStencil(const Grid1D& g) {
    const int n = g.n;
    const double h = g.spacing();
    face_sin.resize(n);
    cell.resize(n + 1);
    for (int i = 0; i < n; ++i) face_sin[i] = std::sin((i + 0.5) * h);
    auto clip_cos = [&](double theta) {
      return std::cos(std::clamp(theta, 0.0, kPi));
    };
    for (int i = 0; i <= n; ++i) {
      cell[i] = clip_cos(g.node(i) - 0.5 * h) - clip_cos(g.node(i) + 0.5 * h);
    }
  }
};

// Unit-sphere Laplace-Beltrami of an axisymmetric nodal field, finite-volume
// form (symmetric under the cell measures, one-sided flux limits at poles).
std::vector<double> unit_sphere_laplacian(const std::vector<double>& f,
                                          const Grid1D& g) {
  const SphereStencil st(g);
  const int n = g.n;
  const double h = g.spacing();
  std::vector<double> out(n + 1, 0.0);
  for (int i = 0; i <= n; ++i) {
    double flux = 0.0;
    if (i < n) flux += st.face_sin[i] * (f[i + 1] - f[i]);
    if (i > 0) flux -= st.face_sin[i - 1] * (f[i] - f[i - 1]);
    out[i] = flux / (st.cell[i] * h);
  }
  return out;
}

std::vector<double> legendre_mode(const Grid1D& g, int mode) {
  // P_mode(cos theta) by upward recurrence; smooth at both poles.
  std::vector<double> v(g.n + 1);
  for (int i = 0; i <= g.n; ++i) {
    const double x = std::cos(g.node(i));
    double p0 = 1.0, p1 = x;
    if (mode == 0) {
      v[i] = 1.0;
      continue;
    }
    for (int l = 1; l < mode; ++l) {
      const double p2 = ((2.0 * l + 1.0) * x * p1 - l * p0) / (l + 1.0);
      p0 = p1;
      p1 = p2;
    }
    v[i] = p1;
  }
  return v;
}

}  // namespace

FvStencil fv_stencil(const Grid1D& g) {
  FvStencil st;
  if (g.topology == Topology::Periodic) {
    st.face_weight.assign(g.n, 1.0);
    st.cell.assign(g.n, g.spacing());
  } else {
    const SphereStencil sp(g);
    st.face_weight = sp.face_sin;
    st.cell = sp.cell;
  }
  return st;
}

std::vector<double> warped_gauss_curvature(const std::vector<double>& u,
                                           const Grid1D& grid) {
  const auto lap = unit_sphere_laplacian(u, grid);
  std::vector<double> k(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    k[i] = std::exp(-2.0 * u[i]) * (1.0 - lap[i]);
  }
  return k;
}

FlowFamily::FlowFamily(const FlowSpec& spec, double t_max, int grid_n)
    : spec_(spec), t_max_(t_max), grid_n_(grid_n) {
  if (t_max < 0.0) throw std::invalid_argument("FlowFamily: t_max < 0");
  if (grid_n < 8) throw std::invalid_argument("FlowFamily: grid too coarse");
  switch (spec.kind) {
    case FlowKind::EuclideanExact:
    case FlowKind::FlatTorus:
      if (spec.dim < 1 || spec.periods.empty() || spec.periods[0] <= 0.0) {
        throw std::invalid_argument("FlowFamily: bad flat spec");
      }
      break;
    case FlowKind::RoundSphere: {
      if (spec.dim != 2) {
        throw std::invalid_argument(
            "FlowFamily: reduced grids support RoundSphere only for dim 2");
      }
      const double t_ext = spec.radius0 * spec.radius0 / 2.0;
      if (t_max >= t_ext) {
        throw FlowSingularityError(
            "RoundSphere: requested horizon reaches extinction at t = " +
            std::to_string(t_ext));
      }
      break;
    }
    case FlowKind::WarpedS2:
      if (spec.dim != 2) {
        throw std::invalid_argument("FlowFamily: WarpedS2 requires dim 2");
      }
      bake_warped(grid_n);
      break;
  }
}

void FlowFamily::bake_warped(int grid_n) {
  Grid1D g{grid_n, kPi, Topology::Interval};
  const int n = g.n;
  const double h = g.spacing();
  std::vector<double> u;
  if (!spec_.warp_profile.empty()) {
    if (static_cast<int>(spec_.warp_profile.size()) != n + 1) {
      throw std::invalid_argument("FlowFamily: warp_profile size mismatch");
    }
    u = spec_.warp_profile;
  } else {
    u.assign(n + 1, 0.0);
    const auto mode = legendre_mode(g, spec_.warp_mode);
    for (int i = 0; i <= n; ++i) u[i] = spec_.warp_amplitude * mode[i];
  }

  const SphereStencil st(g);
  constexpr double kCurvatureCeiling = 1e5;

  // Conformal surface flow du/dt = e^{-2u} (Lap0 u - 1); the stiff
  // Laplacian term is taken implicitly with the conformal factor frozen
  // per step, which keeps every step a tridiagonal solve.
  double t = 0.0;
  snap_times_.clear();
  snap_profiles_.clear();
  snap_times_.push_back(0.0);
  snap_profiles_.push_back(u);

  const double base_dt = 0.5 * h * h;
  const int approx_steps =
      static_cast<int>(std::ceil(t_max_ / (0.25 * base_dt))) + 1;
  const int snap_stride = std::max(1, approx_steps / 480);

  int step = 0;
  while (t < t_max_ - 1e-15) {
    double min_factor = 1e300;
    for (int i = 0; i <= n; ++i) {
      min_factor = std::min(min_factor, std::exp(2.0 * u[i]));
    }
    double dt = std::min(base_dt * std::min(min_factor, 1.0), t_max_ - t);

    const auto curv = warped_gauss_curvature(u, g);
    for (double k : curv) {
      if (std::abs(k) > kCurvatureCeiling) {
        throw FlowSingularityError(
            "WarpedS2: curvature exceeded ceiling at t = " + std::to_string(t));
      }
    }

    std::vector<double> lower(n + 1, 0.0), diag(n + 1, 0.0), upper(n + 1, 0.0),
        rhs(n + 1, 0.0);
    for (int i = 0; i <= n; ++i) {
      const double d = std::exp(-2.0 * u[i]);
      const double scale = dt * d / (st.cell[i] * h);
      if (i < n) upper[i] = -scale * st.face_sin[i];
      if (i > 0) lower[i] = -scale * st.face_sin[i - 1];
      diag[i] = 1.0 - (i < n ? upper[i] : 0.0) - (i > 0 ? lower[i] : 0.0);
      rhs[i] = u[i] - dt * d;
    }
    num::solve_tridiagonal(lower, diag, upper, rhs);
    u = rhs;
    t += dt;
    ++step;
    if (step % snap_stride == 0 || t >= t_max_ - 1e-15) {
      snap_times_.push_back(t);
      snap_profiles_.push_back(u);
    }
  }
}

std::vector<double> FlowFamily::warp_exponent_at(double t) const {
  if (spec_.kind != FlowKind::WarpedS2) {
    throw std::logic_error("warp_exponent_at: not a warped flow");
  }
  if (t < -1e-12 || t > t_max_ + 1e-12) {
    throw std::out_of_range("warp_exponent_at: time outside baked horizon");
  }
  t = std::clamp(t, 0.0, snap_times_.back());
  const auto it =
      std::lower_bound(snap_times_.begin(), snap_times_.end(), t);
  std::size_t j = it - snap_times_.begin();
  if (j == 0) return snap_profiles_.front();
  if (j >= snap_times_.size()) return snap_profiles_.back();
  const double t0 = snap_times_[j - 1], t1 = snap_times_[j];
  const double w = (t - t0) / (t1 - t0);
  std::vector<double> out(snap_profiles_[j].size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (1.0 - w) * snap_profiles_[j - 1][i] + w * snap_profiles_[j][i];
  }
  return out;
}

MetricSample FlowFamily::metric_at(double t) const {
  if (t < -1e-12 || t > t_max_ + 1e-12) {
    throw std::out_of_range("metric_at: time outside flow horizon");
  }
  t = std::clamp(t, 0.0, t_max_);
  MetricSample m;
  m.kind = spec_.kind;
  m.dim = spec_.dim;
  m.t = t;

  switch (spec_.kind) {
    case FlowKind::EuclideanExact:
    case FlowKind::FlatTorus: {
      // Euclidean grid work runs on the same flat periodic window as the
      // torus; the window is sized so wrap-around mass is negligible.
      m.grid = Grid1D{grid_n_, spec_.periods[0], Topology::Periodic};
      const int nn = m.grid.node_count();
      const double h = m.grid.spacing();
      m.a_coef.assign(nn, 1.0);
      m.scalar_curv.assign(nn, 0.0);
      m.cell_volume.assign(nn, h);
      m.quad_weight.assign(nn, h);
      m.total_volume = spec_.periods[0];
      return m;
    }
    case FlowKind::RoundSphere: {
      const double rho2 = spec_.radius0 * spec_.radius0 - 2.0 * t;
      if (rho2 <= 0.0) {
        throw FlowSingularityError("RoundSphere: extinct at requested time");
      }
      m.grid = Grid1D{grid_n_, kPi, Topology::Interval};
      const int nn = m.grid.node_count();
      const SphereStencil st(m.grid);
      const auto& cc = cc_weights_cached(m.grid.n);
      m.a_coef.assign(nn, rho2);
      m.b_coef.resize(nn);
      m.scalar_curv.assign(nn, 2.0 / rho2);
      m.cell_volume.resize(nn);
      m.quad_weight.resize(nn);
      for (int i = 0; i < nn; ++i) {
        const double s = std::sin(m.grid.node(i));
        m.b_coef[i] = rho2 * s * s;
        m.cell_volume[i] = 2.0 * kPi * rho2 * st.cell[i];
        m.quad_weight[i] = 2.0 * kPi * rho2 * cc[i];
      }
      m.total_volume = 4.0 * kPi * rho2;
      return m;
    }
    case FlowKind::WarpedS2: {
      m.grid = Grid1D{grid_n_, kPi, Topology::Interval};
      const int nn = m.grid.node_count();
      const auto u = warp_exponent_at(t);
      const SphereStencil st(m.grid);
      const auto& cc = cc_weights_cached(m.grid.n);
      const auto gauss = warped_gauss_curvature(u, m.grid);
      m.a_coef.resize(nn);
      m.b_coef.resize(nn);
      m.scalar_curv.resize(nn);
      m.cell_volume.resize(nn);
      m.quad_weight.resize(nn);
      m.total_volume = 0.0;
      for (int i = 0; i < nn; ++i) {
        const double e2u = std::exp(2.0 * u[i]);
        const double s = std::sin(m.grid.node(i));
        m.a_coef[i] = e2u;
        m.b_coef[i] = e2u * s * s;
        m.scalar_curv[i] = 2.0 * gauss[i];
        m.cell_volume[i] = 2.0 * kPi * e2u * st.cell[i];
        m.quad_weight[i] = 2.0 * kPi * e2u * cc[i];
        m.total_volume += m.quad_weight[i];
      }
      return m;
    }
  }
  throw std::logic_error("metric_at: unreachable");
}

namespace {

void check_field(const DiscreteField& f, const MetricSample& m,
                 const char* where) {
  if (f.grid.node_count() != m.grid.node_count() ||
      f.grid.topology != m.grid.topology ||
      static_cast<int>(f.values.size()) != f.grid.node_count()) {
    throw std::invalid_argument(std::string(where) + ": grid mismatch");
  }
}

// Centered first derivative in the reduced coordinate. Periodic wrap on the
// torus; even reflection at interval ends (axisymmetric regularity).
std::vector<double> d_theta(const std::vector<double>& f, const Grid1D& g) {
  const int nn = g.node_count();
  const double h = g.spacing();
  std::vector<double> out(nn);
  if (g.topology == Topology::Periodic) {
    for (int i = 0; i < nn; ++i) {
      const double fp = f[(i + 1) % nn], fm = f[(i - 1 + nn) % nn];
      out[i] = (fp - fm) / (2.0 * h);
    }
  } else {
    out[0] = 0.0;
    out[nn - 1] = 0.0;
    for (int i = 1; i + 1 < nn; ++i) out[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
  }
  return out;
}

std::vector<double> d2_theta(const std::vector<double>& f, const Grid1D& g) {
  const int nn = g.node_count();
  const double h = g.spacing();
  std::vector<double> out(nn);
  if (g.topology == Topology::Periodic) {
    for (int i = 0; i < nn; ++i) {
      const double fp = f[(i + 1) % nn], fm = f[(i - 1 + nn) % nn];
      out[i] = (fp - 2.0 * f[i] + fm) / (h * h);
    }
  } else {
    out[0] = 2.0 * (f[1] - f[0]) / (h * h);
    out[nn - 1] = 2.0 * (f[nn - 2] - f[nn - 1]) / (h * h);
    for (int i = 1; i + 1 < nn; ++i) {
      out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h);
    }
  }
  return out;
}

}  // namespace

DiscreteField gradient_norm(const DiscreteField& f, const MetricSample& m) {
  check_field(f, m, "gradient_norm");
  const auto df = d_theta(f.values, f.grid);
  DiscreteField out{f.grid, f.time, std::vector<double>(df.size())};
  for (std::size_t i = 0; i < df.size(); ++i) {
    out.values[i] = std::abs(df[i]) / std::sqrt(m.a_coef[i]);
  }
  return out;
}

DiscreteField laplacian(const DiscreteField& f, const MetricSample& m) {
  check_field(f, m, "laplacian");
  const int nn = f.grid.node_count();
  DiscreteField out{f.grid, f.time, std::vector<double>(nn, 0.0)};
  if (m.grid.topology == Topology::Periodic) {
    const double h = m.grid.spacing();
    for (int i = 0; i < nn; ++i) {
      const double fp = f.values[(i + 1) % nn], fm = f.values[(i - 1 + nn) % nn];
      out.values[i] = (fp - 2.0 * f.values[i] + fm) / (h * h * m.a_coef[i]);
    }
  } else {
    // Conformal to the unit round sphere in both sphere kinds:
    // a_coef = rho^2 or e^{2u}, and Lap_g = a_coef^{-1} Lap_round.
    const auto lap0 = unit_sphere_laplacian(f.values, m.grid);
    for (int i = 0; i < nn; ++i) out.values[i] = lap0[i] / m.a_coef[i];
  }
  return out;
}

double fv_inner_product(const DiscreteField& f, const DiscreteField& g,
                        const MetricSample& m) {
  check_field(f, m, "fv_inner_product");
  check_field(g, m, "fv_inner_product");
  double acc = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    acc += f.values[i] * g.values[i] * m.cell_volume[i];
  }
  return acc;
}

double dirichlet_pairing(const DiscreteField& f, const DiscreteField& g,
                         const MetricSample& m) {
  check_field(f, m, "dirichlet_pairing");
  check_field(g, m, "dirichlet_pairing");
  const double h = m.grid.spacing();
  double acc = 0.0;
  if (m.grid.topology == Topology::Periodic) {
    const int nn = m.grid.node_count();
    for (int i = 0; i < nn; ++i) {
      const int j = (i + 1) % nn;
      acc += (f.values[j] - f.values[i]) * (g.values[j] - g.values[i]) / h;
    }
    return acc;
  }
  // 2-D Dirichlet energy is conformally invariant, so faces weigh by the
  // unit-sphere latitude circumference alone.
  const SphereStencil st(m.grid);
  for (int i = 0; i < m.grid.n; ++i) {
    acc += 2.0 * kPi * st.face_sin[i] * (f.values[i + 1] - f.values[i]) *
           (g.values[i + 1] - g.values[i]) / h;
  }
  return acc;
}

double volume_integral(const DiscreteField& f, const MetricSample& m) {
  check_field(f, m, "volume_integral");
  double acc = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    acc += f.values[i] * m.quad_weight[i];
  }
  return acc;
}

double distance(const MetricSample& m, double x, double y) {
  if (m.grid.topology == Topology::Periodic) {
    if (m.kind == FlowKind::EuclideanExact) {
      return std::abs(x - y);  // surrogate window of the flat line
    }
    const double p = m.grid.length;
    double d = std::fmod(std::abs(x - y), p);
    d = std::min(d, p - d);
    return d;  // flat kinds: a_coef = 1
  }
  const double lo = std::clamp(std::min(x, y), 0.0, kPi);
  const double hi = std::clamp(std::max(x, y), 0.0, kPi);
  if (m.kind == FlowKind::RoundSphere) {
    return std::sqrt(m.a_coef[0]) * (hi - lo);
  }
  // Warped meridian arc length: integrate e^{u} with linear interpolation
  // of the nodal conformal factor.
  const double h = m.grid.spacing();
  auto e_u = [&](double theta) {
    const double s = std::clamp(theta / h, 0.0, double(m.grid.n));
    const int i = std::min(static_cast<int>(s), m.grid.n - 1);
    const double w = s - i;
    const double a = (1.0 - w) * m.a_coef[i] + w * m.a_coef[i + 1];
    return std::sqrt(a);
  };
  return num::integrate(e_u, lo, hi, 1e-12);
}

double conformal_at(const MetricSample& m, double x) {
  const auto& g = m.grid;
  const double h = g.spacing();
  double u;
  if (g.topology == Topology::Periodic) {
    u = std::fmod(x / h, static_cast<double>(g.n));
    if (u < 0.0) u += g.n;
    const int i = std::min(static_cast<int>(u), g.n - 1);
    const double w = u - i;
    return (1.0 - w) * m.a_coef[i] + w * m.a_coef[(i + 1) % g.n];
  }
  u = std::clamp(x / h, 0.0, static_cast<double>(g.n));
  const int i = std::min(static_cast<int>(u), g.n - 1);
  const double w = u - i;
  return (1.0 - w) * m.a_coef[i] + w * m.a_coef[i + 1];
}

AxisymHessian axisym_hessian(const DiscreteField& w, const MetricSample& m) {
  check_field(w, m, "axisym_hessian");
  const int nn = w.grid.node_count();
  const auto dw = d_theta(w.values, w.grid);
  const auto d2w = d2_theta(w.values, w.grid);
  AxisymHessian out;
  out.h_meridian.resize(nn);
  out.h_parallel.assign(nn, 0.0);
  out.grad_norm.resize(nn);

  if (m.grid.topology == Topology::Periodic) {
    for (int i = 0; i < nn; ++i) {
      out.h_meridian[i] = d2w[i];
      out.grad_norm[i] = std::abs(dw[i]);
    }
    return out;
  }

  // u_theta of the conformal exponent, recovered from a_coef = e^{2u}.
  std::vector<double> logl(nn);
  for (int i = 0; i < nn; ++i) logl[i] = 0.5 * std::log(m.a_coef[i]);
  const auto du = d_theta(logl, w.grid);

  for (int i = 0; i < nn; ++i) {
    const double a = m.a_coef[i];
    const double theta = m.grid.node(i);
    out.h_meridian[i] = (d2w[i] - du[i] * dw[i]) / a;
    if (i == 0 || i == nn - 1) {
      out.h_parallel[i] = out.h_meridian[i];  // umbilic pole limit
    } else {
      const double cot = std::cos(theta) / std::sin(theta);
      out.h_parallel[i] = (du[i] + cot) * dw[i] / a;
    }
    out.grad_norm[i] = std::abs(dw[i]) / std::sqrt(a);
  }
  return out;
}

}  // namespace hkflow::geom
