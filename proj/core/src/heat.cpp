#include "hkflow/heat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hkflow/numerics.hpp"

namespace hkflow::heat {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_flat(geom::FlowKind k) {
  return k == geom::FlowKind::EuclideanExact || k == geom::FlowKind::FlatTorus;
}

bool is_sphere(geom::FlowKind k) {
  return k == geom::FlowKind::RoundSphere || k == geom::FlowKind::WarpedS2;
}

// Conformal factor a (metric Laplacian = stencil / a) and scalar curvature
// at flow time t, on the reduced grid.
void coef_at(const geom::FlowFamily& flow, const geom::Grid1D& grid, double t,
             bool need_curv, std::vector<double>& a, std::vector<double>& r) {
  const int m = grid.node_count();
  switch (flow.spec().kind) {
    case geom::FlowKind::EuclideanExact:
    case geom::FlowKind::FlatTorus:
      a.assign(m, 1.0);
      if (need_curv) r.assign(m, 0.0);
      return;
    case geom::FlowKind::RoundSphere: {
      const double r0 = flow.spec().radius0;
      const double rho2 = r0 * r0 - 2.0 * t;
      if (rho2 <= 0.0) {
        throw geom::FlowSingularityError("coef_at: sphere extinct");
      }
      a.assign(m, rho2);
      if (need_curv) r.assign(m, 2.0 / rho2);
      return;
    }
    case geom::FlowKind::WarpedS2: {
      const auto u = flow.warp_exponent_at(t);
      a.resize(m);
      for (int i = 0; i < m; ++i) a[i] = std::exp(2.0 * u[i]);
      if (need_curv) {
        const auto k = geom::warped_gauss_curvature(u, grid);
        r.resize(m);
        for (int i = 0; i < m; ++i) r[i] = 2.0 * k[i];
      }
      return;
    }
  }
  throw std::logic_error("coef_at: unreachable");
}

// Smallest conformal factor over [lo, hi]; governs the positivity bound on
// the time step. Monotone in closed forms; the numeric kind is scanned at
// its snapshots.
double min_conformal(const geom::FlowFamily& flow, double lo, double hi) {
  switch (flow.spec().kind) {
    case geom::FlowKind::EuclideanExact:
    case geom::FlowKind::FlatTorus:
      return 1.0;
    case geom::FlowKind::RoundSphere: {
      const double r0 = flow.spec().radius0;
      const double a = r0 * r0 - 2.0 * hi;
      if (a <= 0.0) {
        throw geom::FlowSingularityError("min_conformal: sphere extinct");
      }
      return a;
    }
    case geom::FlowKind::WarpedS2: {
      double umin = std::numeric_limits<double>::infinity();
      auto scan = [&](double t) {
        for (double ui : flow.warp_exponent_at(t)) umin = std::min(umin, ui);
      };
      scan(lo);
      scan(hi);
      for (double ts : flow.snapshot_times()) {
        if (ts > lo && ts < hi) scan(ts);
      }
      return std::exp(2.0 * umin);
    }
  }
  throw std::logic_error("min_conformal: unreachable");
}

// Rows of the generator A = Lap_{g_t} (optionally minus the curvature term)
// in band form. On periodic grids low[0] and up[m-1] are the wrap entries.
struct Rows {
  std::vector<double> low, mid, up;
};

void make_rows(const geom::FvStencil& st, const geom::Grid1D& grid,
               const std::vector<double>& a, const std::vector<double>* r,
               Rows& out) {
  const int m = grid.node_count();
  const double h = grid.spacing();
  out.low.assign(m, 0.0);
  out.mid.assign(m, 0.0);
  out.up.assign(m, 0.0);
  if (grid.topology == geom::Topology::Periodic) {
    for (int i = 0; i < m; ++i) {
      const double w = 1.0 / (h * h * a[i]);
      out.low[i] = w;
      out.up[i] = w;
      out.mid[i] = -2.0 * w;
    }
  } else {
    for (int i = 0; i < m; ++i) {
      const double denom = st.cell[i] * h * a[i];
      if (i > 0) out.low[i] = st.face_weight[i - 1] / denom;
      if (i < m - 1) out.up[i] = st.face_weight[i] / denom;
      out.mid[i] = -(out.low[i] + out.up[i]);
    }
  }
  if (r != nullptr) {
    for (int i = 0; i < m; ++i) out.mid[i] -= (*r)[i];
  }
}

// y = (I + (dt/2) A) v
void explicit_half(const Rows& rows, const std::vector<double>& v, double dt,
                   bool periodic, std::vector<double>& y) {
  const int m = static_cast<int>(v.size());
  y.resize(m);
  for (int i = 0; i < m; ++i) {
    double acc = rows.mid[i] * v[i];
    if (periodic) {
      acc += rows.low[i] * v[(i - 1 + m) % m] + rows.up[i] * v[(i + 1) % m];
    } else {
      if (i > 0) acc += rows.low[i] * v[i - 1];
      if (i < m - 1) acc += rows.up[i] * v[i + 1];
    }
    y[i] = v[i] + 0.5 * dt * acc;
  }
}

// Solve (I - (dt/2) A) v = y in place.
void implicit_half(const Rows& rows, double dt, bool periodic,
                   std::vector<double>& y) {
  const int m = static_cast<int>(y.size());
  std::vector<double> il(m), imid(m), iu(m);
  for (int i = 0; i < m; ++i) {
    il[i] = -0.5 * dt * rows.low[i];
    imid[i] = 1.0 - 0.5 * dt * rows.mid[i];
    iu[i] = -0.5 * dt * rows.up[i];
  }
  if (periodic) {
    num::solve_cyclic_tridiagonal(il, imid, iu, y);
  } else {
    num::solve_tridiagonal(il, imid, iu, y);
  }
}

enum class MarchMode { Forward, Conjugate };

// Crank-Nicolson march of the forward heat equation (metric time running
// up) or of the conjugate equation dv/dgap = (Lap - R) v (metric time
// running down). The step honours the discrete maximum principle:
// dt <= c h^2 a_min with c = 1/2 forward; the conjugate march uses c = 0.4
// so the curvature term cannot push the explicit pole row negative.
std::vector<double> cn_march(const geom::FlowFamily& flow,
                             const geom::Grid1D& grid, MarchMode mode,
                             std::vector<double> v, double time_from,
                             double time_to, double dt_hint) {
  const bool conj = mode == MarchMode::Conjugate;
  const double dir = conj ? -1.0 : 1.0;
  const double span = dir * (time_to - time_from);
  if (span < 0.0) {
    throw std::invalid_argument("cn_march: wrong time direction");
  }
  if (span == 0.0) return v;
  const double h = grid.spacing();
  const double a_min = min_conformal(flow, std::min(time_from, time_to),
                                     std::max(time_from, time_to));
  const double c = conj ? 0.4 : 0.5;
  const double dt_max = c * h * h * a_min;
  if (dt_hint > 0.0 && dt_hint > dt_max * (1.0 + 1e-12)) {
    throw std::runtime_error(
        "heat_evolve: step " + std::to_string(dt_hint) +
        " breaks the discrete maximum principle on this span; use dt <= " +
        std::to_string(dt_max));
  }
  const double dt_eff = dt_hint > 0.0 ? dt_hint : dt_max;
  const long steps = std::max(1L, static_cast<long>(std::ceil(span / dt_eff)));
  const double dt = span / static_cast<double>(steps);
  const bool periodic = grid.topology == geom::Topology::Periodic;
  const auto st = geom::fv_stencil(grid);

  std::vector<double> a_cur, r_cur, a_next, r_next, y;
  coef_at(flow, grid, time_from, conj, a_cur, r_cur);
  Rows rows_cur, rows_next;
  make_rows(st, grid, a_cur, conj ? &r_cur : nullptr, rows_cur);
  for (long k = 0; k < steps; ++k) {
    const double t_next = time_from + dir * dt * static_cast<double>(k + 1);
    coef_at(flow, grid, t_next, conj, a_next, r_next);
    make_rows(st, grid, a_next, conj ? &r_next : nullptr, rows_next);
    explicit_half(rows_cur, v, dt, periodic, y);
    implicit_half(rows_next, dt, periodic, y);
    v.swap(y);
    rows_cur.low.swap(rows_next.low);
    rows_cur.mid.swap(rows_next.mid);
    rows_cur.up.swap(rows_next.up);
  }
  return v;
}

void check_same_grid(const geom::Grid1D& a, const geom::Grid1D& b,
                     const char* where) {
  if (a.n != b.n || a.topology != b.topology ||
      std::abs(a.length - b.length) > 1e-12 * std::max(1.0, a.length)) {
    throw std::invalid_argument(std::string(where) + ": grid mismatch");
  }
}

}  // namespace

double time_gap(const KernelMeasure& nu) { return nu.t0 - nu.s; }

geom::DiscreteField apply(const SemigroupOperator& op,
                          const geom::DiscreteField& f) {
  if (op.flow == nullptr) {
    throw std::invalid_argument("apply: null flow handle");
  }
  if (op.t < op.s) {
    throw std::invalid_argument("apply: target time before source time");
  }
  if (std::abs(f.time - op.s) > 1e-9) {
    throw std::invalid_argument("apply: field not sampled at the source time");
  }
  const auto m = op.flow->metric_at(op.s);
  check_same_grid(f.grid, m.grid, "apply");
  geom::DiscreteField out{f.grid, op.t,
                          cn_march(*op.flow, f.grid, MarchMode::Forward,
                                   f.values, op.s, op.t, op.dt_hint)};
  return out;
}

geom::DiscreteField heat_evolve(const geom::FlowFamily& flow,
                                const geom::DiscreteField& f,
                                double t_target) {
  SemigroupOperator op{&flow, f.time, t_target, 0.0};
  return apply(op, f);
}

double gauss_heat_density(double x, double x0, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("gauss_heat_density: tau <= 0");
  const double d = x - x0;
  return std::exp(-d * d / (4.0 * tau)) / std::sqrt(4.0 * kPi * tau);
}

double wrapped_gauss_density(double x, double x0, double tau, double period) {
  if (period <= 0.0) {
    throw std::invalid_argument("wrapped_gauss_density: period <= 0");
  }
  const double peak = 1.0 / std::sqrt(4.0 * kPi * tau);
  double acc = gauss_heat_density(x, x0, tau);
  for (int k = 1; k < 1000; ++k) {
    const double up = gauss_heat_density(x + k * period, x0, tau);
    const double dn = gauss_heat_density(x - k * period, x0, tau);
    acc += up + dn;
    if (up < 1e-18 * peak && dn < 1e-18 * peak) break;
  }
  return acc;
}

namespace {

KernelMeasure flat_kernel(const geom::FlowFamily& flow, double x0, double t0,
                          double s) {
  const auto m = flow.metric_at(s);
  const double tau = t0 - s;
  const double period = flow.spec().periods[0];
  KernelMeasure nu;
  nu.kind = flow.spec().kind;
  nu.x0 = x0;
  nu.t0 = t0;
  nu.s = s;
  nu.density.grid = m.grid;
  nu.density.time = s;
  const int mm = m.grid.node_count();
  nu.density.values.resize(mm);
  if (nu.kind == geom::FlowKind::EuclideanExact) {
    for (int i = 0; i < mm; ++i) {
      nu.density.values[i] = gauss_heat_density(m.grid.node(i), x0, tau);
    }
    // mass escaping the representable window
    const double edge = std::min(x0, period - x0);
    nu.truncation_error = std::erfc(edge / std::sqrt(4.0 * tau));
  } else {
    for (int i = 0; i < mm; ++i) {
      nu.density.values[i] =
          wrapped_gauss_density(m.grid.node(i), x0, tau, period);
    }
    nu.truncation_error = 2e-18 / std::sqrt(4.0 * kPi * tau);
  }
  return nu;
}

KernelMeasure round_sphere_kernel(const geom::FlowFamily& flow, double t0,
                                  double s, int lmax) {
  const auto m = flow.metric_at(s);
  const double r0 = flow.spec().radius0;
  const double rho2_t0 = r0 * r0 - 2.0 * t0;
  const double rho2_s = r0 * r0 - 2.0 * s;
  if (rho2_t0 <= 0.0) {
    throw geom::FlowSingularityError("conjugate_kernel: base time extinct");
  }
  const double q = rho2_t0 / rho2_s;
  const double log_q = std::log(q);
  const double norm = 1.0 / (4.0 * kPi * rho2_s);

  // coefficient (2l+1) q^{l(l+1)/2}; cut when it stops contributing
  std::vector<double> coef;
  coef.reserve(lmax + 1);
  for (int l = 0; l <= lmax; ++l) {
    const double c = (2.0 * l + 1.0) * std::exp(0.5 * l * (l + 1.0) * log_q);
    coef.push_back(c);
    if (c < 1e-18) break;
  }
  const int used = static_cast<int>(coef.size()) - 1;
  double tail = 0.0;
  for (int l = used + 1; l <= used + 24; ++l) {
    tail += (2.0 * l + 1.0) * std::exp(0.5 * l * (l + 1.0) * log_q);
  }

  KernelMeasure nu;
  nu.kind = geom::FlowKind::RoundSphere;
  nu.x0 = 0.0;
  nu.t0 = t0;
  nu.s = s;
  nu.truncation_error = norm * tail;
  nu.density.grid = m.grid;
  nu.density.time = s;
  const int mm = m.grid.node_count();
  nu.density.values.resize(mm);
  for (int i = 0; i < mm; ++i) {
    const double x = std::cos(m.grid.node(i));
    double p0 = 1.0, p1 = x;
    double acc = coef[0];
    if (used >= 1) acc += coef[1] * p1;
    for (int l = 2; l <= used; ++l) {
      const double p2 = ((2.0 * l - 1.0) * x * p1 - (l - 1.0) * p0) / l;
      acc += coef[l] * p2;
      p0 = p1;
      p1 = p2;
    }
    nu.density.values[i] = norm * acc;
  }
  return nu;
}

KernelMeasure warped_kernel(const geom::FlowFamily& flow, double t0, double s) {
  const auto m_t0 = flow.metric_at(t0);
  const geom::Grid1D grid = m_t0.grid;
  const double h = grid.spacing();
  const double tau = t0 - s;
  const double tau_init = 10.0 * h * h;
  if (tau <= 2.0 * tau_init) {
    throw std::invalid_argument(
        "conjugate_kernel: gap too small for the bump-initialized solve at "
        "this resolution; refine the grid or widen the gap");
  }
  const int mm = grid.node_count();
  std::vector<double> dist(mm);
  for (int i = 0; i < mm; ++i) {
    dist[i] = geom::distance(m_t0, 0.0, grid.node(i));
  }

  auto solve_from_bump = [&](double width, double* drift) {
    const double s_init = t0 - width;
    const auto ms = flow.metric_at(s_init);
    std::vector<double> v(mm);
    double mass0 = 0.0;
    for (int i = 0; i < mm; ++i) {
      v[i] = std::exp(-dist[i] * dist[i] / (4.0 * width));
      mass0 += v[i] * ms.cell_volume[i];
    }
    for (double& vi : v) vi /= mass0;
    v = cn_march(flow, grid, MarchMode::Conjugate, std::move(v), s_init, s,
                 0.0);
    const auto msf = flow.metric_at(s);
    double mass = 0.0;
    for (int i = 0; i < mm; ++i) mass += v[i] * msf.quad_weight[i];
    if (drift != nullptr) *drift = std::abs(mass - 1.0);
    for (double& vi : v) vi /= mass;
    return v;
  };

  KernelMeasure nu;
  nu.kind = geom::FlowKind::WarpedS2;
  nu.x0 = 0.0;
  nu.t0 = t0;
  nu.s = s;
  nu.density.grid = grid;
  nu.density.time = s;
  nu.density.values = solve_from_bump(tau_init, &nu.mass_drift);
  const auto wide = solve_from_bump(2.0 * tau_init, nullptr);
  double gap = 0.0;
  for (int i = 0; i < mm; ++i) {
    gap = std::max(gap, std::abs(nu.density.values[i] - wide[i]));
  }
  nu.init_error = gap;
  return nu;
}

}  // namespace

KernelMeasure conjugate_kernel(const geom::FlowFamily& flow, double x0,
                               double t0, double s, int lmax) {
  if (!(s < t0)) {
    throw std::invalid_argument(
        "conjugate_kernel: evaluation time must precede the base time");
  }
  if (s < 0.0 || t0 > flow.t_max() + 1e-12) {
    throw std::invalid_argument(
        "conjugate_kernel: times outside the flow interval");
  }
  if (lmax < 1) throw std::invalid_argument("conjugate_kernel: lmax < 1");
  const geom::FlowKind kind = flow.spec().kind;
  if (is_sphere(kind) && x0 != 0.0) {
    throw std::invalid_argument(
        "conjugate_kernel: sphere kinds are reduced about the pole; "
        "basepoint must be 0");
  }
  if (is_flat(kind)) return flat_kernel(flow, x0, t0, s);
  if (kind == geom::FlowKind::RoundSphere) {
    return round_sphere_kernel(flow, t0, s, lmax);
  }
  return warped_kernel(flow, t0, s);
}

double nu_expect(const geom::FlowFamily& flow, const KernelMeasure& nu,
                 const geom::DiscreteField& h) {
  check_same_grid(h.grid, nu.density.grid, "nu_expect");
  if (std::abs(h.time - nu.s) > 1e-9) {
    throw std::invalid_argument(
        "nu_expect: observable not sampled at the kernel time");
  }
  if (nu.kind == geom::FlowKind::WarpedS2) {
    SemigroupOperator op{&flow, nu.s, nu.t0, 0.0};
    return eval_field(apply(op, h), nu.x0);
  }
  const auto m = flow.metric_at(nu.s);
  check_same_grid(m.grid, nu.density.grid, "nu_expect");
  double acc = 0.0;
  for (std::size_t i = 0; i < h.values.size(); ++i) {
    acc += h.values[i] * nu.density.values[i] * m.quad_weight[i];
  }
  return acc;
}

double eval_field(const geom::DiscreteField& f, double x) {
  const auto& g = f.grid;
  const int m = g.node_count();
  const double h = g.spacing();
  if (m < 4) throw std::invalid_argument("eval_field: grid too small");
  double sloc;
  int base;
  bool wrap = g.topology == geom::Topology::Periodic;
  if (wrap) {
    double xr = x - g.length * std::floor(x / g.length);
    const double u = xr / h;
    const int j = static_cast<int>(std::floor(u));
    base = j - 1;
    sloc = u - static_cast<double>(base);
  } else {
    const double xc = std::clamp(x, 0.0, g.length);
    const double u = xc / h;
    int j = static_cast<int>(std::floor(u));
    base = std::clamp(j - 1, 0, m - 4);
    sloc = u - static_cast<double>(base);
  }
  auto node_val = [&](int k) {
    int idx = base + k;
    if (wrap) idx = ((idx % m) + m) % m;
    return f.values[idx];
  };
  const double s1 = sloc - 1.0, s2 = sloc - 2.0, s3 = sloc - 3.0;
  const double w0 = -s1 * s2 * s3 / 6.0;
  const double w1 = sloc * s2 * s3 / 2.0;
  const double w2 = -sloc * s1 * s3 / 2.0;
  const double w3 = sloc * s1 * s2 / 6.0;
  return w0 * node_val(0) + w1 * node_val(1) + w2 * node_val(2) +
         w3 * node_val(3);
}

void write_kernel_csv(const KernelMeasure& nu, std::ostream& out) {
  out << "coordinate,density\n";
  const auto& g = nu.density.grid;
  out.precision(17);
  for (int i = 0; i < g.node_count(); ++i) {
    out << g.node(i) << ',' << nu.density.values[i] << '\n';
  }
}

}  // namespace hkflow::heat
