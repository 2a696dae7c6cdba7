#include "hkflow/isoperimetry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

#include "hkflow/gaussian.hpp"
#include "hkflow/numerics.hpp"

namespace hkflow::iso {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;

// Boundary components beyond this are treated as an irregular description
// and routed through the relaxation instead of per-point atoms.
constexpr int kBoundaryLimit = 32;

bool is_sphere(geom::FlowKind k) {
  return k == geom::FlowKind::RoundSphere || k == geom::FlowKind::WarpedS2;
}

// Canonical region: disjoint sorted coordinate intervals in [0, domain].
// On the torus 0 and domain are the same point; elsewhere they are domain
// edges, not set boundary.
struct Region {
  std::vector<std::pair<double, double>> pieces;
  double domain = 0.0;
  bool periodic = false;
};

void canonicalize(Region& r) {
  for (auto& p : r.pieces) {
    p.first = std::clamp(p.first, 0.0, r.domain);
    p.second = std::clamp(p.second, 0.0, r.domain);
  }
  std::erase_if(r.pieces,
                [](const auto& p) { return !(p.second > p.first); });
  std::sort(r.pieces.begin(), r.pieces.end());
  const double weld = 1e-12 * r.domain;
  std::vector<std::pair<double, double>> merged;
  for (const auto& p : r.pieces) {
    if (!merged.empty() && p.first <= merged.back().second + weld) {
      merged.back().second = std::max(merged.back().second, p.second);
    } else {
      merged.push_back(p);
    }
  }
  r.pieces = std::move(merged);
}

double region_length(const Region& r) {
  double len = 0.0;
  for (const auto& p : r.pieces) len += p.second - p.first;
  return len;
}

bool region_full(const Region& r) {
  return region_length(r) >= r.domain * (1.0 - 1e-12);
}

bool region_contains(const Region& r, double x) {
  const double eps = 1e-12 * r.domain;
  for (const auto& p : r.pieces) {
    if (x >= p.first - eps && x <= p.second + eps) return true;
  }
  return false;
}

Region build_region(const WeightedSet& set, const geom::MetricSample& m) {
  Region r;
  r.domain = m.grid.length;
  r.periodic = m.kind == geom::FlowKind::FlatTorus;
  switch (set.kind) {
    case SetKind::Empty:
      break;
    case SetKind::Full:
      r.pieces.push_back({0.0, r.domain});
      break;
    case SetKind::Interval: {
      if (set.lo <= set.hi) {
        r.pieces.push_back({set.lo, set.hi});
      } else if (r.periodic) {
        r.pieces.push_back({0.0, set.hi});
        r.pieces.push_back({set.lo, r.domain});
      } else {
        throw std::invalid_argument(
            "interval_set: a wrapped interval needs the torus");
      }
      break;
    }
    case SetKind::Cap: {
      if (!is_sphere(m.kind)) {
        throw std::invalid_argument("cap_set: sphere kinds only");
      }
      if (set.angle > 0.0) r.pieces.push_back({0.0, set.angle});
      break;
    }
    case SetKind::SubLevel: {
      const auto& f = set.level_field;
      if (f.grid.node_count() != m.grid.node_count() ||
          f.grid.topology != m.grid.topology) {
        throw std::invalid_argument(
            "sub_level_set: field grid does not match the flow grid");
      }
      const int cells = m.grid.n;
      const double h = m.grid.spacing();
      const bool wrap = m.grid.topology == geom::Topology::Periodic;
      auto value = [&](int i) {
        return f.values[wrap ? i % cells : i] - set.level;
      };
      std::vector<double> cross;
      for (int i = 0; i < cells; ++i) {
        const double a = value(i);
        const double b = value(i + 1);
        if ((a < 0.0) != (b < 0.0)) {
          cross.push_back((i + a / (a - b)) * h);
        }
      }
      bool in = value(0) < 0.0;
      double start = 0.0;
      for (double c : cross) {
        if (in) {
          r.pieces.push_back({start, c});
          in = false;
        } else {
          start = c;
          in = true;
        }
      }
      if (in) r.pieces.push_back({start, r.domain});
      break;
    }
    case SetKind::Union:
      r.pieces = set.pieces;
      break;
  }
  canonicalize(r);
  return r;
}

// Pieces glued across the torus seam into arcs (start, end) with end
// allowed past the domain. Identity elsewhere.
std::vector<std::pair<double, double>> arcs_of(const Region& r) {
  auto a = r.pieces;
  const double weld = 1e-12 * r.domain;
  if (r.periodic && a.size() >= 2 && a.front().first <= weld &&
      a.back().second >= r.domain - weld) {
    a.back().second = a.front().second + r.domain;
    a.erase(a.begin());
  }
  return a;
}

// Boundary atoms. Domain edges only count on the torus, where they are
// interior points of the circle; a full or empty region has no boundary.
std::vector<double> boundary_points(const Region& r) {
  std::vector<double> b;
  if (r.pieces.empty() || region_full(r)) return b;
  if (r.periodic) {
    for (const auto& arc : arcs_of(r)) {
      b.push_back(std::fmod(arc.first, r.domain));
      b.push_back(std::fmod(arc.second, r.domain));
    }
    return b;
  }
  const double weld = 1e-12 * std::max(r.domain, 1.0);
  for (const auto& p : r.pieces) {
    if (p.first > weld) b.push_back(p.first);
    if (p.second < r.domain - weld) b.push_back(p.second);
  }
  return b;
}

void check_times(const heat::KernelMeasure& nu, const WeightedSet& set,
                 const char* where) {
  if (std::abs(set.time - nu.s) > 1e-9 * std::max(1.0, std::abs(nu.s))) {
    throw std::invalid_argument(std::string(where) +
                                ": set time differs from the measure time");
  }
}

// Kernel density as a function of the coordinate: closed forms on the flat
// kinds, cubic interpolation of the stored nodal density on spheres.
std::function<double(double)> density_eval(const heat::KernelMeasure& nu) {
  const double tau = heat::time_gap(nu);
  const double x0 = nu.x0;
  switch (nu.kind) {
    case geom::FlowKind::EuclideanExact:
      return [=](double x) { return heat::gauss_heat_density(x, x0, tau); };
    case geom::FlowKind::FlatTorus: {
      const double period = nu.density.grid.length;
      return [=](double x) {
        return heat::wrapped_gauss_density(x, x0, tau, period);
      };
    }
    default:
      return [&nu](double x) { return heat::eval_field(nu.density, x); };
  }
}

// Volume element per unit coordinate: 1 on flat kinds, the parallel-circle
// area density 2 pi a(theta) sin(theta) on spheres.
std::function<double(double)> area_eval(const geom::MetricSample& m) {
  if (!is_sphere(m.kind)) {
    return [](double) { return 1.0; };
  }
  return [&m](double th) {
    return 2.0 * kPi * geom::conformal_at(m, th) * std::sin(th);
  };
}

// Boundary measure of the level set through x: a point atom on flat kinds,
// the parallel-circle length 2 pi sqrt(a) sin(theta) on spheres.
double boundary_weight(const geom::MetricSample& m, double x) {
  if (!is_sphere(m.kind)) return 1.0;
  return 2.0 * kPi * std::sqrt(geom::conformal_at(m, x)) * std::sin(x);
}

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

// Gauss-Legendre panels aligned to grid cells between exact region
// endpoints; `breaks` adds split points (integrand kinks) inside pieces.
double integrate_region(const Region& r, const geom::MetricSample& m,
                        const std::function<double(double)>& f,
                        const std::vector<double>& breaks = {}) {
  const auto& xi = gl5_nodes();
  const auto& wi = gl5_weights();
  const double h = m.grid.spacing();
  double total = 0.0;
  for (const auto& p : r.pieces) {
    std::vector<double> cuts{p.first, p.second};
    const double tiny = 1e-13 * h;
    const int k0 = static_cast<int>(std::floor(p.first / h)) + 1;
    const int k1 = static_cast<int>(std::ceil(p.second / h)) - 1;
    for (int k = k0; k <= k1; ++k) {
      const double x = k * h;
      if (x > p.first + tiny && x < p.second - tiny) cuts.push_back(x);
    }
    for (double b : breaks) {
      if (b > p.first + tiny && b < p.second - tiny) cuts.push_back(b);
    }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const double half = 0.5 * (cuts[k + 1] - cuts[k]);
      if (!(half > 0.0)) continue;
      const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
      double acc = 0.0;
      for (std::size_t j = 0; j < xi.size(); ++j) {
        acc += wi[j] * f(mid + half * xi[j]);
      }
      total += acc * half;
    }
  }
  return total;
}

double measure_of_region(const geom::FlowFamily& flow,
                         const heat::KernelMeasure& nu, const Region& r) {
  if (r.pieces.empty()) return 0.0;
  const auto m = flow.metric_at(nu.s);
  const auto dens = density_eval(nu);
  const auto area = area_eval(m);
  return integrate_region(r, m,
                          [&](double x) { return dens(x) * area(x); });
}

// Advance x by metric arc length r toward dir = +/-1, staying inside the
// domain. Flat kinds are unit-speed in the coordinate; the round sphere is
// a constant rescale; the warped meridian inverts the arc length by
// monotone bisection.
double advance(const geom::MetricSample& m, double x, double r, int dir) {
  if (!is_sphere(m.kind)) return x + dir * r;
  if (m.kind == geom::FlowKind::RoundSphere) {
    return std::clamp(x + dir * r / std::sqrt(m.a_coef[0]), 0.0, kPi);
  }
  const double end = dir > 0 ? kPi : 0.0;
  if (geom::distance(m, x, end) <= r) return end;
  double lo = x;
  double hi = end;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (geom::distance(m, x, mid) < r) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

RelaxationSchedule relax_region(const geom::FlowFamily& flow,
                                const heat::KernelMeasure& nu,
                                const Region& region) {
  const auto m = flow.metric_at(nu.s);
  RelaxationSchedule sch;
  const auto bpts = boundary_points(region);
  const int nn = m.grid.node_count();
  std::vector<double> d(nn, kInf);
  for (int i = 0; i < nn; ++i) {
    const double x = m.grid.node(i);
    for (double b : bpts) {
      d[i] = std::min(d[i], geom::distance(m, x, b));
    }
    if (!region_contains(region, x)) d[i] = -d[i];
  }
  double a_max = 0.0;
  for (double a : m.a_coef) a_max = std::max(a_max, a);
  const double hm = m.grid.spacing() * std::sqrt(a_max);
  for (double k : {4.0, 2.0, 1.0}) {
    const double w = k * hm;
    double val = 0.0;
    for (int i = 0; i < nn; ++i) {
      if (!std::isfinite(d[i])) continue;
      val += m.quad_weight[i] * nu.density.values[i] *
             gauss::phi_pdf(d[i] / w) / w;
    }
    sch.width.push_back(w);
    sch.value.push_back(val);
  }
  // O(w^2) mollification error: Richardson over the two coarser widths,
  // where the grid still resolves the mollifier.
  sch.extrapolated = sch.value[1] + (sch.value[1] - sch.value[0]) / 3.0;
  sch.liminf = std::min({sch.value[0], sch.value[1], sch.value[2],
                         sch.extrapolated});
  return sch;
}

double perimeter_of_region(const geom::FlowFamily& flow,
                           const heat::KernelMeasure& nu,
                           const Region& region) {
  const auto m = flow.metric_at(nu.s);
  const auto bpts = boundary_points(region);
  if (static_cast<int>(bpts.size()) > kBoundaryLimit) {
    std::cerr << "weighted_perimeter: " << bpts.size()
              << " boundary components; using the relaxation liminf\n";
    return relax_region(flow, nu, region).liminf;
  }
  const auto dens = density_eval(nu);
  double per = 0.0;
  for (double b : bpts) per += dens(b) * boundary_weight(m, b);
  return per;
}

double clamp01(double a) { return std::clamp(a, 0.0, 1.0); }

}  // namespace

WeightedSet empty_set(double s) {
  WeightedSet w;
  w.kind = SetKind::Empty;
  w.time = s;
  return w;
}

WeightedSet full_set(double s) {
  WeightedSet w;
  w.kind = SetKind::Full;
  w.time = s;
  return w;
}

WeightedSet interval_set(double lo, double hi, double s) {
  WeightedSet w;
  w.kind = SetKind::Interval;
  w.time = s;
  w.lo = lo;
  w.hi = hi;
  return w;
}

WeightedSet lower_set(double c, double s) { return interval_set(-kInf, c, s); }

WeightedSet upper_set(double c, double s) { return interval_set(c, kInf, s); }

WeightedSet cap_set(double angle, double s) {
  WeightedSet w;
  w.kind = SetKind::Cap;
  w.time = s;
  w.angle = angle;
  return w;
}

WeightedSet sub_level_set(const geom::DiscreteField& h, double level) {
  WeightedSet w;
  w.kind = SetKind::SubLevel;
  w.time = h.time;
  w.level_field = h;
  w.level = level;
  return w;
}

std::vector<std::pair<double, double>> region_pieces(
    const WeightedSet& set, const geom::MetricSample& m) {
  return build_region(set, m).pieces;
}

double nu_measure(const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
                  const WeightedSet& set) {
  check_times(nu, set, "nu_measure");
  const auto m = flow.metric_at(nu.s);
  return measure_of_region(flow, nu, build_region(set, m));
}

double nu_integral(const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
                   const std::function<double(double)>& g,
                   const std::vector<double>& breaks) {
  const auto m = flow.metric_at(nu.s);
  const auto dens = density_eval(nu);
  const auto area = area_eval(m);
  const Region whole = build_region(full_set(nu.s), m);
  return integrate_region(
      whole, m, [&](double x) { return g(x) * dens(x) * area(x); }, breaks);
}

double nu_integral(const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
                   const std::function<double(double)>& g,
                   const WeightedSet& set, const std::vector<double>& breaks) {
  check_times(nu, set, "nu_integral");
  const auto m = flow.metric_at(nu.s);
  const auto dens = density_eval(nu);
  const auto area = area_eval(m);
  return integrate_region(
      build_region(set, m), m,
      [&](double x) { return g(x) * dens(x) * area(x); }, breaks);
}

double set_volume(const geom::FlowFamily& flow, const WeightedSet& set) {
  const auto m = flow.metric_at(set.time);
  const auto area = area_eval(m);
  return integrate_region(build_region(set, m), m, area);
}

double weighted_perimeter(const geom::FlowFamily& flow,
                          const heat::KernelMeasure& nu,
                          const WeightedSet& set) {
  check_times(nu, set, "weighted_perimeter");
  const auto m = flow.metric_at(nu.s);
  return perimeter_of_region(flow, nu, build_region(set, m));
}

RelaxationSchedule relaxed_perimeter(const geom::FlowFamily& flow,
                                     const heat::KernelMeasure& nu,
                                     const WeightedSet& set) {
  check_times(nu, set, "relaxed_perimeter");
  const auto m = flow.metric_at(nu.s);
  return relax_region(flow, nu, build_region(set, m));
}

ProfileReport profile_check(const geom::FlowFamily& flow,
                            const heat::KernelMeasure& nu,
                            const WeightedSet& set) {
  ProfileReport rep;
  rep.mass = nu_measure(flow, nu, set);
  rep.perimeter = weighted_perimeter(flow, nu, set);
  const double tau = heat::time_gap(nu);
  rep.bound = gauss::profile(clamp01(rep.mass)) / std::sqrt(2.0 * tau);
  rep.margin = rep.perimeter - rep.bound;
  return rep;
}

WeightedSet enlarge(const geom::FlowFamily& flow, const WeightedSet& set,
                    double r) {
  if (!(r >= 0.0)) throw std::invalid_argument("enlarge: negative radius");
  const auto m = flow.metric_at(set.time);
  Region region = build_region(set, m);
  if (region.pieces.empty()) return empty_set(set.time);
  if (r == 0.0 || region_full(region)) {
    WeightedSet out;
    out.kind = region_full(region) ? SetKind::Full : SetKind::Union;
    out.time = set.time;
    out.pieces = region.pieces;
    return out;
  }
  Region grown;
  grown.domain = region.domain;
  grown.periodic = region.periodic;
  for (const auto& arc : arcs_of(region)) {
    double lo = advance(m, std::min(arc.first, region.domain), r, -1);
    double hi = arc.second;
    if (region.periodic) {
      // Arcs may extend past the seam; grow in unwrapped coordinates, then
      // re-wrap, declaring the set full once it covers the circle.
      lo = arc.first - r;
      hi = arc.second + r;
      if (hi - lo >= region.domain) return full_set(set.time);
      double s = std::fmod(lo, region.domain);
      if (s < 0.0) s += region.domain;
      const double e = s + (hi - lo);
      if (e <= region.domain) {
        grown.pieces.push_back({s, e});
      } else {
        grown.pieces.push_back({s, region.domain});
        grown.pieces.push_back({0.0, e - region.domain});
      }
      continue;
    }
    hi = advance(m, hi, r, +1);
    grown.pieces.push_back({lo, hi});
  }
  canonicalize(grown);
  if (region_full(grown)) return full_set(set.time);
  WeightedSet out;
  out.kind = SetKind::Union;
  out.time = set.time;
  out.pieces = grown.pieces;
  return out;
}

std::vector<EnlargementRow> enlargement_check(
    const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
    const WeightedSet& set, const std::vector<double>& radii) {
  const double tau = heat::time_gap(nu);
  const double root = std::sqrt(2.0 * tau);
  const double base = nu_measure(flow, nu, set);
  const double base_q = gauss::phi_quantile(clamp01(base));
  std::vector<EnlargementRow> rows;
  rows.reserve(radii.size());
  for (double r : radii) {
    EnlargementRow row;
    row.r = r;
    const WeightedSet grown = enlarge(flow, set, r);
    row.mass = nu_measure(flow, nu, grown);
    row.bound = gauss::phi_cdf(base_q + r / root);
    row.margin = row.mass - row.bound;
    row.drift = gauss::phi_quantile(clamp01(row.mass)) - r / root;
    rows.push_back(row);
  }
  return rows;
}

double set_distance(const geom::FlowFamily& flow, const WeightedSet& a,
                    const WeightedSet& b) {
  if (std::abs(a.time - b.time) > 1e-9 * std::max(1.0, std::abs(a.time))) {
    throw std::invalid_argument("set_distance: sets live at different times");
  }
  const auto m = flow.metric_at(a.time);
  const Region ra = build_region(a, m);
  const Region rb = build_region(b, m);
  if (ra.pieces.empty() || rb.pieces.empty()) return kInf;
  const double weld = 1e-12 * m.grid.length;
  for (const auto& pa : ra.pieces) {
    for (const auto& pb : rb.pieces) {
      if (pa.first <= pb.second + weld && pb.first <= pa.second + weld) {
        return 0.0;
      }
    }
  }
  const auto ba = boundary_points(ra);
  const auto bb = boundary_points(rb);
  double d = kInf;
  for (double x : ba) {
    for (double y : bb) {
      d = std::min(d, geom::distance(m, x, y));
    }
  }
  return d;
}

TwoSetReport two_set_check(const geom::FlowFamily& flow,
                           const heat::KernelMeasure& nu,
                           const WeightedSet& a, const WeightedSet& b) {
  TwoSetReport rep;
  rep.dist = set_distance(flow, a, b);
  if (rep.dist == 0.0) {
    throw std::domain_error("two_set_check: sets touch");
  }
  rep.mass_a = clamp01(nu_measure(flow, nu, a));
  rep.mass_b = clamp01(nu_measure(flow, nu, b));
  const double tau = heat::time_gap(nu);
  const double root = std::sqrt(2.0 * tau);
  rep.quantile_lhs =
      gauss::phi_quantile(rep.mass_a) + gauss::phi_quantile(rep.mass_b);
  rep.quantile_rhs = -rep.dist / root;
  rep.product = rep.mass_a * rep.mass_b;
  const double half = gauss::phi_cdf(-rep.dist / (2.0 * root));
  rep.product_bound = half * half;
  rep.product_exp_bound = std::exp(-rep.dist * rep.dist / (8.0 * tau));
  rep.quantile_ok = !(rep.quantile_lhs > rep.quantile_rhs + 1e-9);
  rep.product_ok = rep.product <= rep.product_bound + 1e-12;
  return rep;
}

OneSidedReport one_sided_check(const geom::FlowFamily& flow,
                               const heat::KernelMeasure& nu,
                               const WeightedSet& a, const WeightedSet& b,
                               double beta) {
  OneSidedReport rep;
  rep.dist = set_distance(flow, a, b);
  if (rep.dist == 0.0) {
    throw std::domain_error("one_sided_check: sets touch");
  }
  rep.mass_a = clamp01(nu_measure(flow, nu, a));
  rep.mass_b = clamp01(nu_measure(flow, nu, b));
  if (!(beta > 0.0) || beta > rep.mass_b + 1e-9) {
    throw std::invalid_argument("one_sided_check: need 0 < beta <= nu(B)");
  }
  rep.beta = beta;
  const double root = std::sqrt(2.0 * heat::time_gap(nu));
  rep.bound =
      1.0 - gauss::phi_cdf(gauss::phi_quantile(beta) + rep.dist / root);
  rep.margin = rep.bound - rep.mass_a;
  return rep;
}

QuantileRecord quantile_of(const geom::FlowFamily& flow,
                           const heat::KernelMeasure& nu,
                           const geom::DiscreteField& F, double a) {
  if (!(a > 0.0 && a < 1.0)) {
    throw std::domain_error("quantile_of: level must lie in (0,1)");
  }
  const auto [mn_it, mx_it] =
      std::minmax_element(F.values.begin(), F.values.end());
  const double scale = std::max({1.0, std::abs(*mn_it), std::abs(*mx_it)});
  double lo = *mn_it - 1e-9 * scale;
  double hi = *mx_it + 1e-9 * scale;
  const auto mass_below = [&](double r) {
    return nu_measure(flow, nu, sub_level_set(F, r));
  };
  for (int it = 0; it < 120 && hi - lo > 1e-14 * scale; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mass_below(mid) >= a) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return QuantileRecord{a, hi};
}

LipschitzReport lipschitz_quantile_check(
    const geom::FlowFamily& flow, const heat::KernelMeasure& nu,
    const geom::DiscreteField& F, double lip,
    const std::vector<std::pair<double, double>>& level_pairs,
    const std::vector<double>& tail_radii, double exp_lambda) {
  if (!(lip >= 0.0)) {
    throw std::invalid_argument("lipschitz_quantile_check: negative constant");
  }
  const auto m = flow.metric_at(nu.s);
  if (F.grid.node_count() != m.grid.node_count() ||
      F.grid.topology != m.grid.topology) {
    throw std::invalid_argument(
        "lipschitz_quantile_check: field grid does not match the flow grid");
  }
  double scale = 0.0;
  for (double v : F.values) scale = std::max(scale, std::abs(v));
  const int cells = m.grid.n;
  const double h = m.grid.spacing();
  const bool wrap = m.grid.topology == geom::Topology::Periodic;
  for (int i = 0; i < cells; ++i) {
    if (m.kind == geom::FlowKind::EuclideanExact && i == cells - 1) {
      continue;  // the window's wrap cell is a surrogate artifact
    }
    const int j = wrap ? (i + 1) % cells : i + 1;
    const double len =
        h * 0.5 * (std::sqrt(m.a_coef[i]) + std::sqrt(m.a_coef[j]));
    const double df = std::abs(F.values[j] - F.values[i]);
    if (df > lip * len * (1.0 + 1e-9) + 1e-12 * std::max(scale, 1.0)) {
      throw std::invalid_argument(
          "lipschitz_quantile_check: cell " + std::to_string(i) +
          " exceeds the stated Lipschitz constant");
    }
  }
  LipschitzReport rep;
  rep.lip = lip;
  const double tau = heat::time_gap(nu);
  const double root = std::sqrt(2.0 * tau);
  rep.median = quantile_of(flow, nu, F, 0.5).value;
  for (const auto& [a, b] : level_pairs) {
    QuantilePairRow row;
    row.a = a;
    row.b = b;
    row.qa = quantile_of(flow, nu, F, a).value;
    row.qb = quantile_of(flow, nu, F, b).value;
    row.gap = row.qb - row.qa;
    row.bound =
        lip * root * (gauss::phi_quantile(b) - gauss::phi_quantile(a));
    row.margin = row.bound - row.gap;
    rep.pairs.push_back(row);
  }
  const auto mass_below = [&](double r) {
    return nu_measure(flow, nu, sub_level_set(F, r));
  };
  for (double r : tail_radii) {
    TailRow row;
    row.r = r;
    row.mass =
        clamp01(1.0 - mass_below(rep.median + r)) +
        clamp01(mass_below(rep.median - r));
    const double arg =
        lip > 0.0 ? r / (lip * root) : (r > 0.0 ? kInf : 0.0);
    row.bound = 2.0 * (1.0 - gauss::phi_cdf(arg));
    row.margin = row.bound - row.mass;
    rep.tails.push_back(row);
  }
  rep.exp_lambda = exp_lambda;
  {
    // Split the integration at median crossings: the integrand has a kink
    // where F passes the median.
    std::vector<double> breaks;
    const bool per = wrap;
    auto value = [&](int i) {
      return F.values[per ? i % cells : i] - rep.median;
    };
    for (int i = 0; i < cells; ++i) {
      const double a = value(i);
      const double b = value(i + 1);
      if ((a < 0.0) != (b < 0.0)) breaks.push_back((i + a / (a - b)) * h);
    }
    Region whole;
    whole.domain = m.grid.length;
    whole.periodic = per && m.kind == geom::FlowKind::FlatTorus;
    whole.pieces.push_back({0.0, whole.domain});
    const auto dens = density_eval(nu);
    const auto area = area_eval(m);
    rep.exp_value = integrate_region(
        whole, m,
        [&](double x) {
          const double fx = heat::eval_field(F, x);
          return std::exp(exp_lambda * std::abs(fx - rep.median)) * dens(x) *
                 area(x);
        },
        breaks);
  }
  rep.exp_bound = 2.0 * std::exp(tau * lip * lip * exp_lambda * exp_lambda) *
                  gauss::phi_cdf(exp_lambda * lip * root);
  rep.exp_margin = rep.exp_bound - rep.exp_value;
  return rep;
}

CheegerReport cheeger_constant(const geom::FlowFamily& flow,
                               const heat::KernelMeasure& nu,
                               const std::vector<WeightedSet>& candidates) {
  if (candidates.empty()) {
    throw std::invalid_argument("cheeger_constant: no candidates");
  }
  CheegerReport rep;
  rep.bound = 1.0 / std::sqrt(kPi * heat::time_gap(nu));
  rep.best = kInf;
  for (const auto& set : candidates) {
    CheegerRow row;
    row.mass = nu_measure(flow, nu, set);
    if (row.mass <= 1e-12 || row.mass >= 1.0 - 1e-12) {
      throw std::invalid_argument(
          "cheeger_constant: candidate measure is degenerate");
    }
    row.perimeter = weighted_perimeter(flow, nu, set);
    row.ratio = row.perimeter / std::min(row.mass, 1.0 - row.mass);
    rep.best = std::min(rep.best, row.ratio);
    rep.rows.push_back(row);
  }
  return rep;
}

void write_enlargement_csv(const std::vector<EnlargementRow>& rows,
                           std::ostream& out) {
  out << "r,mass,bound,margin,drift\n";
  out.precision(17);
  for (const auto& row : rows) {
    out << row.r << ',' << row.mass << ',' << row.bound << ',' << row.margin
        << ',' << row.drift << '\n';
  }
}

}  // namespace hkflow::iso
