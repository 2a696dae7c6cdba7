#include "hkflow/pathspace.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "hkflow/gaussian.hpp"

namespace hkflow::path {

namespace {

constexpr int kChunk = 4096;
constexpr int kMaxSlots = 3;
constexpr int kMinStepsPerGap = 50;

std::uint64_t splitmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Seed of chunk c in the stream derived from the master seed.
std::uint64_t chunk_seed(std::uint64_t seed, std::uint64_t c) {
  return splitmix64(seed + (c + 1) * 0x9E3779B97F4A7C15ULL);
}

double wrap_into(double x, double period) {
  double u = std::fmod(x, period);
  if (u < 0.0) u += period;
  return u;
}

void validate_cylinder(const PathEnsemble& e, const CylinderFunction& F,
                       const char* where) {
  const int k = static_cast<int>(F.times.size());
  if (k < 1 || k > kMaxSlots) {
    throw std::invalid_argument(std::string(where) +
                                ": between one and three observation times");
  }
  double prev = 0.0;
  for (double t : F.times) {
    if (!(t > prev)) {
      throw std::invalid_argument(
          std::string(where) +
          ": observation times must be positive and strictly increasing");
    }
    prev = t;
  }
  if (F.times.back() > e.horizon + 1e-12) {
    throw std::invalid_argument(std::string(where) +
                                ": observation times exceed the horizon");
  }
  if (F.times.front() + 1e-12 < kMinStepsPerGap * e.dt) {
    throw std::invalid_argument(
        std::string(where) +
        ": first observation time needs at least fifty steps");
  }
  if (!F.value || !F.gradient) {
    throw std::invalid_argument(std::string(where) +
                                ": cylinder function not callable");
  }
}

std::vector<int> slot_indices(const PathEnsemble& e,
                              const CylinderFunction& F) {
  std::vector<int> idx;
  idx.reserve(F.times.size());
  for (double t : F.times) idx.push_back(e.grid_index(t));
  return idx;
}

void gather_points(const PathEnsemble& e, const std::vector<int>& idx, int p,
                   std::vector<double>& pts) {
  pts.resize(idx.size() * e.dim);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (int d = 0; d < e.dim; ++d) {
      pts[i * e.dim + d] = e.position(p, idx[i], d);
    }
  }
}

// Suffix-sum H-energy of a packed gradient: on each interval between
// consecutive observation times the parallel gradient is the sum of the
// gradients at the times not yet passed.
double suffix_energy(const CylinderFunction& F, const std::vector<double>& g,
                     int dim) {
  const int k = static_cast<int>(F.times.size());
  std::vector<double> s(dim, 0.0);
  double total = 0.0;
  for (int i = k - 1; i >= 0; --i) {
    double n2 = 0.0;
    for (int d = 0; d < dim; ++d) {
      s[d] += g[i * dim + d];
      n2 += s[d] * s[d];
    }
    const double lo = i > 0 ? F.times[i - 1] : 0.0;
    total += (F.times[i] - lo) * n2;
  }
  return total;
}

// phi-weighted composite Gauss-Legendre over [-8, 8]: nodes z_i and weights
// w_i phi(z_i), enough to integrate bounded smooth integrands against the
// standard Gaussian to full precision.
struct GaussLine {
  std::vector<double> z;
  std::vector<double> w;
};

GaussLine build_gauss_line(int panels) {
  const double gx[5] = {-0.90617984593866396, -0.53846931010568311, 0.0,
                        0.53846931010568311, 0.90617984593866396};
  const double gw[5] = {0.23692688505618911, 0.47862867049936647,
                        0.56888888888888889, 0.47862867049936647,
                        0.23692688505618911};
  GaussLine out;
  const double lo = -8.0, hi = 8.0;
  const double step = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * step;
    for (int q = 0; q < 5; ++q) {
      const double zq = mid + 0.5 * step * gx[q];
      out.z.push_back(zq);
      out.w.push_back(0.5 * step * gw[q] * gauss::phi_pdf(zq));
    }
  }
  return out;
}

// Fine line for single future increments; a coarser one keeps the doubled
// quadrature of three-slot functions affordable while staying far below
// the Monte Carlo bands.
const GaussLine& gauss_line_fine() {
  static const GaussLine line = build_gauss_line(32);
  return line;
}
const GaussLine& gauss_line_coarse() {
  static const GaussLine line = build_gauss_line(8);
  return line;
}

void require_line_ensemble(const PathEnsemble& e, const char* where) {
  if (e.dim != 1) {
    throw std::invalid_argument(std::string(where) +
                                ": one-dimensional ensembles only");
  }
}

// g(y) and g'(y) for the conditional expectation through the first slot,
// with the future increments integrated exactly. mode 0 returns the value,
// mode 1 the derivative (all slots shift with y, so the integrand of g' is
// the total derivative sum_i du_i).
double conditional_scan(const PathEnsemble& e, const CylinderFunction& F,
                        double y, int mode) {
  const int k = static_cast<int>(F.times.size());
  const auto& line = k >= 3 ? gauss_line_coarse() : gauss_line_fine();
  auto place = [&](double v) {
    return e.period > 0.0 ? wrap_into(v, e.period) : v;
  };
  std::vector<double> pts(k);
  auto eval = [&](double p2, double p3) {
    pts[0] = place(y);
    if (k >= 2) pts[1] = place(p2);
    if (k >= 3) pts[2] = place(p3);
    if (mode == 0) return F.value(pts);
    const auto g = F.gradient(pts);
    return std::accumulate(g.begin(), g.end(), 0.0);
  };
  if (k == 1) return mode == 0 ? eval(0, 0) : std::abs(eval(0, 0));
  const double s2 = std::sqrt(2.0 * (F.times[1] - F.times[0]));
  double total = 0.0;
  if (k == 2) {
    for (std::size_t i = 0; i < line.z.size(); ++i) {
      total += line.w[i] * eval(y + s2 * line.z[i], 0);
    }
  } else {
    const double s3 = std::sqrt(2.0 * (F.times[2] - F.times[1]));
    for (std::size_t i = 0; i < line.z.size(); ++i) {
      const double p2 = y + s2 * line.z[i];
      double inner = 0.0;
      for (std::size_t j = 0; j < line.z.size(); ++j) {
        inner += line.w[j] * eval(p2, p2 + s3 * line.z[j]);
      }
      total += line.w[i] * inner;
    }
  }
  return mode == 0 ? total : std::abs(total);
}

}  // namespace

int PathEnsemble::grid_index(double tau) const {
  const long long j = std::llround(tau / dt);
  if (j < 0 || j > steps ||
      std::abs(j * dt - tau) > 1e-9 * std::max(1.0, horizon)) {
    throw std::invalid_argument(
        "PathEnsemble: observation time off the path time grid");
  }
  return static_cast<int>(j);
}

PathEnsemble sample_paths(const geom::FlowFamily& flow, double x, double T,
                          double dt, int paths, std::uint64_t seed) {
  const auto& spec = flow.spec();
  if (spec.kind != geom::FlowKind::EuclideanExact &&
      spec.kind != geom::FlowKind::FlatTorus) {
    throw std::invalid_argument(
        "sample_paths: path-space restricted to static flat geometries");
  }
  if (!(T > 0.0) || !(dt > 0.0) || paths < 1) {
    throw std::invalid_argument(
        "sample_paths: duration, step, and path count must be positive");
  }
  const long long steps = std::llround(T / dt);
  if (steps < 1 || std::abs(steps * dt - T) > 1e-9 * std::max(1.0, T)) {
    throw std::invalid_argument(
        "sample_paths: duration must be a whole number of steps");
  }

  PathEnsemble e;
  e.kind = spec.kind;
  e.dim = spec.kind == geom::FlowKind::EuclideanExact ? spec.dim : 1;
  e.horizon = T;
  e.dt = dt;
  e.steps = static_cast<int>(steps);
  e.paths = paths;
  e.seed = seed;
  e.algorithm = "euler-maruyama/splitmix64-chunks/mt19937_64/v1";
  e.period = spec.kind == geom::FlowKind::FlatTorus ? spec.periods.at(0) : 0.0;
  e.x = e.period > 0.0 ? wrap_into(x, e.period) : x;
  e.pos.assign(static_cast<std::size_t>(paths) * (steps + 1) * e.dim, 0.0);

  const double step_sd = std::sqrt(2.0 * dt);
  const int chunks = (paths + kChunk - 1) / kChunk;
  for (int c = 0; c < chunks; ++c) {
    std::mt19937_64 rng(chunk_seed(seed, static_cast<std::uint64_t>(c)));
    std::normal_distribution<double> normal(0.0, 1.0);
    const int lo = c * kChunk;
    const int hi = std::min(paths, lo + kChunk);
    for (int p = lo; p < hi; ++p) {
      double* row = e.pos.data() +
                    static_cast<std::size_t>(p) * (steps + 1) * e.dim;
      row[0] = e.x;
      for (int d = 1; d < e.dim; ++d) row[d] = 0.0;
      for (long long j = 0; j < steps; ++j) {
        for (int d = 0; d < e.dim; ++d) {
          double next = row[j * e.dim + d] + step_sd * normal(rng);
          if (e.period > 0.0) next = wrap_into(next, e.period);
          row[(j + 1) * e.dim + d] = next;
        }
      }
    }
  }
  return e;
}

double h_gradient_sq(const PathEnsemble& e, const CylinderFunction& F,
                     int p) {
  validate_cylinder(e, F, "h_gradient_sq");
  if (p < 0 || p >= e.paths) {
    throw std::invalid_argument("h_gradient_sq: path index out of range");
  }
  const auto idx = slot_indices(e, F);
  std::vector<double> pts;
  gather_points(e, idx, p, pts);
  return suffix_energy(F, F.gradient(pts), e.dim);
}

PathBobkovReport pathspace_bobkov_check(const PathEnsemble& e,
                                        const CylinderFunction& F) {
  validate_cylinder(e, F, "pathspace_bobkov_check");
  const auto idx = slot_indices(e, F);
  const int m = e.paths;
  double sum_f = 0.0, sum_f2 = 0.0, sum_a = 0.0, sum_a2 = 0.0;
  std::vector<double> pts;
  for (int p = 0; p < m; ++p) {
    gather_points(e, idx, p, pts);
    double f = F.value(pts);
    if (f < -1e-9 || f > 1.0 + 1e-9) {
      throw std::invalid_argument(
          "pathspace_bobkov_check: F must take values in [0, 1]");
    }
    f = std::clamp(f, 0.0, 1.0);
    const double prof = gauss::profile(f);
    const double a =
        std::sqrt(prof * prof + 2.0 * suffix_energy(F, F.gradient(pts), e.dim));
    sum_f += f;
    sum_f2 += f * f;
    sum_a += a;
    sum_a2 += a * a;
  }
  const double mean_f = sum_f / m;
  const double var_f = std::max(0.0, sum_f2 / m - mean_f * mean_f);
  const double var_a =
      std::max(0.0, sum_a2 / m - (sum_a / m) * (sum_a / m));

  PathBobkovReport rep;
  rep.rhs = sum_a / m;
  rep.lhs = gauss::profile(std::clamp(mean_f, 0.0, 1.0));
  double slope = 0.0;
  if (mean_f > 0.0 && mean_f < 1.0) {
    slope = std::abs(gauss::phi_quantile(mean_f));
  }
  rep.band = 3.0 * (std::sqrt(var_a / m) + slope * std::sqrt(var_f / m));
  rep.margin = rep.rhs - rep.lhs;
  return rep;
}

double conditional_mean(const PathEnsemble& e, const CylinderFunction& F,
                        double y) {
  validate_cylinder(e, F, "conditional_mean");
  require_line_ensemble(e, "conditional_mean");
  return conditional_scan(e, F, y, 0);
}

double conditional_grad(const PathEnsemble& e, const CylinderFunction& F,
                        double y) {
  validate_cylinder(e, F, "conditional_grad");
  require_line_ensemble(e, "conditional_grad");
  return conditional_scan(e, F, y, 1);
}

FirstStepReport first_step_gradient_check(const PathEnsemble& e,
                                          const CylinderFunction& F,
                                          int bins, int max_samples) {
  validate_cylinder(e, F, "first_step_gradient_check");
  require_line_ensemble(e, "first_step_gradient_check");
  if (F.times.size() < 2) {
    throw std::invalid_argument(
        "first_step_gradient_check: needs at least two observation times");
  }
  if (max_samples < 1) {
    throw std::invalid_argument(
        "first_step_gradient_check: max_samples must be positive");
  }
  const int stride = (e.paths + max_samples - 1) / max_samples;
  const int m = (e.paths + stride - 1) / stride;
  if (bins < 2 || m / bins < 100) {
    throw std::invalid_argument(
        "first_step_gradient_check: insufficient samples per bin");
  }
  const auto idx = slot_indices(e, F);
  std::vector<double> y(m), par(m), cond(m);
  std::vector<double> pts;
  for (int i = 0; i < m; ++i) {
    gather_points(e, idx, i * stride, pts);
    y[i] = pts[0];
    const auto g = F.gradient(pts);
    par[i] = std::abs(std::accumulate(g.begin(), g.end(), 0.0));
    cond[i] = conditional_scan(e, F, y[i], 1);
  }
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return y[a] < y[b]; });

  FirstStepReport rep;
  rep.margin = std::numeric_limits<double>::infinity();
  for (int b = 0; b < bins; ++b) {
    const int lo = static_cast<int>(static_cast<long long>(m) * b / bins);
    const int hi =
        static_cast<int>(static_cast<long long>(m) * (b + 1) / bins);
    const int count = hi - lo;
    double sy = 0.0, sp = 0.0, sc = 0.0, sd2 = 0.0;
    for (int i = lo; i < hi; ++i) {
      const int j = order[i];
      sy += y[j];
      sp += par[j];
      sc += cond[j];
      sd2 += (par[j] - cond[j]) * (par[j] - cond[j]);
    }
    FirstStepBin row;
    row.center = sy / count;
    row.rhs = sp / count;
    row.lhs = sc / count;
    const double mean_d = row.rhs - row.lhs;
    const double var_d = std::max(0.0, sd2 / count - mean_d * mean_d);
    row.band = 3.0 * std::sqrt(var_d / count);
    rep.margin = std::min(rep.margin, mean_d + row.band);
    rep.bins.push_back(row);
  }
  return rep;
}

PathPerimeterReport pathspace_perimeter_check(const PathEnsemble& e,
                                              const CylinderFunction& v,
                                              double level) {
  validate_cylinder(e, v, "pathspace_perimeter_check");
  const auto idx = slot_indices(e, v);
  const int m = e.paths;
  std::vector<double> vv(m), henergy(m);
  std::vector<double> pts;
  int inside = 0;
  for (int p = 0; p < m; ++p) {
    gather_points(e, idx, p, pts);
    vv[p] = v.value(pts);
    henergy[p] = suffix_energy(v, v.gradient(pts), e.dim);
    if (vv[p] < level) ++inside;
  }

  PathPerimeterReport rep;
  rep.mass = static_cast<double>(inside) / m;
  const double w0 = std::sqrt(2.0 * e.dt);
  double sd_fine = 0.0;
  for (double k : {4.0, 2.0, 1.0}) {
    const double w = k * w0;
    double sum = 0.0, sum2 = 0.0;
    for (int p = 0; p < m; ++p) {
      const double g =
          gauss::phi_pdf((level - vv[p]) / w) / w * std::sqrt(henergy[p]);
      sum += g;
      sum2 += g * g;
    }
    const double mean = sum / m;
    rep.width.push_back(w);
    rep.value.push_back(mean);
    sd_fine = std::sqrt(std::max(0.0, sum2 / m - mean * mean) / m);
  }
  // Mollification deficit is O(w^2): eliminate it from the two finest
  // widths; the coarsest value only documents the convergence trend.
  rep.extrapolated = rep.value[2] + (rep.value[2] - rep.value[1]) / 3.0;
  rep.liminf = std::min(rep.value[2], rep.extrapolated);
  rep.bound = gauss::profile(std::clamp(rep.mass, 0.0, 1.0)) / std::sqrt(2.0);
  double slope = 0.0;
  if (rep.mass > 0.0 && rep.mass < 1.0) {
    slope = std::abs(gauss::phi_quantile(rep.mass));
  }
  const double se_mass = std::sqrt(rep.mass * (1.0 - rep.mass) / m);
  rep.band = 3.0 * (sd_fine + slope * se_mass / std::sqrt(2.0));
  return rep;
}

void write_ensemble_json(const PathEnsemble& e, std::ostream& out) {
  nlohmann::json doc;
  doc["version"] = 1;
  doc["kind"] = e.kind == geom::FlowKind::EuclideanExact ? "euclidean_exact"
                                                         : "flat_torus";
  doc["dim"] = e.dim;
  doc["x"] = e.x;
  doc["horizon"] = e.horizon;
  doc["dt"] = e.dt;
  doc["steps"] = e.steps;
  doc["paths"] = e.paths;
  doc["seed"] = e.seed;
  doc["algorithm"] = e.algorithm;
  if (e.period > 0.0) doc["period"] = e.period;
  auto moments = nlohmann::json::array();
  for (int d = 0; d < e.dim; ++d) {
    double s1 = 0.0, s2 = 0.0;
    for (int p = 0; p < e.paths; ++p) {
      const double xp = e.position(p, e.steps, d);
      s1 += xp;
      s2 += xp * xp;
    }
    const double mean = s1 / e.paths;
    moments.push_back({{"mean", mean},
                       {"second_central",
                        std::max(0.0, s2 / e.paths - mean * mean)}});
  }
  doc["final_moments"] = moments;
  out << doc.dump(2) << "\n";
}

}  // namespace hkflow::path
