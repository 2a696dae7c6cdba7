#include "hkflow/numerics.hpp"

#include <algorithm>
#include <cassert>
#include <numbers>

namespace hkflow::num {

namespace {

double simpson(const std::function<double(double)>& f, double a, double fa,
               double b, double fb, double m, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a,
                     double fa, double b, double fb, double m, double fm,
                     double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(f, a, fa, m, fm, lm, flm);
  const double right = simpson(f, m, fm, b, fb, rm, frm);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol, int max_depth) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), m = 0.5 * (a + b), fm = f(m);
  const double whole = simpson(f, a, fa, b, fb, m, fm);
  return adaptive_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights) {
  // Newton iteration on Legendre polynomials from the Chebyshev initial
  // guess; standard construction, accurate to machine precision for the
  // small orders used here.
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    weights[n - 1 - i] = weights[i];
  }
}

double integrate_panels(const std::function<double(double)>& f, double a,
                        double b, int panels, int points_per_panel) {
  std::vector<double> xs, ws;
  gauss_legendre(points_per_panel, xs, ws);
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double c = a + (p + 0.5) * h;
    double acc = 0.0;
    for (int q = 0; q < points_per_panel; ++q) {
      acc += ws[q] * f(c + 0.5 * h * xs[q]);
    }
    total += 0.5 * h * acc;
  }
  return total;
}

std::vector<double> clenshaw_curtis_weights(int n_intervals) {
  const int n = n_intervals;
  if (n < 2 || n % 2 != 0) {
    throw std::invalid_argument("clenshaw_curtis_weights: need even n >= 2");
  }
  // w_i = (2/n) * c_i * sum_{k=0..n/2} b_k/(1-4k^2) cos(2k i pi/n)
  // with endpoint halving; direct O(n^2) evaluation is fine at our sizes.
  std::vector<double> w(n + 1, 0.0);
  for (int i = 0; i <= n; ++i) {
    double acc = 0.0;
    for (int k = 0; k <= n / 2; ++k) {
      const double bk = (k == 0 || k == n / 2) ? 1.0 : 2.0;
      acc += bk / (1.0 - 4.0 * double(k) * double(k)) *
             std::cos(2.0 * k * i * std::numbers::pi / n);
    }
    const double ci = (i == 0 || i == n) ? 0.5 : 1.0;
    w[i] = 2.0 / n * ci * acc;
  }
  return w;
}

void solve_tridiagonal(std::vector<double> lower, std::vector<double> diag,
                       std::vector<double> upper, std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  assert(lower.size() == n && upper.size() == n && rhs.size() == n);
  for (std::size_t i = 1; i < n; ++i) {
    const double m = lower[i] / diag[i - 1];
    diag[i] -= m * upper[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
  }
}

void solve_cyclic_tridiagonal(const std::vector<double>& lower,
                              const std::vector<double>& diag,
                              const std::vector<double>& upper,
                              std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  assert(lower.size() == n && upper.size() == n && rhs.size() == n);
  if (n < 3) throw std::invalid_argument("solve_cyclic_tridiagonal: n < 3");
  // A = B + u v^T with u = (gamma, 0, .., alpha), v = (1, 0, .., beta/gamma),
  // alpha the row-(n-1) wrap entry, beta the row-0 wrap entry.
  const double alpha = upper[n - 1];
  const double beta = lower[0];
  const double gamma = -diag[0];
  std::vector<double> b_diag(diag);
  b_diag[0] = diag[0] - gamma;
  b_diag[n - 1] = diag[n - 1] - alpha * beta / gamma;
  std::vector<double> z(n, 0.0);
  z[0] = gamma;
  z[n - 1] = alpha;
  solve_tridiagonal(lower, b_diag, upper, rhs);
  solve_tridiagonal(lower, b_diag, upper, z);
  const double num = rhs[0] + beta * rhs[n - 1] / gamma;
  const double den = 1.0 + z[0] + beta * z[n - 1] / gamma;
  for (std::size_t i = 0; i < n; ++i) rhs[i] -= z[i] * num / den;
}

double golden_section_min(const std::function<double(double)>& f, double a,
                          double b, double tol) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

std::vector<double> nelder_mead(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> start, double step, double tol, int max_iter,
    double* fmin) {
  const std::size_t n = start.size();
  std::vector<std::vector<double>> simplex(n + 1, start);
  std::vector<double> fv(n + 1);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += step;
  for (std::size_t i = 0; i <= n; ++i) fv[i] = f(simplex[i]);

  auto order = [&] {
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t j = i + 1; j <= n; ++j) {
        if (fv[j] < fv[i]) {
          std::swap(fv[i], fv[j]);
          std::swap(simplex[i], simplex[j]);
        }
      }
    }
  };

  for (int it = 0; it < max_iter; ++it) {
    order();
    if (std::abs(fv[n] - fv[0]) < tol) break;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / n;
    }
    auto blend = [&](double coef) {
      std::vector<double> p(n);
      for (std::size_t j = 0; j < n; ++j) {
        p[j] = centroid[j] + coef * (simplex[n][j] - centroid[j]);
      }
      return p;
    };

    auto refl = blend(-1.0);
    const double fr = f(refl);
    if (fr < fv[0]) {
      auto exp_p = blend(-2.0);
      const double fe = f(exp_p);
      simplex[n] = fe < fr ? exp_p : refl;
      fv[n] = std::min(fe, fr);
    } else if (fr < fv[n - 1]) {
      simplex[n] = refl;
      fv[n] = fr;
    } else {
      auto con = blend(0.5);
      const double fc = f(con);
      if (fc < fv[n]) {
        simplex[n] = con;
        fv[n] = fc;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t j = 0; j < n; ++j) {
            simplex[i][j] = 0.5 * (simplex[i][j] + simplex[0][j]);
          }
          fv[i] = f(simplex[i]);
        }
      }
    }
  }
  order();
  if (fmin) *fmin = fv[0];
  return simplex[0];
}

double aitken(double s0, double s1, double s2) {
  const double denom = s2 - 2.0 * s1 + s0;
  if (std::abs(denom) < 1e-300) return s2;
  const double accel = s2 - (s2 - s1) * (s2 - s1) / denom;
  // Guard against wild extrapolation from a non-geometric tail.
  if (!std::isfinite(accel)) return s2;
  return accel;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double rel_gap(double x, double y, double floor) {
  return std::abs(x - y) / std::max({std::abs(x), std::abs(y), floor});
}

}  // namespace hkflow::num
