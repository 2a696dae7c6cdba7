#pragma once

// Small shared numerical kernels: quadrature, 1-D optimization, tridiagonal
// solves, extrapolation, hashing. Everything here is deterministic.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace hkflow::num {

// Adaptive Simpson quadrature on [a,b]. `tol` is an absolute tolerance for
// the whole interval; recursion splits it in the usual way.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol = 1e-12, int max_depth = 48);

// Composite Gauss-Legendre quadrature with fixed panel count. Exact for
// polynomials of degree < 2*points_per_panel on each panel; preferred for
// smooth integrands where adaptivity is unnecessary and determinism matters.
double integrate_panels(const std::function<double(double)>& f, double a,
                        double b, int panels, int points_per_panel = 8);

// Nodes/weights of the points_per_panel Gauss-Legendre rule on [-1,1].
void gauss_legendre(int n, std::vector<double>& nodes,
                    std::vector<double>& weights);

// Clenshaw-Curtis weights for the node set x_i = cos(i*pi/N), i = 0..N.
// Integrates f over [-1,1] as sum w_i f(x_i); exact for polynomials of
// degree <= N.
std::vector<double> clenshaw_curtis_weights(int n_intervals);

// Solves a tridiagonal system in place. diag/upper/lower are the three bands
// (lower[i] multiplies x[i-1] in row i, upper[i] multiplies x[i+1]).
// rhs is overwritten with the solution.
void solve_tridiagonal(std::vector<double> lower, std::vector<double> diag,
                       std::vector<double> upper, std::vector<double>& rhs);

// Cyclic variant for periodic stencils: lower[0] multiplies x[n-1] and
// upper[n-1] multiplies x[0]. Thomas solve plus a Sherman-Morrison rank-one
// correction for the two corner entries.
void solve_cyclic_tridiagonal(const std::vector<double>& lower,
                              const std::vector<double>& diag,
                              const std::vector<double>& upper,
                              std::vector<double>& rhs);

// Golden-section minimization of a unimodal function on [a,b].
double golden_section_min(const std::function<double(double)>& f, double a,
                          double b, double tol = 1e-10);

// Nelder-Mead simplex minimization. Deterministic given the start point.
// Returns the best point found; `fmin` receives its value.
std::vector<double> nelder_mead(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> start, double step, double tol, int max_iter,
    double* fmin = nullptr);

// Aitken delta-squared extrapolation of a three-term sequence. Falls back to
// the last term when the denominator degenerates.
double aitken(double s0, double s1, double s2);

// FNV-1a 64-bit hash, used to fingerprint canonicalized configs.
std::uint64_t fnv1a64(std::string_view bytes);

// SplitMix64 step; used to derive independent per-chunk RNG seeds.
std::uint64_t splitmix64(std::uint64_t& state);

// Numerically stable percent-style relative gap |x-y| / max(|x|,|y|,floor).
double rel_gap(double x, double y, double floor = 1e-300);

}  // namespace hkflow::num
