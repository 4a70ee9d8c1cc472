#include "selfdiff/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "selfdiff/errors.hpp"

namespace selfdiff {

Quadrature1D gauss_legendre(int n, double a, double b) {
  if (n < 1) throw ValidationError("gauss_legendre: need at least one node");
  if (!(b > a)) throw ValidationError("gauss_legendre: empty interval");
  Quadrature1D q;
  q.nodes.resize(n);
  q.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Chebyshev-like initial guess for the i-th root of P_n.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      // Evaluate P_n(x) and its derivative by the three-term recurrence.
      double p0 = 1.0, p1 = 0.0;
      for (int k = 0; k < n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k + 1.0) * x * p1 - k * p2) / (k + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    // Map from [-1,1] to [a,b]; fill symmetric pair.
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    q.nodes[i] = mid - half * x;
    q.nodes[n - 1 - i] = mid + half * x;
    q.weights[i] = half * w;
    q.weights[n - 1 - i] = half * w;
  }
  return q;
}

GridPtr make_polar_grid(double rho_max, int n_rho, int n_angle, bool jacobian) {
  if (!(rho_max > 0.0)) throw ValidationError("polar grid: rho_max must be positive");
  if (n_rho < 2) throw ValidationError("polar grid: n_rho must be at least 2");
  if (n_angle < 4) throw ValidationError("polar grid: n_angle must be at least 4");
  auto g = std::make_shared<PolarGrid>();
  g->radial = gauss_legendre(n_rho, 0.0, rho_max);
  g->angles.resize(n_angle);
  for (int j = 0; j < n_angle; ++j)
    g->angles[j] = 2.0 * std::numbers::pi * j / n_angle;
  g->angle_weight = 2.0 * std::numbers::pi / n_angle;
  g->rho_max = rho_max;
  g->jacobian = jacobian;
  return g;
}

bool same_grid(const PolarGrid& a, const PolarGrid& b) {
  if (&a == &b) return true;
  if (a.n_rho() != b.n_rho() || a.n_angle() != b.n_angle()) return false;
  if (a.jacobian != b.jacobian) return false;
  for (int i = 0; i < a.n_rho(); ++i)
    if (std::abs(a.radial.nodes[i] - b.radial.nodes[i]) > 1e-12) return false;
  return std::abs(a.rho_max - b.rho_max) <= 1e-12;
}

}  // namespace selfdiff
