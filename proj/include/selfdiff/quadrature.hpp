#pragma once

#include <memory>
#include <vector>

#include "selfdiff/geometry.hpp"

namespace selfdiff {

struct Quadrature1D {
  std::vector<double> nodes;
  std::vector<double> weights;
  int size() const { return static_cast<int>(nodes.size()); }
};

// Gauss-Legendre rule with n nodes on [a, b]. Nodes by Newton iteration on the
// Legendre polynomial (converges to machine precision in a few steps).
Quadrature1D gauss_legendre(int n, double a, double b);

// Polar product grid: Gauss-Legendre radii on (0, rho_max] x uniform angles on
// [0, 2pi). Angular rule is the periodic trapezoid (all weights 2pi/n_angle),
// spectrally accurate for smooth periodic integrands. When `jacobian` is true
// the per-node quadrature weight carries the polar factor rho, so stored
// densities are densities with respect to Lebesgue measure dx.
struct PolarGrid {
  Quadrature1D radial;           // nodes in (0, rho_max)
  std::vector<double> angles;    // n_angle uniform angles starting at 0
  double angle_weight = 0.0;     // 2pi / n_angle
  double rho_max = 0.0;
  bool jacobian = true;

  int n_rho() const { return radial.size(); }
  int n_angle() const { return static_cast<int>(angles.size()); }
  int size() const { return n_rho() * n_angle(); }
  int index(int i, int j) const { return i * n_angle() + j; }

  double rho(int i) const { return radial.nodes[i]; }
  double angle(int j) const { return angles[j]; }
  Vec2 point(int i, int j) const { return unit(angles[j]) * radial.nodes[i]; }

  // Full quadrature weight of node (i,j), including the Jacobian if configured.
  double weight(int i, int /*j*/) const {
    const double w = radial.weights[i] * angle_weight;
    return jacobian ? w * radial.nodes[i] : w;
  }

  // Flat-index accessors matching index(i, j) = i * n_angle + j.
  Vec2 point_flat(std::size_t k) const {
    const int na = n_angle();
    return point(static_cast<int>(k) / na, static_cast<int>(k) % na);
  }
  double weight_flat(std::size_t k) const {
    const int na = n_angle();
    return weight(static_cast<int>(k) / na, static_cast<int>(k) % na);
  }
};

using GridPtr = std::shared_ptr<const PolarGrid>;

GridPtr make_polar_grid(double rho_max, int n_rho = 200, int n_angle = 256,
                        bool jacobian = true);

// True if the two handles refer to the same grid or to grids with identical
// geometry (nodes within 1e-12).
bool same_grid(const PolarGrid& a, const PolarGrid& b);

}  // namespace selfdiff
