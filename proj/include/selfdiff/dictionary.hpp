#pragma once

#include <functional>
#include <string>
#include <vector>

#include "selfdiff/measures.hpp"

namespace selfdiff {

// Ordered test-function dictionary generating the weak metric
// d(mu, nu) = sum_k 2^{-k} |mu(f_k) - nu(f_k)|. Every entry is scaled so that
// |f_k(x)| <= V(x) everywhere (checked on a dense radial scan), i.e. the
// V-norm of f_k is at most 1.
struct DictEntry {
  std::string name;
  std::function<double(Vec2)> f;
};

struct FunctionDictionary {
  std::vector<DictEntry> entries;

  int size() const { return static_cast<int>(entries.size()); }
  double weight(int k) const { return std::ldexp(1.0, -(k + 1)); }  // 2^{-(k+1)}

  std::vector<double> moments(const ParticleMeasure& mu) const;
  std::vector<double> moments(const GridMeasure2D& mu) const;
};

// Default 32-function dictionary for a given confinement potential: scaled
// coordinates, |x|^2, and radial Gaussian bumps times low-order angular
// harmonics. The choice is a reported experiment parameter, not canonical.
FunctionDictionary default_dictionary(const ConfinementPotential& V, double rho_max,
                                      int size = 32);

double weak_distance_moments(const std::vector<double>& ma,
                             const std::vector<double>& mb,
                             const FunctionDictionary& dict);

template <class MA, class MB>
double weak_distance(const MA& mu, const MB& nu, const FunctionDictionary& dict) {
  return weak_distance_moments(dict.moments(mu), dict.moments(nu), dict);
}

}  // namespace selfdiff
