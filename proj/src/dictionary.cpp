#include "selfdiff/dictionary.hpp"

#include <cmath>
#include <cstdio>

#include "selfdiff/errors.hpp"

namespace selfdiff {

namespace {

// Largest |g(rho)| / V(rho) over a dense scan; used to rescale radial profiles
// into the unit V-ball. The scan runs past rho_max because atoms may stray
// beyond the grid; the profiles below decay while V grows, so the scanned
// maximum is the global one for our families.
double sup_over_v(const std::function<double(double)>& g,
                  const ConfinementPotential& V, double rho_hi) {
  double sup = 0.0;
  const int n = 4000;
  for (int i = 0; i <= n; ++i) {
    const double rho = rho_hi * i / n;
    sup = std::max(sup, std::abs(g(rho)) / V.radial(rho));
  }
  return sup;
}

}  // namespace

std::vector<double> FunctionDictionary::moments(const ParticleMeasure& mu) const {
  std::vector<double> m(entries.size());
  for (size_t k = 0; k < entries.size(); ++k) m[k] = mu.integrate(entries[k].f);
  return m;
}

std::vector<double> FunctionDictionary::moments(const GridMeasure2D& mu) const {
  std::vector<double> m(entries.size());
  for (size_t k = 0; k < entries.size(); ++k) m[k] = mu.integrate(entries[k].f);
  return m;
}

FunctionDictionary default_dictionary(const ConfinementPotential& V, double rho_max,
                                      int size) {
  if (size < 1) throw ValidationError("dictionary: size must be positive");
  FunctionDictionary dict;
  const double scan_hi = 3.0 * rho_max;
  auto add_scaled = [&](const std::string& name,
                        const std::function<double(double)>& radial,
                        int harmonic, bool use_sin) {
    if (dict.size() >= size) return;
    const double margin = 1.0 + 1e-9;  // keep |f| <= V strictly
    const double s = sup_over_v(radial, V, scan_hi) * margin;
    dict.entries.push_back(
        {name, [radial, harmonic, use_sin, s](Vec2 x) {
           const double rho = x.norm();
           double val = radial(rho) / s;
           if (harmonic > 0) {
             const double a = harmonic * std::atan2(x.y, x.x);
             val *= use_sin ? std::sin(a) : std::cos(a);
           }
           return val;
         }});
  };

  add_scaled("x1", [](double rho) { return rho; }, 1, false);
  add_scaled("x2", [](double rho) { return rho; }, 1, true);
  add_scaled("r2", [](double rho) { return rho * rho; }, 0, false);
  const double s0 = 0.30 * rho_max;
  add_scaled("b0", [s0](double rho) { return std::exp(-(rho * rho) / (2.0 * s0 * s0)); },
             0, false);

  // Radial Gaussian bumps at four centers, each times harmonics 0..3.
  const double width = 0.12 * rho_max;
  const double centers[4] = {0.20 * rho_max, 0.45 * rho_max, 0.70 * rho_max,
                             0.95 * rho_max};
  for (int ci = 0; ci < 4; ++ci) {
    const double c = centers[ci];
    auto bump = [c, width](double rho) {
      const double u = (rho - c) / width;
      return std::exp(-0.5 * u * u);
    };
    for (int h = 0; h <= 3; ++h) {
      char name[32];
      if (h == 0) {
        std::snprintf(name, sizeof(name), "b%dc0", ci + 1);
        add_scaled(name, bump, 0, false);
      } else {
        std::snprintf(name, sizeof(name), "b%dc%d", ci + 1, h);
        add_scaled(name, bump, h, false);
        std::snprintf(name, sizeof(name), "b%ds%d", ci + 1, h);
        add_scaled(name, bump, h, true);
      }
    }
  }
  if (dict.size() < size)
    throw ValidationError("dictionary: requested size exceeds the generator family");
  return dict;
}

double weak_distance_moments(const std::vector<double>& ma,
                             const std::vector<double>& mb,
                             const FunctionDictionary& dict) {
  if (dict.size() == 0) throw ValidationError("weak_distance: empty dictionary");
  if (ma.size() != mb.size() || static_cast<int>(ma.size()) != dict.size())
    throw ValidationError("weak_distance: moment vectors do not match the dictionary");
  double d = 0.0;
  for (int k = 0; k < dict.size(); ++k) d += dict.weight(k) * std::abs(ma[k] - mb[k]);
  return d;
}

}  // namespace selfdiff
