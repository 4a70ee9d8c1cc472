#include "selfdiff/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "selfdiff/errors.hpp"

namespace selfdiff {

namespace {

void fmt17(char* buf, size_t n, double v) { std::snprintf(buf, n, "%.17g", v); }

}  // namespace

ParticleMeasure ParticleMeasure::dirac(Vec2 x) {
  ParticleMeasure mu;
  mu.points.push_back(x);
  mu.weights.push_back(1.0);
  return mu;
}

double ParticleMeasure::total_mass() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

Vec2 ParticleMeasure::mean() const {
  Vec2 m;
  for (int i = 0; i < size(); ++i) m += points[i] * weights[i];
  return m;
}

double ParticleMeasure::integrate(const std::function<double(Vec2)>& f) const {
  double s = 0.0;
  for (int i = 0; i < size(); ++i) s += weights[i] * f(points[i]);
  return s;
}

void ParticleMeasure::validate(double tol) const {
  if (points.size() != weights.size())
    throw ValidationError("particle measure: points/weights size mismatch");
  if (points.empty()) throw ValidationError("particle measure: empty");
  for (double w : weights)
    if (!(w >= 0.0) || !std::isfinite(w))
      throw ValidationError("particle measure: weights must be nonnegative and finite");
  if (std::abs(total_mass() - 1.0) > tol)
    throw ValidationError("particle measure: weights must sum to 1 within tolerance");
}

double GridMeasure2D::total_mass() const {
  const PolarGrid& g = *grid;
  double s = 0.0;
  for (int i = 0; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_angle(); ++j) s += density[g.index(i, j)] * g.weight(i, j);
  return s;
}

Vec2 GridMeasure2D::mean() const {
  const PolarGrid& g = *grid;
  Vec2 m;
  for (int i = 0; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_angle(); ++j)
      m += g.point(i, j) * (density[g.index(i, j)] * g.weight(i, j));
  return m;
}

double GridMeasure2D::integrate(const std::function<double(Vec2)>& f) const {
  const PolarGrid& g = *grid;
  double s = 0.0;
  for (int i = 0; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_angle(); ++j)
      s += f(g.point(i, j)) * density[g.index(i, j)] * g.weight(i, j);
  return s;
}

void GridMeasure2D::validate(double tol) const {
  validate_signed();
  for (double d : density)
    if (d < 0.0) throw ValidationError("grid measure: density must be nonnegative");
  if (std::abs(total_mass() - 1.0) > tol)
    throw ValidationError("grid measure: mass must be 1 within tolerance");
}

void GridMeasure2D::validate_signed() const {
  if (!grid) throw ValidationError("grid measure: missing grid");
  if (static_cast<int>(density.size()) != grid->size())
    throw ValidationError("grid measure: density size does not match grid");
  for (double d : density)
    if (!std::isfinite(d)) throw ValidationError("grid measure: non-finite density");
}

void GridMeasure2D::normalize() {
  const double m = total_mass();
  if (!(m > 0.0)) throw ValidationError("grid measure: cannot normalize zero mass");
  for (double& d : density) d /= m;
}

double v_norm(const ParticleMeasure& mu, const ConfinementPotential& V) {
  double s = 0.0;
  for (int i = 0; i < mu.size(); ++i) s += std::abs(mu.weights[i]) * V.value(mu.points[i]);
  return s;
}

double v_norm(const GridMeasure2D& mu, const ConfinementPotential& V) {
  const PolarGrid& g = *mu.grid;
  double s = 0.0;
  for (int i = 0; i < g.n_rho(); ++i) {
    const double Vi = V.radial(g.rho(i));
    for (int j = 0; j < g.n_angle(); ++j)
      s += std::abs(mu.density[g.index(i, j)]) * g.weight(i, j) * Vi;
  }
  return s;
}

double v_norm_diff(const GridMeasure2D& a, const GridMeasure2D& b,
                   const ConfinementPotential& V) {
  if (!same_grid(*a.grid, *b.grid))
    throw ValidationError("v_norm_diff: measures live on different grids");
  const PolarGrid& g = *a.grid;
  double s = 0.0;
  for (int i = 0; i < g.n_rho(); ++i) {
    const double Vi = V.radial(g.rho(i));
    for (int j = 0; j < g.n_angle(); ++j) {
      const int k = g.index(i, j);
      s += std::abs(a.density[k] - b.density[k]) * g.weight(i, j) * Vi;
    }
  }
  return s;
}

ParticleMeasure occupation_update(const ParticleMeasure& mu, Vec2 x, double t,
                                  double dt, double r) {
  if (dt < 0.0) throw ValidationError("occupation_update: dt must be >= 0");
  if (!(r > 0.0)) throw ValidationError("occupation_update: r must be > 0");
  if (t < 0.0) throw ValidationError("occupation_update: t must be >= 0");
  if (dt == 0.0) return mu;
  const double lambda = dt / (r + t);
  ParticleMeasure out;
  out.points = mu.points;
  out.weights.resize(mu.weights.size());
  for (size_t i = 0; i < mu.weights.size(); ++i)
    out.weights[i] = mu.weights[i] * (1.0 - lambda);
  out.points.push_back(x);
  out.weights.push_back(lambda);
  return out;
}

ParticleMeasure thin(const ParticleMeasure& mu, int n_max, std::mt19937_64& rng,
                     const ConfinementPotential* V, ThinStats* stats) {
  if (n_max < 2) throw ValidationError("thin: n_max must be at least 2");
  if (stats) {
    stats->before = mu.size();
    stats->after = mu.size();
    stats->v_mass_rel_err = 0.0;
  }
  if (mu.size() <= n_max) return mu;

  // Systematic resampling: one uniform offset, then a fixed stride through the
  // cumulative weights. Low variance and deterministic given the rng state.
  const int n = n_max;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double u0 = u01(rng);
  ParticleMeasure out;
  out.points.reserve(n);
  out.weights.assign(n, 1.0 / n);
  double cum = mu.weights[0];
  int src = 0;
  for (int k = 0; k < n; ++k) {
    const double target = (k + u0) / n;
    while (cum < target && src + 1 < mu.size()) cum += mu.weights[++src];
    out.points.push_back(mu.points[src]);
  }
  if (stats) {
    stats->after = n;
    if (V) {
      const double v0 = v_norm(mu, *V), v1 = v_norm(out, *V);
      stats->v_mass_rel_err = v0 > 0.0 ? std::abs(v1 - v0) / v0 : 0.0;
    }
  }
  return out;
}

bool TightnessReport::all_in() const {
  return std::all_of(in_p_beta.begin(), in_p_beta.end(), [](bool b) { return b; });
}

TightnessReport tightness_check(const std::vector<ParticleMeasure>& traj,
                                const ConfinementPotential& V, double beta) {
  if (traj.empty()) throw ValidationError("tightness_check: empty trajectory");
  TightnessReport rep;
  rep.beta_estimate = 0.0;
  for (const auto& mu : traj) {
    const double vm = v_norm(mu, V);
    rep.v_masses.push_back(vm);
    rep.in_p_beta.push_back(vm <= beta);
    rep.beta_estimate = std::max(rep.beta_estimate, vm);
  }
  return rep;
}

double grid_integrate(const GridMeasure2D& mu, const std::function<double(Vec2)>& f) {
  return mu.integrate(f);
}

GridMeasure2D bin_particles(const ParticleMeasure& mu, GridPtr grid) {
  mu.validate();
  const PolarGrid& g = *grid;
  // Midpoint cell boundaries in rho; angular cells are uniform of width
  // angle_weight centered on the nodes.
  std::vector<double> rho_edges(g.n_rho() + 1);
  rho_edges[0] = 0.0;
  for (int i = 0; i + 1 < g.n_rho(); ++i)
    rho_edges[i + 1] = 0.5 * (g.rho(i) + g.rho(i + 1));
  rho_edges[g.n_rho()] = g.rho_max;

  GridMeasure2D out;
  out.grid = grid;
  out.density.assign(g.size(), 0.0);
  const double two_pi = 2.0 * std::numbers::pi;
  for (int a = 0; a < mu.size(); ++a) {
    const Vec2 p = mu.points[a];
    const double rho = std::min(p.norm(), g.rho_max);
    const int i = static_cast<int>(std::upper_bound(rho_edges.begin() + 1, rho_edges.end(), rho) -
                                   (rho_edges.begin() + 1));
    const int ic = std::min(i, g.n_rho() - 1);
    double ang = std::atan2(p.y, p.x);
    if (ang < 0.0) ang += two_pi;
    const int j = static_cast<int>(std::lround(ang / g.angle_weight)) % g.n_angle();
    out.density[g.index(ic, j)] += mu.weights[a];
  }
  for (int i = 0; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_angle(); ++j) {
      const int k = g.index(i, j);
      out.density[k] /= g.weight(i, j);
    }
  return out;
}

void write_particle_csv(const std::string& path, const ParticleMeasure& mu) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  os << "x1,x2,weight\n";
  char a[32], b[32], c[32];
  for (int i = 0; i < mu.size(); ++i) {
    fmt17(a, sizeof(a), mu.points[i].x);
    fmt17(b, sizeof(b), mu.points[i].y);
    fmt17(c, sizeof(c), mu.weights[i]);
    os << a << ',' << b << ',' << c << '\n';
  }
}

ParticleMeasure read_particle_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open: " + path);
  std::string line;
  if (!std::getline(is, line) || line != "x1,x2,weight")
    throw ValidationError("particle csv: bad header in " + path);
  ParticleMeasure mu;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    double x, y, w;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &x, &y, &w) != 3)
      throw ValidationError("particle csv: bad row in " + path);
    mu.points.push_back({x, y});
    mu.weights.push_back(w);
  }
  return mu;
}

void write_grid_csv(const std::string& path, const GridMeasure2D& mu,
                    const double* z_value) {
  mu.validate_signed();
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  char a[32], b[32], c[32], d[32];
  if (z_value) {
    fmt17(a, sizeof(a), *z_value);
    os << "# z_value = " << a << '\n';
  }
  os << "rho,angle,density,quad_weight\n";
  const PolarGrid& g = *mu.grid;
  for (int i = 0; i < g.n_rho(); ++i)
    for (int j = 0; j < g.n_angle(); ++j) {
      fmt17(a, sizeof(a), g.rho(i));
      fmt17(b, sizeof(b), g.angle(j));
      fmt17(c, sizeof(c), mu.density[g.index(i, j)]);
      fmt17(d, sizeof(d), g.weight(i, j));
      os << a << ',' << b << ',' << c << ',' << d << '\n';
    }
}

GridMeasure2D read_grid_csv(const std::string& path, GridPtr grid, double* z_value) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open: " + path);
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("grid csv: empty file " + path);
  if (line.rfind("# z_value = ", 0) == 0) {
    if (z_value) *z_value = std::strtod(line.c_str() + 12, nullptr);
    if (!std::getline(is, line)) throw ValidationError("grid csv: truncated " + path);
  } else if (z_value) {
    *z_value = 1.0;
  }
  if (line != "rho,angle,density,quad_weight")
    throw ValidationError("grid csv: bad header in " + path);
  GridMeasure2D out;
  out.grid = grid;
  out.density.assign(grid->size(), 0.0);
  const PolarGrid& g = *grid;
  int row = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    double rho, ang, den, qw;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &rho, &ang, &den, &qw) != 4)
      throw ValidationError("grid csv: bad row in " + path);
    if (row >= g.size()) throw ValidationError("grid csv: too many rows in " + path);
    const int i = row / g.n_angle(), j = row % g.n_angle();
    if (std::abs(rho - g.rho(i)) > 1e-12 || std::abs(ang - g.angle(j)) > 1e-12 ||
        std::abs(qw - g.weight(i, j)) > 1e-12)
      throw ValidationError("grid csv: nodes do not match the expected grid in " + path);
    out.density[row] = den;
    ++row;
  }
  if (row != g.size()) throw ValidationError("grid csv: row count mismatch in " + path);
  return out;
}

}  // namespace selfdiff
