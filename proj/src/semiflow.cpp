#include "selfdiff/semiflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "selfdiff/errors.hpp"

namespace selfdiff {

namespace {

void check_step(double dt) {
  if (!(dt > 0.0) || dt > 0.5)
    throw ValidationError("flow step dt must lie in (0, 0.5], got " +
                          std::to_string(dt));
}

// Weights of the exponential-trapezoid rule on one interval of length h:
//   int_0^h e^{s-h} f(s) ds ~ A(h) f(0) + B(h) f(h)
// with f interpolated linearly. Both weights are nonnegative and
// A + B = 1 - e^{-h}, so convex combinations of probabilities stay on the
// simplex exactly.
struct TrapWeights {
  double a, b;
};

TrapWeights trap_weights(double h) {
  const double em = std::exp(-h);
  if (h < 1e-6) {
    // Series fallback; the closed forms lose digits to cancellation here.
    const double a = h / 2 - h * h / 3 + h * h * h / 8;
    const double b = h / 2 - h * h / 6 + h * h * h / 24;
    return {a, b};
  }
  return {em * (std::exp(h) - h - 1.0) / h, em * ((h - 1.0) * std::exp(h) + 1.0) / h};
}

GridMeasure2D blend(const GridMeasure2D& mu, double cmu, const GridMeasure2D& a,
                    double ca, const GridMeasure2D& b, double cb) {
  GridMeasure2D out = mu;
  for (std::size_t i = 0; i < out.density.size(); ++i)
    out.density[i] = cmu * mu.density[i] + ca * a.density[i] + cb * b.density[i];
  return out;
}

double v_mass_of(const GridMeasure2D& mu, const ConfinementPotential& V) {
  double s = 0.0;
  const PolarGrid& g = *mu.grid;
  for (std::size_t i = 0; i < mu.density.size(); ++i)
    s += mu.density[i] * g.weight_flat(i) * V.value(g.point_flat(i));
  return s;
}

bool cheap_energy(const InteractionPotential& W, const GridMeasure2D& mu) {
  return W.is_linear() || mu.grid->size() <= 4096;
}

}  // namespace

GridMeasure2D flow_step(const ConfinementPotential& V,
                        const InteractionPotential& W, const GridMeasure2D& mu,
                        double dt) {
  check_step(dt);
  mu.validate();
  const GridMeasure2D pi = pi_map(V, W, mu).measure;
  const double em = std::exp(-dt);
  GridMeasure2D out = mu;
  for (std::size_t i = 0; i < out.density.size(); ++i)
    out.density[i] = em * mu.density[i] + (1.0 - em) * pi.density[i];
  return out;
}

FlowTrajectory integrate_flow(const ConfinementPotential& V,
                              const InteractionPotential& W,
                              const GridMeasure2D& mu0, double T, double dt,
                              const FlowOptions& opts) {
  check_step(dt);
  if (!(T > 0.0))
    throw ValidationError("flow horizon T must be positive, got " +
                          std::to_string(T));
  mu0.validate();

  const int n_steps = static_cast<int>(std::ceil(T / dt - 1e-12));
  const double h = T / n_steps;
  const double em = std::exp(-h);
  const TrapWeights tw = trap_weights(h);

  const GridMeasure2D gamma = gamma_measure(V, mu0.grid);
  const bool track_energy = W.is_symmetric() && cheap_energy(W, mu0);

  FlowTrajectory traj;
  traj.times.reserve(n_steps + 1);
  GridMeasure2D mu = mu0;

  auto record = [&](double t, const GridMeasure2D& state,
                    const GridMeasure2D& pi_state) {
    traj.times.push_back(t);
    traj.means.push_back(state.mean());
    traj.vnorm_to_gamma.push_back(v_norm_diff(state, gamma, V));
    traj.residual_pi.push_back(v_norm_diff(pi_state, state, V));
    traj.v_masses.push_back(v_mass_of(state, V));
    if (track_energy) {
      const double e = free_energy(V, W, pi_state);
      if (!traj.energies.empty() &&
          e > traj.energies.back() + opts.energy_slack) {
        traj.energy_monotone = false;
        if (opts.enforce_energy_monotone) {
          std::ostringstream os;
          os << "flow energy increased from " << traj.energies.back() << " to "
             << e << " at t = " << t
             << "; the step dt = " << dt << " is too large for this instance";
          throw NumericalAbort(os.str());
        }
      }
      traj.energies.push_back(e);
    }
  };

  GridMeasure2D pi = pi_map(V, W, mu).measure;
  record(0.0, mu, pi);
  for (int k = 0; k < n_steps; ++k) {
    GridMeasure2D next;
    if (opts.scheme == FlowScheme::ExponentialEuler) {
      next = blend(mu, em, pi, 1.0 - em, pi, 0.0);
    } else {
      // Predict with exponential Euler, evaluate Pi there, then apply the
      // exponential-trapezoid weights to the two Pi values.
      const GridMeasure2D pred = blend(mu, em, pi, 1.0 - em, pi, 0.0);
      const GridMeasure2D pi_pred = pi_map(V, W, pred).measure;
      next = blend(mu, em, pi, tw.a, pi_pred, tw.b);
    }
    mu = std::move(next);
    pi = pi_map(V, W, mu).measure;
    record((k + 1) * h, mu, pi);
    if (opts.snapshot_stride > 0 && (k + 1) % opts.snapshot_stride == 0 &&
        k + 1 < n_steps) {
      traj.snapshot_times.push_back((k + 1) * h);
      traj.snapshots.push_back(mu);
    }
  }
  traj.snapshot_times.push_back(T);
  traj.snapshots.push_back(mu);
  traj.final_state = std::move(mu);
  return traj;
}

PicardResult picard_local(const ConfinementPotential& V,
                          const InteractionPotential& W,
                          const GridMeasure2D& mu0, double epsilon, int n_iter,
                          int n_time) {
  if (!(epsilon > 0.0))
    throw ValidationError("picard horizon must be positive, got " +
                          std::to_string(epsilon));
  if (n_iter < 0) throw ValidationError("picard iteration count must be >= 0");
  if (n_time < 1) throw ValidationError("picard time grid needs >= 1 interval");
  mu0.validate();

  const GridPtr grid = mu0.grid;
  const GridMeasure2D gamma = gamma_measure(V, grid);
  const double norm_mu0 = v_norm(mu0, V);

  PicardResult res;
  res.epsilon = epsilon;
  res.beta = 2.0 * (norm_mu0 + v_norm(gamma, V));

  // Estimate C_beta = sup ||Pi(nu)||_V and C'_beta = sup ||DPi(nu) w||_V /
  // ||w||_V over sampled tilted measures inside the beta-ball. The 1.2
  // factor is a safety margin for the finite sample.
  std::vector<GridMeasure2D> probes;
  probes.push_back(mu0);
  probes.push_back(gamma);
  for (int ia = 1; ia <= 4; ++ia)
    for (int ip = 0; ip < 4; ++ip) {
      GridMeasure2D nu =
          tilted_gibbs_measure(V, grid, 0.6 * ia, ip * 0.5 * std::numbers::pi);
      if (v_norm(nu, V) <= res.beta) probes.push_back(std::move(nu));
    }
  double cb = 0.0;
  for (const GridMeasure2D& nu : probes)
    cb = std::max(cb, v_norm(pi_map(V, W, nu).measure, V));
  res.c_beta = 1.2 * cb;

  double cbp = 0.0;
  for (std::size_t b = 0; b < std::min<std::size_t>(probes.size(), 4); ++b) {
    for (std::size_t j = 1; j < std::min<std::size_t>(probes.size(), 5); ++j) {
      if (j == b) continue;
      GridMeasure2D w = probes[j];
      for (std::size_t i = 0; i < w.density.size(); ++i)
        w.density[i] -= probes[b].density[i];
      const double wn = v_norm(w, V);
      if (wn < 1e-14) continue;
      const GridMeasure2D dp = d_pi(V, W, probes[b], w);
      cbp = std::max(cbp, v_norm(dp, V) / wn);
    }
  }
  res.c_beta_prime = 1.2 * std::max(cbp, 1e-12);

  const double reach = norm_mu0 + (1.0 - std::exp(-epsilon)) * res.c_beta;
  if (reach > res.beta) {
    std::ostringstream os;
    os << "picard horizon rejected: ||mu0||_V + (1 - e^-eps) * C_beta = "
       << reach << " exceeds beta = " << res.beta
       << " (C_beta = " << res.c_beta << ")";
    throw ValidationError(os.str());
  }
  if (epsilon * res.c_beta_prime >= 1.0) {
    std::ostringstream os;
    os << "picard horizon rejected: eps * C'_beta = "
       << epsilon * res.c_beta_prime << " >= 1 (C'_beta = " << res.c_beta_prime
       << ")";
    throw ValidationError(os.str());
  }
  res.predicted_ratio = (1.0 - std::exp(-epsilon)) * res.c_beta_prime;

  const double h = epsilon / n_time;
  const TrapWeights tw = trap_weights(h);
  const double em = std::exp(-h);
  res.time_grid.resize(n_time + 1);
  for (int k = 0; k <= n_time; ++k) res.time_grid[k] = k * h;

  std::vector<GridMeasure2D> cur(n_time + 1, mu0);  // stage 0: constant curve
  res.iterates.push_back(mu0);
  for (int n = 0; n < n_iter; ++n) {
    // Pi along the previous curve, then the exponential integral by the
    // recursion I_{k+1} = e^{-h} I_k + A Pi_k + B Pi_{k+1}.
    std::vector<GridMeasure2D> pis;
    pis.reserve(n_time + 1);
    for (const GridMeasure2D& state : cur)
      pis.push_back(pi_map(V, W, state).measure);

    std::vector<GridMeasure2D> next(n_time + 1, mu0);
    std::vector<double> integral(grid->size(), 0.0);
    for (int k = 0; k < n_time; ++k) {
      for (std::size_t i = 0; i < integral.size(); ++i)
        integral[i] = em * integral[i] + tw.a * pis[k].density[i] +
                      tw.b * pis[k + 1].density[i];
      const double decay = std::exp(-res.time_grid[k + 1]);
      for (std::size_t i = 0; i < integral.size(); ++i)
        next[k + 1].density[i] = decay * mu0.density[i] + integral[i];
    }
    double sup = 0.0;
    for (int k = 0; k <= n_time; ++k)
      sup = std::max(sup, v_norm_diff(next[k], cur[k], V));
    res.sup_distances.push_back(sup);
    cur = std::move(next);
    res.iterates.push_back(cur.back());
  }
  for (std::size_t n = 1; n < res.sup_distances.size(); ++n) {
    const double prev = res.sup_distances[n - 1];
    res.ratios.push_back(prev > 1e-15 ? res.sup_distances[n] / prev : 0.0);
  }
  res.final_curve = std::move(cur);
  return res;
}

namespace {

// Least squares over the probability simplex:
//   minimize ||M lambda - y||_2  subject to  lambda >= 0, sum lambda = 1.
// Active-set iteration: on the current support solve the equality-
// constrained problem exactly through the difference parametrization,
// step back to the feasible set when a coefficient turns negative, and
// admit the outside column whose KKT multiplier is most profitable.
// Terminating at a KKT point up to factorization roundoff matters here: a
// tolerance-limited stop leaves a duality gap of order tol in the squared
// distance, which dominates once the certified bound has decayed to a few
// times sqrt(tol).
Eigen::VectorXd simplex_lsq(const Eigen::MatrixXd& M, const Eigen::VectorXd& y) {
  const int n = static_cast<int>(M.cols());
  int best = 0;
  double bestd = std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) {
    const double d = (M.col(j) - y).squaredNorm();
    if (d < bestd) {
      bestd = d;
      best = j;
    }
  }
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(n);
  lam[best] = 1.0;
  std::vector<int> support{best};
  std::vector<bool> in_support(n, false);
  in_support[best] = true;

  // Minimize over { z : sum z = 1 } on the support columns. Writing
  // z = e_last + B u with sum-preserving directions B leaves a QR solve on
  // the well-scaled column differences.
  const auto solve_on_support = [&](const std::vector<int>& idx) {
    const int k = static_cast<int>(idx.size());
    Eigen::VectorXd z = Eigen::VectorXd::Zero(k);
    z[k - 1] = 1.0;
    if (k == 1) return z;
    Eigen::MatrixXd D(M.rows(), k - 1);
    for (int c = 0; c + 1 < k; ++c)
      D.col(c) = M.col(idx[c]) - M.col(idx[k - 1]);
    const Eigen::VectorXd u =
        D.colPivHouseholderQr().solve(y - M.col(idx[k - 1]));
    z.head(k - 1) += u;
    z[k - 1] -= u.sum();
    return z;
  };

  for (int outer = 0; outer < 4 * n; ++outer) {
    // Restore primal feasibility on the support: step toward the
    // equality-constrained minimizer as far as nonnegativity allows,
    // dropping the coefficient that blocks the step.
    for (int inner = 0; inner < n + 2; ++inner) {
      const Eigen::VectorXd z = solve_on_support(support);
      double alpha = 1.0;
      int drop = -1;
      for (std::size_t c = 0; c < support.size(); ++c)
        if (z[c] < 0.0) {
          const double xc = lam[support[c]];
          const double a = xc / (xc - z[c]);
          if (a < alpha) {
            alpha = a;
            drop = static_cast<int>(c);
          }
        }
      if (drop < 0) {
        for (std::size_t c = 0; c < support.size(); ++c)
          lam[support[c]] = std::max(z[c], 0.0);
        break;
      }
      for (std::size_t c = 0; c < support.size(); ++c)
        lam[support[c]] += alpha * (z[c] - lam[support[c]]);
      lam[support[drop]] = 0.0;
      in_support[support[drop]] = false;
      support.erase(support.begin() + drop);
    }

    // KKT: the gradient of ||M lambda - y||^2 is constant across the
    // support; an outside column strictly below that level improves the
    // fit, so admit the most profitable one.
    const Eigen::VectorXd g = M.transpose() * (M * lam - y);
    double tau = std::numeric_limits<double>::infinity();
    for (int j : support) tau = std::min(tau, g[j]);
    int enter = -1;
    double enter_g = tau - 1e-13;
    for (int j = 0; j < n; ++j)
      if (!in_support[j] && g[j] < enter_g) {
        enter_g = g[j];
        enter = j;
      }
    if (enter < 0) break;
    support.push_back(enter);
    in_support[enter] = true;
  }
  return lam;
}

}  // namespace

HullContractionReport hull_contraction_check(const ConfinementPotential& V,
                                             const InteractionPotential& W,
                                             const GridMeasure2D& mu0, double T,
                                             double dt, int hull_samples,
                                             std::uint64_t seed) {
  if (hull_samples < 1)
    throw ValidationError("hull proxy needs at least one sample");
  check_step(dt);
  if (!(T > 0.0))
    throw ValidationError("flow horizon T must be positive, got " +
                          std::to_string(T));
  mu0.validate();

  const GridPtr grid = mu0.grid;
  const FunctionDictionary dict = default_dictionary(V, grid->rho_max);
  const std::size_t nm = dict.size();

  // Dictionary values tabulated once; a measure's moment vector is then a
  // weighted dot product per entry.
  std::vector<std::vector<double>> table(nm,
                                         std::vector<double>(grid->size()));
  for (std::size_t k = 0; k < nm; ++k)
    for (int i = 0; i < grid->size(); ++i)
      table[k][i] = dict.entries[k].f(grid->point_flat(i));
  auto moments = [&](const GridMeasure2D& mu) {
    Eigen::VectorXd m(nm);
    std::vector<double> mass(grid->size());
    for (int i = 0; i < grid->size(); ++i)
      mass[i] = mu.density[i] * grid->weight_flat(i);
    for (std::size_t k = 0; k < nm; ++k) {
      double s = 0.0;
      for (int i = 0; i < grid->size(); ++i) s += mass[i] * table[k][i];
      m[k] = dict.weight(k) * s;
    }
    return m;
  };

  // Proxy hull: Pi-images of random tilts plus the Pi-image of every state
  // the trajectory visits. The latter make the exponential-Euler contraction
  // exact, so the reported ratios isolate genuine violations from sampling
  // gaps. One stepping pass collects hull columns and checkpoint moments.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ualpha(0.0, 2.0);
  std::uniform_real_distribution<double> uphi(0.0, 2.0 * std::numbers::pi);
  std::vector<Eigen::VectorXd> hull;
  for (int s = 0; s < hull_samples; ++s) {
    // Name the draws: argument evaluation order is unspecified, and the
    // seeded results must not depend on the compiler.
    const double a = ualpha(rng);
    const double p = uphi(rng);
    const GridMeasure2D nu = tilted_gibbs_measure(V, grid, a, p);
    hull.push_back(moments(pi_map(V, W, nu).measure));
  }

  const int n_steps = static_cast<int>(std::ceil(T / dt - 1e-12));
  const double h = T / n_steps;
  const double em = std::exp(-h);
  const int stride = std::max(1, n_steps / 30);
  std::vector<std::pair<double, Eigen::VectorXd>> checkpoints;
  const Eigen::VectorXd m0 = moments(mu0);
  {
    GridMeasure2D mu = mu0;
    for (int k = 0; k < n_steps; ++k) {
      const GridMeasure2D pi = pi_map(V, W, mu).measure;
      hull.push_back(moments(pi));
      for (std::size_t i = 0; i < mu.density.size(); ++i)
        mu.density[i] = em * mu.density[i] + (1.0 - em) * pi.density[i];
      if ((k + 1) % stride == 0 || k + 1 == n_steps)
        checkpoints.emplace_back((k + 1) * h, moments(mu));
    }
  }

  HullContractionReport rep;
  rep.hull_size = hull.size();

  Eigen::MatrixXd M(nm, hull.size());
  for (std::size_t c = 0; c < hull.size(); ++c) M.col(c) = hull[c];
  {
    // A hull that collapses to a single point (all Pi-images coincide, as
    // happens without interaction) certifies nothing; flag it by column
    // spread rather than matrix rank, which is low for any smooth family.
    Eigen::VectorXd center = Eigen::VectorXd::Zero(nm);
    for (const auto& mcol : hull) center += mcol;
    center /= static_cast<double>(hull.size());
    double spread = 0.0;
    for (const auto& mcol : hull)
      spread = std::max(spread, (mcol - center).norm());
    rep.degenerate = spread < 1e-10 * std::max(1.0, center.norm());
  }

  // Distance to the hull = min over the simplex of the weighted moment
  // mismatch; the simplex constraint is enforced by a heavily weighted
  // normalization row in the NNLS system.
  const double rho_row = 1e3;
  Eigen::MatrixXd A(nm + 1, hull.size());
  A.topRows(nm) = M;
  A.row(nm).setConstant(rho_row);
  auto dist_to_hull = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd b(nm + 1);
    b.head(nm) = y;
    b[nm] = rho_row;
    const Eigen::VectorXd lam = nnls(A, b);
    return (M * lam - y).norm();
  };

  rep.d0 = dist_to_hull(m0);
  for (const auto& [t, m] : checkpoints) {
    HullCheckRow row;
    row.t = t;
    row.dist = dist_to_hull(m);
    row.bound = std::exp(-t) * rep.d0;
    if (rep.d0 < 1e-12) {
      row.ratio =
          row.dist < 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
    } else {
      row.ratio = row.dist / row.bound;
    }
    rep.max_ratio = std::max(rep.max_ratio, row.ratio);
    rep.rows.push_back(row);
  }
  rep.pass = rep.max_ratio <= 1.0 + 1e-6;
  return rep;
}

}  // namespace selfdiff
