#include "selfdiff/runner.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>
#include <thread>

#include "selfdiff/errors.hpp"
#include "selfdiff/gibbs.hpp"
#include "selfdiff/rotation2d.hpp"
#include "selfdiff/sde.hpp"
#include "selfdiff/semiflow.hpp"
#include "selfdiff/svg.hpp"

namespace selfdiff {

namespace {

std::string fmt17(double x) {
  if (std::isnan(x)) return "nan";
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string fmt6(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

// Collects the files a run produces and fingerprints them once written.
struct ArtifactSink {
  std::filesystem::path dir;
  std::vector<RunArtifact> artifacts;

  std::string path_for(const std::string& name) const {
    return (dir / name).string();
  }

  void write_text(const std::string& name, const std::string& content) {
    const std::string path = path_for(name);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    out << content;
    out.close();
    if (!out) throw ValidationError("write failed for " + path);
    record(name);
  }

  // For files written by library helpers (measure CSVs).
  void record(const std::string& name) {
    const std::string path = path_for(name);
    RunArtifact a;
    a.name = name;
    a.bytes = static_cast<std::uint64_t>(std::filesystem::file_size(path));
    a.sha256 = sha256_hex_of_file(path);
    artifacts.push_back(std::move(a));
  }
};

// Small CSV builder so every table goes through the same formatting.
struct CsvBuilder {
  std::ostringstream out;
  explicit CsvBuilder(const std::string& header) { out << header << "\n"; }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      out << (i ? "," : "") << cells[i];
    out << "\n";
  }
  std::string str() const { return out.str(); }
};

double resolved_rho_max(const ExperimentConfig& cfg) {
  return cfg.grid.rho_max > 0.0 ? cfg.grid.rho_max
                                : auto_rho_max(cfg.potential);
}

// The reduced 2D analysis needs the rotation angle of the interaction
// matrix: theta for the rotation kind and pi for the symmetric dot kind
// (matrix -I). Config validation rejects the zero interaction here.
double interaction_theta(const InteractionPotential& W) {
  if (W.kind() == InteractionKind::LinearRotation) return W.theta();
  if (W.kind() == InteractionKind::SymmetricDot) return std::numbers::pi;
  throw ValidationError(
      "interaction.kind: the reduced analysis needs a rotation or "
      "symmetric-dot interaction");
}

void run_check(const ExperimentConfig& cfg, ArtifactSink& sink) {
  const HypothesisReport rep =
      check_hypotheses(cfg.potential, cfg.interaction, cfg.check.box,
                       cfg.check.n, 1e-9, cfg.check.gauge_lambda);
  sink.write_text("hypotheses.txt", rep.to_text());

  // Rotational-symmetry integrals: both vanish identically for radial V, so
  // the table doubles as a quadrature sanity check.
  const RadialDensity rd =
      RadialDensity::from_potential(cfg.potential, resolved_rho_max(cfg),
                                    cfg.grid.n_rho, cfg.grid.n_angle);
  struct Phi {
    const char* name;
    double (*f)(double);
  };
  const Phi phis[] = {
      {"u", [](double u) { return u; }},
      {"u2", [](double u) { return u * u; }},
      {"u3", [](double u) { return u * u * u; }},
      {"cos_u", [](double u) { return std::cos(u); }},
      {"exp_neg_u", [](double u) { return std::exp(-u); }},
  };
  const double angles[] = {0.0, 2.0 * std::numbers::pi / 3.0,
                           4.0 * std::numbers::pi / 3.0};
  CsvBuilder csv("phi,y_angle,i1,i2_x,i2_y");
  for (const Phi& phi : phis)
    for (double ang : angles) {
      const SymmetryIntegrals si =
          symmetry_integrals(rd, unit(ang), phi.f);
      csv.row({phi.name, fmt17(ang), fmt17(si.i1), fmt17(si.i2.x),
               fmt17(si.i2.y)});
    }
  sink.write_text("symmetry.csv", csv.str());
}

void run_simulate(const ExperimentConfig& cfg, ArtifactSink& sink) {
  const ParticleMeasure mu0 = ParticleMeasure::dirac(cfg.sde.x0);
  const SdePath path =
      simulate_self_interacting(cfg.potential, cfg.interaction, cfg.sde, mu0);

  CsvBuilder csv("t,x1,x2,meanmu_1,meanmu_2,intV_mu");
  for (const SdeCheckpoint& c : path.checkpoints)
    csv.row({fmt17(c.t), fmt17(c.x.x), fmt17(c.x.y), fmt17(c.mean_mu.x),
             fmt17(c.mean_mu.y), fmt17(c.int_v)});
  sink.write_text("path.csv", csv.str());

  write_particle_csv(sink.path_for("final_measure.csv"), path.final_measure);
  sink.record("final_measure.csv");

  if (!path.snapshots.empty()) {
    CsvBuilder index("idx,t,file");
    for (std::size_t i = 0; i < path.snapshots.size(); ++i) {
      char name[48];
      std::snprintf(name, sizeof(name), "snapshot_%03zu.csv", i);
      write_particle_csv(sink.path_for(name), path.snapshots[i]);
      sink.record(name);
      index.row({std::to_string(i), fmt17(path.snapshot_times[i]), name});
    }
    sink.write_text("snapshots.csv", index.str());
  }

  std::ostringstream sum;
  sum << "t_final = " << fmt17(path.t_final) << "\n"
      << "final_x = " << fmt17(path.final_position.x) << " "
      << fmt17(path.final_position.y) << "\n"
      << "final_mean = " << fmt17(path.final_mean.x) << " "
      << fmt17(path.final_mean.y) << "\n"
      << "final_intV = " << fmt17(path.final_int_v) << "\n"
      << "sup_intV = " << fmt17(path.sup_int_v) << "\n"
      << "atoms = " << path.final_measure.size() << "\n";
  sink.write_text("summary.txt", sum.str());
}

void run_flow(const ExperimentConfig& cfg, ArtifactSink& sink) {
  const GridPtr grid = make_grid_for(cfg.potential, cfg.grid);
  const GridMeasure2D mu0 = tilted_gibbs_measure(
      cfg.potential, grid, cfg.flow.init_alpha, cfg.flow.init_phi);

  FlowOptions opts;
  opts.scheme = cfg.flow.scheme;
  opts.snapshot_stride = cfg.flow.snapshot_stride;
  const FlowTrajectory traj = integrate_flow(
      cfg.potential, cfg.interaction, mu0, cfg.flow.t_final, cfg.flow.dt, opts);

  CsvBuilder csv("t,mean_x,mean_y,vnorm_to_gamma,energy_E,residual_pi");
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double energy = traj.energies.empty()
                              ? std::numeric_limits<double>::quiet_NaN()
                              : traj.energies[i];
    csv.row({fmt17(traj.times[i]), fmt17(traj.means[i].x),
             fmt17(traj.means[i].y), fmt17(traj.vnorm_to_gamma[i]),
             fmt17(energy), fmt17(traj.residual_pi[i])});
  }
  sink.write_text("trajectory.csv", csv.str());

  write_grid_csv(sink.path_for("final_state.csv"), traj.final_state);
  sink.record("final_state.csv");

  if (!traj.snapshots.empty()) {
    CsvBuilder index("idx,t,file");
    for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
      char name[48];
      std::snprintf(name, sizeof(name), "flow_snapshot_%03zu.csv", i);
      write_grid_csv(sink.path_for(name), traj.snapshots[i]);
      sink.record(name);
      index.row({std::to_string(i), fmt17(traj.snapshot_times[i]), name});
    }
    sink.write_text("flow_snapshots.csv", index.str());
  }
}

void run_analyze2d(const ExperimentConfig& cfg, ArtifactSink& sink) {
  const double theta = interaction_theta(cfg.interaction);
  const double rho_max = resolved_rho_max(cfg);
  const RadialDensity rd = RadialDensity::from_potential(
      cfg.potential, rho_max, cfg.grid.n_rho, cfg.grid.n_angle);
  const RegimeClassification cls = classify_regime(rd, theta);

  // Radial vector field J and its finite-difference slope over the sweep.
  const int n_alpha = cfg.analyze.n_alpha;
  CsvBuilder jcsv("alpha,J,Jprime_fd");
  for (int i = 0; i < n_alpha; ++i) {
    const double alpha = cfg.analyze.alpha_max * i / (n_alpha - 1);
    jcsv.row({fmt17(alpha), fmt17(j_alpha(rd, theta, alpha)),
              fmt17(j_prime_fd(rd, theta, alpha))});
  }
  sink.write_text("jcurve.csv", jcsv.str());

  // Phase portrait of the reduced (alpha, sigma) dynamics from four starts;
  // output thinned to every fifth step to keep the table small.
  CsvBuilder pcsv("start,t,alpha,sigma,m_x,m_y");
  const double a_lo = 0.25 * cfg.analyze.alpha_max;
  const double a_hi = 0.75 * cfg.analyze.alpha_max;
  const ReducedState starts[] = {{a_lo, 0.0},
                                 {a_lo, 0.5 * std::numbers::pi},
                                 {a_hi, 0.0},
                                 {a_hi, 0.5 * std::numbers::pi}};
  int start_id = 0;
  for (const ReducedState& s0 : starts) {
    const ReducedTrajectory tr =
        integrate_reduced(rd, theta, s0, cfg.analyze.portrait_t, 0.01);
    for (std::size_t k = 0; k < tr.times.size(); k += 5) {
      const double a = tr.alpha[k], s = tr.sigma[k];
      pcsv.row({std::to_string(start_id), fmt17(tr.times[k]), fmt17(a),
                fmt17(s), fmt17(0.5 * a * std::cos(s)),
                fmt17(0.5 * a * std::sin(s))});
    }
    ++start_id;
  }
  sink.write_text("portrait.csv", pcsv.str());

  // Regime-dependent limit object on the 2D grid.
  const GridPtr grid = make_grid_for(cfg.potential, cfg.grid);
  std::string limit_file;
  if (cls.regime == Regime::ConvergeToRandomFixed) {
    limit_file = "limit_measure.csv";
    const GridMeasure2D lm = limit_measure(rd, unit(0.0), *cls.alpha1, grid);
    write_grid_csv(sink.path_for(limit_file), lm);
    sink.record(limit_file);

    // Damped Pi-iteration from a half-tilt start; for symmetric W the
    // recorded energy column must decrease.
    const GridMeasure2D fp0 =
        tilted_gibbs_measure(cfg.potential, grid, 0.5 * *cls.alpha1, 0.0);
    const FixedPointOutcome fp =
        fixed_point_iterate(cfg.potential, cfg.interaction, fp0);
    CsvBuilder fcsv("iter,residual_vnorm,energy_E,mean_x,mean_y");
    for (const FixedPointHistoryRow& row : fp.history)
      fcsv.row({std::to_string(row.iter), fmt17(row.residual),
                fmt17(row.energy), fmt17(row.mean.x), fmt17(row.mean.y)});
    sink.write_text("fixedpoint.csv", fcsv.str());
  } else if (cls.regime == Regime::Circling) {
    limit_file = "orbit_measure.csv";
    const GridMeasure2D om = periodic_orbit_measure(
        rd, theta, *cls.alpha1, cfg.analyze.orbit_delta, grid);
    write_grid_csv(sink.path_for(limit_file), om);
    sink.record(limit_file);
  } else {
    limit_file = "gamma.csv";
    const GridMeasure2D gm = gamma_measure(cfg.potential, grid);
    write_grid_csv(sink.path_for(limit_file), gm);
    sink.record(limit_file);
  }

  // Sign pattern of J along the sweep (no spurious roots besides 0 and
  // alpha_1).
  std::vector<double> kur_samples;
  for (int i = 1; i <= 8; ++i)
    kur_samples.push_back(cfg.analyze.alpha_max * i / 8.0);
  const KurtosisReport kur = kurtosis_sign_check(rd, theta, kur_samples);

  std::ostringstream txt;
  txt << "theta = " << fmt17(theta) << "\n"
      << "rho_max = " << fmt17(rho_max) << "\n"
      << "m2 = " << fmt17(cls.m2) << "\n"
      << "cos_theta_m2 = " << fmt17(cls.cos_theta_m2) << "\n"
      << "regime = " << cls.regime_name() << "\n"
      << "boundary_degenerate = " << (cls.boundary_degenerate ? "yes" : "no")
      << "\n"
      << "Jprime_at_0 = " << fmt17(j_prime_fd(rd, theta, 0.0)) << "\n";
  if (cls.alpha1) {
    txt << "alpha1 = " << fmt17(*cls.alpha1) << "\n"
        << "mean_radius = " << fmt17(0.5 * *cls.alpha1) << "\n";
  }
  if (cls.t_theta) txt << "T_theta = " << fmt17(*cls.t_theta) << "\n";
  txt << "limit_artifact = " << limit_file << "\n"
      << "j3_sign_check = " << (kur.pass ? "pass" : "fail")
      << " (j3_at_zero = " << fmt6(kur.j3_at_zero) << ")\n";
  sink.write_text("analysis.txt", txt.str());

  sink.write_text("jcurve.svg",
                  render_jcurve_svg(read_csv_table(sink.path_for("jcurve.csv"))));
  sink.write_text(
      "portrait.svg",
      render_portrait_svg(read_csv_table(sink.path_for("portrait.csv"))));
}

void run_phase_diagram(const ExperimentConfig& cfg, ArtifactSink& sink) {
  const double rho_max = resolved_rho_max(cfg);
  const RadialDensity rd = RadialDensity::from_potential(
      cfg.potential, rho_max, cfg.grid.n_rho, cfg.grid.n_angle);

  const int n = cfg.phase.n_theta;
  std::vector<double> thetas(n);
  for (int i = 0; i < n; ++i)
    thetas[i] = cfg.phase.theta_min +
                (cfg.phase.theta_max - cfg.phase.theta_min) * i / (n - 1);

  std::vector<RegimeClassification> rows(n);
  const int threads = std::max(1, std::min(cfg.threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) rows[i] = classify_regime(rd, thetas[i]);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (int i = w; i < n; i += threads)
          rows[i] = classify_regime(rd, thetas[i]);
      });
    for (std::thread& th : pool) th.join();
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  CsvBuilder csv("theta,m2,cos_theta_m2,regime,alpha1,T_theta");
  for (int i = 0; i < n; ++i) {
    const RegimeClassification& c = rows[i];
    csv.row({fmt17(c.theta), fmt17(c.m2), fmt17(c.cos_theta_m2),
             c.regime_name(), fmt17(c.alpha1 ? *c.alpha1 : nan),
             fmt17(c.t_theta ? *c.t_theta : nan)});
  }
  sink.write_text("phase_diagram.csv", csv.str());
  sink.write_text("phase_strip.svg",
                  render_phase_strip_svg(
                      read_csv_table(sink.path_for("phase_diagram.csv"))));
}

}  // namespace

std::string sha256_hex_of_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path + " for hashing");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();

  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr))
    throw NumericalAbort("sha256 digest failed for " + path);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

RunOutcome run_experiment(const ExperimentConfig& cfg) {
  ArtifactSink sink;
  sink.dir = cfg.out_dir;
  std::error_code ec;
  std::filesystem::create_directories(sink.dir, ec);
  if (ec)
    throw ValidationError("run.out: cannot create directory " + cfg.out_dir +
                          ": " + ec.message());

  switch (cfg.kind) {
    case RunKind::Check: run_check(cfg, sink); break;
    case RunKind::Simulate: run_simulate(cfg, sink); break;
    case RunKind::Flow: run_flow(cfg, sink); break;
    case RunKind::Analyze2d: run_analyze2d(cfg, sink); break;
    case RunKind::PhaseDiagram: run_phase_diagram(cfg, sink); break;
  }

  nlohmann::ordered_json manifest;
  manifest["kind"] = run_kind_name(cfg.kind);
  manifest["config"] = cfg.effective_ini();
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const RunArtifact& a : sink.artifacts)
    files.push_back({{"name", a.name},
                     {"bytes", a.bytes},
                     {"sha256", a.sha256}});
  manifest["artifacts"] = files;

  RunOutcome outcome;
  outcome.out_dir = cfg.out_dir;
  outcome.manifest_path = sink.path_for("manifest.json");
  {
    std::ofstream out(outcome.manifest_path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + outcome.manifest_path);
    out << manifest.dump(2) << "\n";
  }
  outcome.artifacts = std::move(sink.artifacts);
  return outcome;
}

}  // namespace selfdiff
