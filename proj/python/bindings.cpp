#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>

#include "selfdiff/config.hpp"
#include "selfdiff/dictionary.hpp"
#include "selfdiff/errors.hpp"
#include "selfdiff/gibbs.hpp"
#include "selfdiff/measures.hpp"
#include "selfdiff/potentials.hpp"
#include "selfdiff/rotation2d.hpp"
#include "selfdiff/runner.hpp"
#include "selfdiff/sde.hpp"
#include "selfdiff/semiflow.hpp"

namespace py = pybind11;
using namespace selfdiff;

namespace {

// The C++ side shares grids through shared_ptr<const PolarGrid>; this thin
// handle keeps Python out of the holder-constness business.
struct GridHandle {
  GridPtr grid;
};

GridPtr unwrap(const GridHandle& g) {
  if (!g.grid) throw ValidationError("grid handle is empty");
  return g.grid;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "self-interacting diffusions: potentials, Gibbs map, measure "
            "flow, SDE and the planar rotation analysis";
  m.attr("__version__") = "0.1.0";

  py::register_exception<ValidationError>(m, "ValidationError",
                                          PyExc_ValueError);
  py::register_exception<NumericalAbort>(m, "NumericalAbort",
                                         PyExc_RuntimeError);

  py::class_<Vec2>(m, "Vec2")
      .def(py::init([] { return Vec2{}; }))
      .def(py::init([](double x, double y) { return Vec2{x, y}; }))
      .def(py::init([](const py::sequence& s) {
        if (py::len(s) != 2)
          throw ValidationError("Vec2 needs exactly two components");
        return Vec2{s[0].cast<double>(), s[1].cast<double>()};
      }))
      .def_readwrite("x", &Vec2::x)
      .def_readwrite("y", &Vec2::y)
      .def("norm", &Vec2::norm)
      .def("__iter__",
           [](const Vec2& v) {
             return py::iter(py::make_tuple(v.x, v.y));
           })
      .def("__repr__", [](const Vec2& v) {
        return "Vec2(" + std::to_string(v.x) + ", " + std::to_string(v.y) +
               ")";
      });
  py::implicitly_convertible<py::sequence, Vec2>();

  py::class_<GridHandle>(m, "PolarGrid")
      .def_property_readonly(
          "rho_max", [](const GridHandle& g) { return unwrap(g)->rho_max; })
      .def_property_readonly(
          "n_rho", [](const GridHandle& g) { return unwrap(g)->n_rho(); })
      .def_property_readonly(
          "n_angle", [](const GridHandle& g) { return unwrap(g)->n_angle(); })
      .def("__len__", [](const GridHandle& g) { return unwrap(g)->size(); });
  m.def(
      "make_polar_grid",
      [](double rho_max, int n_rho, int n_angle) {
        return GridHandle{make_polar_grid(rho_max, n_rho, n_angle)};
      },
      py::arg("rho_max"), py::arg("n_rho") = 200, py::arg("n_angle") = 256);

  py::class_<ConfinementPotential>(m, "ConfinementPotential")
      .def_static("quartic_radial", &ConfinementPotential::quartic_radial,
                  py::arg("a"), py::arg("b"), py::arg("c"))
      .def("value", &ConfinementPotential::value)
      .def("grad", &ConfinementPotential::grad)
      .def("radial", &ConfinementPotential::radial)
      .def_property_readonly("name", &ConfinementPotential::name);
  m.def("auto_rho_max", &auto_rho_max);

  py::class_<InteractionPotential>(m, "InteractionPotential")
      .def_static("none", &InteractionPotential::none)
      .def_static("linear_rotation", &InteractionPotential::linear_rotation,
                  py::arg("theta"))
      .def_static("symmetric_dot", &InteractionPotential::symmetric_dot)
      .def("value", &InteractionPotential::value)
      .def_property_readonly("theta", &InteractionPotential::theta)
      .def_property_readonly("is_zero", &InteractionPotential::is_zero)
      .def_property_readonly("is_symmetric", &InteractionPotential::is_symmetric)
      .def_property_readonly("name", &InteractionPotential::name);

  py::class_<HypothesisItem>(m, "HypothesisItem")
      .def_readonly("id", &HypothesisItem::id)
      .def_readonly("description", &HypothesisItem::description)
      .def_readonly("passed", &HypothesisItem::pass)
      .def_readonly("worst_value", &HypothesisItem::worst_value)
      .def_readonly("detail", &HypothesisItem::detail);
  py::class_<HypothesisReport>(m, "HypothesisReport")
      .def_readonly("items", &HypothesisReport::items)
      .def_readonly("kappa", &HypothesisReport::kappa)
      .def_readonly("convexity_K", &HypothesisReport::convexity_K)
      .def_readonly("growth_delta", &HypothesisReport::growth_delta)
      .def_readonly("curvature_alpha", &HypothesisReport::curvature_alpha)
      .def_readonly("hessian_M", &HypothesisReport::hessian_M)
      .def("all_pass", &HypothesisReport::all_pass)
      .def("to_text", &HypothesisReport::to_text);
  m.def("check_hypotheses", &check_hypotheses, py::arg("V"), py::arg("W"),
        py::arg("box") = 3.0, py::arg("n") = 41, py::arg("tol") = 1e-9,
        py::arg("gauge_lambda") = 0.0);

  py::class_<ParticleMeasure>(m, "ParticleMeasure")
      .def(py::init([](std::vector<Vec2> pts, std::vector<double> wts) {
             ParticleMeasure mu;
             mu.points = std::move(pts);
             mu.weights = std::move(wts);
             mu.validate();
             return mu;
           }),
           py::arg("points"), py::arg("weights"))
      .def_static("dirac", &ParticleMeasure::dirac)
      .def_readonly("points", &ParticleMeasure::points)
      .def_readonly("weights", &ParticleMeasure::weights)
      .def("__len__", &ParticleMeasure::size)
      .def("total_mass", &ParticleMeasure::total_mass)
      .def("mean", &ParticleMeasure::mean)
      .def("integrate", &ParticleMeasure::integrate);

  py::class_<GridMeasure2D>(m, "GridMeasure2D")
      .def_property_readonly(
          "grid", [](const GridMeasure2D& mu) { return GridHandle{mu.grid}; })
      .def_readonly("density", &GridMeasure2D::density)
      .def("total_mass", &GridMeasure2D::total_mass)
      .def("mean", &GridMeasure2D::mean)
      .def("integrate", &GridMeasure2D::integrate);

  m.def("v_norm",
        py::overload_cast<const ParticleMeasure&, const ConfinementPotential&>(
            &v_norm));
  m.def("v_norm",
        py::overload_cast<const GridMeasure2D&, const ConfinementPotential&>(
            &v_norm));
  m.def("v_norm_diff", &v_norm_diff);
  m.def("occupation_update", &occupation_update, py::arg("mu"), py::arg("x"),
        py::arg("t"), py::arg("dt"), py::arg("r"));
  m.def(
      "bin_particles",
      [](const ParticleMeasure& mu, const GridHandle& g) {
        return bin_particles(mu, unwrap(g));
      },
      py::arg("mu"), py::arg("grid"));

  py::class_<FunctionDictionary>(m, "FunctionDictionary")
      .def("__len__", &FunctionDictionary::size)
      .def("weight", &FunctionDictionary::weight)
      .def_property_readonly("names",
                             [](const FunctionDictionary& d) {
                               std::vector<std::string> out;
                               for (const DictEntry& e : d.entries)
                                 out.push_back(e.name);
                               return out;
                             })
      .def("moments",
           py::overload_cast<const ParticleMeasure&>(
               &FunctionDictionary::moments, py::const_))
      .def("moments", py::overload_cast<const GridMeasure2D&>(
                          &FunctionDictionary::moments, py::const_));
  m.def("default_dictionary", &default_dictionary, py::arg("V"),
        py::arg("rho_max"), py::arg("size") = 32);
  m.def("weak_distance", &weak_distance<ParticleMeasure, ParticleMeasure>);
  m.def("weak_distance", &weak_distance<ParticleMeasure, GridMeasure2D>);
  m.def("weak_distance", &weak_distance<GridMeasure2D, ParticleMeasure>);
  m.def("weak_distance", &weak_distance<GridMeasure2D, GridMeasure2D>);

  py::class_<GibbsResult>(m, "GibbsResult")
      .def_readonly("measure", &GibbsResult::measure)
      .def_readonly("z_value", &GibbsResult::z_value)
      .def_readonly("log_z", &GibbsResult::log_z);
  m.def(
      "pi_map",
      [](const ConfinementPotential& V, const InteractionPotential& W,
         const GridMeasure2D& mu) { return pi_map(V, W, mu); },
      py::arg("V"), py::arg("W"), py::arg("mu"));
  m.def(
      "pi_map",
      [](const ConfinementPotential& V, const InteractionPotential& W,
         const ParticleMeasure& mu, const GridHandle& g) {
        return pi_map(V, W, mu, unwrap(g));
      },
      py::arg("V"), py::arg("W"), py::arg("mu"), py::arg("grid"));
  m.def(
      "gamma_measure",
      [](const ConfinementPotential& V, const GridHandle& g) {
        return gamma_measure(V, unwrap(g));
      },
      py::arg("V"), py::arg("grid"));
  m.def(
      "tilted_gibbs_measure",
      [](const ConfinementPotential& V, const GridHandle& g, double alpha,
         double phi) { return tilted_gibbs_measure(V, unwrap(g), alpha, phi); },
      py::arg("V"), py::arg("grid"), py::arg("alpha"), py::arg("phi") = 0.0);
  m.def("free_energy", &free_energy);
  m.def(
      "d_pi",
      [](const ConfinementPotential& V, const InteractionPotential& W,
         const GridMeasure2D& mu, const GridMeasure2D& nu) {
        return d_pi(V, W, mu, nu);
      },
      py::arg("V"), py::arg("W"), py::arg("mu"), py::arg("nu"));
  m.def("d_free_energy", &d_free_energy);

  py::class_<FixedPointOptions>(m, "FixedPointOptions")
      .def(py::init<>())
      .def_readwrite("damping", &FixedPointOptions::damping)
      .def_readwrite("tol", &FixedPointOptions::tol)
      .def_readwrite("max_iter", &FixedPointOptions::max_iter);
  py::class_<FixedPointOutcome>(m, "FixedPointOutcome")
      .def_readonly("measure", &FixedPointOutcome::measure)
      .def_readonly("residual", &FixedPointOutcome::residual)
      .def_readonly("iterations", &FixedPointOutcome::iterations)
      .def_readonly("converged", &FixedPointOutcome::converged)
      .def_readonly("energy_monotone", &FixedPointOutcome::energy_monotone);
  m.def("fixed_point_iterate", &fixed_point_iterate, py::arg("V"),
        py::arg("W"), py::arg("mu0"), py::arg("opts") = FixedPointOptions{});

  m.def("flow_step", &flow_step, py::arg("V"), py::arg("W"), py::arg("mu"),
        py::arg("dt"));
  py::enum_<FlowScheme>(m, "FlowScheme")
      .value("exponential_euler", FlowScheme::ExponentialEuler)
      .value("exponential_trapezoid", FlowScheme::ExponentialTrapezoid);
  py::class_<FlowOptions>(m, "FlowOptions")
      .def(py::init<>())
      .def_readwrite("scheme", &FlowOptions::scheme)
      .def_readwrite("snapshot_stride", &FlowOptions::snapshot_stride)
      .def_readwrite("enforce_energy_monotone",
                     &FlowOptions::enforce_energy_monotone)
      .def_readwrite("energy_slack", &FlowOptions::energy_slack);
  py::class_<FlowTrajectory>(m, "FlowTrajectory")
      .def_readonly("times", &FlowTrajectory::times)
      .def_readonly("means", &FlowTrajectory::means)
      .def_readonly("vnorm_to_gamma", &FlowTrajectory::vnorm_to_gamma)
      .def_readonly("residual_pi", &FlowTrajectory::residual_pi)
      .def_readonly("v_masses", &FlowTrajectory::v_masses)
      .def_readonly("energies", &FlowTrajectory::energies)
      .def_readonly("energy_monotone", &FlowTrajectory::energy_monotone)
      .def_readonly("snapshot_times", &FlowTrajectory::snapshot_times)
      .def_readonly("snapshots", &FlowTrajectory::snapshots)
      .def_readonly("final_state", &FlowTrajectory::final_state);
  m.def("integrate_flow", &integrate_flow, py::arg("V"), py::arg("W"),
        py::arg("mu0"), py::arg("T"), py::arg("dt"),
        py::arg("opts") = FlowOptions{});

  py::class_<PicardResult>(m, "PicardResult")
      .def_readonly("epsilon", &PicardResult::epsilon)
      .def_readonly("beta", &PicardResult::beta)
      .def_readonly("c_beta", &PicardResult::c_beta)
      .def_readonly("c_beta_prime", &PicardResult::c_beta_prime)
      .def_readonly("predicted_ratio", &PicardResult::predicted_ratio)
      .def_readonly("sup_distances", &PicardResult::sup_distances)
      .def_readonly("ratios", &PicardResult::ratios);
  m.def("picard_local", &picard_local, py::arg("V"), py::arg("W"),
        py::arg("mu0"), py::arg("epsilon"), py::arg("n_iter"),
        py::arg("n_time") = 16);

  py::class_<HullCheckRow>(m, "HullCheckRow")
      .def_readonly("t", &HullCheckRow::t)
      .def_readonly("dist", &HullCheckRow::dist)
      .def_readonly("bound", &HullCheckRow::bound)
      .def_readonly("ratio", &HullCheckRow::ratio);
  py::class_<HullContractionReport>(m, "HullContractionReport")
      .def_readonly("rows", &HullContractionReport::rows)
      .def_readonly("d0", &HullContractionReport::d0)
      .def_readonly("max_ratio", &HullContractionReport::max_ratio)
      .def_readonly("hull_size", &HullContractionReport::hull_size)
      .def_readonly("degenerate", &HullContractionReport::degenerate)
      .def_readonly("passed", &HullContractionReport::pass);
  m.def("hull_contraction_check", &hull_contraction_check, py::arg("V"),
        py::arg("W"), py::arg("mu0"), py::arg("T"), py::arg("dt"),
        py::arg("hull_samples"), py::arg("seed") = 2026);

  py::class_<SdeConfig>(m, "SdeConfig")
      .def(py::init<>())
      .def_readwrite("x0", &SdeConfig::x0)
      .def_readwrite("r", &SdeConfig::r)
      .def_readwrite("dt", &SdeConfig::dt)
      .def_readwrite("t_final", &SdeConfig::t_final)
      .def_readwrite("seed", &SdeConfig::seed)
      .def_readwrite("thin_max", &SdeConfig::thin_max)
      .def_readwrite("checkpoint_stride", &SdeConfig::checkpoint_stride)
      .def_readwrite("snapshot_times", &SdeConfig::snapshot_times)
      .def_readwrite("explosion_radius", &SdeConfig::explosion_radius);
  py::class_<SdeCheckpoint>(m, "SdeCheckpoint")
      .def_readonly("t", &SdeCheckpoint::t)
      .def_readonly("x", &SdeCheckpoint::x)
      .def_readonly("mean_mu", &SdeCheckpoint::mean_mu)
      .def_readonly("int_v", &SdeCheckpoint::int_v);
  py::class_<SdePath>(m, "SdePath")
      .def_readonly("checkpoints", &SdePath::checkpoints)
      .def_readonly("snapshot_times", &SdePath::snapshot_times)
      .def_readonly("snapshots", &SdePath::snapshots)
      .def_readonly("final_measure", &SdePath::final_measure)
      .def_readonly("final_position", &SdePath::final_position)
      .def_readonly("final_mean", &SdePath::final_mean)
      .def_readonly("final_int_v", &SdePath::final_int_v)
      .def_readonly("sup_int_v", &SdePath::sup_int_v)
      .def_readonly("r", &SdePath::r)
      .def_readonly("dt", &SdePath::dt)
      .def_readonly("t_final", &SdePath::t_final);
  m.def("simulate_frozen", &simulate_frozen, py::arg("V"), py::arg("W"),
        py::arg("mu"), py::arg("cfg"));
  m.def(
      "simulate_self_interacting",
      [](const ConfinementPotential& V, const InteractionPotential& W,
         const SdeConfig& cfg, std::optional<ParticleMeasure> mu0) {
        return simulate_self_interacting(
            V, W, cfg, mu0 ? *mu0 : ParticleMeasure::dirac(cfg.x0));
      },
      py::arg("V"), py::arg("W"), py::arg("cfg"),
      py::arg("mu0") = std::nullopt);
  m.def("time_change", &time_change, py::arg("t"), py::arg("r"));
  m.def("time_change_inverse", &time_change_inverse, py::arg("s"),
        py::arg("r"));
  m.def("derive_seed", &derive_seed, py::arg("seed"), py::arg("replica"));
  m.def("deficit_snapshot_times", &deficit_snapshot_times, py::arg("t_list"),
        py::arg("t_window"), py::arg("r"), py::arg("n_s"));
  m.def(
      "pseudotrajectory_deficit",
      [](const SdePath& path, const ConfinementPotential& V,
         const InteractionPotential& W, const std::vector<double>& t_list,
         double t_window, const FunctionDictionary& dict, const GridHandle& g,
         double flow_dt, int n_s) {
        return pseudotrajectory_deficit(path, V, W, t_list, t_window, dict,
                                        unwrap(g), flow_dt, n_s);
      },
      py::arg("path"), py::arg("V"), py::arg("W"), py::arg("t_list"),
      py::arg("t_window"), py::arg("dict"), py::arg("grid"),
      py::arg("flow_dt") = 0.01, py::arg("n_s") = 10);

  py::class_<RadialDensity>(m, "RadialDensity")
      .def_static("from_potential", &RadialDensity::from_potential,
                  py::arg("V"), py::arg("rho_max"), py::arg("n_rho") = 200,
                  py::arg("n_angle") = 256, py::arg("jacobian") = true)
      .def_readonly("rho_max", &RadialDensity::rho_max)
      .def_readonly("m2", &RadialDensity::m2)
      .def("total_mass", &RadialDensity::total_mass);
  py::class_<HValues>(m, "HValues")
      .def_readonly("h", &HValues::h)
      .def_readonly("h_prime", &HValues::h_prime)
      .def_readonly("h_tilde", &HValues::h_tilde)
      .def_readonly("log_h", &HValues::log_h)
      .def_readonly("ratio", &HValues::ratio)
      .def_readonly("ratio_tilde", &HValues::ratio_tilde);
  m.def("h_functions", &h_functions, py::arg("rd"), py::arg("alpha"));
  m.def("j_alpha", &j_alpha, py::arg("rd"), py::arg("theta"),
        py::arg("alpha"));
  m.def("j_prime_fd", &j_prime_fd, py::arg("rd"), py::arg("theta"),
        py::arg("alpha"), py::arg("h") = 1e-5);
  py::class_<Alpha1Result>(m, "Alpha1Result")
      .def_readonly("alpha1", &Alpha1Result::alpha1)
      .def_readonly("residual", &Alpha1Result::residual)
      .def_readonly("iterations", &Alpha1Result::iterations);
  m.def("alpha1_root", &alpha1_root, py::arg("rd"), py::arg("theta"),
        py::arg("tol") = 1e-12);
  py::class_<RegimeClassification>(m, "RegimeClassification")
      .def_property_readonly("regime", &RegimeClassification::regime_name)
      .def_readonly("theta", &RegimeClassification::theta)
      .def_readonly("m2", &RegimeClassification::m2)
      .def_readonly("cos_theta_m2", &RegimeClassification::cos_theta_m2)
      .def_readonly("alpha1", &RegimeClassification::alpha1)
      .def_readonly("t_theta", &RegimeClassification::t_theta)
      .def_readonly("boundary_degenerate",
                    &RegimeClassification::boundary_degenerate);
  m.def("classify_regime", &classify_regime, py::arg("rd"), py::arg("theta"),
        py::arg("boundary_tol") = 1e-12);
  py::class_<ReducedState>(m, "ReducedState")
      .def(py::init([](double alpha, double sigma) {
             return ReducedState{alpha, sigma};
           }),
           py::arg("alpha"), py::arg("sigma"))
      .def_readwrite("alpha", &ReducedState::alpha)
      .def_readwrite("sigma", &ReducedState::sigma);
  py::class_<ReducedTrajectory>(m, "ReducedTrajectory")
      .def_readonly("times", &ReducedTrajectory::times)
      .def_readonly("alpha", &ReducedTrajectory::alpha)
      .def_readonly("sigma", &ReducedTrajectory::sigma);
  m.def("integrate_reduced", &integrate_reduced, py::arg("rd"),
        py::arg("theta"), py::arg("s0"), py::arg("T"), py::arg("dt") = 0.01);
  m.def(
      "limit_measure",
      [](const RadialDensity& rd, Vec2 v, double alpha, const GridHandle& g) {
        return limit_measure(rd, v, alpha, unwrap(g));
      },
      py::arg("rd"), py::arg("v"), py::arg("alpha"), py::arg("grid"));
  m.def(
      "periodic_orbit_measure",
      [](const RadialDensity& rd, double theta, double alpha1, double delta,
         const GridHandle& g, int n_s, bool literal_v) {
        return periodic_orbit_measure(rd, theta, alpha1, delta, unwrap(g),
                                      n_s, literal_v);
      },
      py::arg("rd"), py::arg("theta"), py::arg("alpha1"), py::arg("delta"),
      py::arg("grid"), py::arg("n_s") = 2048, py::arg("literal_v") = false);
  py::class_<SymmetryIntegrals>(m, "SymmetryIntegrals")
      .def_readonly("i1", &SymmetryIntegrals::i1)
      .def_readonly("i2", &SymmetryIntegrals::i2);
  m.def("symmetry_integrals", &symmetry_integrals, py::arg("rd"),
        py::arg("y"), py::arg("phi"));

  py::class_<RunArtifact>(m, "RunArtifact")
      .def_readonly("name", &RunArtifact::name)
      .def_readonly("bytes", &RunArtifact::bytes)
      .def_readonly("sha256", &RunArtifact::sha256);
  py::class_<RunOutcome>(m, "RunOutcome")
      .def_readonly("out_dir", &RunOutcome::out_dir)
      .def_readonly("artifacts", &RunOutcome::artifacts)
      .def_readonly("manifest_path", &RunOutcome::manifest_path);
  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def_property_readonly(
          "kind",
          [](const ExperimentConfig& cfg) { return run_kind_name(cfg.kind); })
      .def_readwrite("out_dir", &ExperimentConfig::out_dir)
      .def_readwrite("threads", &ExperimentConfig::threads)
      .def("effective_ini", &ExperimentConfig::effective_ini);
  m.def(
      "load_config",
      [](const std::string& path, const std::optional<std::string>& kind) {
        std::optional<RunKind> rk;
        if (kind) {
          rk = run_kind_from(*kind);
          if (!rk)
            throw ValidationError("unknown run kind `" + *kind + "`");
        }
        return load_config(path, rk);
      },
      py::arg("path"), py::arg("kind") = std::nullopt);
  m.def(
      "parse_config_text",
      [](const std::string& text, const std::optional<std::string>& kind) {
        std::optional<RunKind> rk;
        if (kind) {
          rk = run_kind_from(*kind);
          if (!rk)
            throw ValidationError("unknown run kind `" + *kind + "`");
        }
        return parse_config_text(text, rk);
      },
      py::arg("text"), py::arg("kind") = std::nullopt);
  m.def("run_experiment", &run_experiment, py::arg("cfg"));
}
