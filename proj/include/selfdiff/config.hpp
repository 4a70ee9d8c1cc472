#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "selfdiff/potentials.hpp"
#include "selfdiff/sde.hpp"
#include "selfdiff/semiflow.hpp"

namespace selfdiff {

enum class RunKind { Check, Simulate, Flow, Analyze2d, PhaseDiagram };

std::string run_kind_name(RunKind kind);
std::optional<RunKind> run_kind_from(const std::string& name);

struct GridConfig {
  double rho_max = 0.0;  // 0 = auto cutoff from the potential
  int n_rho = 200;
  int n_angle = 256;
};

struct FlowConfig {
  double t_final = 5.0;
  double dt = 0.01;
  FlowScheme scheme = FlowScheme::ExponentialEuler;
  int snapshot_stride = 0;
  // Initial measure: tilt exp(alpha (x, v(phi)) - 2V), alpha = 0 is gamma.
  double init_alpha = 0.5;
  double init_phi = 0.0;
};

struct CheckConfig {
  double box = 3.0;
  int n = 41;
  double gauge_lambda = 0.0;
};

struct Analyze2dConfig {
  double alpha_max = 4.0;
  int n_alpha = 81;
  double orbit_delta = 0.0;
  double portrait_t = 15.0;
};

struct PhaseDiagramConfig {
  int n_theta = 32;
  double theta_min = 0.1;
  double theta_max = 6.2;
};

// Everything a run needs, assembled from a flat sectioned key-value file.
// All sections are parsed against the full schema regardless of the run
// kind (unknown keys are rejected with their section.key location); the
// kind only decides which sections must be present and which get used.
struct ExperimentConfig {
  RunKind kind = RunKind::Check;
  std::string out_dir = "out";
  int threads = 1;

  ConfinementPotential potential = ConfinementPotential::quartic_radial(1, 0, 1);
  InteractionPotential interaction = InteractionPotential::none();
  GridConfig grid;
  SdeConfig sde;
  FlowConfig flow;
  CheckConfig check;
  Analyze2dConfig analyze;
  PhaseDiagramConfig phase;

  // Every schema key with its effective (possibly defaulted) value, in
  // schema order; echoed into the manifest for reproducibility.
  std::vector<std::array<std::string, 3>> effective;  // {section, key, value}
  std::string effective_ini() const;
};

// Parses and validates a config. `kind_override` (the CLI subcommand) wins
// over the [run] kind; one of the two must be present. Throws
// ValidationError with messages naming section.key.
ExperimentConfig parse_config_text(const std::string& text,
                                   std::optional<RunKind> kind_override = {});
ExperimentConfig load_config(const std::string& path,
                             std::optional<RunKind> kind_override = {});

// Builds the polar grid from a GridConfig, resolving rho_max = 0 to the
// fitted cutoff for V.
GridPtr make_grid_for(const ConfinementPotential& V, const GridConfig& grid);

}  // namespace selfdiff
