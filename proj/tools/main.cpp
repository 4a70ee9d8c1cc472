#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "selfdiff/config.hpp"
#include "selfdiff/errors.hpp"
#include "selfdiff/runner.hpp"
#include "selfdiff/svg.hpp"

namespace {

using namespace selfdiff;

// Options shared by every config-driven subcommand.
struct RunFlags {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
};

void add_run_flags(CLI::App* sub, RunFlags& flags, bool with_seed) {
  sub->add_option("-c,--config", flags.config_path, "config file (INI)")
      ->required();
  sub->add_option("-o,--out", flags.out_dir,
                  "output directory (overrides run.out)");
  sub->add_option("-j,--threads", flags.threads,
                  "worker threads (overrides run.threads and "
                  "SELFDIFF_THREADS)");
  if (with_seed)
    sub->add_option("-s,--seed", flags.seed, "RNG seed (overrides sde.seed)");
}

// Keeps the manifest's config echo in sync with CLI overrides.
void patch_effective(ExperimentConfig& cfg, const std::string& section,
                     const std::string& key, const std::string& value) {
  for (auto& row : cfg.effective)
    if (row[0] == section && row[1] == key) {
      row[2] = value;
      return;
    }
  cfg.effective.push_back({section, key, value});
}

int run_kind_command(RunKind kind, const RunFlags& flags) {
  ExperimentConfig cfg = load_config(flags.config_path, kind);
  if (flags.out_dir) {
    cfg.out_dir = *flags.out_dir;
    patch_effective(cfg, "run", "out", cfg.out_dir);
  }
  if (flags.threads) {
    if (*flags.threads < 1)
      throw ValidationError("--threads: must be >= 1");
    cfg.threads = *flags.threads;
  } else if (const char* env = std::getenv("SELFDIFF_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) cfg.threads = n;
  }
  patch_effective(cfg, "run", "threads", std::to_string(cfg.threads));
  if (flags.seed) {
    cfg.sde.seed = *flags.seed;
    patch_effective(cfg, "sde", "seed", std::to_string(cfg.sde.seed));
  }

  const RunOutcome outcome = run_experiment(cfg);
  std::cout << run_kind_name(kind) << ": " << outcome.artifacts.size()
            << " artifact(s) in " << outcome.out_dir << "\n";
  for (const RunArtifact& a : outcome.artifacts)
    std::cout << "  " << a.name << "  (" << a.bytes << " bytes)\n";
  std::cout << "  manifest.json\n";
  return 0;
}

struct PlotFlags {
  std::string kind;
  std::vector<std::string> csv_paths;
  std::vector<std::string> labels;
  std::string out_dir = "out";
};

int run_plot(const PlotFlags& flags) {
  const std::optional<PlotKind> kind = plot_kind_from(flags.kind);
  if (!kind)
    throw ValidationError(
        "plot: unknown kind `" + flags.kind +
        "` (expected jcurve, portrait, overlay or phase-strip)");
  const bool overlay = *kind == PlotKind::Overlay;
  if (!overlay && flags.csv_paths.size() != 1)
    throw ValidationError("plot: kind `" + flags.kind +
                          "` takes exactly one --csv");
  if (overlay && flags.csv_paths.empty())
    throw ValidationError("plot: overlay needs at least one --csv");
  if (!flags.labels.empty() && flags.labels.size() != flags.csv_paths.size())
    throw ValidationError("plot: give one --label per --csv or none");

  std::string svg;
  if (overlay) {
    std::vector<std::pair<std::string, CsvTable>> labeled;
    for (std::size_t i = 0; i < flags.csv_paths.size(); ++i) {
      const std::string label =
          i < flags.labels.size()
              ? flags.labels[i]
              : std::filesystem::path(flags.csv_paths[i]).stem().string();
      labeled.emplace_back(label, read_csv_table(flags.csv_paths[i]));
    }
    svg = render_overlay_svg(labeled);
  } else {
    const CsvTable table = read_csv_table(flags.csv_paths[0]);
    switch (*kind) {
      case PlotKind::JCurve: svg = render_jcurve_svg(table); break;
      case PlotKind::Portrait: svg = render_portrait_svg(table); break;
      case PlotKind::PhaseStrip: svg = render_phase_strip_svg(table); break;
      case PlotKind::Overlay: break;  // handled above
    }
  }

  std::error_code ec;
  std::filesystem::create_directories(flags.out_dir, ec);
  if (ec)
    throw ValidationError("plot: cannot create directory " + flags.out_dir +
                          ": " + ec.message());
  std::string name = plot_kind_name(*kind);
  for (char& c : name)
    if (c == '-') c = '_';
  const std::string path = (std::filesystem::path(flags.out_dir) /
                            (name + ".svg")).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("plot: cannot write " + path);
  out << svg;
  out.close();
  std::cout << "plot: wrote " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"selfdiff: numerical laboratory for self-interacting "
               "diffusions and their measure-valued mean flow"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "selfdiff 0.1.0");

  RunFlags check_f, sim_f, flow_f, an_f, phase_f;
  CLI::App* sub_check = app.add_subcommand(
      "check", "validate the standing hypotheses and symmetry integrals");
  add_run_flags(sub_check, check_f, false);
  CLI::App* sub_sim = app.add_subcommand(
      "simulate", "run the self-interacting diffusion (Euler-Maruyama)");
  add_run_flags(sub_sim, sim_f, true);
  CLI::App* sub_flow = app.add_subcommand(
      "flow", "integrate the measure flow mu' = Pi(mu) - mu on the grid");
  add_run_flags(sub_flow, flow_f, false);
  CLI::App* sub_an = app.add_subcommand(
      "analyze2d", "reduced analysis of the planar rotation instance");
  add_run_flags(sub_an, an_f, false);
  CLI::App* sub_phase = app.add_subcommand(
      "phase-diagram", "regime sweep over the rotation angle theta");
  add_run_flags(sub_phase, phase_f, false);

  PlotFlags plot_f;
  CLI::App* sub_plot =
      app.add_subcommand("plot", "render an SVG chart from run CSV artifacts");
  sub_plot
      ->add_option("-k,--kind", plot_f.kind,
                   "jcurve | portrait | overlay | phase-strip")
      ->required();
  sub_plot->add_option("--csv", plot_f.csv_paths, "input CSV (repeatable)")
      ->required();
  sub_plot->add_option("--label", plot_f.labels,
                       "series label per CSV (overlay only)");
  sub_plot->add_option("-o,--out", plot_f.out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sub_check->parsed()) return run_kind_command(RunKind::Check, check_f);
    if (sub_sim->parsed()) return run_kind_command(RunKind::Simulate, sim_f);
    if (sub_flow->parsed()) return run_kind_command(RunKind::Flow, flow_f);
    if (sub_an->parsed()) return run_kind_command(RunKind::Analyze2d, an_f);
    if (sub_phase->parsed())
      return run_kind_command(RunKind::PhaseDiagram, phase_f);
    if (sub_plot->parsed()) return run_plot(plot_f);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
