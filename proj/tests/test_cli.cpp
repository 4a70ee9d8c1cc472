#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "selfdiff/runner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// End-to-end tests drive the installed binary the way a user would.
struct CliDir {
  fs::path root;

  explicit CliDir(const std::string& name) {
    root = fs::temp_directory_path() / ("selfdiff_cli_" + name);
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~CliDir() { fs::remove_all(root); }

  fs::path write(const std::string& name, const std::string& content) const {
    const fs::path p = root / name;
    std::ofstream out(p);
    out << content;
    return p;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_cli(const CliDir& dir, const std::string& args,
            std::string* combined = nullptr) {
  const fs::path out_file = dir.root / "cli_stdout.txt";
  const fs::path err_file = dir.root / "cli_stderr.txt";
  const std::string cmd = std::string(SELFDIFF_BIN) + " " + args + " > " +
                          out_file.string() + " 2> " + err_file.string();
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  if (combined) *combined = slurp(out_file) + slurp(err_file);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

const char* kSimConfig = R"([potential]
kind = well

[interaction]
kind = rotation
theta = 2.5

[sde]
dt = 0.001
t_final = 1
seed = 7
checkpoint_stride = 200
)";

}  // namespace

TEST_CASE("version and usage exits") {
  CliDir dir("usage");
  std::string out;
  CHECK(run_cli(dir, "--version", &out) == 0);
  CHECK(out.find("selfdiff 0.1.0") != std::string::npos);

  CHECK(run_cli(dir, "", &out) == 2);  // a subcommand is required
  CHECK(run_cli(dir, "orbit", &out) == 2);
  CHECK(run_cli(dir, "check", &out) == 2);  // --config is required
}

TEST_CASE("check run writes verified artifacts") {
  CliDir dir("check");
  const fs::path cfg = dir.write("cfg.ini", R"([potential]
kind = double-well

[interaction]
kind = rotation
theta = 2.0

[check]
n = 21
)");
  const fs::path out = dir.root / "run";
  std::string text;
  CHECK(run_cli(dir,
                "check -c " + cfg.string() + " -o " + out.string(), &text) == 0);
  CHECK(text.find("artifact(s)") != std::string::npos);
  CHECK(fs::exists(out / "hypotheses.txt"));
  CHECK(fs::exists(out / "symmetry.csv"));

  // The manifest must list every artifact with its actual digest.
  const json manifest = json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["kind"] == "check");
  CHECK(manifest["config"].get<std::string>().find("theta = 2") !=
        std::string::npos);
  REQUIRE(manifest["artifacts"].size() >= 2);
  for (const json& a : manifest["artifacts"]) {
    const fs::path p = out / a["name"].get<std::string>();
    REQUIRE(fs::exists(p));
    CHECK(a["bytes"].get<std::uint64_t>() == fs::file_size(p));
    CHECK(a["sha256"].get<std::string>() ==
          selfdiff::sha256_hex_of_file(p.string()));
  }
}

TEST_CASE("simulate is reproducible and honours the seed flag") {
  CliDir dir("sim");
  const fs::path cfg = dir.write("cfg.ini", kSimConfig);
  const fs::path out1 = dir.root / "a";
  const fs::path out2 = dir.root / "b";
  const fs::path out3 = dir.root / "c";
  CHECK(run_cli(dir, "simulate -c " + cfg.string() + " -o " + out1.string()) == 0);
  CHECK(run_cli(dir, "simulate -c " + cfg.string() + " -o " + out2.string()) == 0);
  CHECK(run_cli(dir, "simulate -c " + cfg.string() + " -o " + out3.string() +
                         " -s 123") == 0);

  using selfdiff::sha256_hex_of_file;
  const std::string h1 = sha256_hex_of_file((out1 / "path.csv").string());
  CHECK(h1 == sha256_hex_of_file((out2 / "path.csv").string()));
  CHECK(h1 != sha256_hex_of_file((out3 / "path.csv").string()));

  const json manifest = json::parse(slurp(out3 / "manifest.json"));
  CHECK(manifest["config"].get<std::string>().find("seed = 123") !=
        std::string::npos);
  CHECK(fs::exists(out1 / "final_measure.csv"));
  CHECK(fs::exists(out1 / "summary.txt"));
}

TEST_CASE("flow run produces a trajectory") {
  CliDir dir("flow");
  const fs::path cfg = dir.write("cfg.ini", R"([potential]
kind = well

[interaction]
kind = none

[grid]
n_rho = 48
n_angle = 32

[flow]
t_final = 0.5
dt = 0.05
snapshot_stride = 5
)");
  const fs::path out = dir.root / "run";
  CHECK(run_cli(dir, "flow -c " + cfg.string() + " -o " + out.string()) == 0);
  const std::string traj = slurp(out / "trajectory.csv");
  CHECK(traj.find("t,mean_x,mean_y,vnorm_to_gamma,energy_E,residual_pi") == 0);
  CHECK(fs::exists(out / "final_state.csv"));
  CHECK(fs::exists(out / "flow_snapshots.csv"));
}

TEST_CASE("analyze2d labels the supercritical pi-rotation regime") {
  CliDir dir("an");
  const fs::path cfg = dir.write("cfg.ini", R"([potential]
kind = double-well

[interaction]
kind = rotation
theta = 3.141592653589793

[grid]
n_rho = 80
n_angle = 64

[analyze2d]
alpha_max = 3
n_alpha = 13
portrait_t = 2
)");
  const fs::path out = dir.root / "run";
  CHECK(run_cli(dir, "analyze2d -c " + cfg.string() + " -o " + out.string()) == 0);
  const std::string analysis = slurp(out / "analysis.txt");
  CHECK(analysis.find("regime = converge_to_random_fixed") != std::string::npos);
  CHECK(fs::exists(out / "jcurve.csv"));
  CHECK(fs::exists(out / "limit_measure.csv"));
  CHECK(fs::exists(out / "fixedpoint.csv"));
  CHECK(fs::exists(out / "portrait.svg"));

  SUBCASE("plot renders the produced jcurve") {
    const fs::path plots = dir.root / "plots";
    CHECK(run_cli(dir, "plot -k jcurve --csv " +
                           (out / "jcurve.csv").string() + " -o " +
                           plots.string()) == 0);
    const std::string svg = slurp(plots / "jcurve.svg");
    CHECK(svg.rfind("<svg", 0) == 0);

    std::string err;
    CHECK(run_cli(dir, "plot -k pie --csv " + (out / "jcurve.csv").string(),
                  &err) == 2);
    CHECK(err.find("unknown kind") != std::string::npos);
  }
}

TEST_CASE("phase-diagram sweep with threads") {
  CliDir dir("phase");
  const fs::path cfg = dir.write("cfg.ini", R"([potential]
kind = double-well

[phase-diagram]
n_theta = 8
theta_min = 0.5
theta_max = 6.0
)");
  const fs::path out = dir.root / "run";
  CHECK(run_cli(dir, "phase-diagram -c " + cfg.string() + " -o " +
                         out.string() + " -j 2") == 0);
  const std::string csv = slurp(out / "phase_diagram.csv");
  CHECK(csv.find("theta,m2,cos_theta_m2,regime,alpha1,T_theta") == 0);
  int lines = 0;
  for (char c : csv)
    if (c == '\n') ++lines;
  CHECK(lines == 9);  // header + 8 rows
  CHECK(fs::exists(out / "phase_strip.svg"));
}

TEST_CASE("error exits distinguish bad input from numerical failure") {
  CliDir dir("err");
  const fs::path bad = dir.write("bad.ini", R"([potential]
kind = well

[interaction]
kind = none

[flow]
dt = 0.6
)");
  std::string text;
  CHECK(run_cli(dir, "flow -c " + bad.string(), &text) == 2);
  CHECK(text.find("error:") != std::string::npos);
  CHECK(text.find("flow.dt") != std::string::npos);

  CHECK(run_cli(dir, "check -c " + (dir.root / "missing.ini").string(),
                &text) == 2);
  CHECK(text.find("cannot open config file") != std::string::npos);

  const fs::path explode = dir.write("explode.ini", R"([potential]
kind = well

[interaction]
kind = none

[sde]
x0 = 1.2 0
explosion_radius = 1.0
t_final = 1
)");
  CHECK(run_cli(dir, "simulate -c " + explode.string() + " -o " +
                         (dir.root / "boom").string(), &text) == 3);
  CHECK(text.find("numerical abort:") != std::string::npos);
}
