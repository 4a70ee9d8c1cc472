#include "selfdiff/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "selfdiff/errors.hpp"
#include "selfdiff/gibbs.hpp"

namespace selfdiff {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Raw sectioned key-value file plus the consumption bookkeeping that powers
// the unknown-key diagnostics and the effective-config echo.
class IniReader {
 public:
  static IniReader parse(const std::string& text) {
    IniReader r;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::size_t cut = line.find_first_of("#;");
      if (cut != std::string::npos) line = line.substr(0, cut);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ValidationError("config line " + std::to_string(lineno) +
                                ": malformed section header `" + line + "`");
        section = trim(line.substr(1, line.size() - 2));
        if (section.empty())
          throw ValidationError("config line " + std::to_string(lineno) +
                                ": empty section name");
        r.sections_.insert(section);
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw ValidationError("config line " + std::to_string(lineno) +
                              ": expected key = value, got `" + line + "`");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty())
        throw ValidationError("config line " + std::to_string(lineno) +
                              ": empty key");
      if (section.empty())
        throw ValidationError("config line " + std::to_string(lineno) +
                              ": key `" + key + "` outside any section");
      const std::string full = section + "." + key;
      if (!r.values_.emplace(full, value).second)
        throw ValidationError("config: duplicate key " + full);
    }
    return r;
  }

  bool has_section(const std::string& s) const { return sections_.count(s); }
  bool has_key(const std::string& section, const std::string& key) const {
    return values_.count(section + "." + key) > 0;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) {
    const auto it = values_.find(section + "." + key);
    const std::string v = it == values_.end() ? fallback : it->second;
    consume(section, key, v);
    return v;
  }

  double get_double(const std::string& section, const std::string& key,
                    double fallback) {
    const auto it = values_.find(section + "." + key);
    double v = fallback;
    if (it != values_.end()) v = parse_double(section + "." + key, it->second);
    consume(section, key, fmt_double(v));
    return v;
  }

  long long get_int(const std::string& section, const std::string& key,
                    long long fallback) {
    const auto it = values_.find(section + "." + key);
    long long v = fallback;
    if (it != values_.end()) {
      const std::string full = section + "." + key;
      try {
        std::size_t pos = 0;
        v = std::stoll(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw ValidationError(full + ": not an integer: `" + it->second + "`");
      }
    }
    consume(section, key, std::to_string(v));
    return v;
  }

  Vec2 get_vec2(const std::string& section, const std::string& key,
                Vec2 fallback) {
    const auto it = values_.find(section + "." + key);
    Vec2 v = fallback;
    if (it != values_.end()) {
      const auto parts = split_ws(it->second);
      if (parts.size() != 2)
        throw ValidationError(section + "." + key +
                              ": expected two numbers, got `" + it->second + "`");
      v = {parse_double(section + "." + key, parts[0]),
           parse_double(section + "." + key, parts[1])};
    }
    consume(section, key, fmt_double(v.x) + " " + fmt_double(v.y));
    return v;
  }

  std::vector<double> get_list(const std::string& section,
                               const std::string& key) {
    const auto it = values_.find(section + "." + key);
    std::vector<double> v;
    std::string echo;
    if (it != values_.end())
      for (const std::string& tok : split_ws(it->second)) {
        v.push_back(parse_double(section + "." + key, tok));
        if (!echo.empty()) echo += " ";
        echo += fmt_double(v.back());
      }
    consume(section, key, echo);
    return v;
  }

  // Everything present in the file but never consumed by the schema walk.
  std::vector<std::string> unknown_keys() const {
    std::vector<std::string> out;
    for (const auto& [full, value] : values_)
      if (!consumed_.count(full)) out.push_back(full);
    std::sort(out.begin(), out.end());
    return out;
  }

  const std::vector<std::array<std::string, 3>>& effective() const {
    return effective_;
  }

 private:
  static std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
  }

  static double parse_double(const std::string& full, const std::string& s) {
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ValidationError(full + ": not a number: `" + s + "`");
    }
  }

  void consume(const std::string& section, const std::string& key,
               const std::string& value) {
    consumed_.insert(section + "." + key);
    effective_.push_back({section, key, value});
  }

  std::map<std::string, std::string> values_;
  std::set<std::string> sections_;
  std::set<std::string> consumed_;
  std::vector<std::array<std::string, 3>> effective_;
};

[[noreturn]] void fail(const std::string& full, const std::string& why) {
  throw ValidationError(full + ": " + why);
}

void require_positive(const std::string& full, double v) {
  if (!(v > 0.0)) fail(full, "must be positive, got " + fmt_double(v));
}

}  // namespace

std::string run_kind_name(RunKind kind) {
  switch (kind) {
    case RunKind::Check: return "check";
    case RunKind::Simulate: return "simulate";
    case RunKind::Flow: return "flow";
    case RunKind::Analyze2d: return "analyze2d";
    case RunKind::PhaseDiagram: return "phase-diagram";
  }
  return "?";
}

std::optional<RunKind> run_kind_from(const std::string& name) {
  if (name == "check") return RunKind::Check;
  if (name == "simulate") return RunKind::Simulate;
  if (name == "flow") return RunKind::Flow;
  if (name == "analyze2d") return RunKind::Analyze2d;
  if (name == "phase-diagram") return RunKind::PhaseDiagram;
  return std::nullopt;
}

ExperimentConfig parse_config_text(const std::string& text,
                                   std::optional<RunKind> kind_override) {
  IniReader ini = IniReader::parse(text);
  ExperimentConfig cfg;

  // [run]
  const std::string kind_str = ini.get_string("run", "kind", "");
  if (kind_override) {
    cfg.kind = *kind_override;
  } else if (!kind_str.empty()) {
    const auto k = run_kind_from(kind_str);
    if (!k) fail("run.kind", "unknown run kind `" + kind_str + "`");
    cfg.kind = *k;
  } else {
    fail("run.kind", "missing (give a subcommand or set run.kind)");
  }
  cfg.out_dir = ini.get_string("run", "out", "out");
  cfg.threads = static_cast<int>(ini.get_int("run", "threads", 1));
  if (cfg.threads < 1) fail("run.threads", "must be >= 1");

  // [potential]: quartic coefficients or a named preset.
  const std::string pkind = ini.get_string("potential", "kind", "quartic");
  double pa = ini.get_double("potential", "a", 1.0);
  double pb = ini.get_double("potential", "b", 0.0);
  double pc = ini.get_double("potential", "c", 1.0);
  if (pkind != "quartic") {
    for (const char* key : {"a", "b", "c"})
      if (ini.has_key("potential", key))
        fail(std::string("potential.") + key,
             "conflicts with preset kind `" + pkind + "`");
    if (pkind == "well") {
      pa = 1.0; pb = 0.0; pc = 1.0;
    } else if (pkind == "double-well") {
      pa = 1.0; pb = -4.5; pc = 6.0625;
    } else if (pkind == "near-critical") {
      pa = 1.0; pb = -2.0; pc = 2.0;
    } else {
      fail("potential.kind", "unknown kind `" + pkind +
                                 "` (quartic, well, double-well, near-critical)");
    }
  }
  try {
    cfg.potential = ConfinementPotential::quartic_radial(pa, pb, pc);
  } catch (const ValidationError& e) {
    fail("potential.a", std::string("invalid coefficients: ") + e.what());
  }

  // [interaction]
  const std::string ikind = ini.get_string("interaction", "kind", "none");
  const bool has_theta = ini.has_key("interaction", "theta");
  const double theta = ini.get_double("interaction", "theta", 3.141592653589793);
  if (ikind == "none") {
    if (has_theta) fail("interaction.theta", "only valid for kind `rotation`");
    cfg.interaction = InteractionPotential::none();
  } else if (ikind == "rotation") {
    cfg.interaction = InteractionPotential::linear_rotation(theta);
  } else if (ikind == "symmetric-dot") {
    if (has_theta) fail("interaction.theta", "only valid for kind `rotation`");
    cfg.interaction = InteractionPotential::symmetric_dot();
  } else {
    fail("interaction.kind",
         "unknown kind `" + ikind + "` (none, rotation, symmetric-dot)");
  }

  // [grid]
  cfg.grid.rho_max = ini.get_double("grid", "rho_max", 0.0);
  if (cfg.grid.rho_max < 0.0) fail("grid.rho_max", "must be >= 0 (0 = auto)");
  cfg.grid.n_rho = static_cast<int>(ini.get_int("grid", "n_rho", 200));
  cfg.grid.n_angle = static_cast<int>(ini.get_int("grid", "n_angle", 256));
  if (cfg.grid.n_rho < 16) fail("grid.n_rho", "must be >= 16");
  if (cfg.grid.n_angle < 16) fail("grid.n_angle", "must be >= 16");

  // [sde]
  cfg.sde.x0 = ini.get_vec2("sde", "x0", {0.0, 0.0});
  cfg.sde.r = ini.get_double("sde", "r", 1.0);
  require_positive("sde.r", cfg.sde.r);
  cfg.sde.dt = ini.get_double("sde", "dt", 1e-3);
  require_positive("sde.dt", cfg.sde.dt);
  if (cfg.sde.dt >= cfg.sde.r)
    fail("sde.dt", "must be smaller than sde.r (first occupation weight)");
  cfg.sde.t_final = ini.get_double("sde", "t_final", 10.0);
  require_positive("sde.t_final", cfg.sde.t_final);
  cfg.sde.seed = static_cast<std::uint64_t>(ini.get_int("sde", "seed", 1));
  cfg.sde.thin_max = static_cast<int>(ini.get_int("sde", "thin_max", 20000));
  if (cfg.sde.thin_max != 0 && cfg.sde.thin_max < 16)
    fail("sde.thin_max", "must be 0 (disabled) or >= 16");
  cfg.sde.checkpoint_stride =
      static_cast<int>(ini.get_int("sde", "checkpoint_stride", 1000));
  if (cfg.sde.checkpoint_stride < 0) fail("sde.checkpoint_stride", "must be >= 0");
  cfg.sde.snapshot_times = ini.get_list("sde", "snapshot_times");
  for (double s : cfg.sde.snapshot_times)
    if (s < 0.0) fail("sde.snapshot_times", "times must be >= 0");
  cfg.sde.explosion_radius = ini.get_double("sde", "explosion_radius", 0.0);
  if (cfg.sde.explosion_radius < 0.0)
    fail("sde.explosion_radius", "must be >= 0 (0 = auto)");

  // [flow]
  cfg.flow.t_final = ini.get_double("flow", "t_final", 5.0);
  require_positive("flow.t_final", cfg.flow.t_final);
  cfg.flow.dt = ini.get_double("flow", "dt", 0.01);
  if (!(cfg.flow.dt > 0.0) || cfg.flow.dt > 0.5)
    fail("flow.dt", "must lie in (0, 0.5]");
  const std::string scheme = ini.get_string("flow", "scheme", "euler");
  if (scheme == "euler") {
    cfg.flow.scheme = FlowScheme::ExponentialEuler;
  } else if (scheme == "trapezoid") {
    cfg.flow.scheme = FlowScheme::ExponentialTrapezoid;
  } else {
    fail("flow.scheme", "unknown scheme `" + scheme + "` (euler, trapezoid)");
  }
  cfg.flow.snapshot_stride =
      static_cast<int>(ini.get_int("flow", "snapshot_stride", 0));
  if (cfg.flow.snapshot_stride < 0) fail("flow.snapshot_stride", "must be >= 0");
  cfg.flow.init_alpha = ini.get_double("flow", "init_alpha", 0.5);
  if (cfg.flow.init_alpha < 0.0) fail("flow.init_alpha", "must be >= 0");
  cfg.flow.init_phi = ini.get_double("flow", "init_phi", 0.0);

  // [check]
  cfg.check.box = ini.get_double("check", "box", 3.0);
  require_positive("check.box", cfg.check.box);
  cfg.check.n = static_cast<int>(ini.get_int("check", "n", 41));
  if (cfg.check.n < 5) fail("check.n", "must be >= 5");
  cfg.check.gauge_lambda = ini.get_double("check", "gauge_lambda", 0.0);
  if (cfg.check.gauge_lambda < 0.0) fail("check.gauge_lambda", "must be >= 0");

  // [analyze2d]
  cfg.analyze.alpha_max = ini.get_double("analyze2d", "alpha_max", 4.0);
  require_positive("analyze2d.alpha_max", cfg.analyze.alpha_max);
  cfg.analyze.n_alpha = static_cast<int>(ini.get_int("analyze2d", "n_alpha", 81));
  if (cfg.analyze.n_alpha < 2) fail("analyze2d.n_alpha", "must be >= 2");
  cfg.analyze.orbit_delta = ini.get_double("analyze2d", "orbit_delta", 0.0);
  cfg.analyze.portrait_t = ini.get_double("analyze2d", "portrait_t", 15.0);
  require_positive("analyze2d.portrait_t", cfg.analyze.portrait_t);

  // [phase-diagram]
  cfg.phase.n_theta = static_cast<int>(ini.get_int("phase-diagram", "n_theta", 32));
  if (cfg.phase.n_theta < 2) fail("phase-diagram.n_theta", "must be >= 2");
  cfg.phase.theta_min = ini.get_double("phase-diagram", "theta_min", 0.1);
  cfg.phase.theta_max = ini.get_double("phase-diagram", "theta_max", 6.2);
  if (!(cfg.phase.theta_max > cfg.phase.theta_min))
    fail("phase-diagram.theta_max", "must exceed theta_min");

  const std::vector<std::string> unknown = ini.unknown_keys();
  if (!unknown.empty()) {
    std::string msg = "unknown config key(s): ";
    for (std::size_t i = 0; i < unknown.size(); ++i) {
      if (i) msg += ", ";
      msg += unknown[i];
    }
    throw ValidationError(msg);
  }

  // Sections the chosen kind cannot run without.
  std::vector<std::string> required;
  switch (cfg.kind) {
    case RunKind::Check:
      required = {"potential", "interaction"};
      break;
    case RunKind::Simulate:
      required = {"potential", "interaction", "sde"};
      break;
    case RunKind::Flow:
      required = {"potential", "interaction"};
      break;
    case RunKind::Analyze2d:
      required = {"potential", "interaction"};
      break;
    case RunKind::PhaseDiagram:
      required = {"potential"};
      break;
  }
  std::vector<std::string> missing;
  for (const std::string& s : required)
    if (!ini.has_section(s)) missing.push_back(s);
  if (!missing.empty()) {
    std::string msg = "missing required section(s) for run kind `" +
                      run_kind_name(cfg.kind) + "`: ";
    for (std::size_t i = 0; i < missing.size(); ++i) {
      if (i) msg += ", ";
      msg += missing[i];
    }
    throw ValidationError(msg);
  }
  if (cfg.kind == RunKind::Analyze2d &&
      cfg.interaction.kind() == InteractionKind::None)
    throw ValidationError(
        "interaction.kind: analyze2d needs a rotation or symmetric-dot "
        "interaction");

  cfg.effective = ini.effective();
  // The run kind may come from the subcommand; echo the resolved value.
  for (auto& row : cfg.effective)
    if (row[0] == "run" && row[1] == "kind") row[2] = run_kind_name(cfg.kind);
  return cfg;
}

ExperimentConfig load_config(const std::string& path,
                             std::optional<RunKind> kind_override) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), kind_override);
}

std::string ExperimentConfig::effective_ini() const {
  std::ostringstream out;
  std::string section;
  for (const auto& [sec, key, value] : effective) {
    if (sec != section) {
      if (!section.empty()) out << "\n";
      out << "[" << sec << "]\n";
      section = sec;
    }
    out << key << " = " << value << "\n";
  }
  return out.str();
}

GridPtr make_grid_for(const ConfinementPotential& V, const GridConfig& grid) {
  const double rho_max =
      grid.rho_max > 0.0 ? grid.rho_max : auto_rho_max(V);
  return make_polar_grid(rho_max, grid.n_rho, grid.n_angle);
}

}  // namespace selfdiff
