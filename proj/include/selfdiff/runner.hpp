#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "selfdiff/config.hpp"

namespace selfdiff {

// One file produced by a run, identified by its path relative to the output
// directory and fingerprinted so downstream consumers can detect staleness.
struct RunArtifact {
  std::string name;
  std::uint64_t bytes = 0;
  std::string sha256;
};

struct RunOutcome {
  std::string out_dir;
  std::vector<RunArtifact> artifacts;  // everything listed in the manifest
  std::string manifest_path;           // out_dir + "/manifest.json"
};

// Executes the configured experiment and writes its artifacts plus a
// manifest.json (effective config echo + hashed file list) into cfg.out_dir.
// Throws ValidationError on bad inputs and NumericalAbort on blow-ups; the
// CLI maps those to exit codes 2 and 3.
RunOutcome run_experiment(const ExperimentConfig& cfg);

// SHA-256 of a file's bytes as lowercase hex; used for the manifest.
std::string sha256_hex_of_file(const std::string& path);

}  // namespace selfdiff
