#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace cornerlab::cli {

struct ExperimentConfig {
  std::string name;
  std::size_t n_half = 0;
  double alpha = 1.0;
  double sigma = 1.0;
  std::string scale;  // empty: the subcommand picks its natural speed
  std::vector<double> t_grid;
  std::size_t n_replicas = 1;
  std::uint64_t seed = 1;
  std::string init = "flat";
  std::string output = "runs";
  /// eps, grid_m, tolerance, site, level
  std::map<std::string, double> knobs;

  double knob(const std::string& key, double fallback) const;
};

const std::vector<std::string>& subcommands();

/// Preset defaults for a subcommand ("smoke" or "full").
ExperimentConfig default_config(const std::string& subcommand, const std::string& preset);

/// Overlays the keys present in a YAML document on `base`.  Errors name the
/// origin, line and column.
ExperimentConfig parse_config(const std::string& text, const std::string& origin, ExperimentConfig base);
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base);

/// Deterministic YAML rendering; the run hash is taken over this text.
std::string canonical_config(const std::string& subcommand, const ExperimentConfig& cfg);
/// SHA-1 of "blob <size>\0" + content, as git computes it.
std::string git_blob_hash(const std::string& content);

struct RunResult {
  bool pass = true;
  nlohmann::json summary = nlohmann::json::object();
};

/// Runs one subcommand, writing its CSVs and report.json into dir.
RunResult run_experiment(const std::string& subcommand, const ExperimentConfig& cfg,
                         const std::filesystem::path& dir, unsigned threads);

/// Writes plot.py next to the CSVs of a finished run.
void emit_plots(const std::filesystem::path& run_dir);

/// Entry point of the executable.  0: all checks passed, 2: a check failed,
/// 1: usage, configuration or runtime error.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace cornerlab::cli
