#pragma once

// Run configuration for the command-line pipeline. Model parameters are in
// units of pi/T throughout.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpl/floquet.hpp"

namespace fpl {

struct SweepAxis {
  std::string name;
  double min = 0.0;
  double max = 0.0;
  int count = 1;
};

enum class Sampling { Grid, Random };

struct KernelSettings {
  double epsilon = 0.01;
  double threshold = 0.99;
  int ell = 1000;
  double cutoff = 1e-3;
  double edge_threshold = 0.5;
};

struct OutputSettings {
  std::filesystem::path dir = "out";
  bool csv = true;
  bool json = true;
  bool svg = true;
};

struct RunConfig {
  std::string model;  // aiii | two_da | dclass
  double period = 1.0;
  std::map<std::string, double> fixed;
  std::vector<SweepAxis> sweep;  // at most two axes
  Sampling sampling = Sampling::Grid;
  int samples = 0;                      // random sampling only
  std::optional<std::uint64_t> seed;    // mandatory for random sampling
  GridSpec grid;
  double gap_tol = 1e-3;  // pi/T
  KernelSettings kernel;
  OutputSettings output;
  int jobs = 0;
};

/// Parameter names of a model family, in constructor order.
const std::vector<std::string>& model_parameters(const std::string& model);

/// Throws ConfigError with "origin:line: field: message" diagnostics.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Cross-field checks (run again after command-line overrides).
void validate(const RunConfig& c);

/// Canonical form used for the config hash; excludes output and jobs.
nlohmann::json config_json(const RunConfig& c);
std::string config_hash(const RunConfig& c);

/// Parameter points (pi/T units, order of model_parameters restricted to
/// swept names) in deterministic order. Grid sweeps run the first axis
/// slowest.
std::vector<std::vector<double>> sample_points(const RunConfig& c);

/// Builds the drive from swept values plus fixed parameters.
DriveModel make_model(const std::string& model, const std::vector<std::string>& names,
                      const std::vector<double>& values, const std::map<std::string, double>& fixed,
                      double period);

}  // namespace fpl
