#pragma once

// Dataset generation, invariant annotation, clustering and phase-diagram
// export shared by the command-line tool and the acceptance runner.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpl/config.hpp"
#include "fpl/dataset.hpp"
#include "fpl/invariants.hpp"
#include "fpl/learn.hpp"

namespace fpl {

/// Solves every parameter point; samples whose gap is below gap_tol are
/// kept but flagged excluded.
Dataset generate(const RunConfig& c);

/// Rebuilds the drive of one stored sample.
DriveModel sample_model(const Dataset& d, const SampleMeta& s);
double dataset_period(const Dataset& d);

struct InvariantOptions {
  double gap_tol = 1e-3;  // pi/T
  bool link = true;       // preimage linking for 2D samples with chern = 0
};

/// Every invariant that applies to the model family. Throws on failure.
InvariantRecord compute_invariants(const DriveModel& m, const GridSpec& g, const InvariantOptions& opt = {});

/// Annotates every non-excluded sample in place. Per-sample failures are
/// stored as {"error": message} and the run continues. Returns the number
/// of failed samples.
int annotate(Dataset& d, int jobs, const InvariantOptions& opt = {});

struct ClusterReport {
  std::vector<std::int64_t> ids;  // non-excluded samples, dataset order
  double epsilon = 0.0;
  ClusterOptions options;
  double edge_threshold = 0.5;
  Eigen::VectorXd eigenvalues;
  std::optional<ClusterAssignment> diffusion;  // empty when the spectrum is ambiguous
  std::string ambiguity;
  ClusterAssignment oracle;
  bool oracle_agrees = false;
  std::vector<std::array<double, 2>> embedding;
  double kernel_seconds = 0.0;
  std::string kernel_impl;
};

struct ClusterSettings {
  double epsilon = 0.01;
  ClusterOptions options;
  double edge_threshold = 0.5;
  int jobs = 0;
  KernelImpl impl = KernelImpl::Auto;
};

/// Kernel, spectrum, diffusion clusters and the components oracle over the
/// non-excluded samples. AmbiguousSpectrum is recorded, not thrown.
ClusterReport cluster_dataset(const Dataset& d, const ClusterSettings& s);

nlohmann::json report_json(const ClusterReport& r);
/// Reads back the parts of a report needed for diagrams.
ClusterReport report_from_json(const nlohmann::json& j);

struct DiagramRow {
  std::int64_t id = 0;
  std::vector<double> params;
  bool excluded = false;
  int label = -1;  // -1 for excluded or unclustered samples
  double gap0 = 0.0;
  double gap_pi = 0.0;
  nlohmann::json invariants;
  int ny_sign_0 = 0;   // sign of n_y at k = 0, t = 0 (D class)
  int ny_sign_pi = 0;  // same at k = pi
};

/// Joins samples with labels and invariants. Throws IdMismatch when the
/// report names samples the dataset does not have (or vice versa).
std::vector<DiagramRow> merge_rows(const Dataset& d, const ClusterReport& r);

/// Invariant key used for per-cluster consistency, e.g. "w0=1 w_pi=0".
std::string invariant_key(const Dataset& d, const DiagramRow& row);

struct Consistency {
  int clusters = 0;
  int disagreeing_clusters = 0;
  int unannotated = 0;
  std::vector<std::string> detail;  // one line per cluster
};

/// Checks that every cluster carries a single invariant key.
Consistency check_consistency(const Dataset& d, const std::vector<DiagramRow>& rows);

std::string rows_csv(const Dataset& d, const std::vector<DiagramRow>& rows);
std::string invariants_csv(const Dataset& d);
std::string eigenvalues_csv(const ClusterReport& r);
std::string diagram_svg(const Dataset& d, const std::vector<DiagramRow>& rows);

void write_text(const std::filesystem::path& p, const std::string& text);

}  // namespace fpl
