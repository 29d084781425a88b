#pragma once

// Determinant kernel over FFO fields, diffusion-map spectrum and distance,
// cluster extraction and a connected-components cross-check.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fpl/floquet.hpp"

namespace fpl {

/// Per-node factors with x = |det|^2 / eps^2 above this value are 1 to
/// double precision and are skipped.
inline constexpr double kKernelSkipX = 40.0;
/// A factor below this short-circuits the whole product to 0.
inline constexpr double kKernelFloor = 1e-300;

enum class KernelImpl { Auto, Scalar, Avx2 };

bool avx2_available();
std::string_view kernel_impl_name(KernelImpl impl);

/// log K_ij for two Bloch-vector fields in SoA layout. Returns -inf when a
/// factor falls below kKernelFloor.
double kernel_log_scalar(const double* ax, const double* ay, const double* az, const double* bx,
                         const double* by, const double* bz, std::size_t n, double epsilon);
double kernel_log_avx2(const double* ax, const double* ay, const double* az, const double* bx,
                       const double* by, const double* bz, std::size_t n, double epsilon);

/// K_ij = prod over (k, t) of (1 - exp(-|det(Q_i + Q_j)|^2 / eps^2)).
/// Throws GridMismatch.
double kernel_entry(const FfoField& a, const FfoField& b, double epsilon, KernelImpl impl = KernelImpl::Auto);

struct KernelMatrix {
  int n = 0;
  double epsilon = 0.0;
  std::vector<double> entries;  // row-major n x n

  double operator()(int i, int j) const { return entries[static_cast<std::size_t>(i) * n + j]; }
};

KernelMatrix kernel_matrix(std::span<const FfoField> data, double epsilon, int jobs = 0,
                           KernelImpl impl = KernelImpl::Auto);

struct DiffusionSpectrum {
  Eigen::VectorXd eigenvalues;   // descending, eigenvalues(0) = 1
  Eigen::MatrixXd right;         // column n = right eigenvector v_n of P
  Eigen::VectorXd row_sums;
};

/// Spectrum of P = D^-1 K via the symmetric form D^-1/2 K D^-1/2. Right
/// eigenvectors are normalized in the stationary-measure inner product.
/// Throws ZeroRow.
DiffusionSpectrum diffusion_spectrum(const KernelMatrix& k);

double diffusion_distance(const DiffusionSpectrum& s, int i, int j, int ell);

enum class ClusterMethod { DiffusionMap, ConnectedComponents };

struct ClusterAssignment {
  std::vector<int> labels;
  int n_clusters = 0;
  ClusterMethod method = ClusterMethod::DiffusionMap;
  int dominant_count = 0;
};

struct ClusterOptions {
  double dominance_threshold = 0.99;
  double ambiguous_low = 0.9;
  int ell = 1000;
  double cutoff_fraction = 1e-3;
};

/// Dominant eigenvectors after the constant one, scaled by lambda^ell, then single-linkage
/// merging below cutoff_fraction x embedding diameter. Labels are numbered in
/// order of first appearance. Throws AmbiguousSpectrum.
ClusterAssignment cluster(const DiffusionSpectrum& s, const ClusterOptions& opt = {});

/// Connected components of {K_ij > edge_threshold}.
ClusterAssignment components_oracle(const KernelMatrix& k, double edge_threshold = 0.5);

/// True when the two labelings induce the same partition.
bool same_partition(std::span<const int> a, std::span<const int> b);

}  // namespace fpl
