#pragma once

// Model catalog and Floquet engine: instantaneous Bloch Hamiltonians,
// time-ordered propagators, quasienergies, Floquet-Bloch state paths and the
// flattened Floquet operator (FFO).

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fpl/numerics.hpp"

namespace fpl {

struct Momentum {
  double kx = 0.0;
  double ky = 0.0;
};

/// Modulated SSH chain, class AIII. gamma(t) = 0.6 pi/T + 2 g cos(2 pi t / T).
struct Aiii {
  double theta_re = 0.0;
  double theta_im = 0.0;
  double g = 0.0;
  double period = 1.0;
};

/// Five-step square-lattice drive, class A. Segments of length T/5.
struct TwoDA {
  double j = 0.0;
  double delta = 0.0;
  double period = 1.0;
};

/// Two-step chain, class D. First branch on t <= T/2.
struct DClass {
  double j1 = 0.0;
  double j2 = 0.0;
  double g = 0.0;
  double period = 1.0;
};

struct Segment {
  double fraction = 1.0;
  std::function<PauliCoeffs(const Momentum&)> coeffs;
};

/// Piecewise-constant drive. Segment fractions must sum to 1.
struct PiecewiseCustom {
  std::vector<Segment> segments;
  double period = 1.0;
  int dims = 1;
};

using DriveModel = std::variant<Aiii, TwoDA, DClass, PiecewiseCustom>;

double period_of(const DriveModel& m);
int dims_of(const DriveModel& m);
std::string tag_of(const DriveModel& m);

/// Throws InvalidModel if T <= 0 or custom fractions do not sum to 1.
void validate(const DriveModel& m);

/// Uniform grid over [0, 2 pi)^dims x [0, T). Momentum coordinates are
/// model charts, see momentum_at.
struct GridSpec {
  int nk = 64;
  int nt = 32;
  int dims = 1;
  int substeps = 64;

  int k_points() const { return dims == 2 ? nk * nk : nk; }
  /// Throws InvalidGrid.
  void validate() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Default grid per model family (1D: 64 x 32, 2D: 24 x 24 x 12).
GridSpec default_grid(const DriveModel& m);

/// Physical momentum of grid node (i, j). For TwoDA the Hamiltonian only
/// depends on kx - ky, 2 kx and kx + ky, so the grid covers the primitive
/// cell q in [0, 2 pi)^2 with kx = (q1 - q2)/2, ky = (q1 + q2)/2. Other
/// models use k = q directly.
Momentum momentum_at(const DriveModel& m, const GridSpec& g, int i, int j = 0);

/// Pauli coefficients of H(k, t). t in [0, T]; throws OutOfRangeTime.
PauliCoeffs pauli_at(const DriveModel& m, const Momentum& k, double t);
CMat2 hamiltonian_at(const DriveModel& m, const Momentum& k, double t);

/// Interior times where a piecewise-constant drive switches; empty for a
/// smooth drive.
std::vector<double> breakpoints(const DriveModel& m);
bool is_piecewise(const DriveModel& m);

/// U(k, t) from t0 to t1 (t0 <= t1), exact on constant pieces and
/// midpoint-sampled with `substeps` factors per unit of `dt_ref` otherwise.
CMat2 evolve_between(const DriveModel& m, const Momentum& k, double t0, double t1, int substeps,
                     double dt_ref);

/// U(k, t_m) for t_m = m T / nt, m = 0..nt (the last entry is U(k, T)).
std::vector<CMat2> evolve_path(const DriveModel& m, const Momentum& k, const GridSpec& g);

enum class GapKind { Zero, Pi };

struct SolveOptions {
  /// Minimal quasienergy distance to 0 or pi/T, in units of pi/T.
  double gap_tol = 1e-3;
  /// When false a closed gap is recorded in the solution instead of thrown.
  bool throw_on_gap = true;
  NumericsTolerances tol{};
};

struct FloquetSolution {
  DriveModel model;
  GridSpec grid;
  double period = 1.0;
  std::vector<double> eps_minus;  // per k node, rad/T
  std::vector<double> eps_plus;
  /// States at (t_m, k) with index m * k_points + ik, m = 0..nt-1.
  std::vector<Spinor> states_minus;
  std::vector<Spinor> states_plus;
  /// U(k, t_m) with the same layout but m = 0..nt.
  std::vector<CMat2> paths;
  double gap0 = 0.0;    // rad/T
  double gap_pi = 0.0;  // rad/T
  bool gap_closed = false;
  GapKind closed_gap = GapKind::Zero;

  int k_points() const { return grid.k_points(); }
  const Spinor& minus(int m, int ik) const { return states_minus[m * k_points() + ik]; }
  const CMat2& path(int m, int ik) const { return paths[m * k_points() + ik]; }
  const CMat2& u_period(int ik) const { return paths[grid.nt * k_points() + ik]; }
};

/// Quasienergies, gaps and Floquet-Bloch state paths. Throws GapClosed when
/// a gap is below the tolerance and options.throw_on_gap is set.
FloquetSolution floquet_solve(const DriveModel& m, const GridSpec& g, const SolveOptions& opt = {});

/// FFO Bloch vectors n with Q = -n.sigma, stored per component in (t, k)
/// order like FloquetSolution states.
struct FfoField {
  GridSpec grid;
  std::vector<double> nx;
  std::vector<double> ny;
  std::vector<double> nz;
  std::int64_t sample_id = 0;
  std::vector<double> params;

  std::size_t size() const { return nx.size(); }
  BlochVector at(std::size_t i) const { return {nx[i], ny[i], nz[i]}; }
  CMat2 q(std::size_t i) const { return pauli_compose({0.0, -nx[i], -ny[i], -nz[i]}); }
};

FfoField ffo(const FloquetSolution& sol);

struct EffectiveHamiltonian {
  double branch = 0.0;
  double period = 1.0;
  std::vector<CMat2> h_eff;  // per k node
};

/// H_eff = (i/T) log U with eigenvalues in ((branch - 2 pi)/T, branch/T].
/// Throws BranchCutHit when an eigenphase lies within branch_tol of the cut.
EffectiveHamiltonian effective_hamiltonian(const std::vector<CMat2>& u_period, double branch,
                                           double period, double branch_tol = 1e-6,
                                           const NumericsTolerances& tol = {});
EffectiveHamiltonian effective_hamiltonian(const FloquetSolution& sol, double branch,
                                           double branch_tol = 1e-6);

/// U_eps(k, t_m) = U(k, t_m) exp(i H_eff t_m), same layout as sol.paths.
std::vector<CMat2> periodized_evolution(const FloquetSolution& sol, const EffectiveHamiltonian& h);

struct SymmetryReport {
  std::optional<double> chiral;          // AIII: S^-1 H(k,t) S + H(k,-t)
  std::optional<double> particle_hole;   // D: H(k,t) + H*(-k,t)
  std::optional<double> bloch_nx;        // D: nx(k,t) + nx(-k,t)
  std::optional<double> bloch_ny;        // D: ny(k,t) - ny(-k,t)
  std::optional<double> bloch_nz;        // D: nz(k,t) + nz(-k,t)
};

SymmetryReport symmetry_report(const DriveModel& m, const GridSpec& g);

}  // namespace fpl
