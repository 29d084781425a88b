#pragma once

// Analytic topological invariants used to label and check the clusters:
// equatorial and gap windings, Chern numbers, the 3D winding number,
// preimage linking, the Pontryagin residue and the class-D Z2 pair.

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "fpl/floquet.hpp"

namespace fpl {

struct IntegerResult {
  int value = 0;
  double raw = 0.0;
};

struct InvariantRecord {
  std::optional<int> w0;
  std::optional<int> w_pi;
  std::optional<int> nu0;
  std::optional<int> nu_half;
  std::optional<int> chern;
  std::optional<int> link;
  std::optional<int> nu_value;
  std::optional<int> nu_modulus;
  std::optional<int> v0;
  std::optional<int> v_pi;
  std::optional<int> c_h;

  friend bool operator==(const InvariantRecord&, const InvariantRecord&) = default;
};

/// Absent fields are omitted, never null.
nlohmann::json to_json(const InvariantRecord& r);
InvariantRecord record_from_json(const nlohmann::json& j);

/// Winding of the Bloch-vector azimuth of a closed k-loop of states.
/// Throws NonEquatorialState when |n_z| exceeds nz_tol anywhere.
IntegerResult winding_equatorial(std::span<const Spinor> states, double nz_tol = 0.1);

struct GapWindings {
  int w0 = 0;
  int w_pi = 0;
  double raw0 = 0.0;
  double raw_pi = 0.0;
};

/// W = (i/2 pi) closed integral of u^-1 du over k, with u the upper
/// off-diagonal entry of U_0(k, T/2) and the upper diagonal entry of
/// U_pi(k, T/2). Throws ChiralStructureViolated if the structure residual
/// exceeds structure_tol.
GapWindings aiii_gap_windings(std::span<const CMat2> u0_half, std::span<const CMat2> upi_half,
                              double structure_tol = 1e-6);

/// Convenience: builds U_0 and U_pi at t = T/2 from a solved AIII chain.
/// nt must be even.
GapWindings aiii_gap_windings(const FloquetSolution& sol, double structure_tol = 1e-6);

struct Winding3Options {
  int gauss_nodes = 6;      // per constant piece (or per stored step for smooth drives)
  double accept = 0.2;      // NotConverged beyond this distance from an integer
};

/// 3D winding number of U_eps over (q1, q2, t) for a 2D drive. Uses
/// fourth-order central differences in momentum and the exact time
/// derivative of U_eps with Gauss-Legendre quadrature in t.
IntegerResult winding3(const DriveModel& m, int nk, double branch, const Winding3Options& opt = {});

/// Same integral with central differences in all three directions on a
/// stored grid of U_eps (layout of FloquetSolution::paths, nt + 1 slices).
IntegerResult winding3_grid(std::span<const CMat2> u_eps, int nk, int nt, double period,
                            double accept = 0.2);

/// Chern number of a unit-vector field over an nk x nk periodic grid
/// (index i * nk + j). Link-variable plaquette sum; exact integer.
/// Throws SingularPlaquette.
IntegerResult chern_fixed_t(std::span<const BlochVector> field, int nk);
IntegerResult chern_fixed_t(const FfoField& f, int t_index);

struct Polyline3 {
  std::vector<std::array<double, 3>> points;  // grid units, unwrapped
  bool closed = true;
  std::array<int, 3> wraps{0, 0, 0};
};

/// Preimage of target under a periodic field sampled on an n1 x n2 x nt
/// grid (index (i * n2 + j) * nt + m). Points are in grid units. The
/// target is perturbed (deterministically) if a node lies within 1e-3 rad.
/// Throws OpenCurve.
std::vector<Polyline3> preimage_loops(std::span<const BlochVector> field, std::array<int, 3> shape,
                                      BlochVector target);

/// Reorders an FfoField (t, k) into the preimage layout ((q1, q2), t).
std::vector<BlochVector> field_3d(const FfoField& f);

/// Gauss linking number between two loop families on the 3-torus with the
/// given period per axis. Individual loops may wrap as long as each family
/// has zero net winding; b is summed over lattice translates up to
/// image_radius periods. Throws LoopsTooClose (loops closer than min_dist
/// or nonzero net winding) or NotConverged.
IntegerResult linking_number(const std::vector<Polyline3>& a, const std::vector<Polyline3>& b,
                             std::array<double, 3> periods, double min_dist = 0.25, int image_radius = 2);

/// Linking number of two loops in R^3 (no periodic images).
double gauss_linking(const Polyline3& a, const Polyline3& b);

struct Residue {
  int value = 0;
  int modulus = 0;
};

/// nu = w_pi mod 2 (w_pi - w0), representative in (-|m|/2, |m|/2].
Residue pontryagin_from_gaps(int w0, int w_pi);

/// V0 V_pi = 2 |<phi(pi,t)|phi(0,t)>|^2 - 1 averaged over stored t.
/// Throws NotQuantized (|value| < 0.99) or NotConverged (t spread > 1e-6).
IntegerResult dclass_overlap_product(const FloquetSolution& sol);

/// Berry flux over k in [0, pi] and the full period.
IntegerResult half_bz_chern(const FloquetSolution& sol, bool upper_half = false);

struct DClassZ2 {
  int v0 = 1;
  int v_pi = 1;
  int c_h = 0;
  int cross_v0 = 1;
  int cross_v_pi = 1;
  double overlap = 0.0;
};

/// Overlap/C_h route cross-checked against eigenphase crossings of U(0,t)
/// and U(pi,t) through +1 and -1. Throws MethodMismatch.
DClassZ2 dclass_invariants(const FloquetSolution& sol, int refine = 8);

/// Crossing counts only: {crossings through +1, crossings through -1}
/// summed over k = 0 and k = pi.
std::array<int, 2> dclass_crossings(const DriveModel& m, int nt_fine);

/// Pf of a 2x2 skew-symmetric matrix.
cplx pfaffian2(const CMat2& x, double skew_tol = 1e-8);

/// sgn(Pf[-i H(0) T] Pf[-i H(pi) T]) for H_eff on the principal branch at
/// the two high-symmetry momenta. Throws NotSkewSymmetric.
int pfaffian_sign_check(const CMat2& h0, const CMat2& hpi, double period, double skew_tol = 1e-8);
int pfaffian_sign_check(const FloquetSolution& sol);

/// Two-step quench drive with period pi. Segment 1 is (1 + delta) H_f for
/// T/(1 + delta), segment 2 is -H_i. H_f, H_i are flattened two-band Chern
/// insulators. Throws UnsupportedChern for |c| > 2 or delta outside (0, 0.05].
DriveModel quench_construction(int c_i, int c_f, double delta = 0.01);

/// Unit vector of the flattened Chern-c Hamiltonian used above.
BlochVector chern_insulator_vector(int c, const Momentum& k);

}  // namespace fpl
