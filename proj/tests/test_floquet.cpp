#include <doctest.h>

#include <cmath>

#include "fpl/error.hpp"
#include "fpl/floquet.hpp"
#include "fpl/invariants.hpp"

using namespace fpl;

namespace {

constexpr double kT = 1.0;

PiecewiseCustom constant_drive(PauliCoeffs c) {
  return PiecewiseCustom{{Segment{1.0, [c](const Momentum&) { return c; }}}, kT, 1};
}

bool near(const CMat2& a, const CMat2& b, double tol) { return max_abs(a - b) <= tol; }

}  // namespace

TEST_CASE("hamiltonian_at substitutes the drive protocols") {
  const double g = 0.1 * kPi;
  const PauliCoeffs a = pauli_at(Aiii{0.2 * kPi, 0.2 * kPi, g, kT}, {0.0, 0.0}, 0.0);
  CHECK(a.ax == doctest::Approx(0.2 * kPi + 0.6 * kPi + 2 * g));
  CHECK(a.ay == doctest::Approx(0.2 * kPi));
  CHECK(a.az == doctest::Approx(0.0));

  const PauliCoeffs b = pauli_at(TwoDA{1.3 * kPi, 0.5 * kPi, kT}, {0.4, -1.1}, 0.9);
  CHECK(b.ax == 0.0);
  CHECK(b.ay == 0.0);
  CHECK(b.az == doctest::Approx(0.5 * kPi));

  const PauliCoeffs d = pauli_at(DClass{2 * kPi, kPi, 0.5 * kPi, kT}, {0.0, 0.0}, 0.75);
  CHECK(d.ax == 0.0);
  CHECK(d.ay == doctest::Approx(kPi));
  CHECK(d.az == doctest::Approx(0.0));

  CHECK_THROWS_AS(pauli_at(Aiii{0, 0, 0, kT}, {0, 0}, 1.5), Error);
  CHECK_THROWS_AS(validate(DriveModel{Aiii{0, 0, 0, -1.0}}), Error);
}

TEST_CASE("evolve_path of a constant drive") {
  const DriveModel m = constant_drive({0, 0, 0, 1});
  const GridSpec g{4, 8, 1, 16};
  const auto path = evolve_path(m, {0.0, 0.0}, g);
  REQUIRE(path.size() == 9);
  for (int i = 0; i <= 8; ++i) {
    const double t = i * kT / 8;
    CHECK(near(path[i], CMat2{{std::polar(1.0, -t), cplx{0, 0}, cplx{0, 0}, std::polar(1.0, t)}}, 1e-14));
  }
}

TEST_CASE("floquet_solve rejects a closed gap") {
  const DriveModel zero = constant_drive({0, 0, 0, 0});
  CHECK_THROWS_AS(floquet_solve(zero, GridSpec{8, 4, 1, 8}), Error);
  SolveOptions opt;
  opt.throw_on_gap = false;
  const FloquetSolution s = floquet_solve(zero, GridSpec{8, 4, 1, 8}, opt);
  CHECK(s.gap_closed);
  CHECK(s.closed_gap == GapKind::Zero);
}

TEST_CASE("floquet_solve quasienergies and unitarity") {
  const FloquetSolution s = floquet_solve(Aiii{0.2 * kPi, 0.2 * kPi, 0.2 * kPi, kT}, GridSpec{32, 16, 1, 64});
  for (int ik = 0; ik < s.k_points(); ++ik) {
    CHECK(s.eps_minus[ik] <= s.eps_plus[ik]);
    CHECK(s.eps_minus[ik] > -kPi / kT);
    CHECK(s.eps_plus[ik] <= kPi / kT);
  }
  for (const auto& u : s.paths) CHECK(is_unitary(u, 1e-10));
  CHECK(s.gap0 > 0);
  CHECK(s.gap_pi > 0);
}

TEST_CASE("FFO definition and gauge invariance") {
  FfoField f;
  f.nx = {0.0};
  f.ny = {0.0};
  f.nz = {1.0};
  CHECK(near(f.q(0), CMat2{{cplx{-1, 0}, cplx{0, 0}, cplx{0, 0}, cplx{1, 0}}}, 0));

  const Spinor psi{cplx{0.6, 0.1}, cplx{-0.3, 0.7}};
  const double n = norm(psi);
  const Spinor p{psi[0] / n, psi[1] / n};
  const BlochVector a = bloch_vector(p);
  const cplx ph = std::polar(1.0, 2.1);
  const BlochVector b = bloch_vector({ph * p[0], ph * p[1]});
  CHECK(std::abs(a.nx - b.nx) < 1e-14);
  CHECK(std::abs(a.ny - b.ny) < 1e-14);
  CHECK(std::abs(a.nz - b.nz) < 1e-14);
}

TEST_CASE("FFO of the 0-phase AIII point winds once at t = 0") {
  const FloquetSolution s = floquet_solve(Aiii{0.2 * kPi, 0.2 * kPi, 0.2 * kPi, kT}, GridSpec{64, 32, 1, 64});
  const std::span<const Spinor> slice(s.states_minus.data(), s.k_points());
  CHECK(winding_equatorial(slice).value == 1);
  const std::span<const Spinor> half(s.states_minus.data() + 16 * s.k_points(), s.k_points());
  CHECK(winding_equatorial(half).value == 1);
}

TEST_CASE("effective_hamiltonian branch window and cut") {
  const CMat2 u{{std::polar(1.0, -kPi / 3), cplx{0, 0}, cplx{0, 0}, std::polar(1.0, kPi / 3)}};
  const EffectiveHamiltonian h = effective_hamiltonian(std::vector<CMat2>{u}, 0.0, kT);
  const CMat2& e = h.h_eff[0];
  CHECK(std::abs(e(0, 1)) < 1e-14);
  CHECK(e(0, 0).real() == doctest::Approx(-5 * kPi / 3));
  CHECK(e(1, 1).real() == doctest::Approx(-kPi / 3));
  CHECK(near(expm_hermitian2(e, kT), u, 1e-12));
  CHECK_THROWS_AS(effective_hamiltonian(std::vector<CMat2>{CMat2::identity()}, 0.0, kT), Error);
}

TEST_CASE("periodized evolution is periodic and chiral-structured") {
  const FloquetSolution s = floquet_solve(Aiii{0.2 * kPi, 0.2 * kPi, 0.2 * kPi, kT}, GridSpec{32, 16, 1, 64});
  const auto ue = periodized_evolution(s, effective_hamiltonian(s, 0.0));
  const int nk = s.k_points();
  for (int ik = 0; ik < nk; ++ik) {
    CHECK(near(ue[ik], CMat2::identity(), 1e-12));
    CHECK(near(ue[16 * nk + ik], CMat2::identity(), 1e-8));
    const CMat2& half = ue[8 * nk + ik];
    CHECK(std::abs(half(0, 0)) < 1e-8);
    CHECK(std::abs(half(1, 1)) < 1e-8);
  }
}

TEST_CASE("symmetry residuals") {
  const GridSpec g{32, 16, 1, 64};
  const SymmetryReport a = symmetry_report(Aiii{0.3 * kPi, 0.7 * kPi, 0.2 * kPi, kT}, g);
  REQUIRE(a.chiral);
  CHECK(*a.chiral < 1e-10);
  const SymmetryReport d = symmetry_report(DClass{1.5 * kPi, kPi, 0.5 * kPi, kT}, g);
  REQUIRE(d.particle_hole);
  CHECK(*d.particle_hole < 1e-10);
  CHECK(*d.bloch_nx < 1e-7);
  CHECK(*d.bloch_ny < 1e-7);
  CHECK(*d.bloch_nz < 1e-7);
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS((GridSpec{0, 4, 1, 8}.validate()), Error);
  CHECK_NOTHROW((GridSpec{8, 4, 1, 8}.validate()));
}
