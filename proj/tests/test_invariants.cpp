#include <doctest.h>

#include <cmath>

#include "fpl/error.hpp"
#include "fpl/floquet.hpp"
#include "fpl/invariants.hpp"

using namespace fpl;

namespace {

constexpr double kT = 1.0;

std::vector<Spinor> equatorial_loop(int n, int winding) {
  std::vector<Spinor> s;
  for (int i = 0; i < n; ++i) {
    const double th = winding * 2 * kPi * i / n;
    s.push_back({cplx{std::sqrt(0.5), 0.0}, std::polar(std::sqrt(0.5), th)});
  }
  return s;
}

Polyline3 circle(std::array<double, 3> c, int plane, double r, int n = 200) {
  Polyline3 p;
  for (int i = 0; i < n; ++i) {
    const double a = 2 * kPi * i / n;
    std::array<double, 3> q = c;
    q[plane] += r * std::cos(a);
    q[(plane + 1) % 3] += r * std::sin(a);
    p.points.push_back(q);
  }
  return p;
}

FloquetSolution dclass(double j1, double j2, GridSpec g = {128, 64, 1, 64}) {
  return floquet_solve(DClass{j1 * kPi, j2 * kPi, 0.5 * kPi, kT}, g);
}

GapWindings aiii(double re, double im, double g) {
  return aiii_gap_windings(floquet_solve(Aiii{re * kPi, im * kPi, g * kPi, kT}, GridSpec{64, 32, 1, 64}));
}

}  // namespace

TEST_CASE("equatorial winding") {
  CHECK(winding_equatorial(equatorial_loop(32, 0)).value == 0);
  CHECK(winding_equatorial(equatorial_loop(32, 1)).value == 1);
  CHECK(winding_equatorial(equatorial_loop(32, -2)).value == -2);
  std::vector<Spinor> polar(8, Spinor{cplx{1, 0}, cplx{0, 0}});
  CHECK_THROWS_AS(winding_equatorial(polar), Error);
}

TEST_CASE("AIII gap windings at the three phase points") {
  // With g = +0.2 pi/T the pi-gap winding carries the opposite sign to the
  // labels (0,1) and (1,1); g -> -g is a half-period time shift and flips it.
  const GapWindings top = aiii(0.2, 0.2, 0.2);
  CHECK(top.w0 == 1);
  CHECK(top.w_pi == 0);
  const GapWindings bottom = aiii(0.6, 0.2, 0.2);
  CHECK(bottom.w0 == 0);
  CHECK(bottom.w_pi == -1);
  const GapWindings mid = aiii(0.25, 0.40, 0.2);
  CHECK(mid.w0 == 1);
  CHECK(mid.w_pi == -1);

  const GapWindings bottom_shifted = aiii(0.6, 0.2, -0.2);
  CHECK(bottom_shifted.w0 == 0);
  CHECK(bottom_shifted.w_pi == 1);
  const GapWindings mid_shifted = aiii(0.25, 0.40, -0.2);
  CHECK(mid_shifted.w0 == 1);
  CHECK(mid_shifted.w_pi == 1);
}

TEST_CASE("3D winding numbers") {
  const PiecewiseCustom flat{{Segment{1.0, [](const Momentum&) { return PauliCoeffs{0, 0, 0, 0.5 * kPi}; }}}, kT, 2};
  CHECK(winding3(flat, 12, 0.0).value == 0);
  CHECK(winding3(flat, 12, kPi).value == 0);

  const TwoDA j27{2.7 * kPi, 0.5 * kPi, kT};
  CHECK(winding3(j27, 24, 0.0).value == 1);
  CHECK(winding3(j27, 24, kPi).value == 1);

  const DriveModel q = quench_construction(1, -1);
  CHECK(winding3(q, 24, 0.0).value == -1);
  CHECK(winding3(q, 24, kPi).value == -2);
}

TEST_CASE("Chern number at fixed time") {
  std::vector<BlochVector> up(16 * 16, BlochVector{0, 0, 1});
  CHECK(chern_fixed_t(up, 16).value == 0);

  const GridSpec g{24, 12, 2, 64};
  const FfoField pi_phase = ffo(floquet_solve(TwoDA{1.5 * kPi, 0.5 * kPi, kT}, g));
  CHECK(chern_fixed_t(pi_phase, 0).value == -1);
  const FfoField j27 = ffo(floquet_solve(TwoDA{2.7 * kPi, 0.5 * kPi, kT}, g));
  CHECK(chern_fixed_t(j27, 0).value == 0);
}

TEST_CASE("preimage of a constant field is empty") {
  std::vector<BlochVector> up(6 * 6 * 4, BlochVector{0, 0, 1});
  CHECK(preimage_loops(up, {6, 6, 4}, {0, 0, 1}).empty());
}

TEST_CASE("linking of simple curves") {
  const Polyline3 a = circle({0, 0, 0}, 0, 1.0);
  const Polyline3 far = circle({5, 0, 0}, 0, 1.0);
  CHECK(std::abs(gauss_linking(a, far)) < 1e-9);
  const Polyline3 hopf = circle({1, 0, 0}, 2, 1.0);
  CHECK(std::abs(std::abs(gauss_linking(a, hopf)) - 1.0) < 1e-9);

  // Inside a large periodic box the images do not contribute.
  const IntegerResult l = linking_number({a}, {hopf}, {40, 40, 40});
  CHECK(std::abs(l.value) == 1);
  CHECK(linking_number({a}, {far}, {40, 40, 40}).value == 0);
}

TEST_CASE("linking rejects families with net winding") {
  Polyline3 line;
  for (int i = 0; i < 10; ++i) line.points.push_back({double(i), 2.0, 2.0});
  line.wraps = {1, 0, 0};
  const Polyline3 ring = circle({5, 2, 2}, 1, 1.0);
  CHECK_THROWS_AS(linking_number({line}, {ring}, {10, 10, 10}), Error);
}

TEST_CASE("preimage linking of the 2D drive") {
  const GridSpec g{24, 12, 2, 64};
  const double h = std::sqrt(0.5);
  for (const auto& [j, want] : std::vector<std::pair<double, int>>{{0.4, 0}, {2.7, 1}}) {
    const auto field = field_3d(ffo(floquet_solve(TwoDA{j * kPi, 0.5 * kPi, kT}, g)));
    const auto red = preimage_loops(field, {24, 24, 12}, {0, 0, -1});
    const auto blue = preimage_loops(field, {24, 24, 12}, {-h, 0, -h});
    CHECK(linking_number(red, blue, {24, 24, 12}).value == want);
  }
}

TEST_CASE("Pontryagin residue") {
  const Residue a = pontryagin_from_gaps(0, 0);
  CHECK(a.value == 0);
  const Residue b = pontryagin_from_gaps(-1, -2);
  CHECK(b.value == 0);
  CHECK(b.modulus == -2);
  const Residue c = pontryagin_from_gaps(0, -1);
  CHECK(c.value == 1);
  CHECK(c.modulus == -2);
  CHECK(pontryagin_from_gaps(1, 1).value == 1);
  CHECK(pontryagin_from_gaps(1, 1).modulus == 0);
}

TEST_CASE("class D invariants") {
  const FloquetSolution t21 = dclass(2, 1);
  CHECK(dclass_overlap_product(t21).value == 1);
  CHECK(half_bz_chern(t21).value == -1);
  CHECK(half_bz_chern(t21).value + half_bz_chern(t21, true).value == 0);
  CHECK(pfaffian_sign_check(t21) == 1);
  const DClassZ2 z21 = dclass_invariants(t21);
  CHECK(z21.v0 == -1);
  CHECK(z21.v_pi == -1);

  CHECK(half_bz_chern(dclass(1, 0.5)).value == 0);

  const DClassZ2 trivial = dclass_invariants(dclass(0, -1));
  CHECK(trivial.v0 == 1);
  CHECK(trivial.v_pi == 1);
  const DClassZ2 zero_pi = dclass_invariants(dclass(1.5, 1));
  CHECK(zero_pi.v0 == -1);
  CHECK(zero_pi.v_pi == -1);
  const DClassZ2 t32 = dclass_invariants(dclass(3, 2));
  CHECK(t32.v0 == 1);
  CHECK(t32.v_pi == -1);
  CHECK(t32.c_h == 1);
}

TEST_CASE("Pfaffian of a 2x2 skew matrix") {
  const CMat2 x{{cplx{0, 0}, cplx{2.5, 0}, cplx{-2.5, 0}, cplx{0, 0}}};
  CHECK(pfaffian2(x) == cplx{2.5, 0});
  CHECK_THROWS_AS(pfaffian2(CMat2::identity()), Error);
}

TEST_CASE("quench construction table entries") {
  const DriveModel a = quench_construction(0, -1);
  CHECK(winding3(a, 24, 0.0).value == -1);
  CHECK(winding3(a, 24, kPi).value == -1);
  const DriveModel b = quench_construction(-1, 1);
  const int w0 = winding3(b, 24, 0.0).value;
  const int wpi = winding3(b, 24, kPi).value;
  CHECK(w0 == 1);
  CHECK(wpi == 2);
  CHECK(pontryagin_from_gaps(w0, wpi).value == 0);
  const DriveModel z = quench_construction(0, 0);
  CHECK(winding3(z, 24, 0.0).value == 0);
  CHECK(winding3(z, 24, kPi).value == 0);
  CHECK_THROWS_AS(quench_construction(3, 0), Error);
}

TEST_CASE("invariant record JSON omits absent fields") {
  InvariantRecord r;
  r.w0 = 1;
  r.w_pi = 0;
  const auto j = to_json(r);
  CHECK(j.size() == 2);
  CHECK(record_from_json(j) == r);
}
