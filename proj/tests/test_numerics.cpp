#include <doctest.h>

#include <cmath>
#include <random>

#include "fpl/error.hpp"
#include "fpl/numerics.hpp"

using namespace fpl;

namespace {

bool near(const CMat2& a, const CMat2& b, double tol) { return max_abs(a - b) <= tol; }

CMat2 diag(cplx a, cplx b) { return CMat2{{a, cplx{0, 0}, cplx{0, 0}, b}}; }

// exp(-i H dt) by scaling and squaring a 12th-order Taylor series.
CMat2 taylor_expm(const CMat2& h, double dt) {
  int s = 0;
  double scale = max_abs(h) * std::abs(dt);
  while (scale > 0.5) {
    scale /= 2.0;
    ++s;
  }
  const CMat2 a = (-kI * dt / std::pow(2.0, s)) * h;
  CMat2 term = CMat2::identity();
  CMat2 sum = CMat2::identity();
  for (int n = 1; n <= 12; ++n) {
    term = (cplx{1.0 / n, 0.0}) * (term * a);
    sum = sum + term;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

}  // namespace

TEST_CASE("pauli_compose builds the expected matrices") {
  CHECK(near(pauli_compose({0, 0, 0, 1}), pauli::sz, 0));
  CHECK(near(pauli_compose({1, 0, 0, 0}), CMat2::identity(), 0));
  const CMat2 m = pauli_compose({0, 1, 1, 0});
  CHECK(near(m, CMat2{{cplx{0, 0}, cplx{1, -1}, cplx{1, 1}, cplx{0, 0}}}, 0));
}

TEST_CASE("pauli decompose round trip") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 50; ++i) {
    const PauliCoeffs c{u(rng), u(rng), u(rng), u(rng)};
    const PauliCoeffs r = pauli_decompose(pauli_compose(c));
    CHECK(std::abs(r.a0 - c.a0) < 1e-12);
    CHECK(std::abs(r.ax - c.ax) < 1e-12);
    CHECK(std::abs(r.ay - c.ay) < 1e-12);
    CHECK(std::abs(r.az - c.az) < 1e-12);
  }
}

TEST_CASE("expm_hermitian2 closed form") {
  CHECK(near(expm_hermitian2(pauli::sz, kPi / 2), diag(-kI, kI), 1e-15));
  CHECK(near(expm_hermitian2(CMat2{}, 0.7), CMat2::identity(), 0));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 20; ++i) {
    const CMat2 h = pauli_compose({u(rng), u(rng), u(rng), u(rng)});
    const CMat2 e = expm_hermitian2(h, 0.37);
    CHECK(near(e, taylor_expm(h, 0.37), 1e-10));
    CHECK(max_abs(e.adjoint() * e - CMat2::identity()) < 1e-12);
  }
  // Tiny |a| stays exact.
  const CMat2 tiny = pauli_compose({0, 1e-17, 0, 0});
  CHECK(near(expm_hermitian2(tiny, 1.0), CMat2::identity(), 1e-16));
  CHECK_THROWS_AS(expm_hermitian2(CMat2{{cplx{0, 0}, cplx{1, 0}, cplx{0, 0}, cplx{0, 0}}}, 1.0), Error);
}

TEST_CASE("eig_unitary2") {
  const UnitaryEigen id = eig_unitary2(CMat2::identity());
  CHECK(id.degenerate);
  CHECK(id.phases[0] == doctest::Approx(0.0));
  CHECK(id.phases[1] == doctest::Approx(0.0));

  const UnitaryEigen d = eig_unitary2(diag(std::polar(1.0, kPi / 3), std::polar(1.0, -kPi / 3)));
  CHECK(d.phases[0] == doctest::Approx(-kPi / 3));
  CHECK(d.phases[1] == doctest::Approx(kPi / 3));
  CHECK(std::abs(std::abs(d.vecs[0][1]) - 1.0) < 1e-12);
  CHECK(std::abs(std::abs(d.vecs[1][0]) - 1.0) < 1e-12);

  const CMat2 u = expm_hermitian2(pauli::sx, 1.0);
  const UnitaryEigen e = eig_unitary2(u);
  CHECK(e.phases[0] == doctest::Approx(-1.0));
  CHECK(e.phases[1] == doctest::Approx(1.0));
  for (int n = 0; n < 2; ++n) {
    const Spinor uv = u * e.vecs[n];
    const cplx lam = std::polar(1.0, e.phases[n]);
    CHECK(std::abs(uv[0] - lam * e.vecs[n][0]) < 1e-12);
    CHECK(std::abs(uv[1] - lam * e.vecs[n][1]) < 1e-12);
    CHECK(std::abs(std::abs(e.vecs[n][0]) - std::sqrt(0.5)) < 1e-12);
  }
  CHECK(std::abs(inner(e.vecs[0], e.vecs[1])) < 1e-12);
  CHECK_THROWS_AS(eig_unitary2(2.0 * CMat2::identity()), Error);
}

TEST_CASE("det2 of Pauli combinations") {
  CHECK(det2(CMat2::identity()) == cplx{1, 0});
  const BlochVector n{0.36, 0.48, 0.8};
  CHECK(std::abs(det2(pauli_compose({0, n.nx, n.ny, n.nz})) + 1.0) < 1e-15);
  const BlochVector m{0.0, 0.6, -0.8};
  const BlochVector s = n + m;
  CHECK(std::abs(det2(pauli_compose({0, s.nx, s.ny, s.nz})) + s.dot(s)) < 1e-15);
  const BlochVector z = n + (-n);
  CHECK(std::abs(det2(pauli_compose({0, z.nx, z.ny, z.nz}))) == 0.0);
}

TEST_CASE("bloch_vector, fix_gauge and wrap_angle") {
  const BlochVector up = bloch_vector({cplx{1, 0}, cplx{0, 0}});
  CHECK(up.nz == doctest::Approx(1.0));
  const Spinor s{cplx{0.6, 0.0}, cplx{0.0, 0.8}};
  const Spinor g = fix_gauge({std::polar(1.0, 1.3) * s[0], std::polar(1.0, 1.3) * s[1]});
  CHECK(std::abs(g[1].imag()) < 1e-15);
  CHECK(g[1].real() > 0);
  CHECK(std::abs(bloch_vector(s).norm() - 1.0) < 1e-12);
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(3 * kPi / 2) == doctest::Approx(-kPi / 2));
}
