#include "fpl/numerics.hpp"

#include <algorithm>
#include <utility>

#include "fpl/error.hpp"

namespace fpl {

double max_abs(const CMat2& a) {
  double r = 0.0;
  for (const auto& z : a.m) r = std::max(r, std::abs(z));
  return r;
}

CMat2 pauli_compose(const PauliCoeffs& c) {
  return CMat2{{cplx{c.a0 + c.az, 0.0}, cplx{c.ax, -c.ay}, cplx{c.ax, c.ay}, cplx{c.a0 - c.az, 0.0}}};
}

PauliCoeffs pauli_decompose(const CMat2& h) {
  // Coefficients are the real parts of tr(h sigma)/2; the anti-Hermitian
  // remainder is dropped.
  return PauliCoeffs{0.5 * (h.m[0] + h.m[3]).real(), 0.5 * (h.m[1] + h.m[2]).real(),
                     0.5 * (h.m[2] - h.m[1]).imag(), 0.5 * (h.m[0] - h.m[3]).real()};
}

bool is_hermitian(const CMat2& h, double tol) { return max_abs(h - h.adjoint()) <= tol; }

bool is_unitary(const CMat2& u, double tol) {
  return max_abs(u.adjoint() * u - CMat2::identity()) <= tol;
}

namespace {

// sin(x)/x, with a 4-term series below 1e-6 to avoid 0/0.
double sinc(double x) {
  if (std::abs(x) < 1e-6) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0 - x2 * x2 * x2 / 5040.0;
  }
  return std::sin(x) / x;
}

// +1 eigenvector of n.sigma for a unit vector n.
Spinor up_spinor(double nx, double ny, double nz) {
  Spinor v;
  if (nz >= 0.0) {
    v = {cplx{1.0 + nz, 0.0}, cplx{nx, ny}};
  } else {
    v = {cplx{nx, -ny}, cplx{1.0 - nz, 0.0}};
  }
  const double n = norm(v);
  return {v[0] / n, v[1] / n};
}

}  // namespace

CMat2 expm_pauli(const PauliCoeffs& c, double dt) {
  const double a = std::sqrt(c.ax * c.ax + c.ay * c.ay + c.az * c.az);
  const double x = a * dt;
  const double cs = std::cos(x);
  const double s = dt * sinc(x);  // sin(|a| dt) / |a|
  const cplx ph = std::polar(1.0, -c.a0 * dt);
  // cos(x) I - i s (a.sigma)
  const CMat2 su{{cplx{cs, -s * c.az}, cplx{-s * c.ay, -s * c.ax}, cplx{s * c.ay, -s * c.ax},
                  cplx{cs, s * c.az}}};
  return ph * su;
}

CMat2 expm_hermitian2(const CMat2& h, double dt, const NumericsTolerances& tol) {
  if (!is_hermitian(h, tol.hermitian)) {
    throw Error(ErrorKind::NonHermitianInput, "expm_hermitian2 requires a Hermitian matrix");
  }
  return expm_pauli(pauli_decompose(h), dt);
}

Spinor fix_gauge(const Spinor& v) {
  const int big = std::abs(v[1]) > std::abs(v[0]) ? 1 : 0;
  const double mag = std::abs(v[big]);
  if (mag == 0.0) return v;
  const cplx phase = std::conj(v[big]) / mag;
  return {v[0] * phase, v[1] * phase};
}

double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

UnitaryEigen eig_unitary2(const CMat2& u, const NumericsTolerances& tol) {
  if (!is_unitary(u, tol.unitary)) {
    throw Error(ErrorKind::NonUnitaryInput, "eig_unitary2 requires a unitary matrix");
  }
  // u = e^{i alpha} (cos b I - i sin b n.sigma); eigenvalues e^{i(alpha -+ b)}
  // on the +-1 eigenvectors of n.sigma.
  const double alpha = 0.5 * std::arg(det2(u));
  const CMat2 v = std::polar(1.0, -alpha) * u;
  const double cb = 0.5 * (v.m[0] + v.m[3]).real();
  const double wx = -0.5 * (v.m[1] + v.m[2]).imag();
  const double wy = 0.5 * (v.m[2] - v.m[1]).real();
  const double wz = -0.5 * (v.m[0] - v.m[3]).imag();
  const double sb = std::sqrt(wx * wx + wy * wy + wz * wz);
  const double b = std::atan2(sb, cb);

  UnitaryEigen out;
  Spinor up;
  Spinor dn;
  if (sb < tol.degenerate) {
    out.degenerate = true;
    up = {cplx{1, 0}, cplx{0, 0}};
    dn = {cplx{0, 0}, cplx{1, 0}};
  } else {
    up = up_spinor(wx / sb, wy / sb, wz / sb);
    dn = up_spinor(-wx / sb, -wy / sb, -wz / sb);
  }
  double p_up = wrap_angle(alpha - b);
  double p_dn = wrap_angle(alpha + b);
  if (out.degenerate) {
    // Identical phases up to rounding; report the same value for both.
    p_dn = p_up;
  }
  if (p_up <= p_dn) {
    out.phases = {p_up, p_dn};
    out.vecs = {fix_gauge(up), fix_gauge(dn)};
  } else {
    out.phases = {p_dn, p_up};
    out.vecs = {fix_gauge(dn), fix_gauge(up)};
  }
  return out;
}

BlochVector bloch_vector(const Spinor& psi) {
  const cplx c = std::conj(psi[0]) * psi[1];
  return {2.0 * c.real(), 2.0 * c.imag(), std::norm(psi[0]) - std::norm(psi[1])};
}

}  // namespace fpl
