#pragma once

// Exact-size 2x2 complex algebra. Every model in the catalog has two bands,
// so the propagators, projectors and Pauli decompositions below are all
// closed-form; nothing here allocates.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

namespace fpl {

using cplx = std::complex<double>;
inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// Tolerances used by the predicate checks of this module. Defaults are the
/// module-level constants; callers may pass their own.
struct NumericsTolerances {
  double hermitian = 1e-10;
  double unitary = 1e-8;
  double degenerate = 1e-12;
};

/// Row-major 2x2 complex matrix.
struct CMat2 {
  std::array<cplx, 4> m{};

  constexpr cplx& operator()(int r, int c) { return m[2 * r + c]; }
  constexpr const cplx& operator()(int r, int c) const { return m[2 * r + c]; }

  static constexpr CMat2 identity() { return CMat2{{cplx{1, 0}, cplx{}, cplx{}, cplx{1, 0}}}; }
  static constexpr CMat2 zero() { return CMat2{}; }

  CMat2 adjoint() const {
    return CMat2{{std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3])}};
  }
  CMat2 conjugate() const {
    return CMat2{{std::conj(m[0]), std::conj(m[1]), std::conj(m[2]), std::conj(m[3])}};
  }
  CMat2 transpose() const { return CMat2{{m[0], m[2], m[1], m[3]}}; }
  cplx trace() const { return m[0] + m[3]; }
};

inline CMat2 operator*(const CMat2& a, const CMat2& b) {
  return CMat2{{a.m[0] * b.m[0] + a.m[1] * b.m[2], a.m[0] * b.m[1] + a.m[1] * b.m[3],
                a.m[2] * b.m[0] + a.m[3] * b.m[2], a.m[2] * b.m[1] + a.m[3] * b.m[3]}};
}
inline CMat2 operator+(const CMat2& a, const CMat2& b) {
  return CMat2{{a.m[0] + b.m[0], a.m[1] + b.m[1], a.m[2] + b.m[2], a.m[3] + b.m[3]}};
}
inline CMat2 operator-(const CMat2& a, const CMat2& b) {
  return CMat2{{a.m[0] - b.m[0], a.m[1] - b.m[1], a.m[2] - b.m[2], a.m[3] - b.m[3]}};
}
inline CMat2 operator*(cplx s, const CMat2& a) {
  return CMat2{{s * a.m[0], s * a.m[1], s * a.m[2], s * a.m[3]}};
}

/// Largest absolute entry.
double max_abs(const CMat2& a);

using Spinor = std::array<cplx, 2>;

inline Spinor operator*(const CMat2& a, const Spinor& v) {
  return Spinor{a.m[0] * v[0] + a.m[1] * v[1], a.m[2] * v[0] + a.m[3] * v[1]};
}
/// <a|b>
inline cplx inner(const Spinor& a, const Spinor& b) {
  return std::conj(a[0]) * b[0] + std::conj(a[1]) * b[1];
}
inline double norm(const Spinor& a) { return std::sqrt(std::norm(a[0]) + std::norm(a[1])); }

/// Coefficients of a0*I + ax*sx + ay*sy + az*sz.
struct PauliCoeffs {
  double a0 = 0.0;
  double ax = 0.0;
  double ay = 0.0;
  double az = 0.0;

  friend bool operator==(const PauliCoeffs&, const PauliCoeffs&) = default;
};

struct BlochVector {
  double nx = 0.0;
  double ny = 0.0;
  double nz = 0.0;

  double norm() const { return std::sqrt(nx * nx + ny * ny + nz * nz); }
  double dot(const BlochVector& o) const { return nx * o.nx + ny * o.ny + nz * o.nz; }
  BlochVector cross(const BlochVector& o) const {
    return {ny * o.nz - nz * o.ny, nz * o.nx - nx * o.nz, nx * o.ny - ny * o.nx};
  }
  BlochVector operator-() const { return {-nx, -ny, -nz}; }
  BlochVector operator+(const BlochVector& o) const { return {nx + o.nx, ny + o.ny, nz + o.nz}; }
  BlochVector operator*(double s) const { return {s * nx, s * ny, s * nz}; }
};

namespace pauli {
inline const CMat2 sx{{cplx{0, 0}, cplx{1, 0}, cplx{1, 0}, cplx{0, 0}}};
inline const CMat2 sy{{cplx{0, 0}, cplx{0, -1}, cplx{0, 1}, cplx{0, 0}}};
inline const CMat2 sz{{cplx{1, 0}, cplx{0, 0}, cplx{0, 0}, cplx{-1, 0}}};
/// (sx + i sy)/2 and (sx - i sy)/2
inline const CMat2 splus{{cplx{0, 0}, cplx{1, 0}, cplx{0, 0}, cplx{0, 0}}};
inline const CMat2 sminus{{cplx{0, 0}, cplx{0, 0}, cplx{1, 0}, cplx{0, 0}}};
}  // namespace pauli

CMat2 pauli_compose(const PauliCoeffs& c);
PauliCoeffs pauli_decompose(const CMat2& h);

bool is_hermitian(const CMat2& h, double tol = NumericsTolerances{}.hermitian);
bool is_unitary(const CMat2& u, double tol = NumericsTolerances{}.unitary);

/// exp(-i H dt) for Hermitian H, closed form through the Pauli decomposition.
/// Throws Error(NonHermitianInput).
CMat2 expm_hermitian2(const CMat2& h, double dt, const NumericsTolerances& tol = {});

/// Same as expm_hermitian2 but takes the coefficients directly (no check).
CMat2 expm_pauli(const PauliCoeffs& c, double dt);

struct UnitaryEigen {
  std::array<double, 2> phases{};  // in (-pi, pi], phases[0] <= phases[1]
  std::array<Spinor, 2> vecs{};    // orthonormal, largest component real positive
  bool degenerate = false;
};

/// Eigen-decomposition of a 2x2 unitary. Throws Error(NonUnitaryInput).
UnitaryEigen eig_unitary2(const CMat2& u, const NumericsTolerances& tol = {});

inline cplx det2(const CMat2& a) { return a.m[0] * a.m[3] - a.m[1] * a.m[2]; }

/// <psi| sigma |psi> for a normalized spinor.
BlochVector bloch_vector(const Spinor& psi);

/// Rephase so the largest-magnitude component is real and positive.
Spinor fix_gauge(const Spinor& v);

/// Wrap an angle into (-pi, pi].
double wrap_angle(double a);

}  // namespace fpl
