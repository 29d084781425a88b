#include "fpl/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fpl/error.hpp"

namespace fpl {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

PauliCoeffs aiii_coeffs(const Aiii& a, const Momentum& k, double t) {
  const double w = 2.0 * kPi / a.period;
  const double gamma = 0.6 * kPi / a.period + 2.0 * a.g * std::cos(w * t);
  return {0.0, a.theta_re + gamma * std::cos(k.kx), a.theta_im + gamma * std::sin(k.kx), 0.0};
}

PauliCoeffs two_da_coeffs(const TwoDA& a, const Momentum& k, int seg) {
  // J (e^{i th} s+ + h.c.) = J (cos th sx - sin th sy)
  double th = 0.0;
  switch (seg) {
    case 0: return {0.0, a.j, 0.0, a.delta};
    case 1: th = k.kx - k.ky; break;
    case 2: th = 2.0 * k.kx; break;
    case 3: th = k.kx + k.ky; break;
    default: return {0.0, 0.0, 0.0, a.delta};
  }
  return {0.0, a.j * std::cos(th), -a.j * std::sin(th), a.delta};
}

PauliCoeffs dclass_coeffs(const DClass& a, const Momentum& k, bool first) {
  const double s = std::sin(k.kx);
  const double c = std::cos(k.kx);
  if (first) return {0.0, -a.j1 * s, a.j1 * c, a.g * s};
  return {0.0, 0.0, a.j2, a.g * s};
}

void check_time(double t, double period) {
  if (!(t >= 0.0) || t > period) {
    std::ostringstream os;
    os << "t = " << t << " outside [0, " << period << "]";
    throw Error(ErrorKind::OutOfRangeTime, os.str());
  }
}

// Index of the custom segment containing t (left-closed, last one closed).
std::size_t custom_segment(const PiecewiseCustom& c, double t) {
  double acc = 0.0;
  for (std::size_t s = 0; s + 1 < c.segments.size(); ++s) {
    acc += c.segments[s].fraction * c.period;
    if (t < acc) return s;
  }
  return c.segments.size() - 1;
}

}  // namespace

double period_of(const DriveModel& m) {
  return std::visit([](const auto& x) { return x.period; }, m);
}

int dims_of(const DriveModel& m) {
  return std::visit(Overloaded{[](const TwoDA&) { return 2; },
                               [](const PiecewiseCustom& c) { return c.dims; },
                               [](const auto&) { return 1; }},
                    m);
}

std::string tag_of(const DriveModel& m) {
  return std::visit(Overloaded{[](const Aiii&) { return std::string("aiii"); },
                               [](const TwoDA&) { return std::string("two_da"); },
                               [](const DClass&) { return std::string("dclass"); },
                               [](const PiecewiseCustom&) { return std::string("custom"); }},
                    m);
}

void validate(const DriveModel& m) {
  const double T = period_of(m);
  if (!(T > 0.0) || !std::isfinite(T)) throw Error(ErrorKind::InvalidModel, "period must be positive");
  if (const auto* c = std::get_if<PiecewiseCustom>(&m)) {
    if (c->segments.empty()) throw Error(ErrorKind::InvalidModel, "custom drive has no segments");
    if (c->dims != 1 && c->dims != 2) throw Error(ErrorKind::InvalidModel, "dims must be 1 or 2");
    double sum = 0.0;
    for (const auto& s : c->segments) {
      if (!(s.fraction > 0.0)) throw Error(ErrorKind::InvalidModel, "segment fraction must be positive");
      if (!s.coeffs) throw Error(ErrorKind::InvalidModel, "segment without coefficient function");
      sum += s.fraction;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw Error(ErrorKind::InvalidModel, "segment fractions must sum to 1");
  }
}

void GridSpec::validate() const {
  if (nk < 8) throw Error(ErrorKind::InvalidGrid, "nk must be >= 8");
  if (nt < 4) throw Error(ErrorKind::InvalidGrid, "nt must be >= 4");
  if (substeps < 1) throw Error(ErrorKind::InvalidGrid, "substeps must be >= 1");
  if (dims != 1 && dims != 2) throw Error(ErrorKind::InvalidGrid, "dims must be 1 or 2");
}

GridSpec default_grid(const DriveModel& m) {
  if (dims_of(m) == 2) return GridSpec{24, 12, 2, 64};
  return GridSpec{64, 32, 1, 64};
}

Momentum momentum_at(const DriveModel& m, const GridSpec& g, int i, int j) {
  const double h = 2.0 * kPi / g.nk;
  const double q1 = h * i;
  const double q2 = g.dims == 2 ? h * j : 0.0;
  if (std::holds_alternative<TwoDA>(m)) return {0.5 * (q1 - q2), 0.5 * (q1 + q2)};
  return {q1, q2};
}

PauliCoeffs pauli_at(const DriveModel& m, const Momentum& k, double t) {
  check_time(t, period_of(m));
  return std::visit(
      Overloaded{[&](const Aiii& a) { return aiii_coeffs(a, k, t); },
                 [&](const TwoDA& a) {
                   const int seg = std::min(4, static_cast<int>(std::floor(5.0 * t / a.period)));
                   return two_da_coeffs(a, k, seg);
                 },
                 [&](const DClass& a) { return dclass_coeffs(a, k, t <= 0.5 * a.period); },
                 [&](const PiecewiseCustom& c) { return c.segments[custom_segment(c, t)].coeffs(k); }},
      m);
}

CMat2 hamiltonian_at(const DriveModel& m, const Momentum& k, double t) {
  return pauli_compose(pauli_at(m, k, t));
}

std::vector<double> breakpoints(const DriveModel& m) {
  return std::visit(Overloaded{[](const Aiii&) { return std::vector<double>{}; },
                               [](const TwoDA& a) {
                                 std::vector<double> b;
                                 for (int s = 1; s < 5; ++s) b.push_back(s * a.period / 5.0);
                                 return b;
                               },
                               [](const DClass& a) { return std::vector<double>{0.5 * a.period}; },
                               [](const PiecewiseCustom& c) {
                                 std::vector<double> b;
                                 double acc = 0.0;
                                 for (std::size_t s = 0; s + 1 < c.segments.size(); ++s) {
                                   acc += c.segments[s].fraction * c.period;
                                   b.push_back(acc);
                                 }
                                 return b;
                               }},
                    m);
}

bool is_piecewise(const DriveModel& m) { return !std::holds_alternative<Aiii>(m); }

CMat2 evolve_between(const DriveModel& m, const Momentum& k, double t0, double t1, int substeps,
                     double dt_ref) {
  CMat2 u = CMat2::identity();
  if (t1 <= t0) return u;
  if (is_piecewise(m)) {
    std::vector<double> cuts{t0};
    for (double b : breakpoints(m)) {
      if (b > t0 && b < t1) cuts.push_back(b);
    }
    cuts.push_back(t1);
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
      const double a = cuts[s];
      const double b = cuts[s + 1];
      u = expm_pauli(pauli_at(m, k, 0.5 * (a + b)), b - a) * u;
    }
    return u;
  }
  const int n = std::max(1, static_cast<int>(std::lround(substeps * (t1 - t0) / dt_ref)));
  const double dt = (t1 - t0) / n;
  for (int s = 0; s < n; ++s) u = expm_pauli(pauli_at(m, k, t0 + (s + 0.5) * dt), dt) * u;
  return u;
}

std::vector<CMat2> evolve_path(const DriveModel& m, const Momentum& k, const GridSpec& g) {
  const double T = period_of(m);
  const double dt = T / g.nt;
  std::vector<CMat2> out;
  out.reserve(g.nt + 1);
  CMat2 u = CMat2::identity();
  out.push_back(u);
  for (int s = 0; s < g.nt; ++s) {
    const double t1 = (s + 1 == g.nt) ? T : (s + 1) * dt;
    u = evolve_between(m, k, s * dt, t1, g.substeps, dt) * u;
    out.push_back(u);
  }
  return out;
}

FloquetSolution floquet_solve(const DriveModel& m, const GridSpec& g, const SolveOptions& opt) {
  validate(m);
  g.validate();
  if (g.dims != dims_of(m)) throw Error(ErrorKind::InvalidGrid, "grid dims do not match the model");

  FloquetSolution sol;
  sol.model = m;
  sol.grid = g;
  const double T = period_of(m);
  sol.period = T;
  const int nkp = g.k_points();
  sol.eps_minus.resize(nkp);
  sol.eps_plus.resize(nkp);
  sol.states_minus.resize(static_cast<std::size_t>(g.nt) * nkp);
  sol.states_plus.resize(static_cast<std::size_t>(g.nt) * nkp);
  sol.paths.resize(static_cast<std::size_t>(g.nt + 1) * nkp);

  double gap0 = std::numeric_limits<double>::infinity();
  double gap_pi = gap0;
  int k_gap0 = 0;
  int k_gappi = 0;
  for (int ik = 0; ik < nkp; ++ik) {
    const Momentum k = momentum_at(m, g, g.dims == 2 ? ik / g.nk : ik, g.dims == 2 ? ik % g.nk : 0);
    const auto path = evolve_path(m, k, g);
    for (int s = 0; s <= g.nt; ++s) sol.paths[static_cast<std::size_t>(s) * nkp + ik] = path[s];

    const UnitaryEigen e = eig_unitary2(path.back(), opt.tol);
    std::array<double, 2> eps{};
    for (int n = 0; n < 2; ++n) {
      double x = -e.phases[n] / T;
      if (x <= -kPi / T) x += 2.0 * kPi / T;
      eps[n] = x;
    }
    const int lo = eps[0] <= eps[1] ? 0 : 1;
    const int hi = 1 - lo;
    sol.eps_minus[ik] = eps[lo];
    sol.eps_plus[ik] = eps[hi];
    for (double x : eps) {
      const double d0 = std::abs(x);
      const double dp = kPi / T - std::abs(x);
      if (d0 < gap0) { gap0 = d0; k_gap0 = ik; }
      if (dp < gap_pi) { gap_pi = dp; k_gappi = ik; }
    }
    for (int s = 0; s < g.nt; ++s) {
      const double t = s * T / g.nt;
      const std::size_t idx = static_cast<std::size_t>(s) * nkp + ik;
      const CMat2& u = path[s];
      const cplx pm = std::polar(1.0, eps[lo] * t);
      const cplx pp = std::polar(1.0, eps[hi] * t);
      const Spinor vm = u * e.vecs[lo];
      const Spinor vp = u * e.vecs[hi];
      sol.states_minus[idx] = {pm * vm[0], pm * vm[1]};
      sol.states_plus[idx] = {pp * vp[0], pp * vp[1]};
    }
  }
  sol.gap0 = gap0;
  sol.gap_pi = gap_pi;
  const double tol = opt.gap_tol * kPi / T;
  if (gap0 < tol || gap_pi < tol) {
    sol.gap_closed = true;
    sol.closed_gap = gap0 <= gap_pi ? GapKind::Zero : GapKind::Pi;
    if (opt.throw_on_gap) {
      std::ostringstream os;
      const bool zero = sol.closed_gap == GapKind::Zero;
      os << "which=" << (zero ? "Zero" : "Pi") << " k_index=" << (zero ? k_gap0 : k_gappi)
         << " gap=" << (zero ? gap0 : gap_pi) * T / kPi << " pi/T";
      throw Error(ErrorKind::GapClosed, os.str());
    }
  }
  return sol;
}

FfoField ffo(const FloquetSolution& sol) {
  FfoField f;
  f.grid = sol.grid;
  const std::size_t n = sol.states_minus.size();
  f.nx.resize(n);
  f.ny.resize(n);
  f.nz.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const BlochVector b = bloch_vector(sol.states_minus[i]);
    f.nx[i] = b.nx;
    f.ny[i] = b.ny;
    f.nz[i] = b.nz;
  }
  return f;
}

EffectiveHamiltonian effective_hamiltonian(const std::vector<CMat2>& u_period, double branch,
                                           double period, double branch_tol,
                                           const NumericsTolerances& tol) {
  EffectiveHamiltonian out;
  out.branch = branch;
  out.period = period;
  out.h_eff.reserve(u_period.size());
  const double w = 2.0 * kPi / period;
  for (std::size_t ik = 0; ik < u_period.size(); ++ik) {
    const UnitaryEigen e = eig_unitary2(u_period[ik], tol);
    CMat2 h = CMat2::zero();
    for (int n = 0; n < 2; ++n) {
      // Quasienergy e with U eigenvalue exp(-i e T); the cut sits at e = branch/T.
      if (std::abs(wrap_angle(branch + e.phases[n])) < branch_tol) {
        std::ostringstream os;
        os << "eigenphase " << e.phases[n] << " on the cut of branch " << branch << " at k index " << ik;
        throw Error(ErrorKind::BranchCutHit, os.str());
      }
      const double top = branch / period;
      const double x = -e.phases[n] / period;
      double r = std::fmod(top - x, w);
      if (r < 0.0) r += w;
      const double en = top - r;
      const Spinor& v = e.vecs[n];
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) h(a, b) += en * v[a] * std::conj(v[b]);
      }
    }
    out.h_eff.push_back(h);
  }
  return out;
}

EffectiveHamiltonian effective_hamiltonian(const FloquetSolution& sol, double branch, double branch_tol) {
  const int nkp = sol.k_points();
  std::vector<CMat2> ut(nkp);
  for (int ik = 0; ik < nkp; ++ik) ut[ik] = sol.u_period(ik);
  return effective_hamiltonian(ut, branch, sol.period, branch_tol);
}

std::vector<CMat2> periodized_evolution(const FloquetSolution& sol, const EffectiveHamiltonian& h) {
  const int nkp = sol.k_points();
  if (static_cast<int>(h.h_eff.size()) != nkp) {
    throw Error(ErrorKind::GridMismatch, "effective Hamiltonian and solution differ in k points");
  }
  std::vector<CMat2> out(sol.paths.size());
  for (int s = 0; s <= sol.grid.nt; ++s) {
    const double t = s == sol.grid.nt ? sol.period : s * sol.period / sol.grid.nt;
    for (int ik = 0; ik < nkp; ++ik) {
      const std::size_t idx = static_cast<std::size_t>(s) * nkp + ik;
      out[idx] = sol.paths[idx] * expm_pauli(pauli_decompose(h.h_eff[ik]), -t);
    }
  }
  return out;
}

SymmetryReport symmetry_report(const DriveModel& m, const GridSpec& g) {
  SymmetryReport r;
  const double T = period_of(m);
  const auto time = [&](int s) { return s * T / g.nt; };
  if (std::holds_alternative<Aiii>(m)) {
    double worst = 0.0;
    for (int ik = 0; ik < g.nk; ++ik) {
      const Momentum k = momentum_at(m, g, ik);
      for (int s = 0; s < g.nt; ++s) {
        const double t = time(s);
        const double tm = s == 0 ? 0.0 : T - t;
        const CMat2 lhs = pauli::sz * hamiltonian_at(m, k, t) * pauli::sz;
        worst = std::max(worst, max_abs(lhs + hamiltonian_at(m, k, tm)));
      }
    }
    r.chiral = worst;
  }
  if (std::holds_alternative<DClass>(m)) {
    double worst = 0.0;
    for (int ik = 0; ik < g.nk; ++ik) {
      const Momentum k = momentum_at(m, g, ik);
      const Momentum mk{-k.kx, 0.0};
      for (int s = 0; s < g.nt; ++s) {
        const double t = time(s);
        worst = std::max(worst, max_abs(hamiltonian_at(m, k, t) + hamiltonian_at(m, mk, t).conjugate()));
      }
    }
    r.particle_hole = worst;

    SolveOptions opt;
    opt.throw_on_gap = false;
    const FfoField f = ffo(floquet_solve(m, g, opt));
    double ex = 0.0;
    double ey = 0.0;
    double ez = 0.0;
    for (int s = 0; s < g.nt; ++s) {
      for (int ik = 0; ik < g.nk; ++ik) {
        const int jk = (g.nk - ik) % g.nk;
        const std::size_t a = static_cast<std::size_t>(s) * g.nk + ik;
        const std::size_t b = static_cast<std::size_t>(s) * g.nk + jk;
        ex = std::max(ex, std::abs(f.nx[a] + f.nx[b]));
        ey = std::max(ey, std::abs(f.ny[a] - f.ny[b]));
        ez = std::max(ez, std::abs(f.nz[a] + f.nz[b]));
      }
    }
    r.bloch_nx = ex;
    r.bloch_ny = ey;
    r.bloch_nz = ez;
  }
  return r;
}

}  // namespace fpl
