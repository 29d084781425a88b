#include "fpl/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "fpl/error.hpp"

namespace fpl {

using nlohmann::json;

namespace {

int round_int(double x) { return static_cast<int>(std::lround(x)); }

double wrap_step(double d) {
  // Per-step phase difference in (-pi, pi].
  return wrap_angle(d);
}

double loop_winding(std::span<const double> theta) {
  double sum = 0.0;
  const std::size_t n = theta.size();
  for (std::size_t i = 0; i < n; ++i) sum += wrap_step(theta[(i + 1) % n] - theta[i]);
  return sum / (2.0 * kPi);
}

// Spinor whose Bloch vector is the unit vector n.
Spinor spinor_of(const BlochVector& n) {
  Spinor v;
  if (n.nz >= 0.0) {
    v = {cplx{1.0 + n.nz, 0.0}, cplx{n.nx, n.ny}};
  } else {
    v = {cplx{n.nx, -n.ny}, cplx{1.0 - n.nz, 0.0}};
  }
  const double s = norm(v);
  return {v[0] / s, v[1] / s};
}

double plaquette_arg(const Spinor& a, const Spinor& b, const Spinor& c, const Spinor& d) {
  const cplx z = inner(a, b) * inner(b, c) * inner(c, d) * inner(d, a);
  if (std::abs(z) < 1e-12 || std::abs(std::abs(std::arg(z)) - kPi) < 1e-9) {
    throw Error(ErrorKind::SingularPlaquette, "plaquette phase at +-pi; refine the grid");
  }
  return std::arg(z);
}

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

CMat2 commutator(const CMat2& a, const CMat2& b) { return a * b - b * a; }

std::vector<std::pair<double, double>> time_pieces(const DriveModel& m) {
  const double T = period_of(m);
  std::vector<double> cuts{0.0};
  if (is_piecewise(m)) {
    for (double b : breakpoints(m)) cuts.push_back(b);
  } else {
    for (int s = 1; s < 32; ++s) cuts.push_back(s * T / 32.0);
  }
  cuts.push_back(T);
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) out.emplace_back(cuts[i], cuts[i + 1]);
  return out;
}

}  // namespace

json to_json(const InvariantRecord& r) {
  json j = json::object();
  const auto put = [&](const char* name, const std::optional<int>& v) {
    if (v) j[name] = *v;
  };
  put("w0", r.w0);
  put("w_pi", r.w_pi);
  put("nu0", r.nu0);
  put("nu_half", r.nu_half);
  put("chern", r.chern);
  put("link", r.link);
  put("nu_value", r.nu_value);
  put("nu_modulus", r.nu_modulus);
  put("v0", r.v0);
  put("v_pi", r.v_pi);
  put("c_h", r.c_h);
  return j;
}

InvariantRecord record_from_json(const json& j) {
  InvariantRecord r;
  const auto get = [&](const char* name, std::optional<int>& v) {
    if (j.contains(name) && j[name].is_number_integer()) v = j[name].get<int>();
  };
  get("w0", r.w0);
  get("w_pi", r.w_pi);
  get("nu0", r.nu0);
  get("nu_half", r.nu_half);
  get("chern", r.chern);
  get("link", r.link);
  get("nu_value", r.nu_value);
  get("nu_modulus", r.nu_modulus);
  get("v0", r.v0);
  get("v_pi", r.v_pi);
  get("c_h", r.c_h);
  return r;
}

IntegerResult winding_equatorial(std::span<const Spinor> states, double nz_tol) {
  std::vector<double> theta(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const BlochVector b = bloch_vector(states[i]);
    if (std::abs(b.nz) > nz_tol) {
      std::ostringstream os;
      os << "|n_z| = " << std::abs(b.nz) << " at k index " << i;
      throw Error(ErrorKind::NonEquatorialState, os.str());
    }
    theta[i] = std::atan2(b.ny, b.nx);
  }
  const double raw = loop_winding(theta);
  return {round_int(raw), raw};
}

GapWindings aiii_gap_windings(std::span<const CMat2> u0_half, std::span<const CMat2> upi_half,
                              double structure_tol) {
  double res = 0.0;
  std::vector<double> a0(u0_half.size());
  std::vector<double> api(upi_half.size());
  for (std::size_t i = 0; i < u0_half.size(); ++i) {
    const CMat2& u = u0_half[i];
    res = std::max({res, std::abs(u(0, 0)), std::abs(u(1, 1))});
    a0[i] = std::arg(u(0, 1));
  }
  for (std::size_t i = 0; i < upi_half.size(); ++i) {
    const CMat2& u = upi_half[i];
    res = std::max({res, std::abs(u(0, 1)), std::abs(u(1, 0))});
    api[i] = std::arg(u(0, 0));
  }
  if (res > structure_tol) {
    std::ostringstream os;
    os << "chiral-basis structure residual " << res;
    throw Error(ErrorKind::ChiralStructureViolated, os.str());
  }
  // (i/2 pi) closed integral of u^-1 du with u = e^{i a} is minus the phase winding.
  GapWindings w;
  w.raw0 = -loop_winding(a0);
  w.raw_pi = -loop_winding(api);
  w.w0 = round_int(w.raw0);
  w.w_pi = round_int(w.raw_pi);
  return w;
}

GapWindings aiii_gap_windings(const FloquetSolution& sol, double structure_tol) {
  if (sol.grid.nt % 2 != 0) throw Error(ErrorKind::InvalidGrid, "nt must be even to sample t = T/2");
  const int nkp = sol.k_points();
  const int half = sol.grid.nt / 2;
  const double th = 0.5 * sol.period;
  std::vector<CMat2> u0(nkp);
  std::vector<CMat2> upi(nkp);
  const EffectiveHamiltonian h0 = effective_hamiltonian(sol, 0.0);
  const EffectiveHamiltonian hp = effective_hamiltonian(sol, kPi);
  for (int ik = 0; ik < nkp; ++ik) {
    const CMat2& u = sol.path(half, ik);
    u0[ik] = u * expm_pauli(pauli_decompose(h0.h_eff[ik]), -th);
    upi[ik] = u * expm_pauli(pauli_decompose(hp.h_eff[ik]), -th);
  }
  return aiii_gap_windings(u0, upi, structure_tol);
}

IntegerResult winding3(const DriveModel& m, int nk, double branch, const Winding3Options& opt) {
  if (dims_of(m) != 2) throw Error(ErrorKind::InvalidModel, "3D winding needs a 2D drive");
  if (nk < 8) throw Error(ErrorKind::InvalidGrid, "nk must be >= 8");
  const double T = period_of(m);
  const GridSpec g{nk, 4, 2, 64};
  const int nkp = nk * nk;
  std::vector<Momentum> ks(nkp);
  std::vector<CMat2> ut(nkp);
  for (int ik = 0; ik < nkp; ++ik) {
    ks[ik] = momentum_at(m, g, ik / nk, ik % nk);
    ut[ik] = evolve_between(m, ks[ik], 0.0, T, 64, T / 32.0);
  }
  const EffectiveHamiltonian heff = effective_hamiltonian(ut, branch, T);
  std::vector<PauliCoeffs> hc(nkp);
  for (int ik = 0; ik < nkp; ++ik) hc[ik] = pauli_decompose(heff.h_eff[ik]);

  std::vector<double> gx;
  std::vector<double> gw;
  gauss_legendre(opt.gauss_nodes, gx, gw);
  const double h = 2.0 * kPi / nk;
  const auto idx = [nk](int i, int j) { return ((i + nk) % nk) * nk + (j + nk) % nk; };

  std::vector<CMat2> ue(nkp);
  std::vector<CMat2> at(nkp);
  double total = 0.0;
  for (const auto& [a, b] : time_pieces(m)) {
    for (int q = 0; q < opt.gauss_nodes; ++q) {
      const double t = 0.5 * (a + b) + 0.5 * (b - a) * gx[q];
      const double wt = 0.5 * (b - a) * gw[q];
      for (int ik = 0; ik < nkp; ++ik) {
        const CMat2 u = evolve_between(m, ks[ik], 0.0, t, 64, T / 32.0);
        const CMat2 p = expm_pauli(hc[ik], -t);  // exp(i H_eff t)
        ue[ik] = u * p;
        const CMat2 hu = (u.adjoint() * hamiltonian_at(m, ks[ik], t)) * u;
        // U_eps^-1 dU_eps/dt = -i P^+ U^+ H U P + i H_eff
        at[ik] = cplx{0.0, -1.0} * (p.adjoint() * hu * p) + cplx{0.0, 1.0} * heff.h_eff[ik];
      }
      double slice = 0.0;
      for (int i = 0; i < nk; ++i) {
        for (int j = 0; j < nk; ++j) {
          const int c = idx(i, j);
          const CMat2 inv = ue[c].adjoint();
          const CMat2 dx = (cplx{-1.0} * ue[idx(i + 2, j)] + cplx{8.0} * ue[idx(i + 1, j)] -
                            cplx{8.0} * ue[idx(i - 1, j)] + ue[idx(i - 2, j)]);
          const CMat2 dy = (cplx{-1.0} * ue[idx(i, j + 2)] + cplx{8.0} * ue[idx(i, j + 1)] -
                            cplx{8.0} * ue[idx(i, j - 1)] + ue[idx(i, j - 2)]);
          const CMat2 ax = cplx{1.0 / (12.0 * h)} * (inv * dx);
          const CMat2 ay = cplx{1.0 / (12.0 * h)} * (inv * dy);
          slice += (at[c] * commutator(ax, ay)).trace().real();
        }
      }
      total += wt * slice * h * h;
    }
  }
  const double raw = total / (8.0 * kPi * kPi);
  if (std::abs(raw - std::round(raw)) > opt.accept) {
    std::ostringstream os;
    os << "3D winding raw value " << raw << "; refine the grid";
    throw Error(ErrorKind::NotConverged, os.str());
  }
  return {round_int(raw), raw};
}

IntegerResult winding3_grid(std::span<const CMat2> u_eps, int nk, int nt, double period, double accept) {
  const int nkp = nk * nk;
  if (static_cast<int>(u_eps.size()) < nt * nkp) throw Error(ErrorKind::GridMismatch, "U_eps grid too small");
  const double h = 2.0 * kPi / nk;
  const double dt = period / nt;
  const auto at = [&](int m, int i, int j) -> const CMat2& {
    m = (m + nt) % nt;
    i = (i + nk) % nk;
    j = (j + nk) % nk;
    return u_eps[static_cast<std::size_t>(m) * nkp + i * nk + j];
  };
  double total = 0.0;
  for (int m = 0; m < nt; ++m) {
    for (int i = 0; i < nk; ++i) {
      for (int j = 0; j < nk; ++j) {
        const CMat2 inv = at(m, i, j).adjoint();
        const CMat2 a_t = cplx{0.5 / dt} * (inv * (at(m + 1, i, j) - at(m - 1, i, j)));
        const CMat2 a_x = cplx{0.5 / h} * (inv * (at(m, i + 1, j) - at(m, i - 1, j)));
        const CMat2 a_y = cplx{0.5 / h} * (inv * (at(m, i, j + 1) - at(m, i, j - 1)));
        total += (a_t * commutator(a_x, a_y)).trace().real();
      }
    }
  }
  const double raw = total * h * h * dt / (8.0 * kPi * kPi);
  if (std::abs(raw - std::round(raw)) > accept) {
    std::ostringstream os;
    os << "3D winding raw value " << raw << "; refine the grid";
    throw Error(ErrorKind::NotConverged, os.str());
  }
  return {round_int(raw), raw};
}

IntegerResult chern_fixed_t(std::span<const BlochVector> field, int nk) {
  if (static_cast<int>(field.size()) != nk * nk) throw Error(ErrorKind::GridMismatch, "field is not nk x nk");
  std::vector<Spinor> s(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) s[i] = spinor_of(field[i]);
  const auto at = [&](int i, int j) -> const Spinor& { return s[(i % nk) * nk + (j % nk)]; };
  double sum = 0.0;
  for (int i = 0; i < nk; ++i) {
    for (int j = 0; j < nk; ++j) {
      sum += plaquette_arg(at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
    }
  }
  // Link-variable convention C = (1/2 pi) sum of plaquette phases; with it
  // C = W0 - W_pi for the gap windings computed in this module.
  const double raw = sum / (2.0 * kPi);
  return {round_int(raw), raw};
}

IntegerResult chern_fixed_t(const FfoField& f, int t_index) {
  if (f.grid.dims != 2) throw Error(ErrorKind::InvalidGrid, "Chern number needs a 2D field");
  const int nkp = f.grid.k_points();
  std::vector<BlochVector> slice(nkp);
  for (int ik = 0; ik < nkp; ++ik) slice[ik] = f.at(static_cast<std::size_t>(t_index) * nkp + ik);
  return chern_fixed_t(slice, f.grid.nk);
}

std::vector<BlochVector> field_3d(const FfoField& f) {
  const int nkp = f.grid.k_points();
  const int nt = f.grid.nt;
  std::vector<BlochVector> out(f.size());
  for (int m = 0; m < nt; ++m) {
    for (int ik = 0; ik < nkp; ++ik) out[static_cast<std::size_t>(ik) * nt + m] = f.at(static_cast<std::size_t>(m) * nkp + ik);
  }
  return out;
}

namespace {

using Key = std::array<std::int64_t, 3>;
using Vec3 = std::array<double, 3>;

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 scale(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double len(const Vec3& a) { return std::sqrt(dot(a, a)); }

double det3(const Vec3& a, const Vec3& b, const Vec3& c) { return dot(a, cross(b, c)); }

// Gradient of the linear interpolant on a tetrahedron.
Vec3 tet_gradient(const std::array<Vec3, 4>& v, const std::array<double, 4>& f) {
  const Vec3 e1 = sub(v[1], v[0]);
  const Vec3 e2 = sub(v[2], v[0]);
  const Vec3 e3 = sub(v[3], v[0]);
  const double d = det3(e1, e2, e3);
  const double d1 = f[1] - f[0];
  const double d2 = f[2] - f[0];
  const double d3 = f[3] - f[0];
  // Solve [e1; e2; e3] g = d via the adjugate.
  const Vec3 c23 = cross(e2, e3);
  const Vec3 c31 = cross(e3, e1);
  const Vec3 c12 = cross(e1, e2);
  return {(d1 * c23[0] + d2 * c31[0] + d3 * c12[0]) / d, (d1 * c23[1] + d2 * c31[1] + d3 * c12[1]) / d,
          (d1 * c23[2] + d2 * c31[2] + d3 * c12[2]) / d};
}

struct DirectedEdge {
  Key to;
  Vec3 disp;
};

}  // namespace

std::vector<Polyline3> preimage_loops(std::span<const BlochVector> field, std::array<int, 3> shape,
                                      BlochVector target) {
  const int n1 = shape[0];
  const int n2 = shape[1];
  const int n3 = shape[2];
  if (static_cast<long>(field.size()) != static_cast<long>(n1) * n2 * n3) {
    throw Error(ErrorKind::GridMismatch, "field size does not match shape");
  }
  const auto lin = [&](int i, int j, int m) -> std::int64_t {
    i = ((i % n1) + n1) % n1;
    j = ((j % n2) + n2) % n2;
    m = ((m % n3) + n3) % n3;
    return (static_cast<std::int64_t>(i) * n2 + j) * n3 + m;
  };

  Vec3 a{target.nx, target.ny, target.nz};
  {
    const double l = len(a);
    for (double& c : a) c /= l;
  }
  // Keep the target away from every grid node.
  for (int attempt = 0;; ++attempt) {
    double best = kPi;
    for (const auto& n : field) {
      best = std::min(best, std::acos(std::clamp(n.nx * a[0] + n.ny * a[1] + n.nz * a[2], -1.0, 1.0)));
    }
    if (best >= 1e-3) break;
    if (attempt > 16) throw Error(ErrorKind::OpenCurve, "no regular target value near the requested one");
    const Vec3 kick{0.0031 * (attempt + 1), 0.0017 * (attempt + 1), -0.0023 * (attempt + 1)};
    a = add(a, kick);
    const double l = len(a);
    for (double& c : a) c /= l;
  }
  Vec3 e1 = cross(a, std::abs(a[0]) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0});
  {
    const double l = len(e1);
    for (double& c : e1) c /= l;
  }
  const Vec3 e2 = cross(a, e1);  // (e1, e2, a) right-handed

  std::vector<double> f1(field.size());
  std::vector<double> f2(field.size());
  std::vector<double> fa(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    const Vec3 n{field[i].nx, field[i].ny, field[i].nz};
    f1[i] = dot(n, e1);
    f2[i] = dot(n, e2);
    fa[i] = dot(n, a);
  }

  static const int kPerm[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  static const int kFaces[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};

  std::map<Key, Vec3> anchor;  // first-seen unwrapped position
  std::map<Key, std::vector<DirectedEdge>> out_edges;
  std::map<Key, int> in_count;

  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n2; ++j) {
      for (int m = 0; m < n3; ++m) {
        for (const auto& perm : kPerm) {
          std::array<std::array<int, 3>, 4> vi{};
          vi[0] = {i, j, m};
          for (int s = 0; s < 3; ++s) {
            vi[s + 1] = vi[s];
            vi[s + 1][perm[s]] += 1;
          }
          std::array<Vec3, 4> pos{};
          std::array<std::int64_t, 4> id{};
          std::array<double, 4> v1{};
          std::array<double, 4> v2{};
          std::array<double, 4> va{};
          for (int s = 0; s < 4; ++s) {
            pos[s] = {double(vi[s][0]), double(vi[s][1]), double(vi[s][2])};
            id[s] = lin(vi[s][0], vi[s][1], vi[s][2]);
            v1[s] = f1[id[s]];
            v2[s] = f2[id[s]];
            va[s] = fa[id[s]];
          }
          // Quick reject: the tet must straddle zero in both transverse components.
          const auto [mn1, mx1] = std::minmax_element(v1.begin(), v1.end());
          const auto [mn2, mx2] = std::minmax_element(v2.begin(), v2.end());
          if (*mn1 > 0.0 || *mx1 < 0.0 || *mn2 > 0.0 || *mx2 < 0.0) continue;

          std::vector<std::pair<Key, Vec3>> hits;
          for (const auto& face : kFaces) {
            const int p = face[0];
            const int q = face[1];
            const int r = face[2];
            // lambda_p v(p) + lambda_q v(q) + lambda_r v(r) = 0, sum lambda = 1.
            const double det = v1[p] * (v2[q] - v2[r]) - v1[q] * (v2[p] - v2[r]) + v1[r] * (v2[p] - v2[q]);
            if (det == 0.0) continue;
            const double lp = (v1[q] * v2[r] - v1[r] * v2[q]) / det;
            const double lq = (v1[r] * v2[p] - v1[p] * v2[r]) / det;
            const double lr = (v1[p] * v2[q] - v1[q] * v2[p]) / det;
            if (lp < 0.0 || lq < 0.0 || lr < 0.0) continue;
            if (lp * va[p] + lq * va[q] + lr * va[r] <= 0.0) continue;
            Key key{id[p], id[q], id[r]};
            std::sort(key.begin(), key.end());
            Vec3 x{};
            for (int c = 0; c < 3; ++c) x[c] = lp * pos[p][c] + lq * pos[q][c] + lr * pos[r][c];
            hits.emplace_back(key, x);
          }
          if (hits.empty()) continue;
          if (hits.size() != 2) {
            std::ostringstream os;
            os << hits.size() << " preimage crossings in one tetrahedron near (" << i << "," << j << "," << m << ")";
            throw Error(ErrorKind::OpenCurve, os.str());
          }
          // Orient along grad f1 x grad f2.
          const Vec3 tau = cross(tet_gradient(pos, v1), tet_gradient(pos, v2));
          Vec3 d = sub(hits[1].second, hits[0].second);
          int from = 0;
          if (dot(d, tau) < 0.0) {
            from = 1;
            d = sub(hits[0].second, hits[1].second);
          }
          const Key& kf = hits[from].first;
          const Key& kt = hits[1 - from].first;
          anchor.emplace(kf, hits[from].second);
          anchor.emplace(kt, hits[1 - from].second);
          out_edges[kf].push_back({kt, d});
          in_count[kt] += 1;
        }
      }
    }
  }

  for (const auto& [k, e] : out_edges) {
    if (e.size() != 1 || in_count[k] != 1) throw Error(ErrorKind::OpenCurve, "preimage vertex with degree != 2");
  }
  for (const auto& [k, c] : in_count) {
    if (!out_edges.count(k)) throw Error(ErrorKind::OpenCurve, "preimage curve ends inside the grid");
  }

  std::vector<Polyline3> loops;
  std::map<Key, bool> seen;
  const Vec3 period{double(n1), double(n2), double(n3)};
  for (const auto& [start, _] : out_edges) {
    if (seen[start]) continue;
    Polyline3 line;
    Vec3 p = anchor.at(start);
    Key cur = start;
    while (true) {
      seen[cur] = true;
      line.points.push_back(p);
      const DirectedEdge& e = out_edges.at(cur).front();
      p = add(p, e.disp);
      cur = e.to;
      if (cur == start) break;
      if (seen[cur]) throw Error(ErrorKind::OpenCurve, "preimage walk revisited a vertex");
    }
    const Vec3 shift = sub(p, anchor.at(start));
    for (int c = 0; c < 3; ++c) line.wraps[c] = round_int(shift[c] / period[c]);
    line.closed = true;
    loops.push_back(std::move(line));
  }
  return loops;
}

namespace {

// Exact solid-angle contribution of segment pair (p1 p2), (p3 p4)
// (Klenin and Langowski), divided by 4 pi.
double segment_linking(const Vec3& p1, const Vec3& p2, const Vec3& p3, const Vec3& p4) {
  const Vec3 r13 = sub(p3, p1);
  const Vec3 r14 = sub(p4, p1);
  const Vec3 r23 = sub(p3, p2);
  const Vec3 r24 = sub(p4, p2);
  std::array<Vec3, 4> nv{cross(r13, r14), cross(r14, r24), cross(r24, r23), cross(r23, r13)};
  for (auto& v : nv) {
    const double l = len(v);
    if (l < 1e-14) return 0.0;
    for (double& c : v) c /= l;
  }
  double om = 0.0;
  for (int s = 0; s < 4; ++s) om += std::asin(std::clamp(dot(nv[s], nv[(s + 1) % 4]), -1.0, 1.0));
  const double sg = dot(cross(sub(p4, p3), sub(p2, p1)), r13);
  return (sg > 0.0 ? om : (sg < 0.0 ? -om : 0.0)) / (4.0 * kPi);
}

// Midpoint form of the Gauss integrand, for well-separated segments.
double segment_linking_far(const Vec3& p1, const Vec3& p2, const Vec3& p3, const Vec3& p4) {
  const Vec3 r = sub(scale(add(p1, p2), 0.5), scale(add(p3, p4), 0.5));
  const double rl = len(r);
  return dot(r, cross(sub(p2, p1), sub(p4, p3))) / (4.0 * kPi * rl * rl * rl);
}

struct Seg {
  Vec3 a;
  Vec3 b;
};

// Segments of a loop family; a wrapping loop closes onto its own translate.
std::vector<Seg> family_segments(const std::vector<Polyline3>& fam, const Vec3& period) {
  std::vector<Seg> out;
  for (const auto& l : fam) {
    const std::size_t n = l.points.size();
    for (std::size_t i = 0; i < n; ++i) {
      Vec3 b;
      if (i + 1 < n) {
        b = l.points[i + 1];
      } else {
        for (int c = 0; c < 3; ++c) b[c] = l.points[0][c] + l.wraps[c] * period[c];
      }
      out.push_back({l.points[i], b});
    }
  }
  return out;
}

}  // namespace

double gauss_linking(const Polyline3& a, const Polyline3& b) {
  double total = 0.0;
  const std::size_t na = a.points.size();
  const std::size_t nb = b.points.size();
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      total += segment_linking(a.points[i], a.points[(i + 1) % na], b.points[j], b.points[(j + 1) % nb]);
    }
  }
  return total;
}

IntegerResult linking_number(const std::vector<Polyline3>& a, const std::vector<Polyline3>& b,
                             std::array<double, 3> periods, double min_dist, int image_radius) {
  for (const auto* fam : {&a, &b}) {
    std::array<int, 3> net{0, 0, 0};
    for (const auto& l : *fam) {
      for (int c = 0; c < 3; ++c) net[c] += l.wraps[c];
    }
    if (net != std::array<int, 3>{0, 0, 0}) {
      throw Error(ErrorKind::LoopsTooClose, "preimage family has nonzero net winding around the torus");
    }
  }
  const std::vector<Seg> sa = family_segments(a, periods);
  const std::vector<Seg> sb = family_segments(b, periods);
  // With zero net winding the periodic Biot-Savart sum converges; the
  // nearest shell uses the exact solid angle, outer shells the midpoint form.
  const int r = std::max(1, image_radius);
  double total = 0.0;
  for (int s0 = -r; s0 <= r; ++s0) {
    for (int s1 = -r; s1 <= r; ++s1) {
      for (int s2 = -r; s2 <= r; ++s2) {
        const Vec3 off{s0 * periods[0], s1 * periods[1], s2 * periods[2]};
        const bool near = std::max({std::abs(s0), std::abs(s1), std::abs(s2)}) <= 1;
        for (const auto& x : sa) {
          for (const auto& y : sb) {
            const Vec3 q1 = add(y.a, off);
            const Vec3 q2 = add(y.b, off);
            if (near) {
              if (len(sub(x.a, q1)) < min_dist) {
                std::ostringstream os;
                os << "preimage loops closer than " << min_dist << " grid cells";
                throw Error(ErrorKind::LoopsTooClose, os.str());
              }
              total += segment_linking(x.a, x.b, q1, q2);
            } else {
              total += segment_linking_far(x.a, x.b, q1, q2);
            }
          }
        }
      }
    }
  }
  if (std::abs(total - std::round(total)) > 0.1) {
    std::ostringstream os;
    os << "linking integral " << total << " not near an integer";
    throw Error(ErrorKind::NotConverged, os.str());
  }
  return {round_int(total), total};
}

Residue pontryagin_from_gaps(int w0, int w_pi) {
  const int m = 2 * (w_pi - w0);
  if (m == 0) return {w_pi, 0};
  const int am = std::abs(m);
  int r = ((w_pi % am) + am) % am;
  if (2 * r > am) r -= am;
  return {r, m};
}

IntegerResult dclass_overlap_product(const FloquetSolution& sol) {
  if (!std::holds_alternative<DClass>(sol.model)) throw Error(ErrorKind::InvalidModel, "class-D drive required");
  const int nk = sol.grid.nk;
  if (nk % 2 != 0) throw Error(ErrorKind::InvalidGrid, "nk must be even to include k = pi");
  double sum = 0.0;
  for (int m = 0; m < sol.grid.nt; ++m) {
    const double o = std::norm(inner(sol.minus(m, nk / 2), sol.minus(m, 0)));
    sum += 2.0 * o - 1.0;
  }
  const double raw = sum / sol.grid.nt;
  if (std::abs(raw) < 0.99) {
    std::ostringstream os;
    os << "V0 V_pi overlap " << raw << " is not +-1";
    throw Error(ErrorKind::NotQuantized, os.str());
  }
  return {raw > 0.0 ? 1 : -1, raw};
}

IntegerResult half_bz_chern(const FloquetSolution& sol, bool upper_half) {
  const int nk = sol.grid.nk;
  const int nt = sol.grid.nt;
  if (sol.grid.dims != 1 || nk % 2 != 0) throw Error(ErrorKind::InvalidGrid, "needs a 1D grid with even nk");
  const int j0 = upper_half ? nk / 2 : 0;
  double sum = 0.0;
  for (int m = 0; m < nt; ++m) {
    const int m2 = (m + 1) % nt;
    for (int j = j0; j < j0 + nk / 2; ++j) {
      const int j2 = (j + 1) % nk;
      sum += plaquette_arg(sol.minus(m, j), sol.minus(m, j2), sol.minus(m2, j2), sol.minus(m2, j));
    }
  }
  // (1/pi) integral of Im<d_t phi|d_k phi>: the plaquette phase in the
  // (k, t) orientation is minus the Berry flux.
  const double raw = -sum / (2.0 * kPi);
  if (std::abs(raw - std::round(raw)) > 1e-2) {
    std::ostringstream os;
    os << "half-zone Chern raw value " << raw;
    throw Error(ErrorKind::NotConverged, os.str());
  }
  return {round_int(raw), raw};
}

namespace {

// Sign changes of (x - level), ignoring exact zeros, so a touch counts twice.
int sign_changes(const std::vector<double>& x, double level) {
  int count = 0;
  int prev = 0;
  for (double v : x) {
    const double d = v - level;
    const int s = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    if (s == 0) continue;
    if (prev != 0 && s != prev) ++count;
    prev = s;
  }
  return count;
}

}  // namespace

std::array<int, 2> dclass_crossings(const DriveModel& m, int nt_fine) {
  if (!std::holds_alternative<DClass>(m)) throw Error(ErrorKind::InvalidModel, "class-D drive required");
  const double T = period_of(m);
  const double eta = 1e-9;
  std::array<int, 2> counts{0, 0};
  for (double k : {0.0, kPi}) {
    // At k = 0, pi the drive only has a sigma_y part, so U = exp(-i alpha sigma_y)
    // is a real rotation; eigenvalues exp(-+i alpha).
    std::vector<double> alpha;
    alpha.reserve(nt_fine + 1);
    CMat2 u = CMat2::identity();
    double prev = 0.0;
    alpha.push_back(0.0);
    for (int s = 0; s < nt_fine; ++s) {
      const double t0 = s * T / nt_fine;
      const double t1 = (s + 1 == nt_fine) ? T : (s + 1) * T / nt_fine;
      u = evolve_between(m, {k, 0.0}, t0, t1, 1, T) * u;
      const double raw = std::atan2(u(1, 0).real(), u(0, 0).real());
      const double next = prev + wrap_angle(raw - prev);
      alpha.push_back(next);
      prev = next;
    }
    const auto [lo, hi] = std::minmax_element(alpha.begin(), alpha.end());
    const int mlo = static_cast<int>(std::floor(*lo / (2.0 * kPi))) - 1;
    const int mhi = static_cast<int>(std::ceil(*hi / (2.0 * kPi))) + 1;
    for (int n = mlo; n <= mhi; ++n) {
      // Through +1: alpha = 2 pi n. The small offset makes a departure from
      // alpha = 0 downwards count as a crossing and upwards not.
      counts[0] += sign_changes(alpha, 2.0 * kPi * n - eta);
      counts[1] += sign_changes(alpha, kPi + 2.0 * kPi * n);
    }
  }
  return counts;
}

DClassZ2 dclass_invariants(const FloquetSolution& sol, int refine) {
  DClassZ2 z;
  const IntegerResult ch = half_bz_chern(sol);
  const IntegerResult ov = dclass_overlap_product(sol);
  z.c_h = ch.value;
  z.overlap = ov.raw;
  z.v_pi = (ch.value % 2 == 0) ? 1 : -1;
  z.v0 = ov.value * z.v_pi;
  const auto c = dclass_crossings(sol.model, std::max(1, refine) * sol.grid.nt);
  z.cross_v0 = c[0] % 2 == 0 ? 1 : -1;
  z.cross_v_pi = c[1] % 2 == 0 ? 1 : -1;
  if (z.cross_v0 != z.v0 || z.cross_v_pi != z.v_pi) {
    std::ostringstream os;
    os << "overlap/C_h route (" << z.v0 << ", " << z.v_pi << ") vs crossing route (" << z.cross_v0 << ", "
       << z.cross_v_pi << ")";
    throw Error(ErrorKind::MethodMismatch, os.str());
  }
  return z;
}

cplx pfaffian2(const CMat2& x, double skew_tol) {
  const double r = std::max({std::abs(x(0, 0)), std::abs(x(1, 1)), std::abs(x(0, 1) + x(1, 0))});
  if (r > skew_tol) {
    std::ostringstream os;
    os << "skew-symmetry residual " << r;
    throw Error(ErrorKind::NotSkewSymmetric, os.str());
  }
  return x(0, 1);
}

int pfaffian_sign_check(const CMat2& h0, const CMat2& hpi, double period, double skew_tol) {
  const cplx f{0.0, -period};
  const cplx p0 = pfaffian2(f * h0, skew_tol);
  const cplx pp = pfaffian2(f * hpi, skew_tol);
  const double prod = (p0 * pp).real();
  return prod >= 0.0 ? 1 : -1;
}

int pfaffian_sign_check(const FloquetSolution& sol) {
  const int nk = sol.grid.nk;
  if (sol.grid.dims != 1 || nk % 2 != 0) throw Error(ErrorKind::InvalidGrid, "needs a 1D grid with even nk");
  // Principal logarithm: cut at quasienergy pi/T, traceless at k = 0, pi.
  const EffectiveHamiltonian h =
      effective_hamiltonian(std::vector<CMat2>{sol.u_period(0), sol.u_period(nk / 2)}, kPi, sol.period);
  return pfaffian_sign_check(h.h_eff[0], h.h_eff[1], sol.period);
}

BlochVector chern_insulator_vector(int c, const Momentum& k) {
  if (std::abs(c) > 2) throw Error(ErrorKind::UnsupportedChern, "only |c| <= 2 is supported");
  if (std::abs(c) == 2) {
    // Two copies of the |c| = 1 texture along kx.
    return chern_insulator_vector(c / 2, {2.0 * k.kx, k.ky});
  }
  // Regularized Dirac texture; the mass picks the Chern number of the lower band.
  const double mass = c == 0 ? 3.0 : (c > 0 ? 1.0 : -1.0);
  BlochVector h{std::sin(k.kx), std::sin(k.ky), mass - std::cos(k.kx) - std::cos(k.ky)};
  const double n = h.norm();
  return {h.nx / n, h.ny / n, h.nz / n};
}

DriveModel quench_construction(int c_i, int c_f, double delta) {
  if (std::abs(c_i) > 2 || std::abs(c_f) > 2) throw Error(ErrorKind::UnsupportedChern, "only |c| <= 2 is supported");
  if (!(delta > 0.0) || delta > 0.05) throw Error(ErrorKind::InvalidModel, "delta must lie in (0, 0.05]");
  PiecewiseCustom d;
  d.period = kPi;
  d.dims = 2;
  const double f1 = 1.0 / (1.0 + delta);
  d.segments.push_back({f1, [c_f, delta](const Momentum& k) {
                          const BlochVector n = chern_insulator_vector(c_f, k);
                          const double s = 1.0 + delta;
                          return PauliCoeffs{0.0, s * n.nx, s * n.ny, s * n.nz};
                        }});
  d.segments.push_back({1.0 - f1, [c_i](const Momentum& k) {
                          const BlochVector n = chern_insulator_vector(c_i, k);
                          return PauliCoeffs{0.0, -n.nx, -n.ny, -n.nz};
                        }});
  return d;
}

}  // namespace fpl
