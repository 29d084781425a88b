#include "fpl/learn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "fpl/error.hpp"
#include "fpl/parallel.hpp"

namespace fpl {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Labels in order of first appearance of each root.
std::vector<int> labels_from(UnionFind& uf, int n, int& count) {
  std::map<int, int> ids;
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    const auto [it, fresh] = ids.emplace(uf.find(i), static_cast<int>(ids.size()));
    labels[i] = it->second;
  }
  count = static_cast<int>(ids.size());
  return labels;
}

}  // namespace

KernelMatrix kernel_matrix(std::span<const FfoField> data, double epsilon, int jobs, KernelImpl impl) {
  const int n = static_cast<int>(data.size());
  if (n < 1) throw Error(ErrorKind::GridMismatch, "empty dataset");
  for (const auto& f : data) {
    if (!(f.grid == data[0].grid) || f.size() != data[0].size()) {
      throw Error(ErrorKind::GridMismatch, "dataset samples use different grids");
    }
  }
  KernelMatrix k;
  k.n = n;
  k.epsilon = epsilon;
  k.entries.assign(static_cast<std::size_t>(n) * n, 0.0);
  // Row i owns the entries (i, j >= i); each is written once, so the result
  // does not depend on thread scheduling.
  parallel_for(n, jobs, [&](std::size_t row) {
    const int i = static_cast<int>(row);
    for (int j = i; j < n; ++j) {
      const double v = kernel_entry(data[i], data[j], epsilon, impl);
      k.entries[static_cast<std::size_t>(i) * n + j] = v;
      k.entries[static_cast<std::size_t>(j) * n + i] = v;
    }
  });
  return k;
}

DiffusionSpectrum diffusion_spectrum(const KernelMatrix& k) {
  const int n = k.n;
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> km(k.entries.data(), n, n);
  DiffusionSpectrum s;
  s.row_sums = km.rowwise().sum();
  for (int i = 0; i < n; ++i) {
    if (!(s.row_sums(i) > 0.0)) {
      std::ostringstream os;
      os << "kernel row " << i << " sums to zero";
      throw Error(ErrorKind::ZeroRow, os.str());
    }
  }
  const Eigen::VectorXd dm = s.row_sums.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd sym = dm.asDiagonal() * km * dm.asDiagonal();
  sym = 0.5 * (sym + sym.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::NotConverged, "symmetric eigensolver failed");

  // Eigen returns ascending order.
  s.eigenvalues.resize(n);
  s.right.resize(n, n);
  const double total = s.row_sums.sum();
  for (int c = 0; c < n; ++c) {
    const int src = n - 1 - c;
    double lam = es.eigenvalues()(src);
    if (lam < 0.0 && lam > -1e-9) lam = 0.0;
    if (lam > 1.0 && lam < 1.0 + 1e-9) lam = 1.0;
    s.eigenvalues(c) = lam;
    // v = D^-1/2 psi, scaled so sum_i pi_i v_i^2 = 1 with pi = d / sum d.
    Eigen::VectorXd v = dm.cwiseProduct(es.eigenvectors().col(src)) * std::sqrt(total);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    s.right.col(c) = v;
  }
  return s;
}

double diffusion_distance(const DiffusionSpectrum& s, int i, int j, int ell) {
  if (ell < 1) throw Error(ErrorKind::InvalidGrid, "diffusion steps must be >= 1");
  double sum = 0.0;
  for (Eigen::Index n = 0; n < s.eigenvalues.size(); ++n) {
    const double w = std::pow(s.eigenvalues(n), 2.0 * ell);
    const double d = s.right(i, n) - s.right(j, n);
    sum += w * d * d;
  }
  return std::sqrt(sum);
}

ClusterAssignment cluster(const DiffusionSpectrum& s, const ClusterOptions& opt) {
  const int n = static_cast<int>(s.eigenvalues.size());
  ClusterAssignment out;
  out.method = ClusterMethod::DiffusionMap;
  int dom = 0;
  for (int c = 0; c < n; ++c) {
    const double lam = s.eigenvalues(c);
    if (lam > opt.dominance_threshold) {
      ++dom;
    } else if (lam >= opt.ambiguous_low) {
      std::ostringstream os;
      os << "eigenvalue " << c << " = " << lam << " lies in [" << opt.ambiguous_low << ", "
         << opt.dominance_threshold << "]";
      throw Error(ErrorKind::AmbiguousSpectrum, os.str());
    }
  }
  out.dominant_count = dom;

  // The lambda_0 eigenvector is constant and carries no distance, so the
  // embedding uses the remaining dominant coordinates only.
  if (dom <= 1) {
    out.labels.assign(n, 0);
    out.n_clusters = 1;
    return out;
  }
  Eigen::MatrixXd emb(n, dom - 1);
  for (int c = 1; c < dom; ++c) emb.col(c - 1) = std::pow(s.eigenvalues(c), opt.ell) * s.right.col(c);
  double diam = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) diam = std::max(diam, (emb.row(i) - emb.row(j)).norm());
  }
  const double cut = opt.cutoff_fraction * diam;
  UnionFind uf(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if ((emb.row(i) - emb.row(j)).norm() <= cut) uf.unite(i, j);
    }
  }
  out.labels = labels_from(uf, n, out.n_clusters);
  return out;
}

ClusterAssignment components_oracle(const KernelMatrix& k, double edge_threshold) {
  UnionFind uf(k.n);
  for (int i = 0; i < k.n; ++i) {
    for (int j = i + 1; j < k.n; ++j) {
      if (k(i, j) > edge_threshold) uf.unite(i, j);
    }
  }
  ClusterAssignment out;
  out.method = ClusterMethod::ConnectedComponents;
  out.labels = labels_from(uf, k.n, out.n_clusters);
  out.dominant_count = out.n_clusters;
  return out;
}

bool same_partition(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab;
  std::map<int, int> ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto [x, fx] = ab.emplace(a[i], b[i]);
    const auto [y, fy] = ba.emplace(b[i], a[i]);
    if (x->second != b[i] || y->second != a[i]) return false;
  }
  return true;
}

}  // namespace fpl
