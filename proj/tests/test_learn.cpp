#include <doctest.h>

#include <cmath>
#include <random>

#include "fpl/error.hpp"
#include "fpl/floquet.hpp"
#include "fpl/learn.hpp"

using namespace fpl;

namespace {

FfoField random_field(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g;
  FfoField f;
  for (std::size_t i = 0; i < n; ++i) {
    const BlochVector v{g(rng), g(rng), g(rng)};
    const double r = v.norm();
    f.nx.push_back(v.nx / r);
    f.ny.push_back(v.ny / r);
    f.nz.push_back(v.nz / r);
  }
  return f;
}

FfoField aiii_field(double re, double im) {
  return ffo(floquet_solve(Aiii{re * kPi, im * kPi, 0.2 * kPi, 1.0}, GridSpec{64, 32, 1, 64}));
}

KernelMatrix blocks(const std::vector<int>& sizes) {
  int n = 0;
  for (int s : sizes) n += s;
  KernelMatrix k{n, 0.01, std::vector<double>(std::size_t(n) * n, 0.0)};
  int off = 0;
  for (int s : sizes) {
    for (int i = off; i < off + s; ++i) {
      for (int j = off; j < off + s; ++j) k.entries[std::size_t(i) * n + j] = 1.0;
    }
    off += s;
  }
  return k;
}

}  // namespace

TEST_CASE("kernel entries") {
  std::mt19937_64 rng(5);
  const FfoField a = random_field(rng, 100);
  CHECK(kernel_entry(a, a, 0.01) == doctest::Approx(1.0));
  FfoField b = a;
  b.nx[17] = -a.nx[17];
  b.ny[17] = -a.ny[17];
  b.nz[17] = -a.nz[17];
  CHECK(kernel_entry(a, b, 0.01) == 0.0);
  CHECK(kernel_entry(a, b, 0.01) == kernel_entry(b, a, 0.01));
}

TEST_CASE("scalar and AVX2 kernels agree bitwise") {
  if (!avx2_available()) return;
  std::mt19937_64 rng(9);
  for (std::size_t n : {1u, 3u, 4u, 5u, 7u, 64u, 2047u}) {
    const FfoField a = random_field(rng, n);
    FfoField b = random_field(rng, n);
    // Near-antiparallel nodes exercise the large-argument branch.
    b.nx[0] = -a.nx[0] + 1e-3;
    b.ny[0] = -a.ny[0];
    b.nz[0] = -a.nz[0];
    for (double eps : {0.01, 0.1, 1.0}) {
      const double s = kernel_log_scalar(a.nx.data(), a.ny.data(), a.nz.data(), b.nx.data(), b.ny.data(),
                                         b.nz.data(), n, eps);
      const double v = kernel_log_avx2(a.nx.data(), a.ny.data(), a.nz.data(), b.nx.data(), b.ny.data(),
                                       b.nz.data(), n, eps);
      CHECK(s == v);
      CHECK(kernel_entry(a, b, eps, KernelImpl::Scalar) == kernel_entry(a, b, eps, KernelImpl::Avx2));
    }
  }
}

TEST_CASE("AIII phase points decouple") {
  const FfoField top = aiii_field(0.2, 0.2);
  const FfoField bottom = aiii_field(0.6, 0.2);
  const FfoField mid = aiii_field(0.25, 0.40);
  CHECK(kernel_entry(top, bottom, 0.01) < 1e-6);
  const std::vector<FfoField> three{top, mid, bottom};
  const KernelMatrix k = kernel_matrix(three, 0.01, 1);
  for (int i = 0; i < 3; ++i) {
    CHECK(k(i, i) == doctest::Approx(1.0));
    for (int j = 0; j < 3; ++j) {
      if (i != j) CHECK(k(i, j) < 1e-6);
    }
  }
  const std::vector<FfoField> twins{top, top};
  const KernelMatrix t = kernel_matrix(twins, 0.01, 1);
  for (double e : t.entries) CHECK(e == doctest::Approx(1.0));
}

TEST_CASE("kernel matrix is independent of the thread count") {
  std::mt19937_64 rng(13);
  std::vector<FfoField> data;
  for (int i = 0; i < 9; ++i) data.push_back(random_field(rng, 300));
  const KernelMatrix a = kernel_matrix(data, 2.0, 1);
  const KernelMatrix b = kernel_matrix(data, 2.0, 4);
  CHECK(a.entries == b.entries);
  for (int i = 0; i < a.n; ++i) {
    for (int j = 0; j < a.n; ++j) {
      CHECK(a(i, j) == a(j, i));
      CHECK(a(i, j) >= 0.0);
      CHECK(a(i, j) <= 1.0);
    }
  }
}

TEST_CASE("diffusion spectra of block kernels") {
  const DiffusionSpectrum one = diffusion_spectrum(blocks({5}));
  CHECK(one.eigenvalues(0) == doctest::Approx(1.0));
  for (int i = 1; i < 5; ++i) CHECK(std::abs(one.eigenvalues(i)) < 1e-12);

  const DiffusionSpectrum two = diffusion_spectrum(blocks({3, 4}));
  CHECK(two.eigenvalues(0) == doctest::Approx(1.0));
  CHECK(two.eigenvalues(1) == doctest::Approx(1.0));
  CHECK(std::abs(two.eigenvalues(2)) < 1e-12);

  CHECK(diffusion_distance(two, 2, 2, 100) == 0.0);
  CHECK(diffusion_distance(two, 0, 1, 100) < 1e-8);
  CHECK(diffusion_distance(two, 0, 5, 100) > 0.1);

  KernelMatrix zero{2, 0.01, {0.0, 0.0, 0.0, 0.0}};
  CHECK_THROWS_AS(diffusion_spectrum(zero), Error);
}

TEST_CASE("clustering and the components oracle") {
  const ClusterAssignment single = cluster(diffusion_spectrum(blocks({6})));
  CHECK(single.n_clusters == 1);

  const KernelMatrix k = blocks({3, 2, 4});
  const ClusterAssignment c = cluster(diffusion_spectrum(k));
  CHECK(c.n_clusters == 3);
  CHECK(c.dominant_count == 3);
  CHECK(c.labels == std::vector<int>{0, 0, 0, 1, 1, 2, 2, 2, 2});
  const ClusterAssignment o = components_oracle(k);
  CHECK(o.method == ClusterMethod::ConnectedComponents);
  CHECK(same_partition(c.labels, o.labels));

  KernelMatrix eye{3, 0.01, {1, 0, 0, 0, 1, 0, 0, 0, 1}};
  CHECK(components_oracle(eye).n_clusters == 3);

  const std::vector<int> a{0, 0, 1, 2};
  const std::vector<int> b{5, 5, 3, 1};
  const std::vector<int> c2{0, 1, 1, 2};
  CHECK(same_partition(a, b));
  CHECK_FALSE(same_partition(a, c2));
}

TEST_CASE("ambiguous spectra are refused") {
  // Two blocks weakly coupled: the second eigenvalue lands in [0.9, 0.99].
  KernelMatrix k = blocks({4, 4});
  for (int i = 0; i < 4; ++i) {
    for (int j = 4; j < 8; ++j) {
      k.entries[std::size_t(i) * 8 + j] = 0.01;
      k.entries[std::size_t(j) * 8 + i] = 0.01;
    }
  }
  const DiffusionSpectrum s = diffusion_spectrum(k);
  REQUIRE(s.eigenvalues(1) > 0.9);
  REQUIRE(s.eigenvalues(1) < 0.99);
  CHECK_THROWS_AS(cluster(s), Error);
}
