#include <cmath>
#include <limits>

#include "fpl/error.hpp"
#include "fpl/learn.hpp"

namespace fpl {

bool avx2_available() {
#if defined(FPL_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

std::string_view kernel_impl_name(KernelImpl impl) {
  switch (impl) {
    case KernelImpl::Scalar: return "scalar";
    case KernelImpl::Avx2: return "avx2";
    case KernelImpl::Auto: return avx2_available() ? "avx2" : "scalar";
  }
  return "scalar";
}

double kernel_log_scalar(const double* ax, const double* ay, const double* az, const double* bx,
                         const double* by, const double* bz, std::size_t n, double epsilon) {
  const double eps2 = epsilon * epsilon;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // Q = -n.sigma for both samples.
    const CMat2 qa = pauli_compose({0.0, -ax[i], -ay[i], -az[i]});
    const CMat2 qb = pauli_compose({0.0, -bx[i], -by[i], -bz[i]});
    const double d = std::abs(det2(qa + qb));
    const double x = d * d / eps2;
    if (x > kKernelSkipX) continue;
    const double f = -std::expm1(-x);
    if (f < kKernelFloor) return -std::numeric_limits<double>::infinity();
    acc += std::log(f);
  }
  return acc;
}

double kernel_entry(const FfoField& a, const FfoField& b, double epsilon, KernelImpl impl) {
  if (!(a.grid == b.grid) || a.size() != b.size()) {
    throw Error(ErrorKind::GridMismatch, "kernel operands were sampled on different grids");
  }
  const bool vec = impl == KernelImpl::Avx2 || (impl == KernelImpl::Auto && avx2_available());
  const double l = vec ? kernel_log_avx2(a.nx.data(), a.ny.data(), a.nz.data(), b.nx.data(), b.ny.data(),
                                         b.nz.data(), a.size(), epsilon)
                       : kernel_log_scalar(a.nx.data(), a.ny.data(), a.nz.data(), b.nx.data(), b.ny.data(),
                                           b.nz.data(), a.size(), epsilon);
  return std::exp(l);
}

}  // namespace fpl
