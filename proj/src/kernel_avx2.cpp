// AVX2 variant of the determinant kernel. Compiled with -mavx2 and only
// called after a runtime CPU check.

#include <cmath>
#include <limits>

#include "fpl/error.hpp"
#include "fpl/learn.hpp"

#if defined(FPL_HAVE_AVX2)
#include <immintrin.h>
#endif

namespace fpl {

#if defined(FPL_HAVE_AVX2)

double kernel_log_avx2(const double* ax, const double* ay, const double* az, const double* bx,
                       const double* by, const double* bz, std::size_t n, double epsilon) {
  const double eps2 = epsilon * epsilon;
  const __m256d veps2 = _mm256_set1_pd(eps2);
  const __m256d vskip = _mm256_set1_pd(kKernelSkipX);
  double acc = 0.0;
  alignas(32) double xs[4];
  std::size_t i = 0;
  // |det(Q_a + Q_b)| = |n_a + n_b|^2, summed in the same order as det2 so
  // both variants agree bit for bit. Only nodes close to antiparallel
  // contribute, so the transcendental part runs on the rare hit lanes.
  for (; i + 4 <= n; i += 4) {
    const __m256d mx = _mm256_add_pd(_mm256_loadu_pd(ax + i), _mm256_loadu_pd(bx + i));
    const __m256d my = _mm256_add_pd(_mm256_loadu_pd(ay + i), _mm256_loadu_pd(by + i));
    const __m256d mz = _mm256_add_pd(_mm256_loadu_pd(az + i), _mm256_loadu_pd(bz + i));
    const __m256d s = _mm256_add_pd(_mm256_mul_pd(mz, mz), _mm256_add_pd(_mm256_mul_pd(mx, mx), _mm256_mul_pd(my, my)));
    const __m256d x = _mm256_div_pd(_mm256_mul_pd(s, s), veps2);
    const int hit = _mm256_movemask_pd(_mm256_cmp_pd(x, vskip, _CMP_LE_OQ));
    if (hit == 0) continue;
    _mm256_store_pd(xs, x);
    for (int l = 0; l < 4; ++l) {
      if (!(hit & (1 << l))) continue;
      const double f = -std::expm1(-xs[l]);
      if (f < kKernelFloor) return -std::numeric_limits<double>::infinity();
      acc += std::log(f);
    }
  }
  for (; i < n; ++i) {
    const double mx = ax[i] + bx[i];
    const double my = ay[i] + by[i];
    const double mz = az[i] + bz[i];
    const double s = mz * mz + (mx * mx + my * my);
    const double x = s * s / eps2;
    if (x > kKernelSkipX) continue;
    const double f = -std::expm1(-x);
    if (f < kKernelFloor) return -std::numeric_limits<double>::infinity();
    acc += std::log(f);
  }
  return acc;
}

#else

double kernel_log_avx2(const double* ax, const double* ay, const double* az, const double* bx,
                       const double* by, const double* bz, std::size_t n, double epsilon) {
  return kernel_log_scalar(ax, ay, az, bx, by, bz, n, epsilon);
}

#endif

}  // namespace fpl
