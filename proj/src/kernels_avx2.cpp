// Compiled with -mavx2 -mfma on x86-64; only reached after a runtime CPU check.
#include "tempsync/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

namespace tsync::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

inline __m256d vabs(__m256d v) {
  const __m256d mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  return _mm256_and_pd(v, mask);
}

double dot_avx2(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const double* pa = a.data();
  const double* pb = b.data();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + k), _mm256_loadu_pd(pb + k), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + k + 4), _mm256_loadu_pd(pb + k + 4), acc1);
  }
  for (; k + 4 <= n; k += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(pa + k), _mm256_loadu_pd(pb + k), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; k < n; ++k) s += pa[k] * pb[k];
  return s;
}

void axpy_avx2(double alpha, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  const double* px = x.data();
  double* py = y.data();
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    __m256d vy = _mm256_loadu_pd(py + k);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(px + k), vy);
    _mm256_storeu_pd(py + k, vy);
  }
  for (; k < n; ++k) py[k] += alpha * px[k];
}

double sq_dist_avx2(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const double* pa = a.data();
  const double* pb = b.data();
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(pa + k), _mm256_loadu_pd(pb + k));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; k < n; ++k) {
    const double d = pa[k] - pb[k];
    s += d * d;
  }
  return s;
}

double abs_diff_sum_avx2(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  const double* pa = a.data();
  const double* pb = b.data();
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4)
    acc = _mm256_add_pd(acc, vabs(_mm256_sub_pd(_mm256_loadu_pd(pa + k), _mm256_loadu_pd(pb + k))));
  double s = hsum(acc);
  for (; k < n; ++k) s += std::fabs(pa[k] - pb[k]);
  return s;
}

double abs_sum_avx2(std::span<const double> a) {
  const std::size_t n = a.size();
  const double* pa = a.data();
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) acc = _mm256_add_pd(acc, vabs(_mm256_loadu_pd(pa + k)));
  double s = hsum(acc);
  for (; k < n; ++k) s += std::fabs(pa[k]);
  return s;
}

MinMax minmax_avx2(std::span<const double> a) {
  const std::size_t n = a.size();
  const double* pa = a.data();
  MinMax r{pa[0], pa[0]};
  std::size_t k = 0;
  if (n >= 4) {
    __m256d vmin = _mm256_loadu_pd(pa);
    __m256d vmax = vmin;
    for (k = 4; k + 4 <= n; k += 4) {
      const __m256d v = _mm256_loadu_pd(pa + k);
      vmin = _mm256_min_pd(vmin, v);
      vmax = _mm256_max_pd(vmax, v);
    }
    alignas(32) double lo[4];
    alignas(32) double hi[4];
    _mm256_store_pd(lo, vmin);
    _mm256_store_pd(hi, vmax);
    r = {lo[0], hi[0]};
    for (int j = 1; j < 4; ++j) {
      if (lo[j] < r.min) r.min = lo[j];
      if (hi[j] > r.max) r.max = hi[j];
    }
  }
  for (; k < n; ++k) {
    if (pa[k] < r.min) r.min = pa[k];
    if (pa[k] > r.max) r.max = pa[k];
  }
  return r;
}

constexpr KernelTable kAvx2{"avx2",           dot_avx2,     axpy_avx2,  sq_dist_avx2,
                            abs_diff_sum_avx2, abs_sum_avx2, minmax_avx2};

}  // namespace

const KernelTable* avx2_table() { return &kAvx2; }

}  // namespace tsync::kernels

#else

namespace tsync::kernels {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace tsync::kernels

#endif
