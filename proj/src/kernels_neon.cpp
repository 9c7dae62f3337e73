#include "tempsync/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)

#include <arm_neon.h>

#include <cmath>
#include <cstddef>

namespace tsync::kernels {
namespace {

double dot_neon(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a.data() + k), vld1q_f64(b.data() + k));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a.data() + k + 2), vld1q_f64(b.data() + k + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; k < n; ++k) s += a[k] * b[k];
  return s;
}

void axpy_neon(double alpha, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2)
    vst1q_f64(y.data() + k, vfmaq_f64(vld1q_f64(y.data() + k), va, vld1q_f64(x.data() + k)));
  for (; k < n; ++k) y[k] += alpha * x[k];
}

double sq_dist_neon(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(a.data() + k), vld1q_f64(b.data() + k));
    acc = vfmaq_f64(acc, d, d);
  }
  double s = vaddvq_f64(acc);
  for (; k < n; ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

double abs_diff_sum_neon(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2)
    acc = vaddq_f64(acc, vabdq_f64(vld1q_f64(a.data() + k), vld1q_f64(b.data() + k)));
  double s = vaddvq_f64(acc);
  for (; k < n; ++k) s += std::fabs(a[k] - b[k]);
  return s;
}

double abs_sum_neon(std::span<const double> a) {
  const std::size_t n = a.size();
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) acc = vaddq_f64(acc, vabsq_f64(vld1q_f64(a.data() + k)));
  double s = vaddvq_f64(acc);
  for (; k < n; ++k) s += std::fabs(a[k]);
  return s;
}

MinMax minmax_neon(std::span<const double> a) {
  const std::size_t n = a.size();
  MinMax r{a[0], a[0]};
  std::size_t k = 0;
  if (n >= 2) {
    float64x2_t vmin = vld1q_f64(a.data());
    float64x2_t vmax = vmin;
    for (k = 2; k + 2 <= n; k += 2) {
      const float64x2_t v = vld1q_f64(a.data() + k);
      vmin = vminq_f64(vmin, v);
      vmax = vmaxq_f64(vmax, v);
    }
    r = {vminvq_f64(vmin), vmaxvq_f64(vmax)};
  }
  for (; k < n; ++k) {
    if (a[k] < r.min) r.min = a[k];
    if (a[k] > r.max) r.max = a[k];
  }
  return r;
}

constexpr KernelTable kNeon{"neon",           dot_neon,     axpy_neon,  sq_dist_neon,
                            abs_diff_sum_neon, abs_sum_neon, minmax_neon};

}  // namespace

const KernelTable* neon_table() { return &kNeon; }

}  // namespace tsync::kernels

#else

namespace tsync::kernels {
const KernelTable* neon_table() { return nullptr; }
}  // namespace tsync::kernels

#endif
