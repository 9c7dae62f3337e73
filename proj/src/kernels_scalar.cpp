#include "tempsync/kernels.hpp"

#include <cmath>
#include <cstddef>

namespace tsync::kernels {
namespace {

double dot_scalar(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

void axpy_scalar(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t k = 0; k < x.size(); ++k) y[k] += alpha * x[k];
}

double sq_dist_scalar(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

double abs_diff_sum_scalar(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::fabs(a[k] - b[k]);
  return s;
}

double abs_sum_scalar(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += std::fabs(v);
  return s;
}

MinMax minmax_scalar(std::span<const double> a) {
  MinMax r{a[0], a[0]};
  for (std::size_t k = 1; k < a.size(); ++k) {
    if (a[k] < r.min) r.min = a[k];
    if (a[k] > r.max) r.max = a[k];
  }
  return r;
}

constexpr KernelTable kScalar{"scalar",         dot_scalar,     axpy_scalar,  sq_dist_scalar,
                              abs_diff_sum_scalar, abs_sum_scalar, minmax_scalar};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace tsync::kernels
