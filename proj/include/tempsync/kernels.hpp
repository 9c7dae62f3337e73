#pragma once

// Data-parallel inner loops used by the integrator and the certificate code.
// Each kernel has a portable scalar reference and optional AVX2/NEON variants;
// the active table is chosen once at runtime from the CPU features.

#include <span>
#include <string_view>

namespace tsync::kernels {

using DotFn = double (*)(std::span<const double>, std::span<const double>);
// y += alpha * x
using AxpyFn = void (*)(double, std::span<const double>, std::span<double>);
// sum_k (a_k - b_k)^2
using SqDistFn = double (*)(std::span<const double>, std::span<const double>);
// sum_k |a_k - b_k|
using AbsDiffSumFn = double (*)(std::span<const double>, std::span<const double>);
// sum_k |a_k|
using AbsSumFn = double (*)(std::span<const double>);
struct MinMax {
  double min;
  double max;
};
// Requires a nonempty input.
using MinMaxFn = MinMax (*)(std::span<const double>);

struct KernelTable {
  std::string_view name;
  DotFn dot;
  AxpyFn axpy;
  SqDistFn sq_dist;
  AbsDiffSumFn abs_diff_sum;
  AbsSumFn abs_sum;
  MinMaxFn minmax;
};

enum class Backend { Auto, Scalar, Avx2, Neon };

const KernelTable& scalar_table();
// nullptr when the variant was not compiled for this target.
const KernelTable* avx2_table();
const KernelTable* neon_table();

bool cpu_has_avx2();

/// Table used by the library. Auto picks the widest supported variant; the
/// TSYNC_SIMD environment variable ("scalar", "avx2", "neon") overrides it.
const KernelTable& active();

/// Forces a backend (tests use this to compare variants). Returns false and
/// leaves the selection unchanged if the backend is unavailable here.
bool select(Backend backend);

}  // namespace tsync::kernels
