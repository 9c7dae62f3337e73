#include <atomic>
#include <cstdlib>
#include <string_view>

#include "tempsync/kernels.hpp"
#include "tempsync/matrix.hpp"

namespace tsync::kernels {
namespace {

const KernelTable* pick_auto() {
  if (const char* env = std::getenv("TSYNC_SIMD")) {
    const std::string_view want(env);
    if (want == "scalar") return &scalar_table();
    if (want == "avx2" && avx2_table() && cpu_has_avx2()) return avx2_table();
    if (want == "neon" && neon_table()) return neon_table();
  }
  if (avx2_table() && cpu_has_avx2()) return avx2_table();
  if (neon_table()) return neon_table();
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> s{pick_auto()};
  return s;
}

}  // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

bool select(Backend backend) {
  const KernelTable* t = nullptr;
  switch (backend) {
    case Backend::Auto: t = pick_auto(); break;
    case Backend::Scalar: t = &scalar_table(); break;
    case Backend::Avx2: t = (avx2_table() && cpu_has_avx2()) ? avx2_table() : nullptr; break;
    case Backend::Neon: t = neon_table(); break;
  }
  if (!t) return false;
  slot().store(t, std::memory_order_release);
  return true;
}

}  // namespace tsync::kernels

namespace tsync {

double norm_inf(const Matrix& m) {
  const auto& k = kernels::active();
  double best = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double s = k.abs_sum(m.row(r));
    if (s > best) best = s;
  }
  return best;
}

}  // namespace tsync
