#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "tempsync/kernels.hpp"

namespace k = tsync::kernels;

namespace {

std::vector<double> draw(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

void compare_tables(const k::KernelTable& ref, const k::KernelTable& simd) {
  std::mt19937_64 rng(7);
  for (std::size_t n = 1; n <= 67; ++n) {
    const auto a = draw(n, rng);
    const auto b = draw(n, rng);
    const double scale = static_cast<double>(n) * 1e-14 * 25.0;
    CHECK(std::fabs(simd.dot(a, b) - ref.dot(a, b)) <= scale);
    CHECK(std::fabs(simd.sq_dist(a, b) - ref.sq_dist(a, b)) <= scale * 4.0);
    CHECK(std::fabs(simd.abs_diff_sum(a, b) - ref.abs_diff_sum(a, b)) <= scale);
    CHECK(std::fabs(simd.abs_sum(a) - ref.abs_sum(a)) <= scale);
    const auto m1 = ref.minmax(a);
    const auto m2 = simd.minmax(a);
    CHECK(m1.min == m2.min);
    CHECK(m1.max == m2.max);

    auto y1 = b;
    auto y2 = b;
    ref.axpy(0.37, a, y1);
    simd.axpy(0.37, a, y2);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::fabs(y1[i] - y2[i]) <= 1e-14);
  }
}

}  // namespace

TEST_CASE("scalar kernels on small inputs") {
  const auto& s = k::scalar_table();
  const std::vector<double> a{1.0, -2.0, 3.0};
  const std::vector<double> b{0.5, 2.0, -1.0};
  CHECK(s.dot(a, b) == doctest::Approx(0.5 - 4.0 - 3.0));
  CHECK(s.sq_dist(a, b) == doctest::Approx(0.25 + 16.0 + 16.0));
  CHECK(s.abs_diff_sum(a, b) == doctest::Approx(0.5 + 4.0 + 4.0));
  CHECK(s.abs_sum(a) == doctest::Approx(6.0));
  CHECK(s.minmax(a).min == -2.0);
  CHECK(s.minmax(a).max == 3.0);
}

TEST_CASE("avx2 kernels agree with scalar") {
  const auto* avx = k::avx2_table();
  if (!avx || !k::cpu_has_avx2()) {
    MESSAGE("avx2 unavailable, skipped");
    return;
  }
  compare_tables(k::scalar_table(), *avx);
}

TEST_CASE("neon kernels agree with scalar") {
  const auto* neon = k::neon_table();
  if (!neon) {
    MESSAGE("neon unavailable, skipped");
    return;
  }
  compare_tables(k::scalar_table(), *neon);
}

TEST_CASE("backend selection round trip") {
  const auto before = k::active().name;
  REQUIRE(k::select(k::Backend::Scalar));
  CHECK(k::active().name == k::scalar_table().name);
  REQUIRE(k::select(k::Backend::Auto));
  CHECK(k::active().name == before);
}
