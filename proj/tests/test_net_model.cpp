#include <doctest.h>

#include <cmath>
#include <random>

#include "tempsync/errors.hpp"
#include "tempsync/net_model.hpp"

using namespace tsync;

namespace {

Matrix full(std::size_t n, double v) { return Matrix(n, n, v); }

}  // namespace

TEST_CASE("single segment zeroes the diagonal") {
  const auto s = build_switching_schedule(3, {{0.0, Matrix::identity(3)}}, Extension::Constant);
  for (double t : {0.0, 1.5, 1e3}) CHECK(s.sample(t) == Matrix(3, 3, 0.0));
}

TEST_CASE("switching is right-continuous at a breakpoint") {
  Matrix a1 = full(2, 1.0), a2 = full(2, 2.0);
  a1(0, 0) = a1(1, 1) = a2(0, 0) = a2(1, 1) = 0.0;
  const auto s = build_switching_schedule(2, {{0.0, a1}, {50.0, a2}}, Extension::Constant);
  CHECK(s.sample(49.999) == a1);
  CHECK(s.sample(50.0) == a2);
  CHECK(s.switch_times(0.0, 100.0) == std::vector<double>{50.0});
}

TEST_CASE("schedule construction errors") {
  CHECK_THROWS_AS(build_switching_schedule(2, {{0.0, full(3, 1.0)}}, Extension::Constant),
                  ConstructionError);
  CHECK_THROWS_AS(
      build_switching_schedule(2, {{1.0, full(2, 1.0)}, {0.5, full(2, 1.0)}}, Extension::Constant),
      ConstructionError);
}

TEST_CASE("domain errors without extension") {
  const auto s = build_switching_schedule(2, {{0.0, full(2, 1.0)}}, Extension::None, 10.0);
  CHECK_NOTHROW(s.sample(5.0));
  CHECK_THROWS_AS(s.sample(-1.0), DomainError);
  CHECK_THROWS_AS(s.sample(10.5), DomainError);
}

TEST_CASE("periodic extension repeats the pattern") {
  const auto s = build_switching_schedule(2, {{0.0, full(2, 1.0)}, {2.0, full(2, 3.0)}},
                                          Extension::Periodic, 5.0);
  for (double t : {0.3, 2.0, 4.9}) {
    CHECK(s.sample(t + 5.0) == s.sample(t));
    CHECK(s.sample(t + 15.0) == s.sample(t));
  }
  const auto sw = s.switch_times(0.0, 11.0);
  CHECK(sw == std::vector<double>{2.0, 5.0, 7.0, 10.0});
}

TEST_CASE("functional piece matches its formula and sampling is pure") {
  const double omega = 1.3;
  const auto s = functional_schedule(2, [omega](double t, Matrix& m) {
    m(0, 1) = -0.5 + 0.5 * std::sin(omega * t);
    m(1, 0) = 1.0;
    m(0, 0) = 7.0;
  });
  for (double t : {0.0, 0.7, 12.25}) {
    const auto m = s.sample(t);
    CHECK(m(0, 1) == -0.5 + 0.5 * std::sin(omega * t));
    CHECK(m(0, 0) == 0.0);
    CHECK(s.sample(t) == m);
  }
}

TEST_CASE("json round trip of a switching schedule") {
  Matrix a(3, 3, 0.0);
  a(0, 1) = -0.25;
  a(2, 0) = 1.0 / 3.0;
  const auto s = build_switching_schedule(3, {{0.0, a}, {1.5, full(3, 2.0)}}, Extension::Periodic, 4.0);
  const auto back = schedule_from_json(schedule_to_json(s));
  CHECK(back.extension() == Extension::Periodic);
  CHECK(back.end() == 4.0);
  for (double t : {0.1, 1.5, 3.9, 6.0}) CHECK(back.sample(t) == s.sample(t));
}

TEST_CASE("random connected binary matrices are connected") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const auto m = random_connected_binary(6, 0.2, rng);
    CHECK(support_connected(m));
    for (std::size_t i = 0; i < 6; ++i) CHECK(m(i, i) == 0.0);
  }
}

TEST_CASE("pair bounds") {
  SUBCASE("identical nodes give alpha = l and beta = 0") {
    const auto b = pair_bounds_for_identical_nodes(4, 2.0, [](double, double) { return 1.0; });
    CHECK(b.rho() == 2.0);
    for (double t : {0.0, 3.0})
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i + 1; j < 4; ++j) {
          CHECK(b.alpha(i, j, t) == 1.0);
          CHECK(b.beta(i, j, t) == 0.0);
        }
  }
  SUBCASE("symmetric access") {
    const PairBoundSet b(3, 1.0, [](std::size_t i, std::size_t j, double) { return double(i * 10 + j); },
                         [](std::size_t i, std::size_t, double) { return double(i); });
    CHECK(b.alpha(0, 2, 0.0) == b.alpha(2, 0, 0.0));
    CHECK(b.beta(1, 2, 0.0) == b.beta(2, 1, 0.0));
  }
  SUBCASE("negative beta is rejected") {
    CHECK_THROWS_AS(PairBoundSet::constant(2, 1.0, 0.0, -1.0), ConstructionError);
    const PairBoundSet b(2, 1.0, [](std::size_t, std::size_t, double) { return 0.0; },
                         [](std::size_t, std::size_t, double t) { return t - 1.0; });
    CHECK_NOTHROW(b.beta(0, 1, 2.0));
    CHECK_THROWS_AS(b.beta(0, 1, 0.0), DomainError);
  }
}

TEST_CASE("cluster spec validation") {
  CHECK_NOTHROW(ClusterSpec({0, 2}, 3));
  CHECK_THROWS(ClusterSpec({1}, 3));
  CHECK_THROWS(ClusterSpec({2, 1}, 3));
  CHECK_THROWS(ClusterSpec({0, 3}, 3));
  CHECK(ClusterSpec({0, 2}, 3).contains(2));
}

TEST_CASE("pair indexing is lexicographic") {
  CHECK(pair_index(0, 1, 3) == 0);
  CHECK(pair_index(0, 2, 3) == 1);
  CHECK(pair_index(1, 2, 3) == 2);
  CHECK(pair_index(3, 4, 5) == pair_count(5) - 1);
}
