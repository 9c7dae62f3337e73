#include <doctest.h>

#include <cmath>

#include "tempsync/attractor.hpp"
#include "tempsync/errors.hpp"
#include "tempsync/scenarios.hpp"

using namespace tsync;

TEST_CASE("dissipativity from a one-sided rate") {
  const auto d = dissipativity_from_onesided([](double) { return -2.0; }, [](double) { return 1.0; },
                                             1.0, 2.0, 0.5);
  CHECK(d.alpha(3.0) == doctest::Approx(-1.0));
  CHECK(d.beta_diss(3.0) == doctest::Approx(4.0));
  CHECK(d.gamma_bar_diss == doctest::Approx(1.0));

  const auto z = dissipativity_from_onesided([](double) { return -2.0; }, [](double) { return 0.0; },
                                             1.0, 2.0, 0.5);
  CHECK(z.beta_diss(0.0) == 0.0);

  const auto small = dissipativity_from_onesided([](double t) { return -2.0 + std::sin(t); },
                                                 [](double) { return 1.0; }, 1.0, 1.0, 1e-6);
  for (double t : {0.0, 1.0, 2.0}) CHECK(std::fabs(small.alpha(t) - (-2.0 + std::sin(t))) <= 2e-6 + 1e-12);

  CHECK_THROWS_AS(dissipativity_from_onesided([](double) { return -2.0; }, [](double) { return 1.0; },
                                              1.0, 2.0, 1.0),
                  ParameterError);
}

TEST_CASE("envelope fit") {
  SUBCASE("constant rate fits exactly") {
    const auto fit = fit_sl2_envelope([](double) { return -1.5; }, Horizon{0.0, 20.0, 1e-2});
    CHECK(fit.certified);
    CHECK(fit.gamma == doctest::Approx(1.5));
    CHECK(fit.K == doctest::Approx(1.01));
  }
  SUBCASE("dissipativity output satisfies its envelope") {
    const auto d = dissipativity_from_onesided([](double) { return -3.0; }, [](double) { return 1.0; },
                                               1.0, 3.0, 0.5);
    const auto env = fit_sl2_envelope(d.alpha, Horizon{0.0, 20.0, 1e-2});
    CHECK(env.certified);
    CHECK(env.gamma >= d.gamma_bar_diss - 1e-9);
  }
  SUBCASE("oscillating rate needs more than the fitted K") {
    // The least-squares intercept misses the half-period excursion of 0.5 sin.
    const auto fit = fit_sl2_envelope([](double t) { return -1.0 + 0.5 * std::sin(t); },
                                      Horizon{0.0, 30.0, 1e-2});
    CHECK(fit.gamma == doctest::Approx(1.0).epsilon(0.05));
    CHECK_FALSE(fit.certified);
    CHECK(fit.required_log_K == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("pullback trajectories") {
  SolverConfig cfg;
  cfg.dt = 1e-3;
  const std::vector<double> x0{0.0};
  SUBCASE("forced linear decay") {
    const OdeRhs rhs = [](double t, std::span<const double> x, std::span<double> dx) {
      dx[0] = -x[0] + std::sin(t);
    };
    for (double t : {0.0, 1.0, 4.5}) {
      const auto r = pullback_trajectory(rhs, t, 64.0, x0, cfg);
      CHECK(r.converged);
      CHECK(std::fabs(r.estimate[0] - (std::sin(t) - std::cos(t)) / 2.0) <= 1e-6);
    }
  }
  SUBCASE("pure decay") {
    const OdeRhs rhs = [](double, std::span<const double> x, std::span<double> dx) { dx[0] = -x[0]; };
    const auto r = pullback_trajectory(rhs, 2.0, 64.0, std::vector<double>{5.0}, cfg);
    CHECK(std::fabs(r.estimate[0]) <= 1e-8);
  }
  SUBCASE("constant forcing") {
    const OdeRhs rhs = [](double, std::span<const double> x, std::span<double> dx) { dx[0] = -x[0] + 1.0; };
    const auto r = pullback_trajectory(rhs, 2.0, 64.0, x0, cfg);
    CHECK(std::fabs(r.estimate[0] - 1.0) <= 1e-8);
  }
  SUBCASE("agrees with a long forward run") {
    const OdeRhs rhs = [](double t, std::span<const double> x, std::span<double> dx) {
      dx[0] = -x[0] + std::sin(t);
    };
    const auto fwd = solve_ode(rhs, std::vector<double>{3.0}, -40.0, 5.0, {}, cfg);
    const auto pb = pullback_trajectory(rhs, 5.0, 64.0, x0, cfg);
    CHECK(std::fabs(fwd.back()[0] - pb.estimate[0]) < 1e-6);
  }
}

TEST_CASE("ultimate bound") {
  CHECK(ultimate_bound(1.0, 1.0, 0.0) == 0.0);
  CHECK(ultimate_bound(1.0, std::log(2.0), 1.0) == doctest::Approx(2.0));
  CHECK(ultimate_bound(2.0, std::log(2.0), 1.0) == doctest::Approx(4.0));
}

TEST_CASE("coupled comparison check") {
  const Horizon grid{0.0, 1.0, 1e-2};
  SUBCASE("two coupled dissipative nodes") {
    Matrix a(2, 2, 0.0);
    a(0, 1) = a(1, 0) = 1.0;
    const NetworkSystem sys(std::vector<NodeDynamics>(2, consensus_node()), constant_schedule(a));
    const auto cc = coupled_comparison_check(sys, {[](double) { return -4.0; }, [](double) { return -4.0; }}, grid);
    CHECK(cc.verdict);
    CHECK(cc.gamma == doctest::Approx(2.0));
    const Matrix c = cc.matrix(0.3);
    CHECK(c(0, 0) == -4.0);
    CHECK(c(0, 1) == 2.0);
    CHECK(c(1, 0) == 2.0);
    CHECK(c(1, 1) == -4.0);
    CHECK(cc.to_json()["gamma"] == doctest::Approx(2.0));
  }
  SUBCASE("decoupled nodes") {
    const NetworkSystem sys(std::vector<NodeDynamics>(3, consensus_node()), constant_schedule(Matrix(3, 3, 0.0)));
    const auto cc = coupled_comparison_check(
        sys, {[](double) { return -1.0; }, [](double) { return -2.0; }, [](double) { return -3.0; }}, grid);
    CHECK(cc.verdict);
    CHECK(cc.gamma == doctest::Approx(1.0));
  }
  SUBCASE("insufficient margin") {
    Matrix a(2, 2, 0.0);
    a(0, 1) = a(1, 0) = 1.0;
    const NetworkSystem sys(std::vector<NodeDynamics>(2, consensus_node()), constant_schedule(a));
    const auto cc = coupled_comparison_check(sys, {[](double) { return -1.0; }, [](double) { return -1.0; }}, grid);
    CHECK_FALSE(cc.verdict);
    CHECK(cc.gamma == doctest::Approx(-1.0));
  }
  SUBCASE("negative weights are rejected") {
    Matrix a(2, 2, 0.0);
    a(0, 1) = -1.0;
    const NetworkSystem sys(std::vector<NodeDynamics>(2, consensus_node()), constant_schedule(a));
    CHECK_THROWS_AS(coupled_comparison_check(sys, {[](double) { return -4.0; }, [](double) { return -4.0; }}, grid),
                    HypothesisError);
  }
}
