#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tempsync/errors.hpp"
#include "tempsync/integrator.hpp"

using namespace tsync;

namespace {

NodeDynamics zero_node() {
  return {1, [](double, std::span<const double>, std::span<double> dx) { dx[0] = 0.0; }, {}};
}

Matrix pair_matrix() {
  Matrix a(2, 2, 0.0);
  a(0, 1) = a(1, 0) = 1.0;
  return a;
}

}  // namespace

TEST_CASE("coupled rhs") {
  SUBCASE("two-node consensus") {
    const NetworkSystem sys({zero_node(), zero_node()}, constant_schedule(pair_matrix()));
    const std::vector<double> x{1.0, 3.0};
    CHECK(coupled_rhs(sys, 0.0, x) == std::vector<double>{2.0, -2.0});
  }
  SUBCASE("zero coupling leaves the node fields") {
    NodeDynamics lin{1, [](double t, std::span<const double> x, std::span<double> dx) {
                       dx[0] = -x[0] + t;
                     }, {}};
    const NetworkSystem sys({lin, lin}, constant_schedule(Matrix(2, 2, 0.0)));
    CHECK(coupled_rhs(sys, 2.0, std::vector<double>{1.0, 5.0}) == std::vector<double>{1.0, -3.0});
  }
  SUBCASE("consensus states cancel the coupling") {
    NodeDynamics sq{2, [](double, std::span<const double> x, std::span<double> dx) {
                      dx[0] = x[1];
                      dx[1] = -x[0];
                    }, {}};
    const NetworkSystem sys({sq, sq, sq}, constant_schedule(Matrix(3, 3, 0.7)), 3.0);
    const auto dx = coupled_rhs(sys, 0.0, std::vector<double>{1, 2, 1, 2, 1, 2});
    CHECK(dx == std::vector<double>{2, -1, 2, -1, 2, -1});
  }
  SUBCASE("non-finite field raises") {
    NodeDynamics bad{1, [](double, std::span<const double>, std::span<double> dx) {
                       dx[0] = std::numeric_limits<double>::quiet_NaN();
                     }, {}};
    const NetworkSystem sys({zero_node(), bad}, constant_schedule(pair_matrix()));
    try {
      coupled_rhs(sys, 1.5, std::vector<double>{0.0, 0.0});
      FAIL("expected NumericError");
    } catch (const NumericError& e) {
      CHECK(e.node() == 1);
      CHECK(e.time() == 1.5);
    }
  }
}

TEST_CASE("integration") {
  SUBCASE("zero field stays put") {
    const NetworkSystem sys({zero_node(), zero_node()}, constant_schedule(Matrix(2, 2, 0.0)));
    SolverConfig cfg;
    cfg.record_stride = 100;
    const auto tr = integrate(sys, 0.0, std::vector<double>{1.25, -3.0}, 2.0, cfg);
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      CHECK(tr.node(k, 0)[0] == 1.25);
      CHECK(tr.node(k, 1)[0] == -3.0);
    }
  }
  SUBCASE("two-node consensus error decays as exp(-2t)") {
    const NetworkSystem sys({zero_node(), zero_node()}, constant_schedule(pair_matrix()));
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.record_stride = 50;
    const auto tr = integrate(sys, 1.0, std::vector<double>{0.0, 2.0}, 4.0, cfg);
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
      const double e = tr.node(k, 1)[0] - tr.node(k, 0)[0];
      const double exact = 2.0 * std::exp(-2.0 * (tr.times[k] - 1.0));
      CHECK(std::fabs(e - exact) <= 1e-9 * exact);
    }
  }
  SUBCASE("fourth-order convergence") {
    NodeDynamics osc{1, [](double t, std::span<const double> x, std::span<double> dx) {
                       dx[0] = -x[0] + std::sin(3.0 * t);
                     }, {}};
    const NetworkSystem sys({osc, osc}, constant_schedule(pair_matrix()));
    auto end_err = [&](double dt) {
      SolverConfig cfg;
      cfg.dt = dt;
      const auto tr = integrate(sys, 0.0, std::vector<double>{1.0, 0.0}, 2.0, cfg);
      const auto ref_cfg = [] { SolverConfig c; c.dt = 1e-4; return c; }();
      const auto ref = integrate(sys, 0.0, std::vector<double>{1.0, 0.0}, 2.0, ref_cfg);
      return std::fabs(tr.state(tr.times.size() - 1)[0] - ref.state(ref.times.size() - 1)[0]);
    };
    const double ratio = end_err(0.1) / end_err(0.05);
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
  }
  SUBCASE("breakpoints are step boundaries") {
    Matrix a2 = pair_matrix();
    a2(0, 1) = a2(1, 0) = 3.0;
    const auto s = build_switching_schedule(2, {{0.0, pair_matrix()}, {50.0, a2}}, Extension::Constant);
    const NetworkSystem sys({zero_node(), zero_node()}, s);
    SolverConfig cfg;
    cfg.dt = 0.3;  // 50 is not a multiple of the step
    const auto tr = integrate(sys, 0.0, std::vector<double>{0.0, 1.0}, 60.0, cfg);
    CHECK(std::find(tr.times.begin(), tr.times.end(), 50.0) != tr.times.end());
    CHECK(tr.times.back() == 60.0);
  }
  SUBCASE("rk45 matches closed form") {
    const NetworkSystem sys({zero_node(), zero_node()}, constant_schedule(pair_matrix()));
    SolverConfig cfg;
    cfg.method = Method::Rk45;
    cfg.dt = 1e-2;
    cfg.rtol = 1e-10;
    cfg.atol = 1e-12;
    const auto tr = integrate(sys, 0.0, std::vector<double>{0.0, 2.0}, 3.0, cfg);
    const auto last = tr.state(tr.times.size() - 1);
    CHECK(last[1] - last[0] == doctest::Approx(2.0 * std::exp(-6.0)).epsilon(1e-7));
  }
  SUBCASE("invalid configuration") {
    SolverConfig cfg;
    cfg.dt = -1.0;
    CHECK_THROWS(cfg.validate());
  }
}

TEST_CASE("pairwise errors") {
  Trajectory tr;
  tr.n_nodes = 3;
  tr.state_dim = 1;
  tr.times = {0.0, 1.0};
  tr.states = {0.0, 1.0, 3.0, 2.0, 2.0, 2.0};
  const auto e = pairwise_errors(tr);
  CHECK(std::vector<double>(e.xi_at(0).begin(), e.xi_at(0).end()) == std::vector<double>{1, 9, 4});
  CHECK(e.e_hat[0] == 3.0);
  CHECK(e.e_hat[1] == 0.0);
  for (double v : e.xi_at(1)) CHECK(v == 0.0);

  Trajectory two;
  two.n_nodes = 2;
  two.state_dim = 1;
  two.times = {0.0};
  two.states = {1.0, 3.0};
  const auto e2 = pairwise_errors(two);
  CHECK(e2.xi[0] == 4.0);
  CHECK(e2.e_hat[0] == 2.0);
}

TEST_CASE("consensus manifold is invariant") {
  NodeDynamics osc{2, [](double t, std::span<const double> x, std::span<double> dx) {
                     dx[0] = x[1];
                     dx[1] = -x[0] + 0.3 * std::cos(t);
                   }, {}};
  Matrix a(3, 3, 0.0);
  a(0, 1) = -0.5;
  a(1, 2) = 2.0;
  a(2, 0) = 1.0;
  const NetworkSystem sys({osc, osc, osc}, constant_schedule(a), 2.0);
  SolverConfig cfg;
  cfg.record_stride = 100;
  const auto tr = integrate(sys, 0.0, std::vector<double>{1, 0.5, 1, 0.5, 1, 0.5}, 5.0, cfg);
  for (double v : pairwise_errors(tr).xi) CHECK(v <= 1e-20);
}

TEST_CASE("csv output is stable") {
  const NetworkSystem sys({zero_node(), zero_node()}, constant_schedule(pair_matrix()));
  SolverConfig cfg;
  cfg.dt = 0.1;
  const auto tr = integrate(sys, 0.0, std::vector<double>{0.0, 1.0}, 0.3, cfg);
  std::ostringstream a, b;
  write_trajectory_csv(a, tr);
  write_trajectory_csv(b, tr);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("t,", 0) == 0);
  CHECK(format_double(0.1) == "0.1");
}
