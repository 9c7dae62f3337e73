#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tempsync/net_model.hpp"

namespace tsync {

enum class Method { Rk4, Rk45 };

struct SolverConfig {
  Method method = Method::Rk4;
  double dt = 1e-3;            // RK4 step; initial step for RK45
  double rtol = 1e-6;          // RK45
  double atol = 1e-9;          // RK45
  double min_dt = 1e-12;       // RK45 underflow threshold
  double max_dt = std::numeric_limits<double>::infinity();  // RK45
  std::size_t record_stride = 1;

  void validate() const;
  /// Short stable text identifying the configuration.
  std::string digest() const;
};

using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dy)>;

struct OdeSolution {
  std::size_t dim = 0;
  std::vector<double> times;
  std::vector<double> states;  // times.size() x dim, row-major

  std::span<const double> at(std::size_t k) const { return {states.data() + k * dim, dim}; }
  std::span<const double> back() const { return at(times.size() - 1); }
};

/// Integrates y' = rhs(t, y) on [t0, t_end]. The step grid is restarted at every
/// time in `breaks` so no step straddles a discontinuity of the right-hand side;
/// recorded samples always include t0, every break and t_end.
OdeSolution solve_ode(const OdeRhs& rhs, std::span<const double> y0, double t0, double t_end,
                      std::span<const double> breaks, const SolverConfig& cfg);

struct Provenance {
  double t0 = 0.0;
  std::vector<double> x0;
  std::string config_digest;
};

/// Sampled solution of the coupled network. Node i of sample k occupies
/// states[k*N*m + i*m, +m).
struct Trajectory {
  std::size_t n_nodes = 0;
  std::size_t state_dim = 0;
  std::vector<double> times;
  std::vector<double> states;
  Provenance provenance;

  std::size_t width() const noexcept { return n_nodes * state_dim; }
  std::span<const double> state(std::size_t k) const {
    return {states.data() + k * width(), width()};
  }
  std::span<const double> node(std::size_t k, std::size_t i) const {
    return {states.data() + k * width() + i * state_dim, state_dim};
  }
};

/// Squared pairwise errors xi_ij(t) = |x_i - x_j|^2 (pairs i<j, lexicographic)
/// and the max-pairwise error e_hat(t).
struct ErrorSeries {
  std::size_t n_nodes = 0;
  std::vector<double> times;
  std::vector<double> xi;     // times.size() x pair_count(n_nodes)
  std::vector<double> e_hat;

  std::size_t n_pairs() const noexcept { return pair_count(n_nodes); }
  std::span<const double> xi_at(std::size_t k) const {
    return {xi.data() + k * n_pairs(), n_pairs()};
  }
};

/// Writes block i = f_i(t, x_i) + c * sum_k a_ik(t) (x_k - x_i) into dx.
/// Throws NumericError naming (t, i) when a node field returns a non-finite value.
class CoupledRhs {
 public:
  explicit CoupledRhs(const NetworkSystem& system);
  void operator()(double t, std::span<const double> x, std::span<double> dx);

 private:
  const NetworkSystem& sys_;
  Matrix a_;
  std::vector<double> comp_;  // component-major copy of x: m x N
};

std::vector<double> coupled_rhs(const NetworkSystem& system, double t, std::span<const double> x);

Trajectory integrate(const NetworkSystem& system, double t0, std::span<const double> x0,
                     double t_end, const SolverConfig& cfg);

ErrorSeries pairwise_errors(const Trajectory& traj);

/// sqrt(sum_d (max_{i in nodes} x_i,d - min_{i in nodes} x_i,d)^2) for one sample;
/// `nodes` empty means all nodes.
double max_pairwise_error(std::span<const double> state, std::size_t n_nodes,
                          std::size_t state_dim, std::span<const std::size_t> nodes = {});

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_error_csv(std::ostream& os, const ErrorSeries& errors);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace tsync
