#pragma once

// One-sided Lipschitz dissipativity, pullback trajectories and the coupled
// comparison check that certifies ultimate boundedness of a network.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "tempsync/certificates.hpp"
#include "tempsync/integrator.hpp"
#include "tempsync/net_model.hpp"

namespace tsync {

using ScalarFn = std::function<double(double t)>;

struct DissipativityData {
  ScalarFn l;                   // one-sided Lipschitz rate
  double K = 1.0;               // exponential envelope exp(int l) <= K e^{-gamma (t-t0)}
  double gamma = 0.0;
  ScalarFn alpha;               // 2 eps + l
  ScalarFn beta_diss;           // (2 / eps) |f(t,0)|^2
  double gamma_bar_diss = 0.0;  // gamma - 2 eps
};

/// alpha = 2 eps + l, beta = (2/eps)|f(t,0)|^2, gamma_bar = gamma - 2 eps.
/// Requires 0 < eps < gamma / 2.
DissipativityData dissipativity_from_onesided(ScalarFn l, ScalarFn f_at_zero_sq, double K,
                                              double gamma, double eps);

struct EnvelopeFit {
  double K = 1.0;
  double gamma = 0.0;
  bool certified = false;
  double required_log_K = 0.0;  // max over s <= t of int_s^t l + gamma (t - s)
};

/// Least-squares fit of int_{t0}^t l against log K - gamma (t - t0), K inflated
/// by 1%, then checked for every pair s <= t on the grid.
EnvelopeFit fit_sl2_envelope(const ScalarFn& l, const Horizon& grid);

struct PullbackResult {
  std::vector<double> estimate;
  double gap = 0.0;    // sup-norm change at the last depth doubling
  double depth = 0.0;  // last pullback depth used
  bool converged = false;
};

/// Integrates from t - s to t for s = 1, 2, 4, ... up to s_max and stops once
/// successive estimates differ by less than `tol`.
PullbackResult pullback_trajectory(const OdeRhs& rhs, double t, double s_max,
                                   std::span<const double> x0, const SolverConfig& cfg,
                                   double tol = 1e-8);

/// K mu / (1 - e^{-gamma_bar}).
double ultimate_bound(double K, double gamma_bar, double mu);

struct CoupledComparison {
  // C(t): diagonal l_i, off-diagonal 2 c a_ik. Refers to the system schedule.
  std::function<Matrix(double)> matrix;
  bool verdict = false;
  double gamma = 0.0;  // inf over the grid of |l_i| - 2 sum_k c a_ik
  double sup_l = 0.0;
  std::size_t nodes = 0;
  Horizon grid;

  nlohmann::json to_json() const;
};

/// Row dominance of the coupled comparison matrix on the grid. Throws
/// HypothesisError when a weight is negative somewhere on the grid.
CoupledComparison coupled_comparison_check(const NetworkSystem& system, std::vector<ScalarFn> l,
                                           const Horizon& grid);

}  // namespace tsync
