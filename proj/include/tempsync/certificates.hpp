#pragma once

// Linear comparison system for the squared pairwise errors and the
// synchronization / cluster / persistence certificates built on it.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tempsync/integrator.hpp"
#include "tempsync/net_model.hpp"

namespace tsync {

/// Uniform sampling grid t0, t0+step, ..., t1.
struct Horizon {
  double t0 = 0.0;
  double t1 = 1.0;
  double step = 1e-2;

  std::size_t intervals() const;
  std::vector<double> points() const;
  nlohmann::json to_json() const;
};

/// Positive part: 0 for a <= 0, a otherwise.
constexpr double positive_part(double a) { return a > 0.0 ? a : 0.0; }

struct ComparisonSample {
  Matrix e;                    // pair_count(N) x pair_count(N)
  std::vector<double> delta;   // per pair
  std::vector<double> gamma;   // per pair
};

/// E(t), delta_ij(t), gamma_ij(t) for the effective weights c*a_ij(t).
ComparisonSample evaluate_comparison(const NetworkSystem& system, const PairBoundSet& bounds,
                                     double t);

/// u' = E(t) u + beta(t) with beta = (2 beta_ij(t)). Holds references to its
/// inputs; they must outlive it.
class ComparisonSystem {
 public:
  ComparisonSystem(const NetworkSystem& system, const PairBoundSet& bounds);

  std::size_t dim() const noexcept { return pair_count(system_.n_nodes()); }
  const NetworkSystem& system() const noexcept { return system_; }
  const PairBoundSet& bounds() const noexcept { return bounds_; }

  ComparisonSample sample(double t) const { return evaluate_comparison(system_, bounds_, t); }
  void beta_into(double t, std::span<double> out) const;
  std::vector<double> switch_times(double t0, double t1) const {
    return system_.schedule.switch_times(t0, t1);
  }

 private:
  const NetworkSystem& system_;
  const PairBoundSet& bounds_;
};

OdeSolution comparison_solve(const ComparisonSystem& cs, double t0, std::span<const double> xi0,
                             double t_end, const SolverConfig& cfg);

struct DecayCheck {
  double gamma_bar = 0.0;
  bool verified = false;
  double worst_ratio = 0.0;  // max ||U(t,s)||_inf / exp(-gamma_bar (t-s)) over sampled pairs
};

/// Row-dominance margin on the grid and an a-posteriori check of
/// ||U(t,s)||_inf <= exp(-gamma_bar (t-s)) (1 + tol) from `n_starts` start times.
DecayCheck dominance_decay_check(const ComparisonSystem& cs, const Horizon& grid,
                                 std::size_t n_starts = 5, double tol = 1e-6);

/// sup over unit windows [tau, tau+1] inside the grid of the integral of g.
/// Cells are integrated with Simpson's rule (endpoint + midpoint samples).
double sliding_window_sup(const std::function<double(double)>& g, const Horizon& grid);

/// sup_tau int_tau^{tau+1} |(2 beta_ij(s))_{i<j}| ds.
double compute_mu1(const PairBoundSet& bounds, const Horizon& window_grid);
/// Same, restricted to pairs inside `nodes`.
double compute_mu1(const PairBoundSet& bounds, std::span<const std::size_t> nodes,
                   const Horizon& window_grid);

/// 2 rho^2 max_{i,j in J, k not in J} sup_tau int |a_jk - a_ik| over unit windows.
double compute_mu2(const NetworkSystem& system, const ClusterSpec& cluster, double rho,
                   const Horizon& window_grid);

struct Verdict {
  enum class Kind { Holds, Fails };
  Kind kind = Kind::Fails;
  std::string condition;  // "delta", "gamma", "log-threshold" on failure
  std::size_t i = 0;      // 0-based failing pair, when applicable
  std::size_t j = 0;
  double t = 0.0;

  bool holds() const noexcept { return kind == Kind::Holds; }
  std::string describe() const;  // "holds" or "fails(gamma,(1,2),t=0)"
};

struct SyncCertificate {
  Horizon grid;
  std::vector<double> delta_min;
  std::vector<double> delta_max;
  double gamma_bar = 0.0;
  double mu1 = 0.0;
  double rho = 0.0;
  double bound_M = 0.0;
  double epsilon = 0.0;
  double log_threshold = 0.0;     // -log(1 - mu/M)
  double tail_bound = 0.0;        // mu / (1 - exp(-gamma_bar)), valid when gamma_bar > 0
  Verdict verdict;
  double asymptotic_bound = 0.0;  // epsilon + bound_M when verdict holds
  double settle_time = 0.0;       // ln(4 rho^2 / epsilon) / gamma_bar when verdict holds
  std::vector<std::string> assumptions;

  nlohmann::json to_json() const;
};

struct ClusterCertificate {
  std::vector<std::size_t> cluster;
  std::size_t n_nodes = 0;
  Horizon grid;
  double mu1 = 0.0;
  double mu2 = 0.0;
  double combined_mu = 0.0;
  double gamma_bar_J = 0.0;
  double rho = 0.0;
  double bound_M = 0.0;
  double epsilon = 0.0;
  double log_threshold = 0.0;
  Verdict verdict;
  double asymptotic_bound = 0.0;
  double settle_time = 0.0;
  std::vector<std::string> assumptions;

  nlohmann::json to_json() const;
};

inline constexpr double kDefaultMargin = 1e-9;

/// Full-network certificate on the grid. Throws ParameterError when
/// bound_M <= mu1 or the grid is empty.
SyncCertificate check_full_sync(const NetworkSystem& system, const PairBoundSet& bounds,
                                const Horizon& horizon, double bound_M, double epsilon,
                                double margin = kDefaultMargin);

ClusterCertificate check_cluster_sync(const NetworkSystem& system, const PairBoundSet& bounds,
                                      const ClusterSpec& cluster, const Horizon& horizon,
                                      double bound_M, double epsilon,
                                      double margin = kDefaultMargin);

struct RefinedBounds {
  double coupling_bound = 0.0;          // epsilon + M / c
  std::optional<double> linf_bound;     // epsilon + ||beta||_inf / (c gamma_bar)
  bool sharp_sync = false;
};

RefinedBounds refined_bounds(const SyncCertificate& cert, double c,
                             std::optional<double> beta_inf = std::nullopt);

struct PersistenceMargins {
  double gamma_bar = 0.0;
  double rho = 0.0;
  std::size_t n_nodes = 0;
  double adjacency_margin = 0.0;  // gamma_bar / 4

  /// Squared-error bound 4 rho delta sqrt(N(N-1)/2) / gamma_bar for node
  /// perturbations of size delta.
  double heterogeneity_bound(double delta) const;
};

PersistenceMargins persistence_margins(const SyncCertificate& cert, double rho, std::size_t n_nodes);

/// 2(a_ij+a_ji) + sum_{k != i,j} (a_jk + a_ik - |a_jk - a_ik|).
double static_pair_hypothesis(const Matrix& a, std::size_t i, std::size_t j);

/// Smallest global coupling above which every delta_ij < 0 and gamma_ij > 0 for
/// the static matrix and identical nodes with Lipschitz coefficient l_rho.
/// Throws HypothesisError naming the first pair that violates the hypothesis.
double static_threshold(const Matrix& a, double l_rho, double tol = 1e-12);

/// Starting point for bound_M: twice mu1 (floored at 1e-6).
double suggest_bound_M(double mu1);

/// 1.5 x the largest node-state norm seen over a burn-in run.
double estimate_rho(const NetworkSystem& system, double t0, std::span<const double> x0,
                    double t_burn, const SolverConfig& cfg);

}  // namespace tsync
