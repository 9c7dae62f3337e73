#pragma once

// Desk-scale reproductions of the four reference experiments plus the closed
// forms for the ring and star examples.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tempsync/certificates.hpp"
#include "tempsync/integrator.hpp"
#include "tempsync/net_model.hpp"

namespace tsync {

// Node models shared by the scenarios and the CLI config loader.
NodeDynamics consensus_node();
/// x' = lambda x + amp sin(omega t), scalar.
NodeDynamics linear_node(double lambda, double amp, double omega);
NodeDynamics lorenz_node(double sigma = 10.0, double rho = 28.0, double beta = 8.0 / 3.0);
NodeDynamics fhn_node(double c, double current, double a, double b, double eps = 0.05);
/// u' = v + b u - u^3/3, v' = -eps0 (1 + sin(omega t)/2) u.
NodeDynamics vdp_node(double b, double eps0, double omega);

struct RunReport {
  std::string scenario;
  std::uint64_t seed = 0;
  nlohmann::json parameters;
  std::string trajectory_csv;
  std::string error_csv;
  std::string certificate_json;
  nlohmann::json certificate;  // null when no certificate was evaluated
  nlohmann::json metrics;
  std::string predicate;
  bool passed = false;

  nlohmann::json to_json() const;
};

/// Writes <dir>/<stem>_trajectory.csv, _errors.csv, _certificate.json and
/// _report.json, filling the path fields of `report`.
void write_run_outputs(RunReport& report, const Trajectory& traj, const ErrorSeries& errors,
                       const std::filesystem::path& dir, const std::string& stem);

using OutDir = std::optional<std::filesystem::path>;

struct VdpParams {
  std::size_t n_nodes = 5;
  double delta_t = 50.0;
  double c = 10.0;
  std::uint64_t seed = 0;
  double horizon = 400.0;
  double eps0 = 0.1;
  double density = 0.5;
  double dt = 1e-2;
  std::size_t record_stride = 10;
  double tail_fraction = 0.25;
  double epsilon = 0.1;  // certificate epsilon
};

nlohmann::json to_json(const VdpParams& p);
VdpParams vdp_params_from_json(const nlohmann::json& j);

RunReport run_vdp(const VdpParams& p, const OutDir& out = std::nullopt);

struct VdpSweep {
  std::vector<RunReport> runs;
  std::vector<double> tail_mean_e_hat;
  bool decreasing = false;  // each step down by at least `min_drop`
};

/// Same seed (network and node draws) for every c; runs in parallel.
VdpSweep run_vdp_sweep(VdpParams p, const std::vector<double>& c_values, std::size_t workers,
                       double min_drop = 0.2, const OutDir& out = std::nullopt);

struct RingParams {
  std::size_t n_nodes = 10;
  double a = 0.5;
  double a12 = 1.0;
  bool time_varying = true;
  std::uint64_t seed = 0;
  double horizon = 40.0;
  double dt = 1e-3;
  std::size_t record_stride = 10;
  double tail_fraction = 0.25;
  double tolerance = 1e-6;
  double epsilon = 1e-3;
};

nlohmann::json to_json(const RingParams& p);
RingParams ring_params_from_json(const nlohmann::json& j);

/// Ring with contrarian node 1. Entries a_i1 for i in {2,3,N-1,N} are -a, or
/// -1/2 + sin(omega_i t)/2 when time_varying; a_12 is the compensation.
AdjacencySchedule ring_schedule(std::size_t n, double a, double a12, bool time_varying,
                                const std::vector<double>& omegas = {});
Matrix ring_matrix(std::size_t n, double a, double a12);

RunReport run_ring_contrarian(const RingParams& p, const OutDir& out = std::nullopt);

struct RingSymbolic {
  double delta12, delta13, delta23;
  double gamma12, gamma13, gamma23;
};

/// The published closed forms for the ring example.
RingSymbolic ring_symbolic_certificate(double a, double a12, std::size_t n);

struct FhnParams {
  std::size_t n_nodes = 15;
  double a_bar = 3.0;
  double omega_l = 0.06283185307179587;   // period 100
  double omega_k = 0.044428829381583665;  // omega_l / sqrt(2)
  std::uint64_t seed = 0;
  double horizon = 1000.0;
  double t_connect = 50.0;
  double background = 0.01;
  double density = 0.3;
  double dt = 1e-2;
  std::size_t record_stride = 10;
  double epsilon = 0.1;  // certificate epsilon
};

nlohmann::json to_json(const FhnParams& p);
FhnParams fhn_params_from_json(const nlohmann::json& j);

/// Metrics: per leader the mean cluster error in the second half of the
/// windows where only that leader is boosted, the same for the windows where
/// it is not boosted, and their ratio.
RunReport run_fhn_clusters(const FhnParams& p, const OutDir& out = std::nullopt);

enum class StarPerturbation { None, Sinusoidal, TanhHub };
std::string to_string(StarPerturbation p);
StarPerturbation star_perturbation_from_string(const std::string& s);

struct LorenzParams {
  std::size_t n_nodes = 5;
  double a = 5.0;
  double b = -1.0;
  double c = 2.0;
  bool heterogeneous = false;
  StarPerturbation perturb = StarPerturbation::None;
  std::uint64_t seed = 0;
  double horizon = 60.0;
  double t_on = 10.0;
  double dt = 1e-3;
  std::size_t record_stride = 10;
  double epsilon = 1e-3;
};

nlohmann::json to_json(const LorenzParams& p);
LorenzParams lorenz_params_from_json(const nlohmann::json& j);

/// Hub x_1 drives the leaves with weight a, the leaves feed back with b.
Matrix star_matrix(std::size_t n, double a, double b);

RunReport run_lorenz_star(const LorenzParams& p, const OutDir& out = std::nullopt);

enum class StarCase { FeasibleA, FeasibleB, Infeasible };
std::string to_string(StarCase c);

struct StarFeasibility {
  StarCase hub_case = StarCase::Infeasible;
  double hub_value = 0.0;  // 2(b+a) + (N-2)(b-|b|)
  bool satellites_ok = false;
  bool feasible() const { return hub_case != StarCase::Infeasible && satellites_ok; }
};

StarFeasibility star_feasibility(double a, double b, std::size_t n);

/// Largest eigenvalue of the symmetric part of the Lorenz Jacobian at (x, y, z).
double lorenz_sym_jacobian_max_eig(double x, double y, double z, double sigma = 10.0,
                                   double rho = 28.0, double beta = 8.0 / 3.0);

/// Mean of e_hat over recorded samples with t in [t0, t1].
double mean_e_hat(const ErrorSeries& errors, double t0, double t1);
/// Maximum of e_hat over recorded samples with t in [t0, t1].
double max_e_hat(const ErrorSeries& errors, double t0, double t1);

}  // namespace tsync
