#pragma once

// Temporal network data model: node vector fields, signed time-varying
// adjacency schedules, clusters and the per-pair one-sided bounds (alpha, beta)
// that feed the synchronization certificates.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tempsync/matrix.hpp"

namespace tsync {

/// Writes f(t, x) into dx. x and dx both have length state_dim.
using NodeRhs = std::function<void(double t, std::span<const double> x, std::span<double> dx)>;
/// Lipschitz coefficient l^r(t) on the ball of radius r.
using LipschitzBound = std::function<double(double t, double r)>;

struct NodeDynamics {
  std::size_t state_dim = 1;
  NodeRhs rhs;
  LipschitzBound lipschitz_bound;  // may be empty
};

enum class Extension { None, Constant, Periodic };

std::string to_string(Extension e);
Extension extension_from_string(const std::string& s);

/// Writes the matrix for time t into out (out is n x n on entry).
using MatrixPiece = std::function<void(double t, Matrix& out)>;

/// Piecewise-defined adjacency A(t). Piece k is active on [breakpoints[k],
/// breakpoints[k+1]); sampling at a breakpoint uses the right-hand piece. The
/// diagonal of every sample is zero.
class AdjacencySchedule {
 public:
  struct Piece {
    MatrixPiece fn;
    std::optional<Matrix> constant;  // set for piecewise-constant segments
  };

  /// `end` closes the last piece: required for Periodic (period = end -
  /// breakpoints.front()); for None it bounds the domain; ignored for Constant.
  AdjacencySchedule(std::size_t n_nodes, std::vector<double> breakpoints, std::vector<Piece> pieces,
                    Extension extension, double end = std::numeric_limits<double>::infinity());

  std::size_t n_nodes() const noexcept { return n_; }
  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  Extension extension() const noexcept { return extension_; }
  double end() const noexcept { return end_; }
  bool is_piecewise_constant() const noexcept;
  const std::vector<Piece>& pieces() const noexcept { return pieces_; }

  void sample_into(double t, Matrix& out) const;
  Matrix sample(double t) const;

  /// All switching times strictly inside (t0, t1), periodic repeats included.
  std::vector<double> switch_times(double t0, double t1) const;

 private:
  std::size_t locate(double t, double& local_t) const;

  std::size_t n_;
  std::vector<double> breakpoints_;
  std::vector<Piece> pieces_;
  Extension extension_;
  double end_;
};

struct Segment {
  double t_start;
  Matrix matrix;
};

/// Piecewise-constant schedule from (t_start, A) segments.
AdjacencySchedule build_switching_schedule(std::size_t n_nodes, std::vector<Segment> segments,
                                           Extension extension,
                                           double end = std::numeric_limits<double>::infinity());

/// Single functional piece defined for every t.
AdjacencySchedule functional_schedule(std::size_t n_nodes, MatrixPiece piece);

/// Constant adjacency for every t.
AdjacencySchedule constant_schedule(const Matrix& a);

nlohmann::json schedule_to_json(const AdjacencySchedule& s);
AdjacencySchedule schedule_from_json(const nlohmann::json& j);

/// Undirected support of A (edge if a_ij != 0 or a_ji != 0) is connected.
bool support_connected(const Matrix& a);

/// 0/1 matrix with independent off-diagonal entries of probability `density`,
/// redrawn until its undirected support is connected.
Matrix random_connected_binary(std::size_t n, double density, std::mt19937_64& rng);

struct NetworkSystem {
  std::vector<NodeDynamics> nodes;
  AdjacencySchedule schedule;
  double global_coupling = 1.0;

  NetworkSystem(std::vector<NodeDynamics> nodes, AdjacencySchedule schedule, double c = 1.0);

  std::size_t n_nodes() const noexcept { return nodes.size(); }
  std::size_t state_dim() const noexcept { return nodes.front().state_dim; }
};

/// Per-pair one-sided bounds alpha_ij(t), beta_ij(t) valid on the ball of radius rho.
class PairBoundSet {
 public:
  using PairFn = std::function<double(std::size_t i, std::size_t j, double t)>;

  PairBoundSet(std::size_t n_nodes, double rho, PairFn alpha, PairFn beta, bool global = false);

  static PairBoundSet constant(std::size_t n_nodes, double rho, double alpha, double beta,
                               bool global = false);

  std::size_t n_nodes() const noexcept { return n_; }
  double rho() const noexcept { return rho_; }
  bool global() const noexcept { return global_; }

  /// Symmetric in (i, j).
  double alpha(std::size_t i, std::size_t j, double t) const;
  /// Symmetric in (i, j); throws DomainError on a negative value.
  double beta(std::size_t i, std::size_t j, double t) const;

  PairBoundSet with_rho(double rho) const;

 private:
  std::size_t n_;
  double rho_;
  PairFn alpha_;
  PairFn beta_;
  bool global_;
};

/// Identical nodes: alpha_ij(t) = l(t, rho), beta_ij = 0.
PairBoundSet pair_bounds_for_identical_nodes(std::size_t n_nodes, double rho, LipschitzBound l,
                                             bool global = false);

/// Sorted set of node indices (0-based), at least two.
class ClusterSpec {
 public:
  ClusterSpec(std::vector<std::size_t> indices, std::size_t n_nodes);
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }
  std::size_t size() const noexcept { return indices_.size(); }
  bool contains(std::size_t i) const;

 private:
  std::vector<std::size_t> indices_;
};

/// Number of unordered pairs and lexicographic (i<j) pair indexing.
constexpr std::size_t pair_count(std::size_t n) { return n * (n - 1) / 2; }
constexpr std::size_t pair_index(std::size_t i, std::size_t j, std::size_t n) {
  return i * (2 * n - i - 1) / 2 + (j - i - 1);
}

}  // namespace tsync
