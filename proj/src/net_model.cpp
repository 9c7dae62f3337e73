#include "tempsync/net_model.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <utility>

#include "tempsync/errors.hpp"

namespace tsync {

std::string to_string(Extension e) {
  switch (e) {
    case Extension::None: return "none";
    case Extension::Constant: return "constant";
    case Extension::Periodic: return "periodic";
  }
  return "none";
}

Extension extension_from_string(const std::string& s) {
  if (s == "none") return Extension::None;
  if (s == "constant") return Extension::Constant;
  if (s == "periodic") return Extension::Periodic;
  throw ConstructionError("unknown extension rule '" + s + "'");
}

AdjacencySchedule::AdjacencySchedule(std::size_t n_nodes, std::vector<double> breakpoints,
                                     std::vector<Piece> pieces, Extension extension, double end)
    : n_(n_nodes),
      breakpoints_(std::move(breakpoints)),
      pieces_(std::move(pieces)),
      extension_(extension),
      end_(end) {
  if (n_ == 0) throw ConstructionError("schedule needs at least one node");
  if (breakpoints_.empty()) throw ConstructionError("schedule needs at least one segment");
  if (breakpoints_.size() != pieces_.size())
    throw ConstructionError("one piece per breakpoint required");
  for (std::size_t k = 0; k < breakpoints_.size(); ++k) {
    if (!std::isfinite(breakpoints_[k])) throw ConstructionError("breakpoints must be finite");
    if (k > 0 && !(breakpoints_[k] > breakpoints_[k - 1]))
      throw ConstructionError("segment start times must be strictly increasing");
    if (!pieces_[k].fn) throw ConstructionError("empty schedule piece");
    if (pieces_[k].constant &&
        (pieces_[k].constant->rows() != n_ || pieces_[k].constant->cols() != n_))
      throw ConstructionError("segment matrix is not n x n");
  }
  if (extension_ == Extension::Periodic && !(std::isfinite(end_) && end_ > breakpoints_.back()))
    throw ConstructionError("periodic schedule needs a finite end after the last breakpoint");
  if (!(end_ > breakpoints_.back())) throw ConstructionError("schedule end precedes last breakpoint");
}

bool AdjacencySchedule::is_piecewise_constant() const noexcept {
  return std::all_of(pieces_.begin(), pieces_.end(),
                     [](const Piece& p) { return p.constant.has_value(); });
}

std::size_t AdjacencySchedule::locate(double t, double& local_t) const {
  if (!std::isfinite(t)) throw DomainError("schedule sampled at a non-finite time");
  const double t_first = breakpoints_.front();
  local_t = t;
  if (extension_ == Extension::Periodic) {
    const double period = end_ - t_first;
    double r = std::fmod(t - t_first, period);
    if (r < 0) r += period;
    local_t = t_first + r;
  } else if (t < t_first) {
    if (extension_ == Extension::None)
      throw DomainError("time " + std::to_string(t) + " precedes the schedule domain");
    return 0;
  } else if (t >= end_ && extension_ == Extension::None) {
    throw DomainError("time " + std::to_string(t) + " is past the schedule domain");
  }
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), local_t);
  return static_cast<std::size_t>(std::distance(breakpoints_.begin(), it)) - 1;
}

void AdjacencySchedule::sample_into(double t, Matrix& out) const {
  if (out.rows() != n_ || out.cols() != n_) out = Matrix(n_, n_);
  double local_t = t;
  const std::size_t k = locate(t, local_t);
  pieces_[k].fn(local_t, out);
  for (std::size_t i = 0; i < n_; ++i) out(i, i) = 0.0;
}

Matrix AdjacencySchedule::sample(double t) const {
  Matrix out(n_, n_);
  sample_into(t, out);
  return out;
}

std::vector<double> AdjacencySchedule::switch_times(double t0, double t1) const {
  std::vector<double> out;
  if (!(t1 > t0)) return out;
  auto push = [&](double s) {
    if (s > t0 && s < t1) out.push_back(s);
  };
  if (extension_ == Extension::Periodic) {
    const double t_first = breakpoints_.front();
    const double period = end_ - t_first;
    const double m0 = std::floor((t0 - t_first) / period) - 1.0;
    for (double m = m0;; m += 1.0) {
      const double base = t_first + m * period;
      if (base > t1) break;
      for (double b : breakpoints_) push(base + (b - t_first));
    }
  } else {
    for (std::size_t k = 0; k < breakpoints_.size(); ++k) {
      if (k == 0 && extension_ == Extension::Constant) continue;
      push(breakpoints_[k]);
    }
    if (extension_ == Extension::None) push(end_);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

AdjacencySchedule build_switching_schedule(std::size_t n_nodes, std::vector<Segment> segments,
                                           Extension extension, double end) {
  if (segments.empty()) throw ConstructionError("no segments given");
  std::vector<double> bps;
  std::vector<AdjacencySchedule::Piece> pieces;
  bps.reserve(segments.size());
  pieces.reserve(segments.size());
  for (auto& seg : segments) {
    if (seg.matrix.rows() != n_nodes || seg.matrix.cols() != n_nodes)
      throw ConstructionError("segment matrix at t=" + std::to_string(seg.t_start) +
                              " is not " + std::to_string(n_nodes) + "x" +
                              std::to_string(n_nodes));
    for (std::size_t i = 0; i < n_nodes; ++i) seg.matrix(i, i) = 0.0;
    bps.push_back(seg.t_start);
    Matrix m = seg.matrix;
    pieces.push_back({[m](double, Matrix& out) { out = m; }, std::move(seg.matrix)});
  }
  return AdjacencySchedule(n_nodes, std::move(bps), std::move(pieces), extension, end);
}

AdjacencySchedule functional_schedule(std::size_t n_nodes, MatrixPiece piece) {
  std::vector<AdjacencySchedule::Piece> pieces;
  pieces.push_back({std::move(piece), std::nullopt});
  return AdjacencySchedule(n_nodes, {0.0}, std::move(pieces), Extension::Constant);
}

AdjacencySchedule constant_schedule(const Matrix& a) {
  return build_switching_schedule(a.rows(), {{0.0, a}}, Extension::Constant);
}

nlohmann::json schedule_to_json(const AdjacencySchedule& s) {
  if (!s.is_piecewise_constant())
    throw ParameterError("only piecewise-constant schedules can be serialized");
  nlohmann::json j;
  j["n"] = s.n_nodes();
  j["extension"] = to_string(s.extension());
  if (std::isfinite(s.end())) j["end"] = s.end();
  nlohmann::json segs = nlohmann::json::array();
  for (std::size_t k = 0; k < s.breakpoints().size(); ++k) {
    const Matrix& m = *s.pieces()[k].constant;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
      auto row = m.row(r);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    segs.push_back({{"t", s.breakpoints()[k]}, {"A", rows}});
  }
  j["segments"] = segs;
  return j;
}

AdjacencySchedule schedule_from_json(const nlohmann::json& j) {
  if (!j.contains("n")) throw ConstructionError("schedule: missing field 'n'");
  if (!j.contains("segments")) throw ConstructionError("schedule: missing field 'segments'");
  const auto n = j.at("n").get<std::size_t>();
  const Extension ext = extension_from_string(j.value("extension", std::string("constant")));
  std::vector<Segment> segs;
  for (const auto& s : j.at("segments")) {
    if (!s.contains("t") || !s.contains("A"))
      throw ConstructionError("schedule: segment needs fields 't' and 'A'");
    const auto& rows = s.at("A");
    if (rows.size() != n) throw ConstructionError("schedule: segment matrix has wrong row count");
    Matrix m(n, n);
    for (std::size_t r = 0; r < n; ++r) {
      if (rows[r].size() != n)
        throw ConstructionError("schedule: segment matrix has wrong column count");
      for (std::size_t c = 0; c < n; ++c) m(r, c) = rows[r][c].get<double>();
    }
    segs.push_back({s.at("t").get<double>(), std::move(m)});
  }
  const double end = j.value("end", std::numeric_limits<double>::infinity());
  return build_switching_schedule(n, std::move(segs), ext, end);
}

bool support_connected(const Matrix& a) {
  const std::size_t n = a.rows();
  if (n <= 1) return true;
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    const std::size_t i = q.front();
    q.pop();
    for (std::size_t j = 0; j < n; ++j) {
      if (seen[j] || i == j) continue;
      if (a(i, j) != 0.0 || a(j, i) != 0.0) {
        seen[j] = true;
        ++count;
        q.push(j);
      }
    }
  }
  return count == n;
}

Matrix random_connected_binary(std::size_t n, double density, std::mt19937_64& rng) {
  if (!(density > 0.0 && density <= 1.0)) throw ParameterError("density must lie in (0, 1]");
  std::bernoulli_distribution edge(density);
  Matrix m(n, n);
  do {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m(i, j) = (i != j && edge(rng)) ? 1.0 : 0.0;
  } while (!support_connected(m));
  return m;
}

NetworkSystem::NetworkSystem(std::vector<NodeDynamics> nodes_in, AdjacencySchedule schedule_in,
                             double c)
    : nodes(std::move(nodes_in)), schedule(std::move(schedule_in)), global_coupling(c) {
  if (nodes.empty()) throw ConstructionError("network needs at least one node");
  if (nodes.size() != schedule.n_nodes())
    throw ConstructionError("node count " + std::to_string(nodes.size()) +
                            " does not match schedule size " +
                            std::to_string(schedule.n_nodes()));
  const std::size_t m = nodes.front().state_dim;
  for (const auto& nd : nodes) {
    if (nd.state_dim == 0 || nd.state_dim != m)
      throw ConstructionError("all nodes need the same positive state dimension");
    if (!nd.rhs) throw ConstructionError("node without a vector field");
  }
  if (!(c >= 0.0) || !std::isfinite(c)) throw ConstructionError("global coupling must be >= 0");
}

PairBoundSet::PairBoundSet(std::size_t n_nodes, double rho, PairFn alpha, PairFn beta, bool global)
    : n_(n_nodes), rho_(rho), alpha_(std::move(alpha)), beta_(std::move(beta)), global_(global) {
  if (!(rho_ > 0.0)) throw ConstructionError("pair bounds need a positive radius");
  if (!alpha_ || !beta_) throw ConstructionError("pair bounds need alpha and beta");
}

PairBoundSet PairBoundSet::constant(std::size_t n_nodes, double rho, double alpha, double beta,
                                    bool global) {
  if (beta < 0.0) throw ConstructionError("beta must be nonnegative");
  return PairBoundSet(
      n_nodes, rho, [alpha](std::size_t, std::size_t, double) { return alpha; },
      [beta](std::size_t, std::size_t, double) { return beta; }, global);
}

double PairBoundSet::alpha(std::size_t i, std::size_t j, double t) const {
  return alpha_(std::min(i, j), std::max(i, j), t);
}

double PairBoundSet::beta(std::size_t i, std::size_t j, double t) const {
  const double b = beta_(std::min(i, j), std::max(i, j), t);
  if (b < 0.0) throw DomainError("beta must be nonnegative");
  return b;
}

PairBoundSet PairBoundSet::with_rho(double rho) const {
  return PairBoundSet(n_, rho, alpha_, beta_, global_);
}

PairBoundSet pair_bounds_for_identical_nodes(std::size_t n_nodes, double rho, LipschitzBound l,
                                             bool global) {
  if (!l) throw ConstructionError("Lipschitz bound contract is empty");
  return PairBoundSet(
      n_nodes, rho, [l, rho](std::size_t, std::size_t, double t) { return l(t, rho); },
      [](std::size_t, std::size_t, double) { return 0.0; }, global);
}

ClusterSpec::ClusterSpec(std::vector<std::size_t> indices, std::size_t n_nodes)
    : indices_(std::move(indices)) {
  if (indices_.size() < 2) throw ConstructionError("a cluster needs at least two nodes");
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    if (indices_[k] >= n_nodes) throw ConstructionError("cluster index out of range");
    if (k > 0 && indices_[k] <= indices_[k - 1])
      throw ConstructionError("cluster indices must be unique and sorted");
  }
}

bool ClusterSpec::contains(std::size_t i) const {
  return std::binary_search(indices_.begin(), indices_.end(), i);
}

}  // namespace tsync
