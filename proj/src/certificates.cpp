#include "tempsync/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "tempsync/errors.hpp"
#include "tempsync/kernels.hpp"

namespace tsync {

std::size_t Horizon::intervals() const {
  if (!(step > 0.0) || !(t1 > t0)) throw ParameterError("empty grid");
  return static_cast<std::size_t>(std::llround(std::ceil((t1 - t0) / step - 1e-9)));
}

std::vector<double> Horizon::points() const {
  const std::size_t n = intervals();
  std::vector<double> p(n + 1);
  for (std::size_t k = 0; k < n; ++k) p[k] = t0 + static_cast<double>(k) * step;
  p[n] = t1;
  return p;
}

nlohmann::json Horizon::to_json() const { return {{"t0", t0}, {"t1", t1}, {"step", step}}; }

namespace {

struct WeightView {
  explicit WeightView(const NetworkSystem& s) : sys(s), a(s.n_nodes(), s.n_nodes()) {}
  // Effective weights c * a_ij(t).
  const Matrix& at(double t) {
    sys.schedule.sample_into(t, a);
    const double c = sys.global_coupling;
    if (c != 1.0)
      for (double& v : a.data()) v *= c;
    return a;
  }
  const NetworkSystem& sys;
  Matrix a;
};

std::vector<double> row_sums(const Matrix& a) {
  std::vector<double> s(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    s[i] = std::accumulate(r.begin(), r.end(), 0.0);
  }
  return s;
}

double pair_delta(const Matrix& a, const std::vector<double>& rs, double alpha, std::size_t i,
                  std::size_t j) {
  // a_ij + a_ji + 1/2 sum_{k != i,j} (a_ik + a_jk), with zero diagonal.
  return alpha - 0.5 * (a(i, j) + a(j, i) + rs[i] + rs[j]);
}

double pair_cross_sum(const Matrix& a, std::size_t i, std::size_t j) {
  const auto& K = kernels::active();
  return K.abs_diff_sum(a.row(i), a.row(j)) - std::fabs(a(i, j)) - std::fabs(a(j, i));
}

double cluster_cross_sum(const Matrix& a, std::span<const std::size_t> nodes, std::size_t i,
                         std::size_t j) {
  double s = 0.0;
  for (std::size_t k : nodes)
    if (k != i && k != j) s += std::fabs(a(j, k) - a(i, k));
  return s;
}

std::vector<std::size_t> all_nodes(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

// Integral of each cell with Simpson's rule from endpoint and midpoint samples,
// accumulated, then the best unit window.
double window_sup_from_samples(std::span<const double> f, std::span<const double> fm, double h,
                               double t0, double t1) {
  const std::size_t n = fm.size();
  if (t1 - t0 < 1.0 - 1e-12)
    throw ParameterError("window grid must span at least one time unit");
  std::vector<double> cum(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double len = (k + 1 == n) ? (t1 - (t0 + static_cast<double>(k) * h)) : h;
    cum[k + 1] = cum[k] + len / 6.0 * (f[k] + 4.0 * fm[k] + f[k + 1]);
  }
  auto grid_t = [&](std::size_t k) { return k == n ? t1 : t0 + static_cast<double>(k) * h; };
  auto cum_at = [&](double t) {
    if (t >= t1) return cum[n];
    const double x = (t - t0) / h;
    auto k = static_cast<std::size_t>(std::floor(x));
    if (k >= n) return cum[n];
    const double tk = grid_t(k);
    const double tk1 = grid_t(k + 1);
    const double w = (t - tk) / (tk1 - tk);
    return cum[k] + w * (cum[k + 1] - cum[k]);
  };
  const double offset = 1.0 / h;
  const bool aligned = std::fabs(offset - std::round(offset)) < 1e-9;
  const auto off = static_cast<std::size_t>(std::llround(offset));
  double best = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double tau = grid_t(k);
    if (tau + 1.0 > t1 + 1e-12) break;
    const double upper = (aligned && k + off <= n) ? cum[k + off] : cum_at(tau + 1.0);
    best = std::max(best, upper - cum[k]);
  }
  return best;
}

struct CellSamples {
  std::vector<double> f;
  std::vector<double> fm;
};

CellSamples sample_cells(const std::function<double(double)>& g, const Horizon& grid) {
  const auto pts = grid.points();
  CellSamples s;
  s.f.resize(pts.size());
  s.fm.resize(pts.size() - 1);
  for (std::size_t k = 0; k < pts.size(); ++k) s.f[k] = g(pts[k]);
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) s.fm[k] = g(0.5 * (pts[k] + pts[k + 1]));
  return s;
}

double mu1_over(const PairBoundSet& bounds, std::span<const std::size_t> nodes,
                const Horizon& grid) {
  auto norm_beta = [&](double t) {
    double acc = 0.0;
    for (std::size_t a = 0; a < nodes.size(); ++a)
      for (std::size_t b = a + 1; b < nodes.size(); ++b) {
        const double v = 2.0 * bounds.beta(nodes[a], nodes[b], t);
        acc += v * v;
      }
    return std::sqrt(acc);
  };
  const auto s = sample_cells(norm_beta, grid);
  return window_sup_from_samples(s.f, s.fm, grid.step, grid.t0, grid.t1);
}

struct CoreResult {
  std::vector<double> delta_min, delta_max;
  double gamma_bar = std::numeric_limits<double>::infinity();
  Verdict first_failure;
  bool failed = false;
};

// Grid scan shared by the full and cluster certificates. `nodes` selects the
// pairs checked and the k-range of the gamma cross-sum.
CoreResult scan_grid(const NetworkSystem& system, const PairBoundSet& bounds,
                     std::span<const std::size_t> nodes, bool restrict_cross_sum,
                     const Horizon& horizon, double margin) {
  const std::size_t n = nodes.size();
  CoreResult r;
  r.delta_min.assign(pair_count(n), std::numeric_limits<double>::infinity());
  r.delta_max.assign(pair_count(n), -std::numeric_limits<double>::infinity());
  WeightView w(system);
  for (double t : horizon.points()) {
    const Matrix& a = w.at(t);
    const auto rs = row_sums(a);
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const std::size_t i = nodes[p];
        const std::size_t j = nodes[q];
        const std::size_t idx = pair_index(p, q, n);
        const double d = pair_delta(a, rs, bounds.alpha(i, j, t), i, j);
        const double cross =
            restrict_cross_sum ? cluster_cross_sum(a, nodes, i, j) : pair_cross_sum(a, i, j);
        const double g = 2.0 * std::fabs(d) - cross;
        r.delta_min[idx] = std::min(r.delta_min[idx], d);
        r.delta_max[idx] = std::max(r.delta_max[idx], d);
        r.gamma_bar = std::min(r.gamma_bar, g);
        if (!r.failed) {
          if (d > -margin) {
            r.failed = true;
            r.first_failure = {Verdict::Kind::Fails, "delta", i, j, t};
          } else if (g < margin) {
            r.failed = true;
            r.first_failure = {Verdict::Kind::Fails, "gamma", i, j, t};
          }
        }
      }
  }
  return r;
}

double log_threshold_for(double mu, double bound_M) { return -std::log1p(-mu / bound_M); }

double settle_time_for(double rho, double epsilon, double gamma_bar) {
  return std::max(0.0, std::log(4.0 * rho * rho / epsilon) / gamma_bar);
}

std::vector<std::string> base_assumptions(const PairBoundSet& bounds, const Horizon& h) {
  std::vector<std::string> a;
  std::ostringstream rho;
  rho << "rho=" << format_double(bounds.rho());
  a.push_back(rho.str());
  a.push_back("grid-verified");
  a.push_back("inf over [" + format_double(h.t0) + "," + format_double(h.t1) +
              "] grid only, not over all t");
  if (bounds.global()) a.push_back("H1*: bounds independent of radius");
  return a;
}

nlohmann::json verdict_json(const Verdict& v) {
  if (v.holds()) return nullptr;
  nlohmann::json f{{"condition", v.condition}, {"t", v.t}};
  if (v.condition != "log-threshold") f["pair"] = {v.i + 1, v.j + 1};
  return f;
}

}  // namespace

std::string Verdict::describe() const {
  if (holds()) return "holds";
  std::ostringstream os;
  os << "fails(" << condition;
  if (condition != "log-threshold") os << ",(" << i + 1 << ',' << j + 1 << ")";
  os << ",t=" << format_double(t) << ")";
  return os.str();
}

ComparisonSample evaluate_comparison(const NetworkSystem& system, const PairBoundSet& bounds,
                                     double t) {
  const std::size_t n = system.n_nodes();
  if (bounds.n_nodes() != n) throw ParameterError("pair bounds do not match the network size");
  WeightView w(system);
  const Matrix& a = w.at(t);
  const auto rs = row_sums(a);
  const std::size_t dim = pair_count(n);
  ComparisonSample out{Matrix(dim, dim), std::vector<double>(dim), std::vector<double>(dim)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::size_t p = pair_index(i, j, n);
      const double d = pair_delta(a, rs, bounds.alpha(i, j, t), i, j);
      out.delta[p] = d;
      out.gamma[p] = 2.0 * std::fabs(d) - pair_cross_sum(a, i, j);
      out.e(p, p) = 2.0 * d;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        const double diff = a(j, k) - a(i, k);
        out.e(p, pair_index(std::min(i, k), std::max(i, k), n)) += positive_part(diff);
        out.e(p, pair_index(std::min(j, k), std::max(j, k), n)) += positive_part(-diff);
      }
    }
  return out;
}

ComparisonSystem::ComparisonSystem(const NetworkSystem& system, const PairBoundSet& bounds)
    : system_(system), bounds_(bounds) {
  if (bounds.n_nodes() != system.n_nodes())
    throw ParameterError("pair bounds do not match the network size");
}

void ComparisonSystem::beta_into(double t, std::span<double> out) const {
  const std::size_t n = system_.n_nodes();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) out[pair_index(i, j, n)] = 2.0 * bounds_.beta(i, j, t);
}

OdeSolution comparison_solve(const ComparisonSystem& cs, double t0, std::span<const double> xi0,
                             double t_end, const SolverConfig& cfg) {
  if (xi0.size() != cs.dim()) throw ParameterError("initial error vector has the wrong length");
  if (std::any_of(xi0.begin(), xi0.end(), [](double v) { return v < 0.0; }))
    throw ParameterError("initial error vector must be nonnegative");
  const auto& K = kernels::active();
  std::vector<double> beta(cs.dim());
  auto rhs = [&](double t, std::span<const double> u, std::span<double> du) {
    const auto s = cs.sample(t);
    cs.beta_into(t, beta);
    for (std::size_t r = 0; r < cs.dim(); ++r) du[r] = K.dot(s.e.row(r), u) + beta[r];
  };
  const auto breaks = cs.switch_times(t0, t_end);
  return solve_ode(rhs, xi0, t0, t_end, breaks, cfg);
}

DecayCheck dominance_decay_check(const ComparisonSystem& cs, const Horizon& grid,
                                 std::size_t n_starts, double tol) {
  DecayCheck out;
  const auto pts = grid.points();
  bool all_delta_negative = true;
  double gbar = std::numeric_limits<double>::infinity();
  for (double t : pts) {
    const auto s = cs.sample(t);
    for (std::size_t p = 0; p < cs.dim(); ++p) {
      gbar = std::min(gbar, s.gamma[p]);
      if (!(s.delta[p] < 0.0)) all_delta_negative = false;
    }
  }
  out.gamma_bar = gbar;
  if (!(gbar > 0.0) || !all_delta_negative || pts.size() < 2) return out;

  const std::size_t dim = cs.dim();
  const auto& K = kernels::active();
  Matrix e;
  auto rhs = [&](double t, std::span<const double> u, std::span<double> du) {
    e = cs.sample(t).e;
    // U' = E U, U stored row-major.
    std::vector<double> col(dim);
    for (std::size_t c = 0; c < dim; ++c) {
      for (std::size_t r = 0; r < dim; ++r) col[r] = u[r * dim + c];
      for (std::size_t r = 0; r < dim; ++r) du[r * dim + c] = K.dot(e.row(r), col);
    }
  };
  SolverConfig cfg;
  cfg.dt = std::min(1e-3, grid.step);
  const std::size_t starts = std::max<std::size_t>(1, std::min(n_starts, pts.size() - 1));
  double worst = 0.0;
  for (std::size_t s = 0; s < starts; ++s) {
    const std::size_t k0 = s * (pts.size() - 1) / starts;
    const double t_s = pts[k0];
    std::vector<double> breaks = cs.switch_times(t_s, grid.t1);
    breaks.insert(breaks.end(), pts.begin() + static_cast<std::ptrdiff_t>(k0) + 1, pts.end());
    const Matrix id = Matrix::identity(dim);
    const auto sol = solve_ode(rhs, id.data(), t_s, grid.t1, breaks, cfg);
    Matrix u(dim, dim);
    for (std::size_t k = 0; k < sol.times.size(); ++k) {
      const auto st = sol.at(k);
      std::copy(st.begin(), st.end(), u.data().begin());
      const double ratio = norm_inf(u) / std::exp(-gbar * (sol.times[k] - t_s));
      worst = std::max(worst, ratio);
    }
  }
  out.worst_ratio = worst;
  out.verified = worst <= 1.0 + tol;
  return out;
}

double sliding_window_sup(const std::function<double(double)>& g, const Horizon& grid) {
  const auto s = sample_cells(g, grid);
  return window_sup_from_samples(s.f, s.fm, grid.step, grid.t0, grid.t1);
}

double compute_mu1(const PairBoundSet& bounds, const Horizon& window_grid) {
  const auto nodes = all_nodes(bounds.n_nodes());
  return mu1_over(bounds, nodes, window_grid);
}

double compute_mu1(const PairBoundSet& bounds, std::span<const std::size_t> nodes,
                   const Horizon& window_grid) {
  return mu1_over(bounds, nodes, window_grid);
}

double compute_mu2(const NetworkSystem& system, const ClusterSpec& cluster, double rho,
                   const Horizon& window_grid) {
  if (!(rho > 0.0)) throw ParameterError("rho must be positive");
  const std::size_t n = system.n_nodes();
  std::vector<std::size_t> outside;
  for (std::size_t k = 0; k < n; ++k)
    if (!cluster.contains(k)) outside.push_back(k);
  if (outside.empty()) return 0.0;
  const auto& J = cluster.indices();
  const auto pts = window_grid.points();
  // Samples of A at cell endpoints and midpoints, then one window scan per (i,j,k).
  WeightView w(system);
  std::vector<Matrix> at_pts;
  std::vector<Matrix> at_mid;
  at_pts.reserve(pts.size());
  at_mid.reserve(pts.size() - 1);
  for (double t : pts) at_pts.push_back(w.at(t));
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) at_mid.push_back(w.at(0.5 * (pts[k] + pts[k + 1])));
  double best = 0.0;
  std::vector<double> f(pts.size());
  std::vector<double> fm(pts.size() - 1);
  for (std::size_t p = 0; p < J.size(); ++p)
    for (std::size_t q = p + 1; q < J.size(); ++q)
      for (std::size_t k : outside) {
        const std::size_t i = J[p];
        const std::size_t j = J[q];
        for (std::size_t s = 0; s < pts.size(); ++s)
          f[s] = std::fabs(at_pts[s](j, k) - at_pts[s](i, k));
        for (std::size_t s = 0; s + 1 < pts.size(); ++s)
          fm[s] = std::fabs(at_mid[s](j, k) - at_mid[s](i, k));
        best = std::max(best, window_sup_from_samples(f, fm, window_grid.step, window_grid.t0,
                                                      window_grid.t1));
      }
  return 2.0 * rho * rho * best;
}

SyncCertificate check_full_sync(const NetworkSystem& system, const PairBoundSet& bounds,
                                const Horizon& horizon, double bound_M, double epsilon,
                                double margin) {
  if (bounds.n_nodes() != system.n_nodes())
    throw ParameterError("pair bounds do not match the network size");
  if (!(epsilon > 0.0)) throw ParameterError("epsilon must be positive");
  horizon.intervals();
  SyncCertificate cert;
  cert.grid = horizon;
  cert.rho = bounds.rho();
  cert.bound_M = bound_M;
  cert.epsilon = epsilon;
  cert.mu1 = compute_mu1(bounds, horizon);
  if (!(bound_M > cert.mu1))
    throw ParameterError("bound_M=" + format_double(bound_M) + " must exceed mu1=" +
                         format_double(cert.mu1));
  cert.assumptions = base_assumptions(bounds, horizon);

  const auto nodes = all_nodes(system.n_nodes());
  auto core = scan_grid(system, bounds, nodes, false, horizon, margin);
  cert.delta_min = std::move(core.delta_min);
  cert.delta_max = std::move(core.delta_max);
  cert.gamma_bar = core.gamma_bar;
  cert.log_threshold = log_threshold_for(cert.mu1, bound_M);
  if (cert.gamma_bar > 0.0) cert.tail_bound = cert.mu1 / (-std::expm1(-cert.gamma_bar));

  if (core.failed) {
    cert.verdict = core.first_failure;
  } else if (!(cert.gamma_bar > cert.log_threshold)) {
    cert.verdict = {Verdict::Kind::Fails, "log-threshold", 0, 0, horizon.t0};
  } else {
    cert.verdict = {Verdict::Kind::Holds, "", 0, 0, 0.0};
    cert.asymptotic_bound = epsilon + bound_M;
    cert.settle_time = settle_time_for(cert.rho, epsilon, cert.gamma_bar);
  }
  return cert;
}

ClusterCertificate check_cluster_sync(const NetworkSystem& system, const PairBoundSet& bounds,
                                      const ClusterSpec& cluster, const Horizon& horizon,
                                      double bound_M, double epsilon, double margin) {
  if (bounds.n_nodes() != system.n_nodes())
    throw ParameterError("pair bounds do not match the network size");
  if (!(epsilon > 0.0)) throw ParameterError("epsilon must be positive");
  horizon.intervals();
  const std::size_t N = system.n_nodes();
  const auto& J = cluster.indices();
  const double n = static_cast<double>(J.size());

  ClusterCertificate cert;
  cert.cluster = J;
  cert.n_nodes = N;
  cert.grid = horizon;
  cert.rho = bounds.rho();
  cert.bound_M = bound_M;
  cert.epsilon = epsilon;
  cert.mu1 = compute_mu1(bounds, J, horizon);
  cert.mu2 = compute_mu2(system, cluster, bounds.rho(), horizon);
  const double outside = static_cast<double>(N) - n;
  cert.combined_mu = cert.mu1 + (outside > 0.0 ? cert.mu2 * outside * std::sqrt(2.0 * n * (n - 1.0)) : 0.0);
  if (!(bound_M > cert.combined_mu))
    throw ParameterError("bound_M=" + format_double(bound_M) + " must exceed mu1 + mu2 term=" +
                         format_double(cert.combined_mu));
  cert.assumptions = base_assumptions(bounds, horizon);

  const bool full = J.size() == N;
  auto core = scan_grid(system, bounds, J, !full, horizon, margin);
  cert.gamma_bar_J = core.gamma_bar;
  cert.log_threshold = log_threshold_for(cert.combined_mu, bound_M);
  if (core.failed) {
    cert.verdict = core.first_failure;
  } else if (!(cert.gamma_bar_J > cert.log_threshold)) {
    cert.verdict = {Verdict::Kind::Fails, "log-threshold", 0, 0, horizon.t0};
  } else {
    cert.verdict = {Verdict::Kind::Holds, "", 0, 0, 0.0};
    cert.asymptotic_bound = epsilon + bound_M;
    cert.settle_time = settle_time_for(cert.rho, epsilon, cert.gamma_bar_J);
  }
  return cert;
}

nlohmann::json SyncCertificate::to_json() const {
  nlohmann::json j;
  j["verdict"] = verdict.holds() ? "holds" : "fails";
  j["failure"] = verdict_json(verdict);
  j["gamma_bar"] = gamma_bar;
  j["mu1"] = mu1;
  j["mu2"] = 0.0;
  j["bound_M"] = bound_M;
  j["epsilon"] = epsilon;
  j["log_threshold"] = log_threshold;
  if (verdict.holds()) {
    j["asymptotic_bound"] = asymptotic_bound;
    j["settle_time"] = settle_time;
  } else {
    j["asymptotic_bound"] = nullptr;
    j["settle_time"] = nullptr;
  }
  j["grid"] = grid.to_json();
  j["assumptions"] = assumptions;
  return j;
}

nlohmann::json ClusterCertificate::to_json() const {
  nlohmann::json j;
  j["verdict"] = verdict.holds() ? "holds" : "fails";
  j["failure"] = verdict_json(verdict);
  std::vector<std::size_t> one_based;
  for (auto i : cluster) one_based.push_back(i + 1);
  j["cluster"] = one_based;
  j["gamma_bar"] = gamma_bar_J;
  j["mu1"] = mu1;
  j["mu2"] = mu2;
  j["combined_mu"] = combined_mu;
  j["bound_M"] = bound_M;
  j["epsilon"] = epsilon;
  j["log_threshold"] = log_threshold;
  if (verdict.holds()) {
    j["asymptotic_bound"] = asymptotic_bound;
    j["settle_time"] = settle_time;
  } else {
    j["asymptotic_bound"] = nullptr;
    j["settle_time"] = nullptr;
  }
  j["grid"] = grid.to_json();
  j["assumptions"] = assumptions;
  return j;
}

RefinedBounds refined_bounds(const SyncCertificate& cert, double c, std::optional<double> beta_inf) {
  if (!cert.verdict.holds()) throw ParameterError("refined bounds need a holding certificate");
  if (!(c >= 1.0)) throw ParameterError("global coupling c must be >= 1");
  RefinedBounds r;
  r.coupling_bound = cert.epsilon + cert.bound_M / c;
  if (beta_inf) {
    if (*beta_inf < 0.0) throw ParameterError("||beta||_inf must be nonnegative");
    r.linf_bound = cert.epsilon + *beta_inf / (c * cert.gamma_bar);
    r.sharp_sync = *beta_inf == 0.0;
  }
  return r;
}

double PersistenceMargins::heterogeneity_bound(double delta) const {
  const double n = static_cast<double>(n_nodes);
  return 4.0 * rho * delta * std::sqrt(n * (n - 1.0) / 2.0) / gamma_bar;
}

PersistenceMargins persistence_margins(const SyncCertificate& cert, double rho, std::size_t n_nodes) {
  if (!cert.verdict.holds() || cert.mu1 != 0.0)
    throw ParameterError("persistence margins need a holding certificate with mu1 = 0");
  return {cert.gamma_bar, rho, n_nodes, cert.gamma_bar / 4.0};
}

double static_pair_hypothesis(const Matrix& a, std::size_t i, std::size_t j) {
  double s = 2.0 * (a(i, j) + a(j, i));
  for (std::size_t k = 0; k < a.rows(); ++k) {
    if (k == i || k == j) continue;
    s += a(j, k) + a(i, k) - std::fabs(a(j, k) - a(i, k));
  }
  return s;
}

double static_threshold(const Matrix& a_in, double l_rho, double tol) {
  const std::size_t n = a_in.rows();
  if (a_in.cols() != n || n < 2) throw ParameterError("static threshold needs a square matrix, N >= 2");
  Matrix a = a_in;
  for (std::size_t i = 0; i < n; ++i) a(i, i) = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (!(static_pair_hypothesis(a, i, j) > 0.0))
        throw HypothesisError("static coupling hypothesis fails for pair (" +
                              std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
  auto feasible = [&](double c) {
    Matrix ac = a;
    for (double& v : ac.data()) v *= c;
    const auto rs = row_sums(ac);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double d = pair_delta(ac, rs, l_rho, i, j);
        if (!(d < 0.0)) return false;
        if (!(2.0 * std::fabs(d) - pair_cross_sum(ac, i, j) > 0.0)) return false;
      }
    return true;
  };
  double lo = 0.0;
  double hi = 1.0;
  while (!feasible(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e15) throw HypothesisError("no finite coupling threshold found");
  }
  if (feasible(0.0)) return 0.0;
  while (hi - lo > tol * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

double suggest_bound_M(double mu1) { return std::max(2.0 * mu1, 1e-6); }

double estimate_rho(const NetworkSystem& system, double t0, std::span<const double> x0,
                    double t_burn, const SolverConfig& cfg) {
  const auto tr = integrate(system, t0, x0, t0 + t_burn, cfg);
  const auto& K = kernels::active();
  double best = 0.0;
  for (std::size_t k = 0; k < tr.times.size(); ++k)
    for (std::size_t i = 0; i < tr.n_nodes; ++i) {
      const auto v = tr.node(k, i);
      best = std::max(best, std::sqrt(K.dot(v, v)));
    }
  return 1.5 * best;
}

}  // namespace tsync
