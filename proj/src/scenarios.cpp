#include "tempsync/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

#include "tempsync/errors.hpp"
#include "tempsync/parallel.hpp"

namespace tsync {

NodeDynamics consensus_node() {
  return {1, [](double, std::span<const double>, std::span<double> dx) { dx[0] = 0.0; },
          [](double, double) { return 0.0; }};
}

NodeDynamics linear_node(double lambda, double amp, double omega) {
  return {1,
          [=](double t, std::span<const double> x, std::span<double> dx) {
            dx[0] = lambda * x[0] + amp * std::sin(omega * t);
          },
          [=](double, double) { return std::fabs(lambda); }};
}

NodeDynamics lorenz_node(double sigma, double rho, double beta) {
  return {3, [=](double, std::span<const double> x, std::span<double> dx) {
            dx[0] = sigma * (x[1] - x[0]);
            dx[1] = x[0] * (rho - x[2]) - x[1];
            dx[2] = x[0] * x[1] - beta * x[2];
          }, {}};
}

NodeDynamics fhn_node(double c, double current, double a, double b, double eps) {
  return {2, [=](double, std::span<const double> x, std::span<double> dx) {
            dx[0] = c * x[0] - x[0] * x[0] * x[0] - x[1] + current;
            dx[1] = eps * (x[0] + a - b * x[1]);
          }, {}};
}

NodeDynamics vdp_node(double b, double eps0, double omega) {
  return {2, [=](double t, std::span<const double> x, std::span<double> dx) {
            dx[0] = x[1] + b * x[0] - x[0] * x[0] * x[0] / 3.0;
            dx[1] = -eps0 * (1.0 + 0.5 * std::sin(omega * t)) * x[0];
          }, {}};
}

nlohmann::json RunReport::to_json() const {
  nlohmann::json j;
  j["scenario"] = scenario;
  j["seed"] = seed;
  j["parameters"] = parameters;
  j["trajectory_csv"] = trajectory_csv;
  j["error_csv"] = error_csv;
  j["certificate_json"] = certificate_json;
  j["certificate"] = certificate;
  j["metrics"] = metrics;
  j["predicate"] = predicate;
  j["passed"] = passed;
  return j;
}

void write_run_outputs(RunReport& report, const Trajectory& traj, const ErrorSeries& errors,
                       const std::filesystem::path& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  auto open = [](const std::filesystem::path& p) {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    return os;
  };
  const auto traj_path = dir / (stem + "_trajectory.csv");
  const auto err_path = dir / (stem + "_errors.csv");
  const auto cert_path = dir / (stem + "_certificate.json");
  const auto report_path = dir / (stem + "_report.json");
  {
    auto os = open(traj_path);
    write_trajectory_csv(os, traj);
  }
  {
    auto os = open(err_path);
    write_error_csv(os, errors);
  }
  report.trajectory_csv = traj_path.string();
  report.error_csv = err_path.string();
  report.certificate_json = cert_path.string();
  {
    auto os = open(cert_path);
    os << report.certificate.dump(2) << '\n';
  }
  auto os = open(report_path);
  os << report.to_json().dump(2) << '\n';
}

namespace {

double rho_from_trajectory(const Trajectory& tr) {
  double best = 0.0;
  for (std::size_t k = 0; k < tr.times.size(); ++k)
    for (std::size_t i = 0; i < tr.n_nodes; ++i) {
      double s = 0.0;
      for (double v : tr.node(k, i)) s += v * v;
      best = std::max(best, std::sqrt(s));
    }
  return 1.5 * std::max(best, 1e-12);
}

double tail_start(double t0, double t1, double frac) { return t1 - frac * (t1 - t0); }

// Summary statistics shared by every scenario, recomputable from the CSVs.
nlohmann::json base_metrics(const ErrorSeries& e, double t_tail, double settle_threshold) {
  double tail_max_xi = 0.0;
  for (std::size_t k = 0; k < e.times.size(); ++k) {
    if (e.times[k] < t_tail) continue;
    for (double v : e.xi_at(k)) tail_max_xi = std::max(tail_max_xi, v);
  }
  // First sample after which max xi stays below the threshold.
  std::optional<double> settle;
  for (std::size_t k = e.times.size(); k-- > 0;) {
    double m = 0.0;
    for (double v : e.xi_at(k)) m = std::max(m, v);
    if (m > settle_threshold) break;
    settle = e.times[k];
  }
  nlohmann::json j;
  j["tail_start"] = t_tail;
  j["tail_mean_e_hat"] = mean_e_hat(e, t_tail, e.times.back());
  j["tail_max_e_hat"] = max_e_hat(e, t_tail, e.times.back());
  j["tail_max_xi"] = tail_max_xi;
  j["settle_threshold"] = settle_threshold;
  j["observed_settle_time"] = settle ? nlohmann::json(*settle) : nlohmann::json(nullptr);
  return j;
}

std::vector<double> uniform_states(std::size_t count, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> x(count);
  for (double& v : x) v = u(rng);
  return x;
}

template <class T>
T field_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConstructionError(std::string("config field '") + key + "' has the wrong type");
  }
}

}  // namespace

double mean_e_hat(const ErrorSeries& errors, double t0, double t1) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < errors.times.size(); ++k)
    if (errors.times[k] >= t0 && errors.times[k] <= t1) {
      s += errors.e_hat[k];
      ++n;
    }
  return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

double max_e_hat(const ErrorSeries& errors, double t0, double t1) {
  double m = 0.0;
  for (std::size_t k = 0; k < errors.times.size(); ++k)
    if (errors.times[k] >= t0 && errors.times[k] <= t1) m = std::max(m, errors.e_hat[k]);
  return m;
}

// ---------------------------------------------------------------- van der Pol

nlohmann::json to_json(const VdpParams& p) {
  return {{"n_nodes", p.n_nodes}, {"delta_t", p.delta_t},   {"c", p.c},
          {"seed", p.seed},       {"horizon", p.horizon},   {"eps0", p.eps0},
          {"density", p.density}, {"dt", p.dt},             {"record_stride", p.record_stride},
          {"tail_fraction", p.tail_fraction}, {"epsilon", p.epsilon}};
}

VdpParams vdp_params_from_json(const nlohmann::json& j) {
  VdpParams p;
  p.n_nodes = field_or(j, "n_nodes", p.n_nodes);
  p.delta_t = field_or(j, "delta_t", p.delta_t);
  p.c = field_or(j, "c", p.c);
  p.seed = field_or(j, "seed", p.seed);
  p.horizon = field_or(j, "horizon", p.horizon);
  p.eps0 = field_or(j, "eps0", p.eps0);
  p.density = field_or(j, "density", p.density);
  p.dt = field_or(j, "dt", p.dt);
  p.record_stride = field_or(j, "record_stride", p.record_stride);
  p.tail_fraction = field_or(j, "tail_fraction", p.tail_fraction);
  p.epsilon = field_or(j, "epsilon", p.epsilon);
  return p;
}

RunReport run_vdp(const VdpParams& p, const OutDir& out) {
  if (!(p.c >= 0.0)) throw ParameterError("c must be >= 0");
  if (p.n_nodes < 2) throw ParameterError("vdp needs at least two nodes");
  if (!(p.delta_t > 0.0)) throw ParameterError("delta_t must be positive");
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> ub(0.5, 1.0), uw(1.0, 2.0);
  const std::size_t n = p.n_nodes;
  std::vector<double> b(n), omega(n);
  std::vector<NodeDynamics> nodes;
  for (std::size_t i = 0; i < n; ++i) {
    b[i] = ub(rng);
    omega[i] = uw(rng);
    nodes.push_back(vdp_node(b[i], p.eps0, omega[i]));
  }
  std::vector<Segment> segs;
  for (double t = 0.0; t < p.horizon; t += p.delta_t)
    segs.push_back({t, random_connected_binary(n, p.density, rng)});
  const auto x0 = uniform_states(2 * n, -2.0, 2.0, rng);

  NetworkSystem sys(std::move(nodes), build_switching_schedule(n, std::move(segs), Extension::Constant),
                    p.c / static_cast<double>(n));
  SolverConfig cfg;
  cfg.dt = p.dt;
  cfg.record_stride = p.record_stride;
  const auto traj = integrate(sys, 0.0, x0, p.horizon, cfg);
  const auto errors = pairwise_errors(traj);

  // <e, f_i(x) - f_i(y)> <= (b_i + |1 - eps_i|/2)|e|^2 and the heterogeneity
  // term is split by Young's inequality with weight 1.
  const double rho = rho_from_trajectory(traj);
  auto eps_i = [&, eps0 = p.eps0](std::size_t i, double t) {
    return eps0 * (1.0 + 0.5 * std::sin(omega[i] * t));
  };
  PairBoundSet bounds(
      n, rho,
      [=](std::size_t i, std::size_t j, double t) {
        const double ai = b[i] + 0.5 * std::fabs(1.0 - eps_i(i, t));
        const double aj = b[j] + 0.5 * std::fabs(1.0 - eps_i(j, t));
        return std::max(ai, aj) + 0.5;
      },
      [=](std::size_t i, std::size_t j, double t) {
        const double db = b[i] - b[j];
        const double de = eps_i(i, t) - eps_i(j, t);
        return 0.5 * rho * rho * (db * db + de * de);
      });
  const Horizon grid{0.0, p.horizon, 1e-2};
  const double mu1 = compute_mu1(bounds, grid);
  const auto cert = check_full_sync(sys, bounds, grid, suggest_bound_M(mu1), p.epsilon);

  RunReport r;
  r.scenario = "vdp";
  r.seed = p.seed;
  r.parameters = to_json(p);
  r.certificate = cert.to_json();
  r.certificate["assumptions"].push_back("rho estimated from the run (1.5 x max node norm)");
  const double tt = tail_start(0.0, p.horizon, p.tail_fraction);
  r.metrics = base_metrics(errors, tt, cert.verdict.holds() ? p.epsilon + cert.bound_M : p.epsilon);
  r.predicate = "tail mean e_hat is finite";
  r.passed = std::isfinite(r.metrics["tail_mean_e_hat"].get<double>());
  if (out) write_run_outputs(r, traj, errors, *out, "vdp_c" + format_double(p.c));
  return r;
}

VdpSweep run_vdp_sweep(VdpParams p, const std::vector<double>& c_values, std::size_t workers,
                       double min_drop, const OutDir& out) {
  VdpSweep s;
  s.runs.resize(c_values.size());
  parallel_for(c_values.size(), workers, [&](std::size_t k) {
    VdpParams q = p;
    q.c = c_values[k];
    s.runs[k] = run_vdp(q, out);
  });
  s.decreasing = !c_values.empty();
  for (std::size_t k = 0; k < s.runs.size(); ++k) {
    s.tail_mean_e_hat.push_back(s.runs[k].metrics["tail_mean_e_hat"].get<double>());
    if (k > 0 && !(s.tail_mean_e_hat[k] <= (1.0 - min_drop) * s.tail_mean_e_hat[k - 1]))
      s.decreasing = false;
  }
  return s;
}

// ----------------------------------------------------------------------- ring

nlohmann::json to_json(const RingParams& p) {
  return {{"n_nodes", p.n_nodes}, {"a", p.a},           {"a12", p.a12},
          {"time_varying", p.time_varying}, {"seed", p.seed}, {"horizon", p.horizon},
          {"dt", p.dt},           {"record_stride", p.record_stride},
          {"tail_fraction", p.tail_fraction}, {"tolerance", p.tolerance}, {"epsilon", p.epsilon}};
}

RingParams ring_params_from_json(const nlohmann::json& j) {
  RingParams p;
  p.n_nodes = field_or(j, "n_nodes", p.n_nodes);
  p.a = field_or(j, "a", p.a);
  p.a12 = field_or(j, "a12", p.a12);
  p.time_varying = field_or(j, "time_varying", p.time_varying);
  p.seed = field_or(j, "seed", p.seed);
  p.horizon = field_or(j, "horizon", p.horizon);
  p.dt = field_or(j, "dt", p.dt);
  p.record_stride = field_or(j, "record_stride", p.record_stride);
  p.tail_fraction = field_or(j, "tail_fraction", p.tail_fraction);
  p.tolerance = field_or(j, "tolerance", p.tolerance);
  p.epsilon = field_or(j, "epsilon", p.epsilon);
  return p;
}

namespace {

std::vector<std::size_t> contrarian_targets(std::size_t n) { return {1, 2, n - 2, n - 1}; }

}  // namespace

Matrix ring_matrix(std::size_t n, double a, double a12) {
  if (n < 7) throw ParameterError("the ring example needs N >= 7");
  Matrix m(n, n);
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t off : {1u, 2u}) {
      for (std::size_t j : {(i + off) % n, (i + n - off) % n})
        if (j != 0) m(i, j) = 1.0;
    }
  for (std::size_t i : contrarian_targets(n)) m(i, 0) = -a;
  m(0, 1) = a12;
  return m;
}

AdjacencySchedule ring_schedule(std::size_t n, double a, double a12, bool time_varying,
                                const std::vector<double>& omegas) {
  Matrix base = ring_matrix(n, a, a12);
  if (!time_varying) return constant_schedule(base);
  if (omegas.size() != 4) throw ParameterError("time-varying ring needs four frequencies");
  const auto targets = contrarian_targets(n);
  return functional_schedule(n, [base, targets, omegas](double t, Matrix& out) {
    out = base;
    for (std::size_t k = 0; k < 4; ++k) out(targets[k], 0) = -0.5 + 0.5 * std::sin(omegas[k] * t);
  });
}

RingSymbolic ring_symbolic_certificate(double a, double a12, std::size_t n) {
  if (n < 7) throw ParameterError("the ring example needs N >= 7");
  RingSymbolic s{};
  s.delta12 = -(a12 + 1.5 - a);
  s.delta13 = -(a12 / 2.0 + 1.5 - a);
  s.delta23 = -(2.5 - a);
  s.gamma12 = 2.0 * std::fabs(a12 + 1.5 - a) - 3.0;
  s.gamma13 = 2.0 * std::fabs(a12 / 2.0 + 1.5 - a) - std::fabs(1.0 - a12) - 2.0;
  s.gamma23 = 2.0 * std::fabs(2.5 - a) - 2.0;
  return s;
}

RunReport run_ring_contrarian(const RingParams& p, const OutDir& out) {
  const std::size_t n = p.n_nodes;
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> uw(1.0, 2.0);
  std::vector<double> omegas(4);
  for (double& w : omegas) w = uw(rng);
  const auto x0 = uniform_states(n, -1.0, 1.0, rng);
  std::vector<NodeDynamics> nodes(n, consensus_node());
  NetworkSystem sys(std::move(nodes), ring_schedule(n, p.a, p.a12, p.time_varying, omegas));
  SolverConfig cfg;
  cfg.dt = p.dt;
  cfg.record_stride = p.record_stride;
  const auto traj = integrate(sys, 0.0, x0, p.horizon, cfg);
  const auto errors = pairwise_errors(traj);

  const double rho = rho_from_trajectory(traj);
  const auto bounds = PairBoundSet::constant(n, rho, 0.0, 0.0, true);
  const Horizon grid{0.0, p.horizon, 1e-2};
  const auto cert = check_full_sync(sys, bounds, grid, suggest_bound_M(0.0), p.epsilon);

  RunReport r;
  r.scenario = "ring";
  r.seed = p.seed;
  r.parameters = to_json(p);
  r.parameters["omegas"] = omegas;
  r.certificate = cert.to_json();
  const double tt = tail_start(0.0, p.horizon, p.tail_fraction);
  r.metrics = base_metrics(errors, tt, p.epsilon);
  const double disagreement = r.metrics["tail_max_e_hat"].get<double>();
  r.metrics["tail_max_disagreement"] = disagreement;
  r.predicate = "tail max pairwise |x_i - x_j| < " + format_double(p.tolerance);
  r.passed = disagreement < p.tolerance;
  if (out) write_run_outputs(r, traj, errors, *out, "ring");
  return r;
}

// ----------------------------------------------------------- FitzHugh-Nagumo

nlohmann::json to_json(const FhnParams& p) {
  return {{"n_nodes", p.n_nodes},     {"a_bar", p.a_bar},         {"omega_l", p.omega_l},
          {"omega_k", p.omega_k},     {"seed", p.seed},           {"horizon", p.horizon},
          {"t_connect", p.t_connect}, {"background", p.background}, {"density", p.density},
          {"dt", p.dt},               {"record_stride", p.record_stride}, {"epsilon", p.epsilon}};
}

FhnParams fhn_params_from_json(const nlohmann::json& j) {
  FhnParams p;
  p.n_nodes = field_or(j, "n_nodes", p.n_nodes);
  p.a_bar = field_or(j, "a_bar", p.a_bar);
  p.omega_l = field_or(j, "omega_l", p.omega_l);
  p.omega_k = field_or(j, "omega_k", p.omega_k);
  p.seed = field_or(j, "seed", p.seed);
  p.horizon = field_or(j, "horizon", p.horizon);
  p.t_connect = field_or(j, "t_connect", p.t_connect);
  p.background = field_or(j, "background", p.background);
  p.density = field_or(j, "density", p.density);
  p.dt = field_or(j, "dt", p.dt);
  p.record_stride = field_or(j, "record_stride", p.record_stride);
  p.epsilon = field_or(j, "epsilon", p.epsilon);
  return p;
}

namespace {

struct Window {
  double start;
  double end;
};

// Maximal intervals inside [t0, t1] on which pred holds, found on the
// breakpoint partition (pred is constant between breakpoints).
std::vector<Window> windows_where(const std::vector<double>& cuts,
                                  const std::function<bool(double)>& pred) {
  std::vector<Window> w;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double mid = 0.5 * (cuts[s] + cuts[s + 1]);
    if (!pred(mid)) continue;
    if (!w.empty() && w.back().end == cuts[s])
      w.back().end = cuts[s + 1];
    else
      w.push_back({cuts[s], cuts[s + 1]});
  }
  return w;
}

double mean_cluster_error_in(const Trajectory& tr, std::span<const std::size_t> nodes,
                             const std::vector<Window>& wins) {
  double s = 0.0;
  std::size_t n = 0;
  std::size_t w = 0;
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const double t = tr.times[k];
    while (w < wins.size() && t > wins[w].end) ++w;
    if (w == wins.size()) break;
    const double half = 0.5 * (wins[w].start + wins[w].end);
    if (t < half || t > wins[w].end) continue;
    s += max_pairwise_error(tr.state(k), tr.n_nodes, tr.state_dim, nodes);
    ++n;
  }
  return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

RunReport run_fhn_clusters(const FhnParams& p, const OutDir& out) {
  if (!(p.a_bar > p.background)) throw ParameterError("a_bar must exceed the background weight");
  const std::size_t n = p.n_nodes;
  if (n < 3) throw ParameterError("fhn needs at least three nodes");
  std::mt19937_64 rng(p.seed);
  const Matrix graph = random_connected_binary(n, p.density, rng);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const std::size_t l = pick(rng);
  std::size_t k = pick(rng);
  while (k == l) k = pick(rng);

  const double eps = 0.05;
  std::uniform_real_distribution<double> uc(0.75, 1.0), ua(-0.3, 0.3), ub(0.1, 2.0), ui(0.0, 0.01);
  std::vector<double> cs(n), as(n), bs(n), is(n);
  for (std::size_t i = 0; i < n; ++i) {
    cs[i] = uc(rng);
    as[i] = ua(rng);
    bs[i] = ub(rng);
    is[i] = ui(rng);
  }
  cs[l] = 0.5, is[l] = 0.1, as[l] = 0.3, bs[l] = 1.4;
  cs[k] = 0.75, is[k] = 0.15, as[k] = 0.3, bs[k] = 1.4;
  std::vector<NodeDynamics> nodes;
  for (std::size_t i = 0; i < n; ++i) nodes.push_back(fhn_node(cs[i], is[i], as[i], bs[i], eps));
  const auto x0 = uniform_states(2 * n, -1.0, 1.0, rng);

  // Breakpoints: connection time and every zero of sin(omega_l t), sin(omega_k t).
  std::vector<double> cuts{0.0, p.t_connect};
  for (double w : {p.omega_l, p.omega_k})
    for (double t = std::ceil(p.t_connect * w / std::numbers::pi) * std::numbers::pi / w;
         t < p.horizon; t += std::numbers::pi / w)
      if (t > p.t_connect) cuts.push_back(t);
  cuts.push_back(p.horizon);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto active = [](double w, double t) { return std::sin(w * t) >= 0.0; };
  auto matrix_at = [&](double t) {
    Matrix m(n, n);
    if (t < p.t_connect) return m;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (graph(i, j) == 0.0) continue;
        double w = p.background;
        if (j == l && active(p.omega_l, t)) w = p.a_bar;
        if (j == k && active(p.omega_k, t)) w = p.a_bar;
        m(i, j) = w;
      }
    return m;
  };
  std::vector<Segment> segs;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s)
    segs.push_back({cuts[s], matrix_at(0.5 * (cuts[s] + cuts[s + 1]))});
  NetworkSystem sys(std::move(nodes), build_switching_schedule(n, std::move(segs), Extension::Constant));

  SolverConfig cfg;
  cfg.dt = p.dt;
  cfg.record_stride = p.record_stride;
  const auto traj = integrate(sys, 0.0, x0, p.horizon, cfg);
  const auto errors = pairwise_errors(traj);

  auto cluster_of = [&](std::size_t leader) {
    std::vector<std::size_t> J{leader};
    for (std::size_t i = 0; i < n; ++i)
      if (graph(i, leader) != 0.0) J.push_back(i);
    std::sort(J.begin(), J.end());
    return J;
  };
  const auto J_l = cluster_of(l);
  const auto J_k = cluster_of(k);

  const double rho = rho_from_trajectory(traj);
  PairBoundSet bounds(
      n, rho,
      [=](std::size_t i, std::size_t j, double) {
        return std::max(cs[i], cs[j]) + 0.5 * std::fabs(1.0 - eps) + 0.5;
      },
      [=](std::size_t i, std::size_t j, double) {
        const double d = std::fabs(cs[i] - cs[j]) * rho + std::fabs(is[i] - is[j]) +
                         eps * std::fabs(as[i] - as[j]) + eps * std::fabs(bs[i] - bs[j]) * rho;
        return 0.5 * d * d;
      });

  RunReport r;
  r.scenario = "fhn";
  r.seed = p.seed;
  r.parameters = to_json(p);
  r.parameters["leaders"] = {l + 1, k + 1};
  nlohmann::json metrics;
  nlohmann::json certs = nlohmann::json::object();
  bool passed = true;
  for (int which = 0; which < 2; ++which) {
    const double w_self = which == 0 ? p.omega_l : p.omega_k;
    const double w_other = which == 0 ? p.omega_k : p.omega_l;
    const auto& J = which == 0 ? J_l : J_k;
    const char* name = which == 0 ? "l" : "k";
    const auto in = windows_where(cuts, [&](double t) {
      return t >= p.t_connect && active(w_self, t) && !active(w_other, t);
    });
    const auto outw = windows_where(cuts, [&](double t) { return t >= p.t_connect && !active(w_self, t); });
    nlohmann::json m;
    std::vector<std::size_t> one_based;
    for (auto i : J) one_based.push_back(i + 1);
    m["cluster"] = one_based;
    m["in_window_error"] = nullptr;
    m["out_window_error"] = nullptr;
    m["ratio"] = nullptr;
    if (J.size() < 2 || in.empty() || outw.empty()) {
      passed = false;
      metrics[name] = m;
      continue;
    }
    const double e_in = mean_cluster_error_in(traj, J, in);
    const double e_out = mean_cluster_error_in(traj, J, outw);
    m["in_window_error"] = e_in;
    m["out_window_error"] = e_out;
    m["ratio"] = e_in / e_out;
    if (!(e_in <= 0.1 * e_out)) passed = false;
    metrics[name] = m;

    // Certificate on the longest exclusive window.
    const auto best = *std::max_element(in.begin(), in.end(), [](const Window& a, const Window& b) {
      return a.end - a.start < b.end - b.start;
    });
    if (best.end - best.start >= 1.0) {
      const Horizon grid{best.start, best.end, 1e-2};
      const ClusterSpec spec(J, n);
      const double mu1 = compute_mu1(bounds, J, grid);
      const double mu2 = compute_mu2(sys, spec, rho, grid);
      const double nn = static_cast<double>(J.size());
      const double combined =
          mu1 + mu2 * (static_cast<double>(n) - nn) * std::sqrt(2.0 * nn * (nn - 1.0));
      const auto cert = check_cluster_sync(sys, bounds, spec, grid, suggest_bound_M(combined), p.epsilon);
      certs[name] = cert.to_json();
      certs[name]["assumptions"].push_back("rho estimated from the run (1.5 x max node norm)");
    }
  }
  r.certificate = certs;
  r.metrics = base_metrics(errors, tail_start(0.0, p.horizon, 0.25), p.epsilon);
  r.metrics["leaders"] = metrics;
  r.predicate = "in-window cluster error <= 0.1 x out-window error for both leaders";
  r.passed = passed;
  if (out) write_run_outputs(r, traj, errors, *out, "fhn");
  return r;
}

// ------------------------------------------------------------- Lorenz star

std::string to_string(StarPerturbation p) {
  switch (p) {
    case StarPerturbation::None: return "none";
    case StarPerturbation::Sinusoidal: return "sinusoidal";
    case StarPerturbation::TanhHub: return "tanh";
  }
  return "none";
}

StarPerturbation star_perturbation_from_string(const std::string& s) {
  if (s == "none") return StarPerturbation::None;
  if (s == "sinusoidal") return StarPerturbation::Sinusoidal;
  if (s == "tanh") return StarPerturbation::TanhHub;
  throw ConstructionError("unknown perturbation '" + s + "' (none, sinusoidal, tanh)");
}

std::string to_string(StarCase c) {
  switch (c) {
    case StarCase::FeasibleA: return "feasible-A";
    case StarCase::FeasibleB: return "feasible-B";
    case StarCase::Infeasible: return "infeasible";
  }
  return "infeasible";
}

nlohmann::json to_json(const LorenzParams& p) {
  return {{"n_nodes", p.n_nodes}, {"a", p.a},       {"b", p.b},
          {"c", p.c},             {"heterogeneous", p.heterogeneous},
          {"perturb", to_string(p.perturb)}, {"seed", p.seed}, {"horizon", p.horizon},
          {"t_on", p.t_on},       {"dt", p.dt},     {"record_stride", p.record_stride},
          {"epsilon", p.epsilon}};
}

LorenzParams lorenz_params_from_json(const nlohmann::json& j) {
  LorenzParams p;
  p.n_nodes = field_or(j, "n_nodes", p.n_nodes);
  p.a = field_or(j, "a", p.a);
  p.b = field_or(j, "b", p.b);
  p.c = field_or(j, "c", p.c);
  p.heterogeneous = field_or(j, "heterogeneous", p.heterogeneous);
  p.perturb = star_perturbation_from_string(field_or(j, "perturb", std::string("none")));
  p.seed = field_or(j, "seed", p.seed);
  p.horizon = field_or(j, "horizon", p.horizon);
  p.t_on = field_or(j, "t_on", p.t_on);
  p.dt = field_or(j, "dt", p.dt);
  p.record_stride = field_or(j, "record_stride", p.record_stride);
  p.epsilon = field_or(j, "epsilon", p.epsilon);
  return p;
}

Matrix star_matrix(std::size_t n, double a, double b) {
  if (n < 2) throw ParameterError("a star needs at least two nodes");
  Matrix m(n, n);
  for (std::size_t j = 1; j < n; ++j) {
    m(j, 0) = a;
    m(0, j) = b;
  }
  return m;
}

StarFeasibility star_feasibility(double a, double b, std::size_t n) {
  StarFeasibility f;
  const double nn = static_cast<double>(n);
  f.hub_value = 2.0 * (b + a) + (nn - 2.0) * (b - std::fabs(b));
  if (b < 0.0)
    f.hub_case = a > -b * (nn - 1.0) ? StarCase::FeasibleA : StarCase::Infeasible;
  else
    f.hub_case = a > -b ? StarCase::FeasibleB : StarCase::Infeasible;
  f.satellites_ok = n < 3 || a > 0.0;
  return f;
}

double lorenz_sym_jacobian_max_eig(double x, double y, double z, double sigma, double rho,
                                   double beta) {
  (void)x;
  // Symmetric part of the Jacobian; the x-dependent (2,3) entries cancel.
  const double a11 = -sigma, a22 = -1.0, a33 = -beta;
  const double a12 = 0.5 * (sigma + rho - z), a13 = 0.5 * y, a23 = 0.0;
  const double p1 = a12 * a12 + a13 * a13 + a23 * a23;
  const double q = (a11 + a22 + a33) / 3.0;
  const double p2 = (a11 - q) * (a11 - q) + (a22 - q) * (a22 - q) + (a33 - q) * (a33 - q) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  if (p == 0.0) return q;
  const double b11 = (a11 - q) / p, b22 = (a22 - q) / p, b33 = (a33 - q) / p;
  const double b12 = a12 / p, b13 = a13 / p, b23 = a23 / p;
  const double det = b11 * (b22 * b33 - b23 * b23) - b12 * (b12 * b33 - b23 * b13) +
                     b13 * (b12 * b23 - b22 * b13);
  const double r = std::clamp(det / 2.0, -1.0, 1.0);
  return q + 2.0 * p * std::cos(std::acos(r) / 3.0);
}

RunReport run_lorenz_star(const LorenzParams& p, const OutDir& out) {
  const std::size_t n = p.n_nodes;
  if (n < 3) throw ParameterError("lorenz star needs at least three nodes");
  std::mt19937_64 rng(p.seed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0), uw(std::numbers::pi, 2.0 * std::numbers::pi);
  std::vector<double> sig(n, 10.0), rh(n, 28.0), be(n, 8.0 / 3.0);
  if (p.heterogeneous)
    for (std::size_t i = 1; i < n; ++i) {
      sig[i] += jitter(rng);
      rh[i] += jitter(rng);
      be[i] += jitter(rng);
    }
  std::vector<NodeDynamics> nodes;
  for (std::size_t i = 0; i < n; ++i) nodes.push_back(lorenz_node(sig[i], rh[i], be[i]));
  Matrix omega(n, n);
  for (double& w : omega.data()) w = uw(rng);
  const auto x0 = uniform_states(3 * n, -1.0, 1.0, rng);

  const Matrix base = star_matrix(n, p.a, p.b);
  std::vector<AdjacencySchedule::Piece> pieces;
  pieces.push_back({[n](double, Matrix& m) { m = Matrix(n, n); }, Matrix(n, n)});
  switch (p.perturb) {
    case StarPerturbation::None:
      pieces.push_back({[base](double, Matrix& m) { m = base; }, base});
      break;
    case StarPerturbation::Sinusoidal:
      pieces.push_back({[base, omega](double t, Matrix& m) {
                          m = base;
                          for (std::size_t i = 0; i < m.rows(); ++i)
                            for (std::size_t j = 0; j < m.cols(); ++j)
                              m(i, j) *= 1.0 + 0.1 * std::sin(omega(i, j) * t);
                        },
                        std::nullopt});
      break;
    case StarPerturbation::TanhHub:
      pieces.push_back({[base](double t, Matrix& m) {
                          m = base;
                          const double a = 4.0 + 3.0 * std::tanh((t - 10.0) / 5.0);
                          for (std::size_t j = 1; j < m.rows(); ++j) m(j, 0) = a;
                        },
                        std::nullopt});
      break;
  }
  std::vector<double> bps{0.0, p.t_on};
  if (p.t_on <= 0.0) {
    bps = {0.0};
    pieces.erase(pieces.begin());
  }
  NetworkSystem sys(std::move(nodes),
                    AdjacencySchedule(n, std::move(bps), std::move(pieces), Extension::Constant), p.c);
  SolverConfig cfg;
  cfg.dt = p.dt;
  cfg.record_stride = p.record_stride;
  const auto traj = integrate(sys, 0.0, x0, p.horizon, cfg);
  const auto errors = pairwise_errors(traj);

  // Identical-node one-sided rate estimated along the run.
  double alpha = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < traj.times.size(); ++k)
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = traj.node(k, i);
      alpha = std::max(alpha, lorenz_sym_jacobian_max_eig(v[0], v[1], v[2], sig[i], rh[i], be[i]));
    }
  if (p.heterogeneous) alpha += 0.5;
  const double rho = rho_from_trajectory(traj);
  PairBoundSet bounds(
      n, rho, [alpha](std::size_t, std::size_t, double) { return alpha; },
      [=](std::size_t i, std::size_t j, double) {
        const double d = rho * (2.0 * std::fabs(sig[i] - sig[j]) + std::fabs(rh[i] - rh[j]) +
                                std::fabs(be[i] - be[j]));
        return p.heterogeneous ? 0.5 * d * d : 0.0;
      });
  const double t_cert = std::max(p.t_on, 0.0);
  const Horizon grid{t_cert, p.horizon, 1e-2};
  const double mu1 = compute_mu1(bounds, grid);
  const auto cert = check_full_sync(sys, bounds, grid, suggest_bound_M(mu1), p.epsilon);

  RunReport r;
  r.scenario = "lorenz";
  r.seed = p.seed;
  r.parameters = to_json(p);
  r.certificate = cert.to_json();
  r.certificate["assumptions"].push_back(
      "alpha = max eigenvalue of the symmetric Jacobian along the run: " + format_double(alpha));
  r.certificate["assumptions"].push_back("rho estimated from the run (1.5 x max node norm)");
  if (cert.verdict.holds() && cert.mu1 == 0.0)
    r.certificate["adjacency_margin"] = persistence_margins(cert, rho, n).adjacency_margin;
  const auto feas = star_feasibility(p.a, p.b, n);
  r.metrics = base_metrics(errors, tail_start(0.0, p.horizon, 0.25), p.epsilon);
  r.metrics["star_case"] = to_string(feas.hub_case);
  r.metrics["alpha_estimate"] = alpha;
  try {
    r.metrics["coupling_threshold"] = static_threshold(base, alpha);
  } catch (const HypothesisError& e) {
    r.metrics["coupling_threshold"] = nullptr;
    r.metrics["coupling_threshold_error"] = e.what();
  }
  const double t_mid = std::min(30.0, p.horizon);
  const double early = mean_e_hat(errors, 0.0, std::min(10.0, p.horizon));
  const double late = mean_e_hat(errors, t_mid, p.horizon);
  r.metrics["mean_e_hat_early"] = early;
  r.metrics["mean_e_hat_late"] = late;
  r.metrics["ratio"] = late / early;
  r.predicate = "mean e_hat over [30, horizon] <= 1e-2 x mean e_hat over [0, 10]";
  r.passed = late <= 1e-2 * early;
  if (out) write_run_outputs(r, traj, errors, *out, "lorenz");
  return r;
}

}  // namespace tsync
