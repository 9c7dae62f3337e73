#include "tempsync/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "tempsync/attractor.hpp"
#include "tempsync/certificates.hpp"
#include "tempsync/errors.hpp"
#include "tempsync/integrator.hpp"
#include "tempsync/parallel.hpp"
#include "tempsync/scenarios.hpp"

namespace tsync {

namespace {

using nlohmann::json;

// Raised for schema problems; carries the offending field.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("config " + path.string() + " is not valid JSON: " + e.what());
  }
}

template <class T>
T get_field(const json& j, const std::string& path, const std::string& key) {
  if (!j.contains(key)) throw SchemaError("missing field '" + path + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError("field '" + path + key + "' has the wrong type");
  }
}

template <class T>
T get_or(const json& j, const std::string& path, const std::string& key, T fallback) {
  return j.contains(key) ? get_field<T>(j, path, key) : fallback;
}

void write_json(const std::filesystem::path& p, const json& j) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << j.dump(2) << '\n';
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

NodeDynamics node_from_json(const json& j) {
  const auto model = get_field<std::string>(j, "nodes.", "model");
  if (model == "consensus") return consensus_node();
  if (model == "linear")
    return linear_node(get_or(j, "nodes.", "lambda", -1.0), get_or(j, "nodes.", "amp", 0.0),
                       get_or(j, "nodes.", "omega", 1.0));
  if (model == "lorenz")
    return lorenz_node(get_or(j, "nodes.", "sigma", 10.0), get_or(j, "nodes.", "rho", 28.0),
                       get_or(j, "nodes.", "beta", 8.0 / 3.0));
  if (model == "fhn")
    return fhn_node(get_or(j, "nodes.", "c", 0.75), get_or(j, "nodes.", "I", 0.0),
                    get_or(j, "nodes.", "a", 0.3), get_or(j, "nodes.", "b", 1.4),
                    get_or(j, "nodes.", "eps", 0.05));
  if (model == "vdp")
    return vdp_node(get_or(j, "nodes.", "b", 0.75), get_or(j, "nodes.", "eps0", 0.1),
                    get_or(j, "nodes.", "omega", 1.5));
  throw SchemaError("field 'nodes.model': unknown model '" + model + "'");
}

AdjacencySchedule schedule_from_config(const json& net) {
  const auto type = get_field<std::string>(net, "network.", "type");
  if (type == "schedule") {
    try {
      return schedule_from_json(get_field<json>(net, "network.", "schedule"));
    } catch (const ConstructionError& e) {
      throw SchemaError(std::string("field 'network.schedule': ") + e.what());
    }
  }
  const auto n = get_field<std::size_t>(net, "network.", "n");
  if (type == "ring")
    return constant_schedule(ring_matrix(n, get_field<double>(net, "network.", "a"),
                                         get_field<double>(net, "network.", "a12")));
  if (type == "star")
    return constant_schedule(
        star_matrix(n, get_field<double>(net, "network.", "a"), get_field<double>(net, "network.", "b")));
  if (type == "complete") {
    Matrix m(n, n, get_or(net, "network.", "weight", 1.0));
    return constant_schedule(m);
  }
  throw SchemaError("field 'network.type': unknown type '" + type + "'");
}

struct NetworkSetup {
  NetworkSystem system;
  NodeDynamics node;
  double t0;
  double t_end;
  SolverConfig solver;
  std::vector<double> x0;
};

NetworkSetup network_from_config(const json& j, const CliConfig& cli) {
  const auto net = get_field<json>(j, "", "network");
  auto schedule = schedule_from_config(net);
  const std::size_t n = schedule.n_nodes();
  const auto node = node_from_json(get_field<json>(j, "", "nodes"));
  const double c = cli.c.value_or(get_or(j, "", "c", 1.0));
  NetworkSystem sys(std::vector<NodeDynamics>(n, node), std::move(schedule), c);

  SolverConfig solver;
  solver.dt = cli.dt.value_or(get_or(j, "", "dt", 1e-3));
  const auto method = get_or<std::string>(j, "", "method", "rk4");
  if (method == "rk45")
    solver.method = Method::Rk45;
  else if (method != "rk4")
    throw SchemaError("field 'method' must be rk4 or rk45");
  solver.record_stride = get_or<std::size_t>(j, "", "record_stride", 1);
  const double t0 = get_or(j, "", "t0", 0.0);
  const double t_end = cli.t_end.value_or(get_or(j, "", "t_end", 10.0));

  std::vector<double> x0;
  const std::size_t width = n * node.state_dim;
  if (j.contains("x0")) {
    x0 = get_field<std::vector<double>>(j, "", "x0");
    if (x0.size() != width)
      throw SchemaError("field 'x0' needs " + std::to_string(width) + " entries");
  } else {
    const auto range = get_or<std::vector<double>>(j, "", "x0_range", {-1.0, 1.0});
    if (range.size() != 2) throw SchemaError("field 'x0_range' needs two entries");
    std::mt19937_64 rng(cli.seed.value_or(get_or<std::uint64_t>(j, "", "seed", 0)));
    std::uniform_real_distribution<double> u(range[0], range[1]);
    x0.resize(width);
    for (double& v : x0) v = u(rng);
  }
  return {std::move(sys), node, t0, t_end, solver, std::move(x0)};
}

PairBoundSet bounds_from_config(const json& j, const NetworkSetup& s) {
  const auto b = get_or<json>(j, "", "bounds", json::object());
  const std::size_t n = s.system.n_nodes();
  double rho = 0.0;
  if (b.contains("rho")) {
    rho = get_field<double>(b, "bounds.", "rho");
  } else {
    const double burn = get_or(b, "bounds.", "burn_in", s.t_end - s.t0);
    rho = estimate_rho(s.system, s.t0, s.x0, burn, s.solver);
  }
  const bool global = get_or(b, "bounds.", "global", false);
  if (b.contains("alpha"))
    return PairBoundSet::constant(n, rho, get_field<double>(b, "bounds.", "alpha"),
                                  get_or(b, "bounds.", "beta", 0.0), global);
  if (s.node.lipschitz_bound)
    return pair_bounds_for_identical_nodes(n, rho, s.node.lipschitz_bound, global);
  throw SchemaError("missing field 'bounds.alpha' (node model has no Lipschitz bound)");
}

json failure_detail(const Verdict& v) {
  if (v.holds()) return nullptr;
  return {{"condition", v.condition}, {"description", v.describe()}};
}

int cmd_simulate(const json& j, const CliConfig& cli, std::ostream& out) {
  auto s = network_from_config(j, cli);
  const auto traj = integrate(s.system, s.t0, s.x0, s.t_end, s.solver);
  const auto errors = pairwise_errors(traj);
  {
    auto os = open_out(cli.out_dir / "trajectory.csv");
    write_trajectory_csv(os, traj);
  }
  {
    auto os = open_out(cli.out_dir / "errors.csv");
    write_error_csv(os, errors);
  }
  json report{{"command", "simulate"},
              {"samples", traj.times.size()},
              {"final_e_hat", errors.e_hat.back()},
              {"solver", traj.provenance.config_digest},
              {"trajectory_csv", (cli.out_dir / "trajectory.csv").string()},
              {"error_csv", (cli.out_dir / "errors.csv").string()}};
  write_json(cli.out_dir / "report.json", report);
  out << "simulated " << traj.times.size() << " samples, final e_hat "
      << format_double(errors.e_hat.back()) << '\n';
  return kExitOk;
}

struct CertInputs {
  Horizon grid;
  double epsilon;
  std::optional<double> bound_M;
};

CertInputs cert_inputs(const json& j, const CliConfig& cli, const NetworkSetup& s) {
  const auto c = get_or<json>(j, "", "certificate", json::object());
  CertInputs in;
  in.grid = {s.t0, s.t_end, get_or(c, "certificate.", "grid_step", 1e-2)};
  in.epsilon = cli.epsilon.value_or(get_or(c, "certificate.", "epsilon", 0.1));
  if (cli.bound_M)
    in.bound_M = cli.bound_M;
  else if (c.contains("bound_M"))
    in.bound_M = get_field<double>(c, "certificate.", "bound_M");
  return in;
}

int cmd_certify(const json& j, const CliConfig& cli, std::ostream& out) {
  auto s = network_from_config(j, cli);
  const auto bounds = bounds_from_config(j, s);
  const auto in = cert_inputs(j, cli, s);
  const double M = in.bound_M.value_or(suggest_bound_M(compute_mu1(bounds, in.grid)));
  const auto cert = check_full_sync(s.system, bounds, in.grid, M, in.epsilon);
  write_json(cli.out_dir / "certificate.json", cert.to_json());
  json report{{"command", "certify"},
              {"verdict", cert.verdict.holds() ? "holds" : "fails"},
              {"failure", failure_detail(cert.verdict)},
              {"certificate_json", (cli.out_dir / "certificate.json").string()}};
  write_json(cli.out_dir / "report.json", report);
  out << "certificate " << cert.verdict.describe() << '\n';
  return cert.verdict.holds() ? kExitOk : kExitFails;
}

int cmd_cluster_certify(const json& j, const CliConfig& cli, std::ostream& out) {
  auto s = network_from_config(j, cli);
  const auto bounds = bounds_from_config(j, s);
  const auto in = cert_inputs(j, cli, s);
  auto one_based = get_field<std::vector<std::size_t>>(j, "", "cluster");
  std::vector<std::size_t> idx;
  for (auto i : one_based) {
    if (i == 0) throw SchemaError("field 'cluster' uses 1-based node indices");
    idx.push_back(i - 1);
  }
  std::sort(idx.begin(), idx.end());
  const ClusterSpec spec(idx, s.system.n_nodes());
  double M = 0.0;
  if (in.bound_M) {
    M = *in.bound_M;
  } else {
    const double nn = static_cast<double>(idx.size());
    const double combined = compute_mu1(bounds, idx, in.grid) +
                            compute_mu2(s.system, spec, bounds.rho(), in.grid) *
                                (static_cast<double>(s.system.n_nodes()) - nn) *
                                std::sqrt(2.0 * nn * (nn - 1.0));
    M = suggest_bound_M(combined);
  }
  const auto cert = check_cluster_sync(s.system, bounds, spec, in.grid, M, in.epsilon);
  write_json(cli.out_dir / "certificate.json", cert.to_json());
  json report{{"command", "cluster-certify"},
              {"verdict", cert.verdict.holds() ? "holds" : "fails"},
              {"failure", failure_detail(cert.verdict)},
              {"certificate_json", (cli.out_dir / "certificate.json").string()}};
  write_json(cli.out_dir / "report.json", report);
  out << "cluster certificate " << cert.verdict.describe() << '\n';
  return cert.verdict.holds() ? kExitOk : kExitFails;
}

int cmd_threshold(const json& j, const CliConfig& cli, std::ostream& out) {
  const auto schedule = schedule_from_config(get_field<json>(j, "", "network"));
  const auto th = get_or<json>(j, "", "threshold", json::object());
  const double l_rho = get_field<double>(th, "threshold.", "l_rho");
  const Matrix a = schedule.sample(get_or(j, "", "t0", 0.0));
  json report{{"command", "threshold"}, {"l_rho", l_rho}};
  try {
    const double c_bar = static_threshold(a, l_rho, 1e-12);
    report["feasible"] = true;
    report["c_bar"] = c_bar;
    report["failure"] = nullptr;
    write_json(cli.out_dir / "report.json", report);
    out << "c_bar = " << format_double(c_bar) << '\n';
    return kExitOk;
  } catch (const HypothesisError& e) {
    report["feasible"] = false;
    report["c_bar"] = nullptr;
    report["failure"] = e.what();
    write_json(cli.out_dir / "report.json", report);
    out << "infeasible: " << e.what() << '\n';
    return kExitFails;
  }
}

int cmd_scenario(const json& j, const CliConfig& cli, std::ostream& out) {
  const std::string& name = cli.scenario_name;
  json cfg = j;
  if (cli.seed) cfg["seed"] = *cli.seed;
  if (cli.t_end) cfg["horizon"] = *cli.t_end;
  if (cli.dt) cfg["dt"] = *cli.dt;
  if (cli.c) cfg["c"] = *cli.c;
  if (cli.epsilon) cfg["epsilon"] = *cli.epsilon;
  const std::size_t workers = resolve_workers(cli.workers);
  json report;
  bool passed = false;
  try {
    if (name == "vdp") {
      const auto p = vdp_params_from_json(cfg);
      if (cfg.contains("c_values") && !cli.c) {
        const auto cs = get_field<std::vector<double>>(cfg, "", "c_values");
        const auto sweep = run_vdp_sweep(p, cs, workers, 0.2, cli.out_dir);
        report["scenario"] = "vdp-sweep";
        report["c_values"] = cs;
        report["tail_mean_e_hat"] = sweep.tail_mean_e_hat;
        report["runs"] = json::array();
        for (const auto& r : sweep.runs) report["runs"].push_back(r.to_json());
        report["predicate"] = "tail mean e_hat drops by >= 20% at each larger c";
        report["passed"] = sweep.decreasing;
        passed = sweep.decreasing;
      } else {
        const auto r = run_vdp(p, cli.out_dir);
        report = r.to_json();
        passed = r.passed;
      }
    } else if (name == "ring") {
      const auto r = run_ring_contrarian(ring_params_from_json(cfg), cli.out_dir);
      report = r.to_json();
      passed = r.passed;
    } else if (name == "fhn") {
      const auto r = run_fhn_clusters(fhn_params_from_json(cfg), cli.out_dir);
      report = r.to_json();
      passed = r.passed;
    } else if (name == "lorenz") {
      const auto r = run_lorenz_star(lorenz_params_from_json(cfg), cli.out_dir);
      report = r.to_json();
      passed = r.passed;
    } else {
      throw SchemaError("unknown scenario '" + name + "' (vdp, ring, fhn, lorenz)");
    }
  } catch (const ConstructionError& e) {
    throw SchemaError(e.what());
  }
  write_json(cli.out_dir / "report.json", report);
  out << "scenario " << name << ": " << (passed ? "passed" : "failed") << '\n';
  return passed ? kExitOk : kExitFails;
}

int cmd_pullback(const json& j, const CliConfig& cli, std::ostream& out) {
  const double lambda = get_or(j, "", "lambda", -1.0);
  const double amp = get_or(j, "", "amp", 1.0);
  const double omega = get_or(j, "", "omega", 1.0);
  const double s_max = get_or(j, "", "s_max", 64.0);
  const double tol = get_or(j, "", "tolerance", 1e-6);
  if (!(lambda < 0.0)) throw SchemaError("field 'lambda' must be negative");
  auto times = get_or<std::vector<double>>(j, "", "times", {0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0});
  SolverConfig cfg;
  cfg.dt = cli.dt.value_or(get_or(j, "", "dt", 1e-3));
  const OdeRhs rhs = [=](double t, std::span<const double> x, std::span<double> dx) {
    dx[0] = lambda * x[0] + amp * std::sin(omega * t);
  };
  const double den = omega * omega + lambda * lambda;
  json rows = json::array();
  bool ok = true;
  for (double t : times) {
    const auto pb = pullback_trajectory(rhs, t, s_max, std::vector<double>{0.0}, cfg);
    const double exact = -amp * lambda / den * std::sin(omega * t) - amp * omega / den * std::cos(omega * t);
    const double err = std::fabs(pb.estimate[0] - exact);
    ok = ok && err <= tol;
    rows.push_back({{"t", t}, {"estimate", pb.estimate[0]}, {"exact", exact}, {"error", err},
                    {"gap", pb.gap}, {"depth", pb.depth}, {"converged", pb.converged}});
  }
  json report{{"command", "pullback-check"}, {"tolerance", tol}, {"points", rows}, {"passed", ok}};
  write_json(cli.out_dir / "report.json", report);
  out << "pullback check " << (ok ? "passed" : "failed") << '\n';
  return ok ? kExitOk : kExitFails;
}

}  // namespace

int dispatch(const CliConfig& cli, std::ostream& out, std::ostream& err) {
  try {
    if (cli.config_path.empty()) throw SchemaError("--config is required");
    if (!std::filesystem::exists(cli.config_path)) {
      err << "error: config file not found: " << cli.config_path.string() << '\n';
      return kExitUsage;
    }
    const json j = load_config(cli.config_path);
    std::filesystem::create_directories(cli.out_dir);
    if (cli.command == "simulate") return cmd_simulate(j, cli, out);
    if (cli.command == "certify") return cmd_certify(j, cli, out);
    if (cli.command == "cluster-certify") return cmd_cluster_certify(j, cli, out);
    if (cli.command == "threshold") return cmd_threshold(j, cli, out);
    if (cli.command == "scenario") return cmd_scenario(j, cli, out);
    if (cli.command == "pullback-check") return cmd_pullback(j, cli, out);
    err << "error: unknown command '" << cli.command << "'\n";
    return kExitUsage;
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << '\n';
  } catch (const ConstructionError& e) {
    err << "error: invalid input: " << e.what() << '\n';
  } catch (const ParameterError& e) {
    err << "error: invalid parameter: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return kExitUsage;
}

}  // namespace tsync
