#include "tempsync/attractor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "tempsync/errors.hpp"

namespace tsync {

DissipativityData dissipativity_from_onesided(ScalarFn l, ScalarFn f_at_zero_sq, double K,
                                              double gamma, double eps) {
  if (!(gamma > 0.0)) throw ParameterError("gamma must be positive");
  if (!(K >= 1.0)) throw ParameterError("K must be >= 1");
  if (!(eps > 0.0 && eps < gamma / 2.0))
    throw ParameterError("eps must lie in (0, gamma/2), got " + format_double(eps));
  DissipativityData d;
  d.l = l;
  d.K = K;
  d.gamma = gamma;
  d.alpha = [l, eps](double t) { return 2.0 * eps + l(t); };
  d.beta_diss = [f_at_zero_sq, eps](double t) { return 2.0 / eps * f_at_zero_sq(t); };
  d.gamma_bar_diss = gamma - 2.0 * eps;
  return d;
}

EnvelopeFit fit_sl2_envelope(const ScalarFn& l, const Horizon& grid) {
  const auto pts = grid.points();
  std::vector<double> integral(pts.size(), 0.0);
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const double a = pts[k - 1];
    const double b = pts[k];
    integral[k] = integral[k - 1] + (b - a) / 6.0 * (l(a) + 4.0 * l(0.5 * (a + b)) + l(b));
  }
  // Ordinary least squares for integral ~ c0 + c1 (t - t0).
  const double n = static_cast<double>(pts.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double x = pts[k] - grid.t0;
    sx += x;
    sy += integral[k];
    sxx += x * x;
    sxy += x * integral[k];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;

  EnvelopeFit fit;
  fit.gamma = -slope;
  fit.K = std::max(1.0, std::exp(intercept)) * 1.01;
  if (!(fit.gamma > 0.0)) return fit;

  double running_min = std::numeric_limits<double>::infinity();
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double g = integral[k] + fit.gamma * (pts[k] - grid.t0);
    running_min = std::min(running_min, g);
    worst = std::max(worst, g - running_min);
  }
  fit.required_log_K = worst;
  fit.certified = worst <= std::log(fit.K);
  return fit;
}

PullbackResult pullback_trajectory(const OdeRhs& rhs, double t, double s_max,
                                   std::span<const double> x0, const SolverConfig& cfg,
                                   double tol) {
  if (!(s_max > 0.0)) throw ParameterError("pullback depth must be positive");
  PullbackResult r;
  std::vector<double> prev;
  for (double s = std::min(1.0, s_max);; s = std::min(2.0 * s, s_max)) {
    const auto sol = solve_ode(rhs, x0, t - s, t, {}, cfg);
    const auto end = sol.back();
    std::vector<double> cur(end.begin(), end.end());
    r.depth = s;
    if (!prev.empty()) {
      double gap = 0.0;
      for (std::size_t d = 0; d < cur.size(); ++d) gap = std::max(gap, std::fabs(cur[d] - prev[d]));
      r.gap = gap;
      if (gap < tol) {
        r.converged = true;
        r.estimate = std::move(cur);
        return r;
      }
    } else {
      r.gap = std::numeric_limits<double>::infinity();
    }
    prev = std::move(cur);
    if (s >= s_max) break;
  }
  r.estimate = std::move(prev);
  return r;
}

double ultimate_bound(double K, double gamma_bar, double mu) {
  if (!(gamma_bar > 0.0)) throw ParameterError("gamma_bar must be positive");
  if (!(K >= 1.0)) throw ParameterError("K must be >= 1");
  if (!(mu >= 0.0)) throw ParameterError("mu must be nonnegative");
  return K * mu / -std::expm1(-gamma_bar);
}

nlohmann::json CoupledComparison::to_json() const {
  return {{"gamma", gamma}, {"verdict", verdict}, {"nodes", nodes}, {"grid", grid.to_json()}};
}

CoupledComparison coupled_comparison_check(const NetworkSystem& system, std::vector<ScalarFn> l,
                                           const Horizon& grid) {
  const std::size_t n = system.n_nodes();
  if (l.size() != n) throw ParameterError("one rate per node is required");
  const double c = system.global_coupling;
  Matrix a(n, n);
  double gamma = std::numeric_limits<double>::infinity();
  double sup_l = -std::numeric_limits<double>::infinity();
  for (double t : grid.points()) {
    system.schedule.sample_into(t, a);
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (a(i, k) < 0.0)
          throw HypothesisError("negative weight a(" + std::to_string(i + 1) + "," +
                                std::to_string(k + 1) + ") at t=" + format_double(t));
        row += a(i, k);
      }
      const double li = l[i](t);
      sup_l = std::max(sup_l, li);
      gamma = std::min(gamma, std::fabs(li) - 2.0 * c * row);
    }
  }
  CoupledComparison out;
  out.gamma = gamma;
  out.sup_l = sup_l;
  out.verdict = sup_l < 0.0 && gamma > 0.0;
  out.nodes = n;
  out.grid = grid;
  auto rates = std::make_shared<std::vector<ScalarFn>>(std::move(l));
  const AdjacencySchedule* sched = &system.schedule;
  out.matrix = [rates, sched, c, n](double t) {
    Matrix m = sched->sample(t);
    for (double& v : m.data()) v *= 2.0 * c;
    for (std::size_t i = 0; i < n; ++i) m(i, i) = (*rates)[i](t);
    return m;
  };
  return out;
}

}  // namespace tsync
