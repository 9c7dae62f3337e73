#include "tempsync/integrator.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "tempsync/errors.hpp"
#include "tempsync/kernels.hpp"

namespace tsync {

void SolverConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("solver dt must be positive");
  if (method == Method::Rk45 && !(rtol > 0.0 && atol > 0.0))
    throw ParameterError("rtol and atol must be positive");
  if (record_stride == 0) throw ParameterError("record_stride must be positive");
}

std::string SolverConfig::digest() const {
  std::ostringstream os;
  if (method == Method::Rk4) {
    os << "rk4;dt=" << format_double(dt);
  } else {
    os << "rk45;rtol=" << format_double(rtol) << ";atol=" << format_double(atol)
       << ";h0=" << format_double(dt);
  }
  os << ";stride=" << record_stride;
  return os.str();
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

namespace {

bool all_finite(std::span<const double> y) {
  return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

class Recorder {
 public:
  Recorder(OdeSolution& out, std::size_t stride) : out_(out), stride_(stride) {}
  void push(double t, std::span<const double> y) {
    out_.times.push_back(t);
    out_.states.insert(out_.states.end(), y.begin(), y.end());
  }
  // Records every stride-th step and every forced sample.
  void step(double t, std::span<const double> y, bool force) {
    ++count_;
    if (force || count_ % stride_ == 0) {
      if (out_.times.empty() || t > out_.times.back()) push(t, y);
    }
  }

 private:
  OdeSolution& out_;
  std::size_t stride_;
  std::size_t count_ = 0;
};

struct Rk4Stepper {
  explicit Rk4Stepper(std::size_t n) : k1(n), k2(n), k3(n), k4(n), tmp(n) {}

  void step(const OdeRhs& f, double t, double h, std::vector<double>& y) {
    const auto& K = kernels::active();
    f(t, y, k1);
    tmp = y;
    K.axpy(0.5 * h, k1, tmp);
    f(t + 0.5 * h, tmp, k2);
    tmp = y;
    K.axpy(0.5 * h, k2, tmp);
    f(t + 0.5 * h, tmp, k3);
    tmp = y;
    K.axpy(h, k3, tmp);
    f(t + h, tmp, k4);
    K.axpy(h / 6.0, k1, y);
    K.axpy(h / 3.0, k2, y);
    K.axpy(h / 3.0, k3, y);
    K.axpy(h / 6.0, k4, y);
  }

  std::vector<double> k1, k2, k3, k4, tmp;
};

// Dormand-Prince 5(4) with standard step-size control.
struct Rk45Stepper {
  explicit Rk45Stepper(std::size_t n) : k(7, std::vector<double>(n)), tmp(n), y5(n), err(n) {}

  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  void stage(const std::vector<double>& y, double h, std::initializer_list<std::pair<int, double>> terms) {
    const auto& K = kernels::active();
    tmp = y;
    for (auto [idx, coef] : terms) K.axpy(h * coef, k[idx], tmp);
  }

  // Attempts one step; returns the scaled error norm and leaves the 5th-order
  // candidate in y5.
  double attempt(const OdeRhs& f, double t, double h, const std::vector<double>& y, double rtol,
                 double atol, bool have_k1) {
    const auto& K = kernels::active();
    if (!have_k1) f(t, y, k[0]);
    stage(y, h, {{0, a21}});
    f(t + c2 * h, tmp, k[1]);
    stage(y, h, {{0, a31}, {1, a32}});
    f(t + c3 * h, tmp, k[2]);
    stage(y, h, {{0, a41}, {1, a42}, {2, a43}});
    f(t + c4 * h, tmp, k[3]);
    stage(y, h, {{0, a51}, {1, a52}, {2, a53}, {3, a54}});
    f(t + c5 * h, tmp, k[4]);
    stage(y, h, {{0, a61}, {1, a62}, {2, a63}, {3, a64}, {4, a65}});
    f(t + h, tmp, k[5]);
    y5 = y;
    K.axpy(h * b1, k[0], y5);
    K.axpy(h * b3, k[2], y5);
    K.axpy(h * b4, k[3], y5);
    K.axpy(h * b5, k[4], y5);
    K.axpy(h * b6, k[5], y5);
    f(t + h, y5, k[6]);
    std::fill(err.begin(), err.end(), 0.0);
    K.axpy(h * e1, k[0], err);
    K.axpy(h * e3, k[2], err);
    K.axpy(h * e4, k[3], err);
    K.axpy(h * e5, k[4], err);
    K.axpy(h * e6, k[5], err);
    K.axpy(h * e7, k[6], err);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double sc = atol + rtol * std::max(std::fabs(y[i]), std::fabs(y5[i]));
      const double r = err[i] / sc;
      acc += r * r;
    }
    return y.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(y.size()));
  }

  std::vector<std::vector<double>> k;
  std::vector<double> tmp, y5, err;
};

}  // namespace

OdeSolution solve_ode(const OdeRhs& rhs, std::span<const double> y0, double t0, double t_end,
                      std::span<const double> breaks, const SolverConfig& cfg) {
  cfg.validate();
  if (!(t_end > t0)) throw ParameterError("t_end must exceed t0");
  if (!all_finite(y0)) throw ParameterError("initial state must be finite");

  std::vector<double> marks{t0};
  for (double b : breaks)
    if (b > t0 && b < t_end) marks.push_back(b);
  marks.push_back(t_end);
  std::sort(marks.begin(), marks.end());
  marks.erase(std::unique(marks.begin(), marks.end()), marks.end());

  OdeSolution out;
  out.dim = y0.size();
  std::vector<double> y(y0.begin(), y0.end());
  Recorder rec(out, cfg.record_stride);
  rec.push(t0, y);

  if (cfg.method == Method::Rk4) {
    Rk4Stepper st(y.size());
    for (std::size_t s = 0; s + 1 < marks.size(); ++s) {
      const double a = marks[s];
      const double b = marks[s + 1];
      const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil((b - a) / cfg.dt - 1e-9)));
      const double h = (b - a) / static_cast<double>(n);
      for (std::size_t k = 0; k < n; ++k) {
        const double t = a + static_cast<double>(k) * h;
        const double t_next = (k + 1 == n) ? b : a + static_cast<double>(k + 1) * h;
        st.step(rhs, t, t_next - t, y);
        if (!all_finite(y))
          throw IntegrationError("non-finite state after step from t=" + format_double(t), t);
        rec.step(t_next, y, k + 1 == n);
      }
    }
  } else {
    Rk45Stepper st(y.size());
    double h = std::min(cfg.dt, cfg.max_dt);
    for (std::size_t s = 0; s + 1 < marks.size(); ++s) {
      const double a = marks[s];
      const double b = marks[s + 1];
      double t = a;
      bool have_k1 = false;
      while (t < b) {
        bool last = false;
        double step = std::min(h, cfg.max_dt);
        if (t + step >= b || b - (t + step) < 1e-12 * std::max(1.0, std::fabs(b))) {
          step = b - t;
          last = true;
        }
        const double e = st.attempt(rhs, t, step, y, cfg.rtol, cfg.atol, have_k1);
        const bool finite = all_finite(st.y5) && std::isfinite(e);
        if (finite && e <= 1.0) {
          t = last ? b : t + step;
          y = st.y5;
          st.k[0] = st.k[6];
          have_k1 = true;
          rec.step(t, y, last);
          const double fac = e == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(e, -0.2), 0.2, 5.0);
          if (!last || fac < 1.0) h = step * fac;
        } else {
          const double fac = finite ? std::clamp(0.9 * std::pow(e, -0.25), 0.1, 0.5) : 0.1;
          h = step * fac;
          have_k1 = true;
          if (h < cfg.min_dt)
            throw IntegrationError("step size underflow at t=" + format_double(t), t);
        }
      }
    }
  }
  if (out.times.back() < t_end) rec.push(t_end, y);
  return out;
}

CoupledRhs::CoupledRhs(const NetworkSystem& system)
    : sys_(system),
      a_(system.n_nodes(), system.n_nodes()),
      comp_(system.n_nodes() * system.state_dim()) {}

void CoupledRhs::operator()(double t, std::span<const double> x, std::span<double> dx) {
  const std::size_t n = sys_.n_nodes();
  const std::size_t m = sys_.state_dim();
  for (std::size_t i = 0; i < n; ++i) {
    sys_.nodes[i].rhs(t, x.subspan(i * m, m), dx.subspan(i * m, m));
    for (std::size_t d = 0; d < m; ++d)
      if (!std::isfinite(dx[i * m + d]))
        throw NumericError("node " + std::to_string(i + 1) + " vector field is non-finite at t=" +
                               format_double(t),
                           t, i);
  }
  const double c = sys_.global_coupling;
  if (c == 0.0) return;
  sys_.schedule.sample_into(t, a_);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t d = 0; d < m; ++d) comp_[d * n + k] = x[k * m + d];
  const auto& K = kernels::active();
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = a_.row(i);
    double rowsum = 0.0;
    for (double v : row) rowsum += v;
    for (std::size_t d = 0; d < m; ++d) {
      const std::span<const double> comp(comp_.data() + d * n, n);
      dx[i * m + d] += c * (K.dot(row, comp) - rowsum * x[i * m + d]);
    }
  }
}

std::vector<double> coupled_rhs(const NetworkSystem& system, double t, std::span<const double> x) {
  if (x.size() != system.n_nodes() * system.state_dim())
    throw ParameterError("state vector has the wrong length");
  std::vector<double> dx(x.size());
  CoupledRhs f(system);
  f(t, x, dx);
  return dx;
}

Trajectory integrate(const NetworkSystem& system, double t0, std::span<const double> x0,
                     double t_end, const SolverConfig& cfg) {
  const std::size_t width = system.n_nodes() * system.state_dim();
  if (x0.size() != width) throw ParameterError("initial state has the wrong length");
  CoupledRhs f(system);
  const auto breaks = system.schedule.switch_times(t0, t_end);
  OdeSolution sol = solve_ode(
      [&f](double t, std::span<const double> y, std::span<double> dy) { f(t, y, dy); }, x0, t0,
      t_end, breaks, cfg);
  Trajectory tr;
  tr.n_nodes = system.n_nodes();
  tr.state_dim = system.state_dim();
  tr.times = std::move(sol.times);
  tr.states = std::move(sol.states);
  tr.provenance = {t0, std::vector<double>(x0.begin(), x0.end()), cfg.digest()};
  return tr;
}

double max_pairwise_error(std::span<const double> state, std::size_t n_nodes,
                          std::size_t state_dim, std::span<const std::size_t> nodes) {
  const auto& K = kernels::active();
  std::vector<double> comp;
  comp.reserve(n_nodes);
  double acc = 0.0;
  for (std::size_t d = 0; d < state_dim; ++d) {
    comp.clear();
    if (nodes.empty()) {
      for (std::size_t i = 0; i < n_nodes; ++i) comp.push_back(state[i * state_dim + d]);
    } else {
      for (std::size_t i : nodes) comp.push_back(state[i * state_dim + d]);
    }
    if (comp.empty()) continue;
    const auto mm = K.minmax(comp);
    const double e = mm.max - mm.min;
    acc += e * e;
  }
  return std::sqrt(acc);
}

ErrorSeries pairwise_errors(const Trajectory& traj) {
  if (traj.times.empty()) throw ParameterError("trajectory is empty");
  const auto& K = kernels::active();
  const std::size_t n = traj.n_nodes;
  const std::size_t m = traj.state_dim;
  ErrorSeries es;
  es.n_nodes = n;
  es.times = traj.times;
  es.xi.reserve(traj.times.size() * pair_count(n));
  es.e_hat.reserve(traj.times.size());
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        es.xi.push_back(K.sq_dist(traj.node(k, i), traj.node(k, j)));
    es.e_hat.push_back(max_pairwise_error(traj.state(k), n, m));
  }
  return es;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t";
  for (std::size_t i = 0; i < traj.n_nodes; ++i)
    for (std::size_t d = 0; d < traj.state_dim; ++d) os << ",x_" << i + 1 << '_' << d + 1;
  os << '\n';
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    os << format_double(traj.times[k]);
    for (double v : traj.state(k)) os << ',' << format_double(v);
    os << '\n';
  }
}

void write_error_csv(std::ostream& os, const ErrorSeries& errors) {
  os << "t";
  for (std::size_t i = 0; i < errors.n_nodes; ++i)
    for (std::size_t j = i + 1; j < errors.n_nodes; ++j) os << ",xi_" << i + 1 << '_' << j + 1;
  os << ",e_hat\n";
  for (std::size_t k = 0; k < errors.times.size(); ++k) {
    os << format_double(errors.times[k]);
    for (double v : errors.xi_at(k)) os << ',' << format_double(v);
    os << ',' << format_double(errors.e_hat[k]) << '\n';
  }
}

}  // namespace tsync
