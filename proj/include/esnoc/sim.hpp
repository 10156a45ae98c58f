#pragma once

// Fixed-step closed-loop simulation and tracking metrics.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "esnoc/control.hpp"
#include "esnoc/errors.hpp"
#include "esnoc/model.hpp"
#include "esnoc/synth.hpp"

namespace esnoc {

namespace detail {
inline void require_finite(std::span<const double> v, const char* what, double t, std::span<const double> x) {
  for (double e : v)
    if (!std::isfinite(e)) throw NumericalBlowup(what, t, {x.begin(), x.end()});
}
}  // namespace detail

/// Classical fourth-order Runge-Kutta step; rhs(t, x) returns dx/dt.
template <class Rhs>
std::vector<double> rk4_step(Rhs&& rhs, double t, std::span<const double> x, double dt) {
  if (!(dt > 0.0)) throw PreconditionError("rk4_step: dt must be positive");
  const std::size_t m = x.size();
  std::vector<double> tmp(m), out(x.begin(), x.end());
  auto stage = [&](double ts, const std::vector<double>& k, double scale) {
    for (std::size_t i = 0; i < m; ++i) tmp[i] = x[i] + scale * k[i];
    return rhs(ts, std::span<const double>(tmp));
  };
  const std::vector<double> k1 = rhs(t, x);
  detail::require_finite(k1, "rk4_step: non-finite stage", t, x);
  const std::vector<double> k2 = stage(t + 0.5 * dt, k1, 0.5 * dt);
  detail::require_finite(k2, "rk4_step: non-finite stage", t, x);
  const std::vector<double> k3 = stage(t + 0.5 * dt, k2, 0.5 * dt);
  detail::require_finite(k3, "rk4_step: non-finite stage", t, x);
  const std::vector<double> k4 = stage(t + dt, k3, dt);
  detail::require_finite(k4, "rk4_step: non-finite stage", t, x);
  for (std::size_t i = 0; i < m; ++i) out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  detail::require_finite(out, "rk4_step: non-finite state", t + dt, x);
  return out;
}

enum class ControllerKind { es, nussbaum, nominal, safety_filter };

inline const char* to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::es: return "es";
    case ControllerKind::nussbaum: return "nussbaum";
    case ControllerKind::nominal: return "nominal";
    case ControllerKind::safety_filter: return "safety-filter";
  }
  return "?";
}

inline ControllerKind controller_from_string(const std::string& s) {
  if (s == "es") return ControllerKind::es;
  if (s == "nussbaum") return ControllerKind::nussbaum;
  if (s == "nominal") return ControllerKind::nominal;
  if (s == "safety-filter") return ControllerKind::safety_filter;
  throw ConfigError("unknown controller '" + s + "'");
}

struct ControllerConfig {
  ControllerKind kind = ControllerKind::es;
  GainConfig gains = default_gains();
  std::optional<PsiBound> psi_bound;  // built-in example bound when empty
  double theta0 = 0.0;
  double hysteresis = 0.0;
  Reference nominal_reference = constant_reference(0.0);  // regulation task of the safety filter

  bool dithered() const { return kind == ControllerKind::es || kind == ControllerKind::safety_filter; }
};

/// Closed loop x' = f(x) + g(x) u(t, x[, theta]) for one controller. Mutable
/// controller state (safety switch) is owned by the caller's run.
class ClosedLoop {
 public:
  ClosedLoop(const SystemModel& sys, const ControllerConfig& cfg, const Reference& reference)
      : sys_(sys), cfg_(cfg), reference_(reference) {
    sys_.validate();
    if (cfg_.dithered()) {
      const PsiBound bound = cfg_.psi_bound ? *cfg_.psi_bound : default_psi_bound(sys_, cfg_.gains, reference_);
      lyapunov_.emplace(make_lyapunov(bound, cfg_.gains));
    }
  }

  int state_size() const { return sys_.n + (cfg_.kind == ControllerKind::nussbaum ? 1 : 0); }

  std::vector<double> initial_state(std::span<const double> x0) const {
    std::vector<double> z(x0.begin(), x0.end());
    if (cfg_.kind == ControllerKind::nussbaum) z.push_back(cfg_.theta0);
    return z;
  }

  const LyapunovSpec& lyapunov() const { return *lyapunov_; }

  /// Applied input and, for the Nussbaum law, theta'.
  NussbaumOutput control(double t, std::span<const double> z, SafetyMode mode) const {
    const auto x = z.first(sys_.n);
    const int n = sys_.n;
    switch (cfg_.kind) {
      case ControllerKind::es:
        return {es_input(t, x), 0.0};
      case ControllerKind::nussbaum:
        return nussbaum_control(sys_, x, reference_.stack(t, n), cfg_.gains, NussbaumState{z[n]});
      case ControllerKind::nominal:
        return {nominal_backstepping(sys_, x, reference_.stack(t, n), cfg_.gains), 0.0};
      case ControllerKind::safety_filter:
        if (mode == SafetyMode::nominal)
          return {nominal_backstepping(sys_, x, cfg_.nominal_reference.stack(t, n), cfg_.gains), 0.0};
        return {es_input(t, x), 0.0};
    }
    return {};
  }

  std::vector<double> rhs(double t, std::span<const double> z, SafetyMode mode) const {
    const auto x = z.first(sys_.n);
    const double g = sys_.gain(x);
    if (!(g * g >= sys_.xi1 - 1e-12))
      throw GainFloorViolation("gain floor violated: g(x)^2 < xi1", t, {z.begin(), z.end()});
    const NussbaumOutput c = control(t, z, mode);
    if (!std::isfinite(c.u)) throw NumericalBlowup("non-finite control input", t, {z.begin(), z.end()});
    std::vector<double> dz = eval_dynamics(sys_, x, c.u, t);
    if (cfg_.kind == ControllerKind::nussbaum) dz.push_back(c.theta_dot);
    return dz;
  }

 private:
  double es_input(double t, std::span<const double> x) const {
    const ErrorState h = error_coords(sys_, x, reference_.stack(t, sys_.n), cfg_.gains);
    return es_control(*lyapunov_, cfg_.gains, t, h);
  }

  const SystemModel& sys_;
  const ControllerConfig& cfg_;
  const Reference& reference_;
  std::optional<LyapunovSpec> lyapunov_;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<std::vector<double>> x;
  std::vector<std::vector<double>> h;
  std::vector<double> u;
  std::vector<double> yr;
  std::vector<double> H;  // safety margin y_r - x_1
  std::vector<SafetyMode> mode;

  std::size_t size() const { return t.size(); }
};

/// Where the averaging-error allowance in envelope checks came from.
struct DeltaEstimate {
  double value = 0.1;
  std::string source = "default";
};

struct OvershootReport {
  double max_h1 = -std::numeric_limits<double>::infinity();
  double t_at_max = 0.0;
  double tail_abs_h1 = 0.0;
  std::optional<double> envelope_violation;  // needs the strictly decreasing gain chain
  double min_H = std::numeric_limits<double>::infinity();
  double max_abs_u = 0.0;
  DeltaEstimate delta;
};

/// Metrics over an accepted (or partial) trajectory. The envelope is
///   d2_core + delta + sum_i a_i |h_i(0)| exp(-c_i t).
inline OvershootReport overshoot_report(const Trajectory& traj, const GainConfig& gains,
                                        const std::optional<BoundReport>& bounds, const DeltaEstimate& delta,
                                        double tail_fraction = 0.2) {
  OvershootReport r;
  r.delta = delta;
  if (traj.size() == 0) return r;
  const double t0 = traj.t.front();
  const double t_tail = t0 + (1.0 - tail_fraction) * (traj.t.back() - t0);
  const bool has_envelope = bounds && !bounds->a.empty();
  double violation = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double h1 = traj.h[k][0];
    if (h1 > r.max_h1) {
      r.max_h1 = h1;
      r.t_at_max = traj.t[k];
    }
    if (traj.t[k] >= t_tail) r.tail_abs_h1 = std::max(r.tail_abs_h1, std::abs(h1));
    r.min_H = std::min(r.min_H, traj.H[k]);
    r.max_abs_u = std::max(r.max_abs_u, std::abs(traj.u[k]));
    if (has_envelope) {
      double env = bounds->d2_core + delta.value;
      const double s = traj.t[k] - t0;
      for (std::size_t i = 0; i < bounds->a.size(); ++i)
        env += bounds->a[i] * std::abs(traj.h[0][i]) * std::exp(-gains.c[i] * s);
      violation = std::max(violation, h1 - env);
    }
  }
  if (has_envelope) r.envelope_violation = violation;
  return r;
}

enum class RunStatus { ok, blowup, gain_floor };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::ok: return "ok";
    case RunStatus::blowup: return "blowup";
    case RunStatus::gain_floor: return "gain-floor";
  }
  return "?";
}

struct RunOptions {
  DeltaEstimate delta;
  /// |state| beyond this counts as divergence.
  double divergence_threshold = 1e8;
  /// Record every k-th step (1 keeps all).
  int record_stride = 1;
};

struct RunResult {
  Trajectory trajectory;
  OvershootReport report;
  RunStatus status = RunStatus::ok;
  std::string message;
  double failure_time = 0.0;

  bool ok() const { return status == RunStatus::ok; }
};

/// Integrates the closed loop with fixed-step RK4; the controller is
/// re-evaluated at every stage, and the safety-filter mode is held over a
/// step. A blowup ends the run and keeps the partial trajectory.
inline RunResult run_scenario(const SystemModel& sys, const ControllerConfig& cfg, const Scenario& scenario,
                              const RunOptions& options = {}) {
  sys.validate();
  scenario.validate(sys.n, cfg.dithered() ? cfg.gains.omega : 0.0);
  if (static_cast<int>(cfg.gains.c.size()) != sys.n)
    throw PreconditionError("run_scenario: expected " + std::to_string(sys.n) + " gains c_i");

  const ClosedLoop loop(sys, cfg, scenario.reference);
  RunResult result;
  Trajectory& tr = result.trajectory;
  SafetySwitch sw;
  sw.hysteresis = cfg.hysteresis;

  const long steps = std::lround(scenario.t_end / scenario.dt);
  const int n = sys.n;
  std::vector<double> z = loop.initial_state(scenario.x0);

  auto record = [&](double t, SafetyMode mode) {
    const auto x = std::span<const double>(z).first(n);
    const ReferenceStack yr = scenario.reference.stack(t, n);
    tr.t.push_back(t);
    tr.x.emplace_back(x.begin(), x.end());
    tr.h.push_back(error_coords(sys, x, yr, cfg.gains).h);
    tr.u.push_back(loop.control(t, z, mode).u);
    tr.yr.push_back(yr[0]);
    tr.H.push_back(yr[0] - x[0]);
    tr.mode.push_back(mode);
  };

  try {
    for (long k = 0; k <= steps; ++k) {
      const double t = static_cast<double>(k) * scenario.dt;
      SafetyMode mode = SafetyMode::nominal;
      if (cfg.kind == ControllerKind::safety_filter) mode = sw.update(t, scenario.reference.derivative(t, 0) - z[0]);
      if (k % options.record_stride == 0 || k == steps) record(t, mode);
      if (k == steps) break;
      z = rk4_step([&](double ts, std::span<const double> zs) { return loop.rhs(ts, zs, mode); }, t, z,
                   scenario.dt);
      for (double v : z) {
        if (std::abs(v) > options.divergence_threshold)
          throw NumericalBlowup("state exceeded divergence threshold", t + scenario.dt, z);
      }
    }
  } catch (const NumericalBlowup& e) {
    result.status = RunStatus::blowup;
    result.message = e.what();
    result.failure_time = e.time;
  } catch (const GainFloorViolation& e) {
    result.status = RunStatus::gain_floor;
    result.message = e.what();
    result.failure_time = e.time;
  }

  std::optional<BoundReport> bounds;
  const bool chain = check_gains(sys, cfg.gains, GainMode::theorem2).valid;
  if (chain) bounds = bound_report(cfg.gains, GainMode::theorem2);
  result.report = overshoot_report(tr, cfg.gains, bounds, options.delta);
  return result;
}

}  // namespace esnoc
