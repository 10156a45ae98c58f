#pragma once

// Lie-bracket averaged error system and the full-vs-averaged closeness study.
//
//   hbar_i' = -c_i hbar_i + hbar_{i+1}                         i < n
//   hbar_n' = Psi(xbar, Y_r) - k lambda beta g(xbar)^2 eta2(|hbar|) hbar_n
//
// with xbar reconstructed from hbar. k = 1 is the coefficient stated for the
// averaged dynamics; k = 1/2 is what the generic bracket formula gives for a
// cos/sin dither pair, kept selectable for comparison.

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "esnoc/control.hpp"
#include "esnoc/errors.hpp"
#include "esnoc/model.hpp"
#include "esnoc/sim.hpp"
#include "esnoc/synth.hpp"

namespace esnoc {

enum class BracketCoefficient { stated, half };

inline double bracket_factor(BracketCoefficient k) { return k == BracketCoefficient::stated ? 1.0 : 0.5; }

/// lambda beta g(x)^2 eta2(r).
inline double mu_n(const SystemModel& sys, const LyapunovSpec& spec, const GainConfig& gains,
                   std::span<const double> x, double r) {
  const double g = sys.gain(x);
  return gains.lambda * gains.beta * g * g * spec.eta2(r);
}

inline std::vector<double> averaged_rhs(const SystemModel& sys, const LyapunovSpec& spec, const GainConfig& gains,
                                        const ReferenceStack& yr, std::span<const double> hbar,
                                        BracketCoefficient coefficient = BracketCoefficient::stated) {
  const int n = sys.n;
  const ErrorState h{{hbar.begin(), hbar.end()}};
  const Synthesis s = detail::synthesize(sys, {}, hbar, yr, gains.c, Coupling::nonovershooting);
  std::vector<double> d(n);
  for (int i = 0; i + 1 < n; ++i) d[i] = -gains.c[i] * hbar[i] + hbar[i + 1];
  d[n - 1] = s.big_psi - bracket_factor(coefficient) * mu_n(sys, spec, gains, s.x, h.norm()) * hbar[n - 1];
  return d;
}

/// (1/T) int_0^T u_j(theta) int_0^theta u_i(tau) dtau dtheta.
///
/// Both integrals are carried together as the quadrature ODE
///   a' = u_i,  b' = u_j a
/// with classical RK4, i.e. composite Simpson on each panel.
inline double v_coefficient(const std::function<double(double)>& u_i, const std::function<double(double)>& u_j,
                            double period, int panels = 20000) {
  if (!(period > 0.0)) throw PreconditionError("v_coefficient: period must be positive");
  const double h = period / panels;
  double a = 0.0, b = 0.0, mean_j = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double t0 = k * h, tm = t0 + 0.5 * h, t1 = t0 + h;
    const double ui0 = u_i(t0), uim = u_i(tm), ui1 = u_i(t1);
    const double uj0 = u_j(t0), ujm = u_j(tm), uj1 = u_j(t1);
    const double k1a = ui0, k1b = uj0 * a;
    const double k2a = uim, k2b = ujm * (a + 0.5 * h * k1a);
    const double k3a = uim, k3b = ujm * (a + 0.5 * h * k2a);
    const double k4a = ui1, k4b = uj1 * (a + h * k3a);
    a += h / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a);
    b += h / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b);
    mean_j += h / 6.0 * (uj0 + 4 * ujm + uj1);
  }
  if (std::abs(a) / period > 1e-9) throw PreconditionError("v_coefficient: u_i does not have zero mean");
  if (std::abs(mean_j) / period > 1e-9) throw PreconditionError("v_coefficient: u_j does not have zero mean");
  return b / period;
}

struct DeviationStudy {
  std::vector<double> omegas;
  double horizon = 10.0;
  std::vector<double> deviations;  // +inf where a run blew up
  std::vector<bool> blowup;
  std::vector<std::string> messages;
};

struct DeviationOptions {
  BracketCoefficient coefficient = BracketCoefficient::stated;
  /// Step is min(scenario.dt, dither period / steps_per_period).
  double steps_per_period = 100.0;
};

/// Steps two systems side by side on the same grid and returns
/// max_k |to_errors(t_k, a_k) - b_k|. Throws NumericalBlowup when either side
/// stops being finite or the distance exceeds `divergence`.
template <class RhsA, class ToErrors, class RhsB>
double max_trajectory_distance(RhsA&& rhs_a, std::vector<double> a, ToErrors&& to_errors, RhsB&& rhs_b,
                               std::vector<double> b, double dt, long steps, double divergence = 1e8) {
  double worst = 0.0;
  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    a = rk4_step(rhs_a, t, a, dt);
    b = rk4_step(rhs_b, t, b, dt);
    const double t1 = static_cast<double>(k + 1) * dt;
    const std::vector<double> ha = to_errors(t1, a);
    double d2 = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) d2 += (ha[i] - b[i]) * (ha[i] - b[i]);
    const double d = std::sqrt(d2);
    if (!std::isfinite(d) || d > divergence) throw NumericalBlowup("trajectories diverged", t1, a);
    worst = std::max(worst, d);
  }
  return worst;
}

/// max_t |h(t) - hbar(t)| between the dithered ES loop and the averaged
/// system, both started from h(0). Returns +inf on blowup.
inline double deviation_for_omega(const SystemModel& sys, const PsiBound& bound, GainConfig gains,
                                  const Scenario& scenario, double omega, const DeviationOptions& options,
                                  std::string* message = nullptr) {
  gains.omega = omega;
  const double dt = std::min(scenario.dt, 2.0 * std::numbers::pi / omega / options.steps_per_period);
  ControllerConfig cfg;
  cfg.kind = ControllerKind::es;
  cfg.gains = gains;
  cfg.psi_bound = bound;
  const ClosedLoop loop(sys, cfg, scenario.reference);
  const LyapunovSpec& spec = loop.lyapunov();
  const int n = sys.n;
  const auto yr = [&](double t) { return scenario.reference.stack(t, n); };

  try {
    return max_trajectory_distance(
        [&](double t, std::span<const double> x) { return loop.rhs(t, x, SafetyMode::override); }, scenario.x0,
        [&](double t, const std::vector<double>& x) { return error_coords(sys, x, yr(t), gains).h; },
        [&](double t, std::span<const double> h) {
          return averaged_rhs(sys, spec, gains, yr(t), h, options.coefficient);
        },
        error_coords(sys, scenario.x0, yr(0.0), gains).h, dt, std::lround(scenario.t_end / dt));
  } catch (const std::runtime_error& e) {
    if (message) *message = e.what();
    return std::numeric_limits<double>::infinity();
  }
}

/// Runs the omega points concurrently; results keep the input order.
inline DeviationStudy deviation_study(const SystemModel& sys, const PsiBound& bound, const GainConfig& gains,
                                      const Scenario& scenario, const std::vector<double>& omegas,
                                      const DeviationOptions& options = {}) {
  scenario.validate(sys.n);
  DeviationStudy study;
  study.omegas = omegas;
  study.horizon = scenario.t_end;
  std::vector<std::future<std::pair<double, std::string>>> jobs;
  for (double w : omegas) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      std::string msg;
      const double d = deviation_for_omega(sys, bound, gains, scenario, w, options, &msg);
      return std::make_pair(d, msg);
    }));
  }
  for (auto& j : jobs) {
    auto [d, msg] = j.get();
    study.deviations.push_back(d);
    study.blowup.push_back(!std::isfinite(d));
    study.messages.push_back(std::move(msg));
  }
  return study;
}

/// The ultimate level 1 / (2 kappa_n (c_m - 1)) of W = |hbar|^2 / 2.
inline double averaged_ultimate_level(const GainConfig& gains) {
  return 1.0 / (2.0 * gains.kappa_n * (gains.c_min() - 1.0));
}

}  // namespace esnoc
