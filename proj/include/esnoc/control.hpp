#pragma once

// Control laws: the extremum-seeking nonovershooting law, the Nussbaum
// comparator, the known-gain nominal backstepping law and the switching
// safety filter.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "esnoc/errors.hpp"
#include "esnoc/model.hpp"
#include "esnoc/polynomial.hpp"
#include "esnoc/synth.hpp"

namespace esnoc {

/// Integral Lyapunov function V(h) = int_0^{|h|} r eta2(r) dr with
///   eta2(r) = c_n + kappa_n q(r) + kappa_n q(r)^2,   q = eta1 + sigma1.
class LyapunovSpec {
 public:
  LyapunovSpec(PsiBound bound, double c_n, double kappa_n) : bound_(std::move(bound)), c_n_(c_n), kappa_n_(kappa_n) {
    if (!(c_n > 0.0) || !(kappa_n > 0.0)) throw PreconditionError("LyapunovSpec: c_n and kappa_n must be positive");
    if (!(bound_.sigma1 >= 0.0)) throw PreconditionError("LyapunovSpec: sigma1 must be nonnegative");
    if (bound_.eta1.is_polynomial()) {
      const Polynomial q = bound_.eta1.as_polynomial() + Polynomial::constant(bound_.sigma1);
      const Polynomial eta2 = Polynomial::constant(c_n) + kappa_n * q + kappa_n * (q * q);
      v_poly_ = (Polynomial({0.0, 1.0}) * eta2).integral();
    }
  }

  const PsiBound& psi_bound() const { return bound_; }
  double c_n() const { return c_n_; }
  double kappa_n() const { return kappa_n_; }
  bool closed_form() const { return v_poly_.has_value(); }

  double eta2(double r) const {
    const double q = bound_(r);
    return kappa_n_ * (c_n_ / kappa_n_ + q + q * q);
  }

  /// V as a function of the radius |h|.
  double value_at_radius(double radius) const {
    if (v_poly_) return (*v_poly_)(radius);
    // piecewise-polynomial integrand: integrate knot to knot
    using boost::math::quadrature::gauss_kronrod;
    auto integrand = [this](double r) { return r * eta2(r); };
    double total = 0.0, lo = 0.0;
    auto segment = [&](double hi) {
      double err = 0.0;
      const double part = gauss_kronrod<double, 15>::integrate(integrand, lo, hi, 10, 1e-13, &err);
      if (!(err <= 1e-10 * std::max(1.0, std::abs(part)))) throw std::runtime_error("lyapunov_value: quadrature did not converge");
      total += part;
      lo = hi;
    };
    for (const auto& [r, v] : bound_.eta1.knots()) {
      if (r <= lo) continue;
      if (r >= radius) break;
      segment(r);
    }
    if (radius > lo) segment(radius);
    return total;
  }

 private:
  PsiBound bound_;
  double c_n_;
  double kappa_n_;
  std::optional<Polynomial> v_poly_;
};

inline LyapunovSpec make_lyapunov(const PsiBound& bound, const GainConfig& gains) {
  return LyapunovSpec(bound, gains.c_n(), gains.kappa_n);
}

inline double eta2(const LyapunovSpec& spec, double r) {
  if (r < 0.0) throw PreconditionError("eta2: negative radius");
  return spec.eta2(r);
}

inline double lyapunov_value(const LyapunovSpec& spec, const ErrorState& h) { return spec.value_at_radius(h.norm()); }

/// dV/dh_n = eta2(|h|) h_n.
inline double lyapunov_gradient_last(const LyapunovSpec& spec, const ErrorState& h) {
  return spec.eta2(h.norm()) * h.last();
}

/// u = sqrt(omega) [beta cos(omega t) - lambda sin(omega t) V(h)].
inline double es_control(const LyapunovSpec& spec, const GainConfig& gains, double t, const ErrorState& h) {
  if (!(gains.omega > 0.0)) throw PreconditionError("es_control: omega must be positive");
  const double v = lyapunov_value(spec, h);
  return std::sqrt(gains.omega) * (gains.beta * std::cos(gains.omega * t) - gains.lambda * std::sin(gains.omega * t) * v);
}

/// Textbook backstepping quantities: z_1..z_n and the final virtual control
///   alpha_n = -c_n z_n - z_{n-1} - Psi_std.
struct StandardBackstepping {
  std::vector<double> z;
  double alpha_n = 0.0;
};

inline StandardBackstepping standard_backstepping(const SystemModel& sys, std::span<const double> x,
                                                  const ReferenceStack& yr, const GainConfig& gains) {
  const Synthesis s = synthesize(sys, x, yr, gains.c, Coupling::standard);
  const int n = sys.n;
  double a = -gains.c.at(n - 1) * s.h[n - 1] - s.big_psi;
  if (n > 1) a -= s.h[n - 2];
  return {s.h, a};
}

/// Known-gain law u0 = alpha_n / g(x).
inline double nominal_backstepping(const SystemModel& sys, std::span<const double> x, const ReferenceStack& yr,
                                   const GainConfig& gains) {
  const double g = sys.gain(x);
  if (std::abs(g) < 1e-9) throw PreconditionError("nominal_backstepping: singular gain");
  return standard_backstepping(sys, x, yr, gains).alpha_n / g;
}

struct NussbaumState {
  double theta = 0.0;
};

struct NussbaumOutput {
  double u = 0.0;
  double theta_dot = 0.0;
};

/// u = theta^2 cos(theta) alpha_n,  theta' = -alpha_n z_n.
inline NussbaumOutput nussbaum_control(const SystemModel& sys, std::span<const double> x, const ReferenceStack& yr,
                                       const GainConfig& gains, const NussbaumState& state) {
  const auto sb = standard_backstepping(sys, x, yr, gains);
  const double th = state.theta;
  return {th * th * std::cos(th) * sb.alpha_n, -sb.alpha_n * sb.z.back()};
}

enum class SafetyMode { nominal, override };

inline const char* to_string(SafetyMode m) { return m == SafetyMode::nominal ? "nominal" : "override"; }

/// Single-owner switching state. With hysteresis b > 0 an override is held
/// until H >= b; the default b = 0 switches exactly on the sign of H.
struct SafetySwitch {
  SafetyMode mode = SafetyMode::nominal;
  double last_switch_time = 0.0;
  double hysteresis = 0.0;

  SafetyMode update(double t, double margin) {
    SafetyMode next;
    if (mode == SafetyMode::nominal)
      next = margin >= 0.0 ? SafetyMode::nominal : SafetyMode::override;
    else
      next = margin >= hysteresis ? SafetyMode::nominal : SafetyMode::override;
    if (next != mode) {
      mode = next;
      last_switch_time = t;
    }
    return mode;
  }
};

/// u0 inside the safe set H = y_r - x_1 >= 0, the ES law outside.
inline double safety_filter(double t, double margin, double u0, double u_es, SafetySwitch& sw) {
  return sw.update(t, margin) == SafetyMode::nominal ? u0 : u_es;
}

}  // namespace esnoc
