#pragma once

// Backstepping synthesis for the strict-feedback class.
//
// Error coordinates and virtual controllers:
//
//   h_1 = x_1 - y_r,           h_i = x_i - alpha_{i-1} - y_r^{(i-1)}
//   alpha_1 = -c_1 h_1 - psi_1
//   alpha_i = -c_i h_i - psi_i + L alpha_{i-1}      (nonovershooting)
//   alpha_i = -c_i h_i - h_{i-1} - psi_i + L alpha_{i-1}   (standard)
//
// where L f = sum_k df/dx_k (x_{k+1} + psi_k) + df/dy_r^{(k-1)} y_r^{(k)}.
// alpha_i depends on x_1..x_i and y_r..y_r^{(i-1)}; its partials come out of
// a truncated Taylor jet of order n-1 seeded at (x_1..x_{n-1}, y_r..y_r^{(n-2)}).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "esnoc/errors.hpp"
#include "esnoc/jet.hpp"
#include "esnoc/model.hpp"
#include "esnoc/polynomial.hpp"

namespace esnoc {

struct GainConfig {
  std::vector<double> c;  // c_1..c_n
  double kappa_n = 1.1;
  double lambda = 4.0;
  double beta = 0.8;
  double omega = 60.0;

  double c_n() const { return c.back(); }
  double c_min() const { return *std::min_element(c.begin(), c.end()); }
};

/// c = [2, 1.5], kappa_n = 1.1, lambda = 4, beta = 0.8, omega = 60.
inline GainConfig default_gains() { return GainConfig{{2.0, 1.5}, 1.1, 4.0, 0.8, 60.0}; }

struct ErrorState {
  std::vector<double> h;

  double norm() const { return std::sqrt(std::inner_product(h.begin(), h.end(), h.begin(), 0.0)); }
  double last() const { return h.back(); }
};

/// Whether alpha_i carries the -h_{i-1} cross term of textbook backstepping.
enum class Coupling { nonovershooting, standard };

/// alpha_i with d_state[k] = d alpha_i / d x_{k+1} and
/// d_reference[k] = d alpha_i / d y_r^{(k)}, k < i.
struct VirtualControl {
  double value = 0.0;
  std::vector<double> d_state;
  std::vector<double> d_reference;
};

struct Synthesis {
  std::vector<double> x;
  std::vector<double> h;
  std::vector<VirtualControl> alpha;  // alpha_1..alpha_{n-1}
  std::vector<double> drift;          // drift[i-1] = L alpha_{i-1}, drift[0] = 0
  double big_psi = 0.0;               // psi_n - L alpha_{n-1} - y_r^{(n)}
};

namespace detail {

inline std::shared_ptr<const JetSpace> synthesis_space(int n) {
  thread_local std::map<int, std::shared_ptr<const JetSpace>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_shared<const JetSpace>(2 * (n - 1), n - 1);
  return slot;
}

/// Runs the recursion once. With `target_h` set, the state is reconstructed
/// from the error coordinates instead of read from `state`.
inline Synthesis synthesize(const SystemModel& sys, std::span<const double> state,
                            std::optional<std::span<const double>> target_h, const ReferenceStack& yr,
                            std::span<const double> c, Coupling coupling) {
  const int n = sys.n;
  if (static_cast<int>(yr.size()) < n + 1) throw PreconditionError("synthesis: reference stack needs n+1 entries");
  if (static_cast<int>(c.size()) < n - 1) throw PreconditionError("synthesis: need gains c_1..c_{n-1}");
  if (target_h) {
    if (static_cast<int>(target_h->size()) != n) throw PreconditionError("synthesis: h dimension mismatch");
  } else if (static_cast<int>(state.size()) != n) {
    throw PreconditionError("synthesis: state dimension mismatch");
  }

  Synthesis out;
  out.x.assign(n, 0.0);
  out.h.assign(n, 0.0);
  out.drift.assign(n, 0.0);
  if (!target_h) std::copy(state.begin(), state.end(), out.x.begin());

  const auto space = synthesis_space(n);
  const int ref_offset = n - 1;
  std::vector<Jet> xj, yj, psij, hj;
  xj.reserve(n);
  psij.reserve(n);
  hj.reserve(n);
  for (int j = 0; j + 1 < n; ++j) yj.push_back(Jet::variable(space, ref_offset + j, yr[j]));

  Jet alpha_prev;
  double alpha_prev_value = 0.0;
  for (int i = 1; i <= n; ++i) {
    const int ix = i - 1;
    if (target_h) {
      out.h[ix] = (*target_h)[ix];
      out.x[ix] = out.h[ix] + alpha_prev_value + yr[ix];
    } else {
      out.h[ix] = out.x[ix] - alpha_prev_value - yr[ix];
    }
    if (i == n) break;

    xj.push_back(Jet::variable(space, ix, out.x[ix]));
    Jet h = xj[ix] - yj[ix];
    if (i > 1) h -= alpha_prev;
    psij.push_back(sys.psi[ix](std::span<const Jet>(xj)));

    Jet drift = Jet::constant(space, 0.0);
    for (int k = 1; k < i; ++k) {
      drift += alpha_prev.derivative(k - 1) * (xj[k] + psij[k - 1]);
      drift += alpha_prev.derivative(ref_offset + k - 1) * yj[k];
    }
    out.drift[ix] = drift.value();

    Jet alpha = -c[ix] * h - psij[ix] + drift;
    if (coupling == Coupling::standard && i > 1) alpha -= hj[ix - 1];
    hj.push_back(std::move(h));

    VirtualControl vc;
    vc.value = alpha.value();
    vc.d_state.resize(i);
    vc.d_reference.resize(i);
    for (int k = 0; k < i; ++k) {
      vc.d_state[k] = alpha.partial(k);
      vc.d_reference[k] = alpha.partial(ref_offset + k);
    }
    out.alpha.push_back(std::move(vc));
    alpha_prev_value = alpha.value();
    alpha_prev = std::move(alpha);
  }

  // Psi in plain doubles from the first partials of alpha_{n-1}.
  double drift_n = 0.0;
  if (n > 1) {
    const auto& a = out.alpha.back();
    for (int k = 1; k < n; ++k) {
      const double psi_k = sys.psi[k - 1](std::span<const double>(out.x).first(k));
      drift_n += a.d_state[k - 1] * (out.x[k] + psi_k) + a.d_reference[k - 1] * yr[k];
    }
  }
  out.drift[n - 1] = drift_n;
  out.big_psi = sys.psi[n - 1](std::span<const double>(out.x)) - drift_n - yr[n];
  return out;
}

}  // namespace detail

inline Synthesis synthesize(const SystemModel& sys, std::span<const double> x, const ReferenceStack& yr,
                            std::span<const double> c, Coupling coupling = Coupling::nonovershooting) {
  return detail::synthesize(sys, x, std::nullopt, yr, c, coupling);
}

/// alpha_1..alpha_{n-1} with exact partials; empty for n = 1.
inline std::vector<VirtualControl> virtual_controllers(const SystemModel& sys, std::span<const double> x,
                                                       const ReferenceStack& yr, const GainConfig& gains) {
  return synthesize(sys, x, yr, gains.c).alpha;
}

inline ErrorState error_coords(const SystemModel& sys, std::span<const double> x, const ReferenceStack& yr,
                               const GainConfig& gains) {
  return ErrorState{synthesize(sys, x, yr, gains.c).h};
}

/// Inverse of error_coords; the map is triangular so it is solved state by state.
inline std::vector<double> state_from_errors(const SystemModel& sys, const ErrorState& h, const ReferenceStack& yr,
                                             const GainConfig& gains) {
  return detail::synthesize(sys, {}, std::span<const double>(h.h), yr, gains.c, Coupling::nonovershooting).x;
}

inline double big_psi(const SystemModel& sys, std::span<const double> x, const ReferenceStack& yr,
                      const GainConfig& gains) {
  return synthesize(sys, x, yr, gains.c).big_psi;
}

// ---------------------------------------------------------------------------
// Psi bound |Psi| <= eta1(|h|) + sigma1

/// Class K-infinity function: polynomial with zero constant term and
/// nonnegative coefficients, or a monotone piecewise-linear table.
class ClassKInfinity {
 public:
  static ClassKInfinity polynomial(std::vector<double> coeffs) {
    if (coeffs.size() < 2 || coeffs[0] != 0.0)
      throw PreconditionError("eta1 polynomial needs a zero constant term and positive degree");
    bool positive = false;
    for (std::size_t i = 1; i < coeffs.size(); ++i) {
      if (coeffs[i] < 0.0) throw PreconditionError("eta1 polynomial coefficients must be nonnegative");
      positive = positive || coeffs[i] > 0.0;
    }
    if (!positive) throw PreconditionError("eta1 polynomial must not vanish identically");
    ClassKInfinity f;
    f.poly_ = Polynomial(std::move(coeffs));
    return f;
  }

  /// Knots (r_k, eta1(r_k)) starting at (0, 0), strictly increasing in both
  /// coordinates; extrapolated linearly along the last segment.
  static ClassKInfinity tabulated(std::vector<std::pair<double, double>> knots) {
    if (knots.size() < 2 || knots[0].first != 0.0 || knots[0].second != 0.0)
      throw PreconditionError("eta1 table must start at (0, 0) and have at least two knots");
    for (std::size_t i = 1; i < knots.size(); ++i) {
      if (!(knots[i].first > knots[i - 1].first) || !(knots[i].second > knots[i - 1].second))
        throw PreconditionError("eta1 table must be strictly increasing");
    }
    ClassKInfinity f;
    f.knots_ = std::move(knots);
    return f;
  }

  bool is_polynomial() const { return knots_.empty(); }
  const Polynomial& as_polynomial() const { return poly_; }
  const std::vector<std::pair<double, double>>& knots() const { return knots_; }

  double operator()(double r) const {
    if (is_polynomial()) return poly_(r);
    std::size_t k = 1;
    while (k + 1 < knots_.size() && r > knots_[k].first) ++k;
    const auto [r0, v0] = knots_[k - 1];
    const auto [r1, v1] = knots_[k];
    return v0 + (v1 - v0) * (r - r0) / (r1 - r0);
  }

 private:
  ClassKInfinity() = default;
  Polynomial poly_;
  std::vector<std::pair<double, double>> knots_;
};

struct PsiBound {
  ClassKInfinity eta1;
  double sigma1 = 0.0;

  double operator()(double r) const { return eta1(r) + sigma1; }
};

/// Certified bound for the example system:
///   Psi = (h_1 + y_r)^2 + c_1 h_2 - c_1^2 h_1 - y_r''
///   |Psi| <= r^2 + (2 A_0 + c_1 + c_1^2) r + A_0^2 + A_2
/// with A_k = sup |y_r^{(k)}|.
inline PsiBound default_psi_bound(const SystemModel& sys, const GainConfig& gains, const Reference& reference) {
  if (sys.id != "example")
    throw PreconditionError("default_psi_bound: only the example system has a built-in bound; supply a PsiBound");
  const double c1 = gains.c.at(0);
  const double a0 = reference.bound(0);
  const double a2 = reference.bound(2);
  return PsiBound{ClassKInfinity::polynomial({0.0, 2.0 * a0 + c1 + c1 * c1, 1.0}), a0 * a0 + a2};
}

// ---------------------------------------------------------------------------
// Gain rules

/// Sequential lower bounds underline-c_i, i = 1..n-1, for the initial-sign
/// chain h_i(0) < 0. Entry i uses the already chosen c_1..c_{i-1}.
inline std::vector<double> c_lower_bounds(const SystemModel& sys, std::span<const double> x0,
                                          const ReferenceStack& yr0, const GainConfig& gains) {
  const Synthesis s = synthesize(sys, x0, yr0, gains.c);
  if (!(s.h[0] < 0.0))
    throw PreconditionError("c_lower_bounds: h_1(0) must be negative (h_1(0) = " + std::to_string(s.h[0]) +
                            "); use the strictly decreasing gain chain instead");
  std::vector<double> bounds;
  for (int i = 1; i < sys.n; ++i) {
    const double hi = s.h[i - 1];
    if (!(hi < 0.0))
      throw PreconditionError("c_lower_bounds: h_" + std::to_string(i) +
                              "(0) is not negative; earlier c_k do not exceed their bounds");
    const double psi_i = sys.psi[i - 1](std::span<const double>(s.x).first(i));
    const double b = s.x[i] + psi_i - yr0[i] - s.drift[i - 1];
    bounds.push_back(-b / hi);
  }
  return bounds;
}

enum class GainMode { theorem1, theorem1_iii, theorem2 };

inline const char* to_string(GainMode m) {
  switch (m) {
    case GainMode::theorem1: return "theorem1";
    case GainMode::theorem1_iii: return "theorem1-iii";
    case GainMode::theorem2: return "theorem2";
  }
  return "?";
}

inline GainMode gain_mode_from_string(const std::string& s) {
  if (s == "theorem1") return GainMode::theorem1;
  if (s == "theorem1-iii") return GainMode::theorem1_iii;
  if (s == "theorem2") return GainMode::theorem2;
  throw ConfigError("unknown gain mode '" + s + "'");
}

struct GainVerdict {
  bool valid = true;
  std::vector<std::string> violations;

  std::string describe() const {
    if (valid) return "valid";
    std::ostringstream os;
    for (std::size_t i = 0; i < violations.size(); ++i) os << (i ? "; " : "") << violations[i];
    return os.str();
  }
};

namespace detail {
inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}
}  // namespace detail

/// theorem1-iii needs the initial state and reference stack.
inline GainVerdict check_gains(const SystemModel& sys, const GainConfig& gains, GainMode mode,
                               std::optional<std::pair<std::vector<double>, ReferenceStack>> initial = std::nullopt) {
  GainVerdict v;
  auto fail = [&v](std::string msg) {
    v.valid = false;
    v.violations.push_back(std::move(msg));
  };
  using detail::num;
  if (static_cast<int>(gains.c.size()) != sys.n) {
    fail("expected " + std::to_string(sys.n) + " gains c_i, got " + std::to_string(gains.c.size()));
    return v;
  }
  if (!(gains.kappa_n > 0.0)) fail("kappa_n = " + num(gains.kappa_n) + " <= 0");
  if (!(gains.omega > 0.0)) fail("omega = " + num(gains.omega) + " <= 0");
  if (!(gains.lambda > 0.0)) fail("lambda = " + num(gains.lambda) + " <= 0");
  if (!(gains.beta > 0.0)) fail("beta = " + num(gains.beta) + " <= 0");
  for (int i = 0; i < sys.n; ++i) {
    if (!(gains.c[i] > 1.0)) fail("c" + std::to_string(i + 1) + " = " + num(gains.c[i]) + " <= 1");
  }
  const double lb = gains.lambda * gains.beta;
  if (!(lb >= 1.0 / sys.xi1)) fail("lambda*beta = " + num(lb) + " < 1/xi1 = " + num(1.0 / sys.xi1));

  if (mode == GainMode::theorem2) {
    for (int i = 0; i + 1 < sys.n; ++i) {
      if (!(gains.c[i] > gains.c[i + 1]))
        fail("c" + std::to_string(i + 1) + " = " + num(gains.c[i]) + " <= c" + std::to_string(i + 2) + " = " +
             num(gains.c[i + 1]));
    }
  }
  if (mode == GainMode::theorem1_iii) {
    if (!initial) {
      fail("theorem1-iii requires the initial state");
      return v;
    }
    try {
      const auto bounds = c_lower_bounds(sys, initial->first, initial->second, gains);
      for (std::size_t i = 0; i < bounds.size(); ++i) {
        const double need = std::max(bounds[i], 1.0);
        if (!(gains.c[i] > need))
          fail("c" + std::to_string(i + 1) + " = " + num(gains.c[i]) + " <= max{underline-c" + std::to_string(i + 1) +
               ", 1} = " + num(need));
      }
    } catch (const PreconditionError& e) {
      fail(e.what());
    }
  }
  return v;
}

/// omega-independent cores of the ultimate bound and overshoot bound, plus
/// the transient coefficients a_i of the strictly-decreasing-chain envelope.
struct BoundReport {
  double d1_core = 0.0;  // sqrt(1 / (kappa_n (c_m - 1)))
  double d2_core = 0.0;  // 1 / (kappa_n prod c_i)
  std::vector<double> a;  // empty unless theorem2 mode
  double c_m = 0.0;
};

inline BoundReport bound_report(const GainConfig& gains, GainMode mode) {
  if (gains.c.empty()) throw PreconditionError("bound_report: no gains");
  if (!(gains.kappa_n > 0.0)) throw PreconditionError("bound_report: kappa_n must be positive");
  for (double ci : gains.c)
    if (!(ci > 1.0)) throw PreconditionError("bound_report: every c_i must exceed 1");
  BoundReport r;
  r.c_m = gains.c_min();
  r.d1_core = std::sqrt(1.0 / (gains.kappa_n * (r.c_m - 1.0)));
  double prod = 1.0;
  for (double ci : gains.c) prod *= ci;
  r.d2_core = 1.0 / (gains.kappa_n * prod);
  if (mode == GainMode::theorem2) {
    for (std::size_t i = 0; i + 1 < gains.c.size(); ++i)
      if (!(gains.c[i] > gains.c[i + 1])) throw PreconditionError("bound_report: theorem2 needs c_1 > ... > c_n");
    r.a.push_back(1.0);
    for (std::size_t i = 1; i < gains.c.size(); ++i) {
      double den = 1.0;
      for (std::size_t k = 0; k < i; ++k) den *= gains.c[k] - gains.c[i];
      r.a.push_back(1.0 / den);
    }
  }
  return r;
}

}  // namespace esnoc
