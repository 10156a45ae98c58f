#pragma once

// Plant class, reference generators and the worked example system.
//
//   x_i' = x_{i+1} + psi_i(x_1..x_i),   i < n
//   x_n' = g(x) u + psi_n(x_1..x_n)
//   y    = x_1
//
// Controllers never read `gain`; only the simulator and the known-gain
// nominal law do.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "esnoc/errors.hpp"
#include "esnoc/jet.hpp"

namespace esnoc {

/// One drift term psi_i, evaluable on plain doubles and on jets. The span
/// handed in holds exactly x_1..x_i.
struct DriftTerm {
  std::function<double(std::span<const double>)> value;
  std::function<Jet(std::span<const Jet>)> jet;

  double operator()(std::span<const double> x) const { return value(x); }
  Jet operator()(std::span<const Jet> x) const { return jet(x); }
};

/// Wraps a generic callable `f(auto x)` (x indexable) as a DriftTerm.
/// Use unqualified sin/cos/exp inside `f` so jets resolve by ADL.
template <class F>
DriftTerm make_drift(F f) {
  return DriftTerm{[f](std::span<const double> x) -> double { return f(x); },
                   [f](std::span<const Jet> x) -> Jet { return f(x); }};
}

inline DriftTerm zero_drift() {
  return DriftTerm{[](std::span<const double>) { return 0.0; },
                   [](std::span<const Jet> x) -> Jet {
                     if (x.empty()) throw std::logic_error("zero_drift: empty argument");
                     return Jet::constant(x[0].space(), 0.0);
                   }};
}

struct SystemModel {
  std::string id;
  int n = 1;
  std::vector<DriftTerm> psi;
  std::function<double(std::span<const double>)> gain;
  double xi1 = 1.0;  // known floor on gain(x)^2

  void validate() const {
    if (n < 1) throw PreconditionError("SystemModel: n must be >= 1");
    if (static_cast<int>(psi.size()) != n) throw PreconditionError("SystemModel: psi must have n entries");
    if (!gain) throw PreconditionError("SystemModel: gain missing");
    if (!(xi1 > 0.0)) throw PreconditionError("SystemModel: xi1 must be positive");
  }
};

/// x_1' = x_2,  x_2' = (0.2 sin x_2 + 1.2) u + x_1^2.
inline SystemModel example_system() {
  SystemModel sys;
  sys.id = "example";
  sys.n = 2;
  sys.psi = {zero_drift(), make_drift([](auto x) { return x[0] * x[0]; })};
  sys.gain = [](std::span<const double> x) { return 0.2 * std::sin(x[1]) + 1.2; };
  sys.xi1 = 1.0;
  return sys;
}

/// Pure integrator chain of length n with unit gain.
inline SystemModel chain_integrator(int n) {
  SystemModel sys;
  sys.id = "chain:" + std::to_string(n);
  sys.n = n;
  sys.psi.assign(n, zero_drift());
  sys.gain = [](std::span<const double>) { return 1.0; };
  sys.xi1 = 1.0;
  return sys;
}

/// "example" or "chain:<n>".
inline SystemModel system_by_id(std::string_view id) {
  if (id == "example") return example_system();
  if (id.starts_with("chain:")) {
    const std::string tail(id.substr(6));
    char* end = nullptr;
    const long n = std::strtol(tail.c_str(), &end, 10);
    if (end == tail.c_str() || *end != '\0' || n < 1 || n > 8)
      throw ConfigError("bad chain dimension in system id '" + std::string(id) + "'");
    return chain_integrator(static_cast<int>(n));
  }
  throw ConfigError("unknown system id '" + std::string(id) + "'");
}

/// Open-loop vector field. Throws NumericalBlowup on a non-finite result.
inline std::vector<double> eval_dynamics(const SystemModel& sys, std::span<const double> x, double u,
                                         double t = 0.0) {
  if (static_cast<int>(x.size()) != sys.n) throw PreconditionError("eval_dynamics: state dimension mismatch");
  std::vector<double> dx(sys.n);
  for (int i = 0; i < sys.n; ++i) {
    const double drift = sys.psi[i](x.first(i + 1));
    dx[i] = (i + 1 < sys.n ? x[i + 1] : sys.gain(x) * u) + drift;
  }
  for (double v : dx) {
    if (!std::isfinite(v)) throw NumericalBlowup("eval_dynamics: non-finite derivative", t, {x.begin(), x.end()});
  }
  return dx;
}

/// y_r and its first n derivatives at one instant.
class ReferenceStack {
 public:
  explicit ReferenceStack(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw PreconditionError("ReferenceStack: empty");
    for (double v : values_)
      if (!std::isfinite(v)) throw PreconditionError("ReferenceStack: non-finite entry");
  }
  std::size_t size() const { return values_.size(); }
  int n() const { return static_cast<int>(values_.size()) - 1; }
  double operator[](std::size_t k) const { return values_[k]; }
  std::span<const double> values() const { return values_; }

 private:
  std::vector<double> values_;
};

/// Reference generator with analytic derivatives and amplitude bounds.
struct Reference {
  std::string id;
  std::function<double(double t, int k)> derivative;  // y_r^{(k)}(t)
  std::function<double(int k)> bound;                 // sup_t |y_r^{(k)}(t)|

  ReferenceStack stack(double t, int n) const {
    std::vector<double> v(n + 1);
    for (int k = 0; k <= n; ++k) v[k] = derivative(t, k);
    return ReferenceStack(std::move(v));
  }
};

/// y_r(t) = -sin(0.4 t).
inline Reference sine04_reference() {
  constexpr double w = 0.4;
  return Reference{"sine04",
                   [](double t, int k) { return -std::pow(w, k) * std::sin(w * t + k * std::numbers::pi / 2); },
                   [](int k) { return std::pow(w, k); }};
}

inline Reference constant_reference(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "constant:%.17g", value);
  return Reference{buf, [value](double, int k) { return k == 0 ? value : 0.0; },
                   [value](int k) { return k == 0 ? std::abs(value) : 0.0; }};
}

/// "sine04" or "constant:<value>".
inline Reference reference_by_id(std::string_view id) {
  if (id == "sine04") return sine04_reference();
  if (id.starts_with("constant:")) {
    const std::string tail(id.substr(9));
    char* end = nullptr;
    const double v = std::strtod(tail.c_str(), &end);
    if (tail.empty() || *end != '\0' || !std::isfinite(v))
      throw ConfigError("bad constant in reference id '" + std::string(id) + "'");
    return constant_reference(v);
  }
  throw ConfigError("unknown reference id '" + std::string(id) + "'");
}

inline ReferenceStack reference_stack(std::string_view id, double t, int n) {
  return reference_by_id(id).stack(t, n);
}

struct Scenario {
  std::vector<double> x0;
  double t_end = 50.0;
  double dt = 1e-3;
  Reference reference = sine04_reference();

  /// `omega` > 0 enables the dither-resolution check dt <= (2 pi / omega) / 40.
  void validate(int n, double omega = 0.0) const {
    if (static_cast<int>(x0.size()) != n) throw PreconditionError("Scenario: x0 dimension mismatch");
    if (!(dt > 0.0)) throw PreconditionError("Scenario: dt must be positive");
    if (!(t_end > 0.0)) throw PreconditionError("Scenario: t_end must be positive");
    if (omega > 0.0 && dt > (2.0 * std::numbers::pi / omega) / 40.0)
      throw PreconditionError("Scenario: dt does not resolve the dither (need dt <= 2*pi/(40*omega))");
  }
};

}  // namespace esnoc
