#pragma once

// Flat key=value run configuration and CSV rendering.
//
//   # comment
//   c1=2
//   c2=1.5
//   kappa_n=1.1
//   lambda=4
//   beta=0.8
//   omega=60
//   x0=-0.5,0
//   reference=sine04
//   theta0=0
//   delta_est=0.1

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "esnoc/errors.hpp"
#include "esnoc/sim.hpp"
#include "esnoc/synth.hpp"

namespace esnoc {

struct RunConfig {
  GainConfig gains = default_gains();
  std::vector<double> x0{-0.5, 0.0};
  std::string reference = "sine04";
  double theta0 = 0.0;
  std::optional<double> delta_est;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || *end != '\0' || !std::isfinite(v))
    throw ConfigError("key '" + key + "': '" + text + "' is not a finite number");
  return v;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

}  // namespace detail

/// Applies one key=value assignment. Gain keys are c1..cN; the c vector is
/// grown as needed and gaps are rejected by parse_config.
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_double;
  if (key.size() >= 2 && key[0] == 'c' && key.find_first_not_of("0123456789", 1) == std::string::npos) {
    const int i = std::stoi(key.substr(1));
    if (i < 1 || i > 16) throw ConfigError("gain index out of range in '" + key + "'");
    if (static_cast<int>(cfg.gains.c.size()) < i) cfg.gains.c.resize(i, std::numeric_limits<double>::quiet_NaN());
    cfg.gains.c[i - 1] = parse_double(key, value);
  } else if (key == "kappa_n") {
    cfg.gains.kappa_n = parse_double(key, value);
  } else if (key == "lambda") {
    cfg.gains.lambda = parse_double(key, value);
  } else if (key == "beta") {
    cfg.gains.beta = parse_double(key, value);
  } else if (key == "omega") {
    cfg.gains.omega = parse_double(key, value);
  } else if (key == "x0") {
    cfg.x0 = detail::parse_list(key, value);
  } else if (key == "reference") {
    reference_by_id(value);  // validates
    cfg.reference = value;
  } else if (key == "theta0") {
    cfg.theta0 = parse_double(key, value);
  } else if (key == "delta_est") {
    cfg.delta_est = parse_double(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

/// Parses config text on top of `base`. A file that sets any c_i replaces the
/// whole gain vector.
inline RunConfig parse_config(std::istream& in, RunConfig base = {}) {
  RunConfig cfg = std::move(base);
  bool gains_reset = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string text = detail::trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));
    if (!gains_reset && key.size() >= 2 && key[0] == 'c' && std::isdigit(static_cast<unsigned char>(key[1]))) {
      cfg.gains.c.clear();
      gains_reset = true;
    }
    apply_setting(cfg, key, value);
  }
  for (std::size_t i = 0; i < cfg.gains.c.size(); ++i)
    if (std::isnan(cfg.gains.c[i])) throw ConfigError("missing gain c" + std::to_string(i + 1));
  return cfg;
}

inline RunConfig parse_config(std::string_view text, RunConfig base = {}) {
  std::istringstream in{std::string(text)};
  return parse_config(in, std::move(base));
}

/// 17 significant digits, round-trippable.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// "c1=2;c2=1.5;kappa_n=1.1;lambda=4;beta=0.8;omega=60"
inline std::string describe_gains(const GainConfig& g) {
  std::string s;
  for (std::size_t i = 0; i < g.c.size(); ++i) s += "c" + std::to_string(i + 1) + "=" + format_double(g.c[i]) + ";";
  s += "kappa_n=" + format_double(g.kappa_n) + ";lambda=" + format_double(g.lambda) +
       ";beta=" + format_double(g.beta) + ";omega=" + format_double(g.omega);
  return s;
}

/// Columns: t, x1..xn, h1..hn, u, yr, H, mode.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  const std::size_t n = tr.size() ? tr.x.front().size() : 0;
  os << "t";
  for (std::size_t i = 1; i <= n; ++i) os << ",x" << i;
  for (std::size_t i = 1; i <= n; ++i) os << ",h" << i;
  os << ",u,yr,H,mode\n";
  for (std::size_t k = 0; k < tr.size(); ++k) {
    os << format_double(tr.t[k]);
    for (double v : tr.x[k]) os << ',' << format_double(v);
    for (double v : tr.h[k]) os << ',' << format_double(v);
    os << ',' << format_double(tr.u[k]) << ',' << format_double(tr.yr[k]) << ',' << format_double(tr.H[k]) << ','
       << to_string(tr.mode[k]) << '\n';
  }
}

inline void write_report_header(std::ostream& os) {
  os << "scenario,gains,max_h1,t_at_max,tail_abs_h1,envelope_violation,min_H,status\n";
}

inline void write_report_row(std::ostream& os, const std::string& scenario_id, const GainConfig& gains,
                             const OvershootReport& r, const std::string& status) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("NA"); };
  os << scenario_id << ',' << describe_gains(gains) << ',' << format_double(r.max_h1) << ','
     << format_double(r.t_at_max) << ',' << format_double(r.tail_abs_h1) << ',' << opt(r.envelope_violation) << ','
     << format_double(r.min_H) << ',' << status << '\n';
}

/// Columns: omega, max_deviation, blowup_flag.
inline void write_deviation_csv(std::ostream& os, const std::vector<double>& omegas,
                                const std::vector<double>& deviations, const std::vector<bool>& blowup) {
  os << "omega,max_deviation,blowup_flag\n";
  for (std::size_t i = 0; i < omegas.size(); ++i)
    os << format_double(omegas[i]) << ',' << format_double(deviations[i]) << ',' << (blowup[i] ? 1 : 0) << '\n';
}

}  // namespace esnoc
