#pragma once

// Cartesian parameter sweeps over the run configuration.

#include <algorithm>
#include <future>
#include <ostream>
#include <string>
#include <vector>

#include "esnoc/config.hpp"
#include "esnoc/sim.hpp"
#include "esnoc/synth.hpp"

namespace esnoc {

/// One swept config key with its values in config syntax.
struct SweepAxis {
  std::string key;
  std::vector<std::string> values;
};

struct SweepRow {
  std::size_t index = 0;
  std::string scenario_id;
  RunConfig config;
  GainVerdict verdict;
  bool simulated = false;
  OvershootReport report;
  RunStatus status = RunStatus::ok;

  std::string status_text() const {
    if (!simulated) return "invalid: " + verdict.describe();
    return to_string(status);
  }
};

inline DeltaEstimate delta_from_config(const RunConfig& cfg) {
  if (cfg.delta_est) return {*cfg.delta_est, "configured"};
  return {};
}

inline Scenario scenario_from_config(const RunConfig& cfg, double t_end, double dt) {
  Scenario s;
  s.x0 = cfg.x0;
  s.t_end = t_end;
  s.dt = dt;
  s.reference = reference_by_id(cfg.reference);
  return s;
}

/// Every grid point is checked against `mode` first; invalid points are
/// reported but not simulated. Rows come back in grid order (last axis
/// varies fastest) regardless of completion order.
inline std::vector<SweepRow> sweep(const SystemModel& sys, ControllerKind kind, const RunConfig& base,
                                   const std::vector<SweepAxis>& axes, GainMode mode, double t_end, double dt) {
  std::vector<SweepRow> rows;
  if (axes.empty()) return rows;
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.values.size();
  if (total == 0) return rows;

  for (std::size_t idx = 0; idx < total; ++idx) {
    SweepRow row;
    row.index = idx;
    row.config = base;
    std::string id = "p" + std::to_string(idx);
    std::size_t rem = idx;
    std::vector<std::size_t> pick(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      pick[a] = rem % axes[a].values.size();
      rem /= axes[a].values.size();
    }
    for (std::size_t a = 0; a < axes.size(); ++a) {
      const std::string& v = axes[a].values[pick[a]];
      apply_setting(row.config, axes[a].key, v);
      std::string shown = v;
      std::replace(shown.begin(), shown.end(), ',', ' ');
      id += ":" + axes[a].key + "=" + shown;
    }
    row.scenario_id = id;
    std::optional<std::pair<std::vector<double>, ReferenceStack>> init;
    if (mode == GainMode::theorem1_iii) {
      init.emplace(row.config.x0, reference_by_id(row.config.reference).stack(0.0, sys.n));
    }
    row.verdict = check_gains(sys, row.config.gains, mode, init);
    rows.push_back(std::move(row));
  }

  std::vector<std::future<void>> jobs;
  for (auto& row : rows) {
    if (!row.verdict.valid) continue;
    jobs.push_back(std::async(std::launch::async, [&sys, kind, &row, t_end, dt] {
      ControllerConfig cc;
      cc.kind = kind;
      cc.gains = row.config.gains;
      cc.theta0 = row.config.theta0;
      RunOptions opts;
      opts.delta = delta_from_config(row.config);
      const RunResult r = run_scenario(sys, cc, scenario_from_config(row.config, t_end, dt), opts);
      row.simulated = true;
      row.report = r.report;
      row.status = r.status;
    }));
  }
  for (auto& j : jobs) j.get();
  return rows;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  write_report_header(os);
  for (const auto& r : rows) {
    if (r.simulated) {
      write_report_row(os, r.scenario_id, r.config.gains, r.report, r.status_text());
    } else {
      os << r.scenario_id << ',' << describe_gains(r.config.gains) << ",NA,NA,NA,NA,NA," << r.status_text() << '\n';
    }
  }
}

}  // namespace esnoc
