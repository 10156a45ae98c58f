// esnoc: command-line front end for closed-loop runs, sweeps and averaging
// studies. CSV goes to --out (stdout when omitted), diagnostics to stderr.
//
// Exit codes: 0 success, 1 a simulation blew up (partial output written),
// 2 bad arguments or configuration.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "esnoc/esnoc.hpp"

namespace {

using namespace esnoc;

struct Common {
  std::string system = "example";
  std::string controller = "es";
  std::string config;
  double t_end = 50.0;
  double dt = 1e-3;
  std::string out;
};

void add_common(CLI::App* app, Common& c, double default_t_end) {
  c.t_end = default_t_end;
  app->add_option("--system", c.system, "system id: example | chain:<n>")->capture_default_str();
  app->add_option("--controller", c.controller, "es | nussbaum | nominal | safety-filter")->capture_default_str();
  app->add_option("--config", c.config, "key=value config file");
  app->add_option("--t-end", c.t_end, "horizon [s]")->capture_default_str();
  app->add_option("--dt", c.dt, "RK4 step [s]")->capture_default_str();
  app->add_option("--out", c.out, "output CSV (stdout if omitted)");
}

RunConfig load_config(const Common& c, const SystemModel& sys) {
  RunConfig base;
  if (sys.n != 2) {
    base.gains.c.assign(sys.n, 2.0);
    base.x0.assign(sys.n, 0.0);
  }
  if (c.config.empty()) return base;
  std::ifstream in(c.config);
  if (!in) throw ConfigError("cannot open config file '" + c.config + "'");
  return parse_config(in, base);
}

/// Writes to --out or stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw ConfigError("cannot open output file '" + path + "'");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

ControllerConfig controller_config(ControllerKind kind, const RunConfig& rc) {
  ControllerConfig cc;
  cc.kind = kind;
  cc.gains = rc.gains;
  cc.theta0 = rc.theta0;
  return cc;
}

void report_failure(const std::string& label, const RunResult& r) {
  std::fprintf(stderr, "%s: %s at t=%.6g: %s\n", label.c_str(), to_string(r.status), r.failure_time,
               r.message.c_str());
}

void note_delta(const DeltaEstimate& d) {
  std::fprintf(stderr, "delta_est=%.17g (%s)\n", d.value, d.source.c_str());
}

int cmd_run(const Common& c) {
  const SystemModel sys = system_by_id(c.system);
  const RunConfig rc = load_config(c, sys);
  const ControllerKind kind = controller_from_string(c.controller);
  RunOptions opts;
  opts.delta = delta_from_config(rc);
  const RunResult r = run_scenario(sys, controller_config(kind, rc), scenario_from_config(rc, c.t_end, c.dt), opts);
  Output out(c.out);
  write_trajectory_csv(out.stream(), r.trajectory);
  write_report_header(std::cerr);
  write_report_row(std::cerr, c.controller, rc.gains, r.report, to_string(r.status));
  note_delta(r.report.delta);
  if (!r.ok()) {
    report_failure(c.controller, r);
    return 1;
  }
  return 0;
}

std::vector<SweepAxis> parse_grid(const std::vector<std::string>& specs) {
  std::vector<SweepAxis> axes;
  for (const std::string& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("grid axis '" + s + "' must look like key=v1;v2");
    SweepAxis a;
    a.key = s.substr(0, eq);
    std::stringstream ss(s.substr(eq + 1));
    std::string v;
    while (std::getline(ss, v, ';'))
      if (!v.empty()) a.values.push_back(v);
    if (a.values.empty()) throw ConfigError("grid axis '" + a.key + "' has no values");
    axes.push_back(std::move(a));
  }
  return axes;
}

int cmd_sweep(const Common& c, const std::vector<std::string>& grid, const std::string& mode) {
  const SystemModel sys = system_by_id(c.system);
  const RunConfig rc = load_config(c, sys);
  const auto rows =
      sweep(sys, controller_from_string(c.controller), rc, parse_grid(grid), gain_mode_from_string(mode), c.t_end, c.dt);
  Output out(c.out);
  write_sweep_csv(out.stream(), rows);
  int code = 0;
  for (const auto& r : rows) {
    if (r.simulated && r.status != RunStatus::ok) code = 1;
  }
  return code;
}

int cmd_compare(const Common& c) {
  const SystemModel sys = system_by_id(c.system);
  const RunConfig rc = load_config(c, sys);
  RunOptions opts;
  opts.delta = delta_from_config(rc);
  const Scenario sc = scenario_from_config(rc, c.t_end, c.dt);
  Output out(c.out);
  write_report_header(out.stream());
  int code = 0;
  for (ControllerKind kind : {ControllerKind::es, ControllerKind::nussbaum}) {
    const RunResult r = run_scenario(sys, controller_config(kind, rc), sc, opts);
    write_report_row(out.stream(), to_string(kind), rc.gains, r.report, to_string(r.status));
    if (!r.ok()) {
      report_failure(to_string(kind), r);
      code = 1;
    }
  }
  note_delta(opts.delta);
  return code;
}

int cmd_safety(const Common& c, const std::string& trajectory_prefix) {
  const SystemModel sys = system_by_id(c.system);
  const RunConfig rc = load_config(c, sys);
  RunOptions opts;
  opts.delta = delta_from_config(rc);
  std::vector<std::vector<double>> inits;
  if (sys.id == "example" && c.config.empty())
    inits = {{-0.45, 0.0}, {0.2, 0.0}};
  else
    inits = {rc.x0};
  Output out(c.out);
  write_report_header(out.stream());
  int code = 0;
  for (std::size_t i = 0; i < inits.size(); ++i) {
    RunConfig ri = rc;
    ri.x0 = inits[i];
    const RunResult r =
        run_scenario(sys, controller_config(ControllerKind::safety_filter, ri), scenario_from_config(ri, c.t_end, c.dt), opts);
    std::string id = "safety:x0=";
    for (std::size_t k = 0; k < ri.x0.size(); ++k) id += (k ? " " : "") + format_double(ri.x0[k]);
    write_report_row(out.stream(), id, ri.gains, r.report, to_string(r.status));
    if (!trajectory_prefix.empty()) {
      std::ofstream tf(trajectory_prefix + std::to_string(i) + ".csv");
      write_trajectory_csv(tf, r.trajectory);
    }
    if (!r.ok()) {
      report_failure(id, r);
      code = 1;
    }
  }
  note_delta(opts.delta);
  return code;
}

int cmd_average(const Common& c, const std::vector<double>& omegas, const std::string& coefficient) {
  const SystemModel sys = system_by_id(c.system);
  const RunConfig rc = load_config(c, sys);
  DeviationOptions opts;
  if (coefficient == "stated")
    opts.coefficient = BracketCoefficient::stated;
  else if (coefficient == "half")
    opts.coefficient = BracketCoefficient::half;
  else
    throw ConfigError("--bracket-coefficient must be 'stated' or 'half'");
  const Scenario sc = scenario_from_config(rc, c.t_end, c.dt);
  const PsiBound bound = default_psi_bound(sys, rc.gains, sc.reference);
  const DeviationStudy st = deviation_study(sys, bound, rc.gains, sc, omegas, opts);
  Output out(c.out);
  write_deviation_csv(out.stream(), st.omegas, st.deviations, st.blowup);
  int code = 0;
  for (std::size_t i = 0; i < st.omegas.size(); ++i) {
    if (st.blowup[i]) {
      std::fprintf(stderr, "omega=%.6g: %s\n", st.omegas[i], st.messages[i].c_str());
      code = 1;
    }
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extremum-seeking nonovershooting tracking: simulations and studies"};
  app.require_subcommand(1);

  Common run_c, sweep_c, compare_c, safety_c, average_c;
  auto* run = app.add_subcommand("run", "simulate one scenario, trajectory CSV");
  add_common(run, run_c, 50.0);

  auto* sw = app.add_subcommand("sweep", "cartesian parameter sweep, report CSV");
  add_common(sw, sweep_c, 50.0);
  std::vector<std::string> grid;
  std::string mode = "theorem1";
  sw->add_option("--grid", grid, "axis key=v1;v2;... (repeatable)");
  sw->add_option("--mode", mode, "theorem1 | theorem1-iii | theorem2")->capture_default_str();

  auto* cmp = app.add_subcommand("compare", "es vs nussbaum on one scenario, report CSV");
  add_common(cmp, compare_c, 50.0);

  auto* saf = app.add_subcommand("safety", "safety-filter runs, report CSV");
  add_common(saf, safety_c, 50.0);
  std::string traj_prefix;
  saf->add_option("--trajectories", traj_prefix, "write per-run trajectories to <prefix><i>.csv");

  auto* avg = app.add_subcommand("average", "full vs averaged deviation study, CSV");
  add_common(avg, average_c, 10.0);
  std::vector<double> omegas{60.0, 240.0, 960.0};
  std::string coefficient = "stated";
  avg->add_option("--omegas", omegas, "dither frequencies")->delimiter(',')->capture_default_str();
  avg->add_option("--bracket-coefficient", coefficient, "stated | half")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_c);
    if (*sw) return cmd_sweep(sweep_c, grid, mode);
    if (*cmp) return cmd_compare(compare_c);
    if (*saf) return cmd_safety(safety_c, traj_prefix);
    if (*avg) return cmd_average(average_c, omegas, coefficient);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
