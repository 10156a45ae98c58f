// Runs the reference tracking scenario with each controller and prints the
// overshoot summary.

#include <cstdio>

#include "esnoc/esnoc.hpp"

int main() {
  using namespace esnoc;
  const SystemModel sys = example_system();
  Scenario sc;
  sc.x0 = {-0.5, 0.0};

  for (ControllerKind kind : {ControllerKind::es, ControllerKind::nussbaum, ControllerKind::nominal}) {
    ControllerConfig cfg;
    cfg.kind = kind;
    const RunResult r = run_scenario(sys, cfg, sc);
    std::printf("%-10s status=%-8s max_h1=% .5f at t=%.3f  tail|h1|=%.5f  max|u|=%.3g\n", to_string(kind),
                to_string(r.status), r.report.max_h1, r.report.t_at_max, r.report.tail_abs_h1, r.report.max_abs_u);
    if (!r.ok()) std::printf("           %s (t=%.4f)\n", r.message.c_str(), r.failure_time);
  }
}
