// Integrates the averaged error system and prints W = |hbar|^2 / 2 against its
// ultimate level once per second.

#include <cmath>
#include <cstdio>
#include <vector>

#include "esnoc/esnoc.hpp"

int main() {
  using namespace esnoc;
  const SystemModel sys = example_system();
  const GainConfig gains = default_gains();
  const Reference ref = sine04_reference();
  const LyapunovSpec spec = make_lyapunov(default_psi_bound(sys, gains, ref), gains);

  std::vector<double> h{-0.5, -0.6};
  const double dt = 1e-4;
  const double level = averaged_ultimate_level(gains);
  std::printf("ultimate level %.5f\n", level);
  for (int k = 0; k <= 200000; ++k) {
    const double t = k * dt;
    if (k % 10000 == 0) std::printf("t=%5.1f  W=%.6f\n", t, 0.5 * (h[0] * h[0] + h[1] * h[1]));
    h = rk4_step([&](double ts, std::span<const double> z) { return averaged_rhs(sys, spec, gains, ref.stack(ts, 2), z); },
                 t, h, dt);
  }
}
