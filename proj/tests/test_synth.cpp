#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "esnoc/errors.hpp"
#include "esnoc/model.hpp"
#include "esnoc/synth.hpp"

using namespace esnoc;

namespace {

const ReferenceStack kYr0{{0.0, -0.4, 0.0}};

/// Random strict-feedback system with polynomial and trigonometric drift.
SystemModel random_system(int n, std::mt19937& rng) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  SystemModel sys;
  sys.id = "random";
  sys.n = n;
  for (int i = 0; i < n; ++i) {
    const double a = coef(rng), b = 0.3 * coef(rng), d = coef(rng);
    sys.psi.push_back(make_drift([a, b, d](auto x) {
      using std::sin;
      const auto& xi = x[x.size() - 1];
      return a * x[0] * xi + b * xi * xi * xi + d * sin(x[0]);
    }));
  }
  sys.gain = [n](std::span<const double> x) { return 1.5 + 0.3 * std::sin(x[n - 1]); };
  return sys;
}

GainConfig gains_for(int n) {
  GainConfig g = default_gains();
  g.c.clear();
  for (int i = 0; i < n; ++i) g.c.push_back(3.0 - 0.4 * i);
  return g;
}

/// Five-point central difference.
template <class F>
double fd5(F f, double h) {
  return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h);
}

double rel_err(double approx, double exact) { return std::abs(approx - exact) / std::max(1.0, std::abs(exact)); }

}  // namespace

TEST(VirtualControllers, ExampleHandValues) {
  const auto sys = example_system();
  const std::vector<double> x{-0.5, 0.0};
  const auto alpha = virtual_controllers(sys, x, kYr0, default_gains());
  ASSERT_EQ(alpha.size(), 1u);
  EXPECT_NEAR(alpha[0].value, 1.0, 1e-15);
  EXPECT_NEAR(alpha[0].d_state[0], -2.0, 1e-15);
  EXPECT_NEAR(alpha[0].d_reference[0], 2.0, 1e-15);
}

TEST(VirtualControllers, ZeroErrorZeroDrift) {
  const auto sys = chain_integrator(3);
  const std::vector<double> x{0.7, 1.0, -2.0};
  const ReferenceStack yr{{0.7, 0.1, 0.2, 0.3}};
  EXPECT_NEAR(virtual_controllers(sys, x, yr, gains_for(3))[0].value, 0.0, 1e-15);
}

class PartialsVsFiniteDifferences : public ::testing::TestWithParam<int> {};

TEST_P(PartialsVsFiniteDifferences, RandomStates) {
  const int n = GetParam();
  std::mt19937 rng(1234 + n);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const GainConfig gains = gains_for(n);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const SystemModel sys = random_system(n, rng);
    std::vector<double> x(n), yv(n + 1);
    for (double& v : x) v = u(rng);
    for (double& v : yv) v = u(rng);
    const ReferenceStack yr(yv);
    const auto alpha = virtual_controllers(sys, x, yr, gains);
    ASSERT_EQ(static_cast<int>(alpha.size()), n - 1);
    for (int i = 0; i + 1 < n; ++i) {
      for (int k = 0; k <= i; ++k) {
        const double ds = fd5(
            [&](double e) {
              auto xp = x;
              xp[k] += e;
              return virtual_controllers(sys, xp, yr, gains)[i].value;
            },
            1e-3);
        worst = std::max(worst, rel_err(ds, alpha[i].d_state[k]));
        const double dr = fd5(
            [&](double e) {
              auto yp = yv;
              yp[k] += e;
              return virtual_controllers(sys, x, ReferenceStack(yp), gains)[i].value;
            },
            1e-3);
        worst = std::max(worst, rel_err(dr, alpha[i].d_reference[k]));
      }
    }
  }
  EXPECT_LE(worst, 1e-6) << "n=" << n;
}

INSTANTIATE_TEST_SUITE_P(Dimensions, PartialsVsFiniteDifferences, ::testing::Values(2, 3, 4));

TEST(ErrorCoords, ExampleSafeInit) {
  const std::vector<double> x{-0.5, 0.0};
  const auto h = error_coords(example_system(), x, kYr0, default_gains()).h;
  EXPECT_NEAR(h[0], -0.5, 1e-15);
  EXPECT_NEAR(h[1], -0.6, 1e-15);
}

TEST(ErrorCoords, ExampleUnsafeInit) {
  const std::vector<double> x{0.2, 0.0};
  const auto h = error_coords(example_system(), x, kYr0, default_gains()).h;
  EXPECT_NEAR(h[0], 0.2, 1e-15);
  EXPECT_NEAR(h[1], 0.8, 1e-15);
}

TEST(ErrorCoords, OnManifoldIsZero) {
  const auto sys = example_system();
  const auto gains = default_gains();
  const ReferenceStack yr{{0.3, -0.2, 0.1}};
  const auto x = state_from_errors(sys, ErrorState{{0.0, 0.0}}, yr, gains);
  EXPECT_NEAR(x[0], 0.3, 1e-15);
  const auto h = error_coords(sys, x, yr, gains).h;
  EXPECT_NEAR(h[0], 0.0, 1e-15);
  EXPECT_NEAR(h[1], 0.0, 1e-15);
}

TEST(StateFromErrors, InvertsExample) {
  const auto x = state_from_errors(example_system(), ErrorState{{-0.5, -0.6}}, ReferenceStack({0.0, -0.4, 0.0}),
                                   default_gains());
  EXPECT_NEAR(x[0], -0.5, 1e-15);
  EXPECT_NEAR(x[1], 0.0, 1e-15);
}

TEST(StateFromErrors, RoundTrip) {
  const auto sys = example_system();
  const auto gains = default_gains();
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const ErrorState h{{u(rng), u(rng)}};
    const ReferenceStack yr{{u(rng), u(rng), u(rng)}};
    const auto back = error_coords(sys, state_from_errors(sys, h, yr, gains), yr, gains).h;
    for (int i = 0; i < 2; ++i) worst = std::max(worst, std::abs(back[i] - h.h[i]));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(StateFromErrors, RoundTripHigherOrder) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto sys = random_system(4, rng);
  const auto gains = gains_for(4);
  for (int trial = 0; trial < 20; ++trial) {
    const ErrorState h{{u(rng), u(rng), u(rng), u(rng)}};
    const ReferenceStack yr{{u(rng), u(rng), u(rng), u(rng), u(rng)}};
    const auto back = error_coords(sys, state_from_errors(sys, h, yr, gains), yr, gains).h;
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(back[i], h.h[i], 1e-10);
  }
}

TEST(BigPsi, ExampleHandValue) {
  const std::vector<double> x{-0.5, 0.0};
  EXPECT_NEAR(big_psi(example_system(), x, kYr0, default_gains()), 1.05, 1e-14);
}

TEST(BigPsi, ChainAtEquilibrium) {
  const auto sys = chain_integrator(3);
  const ReferenceStack yr{{0.4, 0.0, 0.0, 0.0}};
  const auto x = state_from_errors(sys, ErrorState{{0, 0, 0}}, yr, gains_for(3));
  EXPECT_NEAR(big_psi(sys, x, yr, gains_for(3)), 0.0, 1e-14);
}

TEST(BigPsi, MatchesErrorDynamics) {
  // h_n' = x_n' - alpha_{n-1}' - y_r^{(n)} = g u + Psi; check with u = 0 by differencing along the flow.
  const auto sys = example_system();
  const auto gains = default_gains();
  const auto ref = sine04_reference();
  const std::vector<double> x{0.3, -0.7};
  const double t = 1.3, e = 1e-5;
  auto hn_along = [&](double s) {
    const auto dx = eval_dynamics(sys, x, 0.0);
    const std::vector<double> xs{x[0] + s * dx[0], x[1] + s * dx[1]};
    return error_coords(sys, xs, ref.stack(t + s, 2), gains).h[1];
  };
  const double fd = (hn_along(e) - hn_along(-e)) / (2 * e);
  EXPECT_NEAR(fd, big_psi(sys, x, ref.stack(t, 2), gains), 1e-6);
}

TEST(PsiBound, ExampleBound) {
  const auto sys = example_system();
  const auto bound = default_psi_bound(sys, default_gains(), sine04_reference());
  EXPECT_DOUBLE_EQ(bound.eta1(0.0), 0.0);
  EXPECT_NEAR(bound.sigma1, 1.16, 1e-15);
  EXPECT_NEAR(bound.eta1(1.0), 1.0 + 8.0, 1e-15);
  EXPECT_THROW(default_psi_bound(chain_integrator(2), default_gains(), sine04_reference()), PreconditionError);
}

TEST(PsiBound, DominatesPsiOnGrid) {
  const auto sys = example_system();
  const auto gains = default_gains();
  const auto ref = sine04_reference();
  const auto bound = default_psi_bound(sys, gains, ref);
  for (double t = 0; t < 16; t += 0.37) {
    const auto yr = ref.stack(t, 2);
    for (double h1 = -3; h1 <= 3; h1 += 0.25) {
      for (double h2 = -3; h2 <= 3; h2 += 0.25) {
        const ErrorState h{{h1, h2}};
        const auto x = state_from_errors(sys, h, yr, gains);
        EXPECT_LE(std::abs(big_psi(sys, x, yr, gains)), bound(h.norm()) + 1e-12);
      }
    }
  }
}

TEST(ClassK, TabulatedValidation) {
  EXPECT_THROW(ClassKInfinity::tabulated({{0, 0}, {1, 1}, {1, 2}}), PreconditionError);
  EXPECT_THROW(ClassKInfinity::tabulated({{0, 0.1}, {1, 1}}), PreconditionError);
  EXPECT_THROW(ClassKInfinity::polynomial({1.0, 1.0}), PreconditionError);
  EXPECT_THROW(ClassKInfinity::polynomial({0.0, -1.0}), PreconditionError);
  const auto f = ClassKInfinity::tabulated({{0, 0}, {1, 2}, {2, 3}});
  EXPECT_DOUBLE_EQ(f(0.5), 1.0);
  EXPECT_DOUBLE_EQ(f(3.0), 4.0);
}

TEST(GainLowerBounds, ExampleInit) {
  const std::vector<double> x0{-0.5, 0.0};
  const auto b = c_lower_bounds(example_system(), x0, kYr0, default_gains());
  ASSERT_EQ(b.size(), 1u);
  EXPECT_NEAR(b[0], 0.8, 1e-12);
}

TEST(GainLowerBounds, RejectsNonnegativeInitialError) {
  const std::vector<double> on{0.0, 0.0};
  EXPECT_THROW(c_lower_bounds(example_system(), on, kYr0, default_gains()), PreconditionError);
  const std::vector<double> above{0.2, 0.0};
  EXPECT_THROW(c_lower_bounds(example_system(), above, kYr0, default_gains()), PreconditionError);
}

TEST(CheckGains, DefaultGainsValidForChain) {
  const auto v = check_gains(example_system(), default_gains(), GainMode::theorem2);
  EXPECT_TRUE(v.valid) << v.describe();
}

TEST(CheckGains, DitherAmplitudeTooSmall) {
  auto g = default_gains();
  g.lambda = 1.0;
  g.beta = 0.5;
  const auto v = check_gains(example_system(), g, GainMode::theorem1);
  EXPECT_FALSE(v.valid);
  EXPECT_NE(v.describe().find("lambda*beta"), std::string::npos);
}

TEST(CheckGains, NonStrictChainRejected) {
  auto g = default_gains();
  g.c = {1.5, 1.5};
  EXPECT_TRUE(check_gains(example_system(), g, GainMode::theorem1).valid);
  EXPECT_FALSE(check_gains(example_system(), g, GainMode::theorem2).valid);
}

TEST(CheckGains, InitialSignMode) {
  const auto sys = example_system();
  auto g = default_gains();
  const std::pair<std::vector<double>, ReferenceStack> init{{-0.5, 0.0}, kYr0};
  EXPECT_TRUE(check_gains(sys, g, GainMode::theorem1_iii, init).valid);
  EXPECT_FALSE(check_gains(sys, g, GainMode::theorem1_iii).valid);
  const std::pair<std::vector<double>, ReferenceStack> bad{{0.2, 0.0}, kYr0};
  EXPECT_FALSE(check_gains(sys, g, GainMode::theorem1_iii, bad).valid);
  g.c = {1.0, 1.5};
  EXPECT_FALSE(check_gains(sys, g, GainMode::theorem1).valid);
}

TEST(Bounds, DefaultGainValues) {
  const auto r = bound_report(default_gains(), GainMode::theorem2);
  EXPECT_NEAR(r.d1_core, 1.3484, 1e-4);
  EXPECT_NEAR(r.d2_core, 0.30303, 1e-5);
  ASSERT_EQ(r.a.size(), 2u);
  EXPECT_DOUBLE_EQ(r.a[0], 1.0);
  EXPECT_DOUBLE_EQ(r.a[1], 2.0);
  EXPECT_TRUE(bound_report(default_gains(), GainMode::theorem1).a.empty());
}

TEST(Bounds, ThreeStateCoefficients) {
  GainConfig g = default_gains();
  g.c = {4.0, 3.0, 2.0};
  const auto r = bound_report(g, GainMode::theorem2);
  EXPECT_DOUBLE_EQ(r.a[1], 1.0);
  EXPECT_DOUBLE_EQ(r.a[2], 1.0 / (2.0 * 1.0));
}

// d2 shrinks when any gain grows. d1 depends on c only through the smallest
// gain, so it is flat in the others and strictly decreasing in c_m and kappa_n.
TEST(Bounds, MonotoneInGains) {
  for (double c1 = 1.2; c1 < 6; c1 += 0.5) {
    for (double c2 = 1.1; c2 < 6; c2 += 0.5) {
      for (double k = 0.5; k < 5; k += 0.75) {
        GainConfig g = default_gains();
        g.c = {c1, c2};
        g.kappa_n = k;
        const auto base = bound_report(g, GainMode::theorem1);
        for (int i = 0; i < 2; ++i) {
          GainConfig up = g;
          up.c[i] += 0.25;
          const auto r = bound_report(up, GainMode::theorem1);
          EXPECT_LT(r.d2_core, base.d2_core);
          EXPECT_LE(r.d1_core, base.d1_core);
          if (g.c[i] == g.c_min()) {
            EXPECT_LT(r.d1_core, base.d1_core);
          }
        }
        GainConfig up = g;
        up.kappa_n += 0.25;
        EXPECT_LT(bound_report(up, GainMode::theorem1).d1_core, base.d1_core);
        EXPECT_LT(bound_report(up, GainMode::theorem1).d2_core, base.d2_core);
      }
    }
  }
}

TEST(Bounds, Preconditions) {
  GainConfig g = default_gains();
  g.c = {1.5, 2.0};
  EXPECT_THROW(bound_report(g, GainMode::theorem2), PreconditionError);
  g.c = {0.9, 2.0};
  EXPECT_THROW(bound_report(g, GainMode::theorem1), PreconditionError);
}
