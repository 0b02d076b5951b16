#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "nbody/oracle.hpp"

using namespace nbody;

namespace {

// G = 1, unit masses, separation 1: circular with speed 1/sqrt(2) each.
SystemState<double> circular_pair() {
  const double v = 1.0 / std::sqrt(2.0);
  SystemState<double> s;
  s.bodies = {{"a", 1.0, {-0.5, 0.0}, {0.0, -v}}, {"b", 1.0, {0.5, 0.0}, {0.0, v}}};
  return s;
}

SystemState<double> three_body() {
  SystemState<double> s;
  s.bodies = {{"a", 1.0, {0.0, 0.0}, {0.1, -0.3}},
              {"b", 2.0, {1.0, 0.2}, {-0.2, 0.6}},
              {"c", 0.5, {-0.8, 1.1}, {-0.5, -0.2}}};
  return to_com_frame(s);
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(a + (b - a) * i / (n - 1));
  return out;
}

}  // namespace

TEST(Accelerations, UnitSeparationPair) {
  SystemState<double> s;
  s.bodies = {{"a", 1.0, {-0.5, 0.0}, {0, 0}}, {"b", 1.0, {0.5, 0.0}, {0, 0}}};
  const auto a = nbody_accelerations(s);
  EXPECT_DOUBLE_EQ(a[0].x(), 1.0);
  EXPECT_DOUBLE_EQ(a[1].x(), -1.0);
  EXPECT_EQ(a[0].y(), 0.0);
}

TEST(Accelerations, SquarePointsToCenter) {
  SystemState<double> s;
  s.bodies = {{"a", 1, {1, 1}, {0, 0}}, {"b", 1, {-1, 1}, {0, 0}},
              {"c", 1, {-1, -1}, {0, 0}}, {"d", 1, {1, -1}, {0, 0}}};
  const auto a = nbody_accelerations(s);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_NEAR(cross(a[k], s.bodies[k].position), 0.0, 1e-15);
    EXPECT_LT(a[k].dot(s.bodies[k].position), 0.0);
    EXPECT_NEAR(a[k].norm(), a[0].norm(), 1e-15);
  }
}

TEST(Accelerations, ThirdLaw) {
  const auto s = three_body();
  const auto a = nbody_accelerations(s);
  Vector2<double> sum = Vector2<double>::Zero();
  for (std::size_t k = 0; k < s.size(); ++k) sum += s.bodies[k].mass * a[k];
  EXPECT_NEAR(sum.norm(), 0.0, 1e-14);
}

TEST(Accelerations, CollisionDetected) {
  auto s = three_body();
  try {
    nbody_accelerations(s, 10.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CollisionDetected);
  }
}

TEST(IntegrateNbody, CircularOrbitClosesAfterOnePeriod) {
  const auto s = circular_pair();
  const double period = std::numbers::pi * std::sqrt(2.0);
  const std::vector<double> times{0.0, period};
  const auto tr = integrate_nbody(s, times);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& end = tr[k].samples.back();
    EXPECT_NEAR((end.position - s.bodies[k].position).norm(), 0.0,
                1e-6 * s.bodies[k].position.norm());
    EXPECT_NEAR((end.velocity - s.bodies[k].velocity).norm(), 0.0,
                1e-6 * s.bodies[k].velocity.norm());
  }
}

TEST(IntegrateNbody, ConservedQuantities) {
  const auto s = three_body();
  const auto times = linspace(0.0, 2.0, 21);
  const auto tr = integrate_nbody(s, times);
  const double e0 = total_energy(s);
  const double l0 = total_angular_momentum(s);
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto si = snapshot(s, tr, i);
    EXPECT_NEAR(total_energy(si), e0, 1e-8 * std::abs(e0));
    EXPECT_NEAR(total_angular_momentum(si), l0, 1e-8 * std::abs(l0));
    EXPECT_NEAR(total_momentum(si).norm(), 0.0, 1e-10);
    EXPECT_NEAR(center_of_mass(si).first.norm(), 0.0, 1e-10);
  }
}

TEST(IntegrateNbody, Rk4FixedAgreesWithAdaptive) {
  const auto s = three_body();
  const std::vector<double> times{0.0, 0.5, 1.0};
  IntegratorConfig rk4;
  rk4.method = IntegratorMethod::rk4_fixed;
  rk4.step = 1e-3;
  const auto a = integrate_nbody(s, times);
  const auto b = integrate_nbody(s, times, rk4);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR((a[k].samples[2].position - b[k].samples[2].position).norm(), 0.0, 1e-7);
  }
}

TEST(IntegrateNbody, SamplesAtRequestedTimes) {
  const auto s = three_body();
  const std::vector<double> times{0.0, 0.1, 0.35};
  const auto tr = integrate_nbody(s, times);
  ASSERT_EQ(tr.size(), 3u);
  EXPECT_EQ(tr[1].times, times);
  EXPECT_EQ(tr[1].samples[0].position, s.bodies[1].position);
}

TEST(IntegrateNbody, HeadOnCollisionTruncatesOrThrows) {
  SystemState<double> s;
  s.bodies = {{"a", 1.0, {-0.5, 0.0}, {0, 0}}, {"b", 1.0, {0.5, 0.0}, {0, 0}}};
  const std::vector<double> times{0.0, 0.1, 5.0};
  IntegratorConfig cfg;
  EXPECT_THROW(integrate_nbody(s, times, cfg), Error);
  cfg.truncate_on_failure = true;
  const auto tr = integrate_nbody(s, times, cfg);
  ASSERT_TRUE(tr[0].truncated_at.has_value());
  EXPECT_LT(*tr[0].truncated_at, 5.0);
  EXPECT_EQ(tr[0].samples.size(), 2u);
}

TEST(IntegrateNbody, StepBudget) {
  const auto s = three_body();
  const std::vector<double> times{0.0, 10.0};
  IntegratorConfig cfg;
  cfg.max_steps = 5;
  try {
    integrate_nbody(s, times, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MaxStepsExceeded);
  }
}

TEST(IntegratorConfig, Validation) {
  IntegratorConfig c;
  EXPECT_NO_THROW(validate(c));
  c.tolerance = 0.0;
  EXPECT_THROW(validate(c), Error);
  c = {};
  c.step = -1.0;
  EXPECT_THROW(validate(c), Error);
  c = {};
  c.max_steps = 0;
  EXPECT_THROW(validate(c), Error);
}

namespace {

PropagatorConstants scalar_constants(BMode mode, double x0, double x_dot0, Sign sign) {
  PropagatorConstants c;
  c.A = 12.0;
  c.B = energy_constant(mode, c.A, x0, x_dot0);
  c.h = c.A / (2 * c.B);
  c.sign = sign;
  c.b_mode = mode;
  c.x0 = x0;
  c.t0 = 0.0;
  return c;
}

}  // namespace

TEST(ScalarOde, Form5aMinusDecreases) {
  const auto c = scalar_constants(BMode::paper, 0.5, 0.0, Sign::minus);
  const auto times = linspace(0.0, 0.02, 11);
  const auto tr = integrate_scalar_x(c, 0.5, 0.0, times, {}, ScalarForm::ode_5a);
  for (std::size_t i = 1; i < tr.x.size(); ++i) EXPECT_LT(tr.x[i], tr.x[i - 1]);
}

TEST(ScalarOde, Form4cFromRestFalls) {
  const auto c = scalar_constants(BMode::paper, 2.0, 0.0, Sign::minus);
  const auto times = linspace(0.0, 0.5, 11);
  const auto tr = integrate_scalar_x(c, 2.0, 0.0, times, {}, ScalarForm::ode_4c);
  for (std::size_t i = 1; i < tr.x.size(); ++i) {
    EXPECT_LT(tr.x[i], tr.x[i - 1]);
    EXPECT_LT(tr.x_dot[i], tr.x_dot[i - 1]);  // x'' = -A/(2x^2) < 0
  }
}

TEST(ScalarOde, EnergyIntegralMatchesSecondOrderForm) {
  const double x0 = 2.0, v0 = 3.0;
  const auto c = scalar_constants(BMode::consistent, x0, v0, Sign::plus);
  const auto times = linspace(0.0, 2.0, 21);
  const auto a = integrate_scalar_x(c, x0, v0, times, {}, ScalarForm::ode_5a);
  const auto b = integrate_scalar_x(c, x0, v0, times, {}, ScalarForm::ode_4c);
  for (std::size_t i = 0; i < times.size(); ++i) {
    EXPECT_NEAR(a.x[i], b.x[i], 1e-8 * b.x[i]);
  }
}

TEST(ScalarOde, HaltsWhenXReachesZero) {
  const auto c = scalar_constants(BMode::paper, 0.5, 0.0, Sign::minus);
  const std::vector<double> times{0.0, 0.01, 1.0};
  IntegratorConfig cfg;
  cfg.truncate_on_failure = true;
  const auto tr = integrate_scalar_x(c, 0.5, 0.0, times, cfg, ScalarForm::ode_5a);
  ASSERT_TRUE(tr.truncated_at.has_value());
  EXPECT_LT(*tr.truncated_at, 1.0);
  EXPECT_EQ(tr.x.size(), 2u);
}

TEST(ScalarOde, NegativeRadicandRejected) {
  auto c = scalar_constants(BMode::consistent, 2.0, 1.0, Sign::plus);  // B = -5
  const std::vector<double> times{0.0, 1.0};
  try {
    integrate_scalar_x(c, 3.0, 1.0, times, {}, ScalarForm::ode_5a);  // A/3 + B < 0
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RadicandNegative);
  }
}

TEST(Quadrature, Polynomial) {
  EXPECT_NEAR(quadrature([](double t) { return t * t; }, 0.0, 1.0, 1e-14), 1.0 / 3.0, 1e-15);
}

TEST(Quadrature, Exponential) {
  EXPECT_NEAR(quadrature([](double t) { return std::exp(t); }, 0.0, 1.0, 1e-13),
              std::numbers::e - 1.0, 1e-12);
}

TEST(Quadrature, NestedLinear) {
  // int_0^T int_0^s (2u + 1) du ds = T^3/3 + T^2/2
  auto inner = [](double s) { return quadrature([](double u) { return 2 * u + 1; }, 0.0, s, 1e-14); };
  const double T = 1.7;
  EXPECT_NEAR(quadrature(inner, 0.0, T, 1e-12), T * T * T / 3 + T * T / 2, 1e-10);
}

TEST(Quadrature, EndpointSingularityAdaptive) {
  EXPECT_NEAR(quadrature([](double t) { return 1.0 / std::sqrt(t); }, 0.0, 1.0, 1e-10), 2.0,
              1e-9);
}

TEST(Quadrature, ReversedAndEmptyInterval) {
  EXPECT_EQ(quadrature([](double t) { return t; }, 0.5, 0.5, 1e-12), 0.0);
  EXPECT_NEAR(quadrature([](double t) { return t; }, 1.0, 0.0, 1e-14), -0.5, 1e-15);
}

TEST(Quadrature, BudgetExhausted) {
  try {
    quadrature([](double t) { return std::sin(1.0 / t); }, 1e-9, 1.0, 1e-15, 20);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ToleranceNotMet);
  }
}
