#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "nbody/validity.hpp"

using namespace nbody;

namespace {

// Body 0 (mass 1) at distance r0 from the COM of a pair with total mass 6.
SystemState<double> pair_at(double r0, double tangential = 0.0) {
  const double d = r0 * 6.0 / 5.0;
  SystemState<double> s;
  s.bodies = {{"light", 1.0, {-5.0 / 6.0 * d, 0.0}, {0.0, -tangential}},
              {"heavy", 5.0, {1.0 / 6.0 * d, 0.0}, {0.0, tangential / 5.0}}};
  return s;
}

ValidityOptions paper_modes() {
  ValidityOptions o;
  o.propagation.xk0_mode = X0Mode::paper;
  o.propagation.b_mode = BMode::paper;
  return o;
}

SystemState<double> radial_pair(double speed) {
  SystemState<double> s;
  s.bodies = {{"a", 1.0, {-0.5, 0.0}, {-speed, 0.0}}, {"b", 1.0, {0.5, 0.0}, {speed, 0.0}}};
  return s;
}

ValidityOptions consistent_b() {
  ValidityOptions o;
  o.propagation.b_mode = BMode::consistent;
  return o;
}

}  // namespace

TEST(CheckScenario, BinomialViolatedAtT0) {
  const auto rep = check_scenario(pair_at(2.0), paper_modes());
  const auto& b = rep.bodies[0];
  EXPECT_DOUBLE_EQ(b.A, 12.0);
  EXPECT_DOUBLE_EQ(b.B, 3.0);
  EXPECT_DOUBLE_EQ(b.x0, 2.0);
  EXPECT_FALSE(b.binomial_ok);
  EXPECT_DOUBLE_EQ(b.binomial_margin, 0.5);
  EXPECT_TRUE(rep.has_code("BinomialViolated"));
  EXPECT_EQ(rep.verdict, Verdict::invalid);
}

TEST(CheckScenario, PaperModeSmallX0Passes) {
  const auto rep = check_scenario(pair_at(0.5), paper_modes());
  const auto& b = rep.bodies[0];
  EXPECT_DOUBLE_EQ(b.A / b.B, 0.25);
  EXPECT_TRUE(b.binomial_ok);
  EXPECT_TRUE(b.constructible);
}

TEST(CheckScenario, AngularVelocityHardLimit) {
  // theta_dot0 = v / r0 = 2
  const auto rep = check_scenario(pair_at(0.5, 1.0), paper_modes());
  EXPECT_NEAR(rep.bodies[0].theta_dot_max, 2.0, 1e-12);
  EXPECT_FALSE(rep.bodies[0].theta_dot_ok);
  EXPECT_TRUE(rep.has_code("AngularVelocityTooLarge"));
  EXPECT_EQ(rep.verdict, Verdict::invalid);
}

TEST(CheckScenario, AngularVelocitySoftLimit) {
  const auto rep = check_scenario(pair_at(0.5, 0.1), paper_modes());  // 0.2 rad/s
  EXPECT_TRUE(rep.has_code("AngularVelocityLarge"));
  EXPECT_FALSE(rep.has_code("AngularVelocityTooLarge"));
  EXPECT_EQ(rep.verdict, Verdict::warned);
}

TEST(CheckScenario, NegativeBInvalid) {
  // x0 = 2, x_dot0 = 1, A = 12: B = 1 - 6 = -5
  SystemState<double> s = pair_at(1.0);
  s.bodies[0].position = {-5.0 / 3.0, 0.0};
  s.bodies[1].position = {1.0 / 3.0, 0.0};
  s.bodies[0].velocity = {-5.0 / 6.0, 0.0};
  s.bodies[1].velocity = {1.0 / 6.0, 0.0};
  const auto rep = check_scenario(s, consistent_b());
  EXPECT_DOUBLE_EQ(rep.bodies[0].x0, 2.0);
  EXPECT_NEAR(rep.bodies[0].B, -5.0, 1e-12);
  EXPECT_FALSE(rep.bodies[0].B_positive);
  EXPECT_TRUE(rep.has_code("NonPositiveB"));
  EXPECT_EQ(rep.verdict, Verdict::invalid);
}

TEST(CheckScenario, RescaleWarning) {
  auto o = paper_modes();
  const auto rep = check_scenario(pair_at(1.5), o);
  EXPECT_TRUE(rep.has_code("RescaleLengths"));
}

TEST(CheckScenario, SignDefaultedWarning) {
  const auto rep = check_scenario(pair_at(0.5), paper_modes());
  EXPECT_TRUE(rep.has_code("SignDefaultedToMinus"));
  EXPECT_EQ(rep.verdict, Verdict::warned);
}

TEST(CheckScenario, ValidEscapeHasNoFindings) {
  const auto rep = check_scenario(radial_pair(3.5), consistent_b());
  EXPECT_TRUE(rep.findings.empty());
  EXPECT_EQ(rep.verdict, Verdict::valid);
  for (const auto& b : rep.bodies) {
    EXPECT_TRUE(b.constructible);
    EXPECT_FALSE(b.window_end.has_value());
  }
}

TEST(CheckScenario, CollisionAtT0) {
  auto o = consistent_b();
  o.collision_distance = 2.0;
  const auto rep = check_scenario(radial_pair(3.5), o);
  EXPECT_TRUE(rep.has_code("CollisionDetected"));
  EXPECT_EQ(rep.verdict, Verdict::invalid);
}

TEST(CheckScenario, NeverThrowsOnStructuralErrors) {
  SystemState<double> s;
  s.bodies = {{"only", 1.0, {1, 0}, {0, 0}}};
  ValidityReport rep;
  EXPECT_NO_THROW(rep = check_scenario(s));
  EXPECT_TRUE(rep.has_code("FewerThanTwoBodies"));
  EXPECT_EQ(rep.verdict, Verdict::invalid);

  SystemState<double> t;
  t.bodies = {{"a", 1, {0, 0}, {0, 0}}, {"b", 1, {1, 0}, {0, 0}}, {"c", 1, {-1, 0}, {0, 0}}};
  EXPECT_NO_THROW(rep = check_scenario(t));
  EXPECT_TRUE(rep.has_code("OriginSingularity"));
}

TEST(CheckScenario, Deterministic) {
  const auto a = check_scenario(pair_at(0.5, 0.1), paper_modes());
  const auto b = check_scenario(pair_at(0.5, 0.1), paper_modes());
  ASSERT_EQ(a.findings.size(), b.findings.size());
  for (std::size_t i = 0; i < a.findings.size(); ++i) {
    EXPECT_EQ(a.findings[i].code, b.findings[i].code);
    EXPECT_EQ(a.findings[i].detail, b.findings[i].detail);
  }
  EXPECT_EQ(a.verdict, b.verdict);
}

TEST(CheckTrajectory, RadialPairStaysCollinear) {
  const auto s = to_com_frame(radial_pair(3.5));
  std::vector<double> times;
  for (int i = 0; i <= 20; ++i) times.push_back(0.05 * i);
  const auto opts = consistent_b();
  const auto tracks = propagate_system(s, times, opts.propagation);
  const auto oracle = integrate_nbody(s, times);
  const auto rep = check_trajectory(check_scenario(s, opts), s, tracks, oracle, opts);
  for (const auto& b : rep.bodies) {
    EXPECT_EQ(b.collinearity_deviation_max, 0.0);
    EXPECT_EQ(b.force_deviation_max, 0.0);
    EXPECT_EQ(b.theta_dot_max, 0.0);
    EXPECT_TRUE(b.binomial_ok);
  }
  EXPECT_EQ(rep.verdict, Verdict::valid);
}

TEST(CheckTrajectory, BinomialCrossingRecorded) {
  const auto s = to_com_frame(radial_pair(-3.5));  // infall
  const auto opts = consistent_b();
  const auto base = check_scenario(s, opts);
  ASSERT_EQ(base.verdict, Verdict::valid);
  const double end = *base.bodies[0].window_end;
  std::vector<double> times;
  for (int i = 0; i < 200; ++i) times.push_back(end * i / 200.0);
  const auto tracks = propagate_system(s, times, opts.propagation);
  const auto rep = check_trajectory(base, s, tracks, {}, opts);
  const auto& b = rep.bodies[0];
  ASSERT_TRUE(b.binomial_violation_time.has_value());
  EXPECT_FALSE(b.binomial_ok);
  const double tstar = *b.binomial_violation_time;
  const auto& c = tracks[0].solution->constants();
  EXPECT_LE(tracks[0].solution->x(tstar) * c.B / c.A, 1.0);
  EXPECT_GT(tracks[0].solution->x(tstar - end / 200.0) * c.B / c.A, 1.0);
  EXPECT_TRUE(rep.has_code("BinomialViolatedAlongTrajectory"));
  EXPECT_EQ(rep.verdict, Verdict::warned);
}

TEST(CheckTrajectory, ThreeBodyCollinearityDrift) {
  SystemState<double> s;
  s.bodies = {{"a", 1.0, {-0.4, 0.0}, {-3.0, 0.0}},
              {"b", 1.0, {0.4, 0.0}, {3.0, 0.0}},
              {"c", 1.0, {0.0, 0.5}, {0.0, 3.0}}};
  s = to_com_frame(s);
  auto opts = consistent_b();
  opts.collinearity_warn = 1e-3;
  std::vector<double> times{0.0, 0.2, 0.4};
  const auto tracks = propagate_system(s, times, opts.propagation);
  const auto oracle = integrate_nbody(s, times);
  const auto rep = check_trajectory(check_scenario(s, opts), s, tracks, oracle, opts);
  // r_k and r_Mk are antiparallel in the COM frame by construction; the pull of
  // the separated companions is what leaves the line.
  EXPECT_LT(rep.bodies[0].collinearity_deviation_max, 1e-12);
  EXPECT_FALSE(rep.has_code("CollinearityDrift"));
  EXPECT_TRUE(rep.has_code("CompanionForceDrift"));
  EXPECT_GT(rep.bodies[0].force_deviation_max, 1e-3);
}
