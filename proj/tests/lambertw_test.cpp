#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Core>

#include "nbody/lambertw.hpp"

using namespace nbody;

namespace {

constexpr double kE = std::numbers::e;

// Independent oracle: bisection of w e^w = z on a bracket where it is monotone.
double bisect_w(double z, double lo, double hi) {
  auto f = [z](double w) { return w * std::exp(w) - z; };
  double flo = f(lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

ErrorKind kind_of_w(BranchId b, double z) {
  try {
    lambert_w(b, z);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown for z = " << z;
  return ErrorKind::IoError;
}

}  // namespace

TEST(LambertW, ExactValues) {
  EXPECT_EQ(lambert_w(BranchId::principal, 0.0), 0.0);
  EXPECT_NEAR(lambert_w(BranchId::principal, kE), 1.0, 1e-15);
  EXPECT_EQ(lambert_w(BranchId::minus_one, -1.0 / kE), -1.0);
  EXPECT_EQ(lambert_w(BranchId::principal, -1.0 / kE), -1.0);
}

TEST(LambertW, PrincipalAtOneMatchesBisection) {
  const double oracle = bisect_w(1.0, 0.0, 1.0);
  EXPECT_NEAR(oracle, 0.5671432904097838, 1e-13);
  EXPECT_NEAR(lambert_w(BranchId::principal, 1.0), oracle, 1e-13);
}

TEST(LambertW, MinusOneAtMinusTenthMatchesBisection) {
  const double oracle = bisect_w(-0.1, -10.0, -1.0);
  const double w = lambert_w(BranchId::minus_one, -0.1);
  EXPECT_LT(w, -1.0);
  EXPECT_NEAR(w, oracle, 1e-13);
  EXPECT_NEAR(w, -3.577152063957297, 1e-13);
}

TEST(LambertW, BisectionSweepBothBranches) {
  for (double z : {-0.367, -0.3, -0.2, -0.05, -1e-3, 1e-6, 0.5, 2.0, 10.0, 1e3}) {
    const double w = lambert_w(BranchId::principal, z);
    EXPECT_NEAR(w, bisect_w(z, -1.0, 20.0), 1e-12 * (1 + std::abs(w))) << z;
  }
  for (double z : {-0.367, -0.3, -0.2, -0.05, -1e-3, -1e-10, -1e-100}) {
    const double w = lambert_w(BranchId::minus_one, z);
    EXPECT_NEAR(w, bisect_w(z, -300.0, -1.0), 1e-12 * (1 + std::abs(w))) << z;
  }
}

TEST(LambertW, NearBranchPointResidual) {
  for (double d : {1e-15, 1e-12, 1e-9, 1e-6, 1e-4, 1e-3}) {
    const double z = -1.0 / kE + d;
    for (auto b : {BranchId::principal, BranchId::minus_one}) {
      const double w = lambert_w(b, z);
      EXPECT_LE(std::abs(w * std::exp(w) - z), 1e-15) << d;
      if (b == BranchId::principal) {
        EXPECT_GE(w, -1.0);
      } else {
        EXPECT_LE(w, -1.0);
      }
    }
  }
}

TEST(LambertW, DomainErrors) {
  EXPECT_EQ(kind_of_w(BranchId::principal, -0.5), ErrorKind::DomainError);
  EXPECT_EQ(kind_of_w(BranchId::minus_one, 0.0), ErrorKind::DomainError);
  EXPECT_EQ(kind_of_w(BranchId::minus_one, 0.5), ErrorKind::DomainError);
  EXPECT_EQ(kind_of_w(BranchId::minus_one, -0.4), ErrorKind::DomainError);
  EXPECT_EQ(kind_of_w(BranchId::principal, std::nan("")), ErrorKind::DomainError);
}

TEST(LambertW, NegExpFormsAgreeWithDirect) {
  for (double L : {1.0, 1.001, 1.5, 3.0, 10.0, 40.0}) {
    const double z = -std::exp(-L);
    EXPECT_NEAR(lambert_wm1_neg_exp(L), lambert_w(BranchId::minus_one, z),
                1e-13 * std::abs(lambert_wm1_neg_exp(L)));
    EXPECT_NEAR(lambert_w0_neg_exp(L), lambert_w(BranchId::principal, z), 1e-14);
  }
}

TEST(LambertW, NegExpNearBranchPoint) {
  // Forming z = -e^{-L} here loses digits that the branch point amplifies; the
  // log form is checked against its own defining relation instead.
  for (double eps : {1e-14, 1e-10, 1e-6}) {
    const double L = 1.0 + eps;
    const double u = -lambert_wm1_neg_exp(L);
    const double v = -lambert_w0_neg_exp(L);
    EXPECT_GE(u, 1.0);
    EXPECT_LE(v, 1.0);
    EXPECT_NEAR(u - std::log(u), L, 4e-16);
    EXPECT_NEAR(v - std::log(v), L, 4e-16);
  }
}

TEST(LambertW, NegExpBeyondUnderflow) {
  const double L = 2000.0;  // e^{-L} underflows
  const double w = lambert_wm1_neg_exp(L);
  // u - ln u = L with u = -w
  EXPECT_NEAR(-w - std::log(-w), L, 1e-12 * L);
  EXPECT_THROW(lambert_wm1_neg_exp(0.5), Error);
}

TEST(LambertWDerivative, Values) {
  EXPECT_NEAR(lambert_w_derivative(BranchId::principal, kE), 1.0 / (2.0 * kE), 1e-15);
  EXPECT_EQ(lambert_w_derivative(BranchId::principal, 0.0), 1.0);
  const double z = -0.1;
  const double d = 1e-6 * std::abs(z);
  const double fd = (lambert_w(BranchId::minus_one, z + d) -
                     lambert_w(BranchId::minus_one, z - d)) / (2 * d);
  const double an = lambert_w_derivative(BranchId::minus_one, z);
  EXPECT_NEAR(an, fd, 1e-6 * std::abs(an));
}

TEST(LambertWDerivative, BranchPointSingularity) {
  try {
    lambert_w_derivative(BranchId::minus_one, -1.0 / kE);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BranchPointSingularity);
  }
}

TEST(LambertW, Monotone) {
  double prev0 = -2.0, prev1 = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double z = -1.0 / kE + 1e-12 + (1.0 / kE - 1e-12 - 1e-9) * i / 400.0;
    const double w0 = lambert_w(BranchId::principal, z);
    const double w1 = lambert_w(BranchId::minus_one, std::min(z, -1e-300));
    EXPECT_GE(w0, prev0);
    EXPECT_LE(w1, prev1);
    prev0 = w0;
    prev1 = w1;
  }
}

TEST(LambertW, EigenArrayOverload) {
  Eigen::ArrayXd z(3);
  z << 0.0, 1.0, kE;
  const Eigen::ArrayXd w = lambert_w(BranchId::principal, z);
  EXPECT_EQ(w(0), 0.0);
  EXPECT_NEAR(w(1), 0.5671432904097838, 1e-15);
  EXPECT_NEAR(w(2), 1.0, 1e-15);
}

TEST(LambertW, LongDoubleAndFloat) {
  EXPECT_NEAR(static_cast<double>(lambert_w(BranchId::principal, 1.0L)),
              0.5671432904097838, 1e-15);
  EXPECT_NEAR(lambert_w(BranchId::minus_one, -0.1f), -3.5771521f, 1e-5f);
}
