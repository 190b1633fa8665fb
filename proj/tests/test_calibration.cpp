#include <gtest/gtest.h>

#include "mintdro/calibration.hpp"

using namespace mintdro;

TEST(Calibration, Gamma1Regression) {
  CalibrationInput c{128, 5, 256.0, 0.05, 0.05};
  EXPECT_NEAR(calibrate_gamma1(c), 1012.8615357353601, 1e-9);
  EXPECT_EQ(static_cast<long long>(calibrate_gamma1(c)), 1012);
  CalibrationInput d{500, 5, 1000.0, 0.05, 0.05};
  EXPECT_NEAR(calibrate_gamma1(d), 3956.4903739662504, 1e-9);
  EXPECT_EQ(static_cast<long long>(calibrate_gamma1(d)), 3956);
}

TEST(Calibration, Gamma1Monotone) {
  CalibrationInput c{10, 5, 4.0, 0.05, 0.05};
  const double base = calibrate_gamma1(c);
  c.delta1 = 0.01;
  EXPECT_GT(calibrate_gamma1(c), base);
  c.delta1 = 0.05;
  c.m_samples = 50;
  EXPECT_LT(calibrate_gamma1(c), base);
  c.m_samples = 5;
  c.r2 = 8.0;
  EXPECT_DOUBLE_EQ(calibrate_gamma1(c), 2.0 * base);
}

TEST(Calibration, Gamma2ValidWithManySamples) {
  CalibrationInput c{4, 1000000, 4.0, 0.05, 0.05};
  const Gamma2Bound b = calibrate_gamma2(c);
  ASSERT_TRUE(b.valid);
  EXPECT_NEAR(b.alpha, 0.010387375145546896, 1e-15);
  EXPECT_NEAR(b.value, 1.0104964052445011, 1e-13);
}

TEST(Calibration, Gamma2InvalidCases) {
  CalibrationInput few{128, 5, 256.0, 0.05, 0.05};
  EXPECT_FALSE(calibrate_gamma2(few).valid);
  CalibrationInput small_radius{128, 5, 4.0, 0.05, 0.05};
  EXPECT_FALSE(calibrate_gamma2(small_radius).valid);
  EXPECT_TRUE(std::isnan(calibrate_gamma2(small_radius).alpha));
}

TEST(Calibration, InputValidation) {
  EXPECT_THROW(calibrate_gamma1({0, 5, 1.0, 0.05, 0.05}), std::invalid_argument);
  EXPECT_THROW(calibrate_gamma1({4, 5, 1.0, 1.0, 0.05}), std::invalid_argument);
  EXPECT_THROW(calibrate_gamma1({4, 5, 0.0, 0.05, 0.05}), std::invalid_argument);
}

TEST(Calibration, FailureProbability) {
  EXPECT_DOUBLE_EQ(failure_probability(0.05, 0.05).value, 0.1);
  EXPECT_FALSE(failure_probability(0.05, 0.05).capped);
  const auto fp = failure_probability(0.7, 0.6);
  EXPECT_DOUBLE_EQ(fp.value, 1.0);
  EXPECT_TRUE(fp.capped);
  EXPECT_THROW(failure_probability(-0.1, 0.1), std::invalid_argument);
}
