#include <gtest/gtest.h>

#include "qaf2d/prompt_layout.hpp"

namespace qaf2d {
namespace {

TEST(PromptParams, HalfTauCoversTheMap) {
  EXPECT_EQ(prompt_param_count({1, 10, 10, 0.5}), 100.0);
  EXPECT_EQ(prompt_param_count({256, 32, 88, 0.5}), 256.0 * 32 * 88);
  EXPECT_EQ(prompt_param_count_floor({256, 32, 88, 0.5}), 256 * 32 * 88);
}

TEST(PromptParams, WorkedExample) {
  EXPECT_NEAR(prompt_param_count({256, 32, 88, 0.2}), 461373.44, 1e-6);
  // Floors: tau*H = 6, tau*W = 17; 2*256*6*88 + 2*256*20*17.
  EXPECT_EQ(prompt_param_count_floor({256, 32, 88, 0.2}), 2 * 256 * 6 * 88 + 2 * 256 * 20 * 17);
}

TEST(PromptParams, VanishesAsTauShrinks) {
  EXPECT_LT(prompt_param_count({256, 32, 88, 1e-9}), 1.0);
}

TEST(PromptParams, InvalidShapes) {
  EXPECT_THROW(prompt_param_count({1, 10, 10, 0.0}), ConfigError);
  EXPECT_THROW(prompt_param_count({1, 10, 10, 0.51}), ConfigError);
  EXPECT_THROW(prompt_param_count({0, 10, 10, 0.2}), ConfigError);
  EXPECT_THROW(prompt_param_count_floor({1, 0, 10, 0.2}), ConfigError);
}

TEST(PromptParams, MonotoneRatioLawAndLinearity) {
  double prev = 0.0;
  for (int i = 1; i <= 50; ++i) {
    const double tau = 0.01 * i;
    const double v = prompt_param_count({64, 20, 50, tau});
    EXPECT_GT(v, prev);
    prev = v;
    const double ref = prompt_param_count({64, 20, 50, 0.3});
    EXPECT_NEAR(v / ref, tau * (1 - tau) / (0.3 * 0.7), 1e-12);
    EXPECT_NEAR(prompt_param_count({192, 20, 50, tau}), 3 * v, 1e-9 * v);
  }
}

}  // namespace
}  // namespace qaf2d
