// SPDX-License-Identifier: Apache-2.0
#include "upright/metrics.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace upright;

TEST(Metrics, SelfComparison) {
    const Image img = upright::testing::random_image(EquirectGrid(16, 32), 3, 1);
    EXPECT_NEAR(ssim(img, img), 1.0, 1e-12);
    EXPECT_TRUE(std::isinf(psnr(img, img)));
    EXPECT_EQ(mse(img, img), 0.0);
}

TEST(Metrics, PsnrOfConstantOffset) {
    const EquirectGrid g(8, 16);
    const Image a(1, g, 0.25f);
    const Image b(1, g, 0.35f);
    EXPECT_NEAR(psnr(a, b), 20.0, 1e-5);
}

TEST(Metrics, SsimDropsWithNoise) {
    const EquirectGrid g(32, 64);
    const Image img = upright::testing::smooth_sphere_image(g, 1, 2);
    const Image noise = upright::testing::random_image(g, 1, 3);
    double prev = 1.0;
    for (float amp : {0.02f, 0.1f, 0.3f}) {
        Image n = img;
        for (std::size_t i = 0; i < n.data().size(); ++i) n.data()[i] += amp * (noise.data()[i] - 0.5f);
        const double s = ssim(img, n);
        EXPECT_LT(s, prev);
        prev = s;
    }
    EXPECT_THROW(ssim(Image(1, EquirectGrid(4, 8)), Image(1, EquirectGrid(4, 8))), DomainError);
}

TEST(Metrics, GaussianTapsNormalized) {
    const auto g = gaussian_taps(11, 1.5);
    double s = 0;
    for (double v : g) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(g[0], g[10]);
    EXPECT_GT(g[5], g[4]);
}

TEST(AccuracyTable, HandComputed) {
    const auto t = accuracy_table({0.5, 1.5, 3.5, 10.0});
    const std::vector<double> want{25, 50, 50, 75, 75, 100};
    ASSERT_EQ(t.percentages.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_DOUBLE_EQ(t.percentages[i], want[i]);
    EXPECT_EQ(t.samples, 4u);
    EXPECT_NE(t.format().find("100.0"), std::string::npos);
}

TEST(AccuracyTable, ThresholdIsInclusiveAndMonotone) {
    const auto t = accuracy_table({1.0, 2.0, 7.0, 30.0, 0.0}, {1, 2, 3, 4, 5, 12, 45});
    for (std::size_t i = 1; i < t.percentages.size(); ++i) EXPECT_GE(t.percentages[i], t.percentages[i - 1]);
    EXPECT_DOUBLE_EQ(t.percentages[0], 40.0);
    EXPECT_DOUBLE_EQ(t.percentages.back(), 100.0);
    EXPECT_THROW(accuracy_table({}), std::invalid_argument);
}
