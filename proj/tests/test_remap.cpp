// SPDX-License-Identifier: Apache-2.0
#include "upright/metrics.hpp"
#include "upright/remap.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

using namespace upright;
using upright::testing::random_image;
using upright::testing::smooth_sphere_image;

TEST(Remap, IdentityLutReproducesInput) {
    const EquirectGrid g(16, 32);
    const Image img = random_image(g, 3, 1);
    const Lut id = identity_lut(g);
    const Image bil = remap(img, id, Interp::Bilinear);
    for (std::size_t i = 0; i < img.data().size(); ++i) ASSERT_NEAR(bil.data()[i], img.data()[i], 1e-6);
    EXPECT_TRUE(remap(img, id, Interp::Nearest) == img);
}

TEST(Remap, ConstantImageStaysConstant) {
    const EquirectGrid g(16, 32);
    const Image img(2, g, 0.37f);
    for (auto interp : {Interp::Nearest, Interp::Bilinear}) {
        const Image out = remap(img, generate_lut({41, -63}, g, LutDirection::ForwardTilt), interp);
        for (float v : out.data()) ASSERT_FLOAT_EQ(v, 0.37f);
    }
}

TEST(Remap, TiltRoundTripPsnr) {
    const EquirectGrid g(64, 128);
    const Image img = smooth_sphere_image(g, 3, 4);
    const TiltAngles a(15, 25);
    const Image tilted = rotate_image(img, a, LutDirection::ForwardTilt);
    const Image back = rotate_image(tilted, a, LutDirection::InverseUpright);
    EXPECT_GE(psnr(img, back), 30.0);
    // The forward tilt really moved things.
    EXPECT_LT(psnr(img, tilted), 30.0);
}

TEST(Remap, RotateImageIsGenerateThenRemap) {
    const EquirectGrid g(16, 32);
    const Image img = random_image(g, 3, 2);
    const TiltAngles a(-22, 71);
    for (auto interp : {Interp::Nearest, Interp::Bilinear}) {
        const Image one = rotate_image(img, a, LutDirection::InverseUpright, interp);
        const Image two = remap(img, generate_lut(a, g, LutDirection::InverseUpright), interp);
        EXPECT_TRUE(one == two);
    }
    const Image zero = rotate_image(img, {0, 0}, LutDirection::InverseUpright);
    for (std::size_t i = 0; i < img.data().size(); ++i) ASSERT_NEAR(zero.data()[i], img.data()[i], 1e-6);
}

TEST(Remap, OutputStaysWithinInputBounds) {
    const EquirectGrid g(16, 32);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-90, 90);
    for (int k = 0; k < 20; ++k) {
        const Image img = random_image(g, 1, 10 + k);
        const auto [lo, hi] = std::minmax_element(img.data().begin(), img.data().end());
        const Image out = remap(img, generate_lut({d(rng), d(rng)}, g, LutDirection::ForwardTilt));
        for (float v : out.data()) {
            ASSERT_GE(v, *lo);
            ASSERT_LE(v, *hi);
        }
    }
}

TEST(Remap, IsLinearInImageValues) {
    const EquirectGrid g(16, 32);
    const Image a = random_image(g, 2, 5);
    const Image b = random_image(g, 2, 6);
    const Lut lut = generate_lut({30, 12}, g, LutDirection::InverseUpright);
    const float alpha = 0.3f, beta = -1.7f;
    Image mix(2, g);
    for (std::size_t i = 0; i < mix.data().size(); ++i) mix.data()[i] = alpha * a.data()[i] + beta * b.data()[i];
    const Image ra = remap(a, lut), rb = remap(b, lut), rm = remap(mix, lut);
    for (std::size_t i = 0; i < rm.data().size(); ++i) {
        ASSERT_NEAR(rm.data()[i], alpha * ra.data()[i] + beta * rb.data()[i], 1e-6);
    }
}

TEST(Remap, ThreadCountDoesNotChangeOutput) {
    const EquirectGrid g(32, 64);
    const Image img = random_image(g, 3, 8);
    const Lut lut = generate_lut({-48, 5}, g, LutDirection::InverseUpright);
    const Image ref = remap(img, lut, Interp::Bilinear, 1);
    for (int t : {2, 3, 7, 64}) EXPECT_TRUE(remap(img, lut, Interp::Bilinear, t) == ref);
}

TEST(Remap, RejectsMismatchAndNan) {
    const Image img(1, EquirectGrid(8, 16));
    EXPECT_THROW(remap(img, identity_lut(EquirectGrid(4, 8))), DomainError);
    Lut lut = identity_lut(EquirectGrid(8, 16));
    lut.data()[3] = std::nanf("");
    EXPECT_THROW(remap(img, lut), DomainError);
}

TEST(ImageIo, UimgIsLosslessAndPpmQuantizes) {
    const EquirectGrid g(4, 8);
    const Image img = random_image(g, 3, 12);
    const auto dir = std::filesystem::temp_directory_path();
    write_image(img, dir / "upright_test.uimg");
    EXPECT_TRUE(read_image(dir / "upright_test.uimg") == img);
    write_image(img, dir / "upright_test.ppm");
    const Image q = read_image(dir / "upright_test.ppm");
    for (std::size_t i = 0; i < img.data().size(); ++i) ASSERT_NEAR(q.data()[i], img.data()[i], 0.5 / 255 + 1e-6);
    EXPECT_THROW(read_image(dir / "upright_test.png"), ImageFormatError);
    std::filesystem::remove(dir / "upright_test.uimg");
    std::filesystem::remove(dir / "upright_test.ppm");
}
