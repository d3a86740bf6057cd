// SPDX-License-Identifier: Apache-2.0
#include "upright/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace upright;

namespace {

// Scratch single-axis matrices written out element by element, independent of geometry.cpp.
Mat3 scratch_product(double pitch_deg, double roll_deg) {
    const double p = pitch_deg * kPi / 180.0;
    const double r = roll_deg * kPi / 180.0;
    const double P[3][3] = {{std::cos(p), 0, std::sin(p)}, {0, 1, 0}, {-std::sin(p), 0, std::cos(p)}};
    const double Rr[3][3] = {{1, 0, 0}, {0, std::cos(r), -std::sin(r)}, {0, std::sin(r), std::cos(r)}};
    Mat3 out;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double acc = 0;
            for (int k = 0; k < 3; ++k) acc += Rr[i][k] * P[k][j];
            out(i, j) = acc;
        }
    return out;
}

}  // namespace

TEST(TiltAngles, RejectsOutOfRange) {
    EXPECT_THROW(TiltAngles(90.5, 0), DomainError);
    EXPECT_THROW(TiltAngles(0, -91), DomainError);
    EXPECT_THROW(TiltAngles(NAN, 0), DomainError);
    EXPECT_NO_THROW(TiltAngles(-90, 90));
}

TEST(Rotation, ZeroIsExactIdentity) {
    const Mat3 r = rotation_from_tilt({0, 0});
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_EQ(r(i, j), i == j ? 1.0 : 0.0);
}

TEST(Rotation, QuarterPitchSendsZenithToX) {
    const Vec3 v = rotation_from_tilt({90, 0}) * Vec3{0, 0, 1};
    EXPECT_NEAR(v.x, 1.0, 1e-15);
    EXPECT_NEAR(v.y, 0.0, 1e-15);
    EXPECT_NEAR(v.z, 0.0, 1e-15);
}

TEST(Rotation, MatchesScratchProduct) {
    const Mat3 r = rotation_from_tilt({30, 45});
    const Mat3 ref = scratch_product(30, 45);
    EXPECT_LE(r.orthonormality_residual(), 1e-9);
    for (int i = 0; i < 9; ++i) EXPECT_NEAR(r.m[i], ref.m[i], 1e-15);
}

TEST(Rotation, RandomAnglesOrthonormal) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> d(-90, 90);
    for (int i = 0; i < 500; ++i) {
        const Mat3 r = rotation_from_tilt({d(rng), d(rng)});
        EXPECT_LE(r.orthonormality_residual(), 1e-9);
        EXPECT_NEAR(r.determinant(), 1.0, 1e-9);
    }
}

TEST(OrientationVector, ClosedForms) {
    Vec3 v = orientation_vector({0, 0});
    EXPECT_EQ(v.x, 0.0);
    EXPECT_EQ(v.y, 0.0);
    EXPECT_EQ(v.z, 1.0);

    v = orientation_vector({90, 0});
    EXPECT_NEAR(v.x, 1.0, 1e-15);
    EXPECT_NEAR(v.z, 0.0, 1e-15);

    v = orientation_vector({30, 0});
    EXPECT_NEAR(v.x, 0.5, 1e-15);
    EXPECT_NEAR(v.y, 0.0, 1e-15);
    EXPECT_NEAR(v.z, std::sqrt(3.0) / 2.0, 1e-15);
    EXPECT_NEAR(v.norm(), 1.0, 1e-12);
}

TEST(AngleError, KnownValues) {
    EXPECT_NEAR(angle_error({17, -42}, {17, -42}), 0.0, 1e-6);
    EXPECT_NEAR(angle_error({30, 0}, {0, 0}), 30.0, 1e-12);
    // numpy: degrees(arccos((Rroll(20) Rpitch(20) e_z).z))
    EXPECT_NEAR(angle_error({20, 20}, {0, 0}), 27.99089071778283, 1e-10);
}

TEST(AngleError, MetricProperties) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> d(-90, 90);
    for (int i = 0; i < 200; ++i) {
        TiltAngles a{d(rng), d(rng)}, b{d(rng), d(rng)};
        const double ab = angle_error(a, b);
        EXPECT_GE(ab, 0.0);
        EXPECT_LE(ab, 180.0);
        EXPECT_DOUBLE_EQ(ab, angle_error(b, a));
    }
}

TEST(AngleError, PurePitchMakesPitchWithZenith) {
    for (int p = -90; p <= 90; ++p) {
        EXPECT_NEAR(angle_error({double(p), 0}, {0, 0}), std::abs(p), 1e-9);
    }
}

TEST(EquirectGrid, RejectsBadShapes) {
    EXPECT_THROW(EquirectGrid(1, 2), DomainError);
    EXPECT_THROW(EquirectGrid(4, 9), DomainError);
    EXPECT_NO_THROW(EquirectGrid(2, 4));
}

TEST(PixelSphere, EquatorMeridian) {
    const EquirectGrid g(4, 8);
    // u = W/2 - 0.5 and v = H/2 - 0.5 put the sample exactly at lon = 0, lat = 0.
    const Vec3 d = pixel_to_sphere(3.5, 1.5, g);
    EXPECT_NEAR(d.x, 1.0, 1e-15);
    EXPECT_NEAR(d.y, 0.0, 1e-15);
    EXPECT_NEAR(d.z, 0.0, 1e-15);
    const PixelCoord p = sphere_to_pixel({1, 0, 0}, g);
    EXPECT_NEAR(p.x, 3.5, 1e-12);
    EXPECT_NEAR(p.y, 1.5, 1e-12);
}

TEST(PixelSphere, TopRowOnTwoByFour) {
    const EquirectGrid g(2, 4);
    const Vec3 d = pixel_to_sphere(0, 0, g);
    const double lat = kPi / 4, lon = 2 * kPi * 0.5 / 4 - kPi;
    EXPECT_NEAR(d.x, std::cos(lat) * std::cos(lon), 1e-15);
    EXPECT_NEAR(d.y, std::cos(lat) * std::sin(lon), 1e-15);
    EXPECT_NEAR(d.z, std::sin(lat), 1e-15);
}

TEST(PixelSphere, RejectsOutOfGrid) {
    const EquirectGrid g(4, 8);
    EXPECT_THROW(pixel_to_sphere(8, 0, g), DomainError);
    EXPECT_THROW(pixel_to_sphere(0, -0.1, g), DomainError);
    EXPECT_THROW(sphere_to_pixel({0, 0, 0}, g), DomainError);
}

TEST(PixelSphere, PoleConvention) {
    const EquirectGrid g(4, 8);
    const PixelCoord p = sphere_to_pixel({0, 0, 1}, g);
    EXPECT_EQ(p.x, 0.0);
    EXPECT_NEAR(p.y, -0.5, 1e-12);
    const PixelCoord s = sphere_to_pixel({0, 0, -1}, g);
    EXPECT_EQ(s.x, 0.0);
    EXPECT_NEAR(s.y, 3.5, 1e-12);
}

TEST(PixelSphere, RoundTripAllPixels) {
    const EquirectGrid g(4, 8);
    for (int v = 0; v < g.height(); ++v)
        for (int u = 0; u < g.width(); ++u) {
            const PixelCoord p = sphere_to_pixel(pixel_to_sphere(u, v, g), g);
            EXPECT_NEAR(p.x, u, 1e-9);
            EXPECT_NEAR(p.y, v, 1e-9);
        }
}

TEST(PixelSphere, RandomDirectionsRoundTrip) {
    const EquirectGrid g(32, 64);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0, 1);
    for (int i = 0; i < 1000; ++i) {
        Vec3 d{n(rng), n(rng), n(rng)};
        const double len = d.norm();
        d = {d.x / len, d.y / len, d.z / len};
        const PixelCoord p = sphere_to_pixel(d, g);
        ASSERT_GE(p.x, -0.5);
        ASSERT_LT(p.x, g.width() - 0.5);
        if (p.y < 0.0) continue;  // north cap above the first pixel center row boundary
        const Vec3 back = pixel_to_sphere(p.x < 0 ? p.x + g.width() : p.x, p.y, g);
        EXPECT_NEAR(back.x, d.x, 1e-9);
        EXPECT_NEAR(back.y, d.y, 1e-9);
        EXPECT_NEAR(back.z, d.z, 1e-9);
    }
}
