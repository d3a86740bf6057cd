// SPDX-License-Identifier: Apache-2.0
#include "upright/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace upright {

TiltAngles::TiltAngles(double pitch_deg, double roll_deg) : pitch_(pitch_deg), roll_(roll_deg) {
    auto check = [](double v, const char* name) {
        if (!std::isfinite(v) || v < -90.0 || v > 90.0) {
            throw DomainError(std::string(name) + " must be finite and within [-90, 90] degrees, got " +
                              std::to_string(v));
        }
    };
    check(pitch_deg, "pitch");
    check(roll_deg, "roll");
}

double Vec3::norm() const { return std::sqrt(dot(*this)); }

Mat3 Mat3::transposed() const {
    Mat3 t;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) t(r, c) = (*this)(c, r);
    return t;
}

Mat3 Mat3::operator*(const Mat3& o) const {
    Mat3 out;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            double acc = 0.0;
            for (int i = 0; i < 3; ++i) acc += (*this)(r, i) * o(i, c);
            out(r, c) = acc;
        }
    }
    return out;
}

Vec3 Mat3::operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
}

double Mat3::orthonormality_residual() const {
    const Mat3 p = transposed() * (*this);
    double worst = 0.0;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(p(r, c) - (r == c ? 1.0 : 0.0)));
    return worst;
}

double Mat3::determinant() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Mat3 pitch_matrix(double pitch_deg) {
    const double a = deg_to_rad(pitch_deg);
    const double c = std::cos(a);
    const double s = std::sin(a);
    Mat3 r;
    r.m = {c, 0, s, 0, 1, 0, -s, 0, c};
    return r;
}

Mat3 roll_matrix(double roll_deg) {
    const double a = deg_to_rad(roll_deg);
    const double c = std::cos(a);
    const double s = std::sin(a);
    Mat3 r;
    r.m = {1, 0, 0, 0, c, -s, 0, s, c};
    return r;
}

Mat3 rotation_from_tilt(const TiltAngles& angles) {
    return roll_matrix(angles.roll()) * pitch_matrix(angles.pitch());
}

Vec3 orientation_vector(const TiltAngles& angles) {
    return rotation_from_tilt(angles) * Vec3{0.0, 0.0, 1.0};
}

double angle_error(const TiltAngles& a, const TiltAngles& b) {
    const double d = std::clamp(orientation_vector(a).dot(orientation_vector(b)), -1.0, 1.0);
    return rad_to_deg(std::acos(d));
}

EquirectGrid::EquirectGrid(int height, int width) : height_(height), width_(width) {
    if (height < 2 || width != 2 * height) {
        throw DomainError("equirectangular grid must satisfy width == 2*height and height >= 2, got " +
                          std::to_string(height) + "x" + std::to_string(width));
    }
}

Vec3 pixel_to_sphere(double u, double v, const EquirectGrid& grid) {
    if (!(u >= 0.0 && u < grid.width() && v >= 0.0 && v < grid.height())) {
        throw DomainError("pixel (" + std::to_string(u) + ", " + std::to_string(v) + ") outside grid");
    }
    const double lon = 2.0 * kPi * (u + 0.5) / grid.width() - kPi;
    const double lat = kPi / 2.0 - kPi * (v + 0.5) / grid.height();
    const double cl = std::cos(lat);
    return {cl * std::cos(lon), cl * std::sin(lon), std::sin(lat)};
}

PixelCoord sphere_to_pixel(const Vec3& dir, const EquirectGrid& grid) {
    const double n = dir.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("direction must be a non-zero finite vector");
    const double W = grid.width();
    const double H = grid.height();
    const double z = std::clamp(dir.z / n, -1.0, 1.0);
    const double lat = std::asin(z);
    const double y = (kPi / 2.0 - lat) * H / kPi - 0.5;
    if (dir.x == 0.0 && dir.y == 0.0) return {0.0, y};

    const double lon = std::atan2(dir.y, dir.x);
    double x = (lon + kPi) * W / (2.0 * kPi) - 0.5;
    if (x >= W - 0.5) x -= W;
    if (x < -0.5) x += W;
    return {x, y};
}

}  // namespace upright
