// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>

namespace upright {

/// Raised when a value violates a domain invariant (angle range, grid shape, ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg_to_rad(double deg) { return deg * (kPi / 180.0); }
constexpr double rad_to_deg(double rad) { return rad * (180.0 / kPi); }

/// Camera tilt in degrees. Yaw is not represented: it does not affect uprightness.
class TiltAngles {
public:
    TiltAngles() = default;
    /// Throws DomainError unless both components are finite and within [-90, 90].
    TiltAngles(double pitch_deg, double roll_deg);

    double pitch() const { return pitch_; }
    double roll() const { return roll_; }

    bool operator==(const TiltAngles&) const = default;

private:
    double pitch_ = 0.0;
    double roll_ = 0.0;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const;
};

/// 3x3 row-major matrix.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    double operator()(int r, int c) const { return m[3 * r + c]; }
    double& operator()(int r, int c) { return m[3 * r + c]; }

    Mat3 transposed() const;
    Mat3 operator*(const Mat3& o) const;
    Vec3 operator*(const Vec3& v) const;

    /// max |R^T R - I| entry.
    double orthonormality_residual() const;
    double determinant() const;

    static Mat3 identity() { return Mat3{}; }

    bool operator==(const Mat3&) const = default;
};

/// Rotation about the y axis (pitch) and the x axis (roll); x forward, y left, z up.
Mat3 pitch_matrix(double pitch_deg);
Mat3 roll_matrix(double roll_deg);

/// R = R_roll * R_pitch. R(0, 0) is exactly the identity.
Mat3 rotation_from_tilt(const TiltAngles& angles);

/// Image of the zenith (0, 0, 1) under rotation_from_tilt.
Vec3 orientation_vector(const TiltAngles& angles);

/// Angle in degrees between the orientation vectors of a and b, in [0, 180].
double angle_error(const TiltAngles& a, const TiltAngles& b);

/// Equirectangular raster geometry: width == 2 * height, height >= 2.
class EquirectGrid {
public:
    EquirectGrid(int height, int width);
    explicit EquirectGrid(int height) : EquirectGrid(height, 2 * height) {}

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t pixels() const { return static_cast<std::size_t>(height_) * width_; }

    bool operator==(const EquirectGrid&) const = default;

private:
    int height_;
    int width_;
};

struct PixelCoord {
    double x = 0.0;
    double y = 0.0;
};

/// Pixel-center convention: lon = 2*pi*(u + 0.5)/W - pi, lat = pi/2 - pi*(v + 0.5)/H.
/// Accepts continuous coordinates in [0, W) x [0, H); throws DomainError outside.
Vec3 pixel_to_sphere(double u, double v, const EquirectGrid& grid);

/// Inverse of pixel_to_sphere. x is wrapped into [-0.5, W - 0.5) so that the normalized
/// coordinate stays in [-1, 1); y lies in [-0.5, H - 0.5]. At the poles x = 0.
/// Non-unit input is normalized; the zero vector is rejected.
PixelCoord sphere_to_pixel(const Vec3& dir, const EquirectGrid& grid);

}  // namespace upright
