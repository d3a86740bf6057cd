// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "upright/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace upright {

/// ForwardTilt turns an upright panorama into a tilted one (dataset synthesis);
/// InverseUpright undoes the tilt (adjustment).
enum class LutDirection : std::uint8_t { ForwardTilt = 0, InverseUpright = 1 };

const char* to_string(LutDirection d);
LutDirection parse_lut_direction(const std::string& s);

/// Destination-indexed table of normalized source coordinates.
///
/// Layout is planar: channel 0 (x) for all pixels, then channel 1 (y), row-major.
/// A normalized value n maps to the continuous source pixel (n + 1) / 2 * extent - 0.5.
class Lut {
public:
    Lut(EquirectGrid grid, LutDirection direction, TiltAngles angles = {});
    /// Adopts `data` after checking its size and the [-1, 1] range.
    Lut(EquirectGrid grid, LutDirection direction, TiltAngles angles, std::vector<float> data);

    const EquirectGrid& grid() const { return grid_; }
    int height() const { return grid_.height(); }
    int width() const { return grid_.width(); }
    LutDirection direction() const { return direction_; }
    const TiltAngles& angles() const { return angles_; }

    std::span<const float> data() const { return data_; }
    std::span<float> data() { return data_; }
    std::span<const float> channel(int c) const;
    std::span<float> channel(int c);

    float x(int row, int col) const { return data_[static_cast<std::size_t>(row) * width() + col]; }
    float y(int row, int col) const { return data_[grid_.pixels() + static_cast<std::size_t>(row) * width() + col]; }

    std::size_t payload_bytes() const { return data_.size() * sizeof(float); }

    bool operator==(const Lut&) const = default;

private:
    EquirectGrid grid_;
    LutDirection direction_;
    TiltAngles angles_;
    std::vector<float> data_;
};

/// Normalized coordinate of a continuous pixel position along an axis of `extent` pixels.
inline double normalize_coord(double pixel, int extent) { return 2.0 * (pixel + 0.5) / extent - 1.0; }
inline double denormalize_coord(double norm, int extent) { return (norm + 1.0) / 2.0 * extent - 0.5; }

/// Analytic LUT: rotate each destination direction by R (ForwardTilt) or R^T (InverseUpright).
Lut generate_lut(const TiltAngles& angles, const EquirectGrid& grid, LutDirection direction);

/// The zero-rotation LUT, written directly from the closed-form ramps.
Lut identity_lut(const EquirectGrid& grid, LutDirection direction = LutDirection::InverseUpright);

struct StorageReport {
    std::uint64_t entries = 0;
    std::uint64_t values_per_entry = 0;
    std::uint64_t bytes_f32 = 0;
    std::uint64_t bytes_f16 = 0;
    std::uint64_t file_bytes_f32 = 0;  // including the per-file header

    double gib_f32() const { return static_cast<double>(bytes_f32) / (1024.0 * 1024.0 * 1024.0); }
    double gib_f16() const { return static_cast<double>(bytes_f16) / (1024.0 * 1024.0 * 1024.0); }
};

/// Angle lattice [min, max] with `step`; count per axis must be an integer.
struct AngleLattice {
    double angle_min = -90.0;
    double angle_max = 90.0;
    double step = 1.0;

    /// Throws DomainError for a non-positive step, endpoints outside [-90, 90],
    /// or a range that is not an integer multiple of the step.
    int count() const;
    double at(int index) const { return angle_min + index * step; }
};

StorageReport grid_storage(const AngleLattice& lattice, const EquirectGrid& grid);

/// Fully populated pitch-major LUT grid.
struct LutGrid {
    AngleLattice lattice;
    EquirectGrid grid;
    LutDirection direction;
    std::map<std::pair<int, int>, Lut> entries;  // (pitch index, roll index)
    StorageReport storage;
};

/// Builds every entry in memory. `threads` > 1 parallelizes per entry; the result does not depend on it.
LutGrid precompute_grid(const AngleLattice& lattice, const EquirectGrid& grid, LutDirection direction,
                        int threads = 1);

enum class UpsampleMode { Bilinear, Nearest };

/// Upsamples a coarse LUT by `factor`. Bilinear mode unwraps channel 0 across the
/// longitude seam, interpolates with wrap-around horizontally and linear extension
/// vertically, then re-wraps into [-1, 1).
Lut upsample_lut(const Lut& coarse, int factor, UpsampleMode mode = UpsampleMode::Bilinear);

/// Analytic LUT at `coarse_grid` upsampled by `factor`.
Lut coarse_then_upsample(const TiltAngles& angles, const EquirectGrid& coarse_grid, int factor,
                         LutDirection direction = LutDirection::InverseUpright,
                         UpsampleMode mode = UpsampleMode::Bilinear);

struct LutErrorReport {
    double mean_abs_error = 0.0;
    double max_abs_error = 0.0;
    double psnr_db[2] = {0.0, 0.0};  // per channel, peak-to-peak 2; +inf when identical
    int worst_x = 0;
    int worst_y = 0;
};

/// L1 comparison: mean over all 2*H*W values, max, per-channel PSNR and argmax pixel.
LutErrorReport lut_error(const Lut& a, const Lut& b);

// ULUT binary format.

/// Raised by load_lut for malformed files.
class LutFormatError : public std::runtime_error {
public:
    enum class Kind { Io, Header, Truncated, Range };
    LutFormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

inline constexpr std::size_t kLutHeaderBytes = 4 + 1 + 1 + 4 + 4 + 4 + 4;

void save_lut(const Lut& lut, const std::filesystem::path& path);
Lut load_lut(const std::filesystem::path& path);

}  // namespace upright
