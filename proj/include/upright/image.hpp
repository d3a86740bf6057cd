// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "upright/geometry.hpp"

#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace upright {

/// Planar C x H x W float raster on an equirectangular grid. Images hold values in
/// [0, 1]; feature maps share the type and are unbounded.
class Image {
public:
    Image(int channels, EquirectGrid grid, float fill = 0.0f);
    Image(int channels, EquirectGrid grid, std::vector<float> data);

    int channels() const { return channels_; }
    const EquirectGrid& grid() const { return grid_; }
    int height() const { return grid_.height(); }
    int width() const { return grid_.width(); }

    std::span<const float> data() const { return data_; }
    std::span<float> data() { return data_; }
    std::span<const float> plane(int c) const;
    std::span<float> plane(int c);

    float at(int c, int y, int x) const { return data_[index(c, y, x)]; }
    float& at(int c, int y, int x) { return data_[index(c, y, x)]; }

    bool operator==(const Image&) const = default;

private:
    std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * height() + y) * width() + x;
    }

    int channels_;
    EquirectGrid grid_;
    std::vector<float> data_;
};

class ImageFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Binary PPM (P6, maxval 255). Values are clamped to [0, 1] and rounded on write.
void write_ppm(const Image& img, const std::filesystem::path& path);
Image read_ppm(const std::filesystem::path& path);

/// Lossless planar float format: "UIMG", u8 version = 1, C/H/W as u32 LE, then planes as f32 LE.
void write_uimg(const Image& img, const std::filesystem::path& path);
Image read_uimg(const std::filesystem::path& path);

/// Dispatch on extension: .ppm or .uimg.
Image read_image(const std::filesystem::path& path);
void write_image(const Image& img, const std::filesystem::path& path);

}  // namespace upright
