// SPDX-License-Identifier: Apache-2.0
#include "upright/image.hpp"

#include "upright/binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

namespace upright {

Image::Image(int channels, EquirectGrid grid, float fill)
    : channels_(channels), grid_(grid), data_(static_cast<std::size_t>(channels) * grid.pixels(), fill) {
    if (channels < 1) throw DomainError("image needs at least one channel");
}

Image::Image(int channels, EquirectGrid grid, std::vector<float> data)
    : channels_(channels), grid_(grid), data_(std::move(data)) {
    if (channels < 1) throw DomainError("image needs at least one channel");
    if (data_.size() != static_cast<std::size_t>(channels) * grid.pixels()) {
        throw DomainError("image payload size does not match C*H*W");
    }
}

std::span<const float> Image::plane(int c) const {
    return std::span<const float>(data_).subspan(static_cast<std::size_t>(c) * grid_.pixels(), grid_.pixels());
}

std::span<float> Image::plane(int c) {
    return std::span<float>(data_).subspan(static_cast<std::size_t>(c) * grid_.pixels(), grid_.pixels());
}

void write_ppm(const Image& img, const std::filesystem::path& path) {
    if (img.channels() != 3 && img.channels() != 1) {
        throw ImageFormatError("PPM output needs 1 or 3 channels, got " + std::to_string(img.channels()));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ImageFormatError("cannot open " + path.string() + " for writing");
    out << "P6\n" << img.width() << " " << img.height() << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(img.width()) * 3);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < 3; ++c) {
                const float v = img.at(img.channels() == 3 ? c : 0, y, x);
                const float q = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f);
                row[static_cast<std::size_t>(x) * 3 + c] = static_cast<unsigned char>(q);
            }
        }
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw ImageFormatError("short write to " + path.string());
}

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

}  // namespace

Image read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageFormatError("cannot open " + path.string());
    if (next_token(in) != "P6") throw ImageFormatError(path.string() + ": not a binary PPM (P6)");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_token(in));
        h = std::stoi(next_token(in));
        maxval = std::stoi(next_token(in));
    } catch (const std::exception&) {
        throw ImageFormatError(path.string() + ": malformed PPM header");
    }
    if (maxval != 255) throw ImageFormatError(path.string() + ": only 8-bit PPM is supported");
    if (h < 2 || w != 2 * h) {
        throw ImageFormatError(path.string() + ": panorama must be 2:1, got " + std::to_string(w) + "x" +
                               std::to_string(h));
    }
    const EquirectGrid grid(h, w);
    Image img(3, grid);
    std::vector<unsigned char> buf(grid.pixels() * 3);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
        throw ImageFormatError(path.string() + ": truncated PPM payload");
    }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(c, y, x) = buf[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0f;
    return img;
}

void write_uimg(const Image& img, const std::filesystem::path& path) {
    binio::Writer w;
    w.bytes("UIMG", 4);
    w.u8(1);
    w.u32(static_cast<std::uint32_t>(img.channels()));
    w.u32(static_cast<std::uint32_t>(img.height()));
    w.u32(static_cast<std::uint32_t>(img.width()));
    w.f32s(img.data());
    binio::write_file(path.string(), w.buffer());
}

Image read_uimg(const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes;
    try {
        bytes = binio::read_file(path.string());
    } catch (const std::exception& e) {
        throw ImageFormatError(e.what());
    }
    binio::Reader r(bytes);
    char magic[4];
    std::uint8_t version = 0;
    std::uint32_t c = 0, h = 0, w = 0;
    if (!r.bytes(magic, 4) || std::string(magic, 4) != "UIMG") throw ImageFormatError(path.string() + ": bad magic");
    if (!r.u8(version) || !r.u32(c) || !r.u32(h) || !r.u32(w)) throw ImageFormatError(path.string() + ": truncated header");
    if (version != 1) throw ImageFormatError(path.string() + ": unsupported UIMG version");
    if (c < 1 || c > 4096 || h < 2 || w != 2 * h || h > (1u << 15)) {
        throw ImageFormatError(path.string() + ": invalid UIMG shape");
    }
    const EquirectGrid grid(static_cast<int>(h), static_cast<int>(w));
    std::vector<float> data(static_cast<std::size_t>(c) * grid.pixels());
    if (!r.f32s(data)) throw ImageFormatError(path.string() + ": truncated UIMG payload");
    if (r.remaining() != 0) throw ImageFormatError(path.string() + ": trailing bytes");
    for (float v : data) {
        if (!std::isfinite(v)) throw ImageFormatError(path.string() + ": non-finite value in payload");
    }
    return Image(static_cast<int>(c), grid, std::move(data));
}

Image read_image(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".ppm") return read_ppm(path);
    if (ext == ".uimg") return read_uimg(path);
    throw ImageFormatError("unknown image extension '" + ext + "' (expected .ppm or .uimg)");
}

void write_image(const Image& img, const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".ppm") return write_ppm(img, path);
    if (ext == ".uimg") return write_uimg(img, path);
    throw ImageFormatError("unknown image extension '" + ext + "' (expected .ppm or .uimg)");
}

}  // namespace upright
