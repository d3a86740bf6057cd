// SPDX-License-Identifier: Apache-2.0
#include "upright/lut.hpp"

#include "upright/binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <thread>

namespace upright {

namespace binio {

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path + " for reading");
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("short write to " + path);
}

}  // namespace binio

const char* to_string(LutDirection d) {
    return d == LutDirection::ForwardTilt ? "fwd" : "inv";
}

LutDirection parse_lut_direction(const std::string& s) {
    if (s == "fwd" || s == "forward" || s == "ForwardTilt") return LutDirection::ForwardTilt;
    if (s == "inv" || s == "inverse" || s == "InverseUpright") return LutDirection::InverseUpright;
    throw DomainError("unknown LUT direction '" + s + "' (expected fwd|inv)");
}

Lut::Lut(EquirectGrid grid, LutDirection direction, TiltAngles angles)
    : grid_(grid), direction_(direction), angles_(angles), data_(2 * grid.pixels(), 0.0f) {}

Lut::Lut(EquirectGrid grid, LutDirection direction, TiltAngles angles, std::vector<float> data)
    : grid_(grid), direction_(direction), angles_(angles), data_(std::move(data)) {
    if (data_.size() != 2 * grid_.pixels()) throw DomainError("LUT payload size does not match 2*H*W");
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!(data_[i] >= -1.0f && data_[i] <= 1.0f)) {
            throw DomainError("LUT value at index " + std::to_string(i) + " outside [-1, 1]");
        }
    }
}

std::span<const float> Lut::channel(int c) const {
    return std::span<const float>(data_).subspan(static_cast<std::size_t>(c) * grid_.pixels(), grid_.pixels());
}

std::span<float> Lut::channel(int c) {
    return std::span<float>(data_).subspan(static_cast<std::size_t>(c) * grid_.pixels(), grid_.pixels());
}

Lut identity_lut(const EquirectGrid& grid, LutDirection direction) {
    Lut lut(grid, direction);
    const int H = grid.height();
    const int W = grid.width();
    auto cx = lut.channel(0);
    auto cy = lut.channel(1);
    for (int v = 0; v < H; ++v) {
        const auto ny = static_cast<float>(normalize_coord(v, H));
        for (int u = 0; u < W; ++u) {
            cx[static_cast<std::size_t>(v) * W + u] = static_cast<float>(normalize_coord(u, W));
            cy[static_cast<std::size_t>(v) * W + u] = ny;
        }
    }
    return lut;
}

Lut generate_lut(const TiltAngles& angles, const EquirectGrid& grid, LutDirection direction) {
    Mat3 rot = rotation_from_tilt(angles);
    if (rot == Mat3::identity()) {
        Lut lut = identity_lut(grid, direction);
        return Lut(grid, direction, angles, std::vector<float>(lut.data().begin(), lut.data().end()));
    }
    if (direction == LutDirection::InverseUpright) rot = rot.transposed();

    const int H = grid.height();
    const int W = grid.width();
    // Per-row and per-column trig, same expressions as pixel_to_sphere.
    std::vector<double> cos_lon(W), sin_lon(W), cos_lat(H), sin_lat(H);
    for (int u = 0; u < W; ++u) {
        const double lon = 2.0 * kPi * (u + 0.5) / W - kPi;
        cos_lon[u] = std::cos(lon);
        sin_lon[u] = std::sin(lon);
    }
    for (int v = 0; v < H; ++v) {
        const double lat = kPi / 2.0 - kPi * (v + 0.5) / H;
        cos_lat[v] = std::cos(lat);
        sin_lat[v] = std::sin(lat);
    }

    Lut lut(grid, direction, angles);
    auto cx = lut.channel(0);
    auto cy = lut.channel(1);
    for (int v = 0; v < H; ++v) {
        for (int u = 0; u < W; ++u) {
            const Vec3 d{cos_lat[v] * cos_lon[u], cos_lat[v] * sin_lon[u], sin_lat[v]};
            const PixelCoord s = sphere_to_pixel(rot * d, grid);
            const std::size_t i = static_cast<std::size_t>(v) * W + u;
            cx[i] = static_cast<float>(std::clamp(normalize_coord(s.x, W), -1.0, 1.0));
            cy[i] = static_cast<float>(std::clamp(normalize_coord(s.y, H), -1.0, 1.0));
        }
    }
    return lut;
}

int AngleLattice::count() const {
    if (!(step > 0.0) || !std::isfinite(step)) throw DomainError("lattice step must be positive");
    if (angle_min < -90.0 || angle_max > 90.0 || angle_min > angle_max) {
        throw DomainError("lattice range must satisfy -90 <= min <= max <= 90");
    }
    const double n = (angle_max - angle_min) / step;
    const double rounded = std::round(n);
    if (std::abs(n - rounded) > 1e-9) {
        throw DomainError("lattice range is not an integer multiple of the step");
    }
    return static_cast<int>(rounded) + 1;
}

StorageReport grid_storage(const AngleLattice& lattice, const EquirectGrid& grid) {
    const auto n = static_cast<std::uint64_t>(lattice.count());
    StorageReport r;
    r.entries = n * n;
    r.values_per_entry = 2ull * grid.pixels();
    r.bytes_f32 = r.entries * r.values_per_entry * 4ull;
    r.bytes_f16 = r.entries * r.values_per_entry * 2ull;
    r.file_bytes_f32 = r.bytes_f32 + r.entries * kLutHeaderBytes;
    return r;
}

LutGrid precompute_grid(const AngleLattice& lattice, const EquirectGrid& grid, LutDirection direction,
                        int threads) {
    const int n = lattice.count();
    LutGrid out{lattice, grid, direction, {}, grid_storage(lattice, grid)};
    std::vector<std::optional<Lut>> slots(static_cast<std::size_t>(n) * n);
    auto work = [&](int worker, int workers) {
        for (int k = worker; k < n * n; k += workers) {
            const int pi = k / n;
            const int ri = k % n;
            slots[k].emplace(generate_lut({lattice.at(pi), lattice.at(ri)}, grid, direction));
        }
    };
    threads = std::max(1, threads);
    if (threads == 1) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    }
    for (int k = 0; k < n * n; ++k) out.entries.emplace(std::pair{k / n, k % n}, std::move(*slots[k]));
    return out;
}

namespace {

double wrap_x(double v) {
    if (v >= 1.0) return v - 2.0;
    if (v < -1.0) return v + 2.0;
    return v;
}

double unwrap_near(double v, double ref) {
    while (v - ref > 1.0) v -= 2.0;
    while (v - ref < -1.0) v += 2.0;
    return v;
}

}  // namespace

Lut upsample_lut(const Lut& coarse, int factor, UpsampleMode mode) {
    if (factor < 2) throw DomainError("upsampling factor must be >= 2");
    const int h = coarse.height();
    const int w = coarse.width();
    const EquirectGrid fine_grid(h * factor, w * factor);
    const int H = fine_grid.height();
    const int W = fine_grid.width();
    Lut fine(fine_grid, coarse.direction(), coarse.angles());
    auto c0 = coarse.channel(0);
    auto c1 = coarse.channel(1);
    auto f0 = fine.channel(0);
    auto f1 = fine.channel(1);
    auto at = [w](std::span<const float> ch, int y, int x) -> double {
        return ch[static_cast<std::size_t>(y) * w + x];
    };

    if (mode == UpsampleMode::Nearest) {
        for (int Y = 0; Y < H; ++Y)
            for (int X = 0; X < W; ++X) {
                const std::size_t i = static_cast<std::size_t>(Y) * W + X;
                f0[i] = static_cast<float>(at(c0, Y / factor, X / factor));
                f1[i] = static_cast<float>(at(c1, Y / factor, X / factor));
            }
        return fine;
    }

    for (int Y = 0; Y < H; ++Y) {
        const double sy = (Y + 0.5) / factor - 0.5;
        // Linear extension past the outer pixel centers keeps linear fields exact.
        const int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, h - 2);
        const int y1 = y0 + 1;
        const double ty = sy - y0;
        for (int X = 0; X < W; ++X) {
            const double sx = (X + 0.5) / factor - 0.5;
            const int xf = static_cast<int>(std::floor(sx));
            const double tx = sx - xf;
            const int x0 = (xf % w + w) % w;
            const int x1 = (x0 + 1) % w;

            const double ref = at(c0, y0, x0);
            const double a00 = ref;
            const double a01 = unwrap_near(at(c0, y0, x1), ref);
            const double a10 = unwrap_near(at(c0, y1, x0), ref);
            const double a11 = unwrap_near(at(c0, y1, x1), ref);
            const double top0 = a00 + tx * (a01 - a00);
            const double bot0 = a10 + tx * (a11 - a10);
            const double v0 = wrap_x(top0 + ty * (bot0 - top0));

            const double b00 = at(c1, y0, x0), b01 = at(c1, y0, x1);
            const double b10 = at(c1, y1, x0), b11 = at(c1, y1, x1);
            const double top1 = b00 + tx * (b01 - b00);
            const double bot1 = b10 + tx * (b11 - b10);
            const double v1 = std::clamp(top1 + ty * (bot1 - top1), -1.0, 1.0);

            const std::size_t i = static_cast<std::size_t>(Y) * W + X;
            f0[i] = static_cast<float>(std::clamp(v0, -1.0, 1.0));
            f1[i] = static_cast<float>(v1);
        }
    }
    return fine;
}

Lut coarse_then_upsample(const TiltAngles& angles, const EquirectGrid& coarse_grid, int factor,
                         LutDirection direction, UpsampleMode mode) {
    return upsample_lut(generate_lut(angles, coarse_grid, direction), factor, mode);
}

LutErrorReport lut_error(const Lut& a, const Lut& b) {
    if (!(a.grid() == b.grid()) || a.direction() != b.direction()) {
        throw DomainError("lut_error requires equal dimensions and direction");
    }
    const std::size_t n = a.grid().pixels();
    LutErrorReport r;
    double total = 0.0;
    std::size_t worst = 0;
    for (int c = 0; c < 2; ++c) {
        auto ca = a.channel(c);
        auto cb = b.channel(c);
        double sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = std::abs(static_cast<double>(ca[i]) - static_cast<double>(cb[i]));
            total += d;
            sq += d * d;
            if (d > r.max_abs_error) {
                r.max_abs_error = d;
                worst = i;
            }
        }
        const double mse = sq / static_cast<double>(n);
        r.psnr_db[c] = mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(4.0 / mse);
    }
    r.mean_abs_error = total / static_cast<double>(2 * n);
    r.worst_x = static_cast<int>(worst % a.width());
    r.worst_y = static_cast<int>(worst / a.width());
    return r;
}

void save_lut(const Lut& lut, const std::filesystem::path& path) {
    binio::Writer w;
    w.bytes("ULUT", 4);
    w.u8(1);
    w.u8(static_cast<std::uint8_t>(lut.direction()));
    w.u32(static_cast<std::uint32_t>(lut.height()));
    w.u32(static_cast<std::uint32_t>(lut.width()));
    w.f32(static_cast<float>(lut.angles().pitch()));
    w.f32(static_cast<float>(lut.angles().roll()));
    w.f32s(lut.data());
    binio::write_file(path.string(), w.buffer());
}

Lut load_lut(const std::filesystem::path& path) {
    using K = LutFormatError::Kind;
    std::vector<std::uint8_t> bytes;
    try {
        bytes = binio::read_file(path.string());
    } catch (const std::exception& e) {
        throw LutFormatError(K::Io, e.what());
    }
    binio::Reader r(bytes);
    char magic[4];
    std::uint8_t version = 0, dir = 0;
    std::uint32_t h = 0, w = 0;
    float pitch = 0, roll = 0;
    if (!r.bytes(magic, 4)) throw LutFormatError(K::Truncated, "ULUT header truncated");
    if (std::string(magic, 4) != "ULUT") throw LutFormatError(K::Header, "bad magic, expected ULUT");
    if (!r.u8(version) || !r.u8(dir) || !r.u32(h) || !r.u32(w) || !r.f32(pitch) || !r.f32(roll)) {
        throw LutFormatError(K::Truncated, "ULUT header truncated");
    }
    if (version != 1) throw LutFormatError(K::Header, "unsupported ULUT version " + std::to_string(version));
    if (dir > 1) throw LutFormatError(K::Header, "invalid direction byte " + std::to_string(dir));
    if (h < 2 || w != 2 * h || h > (1u << 15)) {
        throw LutFormatError(K::Header, "invalid ULUT dimensions " + std::to_string(h) + "x" + std::to_string(w));
    }
    TiltAngles angles;
    try {
        angles = TiltAngles(pitch, roll);
    } catch (const DomainError& e) {
        throw LutFormatError(K::Header, e.what());
    }
    const EquirectGrid grid(static_cast<int>(h), static_cast<int>(w));
    std::vector<float> data(2 * grid.pixels());
    if (!r.f32s(data)) throw LutFormatError(K::Truncated, "ULUT payload truncated");
    if (r.remaining() != 0) throw LutFormatError(K::Header, "trailing bytes after ULUT payload");
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!(data[i] >= -1.0f && data[i] <= 1.0f)) {
            throw LutFormatError(K::Range, "ULUT value at index " + std::to_string(i) + " outside [-1, 1]: " +
                                               std::to_string(data[i]));
        }
    }
    return Lut(grid, static_cast<LutDirection>(dir), angles, std::move(data));
}

}  // namespace upright
