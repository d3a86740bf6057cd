// SPDX-License-Identifier: Apache-2.0
#include "upright/remap.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace upright {

namespace {

void remap_rows(const Image& in, const Lut& lut, Interp interp, Image& out, int row_begin, int row_end) {
    const int H = in.height();
    const int W = in.width();
    const int C = in.channels();
    const std::size_t plane = in.grid().pixels();
    const auto src = in.data();
    auto dst = out.data();
    const auto lx = lut.channel(0);
    const auto ly = lut.channel(1);

    for (int v = row_begin; v < row_end; ++v) {
        for (int u = 0; u < W; ++u) {
            const std::size_t d = static_cast<std::size_t>(v) * W + u;
            const double x = denormalize_coord(lx[d], W);
            const double y = std::clamp(denormalize_coord(ly[d], H), 0.0, static_cast<double>(H - 1));

            if (interp == Interp::Nearest) {
                const int xi = ((static_cast<int>(std::floor(x + 0.5)) % W) + W) % W;
                const int yi = std::min(static_cast<int>(std::floor(y + 0.5)), H - 1);
                const std::size_t s = static_cast<std::size_t>(yi) * W + xi;
                for (int c = 0; c < C; ++c) dst[c * plane + d] = src[c * plane + s];
                continue;
            }

            const double xf = std::floor(x);
            const double fx = x - xf;
            const int x0 = ((static_cast<int>(xf) % W) + W) % W;
            const int x1 = (x0 + 1) % W;
            const int y0 = static_cast<int>(std::floor(y));
            const double fy = y - y0;
            const int y1 = std::min(y0 + 1, H - 1);
            const double w00 = (1.0 - fx) * (1.0 - fy);
            const double w01 = fx * (1.0 - fy);
            const double w10 = (1.0 - fx) * fy;
            const double w11 = fx * fy;
            const std::size_t r0 = static_cast<std::size_t>(y0) * W;
            const std::size_t r1 = static_cast<std::size_t>(y1) * W;
            for (int c = 0; c < C; ++c) {
                const float* p = src.data() + c * plane;
                const double val = w00 * p[r0 + x0] + w01 * p[r0 + x1] + w10 * p[r1 + x0] + w11 * p[r1 + x1];
                dst[c * plane + d] = static_cast<float>(val);
            }
        }
    }
}

}  // namespace

Image remap(const Image& input, const Lut& lut, Interp interp, int threads) {
    if (!(input.grid() == lut.grid())) {
        throw DomainError("LUT is " + std::to_string(lut.height()) + "x" + std::to_string(lut.width()) +
                          " but input is " + std::to_string(input.height()) + "x" + std::to_string(input.width()));
    }
    for (float v : lut.data()) {
        if (std::isnan(v)) throw DomainError("LUT contains NaN");
    }
    Image out(input.channels(), input.grid());
    const int H = input.height();
    threads = std::clamp(threads, 1, H);
    if (threads == 1) {
        remap_rows(input, lut, interp, out, 0, H);
        return out;
    }
    {
        std::vector<std::jthread> pool;
        const int chunk = (H + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const int b = t * chunk;
            const int e = std::min(H, b + chunk);
            if (b >= e) break;
            pool.emplace_back([&, b, e] { remap_rows(input, lut, interp, out, b, e); });
        }
    }
    return out;
}

Image rotate_image(const Image& input, const TiltAngles& angles, LutDirection direction, Interp interp,
                   int threads) {
    return remap(input, generate_lut(angles, input.grid(), direction), interp, threads);
}

}  // namespace upright
