// SPDX-License-Identifier: Apache-2.0
#include "upright/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace upright {

AccuracyTable accuracy_table(const std::vector<double>& errors_deg, const std::vector<double>& thresholds) {
    if (errors_deg.empty()) throw std::invalid_argument("accuracy_table needs at least one error");
    AccuracyTable t;
    t.thresholds = thresholds;
    t.samples = errors_deg.size();
    for (double th : thresholds) {
        const auto hits = std::count_if(errors_deg.begin(), errors_deg.end(), [th](double e) { return e <= th; });
        t.percentages.push_back(100.0 * static_cast<double>(hits) / static_cast<double>(errors_deg.size()));
    }
    return t;
}

std::string AccuracyTable::format() const {
    std::string head = "threshold  ";
    std::string row = "percent    ";
    char buf[32];
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%7g°", thresholds[i]);
        head += buf;
        std::snprintf(buf, sizeof buf, "%8.1f", percentages[i]);
        row += buf;
    }
    std::snprintf(buf, sizeof buf, "%zu", samples);
    return head + "\n" + row + "\n" + "samples    " + buf + "\n";
}

namespace {

void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (a.channels() != b.channels() || !(a.grid() == b.grid())) {
        throw DomainError(std::string(what) + ": image shapes differ");
    }
}

}  // namespace

double mse(const Image& a, const Image& b) {
    require_same_shape(a, b, "mse");
    double s = 0.0;
    auto av = a.data();
    auto bv = b.data();
    for (std::size_t i = 0; i < av.size(); ++i) {
        const double d = static_cast<double>(av[i]) - bv[i];
        s += d * d;
    }
    return s / static_cast<double>(av.size());
}

double psnr(const Image& a, const Image& b) {
    const double m = mse(a, b);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / m);
}

std::vector<double> gaussian_taps(int window, double sigma) {
    std::vector<double> g(window);
    const double c = (window - 1) / 2.0;
    double s = 0.0;
    for (int i = 0; i < window; ++i) s += (g[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma)));
    for (auto& v : g) v /= s;
    return g;
}

double ssim(const Image& a, const Image& b, const SsimParams& p) {
    require_same_shape(a, b, "ssim");
    const int H = a.height(), W = a.width(), k = p.window;
    if (H < k || W < k) throw DomainError("ssim: image smaller than the window");
    const auto g = gaussian_taps(k, p.sigma);
    const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
    const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
    const int Ho = H - k + 1, Wo = W - k + 1;

    // Separable filtering: horizontal pass into tmp, then vertical.
    auto filter = [&](const std::vector<double>& src, std::vector<double>& dst) {
        std::vector<double> tmp(static_cast<std::size_t>(H) * Wo);
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < Wo; ++x) {
                double s = 0;
                for (int i = 0; i < k; ++i) s += g[i] * src[static_cast<std::size_t>(y) * W + x + i];
                tmp[static_cast<std::size_t>(y) * Wo + x] = s;
            }
        dst.assign(static_cast<std::size_t>(Ho) * Wo, 0.0);
        for (int y = 0; y < Ho; ++y)
            for (int x = 0; x < Wo; ++x) {
                double s = 0;
                for (int i = 0; i < k; ++i) s += g[i] * tmp[static_cast<std::size_t>(y + i) * Wo + x];
                dst[static_cast<std::size_t>(y) * Wo + x] = s;
            }
    };

    double total = 0.0;
    const std::size_t n = a.grid().pixels();
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n), mx, my, sxx, syy, sxy;
    for (int c = 0; c < a.channels(); ++c) {
        auto pa = a.plane(c);
        auto pb = b.plane(c);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = pa[i];
            y[i] = pb[i];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        filter(x, mx);
        filter(y, my);
        filter(xx, sxx);
        filter(yy, syy);
        filter(xy, sxy);
        double s = 0.0;
        for (std::size_t i = 0; i < mx.size(); ++i) {
            const double vx = sxx[i] - mx[i] * mx[i];
            const double vy = syy[i] - my[i] * my[i];
            const double cxy = sxy[i] - mx[i] * my[i];
            s += ((2 * mx[i] * my[i] + c1) * (2 * cxy + c2)) /
                 ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
        }
        total += s / static_cast<double>(mx.size());
    }
    return total / a.channels();
}

}  // namespace upright
