// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "upright/image.hpp"

#include <string>
#include <vector>

namespace upright {

/// Cumulative accuracy: percentage of errors at or below each threshold (degrees).
struct AccuracyTable {
    std::vector<double> thresholds;
    std::vector<double> percentages;
    std::size_t samples = 0;

    /// Aligned two-row text table with one column per threshold.
    std::string format() const;
};

inline const std::vector<double> kDefaultThresholds{1, 2, 3, 4, 5, 12};

/// Throws std::invalid_argument for an empty error list.
AccuracyTable accuracy_table(const std::vector<double>& errors_deg,
                             const std::vector<double>& thresholds = kDefaultThresholds);

/// PSNR with peak 1. Identical inputs give +infinity.
double psnr(const Image& a, const Image& b);
double mse(const Image& a, const Image& b);

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
};

/// Gaussian-weighted SSIM averaged over all fully-contained windows and channels.
double ssim(const Image& a, const Image& b, const SsimParams& params = {});

/// Normalized 1-D Gaussian taps (the 2-D window is their outer product).
std::vector<double> gaussian_taps(int window, double sigma);

}  // namespace upright
