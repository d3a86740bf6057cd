// SPDX-License-Identifier: Apache-2.0
#pragma once

// Latency benchmarks, storage accounting and the constant-predictor baseline used to
// judge orientation accuracy.

#include "upright/lut.hpp"
#include "upright/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace upright {

inline constexpr int kWarmupFrames = 3;

struct LatencyStats {
    int frames = 0;
    int threads = 1;
    double mean_ms = 0, p50_ms = 0, p95_ms = 0, fps = 0;
    std::vector<double> samples_ms;
    // FNV-1a over the final frame's output bytes; timing-independent.
    std::uint64_t output_digest = 0;

    std::string format(const std::string& title) const;
    /// One JSON object on a single line.
    std::string json(const std::string& pipeline) const;
};

/// Times `frame` n_frames times after kWarmupFrames discarded calls, on a monotonic
/// clock. n_frames < 10 throws DomainError.
LatencyStats time_frames(const std::function<void(int)>& frame, int n_frames, int threads = 1);

/// LUT generation + bilinear remap of a 3-channel image per frame, with a different
/// lattice tilt each frame. Image synthesis happens before timing starts.
LatencyStats bench_analytic(const EquirectGrid& grid, int n_frames, int threads, std::uint64_t seed);

/// Full learned pipeline on one pre-loaded image.
LatencyStats bench_end_to_end(const PipelineStages& stages, const Image& input, int n_frames, int threads);

std::uint64_t image_digest(const Image& img);

/// CPU model and logical core count.
std::string hardware_info();

/// Grid totals plus the published reference figures, and the checkpoint directory's
/// on-disk size when given.
std::string storage_report_text(const AngleLattice& lattice, const EquirectGrid& grid,
                                const std::optional<std::filesystem::path>& checkpoint_dir = std::nullopt);

/// Sum of regular-file sizes under `path` (or the file's own size).
std::uintmax_t bytes_on_disk(const std::filesystem::path& path);

/// Monte-Carlo fraction of uniformly drawn lattice tilts that a constant (0, 0)
/// prediction gets within `threshold_deg`.
double constant_predictor_rate(const AngleLattice& lattice, double threshold_deg, int samples, std::uint64_t seed);

}  // namespace upright
