// SPDX-License-Identifier: Apache-2.0
#include "upright/bench.hpp"

#include "upright/dataset.hpp"
#include "upright/nn/params.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <thread>

namespace upright {

namespace {

double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * (v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (v[hi] - v[lo]) * (pos - lo);
}

}  // namespace

std::string LatencyStats::format(const std::string& title) const {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "%s\n  frames   %d (after %d warm-up)\n  threads  %d\n  mean     %.3f ms\n  p50      %.3f ms\n"
                  "  p95      %.3f ms\n  fps      %.2f\n  digest   %016llx\n",
                  title.c_str(), frames, kWarmupFrames, threads, mean_ms, p50_ms, p95_ms, fps,
                  static_cast<unsigned long long>(output_digest));
    return buf;
}

std::string LatencyStats::json(const std::string& pipeline) const {
    nlohmann::ordered_json j{{"pipeline", pipeline}, {"frames", frames},   {"threads", threads}, {"mean_ms", mean_ms},
                             {"p50_ms", p50_ms},     {"p95_ms", p95_ms},   {"fps", fps},         {"output_digest", output_digest},
                             {"hardware", hardware_info()}};
    return j.dump();
}

LatencyStats time_frames(const std::function<void(int)>& frame, int n_frames, int threads) {
    if (n_frames < 10) throw DomainError("benchmark needs at least 10 frames");
    using clock = std::chrono::steady_clock;
    for (int i = 0; i < kWarmupFrames; ++i) frame(i);
    LatencyStats s;
    s.frames = n_frames;
    s.threads = threads;
    for (int i = 0; i < n_frames; ++i) {
        const auto t0 = clock::now();
        frame(kWarmupFrames + i);
        s.samples_ms.push_back(std::chrono::duration<double, std::milli>(clock::now() - t0).count());
    }
    s.mean_ms = std::accumulate(s.samples_ms.begin(), s.samples_ms.end(), 0.0) / n_frames;
    s.p50_ms = percentile(s.samples_ms, 0.5);
    s.p95_ms = percentile(s.samples_ms, 0.95);
    s.fps = 1000.0 / s.mean_ms;
    return s;
}

LatencyStats bench_analytic(const EquirectGrid& grid, int n_frames, int threads, std::uint64_t seed) {
    const Image input = synth_panorama(seed, grid, Style::Boxes);
    const AngleLattice lattice{-90, 90, 1};
    std::vector<TiltAngles> angles;
    for (int i = 0; i < n_frames + kWarmupFrames; ++i) angles.push_back(sample_angles(seed, i, lattice));
    std::optional<Image> last;
    auto s = time_frames(
        [&](int i) { last = rotate_image(input, angles[i], LutDirection::InverseUpright, Interp::Bilinear, threads); },
        n_frames, threads);
    s.output_digest = image_digest(*last);
    return s;
}

LatencyStats bench_end_to_end(const PipelineStages& stages, const Image& input, int n_frames, int threads) {
    std::optional<Image> last;
    auto s = time_frames([&](int) { last = end_to_end_adjust(input, stages, threads).image; }, n_frames, threads);
    s.output_digest = image_digest(*last);
    return s;
}

std::uint64_t image_digest(const Image& img) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    const auto* p = reinterpret_cast<const unsigned char*>(img.data().data());
    for (std::size_t i = 0; i < img.data().size_bytes(); ++i) h = (h ^ p[i]) * 0x100000001b3ull;
    return h;
}

std::string hardware_info() {
    std::string model = "unknown cpu";
    std::ifstream in("/proc/cpuinfo");
    for (std::string line; std::getline(in, line);) {
        if (line.rfind("model name", 0) == 0) {
            const auto c = line.find(':');
            if (c != std::string::npos) model = line.substr(line.find_first_not_of(' ', c + 1));
            break;
        }
    }
    return model + ", " + std::to_string(std::thread::hardware_concurrency()) + " logical cores";
}

std::uintmax_t bytes_on_disk(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    if (fs::is_regular_file(path)) return fs::file_size(path);
    std::uintmax_t total = 0;
    for (const auto& e : fs::recursive_directory_iterator(path))
        if (e.is_regular_file()) total += e.file_size();
    return total;
}

std::string storage_report_text(const AngleLattice& lattice, const EquirectGrid& grid,
                                const std::optional<std::filesystem::path>& checkpoint_dir) {
    const StorageReport r = grid_storage(lattice, grid);
    const int per_axis = lattice.count();
    char buf[1024];
    std::snprintf(buf, sizeof buf,
                  "LUT grid storage\n"
                  "  lattice          %d x %d (step %g deg)\n"
                  "  entries          %llu entries\n"
                  "  table            2 x %d x %d (%llu values)\n"
                  "  f32 payload      %llu bytes (%.2f GiB, %.2f GB)\n"
                  "  f16 payload      %llu bytes (%.2f GiB)\n"
                  "  f32 files        %llu bytes incl. %zu-byte headers\n"
                  "  published        4.65 GB for 32761 LUTs (unexplained: matches neither f32 nor f16 totals)\n",
                  per_axis, per_axis, lattice.step, static_cast<unsigned long long>(r.entries), grid.height(),
                  grid.width(), static_cast<unsigned long long>(r.values_per_entry),
                  static_cast<unsigned long long>(r.bytes_f32), r.gib_f32(), r.bytes_f32 / 1e9,
                  static_cast<unsigned long long>(r.bytes_f16), r.gib_f16(),
                  static_cast<unsigned long long>(r.file_bytes_f32), kLutHeaderBytes);
    std::string out = buf;
    if (checkpoint_dir) {
        const auto bytes = bytes_on_disk(*checkpoint_dir);
        std::snprintf(buf, sizeof buf,
                      "Model storage\n  checkpoints      %llu bytes (%.1f MB) in %s\n  published        429.6 MB\n",
                      static_cast<unsigned long long>(bytes), bytes / 1e6, checkpoint_dir->string().c_str());
        out += buf;
    }
    return out;
}

double constant_predictor_rate(const AngleLattice& lattice, double threshold_deg, int samples, std::uint64_t seed) {
    if (samples < 1) throw DomainError("constant_predictor_rate: samples must be positive");
    int hits = 0;
    for (int i = 0; i < samples; ++i)
        if (angle_error(sample_angles(seed, i, lattice), TiltAngles(0, 0)) <= threshold_deg) ++hits;
    return static_cast<double>(hits) / samples;
}

}  // namespace upright
