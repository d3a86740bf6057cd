// SPDX-License-Identifier: Apache-2.0
#include "upright/dataset.hpp"

#include "upright/nn/params.hpp"
#include "upright/remap.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <thread>

namespace upright {

std::string to_string(Style s) {
    switch (s) {
        case Style::HorizonGradient: return "horizon";
        case Style::Boxes: return "boxes";
        case Style::Stripes: return "stripes";
    }
    return "?";
}

Style parse_style(const std::string& s) {
    if (s == "horizon") return Style::HorizonGradient;
    if (s == "boxes") return Style::Boxes;
    if (s == "stripes") return Style::Stripes;
    throw DomainError("unknown style '" + s + "'");
}

namespace {

using Rgb = std::array<double, 3>;

Rgb mix(const Rgb& a, const Rgb& b, double t) {
    return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

struct Scene {
    Rgb sky_top, sky_horizon, ground_near, ground_far;
    struct Wave {
        Vec3 k;
        double freq, phase, amp;
    };
    std::array<Wave, 3> texture;
    struct Box {
        double lon, half_width, lat_lo, lat_hi;
        Rgb color;
    };
    std::vector<Box> boxes;
    int stripe_count = 0;
    double stripe_phase = 0, stripe_band = 0;
    Rgb stripe_color{};
};

Rgb random_color(nn::Rng& rng, double lo, double hi) { return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)}; }

Scene make_scene(std::uint64_t seed, Style style) {
    nn::Rng rng(seed);
    Scene s;
    // Brightness falls monotonically from zenith to nadir (per channel), with the
    // sharpest drop at the horizon.
    s.sky_horizon = random_color(rng, 0.55, 0.8);
    s.sky_top = s.sky_horizon;
    for (auto& c : s.sky_top) c += rng.uniform(0.0, 0.2);
    s.ground_near = random_color(rng, 0.15, 0.4);
    s.ground_far = s.ground_near;
    for (auto& c : s.ground_far) c *= rng.uniform(0.3, 1.0);
    // Low-frequency shading only on the structured styles.
    const double amp = style == Style::HorizonGradient ? 0.0 : 0.03;
    for (auto& w : s.texture) {
        const double th = rng.uniform(0, 2 * kPi), z = rng.uniform(-1, 1), r = std::sqrt(1 - z * z);
        w = {{r * std::cos(th), r * std::sin(th), z}, rng.uniform(2, 5), rng.uniform(0, 2 * kPi), amp};
    }
    if (style == Style::Boxes) {
        const int k = rng.uniform_int(4, 8);
        for (int i = 0; i < k; ++i) {
            s.boxes.push_back({rng.uniform(-kPi, kPi), deg_to_rad(rng.uniform(5, 20)), deg_to_rad(rng.uniform(-25, 0)),
                               deg_to_rad(rng.uniform(10, 50)), random_color(rng, 0.0, 1.0)});
        }
    } else if (style == Style::Stripes) {
        s.stripe_count = rng.uniform_int(6, 16);
        s.stripe_phase = rng.uniform(0, 2 * kPi);
        s.stripe_band = deg_to_rad(rng.uniform(35, 60));
        s.stripe_color = random_color(rng, 0.0, 1.0);
    }
    return s;
}

}  // namespace

Image synth_panorama(std::uint64_t seed, const EquirectGrid& grid, Style style) {
    const Scene s = make_scene(seed, style);
    const double aa = 1.5 * kPi / grid.height();  // edge width in radians
    auto edge = [aa](double dist) { return std::clamp(0.5 + dist / aa, 0.0, 1.0); };

    Image img(3, grid);
    for (int v = 0; v < grid.height(); ++v) {
        for (int u = 0; u < grid.width(); ++u) {
            const Vec3 d = pixel_to_sphere(u, v, grid);
            const double lat = std::asin(std::clamp(d.z, -1.0, 1.0));
            const double lon = std::atan2(d.y, d.x);
            const Rgb sky = mix(s.sky_horizon, s.sky_top, std::max(d.z, 0.0));
            const Rgb ground = mix(s.ground_near, s.ground_far, std::max(-d.z, 0.0));
            Rgb c = mix(ground, sky, edge(lat));
            for (const auto& b : s.boxes) {
                const double dlon = std::abs(std::remainder(lon - b.lon, 2 * kPi));
                const double inside = std::min({b.half_width - dlon, b.lat_hi - lat, lat - b.lat_lo});
                c = mix(c, b.color, edge(inside));
            }
            if (s.stripe_count > 0) {
                const double dist = std::sin(s.stripe_count * lon + s.stripe_phase) / s.stripe_count;
                c = mix(c, s.stripe_color, edge(dist) * edge(s.stripe_band - std::abs(lat)));
            }
            double t = 0;
            for (const auto& w : s.texture) t += w.amp * std::sin(w.freq * w.k.dot(d) + w.phase);
            for (int ch = 0; ch < 3; ++ch) img.at(ch, v, u) = static_cast<float>(std::clamp(c[ch] + t, 0.0, 1.0));
        }
    }
    return img;
}

DatasetRecord make_record(const Image& upright, const TiltAngles& angles, const EquirectGrid& feature_grid) {
    return DatasetRecord{0, Style::HorizonGradient,
                         rotate_image(upright, angles, LutDirection::ForwardTilt, Interp::Bilinear), angles,
                         generate_lut(angles, feature_grid, LutDirection::InverseUpright), upright};
}

TiltAngles sample_angles(std::uint64_t seed, int index, const AngleLattice& lattice) {
    nn::Rng rng(nn::mix_seed(nn::mix_seed(seed, static_cast<std::uint64_t>(index)), 0xa1));
    const int c = lattice.count();
    const double p = lattice.at(rng.uniform_int(0, c - 1));
    const double r = lattice.at(rng.uniform_int(0, c - 1));
    return TiltAngles(p, r);
}

SplitCounts split_counts(int n) {
    const int held = static_cast<int>(std::floor(0.15 * n));
    return {n - 2 * held, held, held};
}

DatasetSplits build_dataset(const DatasetSpec& spec) {
    if (spec.n < 10) throw DatasetError("dataset needs at least 10 records to populate every split");
    spec.angles.count();  // validates the lattice up front

    const int n = spec.n;
    std::vector<std::optional<DatasetRecord>> records(n);
    std::atomic<int> next{0};
    auto work = [&] {
        for (int i = next++; i < n; i = next++) {
            const auto style = static_cast<Style>(i % kStyleCount);
            const Image up = synth_panorama(nn::mix_seed(spec.seed, static_cast<std::uint64_t>(i)), spec.grid, style);
            DatasetRecord rec = make_record(up, sample_angles(spec.seed, i, spec.angles), spec.feature_grid);
            rec.id = i;
            rec.style = style;
            records[i] = std::move(rec);
        }
    };
    {
        std::vector<std::jthread> pool;
        for (int t = 1; t < std::max(1, spec.threads); ++t) pool.emplace_back(work);
        work();
    }

    // Shuffle within each style, then interleave the styles so every prefix of the
    // order (and hence every split) is balanced.
    std::array<std::vector<int>, kStyleCount> by_style;
    for (int i = 0; i < n; ++i) by_style[i % kStyleCount].push_back(i);
    for (int s = 0; s < kStyleCount; ++s) {
        nn::Rng rng(nn::mix_seed(spec.seed, 0x5d1700 + s));
        std::shuffle(by_style[s].begin(), by_style[s].end(), rng.engine());
    }
    std::vector<int> order;
    for (std::size_t k = 0; order.size() < static_cast<std::size_t>(n); ++k)
        for (auto& g : by_style)
            if (k < g.size()) order.push_back(g[k]);

    const SplitCounts counts = split_counts(n);
    std::vector<int> test(order.begin(), order.begin() + counts.test);
    std::vector<int> val(order.begin() + counts.test, order.begin() + counts.test + counts.val);
    std::vector<int> train(order.begin() + counts.test + counts.val, order.end());
    DatasetSplits out;
    auto take = [&](std::vector<int>& ids, std::vector<DatasetRecord>& dst) {
        std::sort(ids.begin(), ids.end());
        for (int i : ids) dst.push_back(std::move(*records[i]));
    };
    take(train, out.train);
    take(val, out.val);
    take(test, out.test);
    return out;
}

// ---- on-disk layout ------------------------------------------------------------

namespace {

std::string record_stem(int id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "rec_%05d", id);
    return buf;
}

}  // namespace

void write_dataset(const DatasetSplits& splits, const std::filesystem::path& dir, bool ppm_previews) {
    std::filesystem::create_directories(dir);
    std::ofstream manifest(dir / "manifest.jsonl", std::ios::binary);
    if (!manifest) throw DatasetError("cannot write " + (dir / "manifest.jsonl").string());
    auto emit = [&](const std::vector<DatasetRecord>& recs, const char* split) {
        for (const auto& r : recs) {
            const std::string stem = record_stem(r.id);
            nlohmann::ordered_json j;
            j["id"] = r.id;
            j["split"] = split;
            j["style"] = to_string(r.style);
            j["pitch"] = r.angles.pitch();
            j["roll"] = r.angles.roll();
            j["nonupright"] = stem + ".nonupright.uimg";
            j["upright"] = stem + ".upright.uimg";
            j["lut"] = stem + ".lut.ulut";
            write_uimg(r.nonupright, dir / j["nonupright"].get<std::string>());
            write_uimg(r.upright, dir / j["upright"].get<std::string>());
            save_lut(r.truth_lut, dir / j["lut"].get<std::string>());
            if (ppm_previews) {
                write_ppm(r.nonupright, dir / (stem + ".nonupright.ppm"));
                write_ppm(r.upright, dir / (stem + ".upright.ppm"));
            }
            manifest << j.dump() << '\n';
        }
    };
    emit(splits.train, "train");
    emit(splits.val, "val");
    emit(splits.test, "test");
    if (!manifest) throw DatasetError("failed writing manifest");
}

DatasetSplits read_dataset(const std::filesystem::path& dir) {
    const auto path = dir / "manifest.jsonl";
    std::ifstream in(path);
    if (!in) throw DatasetError("missing manifest " + path.string());
    DatasetSplits out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        try {
            const auto j = nlohmann::json::parse(line);
            DatasetRecord r{j.at("id").get<int>(), parse_style(j.at("style").get<std::string>()),
                            read_uimg(dir / j.at("nonupright").get<std::string>()),
                            TiltAngles(j.at("pitch").get<double>(), j.at("roll").get<double>()),
                            load_lut(dir / j.at("lut").get<std::string>()),
                            read_uimg(dir / j.at("upright").get<std::string>())};
            if (!(r.nonupright.grid() == r.upright.grid()) || r.nonupright.channels() != r.upright.channels()) {
                throw DatasetError("image shapes differ");
            }
            const std::string split = j.at("split").get<std::string>();
            if (split == "train") out.train.push_back(std::move(r));
            else if (split == "val") out.val.push_back(std::move(r));
            else if (split == "test") out.test.push_back(std::move(r));
            else throw DatasetError("unknown split '" + split + "'");
        } catch (const std::exception& e) {
            throw DatasetError(where + ": " + e.what());
        }
    }
    if (out.train.empty() && out.val.empty() && out.test.empty()) throw DatasetError("empty dataset " + dir.string());
    return out;
}

}  // namespace upright
