// SPDX-License-Identifier: Apache-2.0
#pragma once

// Procedural panoramas and tilt augmentation: every record pairs an upright synthetic
// panorama with its forward-tilted copy, the tilt angles and the inverse LUT that
// undoes the tilt.

#include "upright/image.hpp"
#include "upright/lut.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace upright {

enum class Style { HorizonGradient = 0, Boxes = 1, Stripes = 2 };
inline constexpr int kStyleCount = 3;

std::string to_string(Style s);
Style parse_style(const std::string& s);

/// Deterministic per seed. Content is a function of the viewing direction only, so
/// the seam and poles are continuous; edges are anti-aliased over about 1.5 pixels.
Image synth_panorama(std::uint64_t seed, const EquirectGrid& grid, Style style);

struct DatasetRecord {
    int id = 0;
    Style style = Style::HorizonGradient;
    Image nonupright;
    TiltAngles angles;  // the forward tilt applied
    Lut truth_lut;      // InverseUpright at feature resolution
    Image upright;
};

DatasetRecord make_record(const Image& upright, const TiltAngles& angles, const EquirectGrid& feature_grid);

struct DatasetSpec {
    int n = 100;
    AngleLattice angles{-90, 90, 1};
    std::uint64_t seed = 1;
    EquirectGrid grid{64, 128};
    EquirectGrid feature_grid{64, 128};
    int threads = 1;
};

struct DatasetSplits {
    std::vector<DatasetRecord> train, val, test;
};

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tilt for record `index`: both components drawn uniformly from the lattice.
TiltAngles sample_angles(std::uint64_t seed, int index, const AngleLattice& lattice);

/// Split sizes for n records: test = val = floor(0.15 n), train takes the rest.
struct SplitCounts {
    int train, val, test;
};
SplitCounts split_counts(int n);

/// 70/15/15 split, stratified by style. Deterministic per seed and independent of the
/// thread count. Throws DatasetError for n < 10.
DatasetSplits build_dataset(const DatasetSpec& spec);

/// Writes manifest.jsonl plus per-record .uimg/.ulut files (and .ppm previews).
void write_dataset(const DatasetSplits& splits, const std::filesystem::path& dir, bool ppm_previews = false);
/// Throws DatasetError on a missing or malformed manifest or record file.
DatasetSplits read_dataset(const std::filesystem::path& dir);

}  // namespace upright
