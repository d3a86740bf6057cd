// SPDX-License-Identifier: Apache-2.0
#pragma once

// Run configuration as plain key=value text. Every field has a default and the
// full effective config is echoed into checkpoints and logs.

#include "upright/models.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace upright {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct RunConfig {
    std::string preset = "desk";
    std::uint64_t seed = 1;
    int steps = 200;
    int batch = 8;
    double lr_orientation = 2e-4;
    double lr_lutformer = 3e-2;
    double lr_generator = 2e-4;
    double lr_discriminator = 1e-4;
    double lambda = 1000.0;
    double mu = 100.0;
    double alpha = 0.01;
    double beta = 0.01;
    /// Where the reconstruction stage gets its LUTs: "learned" or "analytic".
    std::string recon_lut = "learned";
    bool lut_fusion = true;
    int threads = 1;

    LossWeights weights() const { return {lambda, mu, alpha, beta}; }
    ModelPreset model_preset() const;
    /// Canonical text: one key=value per line, fixed key order.
    std::string to_text() const;
    void validate() const;
};

/// Unknown keys, malformed lines and unparsable values throw ConfigError. Blank
/// lines and lines starting with '#' are ignored.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace upright
