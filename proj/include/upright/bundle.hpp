// SPDX-License-Identifier: Apache-2.0
#pragma once

// All networks for one run plus the config that built them, and their checkpoint
// directory layout: orientation.uckp, lutformer.uckp, generator.uckp,
// discriminator.uckp, each embedding the full config text.

#include "upright/config.hpp"
#include "upright/models.hpp"
#include "upright/training.hpp"

#include <filesystem>
#include <memory>

namespace upright {

struct ModelBundle {
    RunConfig config;
    ModelPreset preset;
    std::unique_ptr<OrientationNet> orientation;
    std::unique_ptr<LutFormer> lutformer;
    std::unique_ptr<Generator> generator;
    std::unique_ptr<PatchDiscriminator> discriminator;
    // Which networks came from checkpoints rather than fresh initialization.
    bool has_orientation = false, has_lutformer = false, has_reconstructor = false;

    /// Freshly initialized networks; seeds derive from config.seed.
    explicit ModelBundle(const RunConfig& cfg);
};

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, Stage stage);

/// Writes the checkpoint(s) for one stage (reconstruction writes generator and
/// discriminator).
void save_stage(const ModelBundle& b, Stage stage, const std::filesystem::path& dir);

/// Config comes from the first checkpoint found; every present checkpoint is loaded.
/// Throws nn::CheckpointError when the directory holds none.
ModelBundle load_bundle(const std::filesystem::path& dir);

/// Loads into an existing bundle whichever checkpoints exist in `dir`.
void load_available(ModelBundle& b, const std::filesystem::path& dir);

}  // namespace upright
