// SPDX-License-Identifier: Apache-2.0
#include "upright/bundle.hpp"

namespace upright {

ModelBundle::ModelBundle(const RunConfig& cfg) : config(cfg), preset(cfg.model_preset()) {
    orientation = std::make_unique<OrientationNet>(preset.orientation, nn::mix_seed(cfg.seed, 1));
    lutformer = std::make_unique<LutFormer>(preset.lutformer, nn::mix_seed(cfg.seed, 2));
    generator = std::make_unique<Generator>(preset.reconstructor, nn::mix_seed(cfg.seed, 3));
    discriminator = std::make_unique<PatchDiscriminator>(preset.reconstructor.out_channels,
                                                         preset.reconstructor.disc_channels, nn::mix_seed(cfg.seed, 4));
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, Stage stage) {
    switch (stage) {
        case Stage::Orientation: return dir / "orientation.uckp";
        case Stage::LutFormer: return dir / "lutformer.uckp";
        case Stage::Reconstruction: return dir / "generator.uckp";
    }
    return {};
}

void save_stage(const ModelBundle& b, Stage stage, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::string cfg = b.config.to_text();
    switch (stage) {
        case Stage::Orientation: nn::save_checkpoint(b.orientation->params(), cfg, checkpoint_path(dir, stage)); break;
        case Stage::LutFormer: nn::save_checkpoint(b.lutformer->params(), cfg, checkpoint_path(dir, stage)); break;
        case Stage::Reconstruction:
            nn::save_checkpoint(b.generator->params(), cfg, checkpoint_path(dir, stage));
            nn::save_checkpoint(b.discriminator->params(), cfg, dir / "discriminator.uckp");
            break;
    }
}

void load_available(ModelBundle& b, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (fs::exists(checkpoint_path(dir, Stage::Orientation))) {
        nn::load_checkpoint(b.orientation->params(), checkpoint_path(dir, Stage::Orientation));
        b.has_orientation = true;
    }
    if (fs::exists(checkpoint_path(dir, Stage::LutFormer))) {
        nn::load_checkpoint(b.lutformer->params(), checkpoint_path(dir, Stage::LutFormer));
        b.has_lutformer = true;
    }
    if (fs::exists(checkpoint_path(dir, Stage::Reconstruction))) {
        nn::load_checkpoint(b.generator->params(), checkpoint_path(dir, Stage::Reconstruction));
        if (fs::exists(dir / "discriminator.uckp")) nn::load_checkpoint(b.discriminator->params(), dir / "discriminator.uckp");
        b.has_reconstructor = true;
    }
}

ModelBundle load_bundle(const std::filesystem::path& dir) {
    for (Stage s : {Stage::Orientation, Stage::LutFormer, Stage::Reconstruction}) {
        const auto p = checkpoint_path(dir, s);
        if (!std::filesystem::exists(p)) continue;
        RunConfig cfg;
        try {
            cfg = parse_config(nn::read_checkpoint_config(p));
        } catch (const ConfigError& e) {
            throw nn::CheckpointError(p.string() + ": embedded config: " + e.what());
        }
        ModelBundle b(cfg);
        load_available(b, dir);
        return b;
    }
    throw nn::CheckpointError("no checkpoints in " + dir.string());
}

}  // namespace upright
