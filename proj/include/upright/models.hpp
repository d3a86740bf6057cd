// SPDX-License-Identifier: Apache-2.0
#pragma once

// The three networks (orientation estimator, LUT transformer, reconstructor), the
// patch discriminator and the fixed perceptual feature extractor.

#include "upright/geometry.hpp"
#include "upright/image.hpp"
#include "upright/lut.hpp"
#include "upright/nn/ops.hpp"
#include "upright/nn/params.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace upright {

using nn::TensorF;

struct OrientationNetConfig {
    int channels = 3;
    int height = 64;
    int width = 128;
    int stem_channels = 8;
    int blocks = 5;
    /// Channel doubling per block stops at this width (keeps desk runs cheap).
    int max_channels = 64;

    /// Channel count after block i (0-based).
    int block_channels(int i) const;
    void validate() const;
};

struct LutFormerConfig {
    int embed_dim = 32;
    int coarse_h = 4;
    int coarse_w = 8;
    int factor = 16;
    int heads = 2;
    int post_blocks = 2;
    /// Hidden width of the pre-upsample feed-forward layer, as a multiple of embed_dim.
    int ffn_mult = 2;
    /// Hidden channels of the convolutional feed-forward in post-upsample blocks.
    int post_ffn_channels = 8;
    /// Fully-connected fusion across the two tokens. Off gives the No_FC ablation.
    bool fusion = true;

    int out_h() const { return coarse_h * factor; }
    int out_w() const { return coarse_w * factor; }
    void validate() const;
};

struct ReconstructorConfig {
    int in_channels = 8;
    int out_channels = 3;
    int hidden = 16;
    int res_blocks = 5;
    int disc_channels = 16;
    void validate() const;
};

struct LossWeights {
    double lambda = 1000.0;
    double mu = 100.0;
    double alpha = 0.01;
    double beta = 0.01;
    void validate() const;
};

struct ModelPreset {
    std::string name;
    EquirectGrid image_grid;
    OrientationNetConfig orientation;
    LutFormerConfig lutformer;
    ReconstructorConfig reconstructor;
};

ModelPreset desk_preset();
ModelPreset paper_preset();
/// "desk" or "paper"; anything else throws DomainError.
ModelPreset preset_by_name(const std::string& name);

// Image batch <-> (N, C, H, W) tensor.
TensorF images_to_tensor(const std::vector<const Image*>& images);
TensorF image_to_tensor(const Image& image);
Image tensor_to_image(const TensorF& t, int n = 0);

/// Normalized angles: (angle + 90) / 180.
double normalize_angle(double deg);
/// (p, r) x 180 - 90. Inputs outside [0, 1] throw DomainError.
TiltAngles decode_angles(double p_norm, double r_norm);

class OrientationNet {
public:
    struct Output {
        TensorF angles;    // (N, 2): normalized pitch, roll in (0, 1)
        TensorF shallow;   // (N, stem, H, W)
        TensorF features;  // (N, C_last, H / 2^blocks, W / 2^blocks)
    };

    OrientationNet(const OrientationNetConfig& cfg, std::uint64_t seed);

    Output forward(const TensorF& x) const;
    /// Stem only; the shallow features that the LUT rotates.
    TensorF stem(const TensorF& x) const;
    TiltAngles predict(const Image& image) const;

    const OrientationNetConfig& config() const { return cfg_; }
    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }

private:
    struct Conv {
        TensorF w, b;
    };
    Conv conv(const std::string& name, int in, int out, int k, nn::Rng& rng);
    void check_input(const TensorF& x) const;

    OrientationNetConfig cfg_;
    nn::ParamStore params_;
    Conv stem1_, stem2_;
    std::vector<std::pair<Conv, Conv>> blocks_;
    TensorF fc_w_, fc_b_;
};

class LutFormer {
public:
    static constexpr int kVocabulary = 181;  // 1-degree bins over [-90, 90]

    LutFormer(const LutFormerConfig& cfg, std::uint64_t seed);

    /// (N, 2, out_h, out_w) with every value in (-1, 1).
    TensorF forward(const std::vector<TiltAngles>& angles) const;
    /// Token pair after the pre-upsample encoder and fusion, (N, 2, embed_dim).
    TensorF tokens(const std::vector<TiltAngles>& angles) const;
    Lut generate(const TiltAngles& angles) const;

    /// Nearest 1-degree bin index in [0, 181).
    static int vocabulary_index(double deg);

    const LutFormerConfig& config() const { return cfg_; }
    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }

private:
    struct Block {
        TensorF wq, bq, wk, bk, wv, bv, wo, bo;
        TensorF ln1_g, ln1_b, ln2_g, ln2_b;
        TensorF f1_w, f1_b, f2_w, f2_b;
    };
    Block make_block(const std::string& name, int dim, bool dense, nn::Rng& rng);

    LutFormerConfig cfg_;
    nn::ParamStore params_;
    TensorF embed_, pos_;
    Block pre_;
    TensorF fuse_w_, fuse_b_;
    std::vector<Block> post_;
};

class Generator {
public:
    Generator(const ReconstructorConfig& cfg, std::uint64_t seed);
    /// (N, in_channels, H, W) -> (N, out_channels, H, W) in (0, 1).
    TensorF forward(const TensorF& features) const;

    const ReconstructorConfig& config() const { return cfg_; }
    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }

private:
    ReconstructorConfig cfg_;
    nn::ParamStore params_;
    TensorF stem_w_, stem_b_, head_w_, head_b_;
    std::vector<std::array<TensorF, 4>> res_;
};

/// PatchGAN-style discriminator: two stride-2 4x4 convolutions and a 3x3 head,
/// giving one probability per patch on an (H/4, W/4) map.
class PatchDiscriminator {
public:
    PatchDiscriminator(int in_channels, int channels, std::uint64_t seed);
    TensorF forward(const TensorF& image) const;

    nn::ParamStore& params() { return params_; }
    const nn::ParamStore& params() const { return params_; }

private:
    int in_channels_;
    nn::ParamStore params_;
    TensorF w1_, b1_, w2_, b2_, w3_, b3_;
};

/// Fixed random three-layer convolutional pyramid used as the perceptual feature
/// space. Weights depend only on the seed and never train.
class PerceptualExtractor {
public:
    static constexpr std::uint64_t kDefaultSeed = 0x9e3779b97f4a7c15ull;

    explicit PerceptualExtractor(int in_channels = 3, std::uint64_t seed = kDefaultSeed);
    TensorF forward(const TensorF& image) const;

private:
    nn::ParamStore params_;
    std::vector<std::pair<TensorF, TensorF>> layers_;
};

// ---- losses -------------------------------------------------------------------

/// lambda * sum over (pitch, roll) of smooth-L1 of the normalized difference, averaged
/// over the batch. pred and truth are (N, 2).
TensorF angle_loss(const TensorF& pred, const TensorF& truth, double lambda);

/// mu * mean |generated - truth|.
TensorF lut_loss(const TensorF& generated, const TensorF& truth, double mu);

/// 1 - SSIM with an 11x11 Gaussian window (sigma 1.5) over valid windows, mean over
/// batch and channels. Differentiable.
TensorF ssim_loss(const TensorF& a, const TensorF& b);

struct ReconstructionLoss {
    TensorF total, perceptual, ssim, pixel, adversarial;
};

ReconstructionLoss reconstruction_loss(const TensorF& generated, const TensorF& target,
                                       const PatchDiscriminator& disc, const PerceptualExtractor& extractor,
                                       const LossWeights& w);

/// BCE(D(real), 1) + BCE(D(fake), 0), halved. `fake` is detached here.
TensorF discriminator_loss(const PatchDiscriminator& disc, const TensorF& real, const TensorF& fake);

}  // namespace upright
