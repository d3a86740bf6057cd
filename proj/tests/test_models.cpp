// SPDX-License-Identifier: Apache-2.0
#include "upright/metrics.hpp"
#include "upright/pipeline.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace upright;
using upright::testing::random_image;
using upright::testing::smooth_sphere_image;

namespace {

void copy_param(nn::ParamStore& dst, const nn::ParamStore& src, const std::string& name) {
    auto from = src.find(name)->tensor.values();
    auto to = dst.find(name)->tensor.values();
    ASSERT_EQ(from.size(), to.size()) << name;
    std::copy(from.begin(), from.end(), to.begin());
}

void zero_param(nn::ParamStore& s, const std::string& name) {
    for (auto& v : s.find(name)->tensor.values()) v = 0.0f;
}

bool bitwise_equal(std::span<const float> a, std::span<const float> b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin());
}

}  // namespace

TEST(DecodeAngles, AffineMap) {
    EXPECT_EQ(decode_angles(0.5, 0.5), TiltAngles(0, 0));
    EXPECT_EQ(decode_angles(0, 1), TiltAngles(-90, 90));
    EXPECT_EQ(decode_angles(0.75, 0.25), TiltAngles(45, -45));
    EXPECT_DOUBLE_EQ(normalize_angle(45), 0.75);
    EXPECT_THROW(decode_angles(-0.01, 0.5), DomainError);
    EXPECT_THROW(decode_angles(0.5, std::nan("")), DomainError);
}

TEST(OrientationNet, DeskShapesAndRange) {
    const OrientationNet net(desk_preset().orientation, 1);
    const Image img = random_image(EquirectGrid(64, 128), 3, 1);
    nn::NoGradGuard g;
    const auto out = net.forward(images_to_tensor({&img, &img}));
    EXPECT_EQ(out.angles.shape(), (nn::Shape{2, 2}));
    EXPECT_EQ(out.shallow.shape(), (nn::Shape{2, 8, 64, 128}));
    EXPECT_EQ(out.features.shape(), (nn::Shape{2, 64, 2, 4}));
    for (float v : out.angles.values()) {
        EXPECT_GT(v, 0.0f);
        EXPECT_LT(v, 1.0f);
    }
    EXPECT_THROW(net.forward(image_to_tensor(random_image(EquirectGrid(32, 64), 3, 1))), nn::ShapeError);
}

TEST(OrientationNet, FiveBlocksHalveToEightBySixteen) {
    // Paper-preset geometry with slim channels; the full preset is exercised by the acceptance run.
    OrientationNetConfig cfg = paper_preset().orientation;
    cfg.stem_channels = 2;
    cfg.max_channels = 4;
    const OrientationNet net(cfg, 2);
    nn::NoGradGuard g;
    const auto out = net.forward(nn::TensorF::zeros({1, 3, 256, 512}));
    EXPECT_EQ(out.features.dim(2), 8);
    EXPECT_EQ(out.features.dim(3), 16);
    OrientationNetConfig tiny = cfg;
    tiny.height = 16;
    tiny.width = 32;
    EXPECT_THROW(OrientationNet(tiny, 1), DomainError);
}

TEST(AngleLoss, ClosedFormAndGradient) {
    const nn::TensorF truth({1, 2}, {0.5f, 0.5f});
    const nn::TensorF pred({1, 2}, {0.6f, 0.5f}, true);
    const nn::TensorF loss = angle_loss(pred, truth, 1000.0);
    EXPECT_NEAR(loss.item(), 5.0, 1e-4);
    loss.backward();
    EXPECT_NEAR(pred.grad()[0], 1000.0 * 0.1, 1e-2);
    EXPECT_NEAR(pred.grad()[1], 0.0, 1e-6);
    EXPECT_EQ(angle_loss(truth, truth, 1000.0).item(), 0.0f);
    // Symmetric in the components.
    const nn::TensorF a({1, 2}, {0.3f, 0.9f}), b({1, 2}, {0.9f, 0.3f}), z({1, 2}, {0.5f, 0.5f});
    EXPECT_FLOAT_EQ(angle_loss(a, z, 1000.0).item(), angle_loss(b, z, 1000.0).item());
}

TEST(LutLoss, ClosedFormMatchesLutError) {
    const EquirectGrid g(8, 16);
    const Lut truth = generate_lut({20, -10}, g, LutDirection::InverseUpright);
    std::vector<float> shifted(truth.data().begin(), truth.data().end());
    for (auto& v : shifted) v = v * 0.5f + 0.01f;
    std::vector<float> base(truth.data().begin(), truth.data().end());
    for (auto& v : base) v *= 0.5f;
    const nn::TensorF a({1, 2, 8, 16}, shifted), b({1, 2, 8, 16}, base);
    EXPECT_NEAR(lut_loss(a, b, 100.0).item(), 1.0, 1e-4);
    EXPECT_EQ(lut_loss(b, b, 100.0).item(), 0.0f);

    const Lut other = generate_lut({-5, 33}, g, LutDirection::InverseUpright);
    const nn::TensorF t1({1, 2, 8, 16}, std::vector<float>(truth.data().begin(), truth.data().end()));
    const nn::TensorF t2({1, 2, 8, 16}, std::vector<float>(other.data().begin(), other.data().end()));
    EXPECT_NEAR(lut_loss(t1, t2, 100.0).item(), 100.0 * lut_error(truth, other).mean_abs_error, 1e-3);
    EXPECT_THROW(lut_loss(t1, nn::TensorF::zeros({1, 2, 4, 8}), 100.0), nn::ShapeError);
}

TEST(LutFormer, ShapesRangeAndVocabulary) {
    const LutFormer net(desk_preset().lutformer, 3);
    nn::NoGradGuard g;
    const nn::TensorF out = net.forward({TiltAngles(10, -20), TiltAngles(0, 0)});
    EXPECT_EQ(out.shape(), (nn::Shape{2, 2, 64, 128}));
    for (float v : out.values()) {
        ASSERT_GT(v, -1.0f);
        ASSERT_LT(v, 1.0f);
    }
    EXPECT_EQ(LutFormer::vocabulary_index(-90), 0);
    EXPECT_EQ(LutFormer::vocabulary_index(90), 180);
    EXPECT_EQ(LutFormer::vocabulary_index(0.4), 90);
    EXPECT_EQ(LutFormer::vocabulary_index(0.6), 91);
    EXPECT_THROW(LutFormer::vocabulary_index(91), DomainError);
    const Lut lut = net.generate({10, -20});
    EXPECT_EQ(lut.grid(), EquirectGrid(64, 128));
    EXPECT_EQ(lut.direction(), LutDirection::InverseUpright);
}

TEST(LutFormer, SwappingPitchAndRollChangesOutput) {
    const LutFormer net(desk_preset().lutformer, 4);
    nn::NoGradGuard g;
    for (auto [p, r] : {std::pair{10.0, 20.0}, {-45.0, 3.0}}) {
        const auto a = net.forward({TiltAngles(p, r)});
        const auto b = net.forward({TiltAngles(r, p)});
        EXPECT_FALSE(bitwise_equal(a.values(), b.values()));
    }
}

TEST(LutFormer, WithoutFusionTokensMixOnlyThroughAttention) {
    // Silence the attention value path; then only the fusion layer can carry the roll
    // input into the pitch token.
    for (bool fusion : {false, true}) {
        LutFormerConfig cfg = desk_preset().lutformer;
        cfg.fusion = fusion;
        LutFormer net(cfg, 5);
        zero_param(net.params(), "pre.attn.wv");
        zero_param(net.params(), "pre.attn.bv");
        nn::NoGradGuard g;
        const auto a = net.tokens({TiltAngles(12, -40)});
        const auto b = net.tokens({TiltAngles(12, 25)});
        const int d = cfg.embed_dim;
        const bool pitch_token_same = bitwise_equal(a.values().subspan(0, d), b.values().subspan(0, d));
        EXPECT_EQ(pitch_token_same, !fusion) << "fusion=" << fusion;
    }
}

TEST(LutFormer, PaperPresetShape) {
    const LutFormerConfig cfg = paper_preset().lutformer;
    EXPECT_EQ(cfg.embed_dim, 512);
    EXPECT_EQ(cfg.out_h(), 256);
    EXPECT_EQ(cfg.out_w(), 512);
    LutFormerConfig bad = cfg;
    bad.embed_dim = 500;
    EXPECT_THROW(bad.validate(), DomainError);
}

TEST(Generator, RangeShapeAndResidualReduction) {
    const ReconstructorConfig cfg = desk_preset().reconstructor;
    Generator full(cfg, 6);
    ReconstructorConfig bare = cfg;
    bare.res_blocks = 0;
    Generator reduced(bare, 99);
    for (const char* n : {"stem.w", "stem.b", "head.w", "head.b"}) copy_param(reduced.params(), full.params(), n);
    for (int i = 0; i < cfg.res_blocks; ++i)
        for (const char* part : {".0.w", ".0.b", ".1.w", ".1.b"}) zero_param(full.params(), "res." + std::to_string(i) + part);

    const Image feat = random_image(EquirectGrid(16, 32), 8, 7);
    nn::NoGradGuard g;
    const auto a = full.forward(image_to_tensor(feat));
    const auto b = reduced.forward(image_to_tensor(feat));
    EXPECT_EQ(a.shape(), (nn::Shape{1, 3, 16, 32}));
    EXPECT_TRUE(bitwise_equal(a.values(), b.values()));
    for (float v : a.values()) {
        ASSERT_GE(v, 0.0f);
        ASSERT_LE(v, 1.0f);
    }
}

TEST(PatchDiscriminator, FullyConvolutional) {
    const PatchDiscriminator d(3, 8, 7);
    nn::NoGradGuard g;
    const Image img = random_image(EquirectGrid(16, 32), 3, 8);
    const auto m = d.forward(image_to_tensor(img));
    ASSERT_EQ(m.shape(), (nn::Shape{1, 1, 4, 8}));
    for (float v : m.values()) {
        EXPECT_GT(v, 0.0f);
        EXPECT_LT(v, 1.0f);
    }
    // Rolling the input by one patch stride (4 px) rolls the interior of the map by one.
    Image rolled(3, img.grid());
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 32; ++x) rolled.at(c, y, (x + 4) % 32) = img.at(c, y, x);
    const auto mr = d.forward(image_to_tensor(rolled));
    for (int y = 0; y < 4; ++y)
        for (int x = 2; x <= 4; ++x) EXPECT_FLOAT_EQ(mr.values()[y * 8 + x + 1], m.values()[y * 8 + x]);
    // Constant input: constant map away from the zero-padded border.
    const auto mc = d.forward(nn::TensorF::full({1, 3, 32, 64}, 0.4f));
    for (int y = 2; y < 6; ++y)
        for (int x = 2; x < 14; ++x) EXPECT_FLOAT_EQ(mc.values()[y * 16 + x], mc.values()[2 * 16 + 2]);
    EXPECT_THROW(d.forward(nn::TensorF::zeros({1, 3, 10, 20})), nn::ShapeError);
}

TEST(SsimLoss, MatchesReferenceMetric) {
    const EquirectGrid g(32, 64);
    const Image a = smooth_sphere_image(g, 3, 1);
    Image b = a;
    const Image noise = random_image(g, 3, 2);
    for (std::size_t i = 0; i < b.data().size(); ++i) b.data()[i] += 0.1f * (noise.data()[i] - 0.5f);
    EXPECT_NEAR(ssim_loss(image_to_tensor(a), image_to_tensor(b)).item(), 1.0 - ssim(a, b), 1e-4);
    EXPECT_NEAR(ssim_loss(image_to_tensor(a), image_to_tensor(a)).item(), 0.0, 1e-5);
}

TEST(ReconstructionLoss, ComponentsAndWeighting) {
    const EquirectGrid g(16, 32);
    const PatchDiscriminator d(3, 8, 1);
    const PerceptualExtractor e;
    const auto x = image_to_tensor(smooth_sphere_image(g, 3, 3));
    const auto y = image_to_tensor(smooth_sphere_image(g, 3, 4));
    const auto same = reconstruction_loss(x, x, d, e, LossWeights{});
    EXPECT_EQ(same.perceptual.item(), 0.0f);
    EXPECT_EQ(same.pixel.item(), 0.0f);
    EXPECT_NEAR(same.ssim.item(), 0.0, 1e-5);

    LossWeights w;
    const auto r1 = reconstruction_loss(x, y, d, e, w);
    w.alpha *= 2;
    const auto r2 = reconstruction_loss(x, y, d, e, w);
    EXPECT_NEAR(r2.total.item() - r1.total.item(), 0.01 * r1.perceptual.item(), 1e-5);
    EXPECT_GT(r1.perceptual.item(), 0.0f);
    const double expect = 0.01 * r1.perceptual.item() + r1.ssim.item() + r1.pixel.item() + 0.01 * r1.adversarial.item();
    EXPECT_NEAR(r1.total.item(), expect, 1e-5);
    EXPECT_TRUE(std::isfinite(discriminator_loss(d, x, y).item()));
}

TEST(Pipeline, OracleSubstitutionIsBitwiseRotateImage) {
    const OrientationNet net(desk_preset().orientation, 11);
    const Image input = smooth_sphere_image(EquirectGrid(64, 128), 3, 5);
    const PipelineStages stages{network_angles_rgb_features(net), analytic_lut(), identity_reconstruction()};
    const AdjustResult r = end_to_end_adjust(input, stages);
    EXPECT_EQ(r.angles, net.predict(input));
    EXPECT_TRUE(r.image == rotate_image(input, r.angles, LutDirection::InverseUpright));
    EXPECT_THROW(end_to_end_adjust(input, PipelineStages{}), DomainError);
}

TEST(Pipeline, LearnedStagesPreserveShape) {
    const ModelPreset p = desk_preset();
    const OrientationNet o(p.orientation, 1);
    const LutFormer l(p.lutformer, 2);
    const Generator gen(p.reconstructor, 3);
    const Image input = random_image(p.image_grid, 3, 4);
    const AdjustResult r = end_to_end_adjust(input, learned_pipeline(o, l, gen));
    EXPECT_EQ(r.image.grid(), input.grid());
    EXPECT_EQ(r.image.channels(), 3);
    const AdjustResult fixed = end_to_end_adjust(input, {fixed_orientation({0, 0}), analytic_lut(), identity_reconstruction()});
    for (std::size_t i = 0; i < input.data().size(); ++i) ASSERT_NEAR(fixed.image.data()[i], input.data()[i], 1e-6);
}

TEST(Models, CheckpointRoundTrip) {
    const ModelPreset p = desk_preset();
    const LutFormer a(p.lutformer, 1);
    LutFormer b(p.lutformer, 2);
    const auto path = std::filesystem::temp_directory_path() / "upright_test_lutformer.uckp";
    nn::save_checkpoint(a.params(), "preset=desk\n", path);
    nn::load_checkpoint(b.params(), path);
    nn::NoGradGuard g;
    EXPECT_TRUE(bitwise_equal(a.forward({TiltAngles(3, 4)}).values(), b.forward({TiltAngles(3, 4)}).values()));
    OrientationNet wrong(p.orientation, 1);
    EXPECT_THROW(nn::load_checkpoint(wrong.params(), path), nn::CheckpointError);
    std::filesystem::remove(path);
}
