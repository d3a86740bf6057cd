// SPDX-License-Identifier: Apache-2.0
#include "gradcheck.hpp"
#include "upright/nn/ops.hpp"
#include "upright/nn/params.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>

using namespace upright::nn;

namespace {

using gradcheck::random_tensor;

}  // namespace

class GradCheck : public ::testing::TestWithParam<int> {};

TEST_P(GradCheck, EveryOp) {
    for (const auto& r : gradcheck::run_suite(GetParam())) {
        EXPECT_FALSE(r.missing_grad) << r.op;
        EXPECT_LE(r.max_rel_error, 1e-3) << r.op;
    }
}

INSTANTIATE_TEST_SUITE_P(Seeds, GradCheck, ::testing::Range(1, 11));

TEST(Conv2d, MatchesBruteForce) {
    std::mt19937_64 rng(77);
    for (auto [stride, pad, k] : {std::tuple{1, 1, 3}, {2, 1, 4}, {1, 0, 3}, {2, 0, 1}}) {
        const TensorD x = random_tensor({2, 3, 7, 8}, rng);
        const TensorD w = random_tensor({4, 3, k, k}, rng);
        const TensorD b = random_tensor({4}, rng);
        const TensorD y = conv2d(x, w, &b, stride, pad);
        const int Ho = (7 + 2 * pad - k) / stride + 1, Wo = (8 + 2 * pad - k) / stride + 1;
        ASSERT_EQ(y.shape(), (Shape{2, 4, Ho, Wo}));
        for (int n = 0; n < 2; ++n)
            for (int o = 0; o < 4; ++o)
                for (int i = 0; i < Ho; ++i)
                    for (int j = 0; j < Wo; ++j) {
                        double s = b.values()[o];
                        for (int c = 0; c < 3; ++c)
                            for (int di = 0; di < k; ++di)
                                for (int dj = 0; dj < k; ++dj) {
                                    const int yy = i * stride - pad + di, xx = j * stride - pad + dj;
                                    if (yy < 0 || yy >= 7 || xx < 0 || xx >= 8) continue;
                                    s += x.values()[((n * 3 + c) * 7 + yy) * 8 + xx] *
                                         w.values()[((o * 3 + c) * k + di) * k + dj];
                                }
                        ASSERT_NEAR(y.values()[((n * 4 + o) * Ho + i) * Wo + j], s, 1e-10);
                    }
    }
}

TEST(LayerNorm, NormalizesLastAxis) {
    std::mt19937_64 rng(4);
    const TensorD x = random_tensor({5, 16}, rng, -3, 7);
    const TensorD y = layer_norm(x, TensorD::full({16}, 1.0), TensorD::zeros({16}));
    for (int r = 0; r < 5; ++r) {
        double m = 0, v = 0;
        for (int c = 0; c < 16; ++c) m += y.values()[r * 16 + c];
        m /= 16;
        for (int c = 0; c < 16; ++c) v += std::pow(y.values()[r * 16 + c] - m, 2);
        EXPECT_NEAR(m, 0.0, 1e-12);
        EXPECT_NEAR(v / 16, 1.0, 1e-4);
    }
}

TEST(Attention, HandComputedSingleHead) {
    // Identity projections, two tokens: output = softmax(x x^T / sqrt(2)) x.
    const TensorD x({1, 2, 2}, {1, 0, 0, 2});
    const TensorD eye({2, 2}, {1, 0, 0, 1});
    const TensorD zero = TensorD::zeros({2});
    const TensorD y = multihead_self_attention(x, 1, eye, zero, eye, zero, eye, zero, eye, zero);
    const double s = 1 / std::sqrt(2.0);
    const double a0 = 1 / (1 + std::exp(-s)), a1 = 1 / (1 + std::exp(4 * s));
    EXPECT_NEAR(y.values()[0], a0, 1e-12);
    EXPECT_NEAR(y.values()[1], 2 * (1 - a0), 1e-12);
    EXPECT_NEAR(y.values()[2], a1, 1e-12);
    EXPECT_NEAR(y.values()[3], 2 * (1 - a1), 1e-12);
}

TEST(Upsample, ReproducesLinearRampAndConstant) {
    TensorD x({1, 1, 2, 3}, {0, 1, 2, 10, 11, 12});
    const TensorD y = bilinear_upsample(x, 4);
    ASSERT_EQ(y.shape(), (Shape{1, 1, 8, 12}));
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 12; ++j) {
            const double sy = (i + 0.5) / 4 - 0.5, sx = (j + 0.5) / 4 - 0.5;
            EXPECT_NEAR(y.values()[i * 12 + j], 10 * sy + sx, 1e-12);
        }
}

TEST(Autograd, NoGradGuardStopsRecording) {
    const TensorD a = TensorD::full({3}, 2.0, true);
    {
        NoGradGuard g;
        EXPECT_FALSE(grad_enabled());
        EXPECT_FALSE(square(a).requires_grad());
    }
    EXPECT_TRUE(grad_enabled());
    const TensorD s = sum(square(a));
    s.backward();
    for (double g : a.grad()) EXPECT_DOUBLE_EQ(g, 4.0);
    EXPECT_THROW(square(a).backward(), ShapeError);
}

TEST(Params, FrozenParametersDoNotMove) {
    Rng rng(3);
    ParamStore store;
    TensorF w = store.add_uniform("w", {4}, 4, rng);
    TensorF b = store.add_constant("b", {4}, 0.5f);
    const std::vector<float> w0(w.values().begin(), w.values().end());
    store.find("w")->frozen = true;
    w.set_requires_grad(false);
    Adam opt(0.1f);
    for (int i = 0; i < 3; ++i) {
        sum(square(add(w, b))).backward();
        opt.step(store);
    }
    EXPECT_TRUE(std::equal(w0.begin(), w0.end(), w.values().begin()));
    EXPECT_NE(b.values()[0], 0.5f);
    store.set_frozen(true);
    EXPECT_FALSE(b.requires_grad());
}

TEST(Params, AdamDescendsQuadratic) {
    ParamStore store;
    TensorF x = store.add_constant("x", {2}, 3.0f);
    Adam opt(0.1f);
    for (int i = 0; i < 300; ++i) {
        sum(square(x)).backward();
        opt.step(store);
    }
    EXPECT_LT(std::abs(x.values()[0]), 0.05f);
    Sgd sgd(0.25f);
    sum(square(x)).backward();
    const float before = x.values()[1];
    sgd.step(store);
    EXPECT_FLOAT_EQ(x.values()[1], before * 0.5f);
}

TEST(Params, SeededInitIsDeterministic) {
    auto build = [](std::uint64_t seed) {
        Rng rng(seed);
        ParamStore s;
        s.add_uniform("a", {3, 3}, 9, rng);
        s.add_normal("b", {5}, 0.02, rng);
        return s;
    };
    const ParamStore a = build(11), b = build(11), c = build(12);
    for (std::size_t i = 0; i < a.params().size(); ++i) {
        const auto av = a.params()[i].tensor.values();
        EXPECT_TRUE(std::equal(av.begin(), av.end(), b.params()[i].tensor.values().begin()));
        EXPECT_FALSE(std::equal(av.begin(), av.end(), c.params()[i].tensor.values().begin()));
    }
    for (float v : a.params()[0].tensor.values()) EXPECT_LE(std::abs(v), 1.0f / 3.0f);
    EXPECT_NE(mix_seed(1, 0), mix_seed(1, 1));
    EXPECT_NE(mix_seed(1, 0), mix_seed(2, 0));
}

TEST(Checkpoint, RoundTripAndMismatch) {
    Rng rng(5);
    ParamStore a;
    a.add_uniform("conv.w", {2, 1, 3, 3}, 9, rng);
    a.add_constant("conv.b", {2}, 0.25f);
    const auto path = std::filesystem::temp_directory_path() / "upright_test.uckp";
    save_checkpoint(a, "preset=desk\n", path);

    Rng other(9);
    ParamStore b;
    b.add_uniform("conv.w", {2, 1, 3, 3}, 9, other);
    b.add_constant("conv.b", {2}, 0.0f);
    EXPECT_EQ(load_checkpoint(b, path), "preset=desk\n");
    EXPECT_EQ(read_checkpoint_config(path), "preset=desk\n");
    for (std::size_t i = 0; i < 2; ++i) {
        const auto av = a.params()[i].tensor.values();
        EXPECT_TRUE(std::equal(av.begin(), av.end(), b.params()[i].tensor.values().begin()));
    }

    ParamStore wrong;
    wrong.add_constant("conv.w", {2, 1, 3, 3}, 0.0f);
    wrong.add_constant("conv.b", {3}, 0.0f);
    EXPECT_THROW(load_checkpoint(wrong, path), CheckpointError);
    EXPECT_THROW(load_checkpoint(b, path.string() + ".missing"), CheckpointError);
    std::filesystem::remove(path);
}
