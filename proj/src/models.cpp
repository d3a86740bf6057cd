// SPDX-License-Identifier: Apache-2.0
#include "upright/models.hpp"

#include "upright/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace upright {

using namespace nn;

// ---- configs -------------------------------------------------------------------

int OrientationNetConfig::block_channels(int i) const {
    return std::min(max_channels, stem_channels << (i + 1));
}

void OrientationNetConfig::validate() const {
    if (channels < 1 || stem_channels < 1 || blocks < 1 || max_channels < stem_channels) {
        throw DomainError("orientation config: channel counts must be positive");
    }
    if ((height >> blocks) < 1 || (width >> blocks) < 1) {
        throw DomainError("orientation config: input too small for " + std::to_string(blocks) + " blocks");
    }
}

void LutFormerConfig::validate() const {
    if (coarse_h < 1 || coarse_w < 1 || factor < 1 || heads < 1 || ffn_mult < 1 || post_blocks < 0) {
        throw DomainError("lutformer config: sizes must be positive");
    }
    if (embed_dim != coarse_h * coarse_w) throw DomainError("lutformer config: embed_dim must equal coarse_h * coarse_w");
    if (embed_dim % heads || (out_h() * out_w()) % heads) throw DomainError("lutformer config: heads must divide token dims");
    if (out_w() != 2 * out_h()) throw DomainError("lutformer config: output must be 2:1");
}

void ReconstructorConfig::validate() const {
    if (in_channels < 1 || out_channels < 1 || hidden < 1 || res_blocks < 0 || disc_channels < 1) {
        throw DomainError("reconstructor config: sizes must be positive");
    }
}

void LossWeights::validate() const {
    if (!(lambda > 0 && mu > 0 && alpha > 0 && beta > 0)) throw DomainError("loss weights must be positive");
}

ModelPreset desk_preset() {
    return ModelPreset{"desk", EquirectGrid(64, 128), OrientationNetConfig{}, LutFormerConfig{}, ReconstructorConfig{}};
}

ModelPreset paper_preset() {
    OrientationNetConfig o;
    o.height = 256;
    o.width = 512;
    o.stem_channels = 32;
    o.max_channels = 512;
    LutFormerConfig l;
    l.embed_dim = 512;
    l.coarse_h = 16;
    l.coarse_w = 32;
    l.factor = 16;
    l.heads = 8;
    ReconstructorConfig r;
    r.in_channels = 32;
    r.hidden = 64;
    r.disc_channels = 64;
    return ModelPreset{"paper", EquirectGrid(256, 512), o, l, r};
}

ModelPreset preset_by_name(const std::string& name) {
    if (name == "desk") return desk_preset();
    if (name == "paper") return paper_preset();
    throw DomainError("unknown preset '" + name + "' (expected desk or paper)");
}

// ---- conversions ---------------------------------------------------------------

TensorF images_to_tensor(const std::vector<const Image*>& images) {
    if (images.empty()) throw DomainError("images_to_tensor: empty batch");
    const Image& first = *images.front();
    std::vector<float> v;
    v.reserve(images.size() * first.data().size());
    for (const Image* im : images) {
        if (im->channels() != first.channels() || !(im->grid() == first.grid())) {
            throw DomainError("images_to_tensor: batch images differ in shape");
        }
        v.insert(v.end(), im->data().begin(), im->data().end());
    }
    return TensorF({static_cast<int>(images.size()), first.channels(), first.height(), first.width()}, std::move(v));
}

TensorF image_to_tensor(const Image& image) { return images_to_tensor({&image}); }

Image tensor_to_image(const TensorF& t, int n) {
    if (t.ndim() != 4 || n < 0 || n >= t.dim(0)) throw ShapeError("tensor_to_image: expected (N, C, H, W)");
    const std::size_t per = static_cast<std::size_t>(t.dim(1)) * t.dim(2) * t.dim(3);
    auto v = t.values().subspan(per * n, per);
    return Image(t.dim(1), EquirectGrid(t.dim(2), t.dim(3)), std::vector<float>(v.begin(), v.end()));
}

double normalize_angle(double deg) { return (deg + 90.0) / 180.0; }

TiltAngles decode_angles(double p_norm, double r_norm) {
    auto ok = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
    if (!ok(p_norm) || !ok(r_norm)) throw DomainError("decode_angles: normalized angles must lie in [0, 1]");
    return TiltAngles(p_norm * 180.0 - 90.0, r_norm * 180.0 - 90.0);
}

// ---- orientation ---------------------------------------------------------------

OrientationNet::Conv OrientationNet::conv(const std::string& name, int in, int out, int k, Rng& rng) {
    const int fan_in = in * k * k;
    return {params_.add_normal(name + ".w", {out, in, k, k}, std::sqrt(2.0 / fan_in), rng),
            params_.add_constant(name + ".b", {out}, 0.0f)};
}

OrientationNet::OrientationNet(const OrientationNetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    stem1_ = conv("stem.0", cfg_.channels, cfg_.stem_channels, 3, rng);
    stem2_ = conv("stem.1", cfg_.stem_channels, cfg_.stem_channels, 3, rng);
    int in = cfg_.stem_channels;
    for (int i = 0; i < cfg_.blocks; ++i) {
        const int out = cfg_.block_channels(i);
        const std::string n = "block." + std::to_string(i);
        Conv a = conv(n + ".0", in, out, 3, rng);
        Conv b = conv(n + ".1", out, out, 3, rng);
        blocks_.emplace_back(a, b);
        in = out;
    }
    fc_w_ = params_.add_uniform("fc.w", {2, in}, in, rng);
    fc_b_ = params_.add_constant("fc.b", {2}, 0.0f);
}

void OrientationNet::check_input(const TensorF& x) const {
    if (x.ndim() != 4 || x.dim(1) != cfg_.channels || x.dim(2) != cfg_.height || x.dim(3) != cfg_.width) {
        throw ShapeError("orientation net: expected (N, " + std::to_string(cfg_.channels) + ", " +
                         std::to_string(cfg_.height) + ", " + std::to_string(cfg_.width) + "), got " +
                         shape_str(x.shape()));
    }
}

TensorF OrientationNet::stem(const TensorF& x) const {
    check_input(x);
    TensorF h = relu(conv2d(x, stem1_.w, &stem1_.b, 1, 1));
    return relu(conv2d(h, stem2_.w, &stem2_.b, 1, 1));
}

OrientationNet::Output OrientationNet::forward(const TensorF& x) const {
    Output out;
    out.shallow = stem(x);
    TensorF h = out.shallow;
    for (const auto& [a, b] : blocks_) {
        h = maxpool2(h);
        h = relu(conv2d(h, a.w, &a.b, 1, 1));
        h = relu(conv2d(h, b.w, &b.b, 1, 1));
    }
    out.features = h;
    out.angles = sigmoid(linear(global_avgpool(h), fc_w_, &fc_b_));
    return out;
}

TiltAngles OrientationNet::predict(const Image& image) const {
    NoGradGuard g;
    const TensorF a = forward(image_to_tensor(image)).angles;
    return decode_angles(a.values()[0], a.values()[1]);
}

// ---- LutFormer -----------------------------------------------------------------

int LutFormer::vocabulary_index(double deg) {
    const TiltAngles check(deg, 0.0);  // validates range
    return static_cast<int>(std::lround(check.pitch())) + 90;
}

LutFormer::Block LutFormer::make_block(const std::string& name, int dim, bool dense, Rng& rng) {
    Block b;
    if (dense) {
        b.wq = params_.add_uniform(name + ".attn.wq", {dim, dim}, dim, rng);
        b.wk = params_.add_uniform(name + ".attn.wk", {dim, dim}, dim, rng);
        b.wv = params_.add_uniform(name + ".attn.wv", {dim, dim}, dim, rng);
        b.wo = params_.add_uniform(name + ".attn.wo", {dim, dim}, dim, rng);
    } else {
        b.wq = params_.add_uniform(name + ".attn.wq", {dim}, 1, rng);
        b.wk = params_.add_uniform(name + ".attn.wk", {dim}, 1, rng);
        b.wv = params_.add_uniform(name + ".attn.wv", {dim}, 1, rng);
        b.wo = params_.add_uniform(name + ".attn.wo", {dim}, 1, rng);
    }
    b.bq = params_.add_constant(name + ".attn.bq", {dim}, 0.0f);
    b.bk = params_.add_constant(name + ".attn.bk", {dim}, 0.0f);
    b.bv = params_.add_constant(name + ".attn.bv", {dim}, 0.0f);
    b.bo = params_.add_constant(name + ".attn.bo", {dim}, 0.0f);
    b.ln1_g = params_.add_constant(name + ".ln1.g", {dim}, 1.0f);
    b.ln1_b = params_.add_constant(name + ".ln1.b", {dim}, 0.0f);
    b.ln2_g = params_.add_constant(name + ".ln2.g", {dim}, 1.0f);
    b.ln2_b = params_.add_constant(name + ".ln2.b", {dim}, 0.0f);
    if (dense) {
        const int hid = cfg_.ffn_mult * dim;
        b.f1_w = params_.add_uniform(name + ".ffn.0.w", {hid, dim}, dim, rng);
        b.f1_b = params_.add_constant(name + ".ffn.0.b", {hid}, 0.0f);
        b.f2_w = params_.add_uniform(name + ".ffn.1.w", {dim, hid}, hid, rng);
        b.f2_b = params_.add_constant(name + ".ffn.1.b", {dim}, 0.0f);
    } else {
        // Feed-forward as 3x3 convolutions over the 2-channel map.
        const int hid = cfg_.post_ffn_channels;
        b.f1_w = params_.add_uniform(name + ".ffn.0.w", {hid, 2, 3, 3}, 18, rng);
        b.f1_b = params_.add_constant(name + ".ffn.0.b", {hid}, 0.0f);
        b.f2_w = params_.add_uniform(name + ".ffn.1.w", {2, hid, 3, 3}, 9 * hid, rng);
        b.f2_b = params_.add_constant(name + ".ffn.1.b", {2}, 0.0f);
    }
    return b;
}

LutFormer::LutFormer(const LutFormerConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    const int d = cfg_.embed_dim;
    embed_ = params_.add_normal("embed", {kVocabulary, d}, 1.0, rng);
    pos_ = params_.add_normal("pos", {2, d}, 1.0, rng);
    pre_ = make_block("pre", d, true, rng);
    if (cfg_.fusion) {
        fuse_w_ = params_.add_uniform("fuse.w", {2 * d, 2 * d}, 2 * d, rng);
        fuse_b_ = params_.add_constant("fuse.b", {2 * d}, 0.0f);
    }
    for (int i = 0; i < cfg_.post_blocks; ++i) post_.push_back(make_block("post." + std::to_string(i), cfg_.out_h() * cfg_.out_w(), false, rng));
}

TensorF LutFormer::tokens(const std::vector<TiltAngles>& angles) const {
    if (angles.empty()) throw DomainError("lutformer: empty batch");
    const int n = static_cast<int>(angles.size()), d = cfg_.embed_dim;
    std::vector<int> idx;
    for (const auto& a : angles) {
        idx.push_back(vocabulary_index(a.pitch()));
        idx.push_back(vocabulary_index(a.roll()));
    }
    TensorF z = add(reshape(embedding(embed_, idx), {n, 2, d}), pos_);
    const Block& b = pre_;
    z = layer_norm(add(z, multihead_self_attention(z, cfg_.heads, b.wq, b.bq, b.wk, b.bk, b.wv, b.bv, b.wo, b.bo)),
                   b.ln1_g, b.ln1_b);
    z = layer_norm(add(z, linear(relu(linear(z, b.f1_w, &b.f1_b)), b.f2_w, &b.f2_b)), b.ln2_g, b.ln2_b);
    if (cfg_.fusion) z = reshape(linear(reshape(z, {n, 2 * d}), fuse_w_, &fuse_b_), {n, 2, d});
    return z;
}

TensorF LutFormer::forward(const std::vector<TiltAngles>& angles) const {
    const int n = static_cast<int>(angles.size());
    const int H = cfg_.out_h(), W = cfg_.out_w();
    TensorF z = tokens(angles);
    TensorF x = reshape(bilinear_upsample(reshape(z, {n, 2, cfg_.coarse_h, cfg_.coarse_w}), cfg_.factor), {n, 2, H * W});
    for (const Block& b : post_) {
        x = layer_norm(add(x, diagonal_self_attention(x, cfg_.heads, b.wq, b.bq, b.wk, b.bk, b.wv, b.bv, b.wo, b.bo)),
                       b.ln1_g, b.ln1_b);
        TensorF m = reshape(x, {n, 2, H, W});
        TensorF f = conv2d(relu(conv2d(m, b.f1_w, &b.f1_b, 1, 1)), b.f2_w, &b.f2_b, 1, 1);
        x = layer_norm(add(x, reshape(f, {n, 2, H * W})), b.ln2_g, b.ln2_b);
    }
    return nn::tanh(reshape(x, {n, 2, H, W}));
}

Lut LutFormer::generate(const TiltAngles& angles) const {
    NoGradGuard g;
    const TensorF t = forward({angles});
    std::vector<float> v(t.values().begin(), t.values().end());
    for (auto& x : v) x = std::clamp(x, -1.0f, 1.0f);
    return Lut(EquirectGrid(cfg_.out_h(), cfg_.out_w()), LutDirection::InverseUpright, angles, std::move(v));
}

// ---- reconstructor -------------------------------------------------------------

Generator::Generator(const ReconstructorConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    const int h = cfg_.hidden;
    auto conv_w = [&](const std::string& name, int out, int in) {
        return params_.add_normal(name, {out, in, 3, 3}, std::sqrt(2.0 / (9.0 * in)), rng);
    };
    stem_w_ = conv_w("stem.w", h, cfg_.in_channels);
    stem_b_ = params_.add_constant("stem.b", {h}, 0.0f);
    for (int i = 0; i < cfg_.res_blocks; ++i) {
        const std::string n = "res." + std::to_string(i);
        // The second convolution starts small so each block begins near identity.
        TensorF w1 = conv_w(n + ".0.w", h, h);
        TensorF b1 = params_.add_constant(n + ".0.b", {h}, 0.0f);
        TensorF w2 = params_.add_normal(n + ".1.w", {h, h, 3, 3}, 0.1 * std::sqrt(2.0 / (9.0 * h)), rng);
        TensorF b2 = params_.add_constant(n + ".1.b", {h}, 0.0f);
        res_.push_back({w1, b1, w2, b2});
    }
    head_w_ = params_.add_uniform("head.w", {cfg_.out_channels, h, 3, 3}, 9 * h, rng);
    head_b_ = params_.add_constant("head.b", {cfg_.out_channels}, 0.0f);
}

TensorF Generator::forward(const TensorF& features) const {
    if (features.ndim() != 4 || features.dim(1) != cfg_.in_channels) {
        throw ShapeError("generator: expected (N, " + std::to_string(cfg_.in_channels) + ", H, W), got " +
                         shape_str(features.shape()));
    }
    TensorF x = relu(conv2d(features, stem_w_, &stem_b_, 1, 1));
    for (const auto& r : res_) x = add(x, conv2d(relu(conv2d(x, r[0], &r[1], 1, 1)), r[2], &r[3], 1, 1));
    return sigmoid(conv2d(x, head_w_, &head_b_, 1, 1));
}

PatchDiscriminator::PatchDiscriminator(int in_channels, int channels, std::uint64_t seed) : in_channels_(in_channels) {
    Rng rng(seed);
    w1_ = params_.add_uniform("d.0.w", {channels, in_channels, 4, 4}, 16 * in_channels, rng);
    b1_ = params_.add_constant("d.0.b", {channels}, 0.0f);
    w2_ = params_.add_uniform("d.1.w", {2 * channels, channels, 4, 4}, 16 * channels, rng);
    b2_ = params_.add_constant("d.1.b", {2 * channels}, 0.0f);
    w3_ = params_.add_uniform("d.2.w", {1, 2 * channels, 3, 3}, 18 * channels, rng);
    b3_ = params_.add_constant("d.2.b", {1}, 0.0f);
}

TensorF PatchDiscriminator::forward(const TensorF& image) const {
    if (image.ndim() != 4 || image.dim(1) != in_channels_ || image.dim(2) % 4 || image.dim(3) % 4) {
        throw ShapeError("discriminator: expected (N, " + std::to_string(in_channels_) +
                         ", H, W) with H, W divisible by 4, got " + shape_str(image.shape()));
    }
    TensorF h = leaky_relu(conv2d(image, w1_, &b1_, 2, 1), 0.2f);
    h = leaky_relu(conv2d(h, w2_, &b2_, 2, 1), 0.2f);
    return sigmoid(conv2d(h, w3_, &b3_, 1, 1));
}

PerceptualExtractor::PerceptualExtractor(int in_channels, std::uint64_t seed) {
    Rng rng(seed);
    const int widths[] = {in_channels, 8, 16, 16};
    for (int i = 0; i < 3; ++i) {
        const int in = widths[i], out = widths[i + 1];
        const std::string n = "perc." + std::to_string(i);
        layers_.emplace_back(params_.add_normal(n + ".w", {out, in, 3, 3}, std::sqrt(2.0 / (9.0 * in)), rng),
                             params_.add_constant(n + ".b", {out}, 0.0f));
    }
    params_.set_frozen(true);
}

TensorF PerceptualExtractor::forward(const TensorF& image) const {
    TensorF h = image;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        h = relu(conv2d(h, layers_[i].first, &layers_[i].second, i == 0 ? 1 : 2, 1));
    }
    return h;
}

// ---- losses --------------------------------------------------------------------

TensorF angle_loss(const TensorF& pred, const TensorF& truth, double lambda) {
    if (pred.shape() != truth.shape() || pred.ndim() != 2 || pred.dim(1) != 2) {
        throw ShapeError("angle_loss: expected matching (N, 2) tensors");
    }
    return scale(sum(smooth_l1(sub(pred, truth))), static_cast<float>(lambda / pred.dim(0)));
}

TensorF lut_loss(const TensorF& generated, const TensorF& truth, double mu) {
    if (generated.shape() != truth.shape()) throw ShapeError("lut_loss: shape mismatch");
    return scale(l1(generated, truth), static_cast<float>(mu));
}

TensorF ssim_loss(const TensorF& a, const TensorF& b) {
    if (a.shape() != b.shape() || a.ndim() != 4) throw ShapeError("ssim_loss: expected matching (N, C, H, W)");
    const SsimParams p;
    const int n = a.dim(0) * a.dim(1), H = a.dim(2), W = a.dim(3);
    const auto g = gaussian_taps(p.window, p.sigma);
    std::vector<float> k2(static_cast<std::size_t>(p.window) * p.window);
    for (int i = 0; i < p.window; ++i)
        for (int j = 0; j < p.window; ++j) k2[static_cast<std::size_t>(i) * p.window + j] = static_cast<float>(g[i] * g[j]);
    const TensorF kernel({1, 1, p.window, p.window}, std::move(k2));
    auto blur = [&](const TensorF& t) { return conv2d(t, kernel, static_cast<const TensorF*>(nullptr), 1, 0); };

    const TensorF x = reshape(a, {n, 1, H, W});
    const TensorF y = reshape(b, {n, 1, H, W});
    const float c1 = static_cast<float>(std::pow(p.k1 * p.dynamic_range, 2));
    const float c2 = static_cast<float>(std::pow(p.k2 * p.dynamic_range, 2));
    const TensorF mx = blur(x), my = blur(y);
    const TensorF mxx = square(mx), myy = square(my), mxy = mul(mx, my);
    const TensorF vx = sub(blur(square(x)), mxx);
    const TensorF vy = sub(blur(square(y)), myy);
    const TensorF cxy = sub(blur(mul(x, y)), mxy);
    const TensorF num = mul(add_scalar(scale(mxy, 2.0f), c1), add_scalar(scale(cxy, 2.0f), c2));
    const TensorF den = mul(add_scalar(add(mxx, myy), c1), add_scalar(add(vx, vy), c2));
    return add_scalar(scale(mean(div(num, den)), -1.0f), 1.0f);
}

ReconstructionLoss reconstruction_loss(const TensorF& generated, const TensorF& target, const PatchDiscriminator& disc,
                                       const PerceptualExtractor& extractor, const LossWeights& w) {
    if (generated.shape() != target.shape()) throw ShapeError("reconstruction_loss: shape mismatch");
    ReconstructionLoss r;
    r.perceptual = mse(extractor.forward(generated), extractor.forward(target));
    r.ssim = ssim_loss(generated, target);
    r.pixel = l1(generated, target);
    r.adversarial = bce(disc.forward(generated), 1.0f);
    r.total = add(add(scale(r.perceptual, static_cast<float>(w.alpha)), r.ssim),
                  add(r.pixel, scale(r.adversarial, static_cast<float>(w.beta))));
    return r;
}

TensorF discriminator_loss(const PatchDiscriminator& disc, const TensorF& real, const TensorF& fake) {
    return scale(add(bce(disc.forward(real), 1.0f), bce(disc.forward(fake.detach()), 0.0f)), 0.5f);
}

}  // namespace upright
