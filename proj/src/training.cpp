// SPDX-License-Identifier: Apache-2.0
#include "upright/training.hpp"

#include "upright/remap.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace upright {

using namespace nn;

std::string to_string(Stage s) {
    switch (s) {
        case Stage::Orientation: return "orientation";
        case Stage::LutFormer: return "lutformer";
        case Stage::Reconstruction: return "recon";
    }
    return "?";
}

Stage parse_stage(const std::string& s) {
    if (s == "orientation") return Stage::Orientation;
    if (s == "lutformer") return Stage::LutFormer;
    if (s == "recon") return Stage::Reconstruction;
    throw DomainError("unknown stage '" + s + "' (expected orientation, lutformer or recon)");
}

BatchSampler::BatchSampler(std::size_t size, std::uint64_t seed) : order_(size), rng_(seed) {
    for (std::size_t i = 0; i < size; ++i) order_[i] = i;
    pos_ = size;  // forces a shuffle on first use
}

std::vector<std::size_t> BatchSampler::next(int batch) {
    std::vector<std::size_t> out;
    while (static_cast<int>(out.size()) < batch) {
        if (pos_ == order_.size()) {
            std::shuffle(order_.begin(), order_.end(), rng_.engine());
            pos_ = 0;
        }
        out.push_back(order_[pos_++]);
    }
    return out;
}

namespace {

void require_records(const std::vector<DatasetRecord>& r, const char* stage) {
    if (r.empty()) throw DatasetError(std::string(stage) + ": no training records");
}

void check_loss(double v, Stage stage, int step) {
    if (!std::isfinite(v)) {
        throw DivergenceError(to_string(stage) + " step " + std::to_string(step) + ": non-finite loss (" +
                              std::to_string(v) + ")");
    }
}

void write_log(std::ostream* log, const nlohmann::ordered_json& j) {
    if (log) *log << j.dump() << '\n';
}

std::vector<const DatasetRecord*> pick(const std::vector<DatasetRecord>& records, const std::vector<std::size_t>& idx) {
    std::vector<const DatasetRecord*> out;
    for (auto i : idx) out.push_back(&records[i]);
    return out;
}

TensorF angle_targets(const std::vector<const DatasetRecord*>& batch) {
    std::vector<float> v;
    for (const auto* r : batch) {
        v.push_back(static_cast<float>(normalize_angle(r->angles.pitch())));
        v.push_back(static_cast<float>(normalize_angle(r->angles.roll())));
    }
    return TensorF({static_cast<int>(batch.size()), 2}, std::move(v));
}

}  // namespace

TrainResult train_orientation(OrientationNet& net, const std::vector<DatasetRecord>& records, const TrainSchedule& s,
                              const LossWeights& w, std::ostream* log) {
    require_records(records, "orientation");
    BatchSampler sampler(records.size(), mix_seed(s.seed, 11));
    Adam opt(static_cast<float>(s.lr));
    TrainResult res;
    for (int step = 1; step <= s.steps; ++step) {
        const auto batch = pick(records, sampler.next(s.batch));
        std::vector<const Image*> imgs;
        for (const auto* r : batch) imgs.push_back(&r->nonupright);
        const TensorF pred = net.forward(images_to_tensor(imgs)).angles;
        const TensorF loss = angle_loss(pred, angle_targets(batch), w.lambda);
        check_loss(loss.item(), Stage::Orientation, step);
        loss.backward();
        opt.step(net.params());
        res.losses.push_back(loss.item());
        write_log(log, {{"stage", "orientation"}, {"step", step}, {"loss", loss.item()}});
    }
    return res;
}

TrainResult train_lutformer(LutFormer& net, const std::vector<DatasetRecord>& records, const TrainSchedule& s,
                            const LossWeights& w, std::ostream* log, OrientationNet* frozen) {
    require_records(records, "lutformer");
    const EquirectGrid out(net.config().out_h(), net.config().out_w());
    for (const auto& r : records) {
        if (!(r.truth_lut.grid() == out)) throw DatasetError("lutformer: record LUT size does not match the model output");
    }
    if (frozen) frozen->params().set_frozen(true);
    BatchSampler sampler(records.size(), mix_seed(s.seed, 12));
    Sgd opt(static_cast<float>(s.lr));
    TrainResult res;
    for (int step = 1; step <= s.steps; ++step) {
        const auto batch = pick(records, sampler.next(s.batch));
        std::vector<TiltAngles> angles;
        std::vector<float> truth;
        for (const auto* r : batch) {
            angles.push_back(r->angles);
            truth.insert(truth.end(), r->truth_lut.data().begin(), r->truth_lut.data().end());
        }
        const TensorF target({static_cast<int>(batch.size()), 2, out.height(), out.width()}, std::move(truth));
        const TensorF loss = lut_loss(net.forward(angles), target, w.mu);
        check_loss(loss.item(), Stage::LutFormer, step);
        loss.backward();
        opt.step(net.params());
        res.losses.push_back(loss.item());
        write_log(log, {{"stage", "lutformer"}, {"step", step}, {"loss", loss.item()}});
    }
    return res;
}

TensorF upright_features(const OrientationNet& orient, const LutFormer* lut, const std::vector<const DatasetRecord*>& batch) {
    NoGradGuard g;
    std::vector<const Image*> imgs;
    for (const auto* r : batch) imgs.push_back(&r->nonupright);
    const TensorF shallow = orient.stem(images_to_tensor(imgs));
    std::vector<float> v;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Image f = tensor_to_image(shallow, static_cast<int>(i));
        const Lut table = lut ? lut->generate(batch[i]->angles) : batch[i]->truth_lut;
        if (!(table.grid() == f.grid())) throw DatasetError("reconstruction: LUT size does not match the feature map");
        const Image up = remap(f, table, Interp::Bilinear);
        v.insert(v.end(), up.data().begin(), up.data().end());
    }
    return TensorF({static_cast<int>(batch.size()), shallow.dim(1), shallow.dim(2), shallow.dim(3)}, std::move(v));
}

TrainResult train_reconstruction(Generator& gen, PatchDiscriminator& disc, OrientationNet& orient, LutFormer& lut,
                                 const std::vector<DatasetRecord>& records, const TrainSchedule& s,
                                 const LossWeights& w, std::ostream* log, bool analytic_lut) {
    require_records(records, "recon");
    orient.params().set_frozen(true);
    lut.params().set_frozen(true);
    const PerceptualExtractor extractor(gen.config().out_channels);
    BatchSampler sampler(records.size(), mix_seed(s.seed, 13));
    Adam gopt(static_cast<float>(s.lr));
    Adam dopt(static_cast<float>(s.disc_lr));
    TrainResult res;
    for (int step = 1; step <= s.steps; ++step) {
        const auto batch = pick(records, sampler.next(s.batch));
        const TensorF features = upright_features(orient, analytic_lut ? nullptr : &lut, batch);
        std::vector<const Image*> targets;
        for (const auto* r : batch) targets.push_back(&r->upright);
        const TensorF target = images_to_tensor(targets);
        const TensorF fake = gen.forward(features);

        const TensorF dloss = discriminator_loss(disc, target, fake);
        check_loss(dloss.item(), Stage::Reconstruction, step);
        dloss.backward();
        dopt.step(disc.params());

        const ReconstructionLoss g = reconstruction_loss(fake, target, disc, extractor, w);
        check_loss(g.total.item(), Stage::Reconstruction, step);
        g.total.backward();
        gopt.step(gen.params());
        disc.params().zero_grad();  // the generator loss also reached the discriminator

        res.losses.push_back(g.total.item());
        write_log(log, {{"stage", "recon"},
                        {"step", step},
                        {"loss", g.total.item()},
                        {"perceptual", g.perceptual.item()},
                        {"ssim", g.ssim.item()},
                        {"pixel", g.pixel.item()},
                        {"adversarial", g.adversarial.item()},
                        {"disc", dloss.item()}});
    }
    return res;
}

std::vector<double> orientation_errors(const OrientationNet& net, const std::vector<DatasetRecord>& records) {
    std::vector<double> errs;
    for (const auto& r : records) errs.push_back(angle_error(net.predict(r.nonupright), r.angles));
    return errs;
}

}  // namespace upright
