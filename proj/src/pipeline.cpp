// SPDX-License-Identifier: Apache-2.0
#include "upright/pipeline.hpp"

namespace upright {

AdjustResult end_to_end_adjust(const Image& input, const PipelineStages& stages, int threads) {
    if (!stages.orient || !stages.lut || !stages.reconstruct) {
        throw DomainError("end_to_end_adjust: every stage must be provided (missing checkpoint?)");
    }
    OrientationEstimate est = stages.orient(input);
    const Lut lut = stages.lut(est.angles, est.features.grid());
    const Image upright_features = remap(est.features, lut, Interp::Bilinear, threads);
    return {est.angles, stages.reconstruct(upright_features)};
}

std::function<OrientationEstimate(const Image&)> network_orientation(const OrientationNet& net) {
    return [&net](const Image& img) {
        nn::NoGradGuard g;
        const auto out = net.forward(image_to_tensor(img));
        const auto a = out.angles.values();
        return OrientationEstimate{decode_angles(a[0], a[1]), tensor_to_image(out.shallow)};
    };
}

std::function<OrientationEstimate(const Image&)> network_angles_rgb_features(const OrientationNet& net) {
    return [&net](const Image& img) { return OrientationEstimate{net.predict(img), img}; };
}

std::function<OrientationEstimate(const Image&)> fixed_orientation(TiltAngles angles) {
    return [angles](const Image& img) { return OrientationEstimate{angles, img}; };
}

std::function<Lut(const TiltAngles&, const EquirectGrid&)> learned_lut(const LutFormer& net) {
    return [&net](const TiltAngles& a, const EquirectGrid& grid) {
        Lut lut = net.generate(a);
        if (!(lut.grid() == grid)) throw DomainError("learned LUT size does not match the feature map");
        return lut;
    };
}

std::function<Lut(const TiltAngles&, const EquirectGrid&)> analytic_lut() {
    return [](const TiltAngles& a, const EquirectGrid& grid) {
        return generate_lut(a, grid, LutDirection::InverseUpright);
    };
}

std::function<Image(const Image&)> learned_reconstruction(const Generator& net) {
    return [&net](const Image& features) {
        nn::NoGradGuard g;
        return tensor_to_image(net.forward(image_to_tensor(features)));
    };
}

std::function<Image(const Image&)> identity_reconstruction() {
    return [](const Image& features) { return features; };
}

PipelineStages learned_pipeline(const OrientationNet& orient, const LutFormer& lut, const Generator& gen) {
    return {network_orientation(orient), learned_lut(lut), learned_reconstruction(gen)};
}

}  // namespace upright
