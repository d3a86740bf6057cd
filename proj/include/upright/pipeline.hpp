// SPDX-License-Identifier: Apache-2.0
#pragma once

// End-to-end adjustment: estimate the tilt, build an inverse LUT for it, rotate the
// shallow feature map with that LUT and reconstruct the upright image. Each stage is
// a plain callable so any of them can be swapped for an analytic oracle.

#include "upright/models.hpp"
#include "upright/remap.hpp"

#include <functional>

namespace upright {

struct OrientationEstimate {
    TiltAngles angles;
    Image features;  // the map the LUT is applied to
};

struct PipelineStages {
    std::function<OrientationEstimate(const Image&)> orient;
    std::function<Lut(const TiltAngles&, const EquirectGrid&)> lut;
    std::function<Image(const Image&)> reconstruct;
};

struct AdjustResult {
    TiltAngles angles;
    Image image;
};

/// Throws DomainError when a stage is missing.
AdjustResult end_to_end_adjust(const Image& input, const PipelineStages& stages, int threads = 1);

/// Network angles with the stem's shallow features as the rotated map.
std::function<OrientationEstimate(const Image&)> network_orientation(const OrientationNet& net);
/// Network angles, but the input image itself is the rotated map.
std::function<OrientationEstimate(const Image&)> network_angles_rgb_features(const OrientationNet& net);
/// Known angles, input image as the map (the analytic adjust path).
std::function<OrientationEstimate(const Image&)> fixed_orientation(TiltAngles angles);

std::function<Lut(const TiltAngles&, const EquirectGrid&)> learned_lut(const LutFormer& net);
std::function<Lut(const TiltAngles&, const EquirectGrid&)> analytic_lut();

std::function<Image(const Image&)> learned_reconstruction(const Generator& net);
std::function<Image(const Image&)> identity_reconstruction();

/// Orientation net + LutFormer + generator.
PipelineStages learned_pipeline(const OrientationNet& orient, const LutFormer& lut, const Generator& gen);

}  // namespace upright
