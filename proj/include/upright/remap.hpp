// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "upright/image.hpp"
#include "upright/lut.hpp"

namespace upright {

enum class Interp { Nearest, Bilinear };

/// Gather remap: out(d) = in(lut(d)). Horizontal source coordinates wrap modulo W,
/// vertical ones clamp to [0, H-1]. Weights are evaluated in double precision.
/// Rows are split across `threads` workers; the output does not depend on the count.
Image remap(const Image& input, const Lut& lut, Interp interp = Interp::Bilinear, int threads = 1);

/// generate_lut followed by remap.
Image rotate_image(const Image& input, const TiltAngles& angles, LutDirection direction,
                   Interp interp = Interp::Bilinear, int threads = 1);

}  // namespace upright
