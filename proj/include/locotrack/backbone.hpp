#pragma once

#include "locotrack/types.hpp"
#include "locotrack/weights.hpp"

namespace locotrack {

// Three strided conv blocks (conv 3x3 stride 2, instance norm, ReLU) giving
// per-frame feature maps at strides 2/4/8 with widths 64/128/256.
FeaturePyramid extract_pyramid(const Video& video, const WeightsContainer& weights);

// Parameter-free test backbone: the level-l feature at cell (i, j) is the raw
// RGB patch of size stride_l x stride_l covering that cell, flattened
// (3 * stride_l^2 channels). Matching against it is analytically solvable.
FeaturePyramid patch_identity_pyramid(const Video& video);

}  // namespace locotrack
