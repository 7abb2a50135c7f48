#pragma once

#include <vector>

#include "locotrack/types.hpp"
#include "locotrack/weights.hpp"

namespace locotrack {

// One encoder branch: the leading two volume axes become the 7x7 spatial
// grid, the trailing two are flattened into 49 channels, then the variant's
// conv/group-norm/ReLU blocks run and a global average pool produces the
// 128-length output. `prefix` selects the weight group, e.g.
// "encoder.level0.branch0".
Tensor encode_branch(const LocalCorr4D& vol4d, const WeightsContainer& weights,
                     const std::string& prefix, Variant variant);

// Per-frame correlation embedding: per level, the direct branch concatenated
// with the transposed branch (independent weights; share_branches reuses the
// direct branch's weights on the transposed volume as a symmetry diagnostic),
// then all levels concatenated. vols holds one volume per level.
Tensor encode_corr(const std::vector<LocalCorr4D>& vols, const WeightsContainer& weights,
                   Variant variant, bool share_branches = false);

// D_E = levels * 2 branches * 128.
int corr_embedding_width(Variant variant);

}  // namespace locotrack
