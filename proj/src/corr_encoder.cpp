#include "locotrack/corr_encoder.hpp"

#include <algorithm>
#include <stdexcept>

#include "locotrack/correlation.hpp"
#include "locotrack/nn.hpp"

namespace locotrack {

int corr_embedding_width(Variant variant) {
    return kPyramidLevels * 2 * encoder_blocks(variant).back().channels;
}

Tensor encode_branch(const LocalCorr4D& vol4d, const WeightsContainer& weights,
                     const std::string& prefix, Variant variant) {
    const int side = 2 * kCorrRadius + 1;
    const std::vector<int> expected{side, side, side, side};
    if (vol4d.vol.shape != expected)
        throw std::invalid_argument("encode_branch: volume must be " + Tensor(expected).shape_str() +
                                    ", got " + vol4d.vol.shape_str());

    // 7x7 spatial over the leading axes, trailing axes flattened to channels.
    Tensor x = vol4d.vol.reshaped({side, side, side * side});

    const auto blocks = encoder_blocks(variant);
    for (size_t b = 0; b < blocks.size(); ++b) {
        const std::string p = prefix + ".block" + std::to_string(b);
        x = nn::conv2d_bias(x, weights.get(p + ".conv.kernel"), weights.get(p + ".conv.bias"),
                            blocks[b].stride, nn::Padding::Same);
        const int groups = std::min(16, blocks[b].channels);
        x = nn::group_norm(x, groups, weights.get(p + ".gn.gamma"), weights.get(p + ".gn.beta"));
        x = nn::relu(x);
    }

    const int c = x.shape[2];
    const int64_t spatial = static_cast<int64_t>(x.shape[0]) * x.shape[1];
    Tensor out({c});
    for (int64_t p = 0; p < spatial; ++p)
        for (int cc = 0; cc < c; ++cc) out(cc) += x.data[static_cast<size_t>(p) * c + cc];
    for (int cc = 0; cc < c; ++cc) out(cc) /= static_cast<float>(spatial);
    return out;
}

Tensor encode_corr(const std::vector<LocalCorr4D>& vols, const WeightsContainer& weights,
                   Variant variant, bool share_branches) {
    if (static_cast<int>(vols.size()) != kPyramidLevels)
        throw std::invalid_argument("encode_corr: expected one volume per level (" +
                                    std::to_string(kPyramidLevels) + "), got " +
                                    std::to_string(vols.size()));
    const int c_last = encoder_blocks(variant).back().channels;
    Tensor out({corr_embedding_width(variant)});
    int offset = 0;
    for (int l = 0; l < kPyramidLevels; ++l) {
        const std::string base = "encoder.level" + std::to_string(l);
        const Tensor direct = encode_branch(vols[static_cast<size_t>(l)], weights, base + ".branch0", variant);
        const std::string tbranch = share_branches ? base + ".branch0" : base + ".branch1";
        const Tensor transposed =
            encode_branch(transpose_corr(vols[static_cast<size_t>(l)]), weights, tbranch, variant);
        std::copy(direct.data.begin(), direct.data.end(), out.data.begin() + offset);
        std::copy(transposed.data.begin(), transposed.data.end(), out.data.begin() + offset + c_last);
        offset += 2 * c_last;
    }
    return out;
}

}  // namespace locotrack
