#include "locotrack/backbone.hpp"

#include <string>

#include "locotrack/nn.hpp"

namespace locotrack {

FeaturePyramid extract_pyramid(const Video& video, const WeightsContainer& weights) {
    video.validate();
    const int t = video.t();

    FeaturePyramid pyr;
    pyr.levels.resize(kPyramidLevels);
    for (int l = 0; l < kPyramidLevels; ++l) {
        const Tensor& kernel = weights.get("backbone.block" + std::to_string(l) + ".conv.kernel");
        const int h = video.height() / kStrides[l];
        const int w = video.width() / kStrides[l];
        pyr.levels[l] = Tensor({t, h, w, kernel.shape[3]});
    }

    for (int f = 0; f < t; ++f) {
        Tensor x = video.frame(f);
        for (int l = 0; l < kPyramidLevels; ++l) {
            const std::string p = "backbone.block" + std::to_string(l);
            x = nn::conv2d_bias(x, weights.get(p + ".conv.kernel"), weights.get(p + ".conv.bias"), 2,
                                nn::Padding::Same);
            x = nn::instance_norm(x);
            x = nn::relu(x);
            Tensor& lv = pyr.levels[l];
            std::copy(x.data.begin(), x.data.end(),
                      lv.data.begin() + static_cast<int64_t>(f) * x.numel());
        }
    }
    return pyr;
}

FeaturePyramid patch_identity_pyramid(const Video& video) {
    video.validate();
    const int t = video.t(), ih = video.height(), iw = video.width();

    FeaturePyramid pyr;
    pyr.levels.resize(kPyramidLevels);
    for (int l = 0; l < kPyramidLevels; ++l) {
        const int s = kStrides[l];
        const int h = ih / s, w = iw / s, c = 3 * s * s;
        Tensor& lv = pyr.levels[l];
        lv = Tensor({t, h, w, c});
        for (int f = 0; f < t; ++f)
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j) {
                    float* out = &lv.data[(((static_cast<size_t>(f) * h + i) * w) + j) * c];
                    int k = 0;
                    for (int py = 0; py < s; ++py)
                        for (int px = 0; px < s; ++px)
                            for (int ch = 0; ch < 3; ++ch)
                                out[k++] = video.frames(f, i * s + py, j * s + px, ch);
                }
    }
    return pyr;
}

}  // namespace locotrack
