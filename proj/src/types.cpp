#include "locotrack/types.hpp"

#include <cmath>
#include <stdexcept>

namespace locotrack {

Tensor Video::frame(int t) const {
    const int h = height(), w = width();
    Tensor out({h, w, 3});
    const size_t n = static_cast<size_t>(h) * w * 3;
    std::copy(frames.data.begin() + static_cast<int64_t>(t) * n,
              frames.data.begin() + static_cast<int64_t>(t + 1) * n, out.data.begin());
    return out;
}

void Video::validate() const {
    if (frames.ndim() != 4 || frames.shape[3] != 3)
        throw std::invalid_argument("Video: frames must be T x H x W x 3, got " + frames.shape_str());
    if (height() % 8 != 0 || width() % 8 != 0)
        throw std::invalid_argument("Video: H and W must be divisible by 8, got " +
                                    std::to_string(height()) + "x" + std::to_string(width()));
}

Tensor FeaturePyramid::level_frame(int level, int t) const {
    const Tensor& lv = levels.at(static_cast<size_t>(level));
    const int h = lv.shape[1], w = lv.shape[2], c = lv.shape[3];
    Tensor out({h, w, c});
    const size_t n = static_cast<size_t>(h) * w * c;
    std::copy(lv.data.begin() + static_cast<int64_t>(t) * n,
              lv.data.begin() + static_cast<int64_t>(t + 1) * n, out.data.begin());
    return out;
}

double OcclusionTrack::probability(int t) const {
    return 1.0 / (1.0 + std::exp(-logits.at(static_cast<size_t>(t))));
}

}  // namespace locotrack
