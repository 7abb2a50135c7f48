#pragma once

#include <optional>
#include <vector>

#include "locotrack/tensor.hpp"

namespace locotrack {

constexpr int kPyramidLevels = 3;
constexpr int kStrides[kPyramidLevels] = {2, 4, 8};
constexpr int kCorrRadius = 3;  // r_p = r_q

struct Video {
    Tensor frames;  // T x H x W x 3, values in [0, 1]
    std::optional<double> frame_rate;

    int t() const { return frames.shape[0]; }
    int height() const { return frames.shape[1]; }
    int width() const { return frames.shape[2]; }

    // One H x W x 3 view copied out of the stack.
    Tensor frame(int t) const;

    void validate() const;
};

struct FeaturePyramid {
    // levels[l] is T x H^l x W^l x C^l with H^l = H / stride_l.
    std::vector<Tensor> levels;
    std::vector<int> strides{2, 4, 8};

    int t() const { return levels.at(0).shape[0]; }
    Tensor level_frame(int level, int t) const;
};

struct QueryPoint {
    double x = 0.0, y = 0.0;  // input-pixel coordinates
    int t = 0;
};

struct Track {
    // positions[t] = (x, y) in input pixels.
    std::vector<std::pair<double, double>> positions;

    int length() const { return static_cast<int>(positions.size()); }
};

struct OcclusionTrack {
    std::vector<double> logits;

    int length() const { return static_cast<int>(logits.size()); }
    double probability(int t) const;  // sigmoid view
};

struct GroundTruthTrack {
    std::vector<std::pair<double, double>> positions;
    std::vector<bool> visible;

    int length() const { return static_cast<int>(positions.size()); }
};

struct GlobalCorr {
    Tensor maps;  // T x H^0 x W^0 x L
};

struct LocalCorr4D {
    Tensor vol;  // h_p x w_p x h_q x w_q
    std::pair<double, double> center_p{0.0, 0.0};
    std::pair<double, double> center_q{0.0, 0.0};
    int level = 0;
};

struct CorrEmbedding {
    Tensor vec;  // T x D_E
};

}  // namespace locotrack
