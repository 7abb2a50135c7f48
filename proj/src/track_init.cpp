#include "locotrack/track_init.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "locotrack/nn.hpp"

namespace locotrack {

std::pair<double, double> kernel_softargmax(const Tensor& map, double tau, double sigma_g) {
    if (map.ndim() != 2) throw std::invalid_argument("kernel_softargmax: map must be HxW");
    if (!(tau > 0.0)) throw std::invalid_argument("kernel_softargmax: tau must be positive");
    const int h = map.shape[0], w = map.shape[1];

    float best = -std::numeric_limits<float>::infinity();
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) best = std::max(best, map(i, j));

    // Among tied maxima prefer the cell nearest the map center (so constant
    // maps have a symmetric expectation), then row-major scan order.
    const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
    int my = 0, mx = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            if (map(i, j) == best) {
                const double d2 = (i - cy) * (i - cy) + (j - cx) * (j - cx);
                if (d2 < best_d2) {
                    best_d2 = d2;
                    my = i;
                    mx = j;
                }
            }

    const double inv_two_sigma_sq = 1.0 / (2.0 * sigma_g * sigma_g);
    double z = 0.0, ex = 0.0, ey = 0.0;
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            const double d2 = static_cast<double>(i - my) * (i - my) +
                              static_cast<double>(j - mx) * (j - mx);
            const double p = std::exp(-d2 * inv_two_sigma_sq + tau * (map(i, j) - best));
            z += p;
            ex += p * j;
            ey += p * i;
        }
    return {ex / z, ey / z};
}

std::pair<Track, OcclusionTrack> init_track(const GlobalCorr& gc, const WeightsContainer& weights,
                                            double tau) {
    const Tensor& fuse_k = weights.get("init.fuse.kernel");
    const Tensor& fuse_b = weights.get("init.fuse.bias");
    const Tensor& occl_w = weights.get("init.occl.weight");
    const Tensor& occl_b = weights.get("init.occl.bias");

    const int t = gc.maps.shape[0], h = gc.maps.shape[1], w = gc.maps.shape[2], l = gc.maps.shape[3];
    const double stride0 = kStrides[0];

    Track track;
    OcclusionTrack occl;
    track.positions.resize(static_cast<size_t>(t));
    occl.logits.resize(static_cast<size_t>(t));

    for (int f = 0; f < t; ++f) {
        Tensor ct({h, w, l});
        const size_t n = static_cast<size_t>(h) * w * l;
        std::copy(gc.maps.data.begin() + static_cast<int64_t>(f) * n,
                  gc.maps.data.begin() + static_cast<int64_t>(f + 1) * n, ct.data.begin());

        const Tensor fused = nn::conv2d_bias(ct, fuse_k, fuse_b, 1, nn::Padding::Same);
        Tensor map2d({h, w});
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) map2d(i, j) = fused(i, j, 0);
        const auto [gx, gy] = kernel_softargmax(map2d, tau);
        track.positions[static_cast<size_t>(f)] = {gx * stride0, gy * stride0};

        // CBAM-style pooled descriptor: [maxpool per channel; avgpool per channel].
        Tensor pooled({2 * l});
        for (int c = 0; c < l; ++c) {
            float mx = -std::numeric_limits<float>::infinity();
            double sum = 0.0;
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j) {
                    mx = std::max(mx, ct(i, j, c));
                    sum += ct(i, j, c);
                }
            pooled(c) = mx;
            pooled(l + c) = static_cast<float>(sum / (static_cast<double>(h) * w));
        }
        const Tensor logit = nn::linear(pooled, occl_w, occl_b);
        occl.logits[static_cast<size_t>(f)] = logit(0);
    }
    return {std::move(track), std::move(occl)};
}

}  // namespace locotrack
