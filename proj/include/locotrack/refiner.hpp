#pragma once

#include <vector>

#include "locotrack/types.hpp"
#include "locotrack/weights.hpp"

namespace locotrack {

struct BiasTable {
    std::vector<double> slopes;  // one per head; first half "left", rest "right"

    // Geometric per-head schedule within each direction group:
    // s_j = 2^(-8(j+1)/n) for n = heads/2.
    static BiasTable default_for_heads(int heads);
};

// N_h x T x T additive attention bias. Left-group heads mask strictly-future
// keys with -inf and decay past keys by -s_h * |t1 - t2|; right group is the
// mirror. The diagonal is 0 in both groups.
Tensor build_bias(int t, const RefinerConfig& cfg, const BiasTable& table);

// Multi-head self-attention over T x hidden tokens with the additive bias.
// Weight names under `prefix`: .wq/.wk/.wv/.wo and .bq/.bk/.bv/.bo.
Tensor attention(const Tensor& x, const WeightsContainer& weights, const std::string& prefix,
                 const RefinerConfig& cfg, const Tensor& bias);

// One pass of the refinement transformer: tokenizes (sinusoidal adjacent-frame
// deltas, occlusion logit, correlation embedding), runs N_S pre-norm blocks,
// and maps each frame to (dx, dy, d_occlusion_logit).
struct RefineDelta {
    std::vector<std::pair<double, double>> d_pos;  // pixels
    std::vector<double> d_occl;                    // logit space
};
RefineDelta refine_step(const Track& track, const OcclusionTrack& occl, const CorrEmbedding& emb,
                        const WeightsContainer& weights, const RefinerConfig& cfg);

struct IterateResult {
    Track track;
    OcclusionTrack occl;
    std::vector<Track> history;  // track after each iteration, size K
};

// Stage II: K rounds of local 4D correlation at the current positions
// (query side fixed at q), encoding, and residual update.
IterateResult iterate(const Track& init, const OcclusionTrack& init_occl, const FeaturePyramid& pyr,
                      const QueryPoint& q, const WeightsContainer& weights, const RefinerConfig& cfg);

// Non-learned baseline: soft-argmax of the level-0 local correlation (query
// dims averaged over the center 3x3 offsets), returned as a pixel delta.
std::vector<std::pair<double, double>> argmax_refine_step(const Track& track,
                                                          const FeaturePyramid& pyr,
                                                          const QueryPoint& q, double tau,
                                                          double sigma_g);

// K rounds of argmax_refine_step, with history.
IterateResult iterate_argmax(const Track& init, const OcclusionTrack& init_occl,
                             const FeaturePyramid& pyr, const QueryPoint& q, int iterations,
                             double tau, double sigma_g);

}  // namespace locotrack
