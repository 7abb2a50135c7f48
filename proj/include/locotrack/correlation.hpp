#pragma once

#include "locotrack/types.hpp"

namespace locotrack {

// Inverse L2 norms of every feature cell, one flat t*h*w array per level.
// Cells with near-zero norm store 0 so their similarity is 0. Building the
// cache once per video removes the dominant shared cost from the per-query
// correlation loop.
struct CorrNormCache {
    std::vector<std::vector<double>> inv_norm;
};

CorrNormCache build_corr_norm_cache(const FeaturePyramid& pyr);

// Cosine similarity of every feature cell against the query feature, per
// level, resized to the level-0 grid and stacked along the last axis.
// The query is given in input-pixel coordinates. Passing a cache built from
// the same pyramid gives bit-identical results and skips the per-cell norms.
GlobalCorr global_correlation(const FeaturePyramid& pyr, const QueryPoint& q,
                              const CorrNormCache* cache = nullptr);

// All-pair cosine similarities between the (2r_p+1)^2 neighborhood of p in
// feat_t and the (2r_q+1)^2 neighborhood of q in feat_tq. Centers are
// fractional feature-grid coordinates; samples are bilinear with clamping.
// Increments the correlation multiply-add counter.
LocalCorr4D local_corr_4d(const Tensor& feat_t, const Tensor& feat_tq, std::pair<double, double> p,
                          std::pair<double, double> q, int r_p, int r_q);

// Same computation reading the two frames directly out of T x H x W x C level
// tensors, without materializing per-frame copies. Bit-identical to
// local_corr_4d on the corresponding frames.
LocalCorr4D local_corr_4d_frames(const Tensor& level_t, int frame_t, const Tensor& level_q,
                                 int frame_q, std::pair<double, double> p,
                                 std::pair<double, double> q, int r_p, int r_q);

// Same contract computed with naive quadruple loops. Verification oracle.
LocalCorr4D local_corr_4d_oracle(const Tensor& feat_t, const Tensor& feat_tq,
                                 std::pair<double, double> p, std::pair<double, double> q, int r_p,
                                 int r_q);

// Swaps the target and query axes (and centers).
LocalCorr4D transpose_corr(const LocalCorr4D& c);

}  // namespace locotrack
