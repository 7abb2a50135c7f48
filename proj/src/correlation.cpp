#include "locotrack/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "locotrack/nn.hpp"

namespace locotrack {

namespace {

constexpr double kNormFloor = 1e-8;

// One H x W x C frame inside a larger tensor, referenced without copying.
struct FrameRef {
    const float* base;
    int h, w, c;
};

FrameRef frame_ref(const Tensor& feat) { return {feat.data.data(), feat.shape[0], feat.shape[1], feat.shape[2]}; }

FrameRef frame_ref(const Tensor& level, int frame) {
    const int h = level.shape[1], w = level.shape[2], c = level.shape[3];
    const size_t n = static_cast<size_t>(h) * w * c;
    return {level.data.data() + static_cast<size_t>(frame) * n, h, w, c};
}

// Bilinear sample with border clamping; arithmetic mirrors
// nn::bilinear_sample_point so both local-correlation entry points agree
// bit for bit.
void sample_point(const FrameRef& f, double x, double y, float* out) {
    x = std::clamp(x, 0.0, static_cast<double>(f.w - 1));
    y = std::clamp(y, 0.0, static_cast<double>(f.h - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, f.w - 1);
    const int y1 = std::min(y0 + 1, f.h - 1);
    const double fx = x - x0, fy = y - y0;
    const double w00 = (1 - fx) * (1 - fy), w01 = fx * (1 - fy), w10 = (1 - fx) * fy, w11 = fx * fy;
    const float* p00 = f.base + (static_cast<size_t>(y0) * f.w + x0) * f.c;
    const float* p01 = f.base + (static_cast<size_t>(y0) * f.w + x1) * f.c;
    const float* p10 = f.base + (static_cast<size_t>(y1) * f.w + x0) * f.c;
    const float* p11 = f.base + (static_cast<size_t>(y1) * f.w + x1) * f.c;
    for (int cc = 0; cc < f.c; ++cc)
        out[cc] = static_cast<float>(w00 * p00[cc] + w01 * p01[cc] + w10 * p10[cc] + w11 * p11[cc]);
}

// Rows of the neighborhood samples around a fractional center, plus their
// inverse norms (0 for near-zero vectors, making the similarity 0).
struct SampledPatch {
    Tensor rows;  // N x C
    std::vector<double> inv_norm;
};

SampledPatch sample_neighborhood(const FrameRef& feat, std::pair<double, double> center, int r,
                                 uint64_t* mac_counter) {
    const int side = 2 * r + 1;
    const int c = feat.c;
    SampledPatch out;
    out.rows = Tensor({side * side, c});
    out.inv_norm.resize(static_cast<size_t>(side) * side);
    size_t i = 0;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx, ++i) {
            float* row = &out.rows.data[i * static_cast<size_t>(c)];
            sample_point(feat, center.first + dx, center.second + dy, row);
            double sq = 0.0;
            for (int cc = 0; cc < c; ++cc) sq += static_cast<double>(row[cc]) * row[cc];
            const double norm = std::sqrt(sq);
            out.inv_norm[i] = norm < kNormFloor ? 0.0 : 1.0 / norm;
            if (mac_counter) *mac_counter += static_cast<uint64_t>(c);
        }
    return out;
}

LocalCorr4D local_corr_core(const FrameRef& feat_t, const FrameRef& feat_tq,
                            std::pair<double, double> p, std::pair<double, double> q, int r_p,
                            int r_q) {
    if (r_p < 0 || r_q < 0) throw std::invalid_argument("local_corr_4d: radii must be >= 0");
    const int c = feat_t.c;
    if (feat_tq.c != c)
        throw std::invalid_argument("local_corr_4d: channel mismatch " + std::to_string(c) +
                                    " vs " + std::to_string(feat_tq.c));

    uint64_t macs = 0;
    const SampledPatch tp = sample_neighborhood(feat_t, p, r_p, &macs);
    const SampledPatch qp = sample_neighborhood(feat_tq, q, r_q, &macs);
    const int np = (2 * r_p + 1) * (2 * r_p + 1);
    const int nq = (2 * r_q + 1) * (2 * r_q + 1);

    LocalCorr4D out;
    out.vol = Tensor({2 * r_p + 1, 2 * r_p + 1, 2 * r_q + 1, 2 * r_q + 1});
    out.center_p = p;
    out.center_q = q;
    for (int i = 0; i < np; ++i) {
        const float* a = &tp.rows.data[static_cast<size_t>(i) * c];
        for (int j = 0; j < nq; ++j) {
            const float* b = &qp.rows.data[static_cast<size_t>(j) * c];
            double dot = 0.0;
            for (int cc = 0; cc < c; ++cc) dot += static_cast<double>(a[cc]) * b[cc];
            out.vol.data[static_cast<size_t>(i) * nq + j] =
                static_cast<float>(dot * tp.inv_norm[static_cast<size_t>(i)] *
                                   qp.inv_norm[static_cast<size_t>(j)]);
        }
    }
    macs += static_cast<uint64_t>(np) * nq * c;
    nn::g_corr_mac_counter.fetch_add(macs, std::memory_order_relaxed);
    return out;
}

}  // namespace

CorrNormCache build_corr_norm_cache(const FeaturePyramid& pyr) {
    CorrNormCache cache;
    cache.inv_norm.resize(pyr.levels.size());
    for (size_t l = 0; l < pyr.levels.size(); ++l) {
        const Tensor& lv = pyr.levels[l];
        const int c = lv.shape[3];
        const size_t cells = lv.data.size() / static_cast<size_t>(c);
        cache.inv_norm[l].resize(cells);
        for (size_t i = 0; i < cells; ++i) {
            const float* cell = &lv.data[i * static_cast<size_t>(c)];
            double sq = 0.0;
            for (int cc = 0; cc < c; ++cc) sq += static_cast<double>(cell[cc]) * cell[cc];
            const double norm = std::sqrt(sq);
            cache.inv_norm[l][i] = norm < kNormFloor ? 0.0 : 1.0 / norm;
        }
    }
    return cache;
}

GlobalCorr global_correlation(const FeaturePyramid& pyr, const QueryPoint& q,
                              const CorrNormCache* cache) {
    const int t = pyr.t();
    const int h0 = pyr.levels[0].shape[1], w0 = pyr.levels[0].shape[2];
    const int n_levels = static_cast<int>(pyr.levels.size());

    GlobalCorr gc;
    gc.maps = Tensor({t, h0, w0, n_levels});

    for (int l = 0; l < n_levels; ++l) {
        const double stride = pyr.strides[static_cast<size_t>(l)];
        const Tensor qframe = pyr.level_frame(l, q.t);
        const int c = qframe.shape[2];
        const auto qfeat = nn::bilinear_sample_point(qframe, q.x / stride, q.y / stride);
        double qsq = 0.0;
        for (float v : qfeat) qsq += static_cast<double>(v) * v;
        const double qnorm = std::sqrt(qsq);
        const double qinv = qnorm < kNormFloor ? 0.0 : 1.0 / qnorm;

        const int hl = pyr.levels[l].shape[1], wl = pyr.levels[l].shape[2];
        const size_t frame_cells = static_cast<size_t>(hl) * wl;
        const double* cached =
            cache ? cache->inv_norm.at(static_cast<size_t>(l)).data() : nullptr;
        for (int f = 0; f < t; ++f) {
            const float* frame =
                &pyr.levels[static_cast<size_t>(l)].data[static_cast<size_t>(f) * frame_cells * c];
            Tensor corr({hl, wl, 1});
            for (size_t cell_idx = 0; cell_idx < frame_cells; ++cell_idx) {
                const float* cell = frame + cell_idx * static_cast<size_t>(c);
                double dot = 0.0;
                double inv;
                if (cached) {
                    // Four independent accumulators keep the reduction
                    // pipelined; this loop dominates the per-query cost.
                    float s0 = 0.0f, s1 = 0.0f, s2 = 0.0f, s3 = 0.0f;
                    int cc = 0;
                    for (; cc + 4 <= c; cc += 4) {
                        s0 += cell[cc] * qfeat[static_cast<size_t>(cc)];
                        s1 += cell[cc + 1] * qfeat[static_cast<size_t>(cc) + 1];
                        s2 += cell[cc + 2] * qfeat[static_cast<size_t>(cc) + 2];
                        s3 += cell[cc + 3] * qfeat[static_cast<size_t>(cc) + 3];
                    }
                    for (; cc < c; ++cc) s0 += cell[cc] * qfeat[static_cast<size_t>(cc)];
                    dot = static_cast<double>((s0 + s1) + (s2 + s3));
                    inv = cached[static_cast<size_t>(f) * frame_cells + cell_idx];
                } else {
                    double sq = 0.0;
                    for (int cc = 0; cc < c; ++cc) {
                        dot += static_cast<double>(cell[cc]) * qfeat[static_cast<size_t>(cc)];
                        sq += static_cast<double>(cell[cc]) * cell[cc];
                    }
                    const double norm = std::sqrt(sq);
                    inv = norm < kNormFloor ? 0.0 : 1.0 / norm;
                }
                corr.data[cell_idx] = static_cast<float>(dot * inv * qinv);
            }
            const Tensor resized = nn::resize_bilinear(corr, h0, w0);
            for (int i = 0; i < h0; ++i)
                for (int j = 0; j < w0; ++j) gc.maps(f, i, j, l) = resized(i, j, 0);
        }
    }
    return gc;
}

LocalCorr4D local_corr_4d(const Tensor& feat_t, const Tensor& feat_tq, std::pair<double, double> p,
                          std::pair<double, double> q, int r_p, int r_q) {
    return local_corr_core(frame_ref(feat_t), frame_ref(feat_tq), p, q, r_p, r_q);
}

LocalCorr4D local_corr_4d_frames(const Tensor& level_t, int frame_t, const Tensor& level_q,
                                 int frame_q, std::pair<double, double> p,
                                 std::pair<double, double> q, int r_p, int r_q) {
    return local_corr_core(frame_ref(level_t, frame_t), frame_ref(level_q, frame_q), p, q, r_p,
                           r_q);
}

LocalCorr4D local_corr_4d_oracle(const Tensor& feat_t, const Tensor& feat_tq,
                                 std::pair<double, double> p, std::pair<double, double> q, int r_p,
                                 int r_q) {
    const int c = feat_t.shape[2];
    LocalCorr4D out;
    out.vol = Tensor({2 * r_p + 1, 2 * r_p + 1, 2 * r_q + 1, 2 * r_q + 1});
    out.center_p = p;
    out.center_q = q;
    for (int iy = -r_p; iy <= r_p; ++iy)
        for (int ix = -r_p; ix <= r_p; ++ix)
            for (int jy = -r_q; jy <= r_q; ++jy)
                for (int jx = -r_q; jx <= r_q; ++jx) {
                    const auto a = nn::bilinear_sample_point(feat_t, p.first + ix, p.second + iy);
                    const auto b = nn::bilinear_sample_point(feat_tq, q.first + jx, q.second + jy);
                    double dot = 0.0, na = 0.0, nb = 0.0;
                    for (int cc = 0; cc < c; ++cc) {
                        dot += static_cast<double>(a[cc]) * b[cc];
                        na += static_cast<double>(a[cc]) * a[cc];
                        nb += static_cast<double>(b[cc]) * b[cc];
                    }
                    double sim = 0.0;
                    if (std::sqrt(na) >= kNormFloor && std::sqrt(nb) >= kNormFloor)
                        sim = dot / (std::sqrt(na) * std::sqrt(nb));
                    out.vol(iy + r_p, ix + r_p, jy + r_q, jx + r_q) = static_cast<float>(sim);
                }
    return out;
}

LocalCorr4D transpose_corr(const LocalCorr4D& c) {
    const int hp = c.vol.shape[0], wp = c.vol.shape[1], hq = c.vol.shape[2], wq = c.vol.shape[3];
    LocalCorr4D out;
    out.vol = Tensor({hq, wq, hp, wp});
    out.center_p = c.center_q;
    out.center_q = c.center_p;
    out.level = c.level;
    for (int a = 0; a < hp; ++a)
        for (int b = 0; b < wp; ++b)
            for (int d = 0; d < hq; ++d)
                for (int e = 0; e < wq; ++e) out.vol(d, e, a, b) = c.vol(a, b, d, e);
    return out;
}

}  // namespace locotrack
