#include "locotrack/refiner.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "locotrack/corr_encoder.hpp"
#include "locotrack/correlation.hpp"
#include "locotrack/nn.hpp"
#include "locotrack/track_init.hpp"

namespace locotrack {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<LocalCorr4D> local_volumes_at(const FeaturePyramid& pyr, const QueryPoint& q, int frame,
                                          std::pair<double, double> pos) {
    std::vector<LocalCorr4D> vols;
    vols.reserve(static_cast<size_t>(kPyramidLevels));
    for (int l = 0; l < kPyramidLevels; ++l) {
        const double stride = pyr.strides[static_cast<size_t>(l)];
        const Tensor& level = pyr.levels[static_cast<size_t>(l)];
        LocalCorr4D vol =
            local_corr_4d_frames(level, frame, level, q.t, {pos.first / stride, pos.second / stride},
                                 {q.x / stride, q.y / stride}, kCorrRadius, kCorrRadius);
        vol.level = l;
        vols.push_back(std::move(vol));
    }
    return vols;
}

}  // namespace

BiasTable BiasTable::default_for_heads(int heads) {
    if (heads < 2 || heads % 2 != 0)
        throw std::invalid_argument("BiasTable: heads must be even and >= 2");
    BiasTable table;
    const int n = heads / 2;
    table.slopes.resize(static_cast<size_t>(heads));
    for (int j = 0; j < n; ++j) {
        const double s = std::exp2(-8.0 * (j + 1) / n);
        table.slopes[static_cast<size_t>(j)] = s;      // left group
        table.slopes[static_cast<size_t>(n + j)] = s;  // right group
    }
    return table;
}

Tensor build_bias(int t, const RefinerConfig& cfg, const BiasTable& table) {
    if (t < 1) throw std::invalid_argument("build_bias: T must be >= 1");
    if (static_cast<int>(table.slopes.size()) != cfg.heads)
        throw std::invalid_argument("build_bias: slope count does not match head count");
    const int half = cfg.heads / 2;
    Tensor bias({cfg.heads, t, t});
    for (int h = 0; h < cfg.heads; ++h) {
        const bool left = h < half;
        const double s = table.slopes[static_cast<size_t>(h)];
        for (int t1 = 0; t1 < t; ++t1)
            for (int t2 = 0; t2 < t; ++t2) {
                const bool masked = left ? (t1 < t2) : (t1 > t2);
                bias(h, t1, t2) =
                    masked ? static_cast<float>(-kInf) : static_cast<float>(-s * std::abs(t1 - t2));
            }
    }
    return bias;
}

Tensor attention(const Tensor& x, const WeightsContainer& weights, const std::string& prefix,
                 const RefinerConfig& cfg, const Tensor& bias) {
    if (x.ndim() != 2 || x.shape[1] != cfg.hidden)
        throw std::invalid_argument("attention: input must be T x hidden, got " + x.shape_str());
    if (cfg.hidden % cfg.heads != 0)
        throw std::invalid_argument("attention: hidden not divisible by head count");
    const int t = x.shape[0], heads = cfg.heads, dh = cfg.hidden / heads;
    if (bias.shape != std::vector<int>{heads, t, t})
        throw std::invalid_argument("attention: bias must be N_h x T x T, got " + bias.shape_str());

    const Tensor q = nn::linear(x, weights.get(prefix + ".wq"), weights.get(prefix + ".bq"));
    const Tensor k = nn::linear(x, weights.get(prefix + ".wk"), weights.get(prefix + ".bk"));
    const Tensor v = nn::linear(x, weights.get(prefix + ".wv"), weights.get(prefix + ".bv"));
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Tensor concat({t, cfg.hidden});
    for (int h = 0; h < heads; ++h) {
        const int off = h * dh;
        Tensor logits({t, t});
        for (int t1 = 0; t1 < t; ++t1)
            for (int t2 = 0; t2 < t; ++t2) {
                double dot = 0.0;
                for (int d = 0; d < dh; ++d)
                    dot += static_cast<double>(q(t1, off + d)) * k(t2, off + d);
                logits(t1, t2) = static_cast<float>(dot * scale + bias(h, t1, t2));
            }
        const Tensor attn = nn::softmax(logits, 1);
        for (int t1 = 0; t1 < t; ++t1)
            for (int d = 0; d < dh; ++d) {
                double acc = 0.0;
                for (int t2 = 0; t2 < t; ++t2)
                    acc += static_cast<double>(attn(t1, t2)) * v(t2, off + d);
                concat(t1, off + d) = static_cast<float>(acc);
            }
    }
    return nn::linear(concat, weights.get(prefix + ".wo"), weights.get(prefix + ".bo"));
}

RefineDelta refine_step(const Track& track, const OcclusionTrack& occl, const CorrEmbedding& emb,
                        const WeightsContainer& weights, const RefinerConfig& cfg) {
    const int t = track.length();
    if (occl.length() != t || emb.vec.shape[0] != t)
        throw std::invalid_argument("refine_step: track/occlusion/embedding lengths disagree");
    const int d_e = emb.vec.shape[1];
    const int token_width = 2 * 2 * nn::kSinusoidChannels + 1 + d_e;

    // Tokens: sinusoidal-encoded adjacent deltas (duplicate-endpoint padding),
    // raw occlusion logit, correlation embedding.
    Tensor tokens({t, token_width});
    for (int f = 0; f < t; ++f) {
        const auto& cur = track.positions[static_cast<size_t>(f)];
        const auto& prev = track.positions[static_cast<size_t>(std::max(f - 1, 0))];
        const auto& next = track.positions[static_cast<size_t>(std::min(f + 1, t - 1))];
        int off = 0;
        for (const double delta : {cur.first - prev.first, cur.second - prev.second,
                                   next.first - cur.first, next.second - cur.second}) {
            const auto enc = nn::sinusoidal_encode(delta);
            for (float e : enc) tokens(f, off++) = e;
        }
        tokens(f, off++) = static_cast<float>(occl.logits[static_cast<size_t>(f)]);
        for (int j = 0; j < d_e; ++j) tokens(f, off++) = emb.vec(f, j);
    }

    Tensor x = nn::linear(tokens, weights.get("refiner.input_proj.weight"),
                          weights.get("refiner.input_proj.bias"));
    const Tensor bias = build_bias(t, cfg, BiasTable::default_for_heads(cfg.heads));

    for (int b = 0; b < cfg.n_layers; ++b) {
        const std::string p = "refiner.block" + std::to_string(b);
        const Tensor normed1 = nn::layer_norm(x, weights.get(p + ".ln1.gamma"), weights.get(p + ".ln1.beta"));
        const Tensor attn_out = attention(normed1, weights, p + ".attn", cfg, bias);
        for (size_t i = 0; i < x.data.size(); ++i) x.data[i] += attn_out.data[i];

        const Tensor normed2 = nn::layer_norm(x, weights.get(p + ".ln2.gamma"), weights.get(p + ".ln2.beta"));
        Tensor mlp = nn::linear(normed2, weights.get(p + ".mlp.w1"), weights.get(p + ".mlp.b1"));
        mlp = nn::gelu(mlp);
        mlp = nn::linear(mlp, weights.get(p + ".mlp.w2"), weights.get(p + ".mlp.b2"));
        for (size_t i = 0; i < x.data.size(); ++i) x.data[i] += mlp.data[i];
    }

    x = nn::layer_norm(x, weights.get("refiner.ln_final.gamma"), weights.get("refiner.ln_final.beta"));
    const Tensor out = nn::linear(x, weights.get("refiner.out_head.weight"),
                                  weights.get("refiner.out_head.bias"));

    RefineDelta delta;
    delta.d_pos.resize(static_cast<size_t>(t));
    delta.d_occl.resize(static_cast<size_t>(t));
    for (int f = 0; f < t; ++f) {
        delta.d_pos[static_cast<size_t>(f)] = {out(f, 0), out(f, 1)};
        delta.d_occl[static_cast<size_t>(f)] = out(f, 2);
    }
    return delta;
}

IterateResult iterate(const Track& init, const OcclusionTrack& init_occl, const FeaturePyramid& pyr,
                      const QueryPoint& q, const WeightsContainer& weights,
                      const RefinerConfig& cfg) {
    IterateResult res;
    res.track = init;
    res.occl = init_occl;
    const int t = init.length();
    const int d_e = corr_embedding_width(cfg.variant);

    for (int k = 0; k < cfg.iterations; ++k) {
        CorrEmbedding emb;
        emb.vec = Tensor({t, d_e});
        for (int f = 0; f < t; ++f) {
            const auto vols = local_volumes_at(pyr, q, f, res.track.positions[static_cast<size_t>(f)]);
            const Tensor e = encode_corr(vols, weights, cfg.variant);
            std::copy(e.data.begin(), e.data.end(),
                      emb.vec.data.begin() + static_cast<int64_t>(f) * d_e);
        }
        const RefineDelta delta = refine_step(res.track, res.occl, emb, weights, cfg);
        for (int f = 0; f < t; ++f) {
            res.track.positions[static_cast<size_t>(f)].first += delta.d_pos[static_cast<size_t>(f)].first;
            res.track.positions[static_cast<size_t>(f)].second += delta.d_pos[static_cast<size_t>(f)].second;
            res.occl.logits[static_cast<size_t>(f)] += delta.d_occl[static_cast<size_t>(f)];
        }
        res.history.push_back(res.track);
    }
    return res;
}

std::vector<std::pair<double, double>> argmax_refine_step(const Track& track,
                                                          const FeaturePyramid& pyr,
                                                          const QueryPoint& q, double tau,
                                                          double sigma_g) {
    const int t = track.length();
    const double stride0 = pyr.strides[0];
    const int side = 2 * kCorrRadius + 1;
    std::vector<std::pair<double, double>> delta(static_cast<size_t>(t));

    const Tensor& level0 = pyr.levels[0];
    for (int f = 0; f < t; ++f) {
        const auto& pos = track.positions[static_cast<size_t>(f)];
        const LocalCorr4D vol =
            local_corr_4d_frames(level0, f, level0, q.t, {pos.first / stride0, pos.second / stride0},
                                 {q.x / stride0, q.y / stride0}, kCorrRadius, kCorrRadius);

        // Marginalize the query side over its center 3x3 offsets: a candidate
        // target offset is scored by the agreement of correspondingly shifted
        // pairs, so a true match scores 1 at exactly one cell instead of
        // producing a plateau of partial matches.
        Tensor map({side, side});
        for (int i = 0; i < side; ++i)
            for (int j = 0; j < side; ++j) {
                double sum = 0.0;
                int n = 0;
                for (int a = -1; a <= 1; ++a)
                    for (int b = -1; b <= 1; ++b) {
                        const int ti = i + a, tj = j + b;
                        if (ti < 0 || ti >= side || tj < 0 || tj >= side) continue;
                        sum += vol.vol(ti, tj, kCorrRadius + a, kCorrRadius + b);
                        ++n;
                    }
                map(i, j) = static_cast<float>(sum / n);
            }
        const auto [gx, gy] = kernel_softargmax(map, tau, sigma_g);
        delta[static_cast<size_t>(f)] = {(gx - kCorrRadius) * stride0, (gy - kCorrRadius) * stride0};
    }
    return delta;
}

IterateResult iterate_argmax(const Track& init, const OcclusionTrack& init_occl,
                             const FeaturePyramid& pyr, const QueryPoint& q, int iterations,
                             double tau, double sigma_g) {
    IterateResult res;
    res.track = init;
    res.occl = init_occl;
    for (int k = 0; k < iterations; ++k) {
        const auto delta = argmax_refine_step(res.track, pyr, q, tau, sigma_g);
        for (size_t f = 0; f < res.track.positions.size(); ++f) {
            res.track.positions[f].first += delta[f].first;
            res.track.positions[f].second += delta[f].second;
        }
        res.history.push_back(res.track);
    }
    return res;
}

}  // namespace locotrack
