#include <doctest.h>

#include <cmath>
#include <limits>

#include "locotrack/backbone.hpp"
#include "locotrack/corr_encoder.hpp"
#include "locotrack/nn.hpp"
#include "locotrack/refiner.hpp"
#include "locotrack/rng.hpp"
#include "locotrack/synth.hpp"
#include "locotrack/track_init.hpp"

using namespace locotrack;

namespace {

constexpr float kNegInf = -std::numeric_limits<float>::infinity();

Tensor random_tokens(Rng& rng, int t, int hidden) {
    Tensor x({t, hidden});
    for (auto& v : x.data) v = static_cast<float>(rng.next_uniform(-1.0, 1.0));
    return x;
}

double mean_endpoint_error(const Track& pred, const GroundTruthTrack& gt) {
    double total = 0.0;
    for (size_t f = 0; f < gt.positions.size(); ++f)
        total += std::hypot(pred.positions[f].first - gt.positions[f].first,
                            pred.positions[f].second - gt.positions[f].second);
    return total / static_cast<double>(gt.positions.size());
}

}  // namespace

TEST_CASE("build_bias: T=1 gives a single zero per head") {
    const RefinerConfig cfg = RefinerConfig::for_variant(Variant::Base);
    const Tensor bias = build_bias(1, cfg, BiasTable::default_for_heads(cfg.heads));
    CHECK(bias.shape == std::vector<int>{6, 1, 1});
    for (float v : bias.data) CHECK(v == 0.0f);
}

TEST_CASE("build_bias: T=3 left head with slope 1 matches the closed form") {
    RefinerConfig cfg = RefinerConfig::for_variant(Variant::Small);
    BiasTable table;
    table.slopes = {1.0, 1.0, 1.0, 1.0};
    const Tensor bias = build_bias(3, cfg, table);
    // Left head 0: rows [[0,-inf,-inf],[-1,0,-inf],[-2,-1,0]].
    const float expect[3][3] = {{0, kNegInf, kNegInf}, {-1, 0, kNegInf}, {-2, -1, 0}};
    for (int t1 = 0; t1 < 3; ++t1)
        for (int t2 = 0; t2 < 3; ++t2) CHECK(bias(0, t1, t2) == expect[t1][t2]);
    // Right head 2 is the mirror.
    for (int t1 = 0; t1 < 3; ++t1)
        for (int t2 = 0; t2 < 3; ++t2) CHECK(bias(2, t1, t2) == expect[t2][t1]);
}

TEST_CASE("build_bias: finite part depends only on t1 - t2 (Toeplitz property)") {
    Rng rng(1);
    const RefinerConfig cfg = RefinerConfig::for_variant(Variant::Base);
    const Tensor bias = build_bias(24, cfg, BiasTable::default_for_heads(cfg.heads));
    for (int h = 0; h < cfg.heads; ++h)
        for (int rep = 0; rep < 50; ++rep) {
            const int t1 = static_cast<int>(rng.next_u64() % 23);
            const int t2 = static_cast<int>(rng.next_u64() % 23);
            const float a = bias(h, t1, t2);
            const float b = bias(h, t1 + 1, t2 + 1);
            if (std::isfinite(a)) CHECK(a == b);
        }
}

TEST_CASE("build_bias: slope schedule follows the geometric per-head rule") {
    const BiasTable table = BiasTable::default_for_heads(6);
    for (int j = 0; j < 3; ++j) {
        const double expect = std::exp2(-8.0 * (j + 1) / 3.0);
        CHECK(table.slopes[static_cast<size_t>(j)] == doctest::Approx(expect));
        CHECK(table.slopes[static_cast<size_t>(3 + j)] == doctest::Approx(expect));
        CHECK(table.slopes[static_cast<size_t>(j)] > 0.0);
    }
}

TEST_CASE("attention: left heads place zero weight on future keys") {
    Rng rng(2);
    const RefinerConfig cfg = RefinerConfig::for_variant(Variant::Small);
    const WeightsContainer w = init_weights(Variant::Small, 3);
    const int t = 6;
    const Tensor bias = build_bias(t, cfg, BiasTable::default_for_heads(cfg.heads));

    // Probe the masking through value isolation: make the value projection of
    // token t_future unique and verify left-head outputs never pick it up.
    // Direct check on the weights: recompute per-head attention rows.
    const Tensor x = random_tokens(rng, t, cfg.hidden);
    const Tensor q = nn::linear(x, w.get("refiner.block0.attn.wq"), w.get("refiner.block0.attn.bq"));
    const Tensor k = nn::linear(x, w.get("refiner.block0.attn.wk"), w.get("refiner.block0.attn.bk"));
    const int dh = cfg.hidden / cfg.heads;
    for (int h = 0; h < cfg.heads; ++h) {
        Tensor logits({t, t});
        for (int t1 = 0; t1 < t; ++t1)
            for (int t2 = 0; t2 < t; ++t2) {
                double dot = 0.0;
                for (int d = 0; d < dh; ++d)
                    dot += static_cast<double>(q(t1, h * dh + d)) * k(t2, h * dh + d);
                logits(t1, t2) = static_cast<float>(dot / std::sqrt(dh) + bias(h, t1, t2));
            }
        const Tensor attn = nn::softmax(logits, 1);
        for (int t1 = 0; t1 < t; ++t1)
            for (int t2 = 0; t2 < t; ++t2) {
                const bool forbidden = h < cfg.heads / 2 ? t2 > t1 : t2 < t1;
                if (forbidden) CHECK(attn(t1, t2) == 0.0f);
            }
    }
}

TEST_CASE("attention: T=1 reduces to the value/output projections") {
    const RefinerConfig cfg = RefinerConfig::for_variant(Variant::Small);
    const WeightsContainer w = init_weights(Variant::Small, 4);
    Rng rng(5);
    const Tensor x = random_tokens(rng, 1, cfg.hidden);
    const Tensor bias = build_bias(1, cfg, BiasTable::default_for_heads(cfg.heads));
    const Tensor out = attention(x, w, "refiner.block0.attn", cfg, bias);
    const Tensor v = nn::linear(x, w.get("refiner.block0.attn.wv"), w.get("refiner.block0.attn.bv"));
    const Tensor expect = nn::linear(v, w.get("refiner.block0.attn.wo"), w.get("refiner.block0.attn.bo"));
    for (size_t i = 0; i < out.data.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(expect.data[i]).epsilon(1e-5));
}

TEST_CASE("attention: uniform inputs with zero slopes attend uniformly over support") {
    RefinerConfig cfg = RefinerConfig::for_variant(Variant::Small);
    const WeightsContainer w = init_weights(Variant::Small, 6);
    const int t = 5;
    BiasTable table;
    table.slopes = {0.0, 0.0, 0.0, 0.0};
    // All tokens identical -> q.k^T constant per row; with zero slopes the
    // softmax is uniform over the unmasked (triangular) support. Check via
    // the closed form on the logits.
    Tensor bias({cfg.heads, t, t});
    const Tensor raw = build_bias(t, cfg, table);
    Tensor x({t, cfg.hidden});
    for (auto& v : x.data) v = 0.5f;
    const Tensor q = nn::linear(x, w.get("refiner.block0.attn.wq"), w.get("refiner.block0.attn.bq"));
    const Tensor k = nn::linear(x, w.get("refiner.block0.attn.wk"), w.get("refiner.block0.attn.bk"));
    const int dh = cfg.hidden / cfg.heads;
    for (int h = 0; h < cfg.heads; ++h) {
        Tensor logits({t, t});
        for (int t1 = 0; t1 < t; ++t1)
            for (int t2 = 0; t2 < t; ++t2) {
                double dot = 0.0;
                for (int d = 0; d < dh; ++d)
                    dot += static_cast<double>(q(t1, h * dh + d)) * k(t2, h * dh + d);
                logits(t1, t2) = static_cast<float>(dot / std::sqrt(dh) + raw(h, t1, t2));
            }
        const Tensor attn = nn::softmax(logits, 1);
        for (int t1 = 0; t1 < t; ++t1) {
            const int support = h < cfg.heads / 2 ? t1 + 1 : t - t1;
            for (int t2 = 0; t2 < t; ++t2) {
                const bool allowed = h < cfg.heads / 2 ? t2 <= t1 : t2 >= t1;
                if (allowed)
                    CHECK(attn(t1, t2) == doctest::Approx(1.0 / support).epsilon(1e-5));
            }
        }
    }
}

TEST_CASE("attention: shape mismatch rejected") {
    const RefinerConfig cfg = RefinerConfig::for_variant(Variant::Small);
    const WeightsContainer w = init_weights(Variant::Small, 7);
    Tensor x({4, 100});  // wrong hidden width
    const Tensor bias = build_bias(4, cfg, BiasTable::default_for_heads(cfg.heads));
    CHECK_THROWS_AS(attention(x, w, "refiner.block0.attn", cfg, bias), std::invalid_argument);
}

TEST_CASE("refine_step: boundary padding makes the backward delta sigma(0) at t=0") {
    const RefinerConfig cfg = RefinerConfig::for_variant(Variant::Base);
    const WeightsContainer w = init_weights(Variant::Base, 8);
    // Token construction is internal; probe it via the documented width and
    // the identity behavior of the zero output head.
    Track track;
    track.positions = {{10.0, 20.0}, {12.0, 20.0}, {14.0, 20.0}};
    OcclusionTrack occl;
    occl.logits = {0.1, 0.2, 0.3};
    CorrEmbedding emb;
    emb.vec = Tensor({3, corr_embedding_width(Variant::Base)});
    const RefineDelta d = refine_step(track, occl, emb, w, cfg);
    CHECK(d.d_pos.size() == 3);
    // Zero-initialized output head: residuals are exactly zero.
    for (const auto& p : d.d_pos) {
        CHECK(p.first == 0.0);
        CHECK(p.second == 0.0);
    }
    for (const double o : d.d_occl) CHECK(o == 0.0);
}

TEST_CASE("refine_step: token width for base is 853 before projection") {
    CHECK(2 * 2 * nn::kSinusoidChannels + 1 + corr_embedding_width(Variant::Base) == 853);
    const auto manifest = weights_manifest(Variant::Base);
    for (const auto& e : manifest)
        if (e.name == "refiner.input_proj.weight") CHECK(e.shape == std::vector<int>{853, 384});
}

TEST_CASE("refine_step: mismatched lengths rejected") {
    const RefinerConfig cfg = RefinerConfig::for_variant(Variant::Base);
    const WeightsContainer w = init_weights(Variant::Base, 9);
    Track track;
    track.positions = {{0, 0}, {1, 1}};
    OcclusionTrack occl;
    occl.logits = {0.0};
    CorrEmbedding emb;
    emb.vec = Tensor({2, corr_embedding_width(Variant::Base)});
    CHECK_THROWS_AS(refine_step(track, occl, emb, w, cfg), std::invalid_argument);
}

TEST_CASE("iterate: zero-initialized output head is a fixed point") {
    SynthSpec spec;
    spec.seed = 10;
    spec.t = 4;
    spec.h = 32;
    spec.w = 32;
    spec.speed = 1.0;
    spec.n_queries = 1;
    const SynthResult synth = synth_generate(spec);
    const FeaturePyramid pyr = patch_identity_pyramid(synth.video);
    const WeightsContainer w = init_weights(Variant::Small, 11);

    Track init;
    OcclusionTrack occl;
    for (int f = 0; f < spec.t; ++f) {
        init.positions.push_back(synth.tracks[0].positions[static_cast<size_t>(f)]);
        occl.logits.push_back(0.0);
    }
    const QueryPoint q{init.positions[0].first, init.positions[0].second, 0};
    RefinerConfig cfg = RefinerConfig::for_variant(Variant::Small);

    SUBCASE("K iterations leave the track unchanged with a zero head") {
        const IterateResult res = iterate(init, occl, pyr, q, w, cfg);
        CHECK(res.history.size() == 4);
        for (const auto& h : res.history)
            for (size_t f = 0; f < h.positions.size(); ++f) {
                CHECK(h.positions[f].first == init.positions[f].first);
                CHECK(h.positions[f].second == init.positions[f].second);
            }
    }

    SUBCASE("K=0 returns Stage I output unchanged with empty history") {
        cfg.iterations = 0;
        const IterateResult res = iterate(init, occl, pyr, q, w, cfg);
        CHECK(res.history.empty());
        CHECK(res.track.positions == init.positions);
    }
}

TEST_CASE("length generalization: one model runs T in {1, 8, 24} unchanged") {
    const WeightsContainer w = init_weights(Variant::Base, 12);
    const RefinerConfig cfg = RefinerConfig::for_variant(Variant::Base);
    for (int t : {1, 8, 24}) {
        Track track;
        OcclusionTrack occl;
        Rng rng(static_cast<uint64_t>(t));
        for (int f = 0; f < t; ++f) {
            track.positions.emplace_back(rng.next_uniform(0, 30), rng.next_uniform(0, 30));
            occl.logits.push_back(0.0);
        }
        CorrEmbedding emb;
        emb.vec = Tensor({t, corr_embedding_width(Variant::Base)});
        for (auto& v : emb.vec.data) v = static_cast<float>(rng.next_uniform(-1.0, 1.0));
        const RefineDelta d = refine_step(track, occl, emb, w, cfg);
        CHECK(static_cast<int>(d.d_pos.size()) == t);
        CHECK(static_cast<int>(d.d_occl.size()) == t);
    }
}

TEST_CASE("argmax_refine_step: near-zero delta at the true match") {
    SynthSpec spec;
    spec.seed = 13;
    spec.t = 6;
    spec.h = 64;
    spec.w = 64;
    spec.speed = 2.0;
    spec.n_queries = 2;
    const SynthResult synth = synth_generate(spec);
    const FeaturePyramid pyr = patch_identity_pyramid(synth.video);

    const auto& gt = synth.tracks[0];
    Track track;
    for (const auto& p : gt.positions) track.positions.push_back(p);
    const QueryPoint q{gt.positions[0].first, gt.positions[0].second, 0};
    const auto delta = argmax_refine_step(track, pyr, q, kSoftargmaxTau, kSoftargmaxSigma);
    // Neighboring random-texture cells keep nonzero correlation mass inside
    // the soft window, so the expectation carries a small sub-pixel residue
    // even when the argmax lands exactly on the true match.
    for (const auto& d : delta) {
        CHECK(std::abs(d.first) < 0.3);
        CHECK(std::abs(d.second) < 0.3);
    }
}

TEST_CASE("argmax_refine_step: reduces error from a 2 px perturbation") {
    SynthSpec spec;
    spec.seed = 14;
    spec.t = 6;
    spec.h = 64;
    spec.w = 64;
    spec.speed = 2.0;
    spec.n_queries = 2;
    const SynthResult synth = synth_generate(spec);
    const FeaturePyramid pyr = patch_identity_pyramid(synth.video);

    const auto& gt = synth.tracks[1];
    Track track;
    for (const auto& p : gt.positions) track.positions.emplace_back(p.first + 2.0, p.second);
    const QueryPoint q{gt.positions[0].first, gt.positions[0].second, 0};
    const double before = mean_endpoint_error(track, gt);
    const auto delta = argmax_refine_step(track, pyr, q, kSoftargmaxTau, kSoftargmaxSigma);
    for (size_t f = 0; f < track.positions.size(); ++f) {
        track.positions[f].first += delta[f].first;
        track.positions[f].second += delta[f].second;
    }
    CHECK(mean_endpoint_error(track, gt) < before);
}

TEST_CASE("argmax_refine_step: flat correlation on constant video gives ~zero delta") {
    Video v;
    v.frames = Tensor({3, 32, 32, 3});
    std::fill(v.frames.data.begin(), v.frames.data.end(), 0.5f);
    const FeaturePyramid pyr = patch_identity_pyramid(v);
    Track track;
    track.positions = {{16.0, 16.0}, {16.0, 16.0}, {16.0, 16.0}};
    const QueryPoint q{16.0, 16.0, 0};
    const auto delta = argmax_refine_step(track, pyr, q, kSoftargmaxTau, kSoftargmaxSigma);
    for (const auto& d : delta) {
        CHECK(std::abs(d.first) <= 1e-3);
        CHECK(std::abs(d.second) <= 1e-3);
    }
}
